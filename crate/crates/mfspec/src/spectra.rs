//! The pressure spectra attached to simultaneous Birkhoff ratio level sets:
//! the predicted (Legendre-type) spectrum, finite-level coarse spectra, the
//! conditional variational value over constrained Markov measures, suprema
//! over compact level collections, and the supporting feasibility geometry
//! (ratio domains, dichotomy, admissibility of the denominators).

use crate::cycles::{max_cycle_ratio, min_cycle_ratio, BlockGraph, RatioExtreme};
use crate::error::{Error, Result};
use crate::extreal::ExtendedReal;
use crate::linalg;
use crate::optim::{self, MinResult};
use crate::pressure::{combine, level_vector, pressure, pressure_gradient};
use crate::symbolic::{
    enumerate_words, lift_vector, xlogx, LocallyConstantPotential, MarkovMeasure, Sft,
    VectorPotential, Word, DEFAULT_MAX_WORDS,
};

/// Tolerance on zero tests for cycle means.
const MEAN_TOL: f64 = 1e-12;
/// Levels within this distance of the domain boundary are flagged.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Interior,
    Boundary,
    Outside,
    Undefined,
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PointStatus::Interior => "Interior",
            PointStatus::Boundary => "Boundary",
            PointStatus::Outside => "Outside",
            PointStatus::Undefined => "Undefined",
        };
        write!(f, "{s}")
    }
}

/// One evaluated spectrum point.
#[derive(Debug, Clone)]
pub struct SpectrumPoint {
    pub alpha: Vec<f64>,
    pub value: ExtendedReal,
    pub argmin_q: Option<Vec<f64>>,
    pub status: PointStatus,
    pub iterations: usize,
}

impl SpectrumPoint {
    pub(crate) fn outside(alpha: Vec<f64>) -> Self {
        SpectrumPoint {
            alpha,
            value: ExtendedReal::NegInfinity,
            argmin_q: None,
            status: PointStatus::Outside,
            iterations: 0,
        }
    }
}

/// Outcome of the admissibility check on the denominators: every psi_i must
/// have nonnegative cycle means, and cycles on which some psi_i averages to
/// zero must not let the matching phi_i average to zero as well.
#[derive(Debug, Clone)]
pub struct ConditionQReport {
    pub passed: bool,
    /// Violating cycle (one period) and the component it violates.
    pub witness: Option<(usize, Word)>,
}

pub fn check_condition_q(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
) -> Result<ConditionQReport> {
    if phi.dim() != psi.dim() {
        return Err(Error::InvalidInput(
            "numerator and denominator dimensions differ".into(),
        ));
    }
    let depth = phi.depth().max(psi.depth()).max(2);
    let graph = BlockGraph::new(sft, depth)?;
    for i in 0..phi.dim() {
        let wpsi = graph.weights(sft, psi.component(i))?;
        let mn = graph
            .min_cycle_mean(&wpsi, None)
            .expect("irreducible graph has cycles");
        if mn < -MEAN_TOL {
            let cycle = graph
                .min_mean_witness(&wpsi, None)
                .expect("witness for negative mean");
            return Ok(ConditionQReport {
                passed: false,
                witness: Some((i, Word(graph.cycle_word(&cycle)))),
            });
        }
        if mn.abs() <= MEAN_TOL {
            // Zero-mean cycles exist; the phi_i means over them must have one
            // strict sign (mixtures of zero-psi measures sweep the convex
            // hull of the cycle means).
            let critical = graph.critical_edges(&wpsi, 0.0, None);
            if critical.iter().any(|&c| c) {
                let wphi = graph.weights(sft, phi.component(i))?;
                let mnp = graph.min_cycle_mean(&wphi, Some(&critical));
                let mxp = graph.max_cycle_mean(&wphi, Some(&critical));
                if let (Some(mnp), Some(mxp)) = (mnp, mxp) {
                    if mnp <= MEAN_TOL && mxp >= -MEAN_TOL {
                        let lo_cycle = graph.min_mean_witness(&wphi, Some(&critical));
                        let hi_cycle = graph.max_mean_witness(&wphi, Some(&critical));
                        let witness = match (lo_cycle, hi_cycle) {
                            (Some(lo), Some(hi)) => {
                                let lo_mean = graph.cycle_sum(&lo, &wphi) / lo.len() as f64;
                                let hi_mean = graph.cycle_sum(&hi, &wphi) / hi.len() as f64;
                                if lo_mean.abs() <= hi_mean.abs() {
                                    lo
                                } else {
                                    hi
                                }
                            }
                            (Some(c), None) | (None, Some(c)) => c,
                            (None, None) => unreachable!("critical subgraph has a cycle"),
                        };
                        return Ok(ConditionQReport {
                            passed: false,
                            witness: Some((i, Word(graph.cycle_word(&witness)))),
                        });
                    }
                }
            }
        }
    }
    Ok(ConditionQReport {
        passed: true,
        witness: None,
    })
}

/// Closed set of ratio vectors of invariant measures.
///
/// For `d = 1` the set is an interval whose finite endpoints are attained on
/// cycles; a zero-denominator cycle with a nonzero numerator opens the
/// corresponding side to infinity. For `d >= 2` the boundary is sampled by a
/// direction grid; membership tests always go through the integral-vector
/// geometry (`dichotomy`), which stays exact componentwise.
#[derive(Debug, Clone)]
pub struct DomainDescription {
    pub dim: usize,
    /// `d = 1`: closed ratio interval; `None` when no cycle has a positive
    /// denominator sum.
    pub interval: Option<(ExtendedReal, ExtendedReal)>,
    /// `d >= 2`: ratio vectors of direction-extremal cycles.
    pub boundary_cloud: Vec<Vec<f64>>,
    pub contains_unbounded_direction: bool,
}

impl DomainDescription {
    /// Membership for `d = 1` (closed interval).
    pub fn contains_1d(&self, alpha: f64) -> bool {
        match &self.interval {
            None => false,
            Some((lo, hi)) => {
                let above = match lo {
                    ExtendedReal::NegInfinity => true,
                    ExtendedReal::Finite(l) => alpha >= *l - MEAN_TOL,
                    ExtendedReal::PosInfinity => false,
                };
                let below = match hi {
                    ExtendedReal::PosInfinity => true,
                    ExtendedReal::Finite(h) => alpha <= *h + MEAN_TOL,
                    ExtendedReal::NegInfinity => false,
                };
                above && below
            }
        }
    }

    /// Distance from an inside point to the boundary (`d = 1`).
    pub fn boundary_distance_1d(&self, alpha: f64) -> f64 {
        match &self.interval {
            None => 0.0,
            Some((lo, hi)) => {
                let dl = match lo {
                    ExtendedReal::Finite(l) => (alpha - l).abs(),
                    _ => f64::INFINITY,
                };
                let dh = match hi {
                    ExtendedReal::Finite(h) => (h - alpha).abs(),
                    _ => f64::INFINITY,
                };
                dl.min(dh)
            }
        }
    }
}

pub fn domain(sft: &Sft, phi: &VectorPotential, psi: &VectorPotential) -> Result<DomainDescription> {
    let q = check_condition_q(sft, phi, psi)?;
    if !q.passed {
        let (component, witness) = q.witness.unwrap();
        return Err(Error::ConditionQViolated {
            witness: witness.to_string(),
            component,
        });
    }
    let d = phi.dim();
    let depth = phi.depth().max(psi.depth()).max(2);
    let graph = BlockGraph::new(sft, depth)?;
    if d == 1 {
        let num = graph.weights(sft, phi.component(0))?;
        let den = graph.weights(sft, psi.component(0))?;
        let hi = max_cycle_ratio(&graph, &num, &den)?;
        let lo = min_cycle_ratio(&graph, &num, &den)?;
        let mut unbounded = false;
        let interval = match (lo, hi) {
            (RatioExtreme::Empty, _) | (_, RatioExtreme::Empty) => None,
            (lo, hi) => {
                let lo = match lo {
                    RatioExtreme::Finite { value, .. } => ExtendedReal::finite(value),
                    RatioExtreme::Unbounded { .. } => {
                        unbounded = true;
                        ExtendedReal::NegInfinity
                    }
                    RatioExtreme::Empty => unreachable!(),
                };
                let hi = match hi {
                    RatioExtreme::Finite { value, .. } => ExtendedReal::finite(value),
                    RatioExtreme::Unbounded { .. } => {
                        unbounded = true;
                        ExtendedReal::PosInfinity
                    }
                    RatioExtreme::Empty => unreachable!(),
                };
                Some((lo, hi))
            }
        };
        return Ok(DomainDescription {
            dim: 1,
            interval,
            boundary_cloud: Vec::new(),
            contains_unbounded_direction: unbounded,
        });
    }
    // d >= 2: sample extremal cycles over a direction grid and report their
    // componentwise cycle ratios.
    let dirs = direction_grid(d);
    let phi_weights: Vec<Vec<f64>> = (0..d)
        .map(|i| graph.weights(sft, phi.component(i)))
        .collect::<Result<_>>()?;
    let psi_weights: Vec<Vec<f64>> = (0..d)
        .map(|i| graph.weights(sft, psi.component(i)))
        .collect::<Result<_>>()?;
    let mut cloud = Vec::new();
    let mut unbounded = false;
    for theta in &dirs {
        let w: Vec<f64> = (0..graph.edges.len())
            .map(|e| (0..d).map(|i| theta[i] * phi_weights[i][e]).sum())
            .collect();
        if let Some(cycle) = graph.max_mean_witness(&w, None) {
            let mut ratio = Vec::with_capacity(d);
            let mut ok = true;
            for i in 0..d {
                let num = graph.cycle_sum(&cycle, &phi_weights[i]);
                let den = graph.cycle_sum(&cycle, &psi_weights[i]);
                if den.abs() <= MEAN_TOL {
                    ok = false;
                    unbounded = true;
                    break;
                }
                ratio.push(num / den);
            }
            if ok && !cloud.contains(&ratio) {
                cloud.push(ratio);
            }
        }
    }
    // Per-axis zero-denominator cycles also witness unbounded directions.
    for psi_w in &psi_weights {
        if let Some(mn) = graph.min_cycle_mean(psi_w, None) {
            if mn.abs() <= MEAN_TOL {
                unbounded = true;
            }
        }
    }
    Ok(DomainDescription {
        dim: d,
        interval: None,
        boundary_cloud: cloud,
        contains_unbounded_direction: unbounded,
    })
}

/// Deterministic unit direction grid used for support-function sampling.
pub(crate) fn direction_grid(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = 256;
            (0..n)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => {
            // lattice directions on {-2..2}^d, normalized and deduplicated
            let mut dirs: Vec<Vec<f64>> = Vec::new();
            let mut idx = vec![0i64; d];
            'outer: loop {
                let v: Vec<f64> = idx.iter().map(|&x| (x - 2) as f64).collect();
                let n = optim::norm(&v);
                if n > 0.0 {
                    let u: Vec<f64> = v.iter().map(|x| x / n).collect();
                    if !dirs
                        .iter()
                        .any(|e| e.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-12))
                    {
                        dirs.push(u);
                    }
                }
                for i in 0..d {
                    idx[i] += 1;
                    if idx[i] < 5 {
                        continue 'outer;
                    }
                    idx[i] = 0;
                }
                break;
            }
            dirs
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dichotomy {
    NonNegative,
    NegInfinity,
}

/// Decides whether the zero vector lies in the set of integrals
/// `{ int (Phi - alpha*Psi) dmu }`; exact via cycle means for `d = 1`,
/// support sampling for `d >= 2`.
pub fn dichotomy(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    alpha: &[f64],
) -> Result<Dichotomy> {
    let geo = analyze_level(sft, phi, psi, alpha)?;
    Ok(match geo.class {
        LevelClass::Outside => Dichotomy::NegInfinity,
        _ => Dichotomy::NonNegative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LevelClass {
    Interior,
    Boundary,
    Outside,
}

#[derive(Debug, Clone)]
pub(crate) struct LevelGeometry {
    pub class: LevelClass,
    /// In-radius of the integral set around zero (0 on the boundary).
    pub eps: f64,
    /// Largest symmetric radius along a sampled direction; positive for
    /// levels interior to a lower-dimensional integral set.
    pub eps_span: f64,
}

pub(crate) fn analyze_level(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    alpha: &[f64],
) -> Result<LevelGeometry> {
    let d = phi.dim();
    assert_eq!(alpha.len(), d);
    let depth = phi.depth().max(psi.depth()).max(2);
    let graph = BlockGraph::new(sft, depth)?;
    let xi = level_vector(sft, phi, psi, alpha)?;
    if d == 1 {
        let w = graph.weights(sft, xi.component(0))?;
        let mn = graph.min_cycle_mean(&w, None).expect("cycles exist");
        let mx = graph.max_cycle_mean(&w, None).expect("cycles exist");
        if mn > MEAN_TOL || mx < -MEAN_TOL {
            return Ok(LevelGeometry {
                class: LevelClass::Outside,
                eps: 0.0,
                eps_span: 0.0,
            });
        }
        let eps = (-mn).min(mx).max(0.0);
        // Boundary flag from the exact ratio interval.
        let dom = domain(sft, phi, psi)?;
        let dist = dom.boundary_distance_1d(alpha[0]);
        let class = if dist <= BOUNDARY_TOL {
            LevelClass::Boundary
        } else {
            LevelClass::Interior
        };
        return Ok(LevelGeometry {
            class,
            eps,
            eps_span: eps,
        });
    }
    // d >= 2: support function over the direction grid.
    let dirs = direction_grid(d);
    let weights: Vec<Vec<f64>> = (0..d)
        .map(|i| graph.weights(sft, xi.component(i)))
        .collect::<Result<_>>()?;
    let mut support = Vec::with_capacity(dirs.len());
    for theta in &dirs {
        let w: Vec<f64> = (0..graph.edges.len())
            .map(|e| (0..d).map(|i| theta[i] * weights[i][e]).sum())
            .collect();
        support.push(graph.max_cycle_mean(&w, None).expect("cycles exist"));
    }
    let eps = support.iter().cloned().fold(f64::INFINITY, f64::min);
    // Symmetric in-span radius: best min(h(theta), h(-theta)) over the grid.
    let mut eps_span = 0.0f64;
    for (k, theta) in dirs.iter().enumerate() {
        let anti = dirs
            .iter()
            .position(|t| t.iter().zip(theta).all(|(a, b)| (a + b).abs() < 1e-9));
        if let Some(j) = anti {
            if j > k {
                eps_span = eps_span.max(support[k].min(support[j]));
            }
        }
    }
    let scale = 1.0 + level_scale(sft, phi, psi, alpha);
    let tol = BOUNDARY_TOL * scale;
    let class = if eps < -tol {
        LevelClass::Outside
    } else if eps <= tol {
        LevelClass::Boundary
    } else {
        LevelClass::Interior
    };
    Ok(LevelGeometry {
        class,
        eps: eps.max(0.0),
        eps_span: eps_span.max(0.0),
    })
}

fn level_scale(sft: &Sft, phi: &VectorPotential, psi: &VectorPotential, alpha: &[f64]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..phi.dim() {
        s = s.max(phi.component(i).sup_norm(sft) + alpha[i].abs() * psi.component(i).sup_norm(sft));
    }
    s
}

/// The predicted spectrum `inf_q P(<q, Phi - alpha*Psi> + xi)`.
///
/// Outside the ratio domain the value is the `-inf` sentinel. Within the
/// boundary tolerance the infimum over the search ball is still returned but
/// the point is flagged `Boundary` and excluded from equality claims. For
/// interior levels the minimizer radius follows the uniform bound
/// `R = (P(xi) + ||xi||) / eps + 1` with `eps` the in-radius of the integral
/// set around zero.
pub fn predicted(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    xi: &LocallyConstantPotential,
    alpha: &[f64],
) -> Result<SpectrumPoint> {
    let geo = analyze_level(sft, phi, psi, alpha)?;
    if matches!(geo.class, LevelClass::Outside) {
        return Ok(SpectrumPoint::outside(alpha.to_vec()));
    }
    let d = phi.dim();
    let p_xi = pressure(sft, xi)?;
    let norm_xi = xi.sup_norm(sft);
    let eps_eff = match geo.class {
        LevelClass::Interior => geo.eps,
        _ => geo.eps.max(geo.eps_span).max(1e-6),
    };
    let xi_vec = level_vector(sft, phi, psi, alpha)?;
    let sup_xi_vec = (0..d)
        .map(|i| xi_vec.component(i).sup_norm(sft))
        .fold(0.0f64, f64::max);
    // Keep exp(q * Xi) inside the representable range.
    let safe = 690.0 / (1.0 + sup_xi_vec);
    let radius = (((p_xi + norm_xi) / eps_eff) + 1.0).min(safe).min(1e6);
    let result = minimize_level(sft, &xi_vec, xi, radius, d)?;
    let status = match geo.class {
        LevelClass::Interior => PointStatus::Interior,
        LevelClass::Boundary => PointStatus::Boundary,
        LevelClass::Outside => unreachable!(),
    };
    Ok(SpectrumPoint {
        alpha: alpha.to_vec(),
        value: ExtendedReal::finite(result.value),
        argmin_q: Some(result.x),
        status,
        iterations: result.iterations,
    })
}

fn minimize_level(
    sft: &Sft,
    xi_vec: &VectorPotential,
    xi: &LocallyConstantPotential,
    radius: f64,
    d: usize,
) -> Result<MinResult> {
    if d == 1 {
        optim::minimize_convex_1d(
            |q| {
                let pot = combine(sft, xi_vec, &[q], xi)?;
                pressure(sft, &pot)
            },
            |q| Ok(pressure_gradient(sft, xi_vec, xi, &[q])?[0]),
            radius,
            4000,
        )
    } else {
        optim::minimize_convex_ball(
            |q| {
                let pot = combine(sft, xi_vec, q, xi)?;
                pressure(sft, &pot)
            },
            |q| pressure_gradient(sft, xi_vec, xi, q),
            d,
            radius,
            20_000,
        )
    }
}

/// Exact finite-level coarse value
/// `(1/n) log sum { exp(S_n xi(w)) : A_n(w) in the open box around alpha }`,
/// `-inf` when no admissible word qualifies. Words with a zero denominator in
/// any component are excluded from membership.
pub fn coarse(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    xi: &LocallyConstantPotential,
    alpha: &[f64],
    gamma: f64,
    n: usize,
    cap: u64,
) -> Result<ExtendedReal> {
    assert!(n >= 1 && gamma > 0.0);
    let d = phi.dim();
    assert_eq!(alpha.len(), d);
    let depth = phi.depth().max(psi.depth()).max(xi.depth());
    let phi = lift_vector(sft, phi, depth)?;
    let psi = lift_vector(sft, psi, depth)?;
    let xi = xi.lift(sft, depth)?;
    let mut terms: Vec<f64> = Vec::new();
    crate::symbolic::visit_words(sft, n + depth - 1, cap, |w| {
        for i in 0..d {
            let num = phi.component(i).birkhoff_sum(w, n);
            let den = psi.component(i).birkhoff_sum(w, n);
            if den == 0.0 {
                return;
            }
            let r = num / den;
            if !(r > alpha[i] - gamma && r < alpha[i] + gamma) {
                return;
            }
        }
        terms.push(xi.birkhoff_sum(w, n).exp());
    })?;
    if terms.is_empty() {
        return Ok(ExtendedReal::NegInfinity);
    }
    Ok(ExtendedReal::finite(
        crate::pressure::sorted_log_sum(&mut terms) / n as f64,
    ))
}

/// Conditional variational value together with the maximizing measure.
#[derive(Debug, Clone)]
pub struct CvpOutcome {
    pub point: SpectrumPoint,
    pub measure: Option<MarkovMeasure>,
}

/// Maximizes `h_mu + int xi dmu` over order-`k` Markov measures subject to
/// `int (Phi - alpha*Psi) dmu = 0`, by projected gradient ascent on the
/// kernel rows with a quadratic penalty on the constraint; the penalty
/// weight doubles (with a running multiplier estimate) until the constraint
/// residual drops below 1e-8. This route never touches the transfer-matrix
/// pressure machinery.
pub fn conditional_variational(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    xi: &LocallyConstantPotential,
    alpha: &[f64],
    order: usize,
) -> Result<CvpOutcome> {
    let geo = analyze_level(sft, phi, psi, alpha)?;
    if matches!(geo.class, LevelClass::Outside) {
        return Ok(CvpOutcome {
            point: SpectrumPoint::outside(alpha.to_vec()),
            measure: None,
        });
    }
    let depth = phi.depth().max(psi.depth()).max(xi.depth());
    let order = order.max(depth.saturating_sub(1)).max(1);
    let problem = CvpProblem::new(sft, phi, psi, xi, alpha, order)?;
    let (value, measure, iterations) = problem.solve()?;
    let status = match geo.class {
        LevelClass::Interior => PointStatus::Interior,
        _ => PointStatus::Boundary,
    };
    Ok(CvpOutcome {
        point: SpectrumPoint {
            alpha: alpha.to_vec(),
            value: ExtendedReal::finite(value),
            argmin_q: None,
            status,
            iterations,
        },
        measure: Some(measure),
    })
}

struct CvpProblem {
    /// allowed[s][a]: appending symbol a to state s is admissible
    allowed: Vec<Vec<bool>>,
    /// succ[s][a]: resulting state index
    succ: Vec<Vec<usize>>,
    /// xi and constraint potentials evaluated on (state, appended symbol)
    xi_vals: Vec<Vec<f64>>,
    cons_vals: Vec<Vec<Vec<f64>>>,
    n_states: usize,
    m: usize,
    d: usize,
    order: usize,
    states: Vec<Word>,
}

impl CvpProblem {
    fn new(
        sft: &Sft,
        phi: &VectorPotential,
        psi: &VectorPotential,
        xi: &LocallyConstantPotential,
        alpha: &[f64],
        order: usize,
    ) -> Result<Self> {
        let d = phi.dim();
        let states = enumerate_words(sft, order, DEFAULT_MAX_WORDS)?;
        let index: std::collections::BTreeMap<&[u8], usize> = states
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols(), i))
            .collect();
        let m = sft.alphabet_size();
        let n_states = states.len();
        let xi_lift = xi.lift(sft, order + 1)?;
        let cons: Vec<LocallyConstantPotential> = (0..d)
            .map(|i| {
                LocallyConstantPotential::linear_combination(
                    sft,
                    &[(1.0, phi.component(i)), (-alpha[i], psi.component(i))],
                    0.0,
                )
                .and_then(|p| p.lift(sft, order + 1))
            })
            .collect::<Result<_>>()?;
        let mut allowed = vec![vec![false; m]; n_states];
        let mut succ = vec![vec![usize::MAX; m]; n_states];
        let mut xi_vals = vec![vec![0.0; m]; n_states];
        let mut cons_vals = vec![vec![vec![0.0; m]; n_states]; d];
        for (s, w) in states.iter().enumerate() {
            let last = *w.symbols().last().unwrap();
            for &a in sft.successors(last) {
                let mut ext = w.symbols().to_vec();
                ext.push(a);
                allowed[s][a as usize] = true;
                succ[s][a as usize] = index[&ext[1..]];
                xi_vals[s][a as usize] = xi_lift.value(&ext);
                for (i, c) in cons.iter().enumerate() {
                    cons_vals[i][s][a as usize] = c.value(&ext);
                }
            }
        }
        Ok(Self {
            allowed,
            succ,
            xi_vals,
            cons_vals,
            n_states,
            m,
            d,
            order,
            states,
        })
    }

    fn uniform_kernel(&self) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|s| {
                let count = self.allowed[s].iter().filter(|&&a| a).count() as f64;
                (0..self.m)
                    .map(|a| if self.allowed[s][a] { 1.0 / count } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Stationary distribution of a row-stochastic kernel.
    fn stationary(&self, kernel: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n_states;
        if n == 1 {
            return Ok(vec![1.0]);
        }
        // Solve (I - P^T) pi = 0 with the last equation replaced by sum = 1.
        let mut a = vec![vec![0.0; n]; n];
        for s in 0..n {
            for sym in 0..self.m {
                if self.allowed[s][sym] {
                    let t = self.succ[s][sym];
                    a[t][s] += kernel[s][sym];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                a[i][j] = if i == j { 1.0 - a[i][j] } else { -a[i][j] };
            }
        }
        for j in 0..n {
            a[n - 1][j] = 1.0;
        }
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let pi = linalg::solve(&a, &b)?;
        Ok(pi.iter().map(|&x| x.max(0.0)).collect())
    }

    /// Entropy, xi-integral, and constraint integrals at a kernel.
    fn stats(&self, kernel: &[Vec<f64>], pi: &[f64]) -> (f64, f64, Vec<f64>) {
        let mut h = 0.0;
        let mut ixi = 0.0;
        let mut c = vec![0.0; self.d];
        for s in 0..self.n_states {
            for a in 0..self.m {
                if self.allowed[s][a] && kernel[s][a] > 0.0 {
                    let w = pi[s] * kernel[s][a];
                    h -= pi[s] * xlogx(kernel[s][a]);
                    ixi += w * self.xi_vals[s][a];
                    for i in 0..self.d {
                        c[i] += w * self.cons_vals[i][s][a];
                    }
                }
            }
        }
        (h, ixi, c)
    }

    /// Gradient of `h + int xi + sum_i w_i c_i` in the kernel entries, via
    /// one fundamental-matrix solve for the stationary derivative.
    fn gradient(&self, kernel: &[Vec<f64>], pi: &[f64], weights: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n_states;
        // per-state reward r_s = H_s + Xi_s + sum_i w_i C_{i,s}
        let mut reward = vec![0.0; n];
        for s in 0..n {
            for a in 0..self.m {
                if self.allowed[s][a] && kernel[s][a] > 0.0 {
                    reward[s] -= xlogx(kernel[s][a]);
                    reward[s] += kernel[s][a] * self.xi_vals[s][a];
                    for i in 0..self.d {
                        reward[s] += weights[i] * kernel[s][a] * self.cons_vals[i][s][a];
                    }
                }
            }
        }
        // Solve (I - P + 1 pi^T) y = reward.
        let mut a = vec![vec![0.0; n]; n];
        for s in 0..n {
            for sym in 0..self.m {
                if self.allowed[s][sym] {
                    a[s][self.succ[s][sym]] += kernel[s][sym];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ident = if i == j { 1.0 } else { 0.0 };
                a[i][j] = ident - a[i][j] + pi[j];
            }
        }
        let y = linalg::solve(&a, &reward)?;
        let mut grad = vec![vec![0.0; self.m]; n];
        for s in 0..n {
            for sym in 0..self.m {
                if self.allowed[s][sym] {
                    let p = kernel[s][sym].max(1e-300);
                    let mut g = -(1.0 + p.ln()) + self.xi_vals[s][sym];
                    for i in 0..self.d {
                        g += weights[i] * self.cons_vals[i][s][sym];
                    }
                    g += y[self.succ[s][sym]];
                    grad[s][sym] = pi[s] * g;
                }
            }
        }
        Ok(grad)
    }

    fn objective(&self, kernel: &[Vec<f64>], lambda: &[f64], w_pen: f64) -> Result<(f64, Vec<f64>, f64)> {
        let pi = self.stationary(kernel)?;
        let (h, ixi, c) = self.stats(kernel, &pi);
        let mut val = h + ixi;
        for i in 0..self.d {
            val += lambda[i] * c[i] - w_pen * c[i] * c[i];
        }
        Ok((val, c, h + ixi))
    }

    fn project_rows(&self, kernel: &mut [Vec<f64>]) {
        for s in 0..self.n_states {
            let row = optim::project_simplex_masked(&kernel[s], &self.allowed[s]);
            kernel[s] = row;
            // keep every allowed entry positive so the chain stays irreducible
            let mut sum = 0.0;
            for a in 0..self.m {
                if self.allowed[s][a] {
                    kernel[s][a] = kernel[s][a].max(1e-12);
                    sum += kernel[s][a];
                }
            }
            for a in 0..self.m {
                if self.allowed[s][a] {
                    kernel[s][a] /= sum;
                }
            }
        }
    }

    fn solve(&self) -> Result<(f64, MarkovMeasure, usize)> {
        let mut kernel = self.uniform_kernel();
        let mut lambda = vec![0.0; self.d];
        let mut w_pen = 1.0f64;
        let mut iterations = 0usize;
        let mut prev_residual = f64::INFINITY;
        for _outer in 0..100 {
            let inner_tol = (1e-3 * prev_residual.min(1.0)).clamp(1e-9, 1e-5);
            let mut fx = self.objective(&kernel, &lambda, w_pen)?.0;
            let mut step = 0.1;
            for _inner in 0..4000 {
                iterations += 1;
                let pi = self.stationary(&kernel)?;
                let (_, c) = {
                    let (h, ixi, c) = self.stats(&kernel, &pi);
                    (h + ixi, c)
                };
                let w: Vec<f64> = (0..self.d)
                    .map(|i| lambda[i] - 2.0 * w_pen * c[i])
                    .collect();
                let grad = self.gradient(&kernel, &pi, &w)?;
                // projected-gradient stationarity at unit step
                let mut trial = kernel.clone();
                for s in 0..self.n_states {
                    for a in 0..self.m {
                        trial[s][a] += grad[s][a];
                    }
                }
                self.project_rows(&mut trial);
                let stat: f64 = kernel
                    .iter()
                    .flatten()
                    .zip(trial.iter().flatten())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if stat <= inner_tol {
                    break;
                }
                // Armijo ascent step
                let mut t = step;
                let mut accepted = false;
                for _ in 0..60 {
                    let mut cand = kernel.clone();
                    for s in 0..self.n_states {
                        for a in 0..self.m {
                            cand[s][a] += t * grad[s][a];
                        }
                    }
                    self.project_rows(&mut cand);
                    let incr: f64 = cand
                        .iter()
                        .flatten()
                        .zip(kernel.iter().flatten())
                        .zip(grad.iter().flatten())
                        .map(|((c, k), g)| g * (c - k))
                        .sum();
                    let fc = self.objective(&cand, &lambda, w_pen)?.0;
                    if fc >= fx + 1e-4 * incr.max(0.0) && incr > 0.0 {
                        kernel = cand;
                        fx = fc;
                        accepted = true;
                        step = (t * 2.0).min(10.0);
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let (_, c, plain) = self.objective(&kernel, &lambda, w_pen)?;
            let residual = c.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
            if residual <= 1e-8 {
                let measure = self.measure(&kernel)?;
                return Ok((plain, measure, iterations));
            }
            for i in 0..self.d {
                lambda[i] -= 2.0 * w_pen * c[i];
            }
            if residual > 0.25 * prev_residual {
                w_pen = (w_pen * 2.0).min(1e10);
            }
            prev_residual = residual;
        }
        Err(Error::Infeasible)
    }

    fn measure(&self, kernel: &[Vec<f64>]) -> Result<MarkovMeasure> {
        let pi = self.stationary(kernel)?;
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|x| x / total).collect();
        let sft = self.reconstruct_sft()?;
        MarkovMeasure::new(&sft, self.order, kernel.to_vec(), pi)
    }

    fn reconstruct_sft(&self) -> Result<Sft> {
        // Recover symbol transitions from the allowed extensions of states.
        let m = self.m;
        let mut trans = vec![vec![false; m]; m];
        for (s, w) in self.states.iter().enumerate() {
            let last = *w.symbols().last().unwrap() as usize;
            for a in 0..m {
                if self.allowed[s][a] {
                    trans[last][a] = true;
                }
            }
        }
        Sft::new(trans)
    }
}

/// Supremum of the predicted spectrum over a finite grid standing in for a
/// compact level collection. The status is `Outside` only when every grid
/// point is outside.
pub fn spectrum_over_set(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    xi: &LocallyConstantPotential,
    grid: &[Vec<f64>],
) -> Result<SpectrumPoint> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("level grid must be nonempty".into()));
    }
    let mut best: Option<SpectrumPoint> = None;
    let mut iterations = 0usize;
    let mut any_interior = false;
    let mut any_boundary = false;
    for alpha in grid {
        let pt = predicted(sft, phi, psi, xi, alpha)?;
        iterations += pt.iterations;
        match pt.status {
            PointStatus::Interior => any_interior = true,
            PointStatus::Boundary => any_boundary = true,
            _ => {}
        }
        best = Some(match best {
            None => pt,
            Some(b) => {
                if pt.value > b.value {
                    pt
                } else {
                    b
                }
            }
        });
    }
    let mut out = best.unwrap();
    out.iterations = iterations;
    out.status = if any_interior {
        PointStatus::Interior
    } else if any_boundary {
        PointStatus::Boundary
    } else {
        PointStatus::Outside
    };
    if matches!(out.status, PointStatus::Outside) {
        out.value = ExtendedReal::NegInfinity;
        out.argmin_q = None;
    }
    Ok(out)
}

/// Refinement over denominator levels: with `Phi~ = (Phi, Psi)` and
/// `Psi~ = 1`, returns the supremum over the gamma grid of the predicted
/// spectrum at the refined level `(alpha*gamma, gamma)`. Grid points whose
/// refined level misses the (possibly lower-dimensional) feasible set are
/// snapped to the nearest feasible level within one grid step; as the grid
/// refines, the supremum converges to the unrefined predicted value.
pub fn refine_gamma(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    xi: &LocallyConstantPotential,
    alpha: f64,
    gamma_grid: &[f64],
) -> Result<ExtendedReal> {
    if phi.dim() != 1 {
        return Err(Error::InvalidInput(
            "gamma refinement is implemented for one-dimensional levels".into(),
        ));
    }
    if gamma_grid.is_empty() {
        return Ok(ExtendedReal::NegInfinity);
    }
    let depth = phi.depth().max(psi.depth()).max(2);
    let graph = BlockGraph::new(sft, depth)?;
    let tilde_phi = VectorPotential::new(
        sft,
        vec![phi.component(0).clone(), psi.component(0).clone()],
    )?;
    let one = LocallyConstantPotential::constant(sft, 1.0);
    let tilde_psi = VectorPotential::new(sft, vec![one.clone(), one])?;
    // Support function of the integral-pair set {(int phi, int psi)}: the
    // level enters affinely, so feasibility violations are a fixed envelope.
    let dirs = direction_grid(2);
    let w_phi = graph.weights(sft, tilde_phi.component(0))?;
    let w_psi = graph.weights(sft, tilde_phi.component(1))?;
    let support: Vec<f64> = dirs
        .iter()
        .map(|theta| {
            let w: Vec<f64> = (0..graph.edges.len())
                .map(|e| theta[0] * w_phi[e] + theta[1] * w_psi[e])
                .collect();
            graph.max_cycle_mean(&w, None).expect("cycles exist")
        })
        .collect();
    let violation = |gamma: f64| -> f64 {
        let beta = [alpha * gamma, gamma];
        dirs.iter()
            .zip(&support)
            .map(|(theta, a)| theta[0] * beta[0] + theta[1] * beta[1] - a)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    };
    let mut step = f64::INFINITY;
    for pair in gamma_grid.windows(2) {
        step = step.min((pair[1] - pair[0]).abs());
    }
    if !step.is_finite() {
        step = 0.0;
    }
    let mut best = ExtendedReal::NegInfinity;
    for &gamma in gamma_grid {
        let mut target = gamma;
        if violation(gamma) > 1e-10 {
            if step == 0.0 {
                continue;
            }
            // Nearest feasible gamma within one grid step: the violation is
            // convex piecewise affine, so golden section localizes its zero.
            let r = optim::minimize_convex_1d(
                |t| Ok(violation(gamma + t)),
                |t| {
                    let h = 1e-7;
                    Ok((violation(gamma + t + h) - violation(gamma + t - h)) / (2.0 * h))
                },
                step,
                400,
            )?;
            if r.value > 1e-10 {
                continue;
            }
            target = gamma + r.x[0];
        }
        let beta = [alpha * target, target];
        let pt = predicted(sft, &tilde_phi, &tilde_psi, xi, &beta)?;
        best = best.max(pt.value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Sft {
        Sft::new(vec![vec![true, true], vec![true, false]]).unwrap()
    }

    fn indicator_pair(sft: &Sft) -> (VectorPotential, VectorPotential, LocallyConstantPotential) {
        let ind1 = LocallyConstantPotential::indicator(sft, &[1]).unwrap();
        let one = LocallyConstantPotential::constant(sft, 1.0);
        let zero = LocallyConstantPotential::constant(sft, 0.0);
        (
            VectorPotential::new(sft, vec![ind1]).unwrap(),
            VectorPotential::new(sft, vec![one]).unwrap(),
            zero,
        )
    }

    fn binary_entropy(a: f64) -> f64 {
        -(a * a.ln() + (1.0 - a) * (1.0 - a).ln())
    }

    #[test]
    fn condition_q_cases() {
        let full = Sft::full_shift(2);
        let (phi, psi, _) = indicator_pair(&full);
        assert!(check_condition_q(&full, &phi, &psi).unwrap().passed);

        // psi = (0, log 2), phi = 1: the only zero-psi cycle is the 0 fixed
        // point, where the phi mean is 1.
        let one = LocallyConstantPotential::constant(&full, 1.0);
        let psi_log = LocallyConstantPotential::from_symbols(&full, &[0.0, 2f64.ln()]).unwrap();
        let phi_v = VectorPotential::new(&full, vec![one.clone()]).unwrap();
        let psi_v = VectorPotential::new(&full, vec![psi_log]).unwrap();
        assert!(check_condition_q(&full, &phi_v, &psi_v).unwrap().passed);

        // negative denominator fails with the 0 fixed point as witness
        let bad_psi = LocallyConstantPotential::from_symbols(&full, &[-1.0, 1.0]).unwrap();
        let bad = VectorPotential::new(&full, vec![bad_psi]).unwrap();
        let report = check_condition_q(&full, &phi_v, &bad).unwrap();
        assert!(!report.passed);
        let (comp, witness) = report.witness.unwrap();
        assert_eq!(comp, 0);
        assert_eq!(witness.symbols(), &[0]);

        // zero-psi cycle with zero phi mean fails
        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        let phi_ind = VectorPotential::new(&full, vec![ind1]).unwrap();
        let psi_log = LocallyConstantPotential::from_symbols(&full, &[0.0, 2f64.ln()]).unwrap();
        let psi_v = VectorPotential::new(&full, vec![psi_log]).unwrap();
        let report = check_condition_q(&full, &phi_ind, &psi_v).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn domain_intervals() {
        let full = Sft::full_shift(2);
        let (phi, psi, _) = indicator_pair(&full);
        let dom = domain(&full, &phi, &psi).unwrap();
        let (lo, hi) = dom.interval.unwrap();
        assert_eq!(lo, ExtendedReal::finite(0.0));
        assert_eq!(hi, ExtendedReal::finite(1.0));
        assert!(!dom.contains_unbounded_direction);

        let g = golden();
        let (phi, psi, _) = indicator_pair(&g);
        let dom = domain(&g, &phi, &psi).unwrap();
        let (lo, hi) = dom.interval.unwrap();
        assert_eq!(lo, ExtendedReal::finite(0.0));
        assert!((hi.unwrap_finite() - 0.5).abs() < 1e-12);

        // phi = 1, psi = (0, log 2): right-unbounded interval
        let one = LocallyConstantPotential::constant(&full, 1.0);
        let psi_log = LocallyConstantPotential::from_symbols(&full, &[0.0, 2f64.ln()]).unwrap();
        let phi_v = VectorPotential::new(&full, vec![one]).unwrap();
        let psi_v = VectorPotential::new(&full, vec![psi_log]).unwrap();
        let dom = domain(&full, &phi_v, &psi_v).unwrap();
        let (lo, hi) = dom.interval.unwrap();
        assert!((lo.unwrap_finite() - 1.0 / 2f64.ln()).abs() < 1e-12);
        assert_eq!(hi, ExtendedReal::PosInfinity);
        assert!(dom.contains_unbounded_direction);
    }

    #[test]
    fn dichotomy_matches_domain() {
        let full = Sft::full_shift(2);
        let (phi, psi, _) = indicator_pair(&full);
        assert_eq!(
            dichotomy(&full, &phi, &psi, &[0.5]).unwrap(),
            Dichotomy::NonNegative
        );
        assert_eq!(
            dichotomy(&full, &phi, &psi, &[2.0]).unwrap(),
            Dichotomy::NegInfinity
        );
        // boundary level is attained by the 1 fixed point
        assert_eq!(
            dichotomy(&full, &phi, &psi, &[1.0]).unwrap(),
            Dichotomy::NonNegative
        );
    }

    #[test]
    fn predicted_recovers_binary_entropy() {
        let full = Sft::full_shift(2);
        let (phi, psi, zero) = indicator_pair(&full);
        let pt = predicted(&full, &phi, &psi, &zero, &[0.5]).unwrap();
        assert_eq!(pt.status, PointStatus::Interior);
        assert!((pt.value.unwrap_finite() - 2f64.ln()).abs() < 1e-10);

        let pt = predicted(&full, &phi, &psi, &zero, &[0.25]).unwrap();
        assert!((pt.value.unwrap_finite() - binary_entropy(0.25)).abs() < 1e-9);
        let q = pt.argmin_q.unwrap()[0];
        assert!((q - (0.25f64 / 0.75).ln()).abs() < 1e-6);

        let pt = predicted(&full, &phi, &psi, &zero, &[1.2]).unwrap();
        assert_eq!(pt.value, ExtendedReal::NegInfinity);
        assert_eq!(pt.status, PointStatus::Outside);
    }

    #[test]
    fn coarse_binomial_counts() {
        let full = Sft::full_shift(2);
        let (phi, psi, zero) = indicator_pair(&full);
        let v = coarse(&full, &phi, &psi, &zero, &[0.5], 0.1, 10, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(v.unwrap_finite(), 252f64.ln() / 10.0);

        let v = coarse(&full, &phi, &psi, &zero, &[0.5], 2.0, 8, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(v.unwrap_finite(), 256f64.ln() / 8.0);

        let v = coarse(&full, &phi, &psi, &zero, &[2.0], 0.1, 8, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(v, ExtendedReal::NegInfinity);
    }

    #[test]
    fn cvp_matches_predicted_on_the_full_shift() {
        let full = Sft::full_shift(2);
        let (phi, psi, zero) = indicator_pair(&full);
        let out = conditional_variational(&full, &phi, &psi, &zero, &[0.25], 1).unwrap();
        assert!(
            (out.point.value.unwrap_finite() - binary_entropy(0.25)).abs() < 1e-5,
            "cvp {} vs {}",
            out.point.value,
            binary_entropy(0.25)
        );
        let mu = out.measure.unwrap();
        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        assert!((mu.integral(&full, &ind1) - 0.25).abs() < 1e-7);

        let out = conditional_variational(&full, &phi, &psi, &zero, &[0.5], 1).unwrap();
        assert!((out.point.value.unwrap_finite() - 2f64.ln()).abs() < 1e-6);

        let out = conditional_variational(&full, &phi, &psi, &zero, &[2.0], 1).unwrap();
        assert_eq!(out.point.value, ExtendedReal::NegInfinity);
    }

    #[test]
    fn set_supremum_is_max_of_pointwise() {
        let full = Sft::full_shift(2);
        let (phi, psi, zero) = indicator_pair(&full);
        let sup = spectrum_over_set(&full, &phi, &psi, &zero, &[vec![0.25], vec![0.5]]).unwrap();
        let p25 = predicted(&full, &phi, &psi, &zero, &[0.25]).unwrap();
        let p50 = predicted(&full, &phi, &psi, &zero, &[0.5]).unwrap();
        assert_eq!(sup.value, p25.value.max(p50.value));

        let sup = spectrum_over_set(&full, &phi, &psi, &zero, &[vec![0.25]]).unwrap();
        assert_eq!(sup.value, p25.value);

        let sup = spectrum_over_set(&full, &phi, &psi, &zero, &[vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(sup.value, ExtendedReal::NegInfinity);
        assert_eq!(sup.status, PointStatus::Outside);
    }

    #[test]
    fn refine_gamma_with_constant_denominator() {
        // psi = 1: the only feasible gamma is 1, and the refinement equals
        // the plain predicted value.
        let full = Sft::full_shift(2);
        let (phi, psi, zero) = indicator_pair(&full);
        let refined = refine_gamma(
            &full,
            &phi,
            &psi,
            &zero,
            0.25,
            &[0.98, 0.99, 1.0, 1.01, 1.02],
        )
        .unwrap();
        let direct = predicted(&full, &phi, &psi, &zero, &[0.25]).unwrap();
        assert!(
            refined.abs_diff(direct.value).unwrap_finite() < 1e-6,
            "refined {refined} direct {}",
            direct.value
        );
        let empty = refine_gamma(&full, &phi, &psi, &zero, 0.25, &[]).unwrap();
        assert_eq!(empty, ExtendedReal::NegInfinity);
    }
}
