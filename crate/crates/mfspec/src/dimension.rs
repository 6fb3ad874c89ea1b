//! Dimension theory on piecewise-linear Markov models: weight-function
//! dimension via Bowen's equation and the named spectra built from it
//! (entropy of Birkhoff level sets, Lyapunov exponents, Birkhoff-average
//! dimensions, pointwise dimensions of weak Gibbs measures, local entropies),
//! including the non-uniformly expanding single-indifferent-fixed-point case.

use crate::cycles::BlockGraph;
use crate::error::{Error, Result};
use crate::extreal::ExtendedReal;
use crate::optim;
use crate::pressure::{level_potential, level_vector, pressure};
use crate::spectra::{analyze_level, predicted, LevelClass, PointStatus, SpectrumPoint};
use crate::symbolic::{LocallyConstantPotential, Sft, VectorPotential};

const MEAN_TOL: f64 = 1e-12;
/// Bisection tolerance on Bowen-equation roots.
const ROOT_TOL: f64 = 1e-13;

/// Markov interval map with constant slopes on each branch.
///
/// Slopes are at least 1, and at most one branch may have slope exactly 1;
/// that branch must map its interval over itself (a self-transition), which
/// realizes an indifferent fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearMap {
    branch_slopes: Vec<f64>,
    markov_transitions: Vec<Vec<bool>>,
}

impl PiecewiseLinearMap {
    pub fn new(branch_slopes: Vec<f64>, markov_transitions: Vec<Vec<bool>>) -> Result<Self> {
        if branch_slopes.is_empty() || branch_slopes.len() != markov_transitions.len() {
            return Err(Error::InvalidInput(
                "need one slope per branch of the transition matrix".into(),
            ));
        }
        let mut indifferent = 0usize;
        for (i, &s) in branch_slopes.iter().enumerate() {
            if !(s >= 1.0 - 1e-12) || !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "branch slope {s} must be >= 1"
                )));
            }
            if (s - 1.0).abs() <= 1e-12 {
                indifferent += 1;
                if !markov_transitions[i][i] {
                    return Err(Error::InvalidInput(
                        "the slope-1 branch must fix its own interval".into(),
                    ));
                }
            }
        }
        if indifferent > 1 {
            return Err(Error::InvalidInput(
                "at most one branch may have slope 1".into(),
            ));
        }
        Ok(Self {
            branch_slopes,
            markov_transitions,
        })
    }

    /// Full-branch map: every branch maps onto the whole interval.
    pub fn full_branches(slopes: Vec<f64>) -> Result<Self> {
        let m = slopes.len();
        Self::new(slopes, vec![vec![true; m]; m])
    }

    pub fn branch_count(&self) -> usize {
        self.branch_slopes.len()
    }

    pub fn slopes(&self) -> &[f64] {
        &self.branch_slopes
    }

    /// Index of the indifferent branch when present.
    pub fn indifferent_branch(&self) -> Option<usize> {
        self.branch_slopes
            .iter()
            .position(|&s| (s - 1.0).abs() <= 1e-12)
    }
}

/// Symbolic coding of the map: the transition SFT and the depth-1 geometric
/// weight `u([i]) = log(slope_i)`, exact per branch.
pub fn code_as_sft(map: &PiecewiseLinearMap) -> Result<(Sft, LocallyConstantPotential)> {
    let sft = Sft::new(map.markov_transitions.clone()).map_err(|e| match e {
        Error::NotIrreducible { .. } | Error::EmptyRow { .. } | Error::EmptyColumn { .. } => {
            Error::NotMarkov
        }
        other => other,
    })?;
    let u_vals: Vec<f64> = map.branch_slopes.iter().map(|s| s.ln()).collect();
    let u = LocallyConstantPotential::from_symbols(&sft, &u_vals)?;
    Ok((sft, u))
}

/// Cover condition on the weight function: `u >= 0` everywhere and every
/// zero-sum cycle is a single self-loop (isolated indifferent fixed points),
/// with at least one strictly expanding cycle present.
pub fn check_condition_p(sft: &Sft, u: &LocallyConstantPotential) -> Result<bool> {
    let (lo, _) = u.value_range(sft);
    if lo < -MEAN_TOL {
        return Ok(false);
    }
    let depth = u.depth().max(2);
    let graph = BlockGraph::new(sft, depth)?;
    let w = graph.weights(sft, u)?;
    let mn = graph.min_cycle_mean(&w, None).expect("cycles exist");
    if mn < -MEAN_TOL {
        return Ok(false);
    }
    if mn > MEAN_TOL {
        return Ok(true); // uniformly expanding
    }
    let critical = graph.critical_edges(&w, 0.0, None);
    // every critical edge must be a self-loop
    for (e, &(from, to, _)) in graph.edges.iter().enumerate() {
        if critical[e] && from != to {
            return Ok(false);
        }
    }
    // some cycle must be strictly expanding; a weight vanishing on every
    // cycle never satisfies the cover condition
    let mx = graph.max_cycle_mean(&w, None).expect("cycles exist");
    if mx <= MEAN_TOL {
        return Ok(false);
    }
    Ok(true)
}

/// Supremum of `h + int eta` over invariant measures with zero `u`-integral.
/// Under the cover condition these measures sit on indifferent self-loops,
/// so the supremum is the best loop value of `eta` (entropy zero), `-inf`
/// when no such loop exists.
fn zero_u_limit(
    sft: &Sft,
    eta: &LocallyConstantPotential,
    u: &LocallyConstantPotential,
) -> Result<ExtendedReal> {
    let depth = eta.depth().max(u.depth()).max(2);
    let graph = BlockGraph::new(sft, depth)?;
    let wu = graph.weights(sft, u)?;
    let mn = graph.min_cycle_mean(&wu, None).expect("cycles exist");
    if mn.abs() > MEAN_TOL {
        return Ok(ExtendedReal::NegInfinity);
    }
    let critical = graph.critical_edges(&wu, 0.0, None);
    let weta = graph.weights(sft, eta)?;
    match graph.max_cycle_mean(&weta, Some(&critical)) {
        Some(mx) => Ok(ExtendedReal::finite(mx)),
        None => Ok(ExtendedReal::NegInfinity),
    }
}

/// Root of Bowen's equation: `inf { t : P(eta - t u) <= 0 }`.
///
/// The map `t -> P(eta - t u)` is nonincreasing (`u >= 0`) and converges to
/// the zero-`u` supremum of `h + int eta`; when that limit is nonnegative the
/// pressure stays positive for every `t` and the root is `+inf`. Otherwise
/// the root is found by geometric bracket growth and bisection.
pub fn bowen_root(
    sft: &Sft,
    eta: &LocallyConstantPotential,
    u: &LocallyConstantPotential,
) -> Result<ExtendedReal> {
    match zero_u_limit(sft, eta, u)? {
        ExtendedReal::Finite(limit) if limit >= -MEAN_TOL => {
            return Ok(ExtendedReal::PosInfinity)
        }
        ExtendedReal::PosInfinity => return Ok(ExtendedReal::PosInfinity),
        _ => {}
    }
    let root = optim::bisect_nonincreasing(
        |t| {
            let pot =
                LocallyConstantPotential::linear_combination(sft, &[(1.0, eta), (-t, u)], 0.0)?;
            pressure(sft, &pot)
        },
        ROOT_TOL,
        64,
    )?;
    Ok(ExtendedReal::finite(root))
}

/// `T_u(q)`: the Bowen root of `<q, Phi - alpha*Psi> - t u`.
pub fn t_u_of_q(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    u: &LocallyConstantPotential,
    alpha: &[f64],
    q: &[f64],
) -> Result<ExtendedReal> {
    let eta = level_potential(
        sft,
        phi,
        psi,
        alpha,
        q,
        &LocallyConstantPotential::constant(sft, 0.0),
    )?;
    bowen_root(sft, &eta, u)
}

/// Dimension of the simultaneous ratio level set with respect to the weight
/// `u`: the infimum over `q` of `T_u(q)` (convex, possibly `+inf` on part of
/// its domain), minimized over the uniform-bound ball.
pub fn u_dimension_spectrum(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    u: &LocallyConstantPotential,
    alpha: &[f64],
) -> Result<SpectrumPoint> {
    let geo = analyze_level(sft, phi, psi, alpha)?;
    if matches!(geo.class, LevelClass::Outside) {
        return Ok(SpectrumPoint::outside(alpha.to_vec()));
    }
    if phi.dim() != 1 {
        return Err(Error::InvalidInput(
            "dimension spectra are implemented for one-dimensional levels".into(),
        ));
    }
    let eps = match geo.class {
        LevelClass::Interior => geo.eps,
        _ => geo.eps.max(geo.eps_span).max(1e-6),
    };
    // Probe for a finite root to size the search radius; T_u can be +inf on
    // a half line (indifferent models), so probe both signs geometrically.
    let mut probe_value = f64::INFINITY;
    'probe: for mag in [0.5f64, 1.0, 2.0, 4.0, 8.0] {
        for sign in [1.0f64, -1.0] {
            if let ExtendedReal::Finite(v) = t_u_of_q(sft, phi, psi, u, alpha, &[sign * mag])? {
                probe_value = v;
                break 'probe;
            }
        }
    }
    let htop = pressure(sft, &LocallyConstantPotential::constant(sft, 0.0))?;
    let u_norm = u.sup_norm(sft);
    let t_scale = if probe_value.is_finite() {
        probe_value.abs()
    } else {
        1.0
    };
    let radius = ((htop + t_scale * u_norm + 1.0) / eps + 1.0).min(1e4);
    let result = optim::minimize_convex_1d(
        |q| {
            Ok(match t_u_of_q(sft, phi, psi, u, alpha, &[q])? {
                ExtendedReal::Finite(v) => v,
                ExtendedReal::PosInfinity => f64::INFINITY,
                ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            })
        },
        |q| {
            // implicit derivative dT/dq = int(Phi - alpha*Psi) / int(u) at the
            // equilibrium state of <q,.> - T u; infinite regions push inward
            match t_u_of_q(sft, phi, psi, u, alpha, &[q])? {
                ExtendedReal::Finite(t) => {
                    let xi_vec = level_vector(sft, phi, psi, alpha)?;
                    let shifted =
                        LocallyConstantPotential::linear_combination(sft, &[(-t, u)], 0.0)?;
                    let pot = level_potential(sft, phi, psi, alpha, &[q], &shifted)?;
                    let mu = crate::pressure::equilibrium_markov(sft, &pot)?;
                    let num = mu.integral(sft, xi_vec.component(0));
                    let den = mu.integral(sft, u);
                    Ok(num / den)
                }
                ExtendedReal::PosInfinity => Ok(if q >= 0.0 { 1e9 } else { -1e9 }),
                ExtendedReal::NegInfinity => Ok(0.0),
            }
        },
        radius,
        4000,
    )?;
    let status = match geo.class {
        LevelClass::Interior => PointStatus::Interior,
        _ => PointStatus::Boundary,
    };
    Ok(SpectrumPoint {
        alpha: alpha.to_vec(),
        value: if result.value.is_finite() {
            ExtendedReal::finite(result.value)
        } else {
            ExtendedReal::PosInfinity
        },
        argmin_q: Some(result.x),
        status,
        iterations: result.iterations,
    })
}

/// Entropy of Birkhoff level sets: `inf_q (P(q phi) - q alpha)`, the
/// predicted spectrum with constant denominators.
pub fn entropy_birkhoff_spectrum(
    sft: &Sft,
    phi: &LocallyConstantPotential,
    alpha: f64,
) -> Result<SpectrumPoint> {
    let phi_v = VectorPotential::new(sft, vec![phi.clone()])?;
    let psi_v = VectorPotential::new(sft, vec![LocallyConstantPotential::constant(sft, 1.0)])?;
    let zero = LocallyConstantPotential::constant(sft, 0.0);
    predicted(sft, &phi_v, &psi_v, &zero, &[alpha])
}

/// Dimension of Lyapunov level sets of a piecewise-linear model:
/// `(1/alpha) inf_q (P(q log|Df|) - q alpha)`. The indifferent endpoint
/// `alpha = 0` is rejected as a boundary level.
pub fn lyapunov_spectrum(map: &PiecewiseLinearMap, alpha: f64) -> Result<SpectrumPoint> {
    let (sft, u) = code_as_sft(map)?;
    if alpha.abs() <= crate::spectra::BOUNDARY_TOL {
        return Err(Error::BoundaryUnresolved { alpha: vec![alpha] });
    }
    let mut pt = entropy_birkhoff_spectrum(&sft, &u, alpha)?;
    if let ExtendedReal::Finite(v) = pt.value {
        pt.value = ExtendedReal::finite(v / alpha);
    }
    Ok(pt)
}

/// Dimension of Birkhoff-average level sets: `inf_q T_alpha(q)` where
/// `T_alpha(q)` solves `P(q(phi - alpha) - t log|Df|) <= 0`. On indifferent
/// maps the level `alpha = phi(p)` is excluded.
pub fn birkhoff_dimension_spectrum(
    map: &PiecewiseLinearMap,
    phi: &LocallyConstantPotential,
    alpha: f64,
) -> Result<SpectrumPoint> {
    let (sft, u) = code_as_sft(map)?;
    if let Some(p) = map.indifferent_branch() {
        let word = vec![p as u8; phi.depth()];
        let phi_p = phi.value(&word);
        if (alpha - phi_p).abs() <= crate::spectra::BOUNDARY_TOL {
            return Err(Error::ExcludedAlpha { alpha });
        }
    }
    let phi_v = VectorPotential::new(&sft, vec![phi.clone()])?;
    let psi_v = VectorPotential::new(&sft, vec![LocallyConstantPotential::constant(&sft, 1.0)])?;
    u_dimension_spectrum(&sft, &phi_v, &psi_v, &u, &[alpha])
}

/// Dimension of pointwise-dimension level sets of a weak Gibbs measure with
/// potential `phi0` normalized to zero pressure: with `phi = -phi0`,
/// `inf_q (T(q) - q alpha)` where `T(q)` is the Bowen root of
/// `q phi - t log|Df|`.
pub fn pointwise_dimension_spectrum(
    map: &PiecewiseLinearMap,
    phi0: &LocallyConstantPotential,
    alpha: f64,
) -> Result<SpectrumPoint> {
    let (sft, u) = code_as_sft(map)?;
    let p0 = pressure(&sft, phi0)?;
    let phi0 = if p0.abs() <= 1e-9 {
        phi0.clone()
    } else {
        LocallyConstantPotential::linear_combination(&sft, &[(1.0, phi0)], -p0)?
    };
    let phi = LocallyConstantPotential::linear_combination(&sft, &[(-1.0, &phi0)], 0.0)?;
    let phi_v = VectorPotential::new(&sft, vec![phi])?;
    let psi_v = VectorPotential::new(&sft, vec![u.clone()])?;
    u_dimension_spectrum(&sft, &phi_v, &psi_v, &u, &[alpha])
}

/// Entropy of simultaneous local-entropy level sets of weak Gibbs measures
/// with zero-pressure potentials: `inf_q (P(<q, Phi>) + <q, alpha>)`, the
/// predicted spectrum at level `-alpha` with constant denominators.
pub fn local_entropy_spectrum(
    sft: &Sft,
    phi: &VectorPotential,
    alpha: &[f64],
) -> Result<SpectrumPoint> {
    for i in 0..phi.dim() {
        let p = pressure(sft, phi.component(i))?;
        if p.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "component {i} must have zero pressure (has {p})"
            )));
        }
    }
    let one = LocallyConstantPotential::constant(sft, 1.0);
    let psi = VectorPotential::new(sft, vec![one; phi.dim()])?;
    let zero = LocallyConstantPotential::constant(sft, 0.0);
    let level: Vec<f64> = alpha.iter().map(|a| -a).collect();
    let mut pt = predicted(sft, phi, &psi, &zero, &level)?;
    pt.alpha = alpha.to_vec();
    Ok(pt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coding_and_validation() {
        let map = PiecewiseLinearMap::full_branches(vec![2.0, 3.0]).unwrap();
        let (sft, u) = code_as_sft(&map).unwrap();
        assert_eq!(sft.alphabet_size(), 2);
        assert_eq!(u.value(&[0]), 2f64.ln());
        assert_eq!(u.value(&[1]), 3f64.ln());

        let map = PiecewiseLinearMap::full_branches(vec![1.0, 2.0]).unwrap();
        let (_, u) = code_as_sft(&map).unwrap();
        assert_eq!(u.value(&[0]), 0.0);

        let err = PiecewiseLinearMap::new(
            vec![2.0, 2.0],
            vec![vec![true, false], vec![false, true]],
        )
        .map(|m| code_as_sft(&m))
        .unwrap()
        .unwrap_err();
        assert!(matches!(err, Error::NotMarkov));

        // the slope-1 branch must carry a self-transition
        let err =
            PiecewiseLinearMap::new(vec![1.0, 2.0], vec![vec![false, true], vec![true, true]])
                .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn cover_condition_cases() {
        let (sft, u) =
            code_as_sft(&PiecewiseLinearMap::full_branches(vec![2.0, 3.0]).unwrap()).unwrap();
        assert!(check_condition_p(&sft, &u).unwrap());

        let (sft, u) =
            code_as_sft(&PiecewiseLinearMap::full_branches(vec![1.0, 2.0]).unwrap()).unwrap();
        assert!(check_condition_p(&sft, &u).unwrap());

        let full = Sft::full_shift(2);
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        assert!(!check_condition_p(&full, &zero).unwrap());

        let negative = LocallyConstantPotential::from_symbols(&full, &[-0.1, 1.0]).unwrap();
        assert!(!check_condition_p(&full, &negative).unwrap());
    }

    #[test]
    fn bowen_roots() {
        let full = Sft::full_shift(2);
        let log2 = LocallyConstantPotential::constant(&full, 2f64.ln());
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        let r = bowen_root(&full, &zero, &log2).unwrap();
        assert!((r.unwrap_finite() - 1.0).abs() < 1e-12);

        let u23 = LocallyConstantPotential::from_symbols(&full, &[2f64.ln(), 3f64.ln()]).unwrap();
        let r = bowen_root(&full, &zero, &u23).unwrap();
        assert!((r.unwrap_finite() - 0.7878849110258697).abs() < 1e-10);

        // indifferent: P(-t u) = log(1 + 2^-t) > 0 for all t
        let u12 = LocallyConstantPotential::from_symbols(&full, &[0.0, 2f64.ln()]).unwrap();
        let r = bowen_root(&full, &zero, &u12).unwrap();
        assert_eq!(r, ExtendedReal::PosInfinity);

        // negative roots are allowed
        let eta = LocallyConstantPotential::constant(&full, -2.0);
        let r = bowen_root(&full, &eta, &log2).unwrap();
        assert!(r.unwrap_finite() < 0.0);
    }

    #[test]
    fn lyapunov_closed_point() {
        let map = PiecewiseLinearMap::full_branches(vec![2.0, 3.0]).unwrap();
        let alpha = (2f64.ln() + 3f64.ln()) / 2.0;
        let pt = lyapunov_spectrum(&map, alpha).unwrap();
        assert!((pt.value.unwrap_finite() - 2f64.ln() / alpha).abs() < 1e-9);

        let map2 = PiecewiseLinearMap::full_branches(vec![2.0, 2.0]).unwrap();
        let pt = lyapunov_spectrum(&map2, 2f64.ln()).unwrap();
        // constant Lyapunov exponent: the level set is everything and the
        // ratio interval degenerates, flagged Boundary, full dimension
        assert!((pt.value.unwrap_finite() - 1.0).abs() < 1e-9);

        let pt = lyapunov_spectrum(&map, 0.5).unwrap();
        assert_eq!(pt.value, ExtendedReal::NegInfinity);
    }

    #[test]
    fn u_dimension_matches_lyapunov_route() {
        let map = PiecewiseLinearMap::full_branches(vec![2.0, 3.0]).unwrap();
        let (sft, u) = code_as_sft(&map).unwrap();
        let phi = VectorPotential::new(&sft, vec![u.clone()]).unwrap();
        let psi = VectorPotential::new(&sft, vec![LocallyConstantPotential::constant(&sft, 1.0)])
            .unwrap();
        for k in 1..=5 {
            let alpha = 2f64.ln() + k as f64 / 6.0 * (3f64.ln() - 2f64.ln());
            let via_t = u_dimension_spectrum(&sft, &phi, &psi, &u, &[alpha]).unwrap();
            let via_legendre = lyapunov_spectrum(&map, alpha).unwrap();
            let diff = via_t.value.abs_diff(via_legendre.value);
            assert!(
                diff.unwrap_finite() < 1e-8,
                "alpha {alpha}: {} vs {}",
                via_t.value,
                via_legendre.value
            );
        }
    }

    #[test]
    fn birkhoff_dimension_on_doubling_map() {
        let map = PiecewiseLinearMap::full_branches(vec![2.0, 2.0]).unwrap();
        let (sft, _) = code_as_sft(&map).unwrap();
        let ind1 = LocallyConstantPotential::indicator(&sft, &[1]).unwrap();
        let pt = birkhoff_dimension_spectrum(&map, &ind1, 0.5).unwrap();
        assert!((pt.value.unwrap_finite() - 1.0).abs() < 1e-8);
        let pt = birkhoff_dimension_spectrum(&map, &ind1, 0.25).unwrap();
        let expected = {
            let h = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
            h / 2f64.ln()
        };
        assert!(
            (pt.value.unwrap_finite() - expected).abs() < 1e-7,
            "{} vs {expected}",
            pt.value
        );
    }

    #[test]
    fn indifferent_map_rejects_the_fixed_point_level() {
        let map = PiecewiseLinearMap::full_branches(vec![1.0, 2.0]).unwrap();
        let (sft, _) = code_as_sft(&map).unwrap();
        let ind1 = LocallyConstantPotential::indicator(&sft, &[1]).unwrap();
        let err = birkhoff_dimension_spectrum(&map, &ind1, 0.0).unwrap_err();
        assert!(matches!(err, Error::ExcludedAlpha { .. }));
        // interior levels stay finite
        let pt = birkhoff_dimension_spectrum(&map, &ind1, 0.5).unwrap();
        assert!(pt.value.is_finite());
        assert!(pt.value.unwrap_finite() > 0.0);
    }

    #[test]
    fn pointwise_dimension_of_product_measures() {
        let map = PiecewiseLinearMap::full_branches(vec![2.0, 2.0]).unwrap();
        let (sft, _) = code_as_sft(&map).unwrap();
        // Lebesgue: phi0 = log(1/2) on both branches, degenerate spectrum
        let lebesgue = LocallyConstantPotential::constant(&sft, 0.5f64.ln());
        let pt = pointwise_dimension_spectrum(&map, &lebesgue, 1.0).unwrap();
        assert!((pt.value.unwrap_finite() - 1.0).abs() < 1e-8);

        // At the level attained by the equal-weight measure the value is the
        // full dimension 1.
        let phi0 =
            LocallyConstantPotential::from_symbols(&sft, &[0.75f64.ln(), 0.25f64.ln()]).unwrap();
        let alpha = (4f64.ln() + (4.0f64 / 3.0).ln()) / (2.0 * 2f64.ln());
        let pt = pointwise_dimension_spectrum(&map, &phi0, alpha).unwrap();
        assert!(
            (pt.value.unwrap_finite() - 1.0).abs() < 1e-6,
            "value {}",
            pt.value
        );
        let pt = pointwise_dimension_spectrum(&map, &phi0, 2.5).unwrap();
        assert_eq!(pt.value, ExtendedReal::NegInfinity);
    }

    #[test]
    fn local_entropy_levels() {
        let full = Sft::full_shift(2);
        let half = LocallyConstantPotential::constant(&full, 0.5f64.ln());
        let quarter =
            LocallyConstantPotential::from_symbols(&full, &[0.75f64.ln(), 0.25f64.ln()]).unwrap();
        let phi = VectorPotential::new(&full, vec![half.clone(), quarter]).unwrap();
        let alpha2 = (4f64.ln() + (4.0f64 / 3.0).ln()) / 2.0;
        let pt = local_entropy_spectrum(&full, &phi, &[2f64.ln(), alpha2]).unwrap();
        assert!(
            (pt.value.unwrap_finite() - 2f64.ln()).abs() < 1e-7,
            "value {}",
            pt.value
        );

        let phi1 = VectorPotential::new(&full, vec![half.clone(), half.clone()]).unwrap();
        let pt = local_entropy_spectrum(&full, &phi1, &[2f64.ln(), 2f64.ln()]).unwrap();
        assert!((pt.value.unwrap_finite() - 2f64.ln()).abs() < 1e-9);

        let pt = local_entropy_spectrum(&full, &phi1, &[5.0, 5.0]).unwrap();
        assert_eq!(pt.value, ExtendedReal::NegInfinity);

        let bad = LocallyConstantPotential::constant(&full, 1.0);
        let bad_v = VectorPotential::new(&full, vec![bad]).unwrap();
        assert!(local_entropy_spectrum(&full, &bad_v, &[0.0]).is_err());
    }
}
