//! Topological pressure of locally constant potentials on an SFT, realized as
//! the log spectral radius of a weighted transfer matrix, together with the
//! equilibrium Markov measure, pressure gradients, projections onto the
//! locally constant subspace, and finite-level cover estimates.

use crate::error::{Error, Result};
use crate::symbolic::{
    enumerate_words, lift_vector, LocallyConstantPotential, MarkovMeasure, Sft, VectorPotential,
    Word, DEFAULT_MAX_WORDS,
};

/// Weighted transfer matrix of a depth-`K` potential: indexed by admissible
/// `(K-1)`-words, entry `exp(phi(w))` on each allowed one-symbol extension
/// `w` of the row block. Potentials of depth 1 are lifted to depth 2 first,
/// so blocks are always nonempty words.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub blocks: Vec<Word>,
    /// entries[u][v] = exp(phi - shift) on the allowed extension, 0 otherwise.
    pub entries: Vec<Vec<f64>>,
    /// Common log-shift subtracted from the potential before exponentiation.
    pub shift: f64,
}

impl TransferMatrix {
    pub fn new(sft: &Sft, phi: &LocallyConstantPotential) -> Result<Self> {
        let depth = phi.depth().max(2);
        let phi = phi.lift(sft, depth)?;
        let blocks = enumerate_words(sft, depth - 1, DEFAULT_MAX_WORDS)?;
        let index: std::collections::BTreeMap<&[u8], usize> = blocks
            .iter()
            .enumerate()
            .map(|(i, w)| (w.symbols(), i))
            .collect();
        let (_, hi) = phi.value_range(sft);
        let n = blocks.len();
        let mut entries = vec![vec![0.0; n]; n];
        for (u, w) in blocks.iter().enumerate() {
            let last = *w.symbols().last().unwrap();
            for &a in sft.successors(last) {
                let mut kw = w.symbols().to_vec();
                kw.push(a);
                let v = index[&kw[1..]];
                entries[u][v] = (phi.value(&kw) - hi).exp();
            }
        }
        Ok(Self {
            blocks,
            entries,
            shift: hi,
        })
    }

    fn n(&self) -> usize {
        self.blocks.len()
    }

    fn mul_right(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.entries[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    fn mul_left(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += v[i] * self.entries[i][j];
            }
            out[j] = acc;
        }
        out
    }

    /// Perron data: spectral radius of the (shifted) matrix with right and
    /// left eigenvectors normalized to `sum l_i r_i = 1`, `max r_i = 1`.
    ///
    /// The Perron vector is obtained by repeated squaring of `M + I`
    /// (irreducible + positive diagonal = primitive, so the power converges
    /// for every period), and the radius is certified by the Collatz-Wielandt
    /// ratio bounds `min_i (Mv)_i/v_i <= rho <= max_i (Mv)_i/v_i`.
    pub fn perron(&self) -> Result<PerronData> {
        let n = self.n();
        // B = (M + I), max-normalized; repeated squaring of B drives any
        // positive vector to the Perron direction at a gap-independent rate.
        let mut b: Vec<Vec<f64>> = self.entries.clone();
        for (i, row) in b.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        normalize_matrix(&mut b);
        let mut right = vec![1.0f64; n];
        let mut left = vec![1.0f64; n];
        let mut radius = f64::NAN;
        let mut converged = false;
        for _ in 0..200 {
            right = mat_vec(&b, &right);
            left = vec_mat(&left, &b);
            let rmax = right.iter().cloned().fold(0.0f64, f64::max);
            let lmax = left.iter().cloned().fold(0.0f64, f64::max);
            if rmax <= 0.0 || lmax <= 0.0 || !rmax.is_finite() || !lmax.is_finite() {
                return Err(Error::NonConvergence {
                    what: "transfer matrix powers degenerated",
                });
            }
            right.iter_mut().for_each(|x| *x /= rmax);
            left.iter_mut().for_each(|x| *x /= lmax);
            let mv = self.mul_right(&right);
            let (lo, hi) = collatz_wielandt(&mv, &right);
            if hi.is_finite() && lo > 0.0 && (hi - lo) <= 1e-13 * hi {
                radius = 0.5 * (lo + hi);
                converged = true;
                break;
            }
            b = mat_square(&b);
            normalize_matrix(&mut b);
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: "spectral radius certificate",
            });
        }
        // Normalize: sum l_i r_i = 1 (right already max-normalized).
        let dot: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
        let left: Vec<f64> = left.iter().map(|l| l / dot).collect();
        Ok(PerronData {
            radius,
            right,
            left,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PerronData {
    pub radius: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

fn collatz_wielandt(mv: &[f64], v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&num, &den) in mv.iter().zip(v) {
        if den <= 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let r = num / den;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn vec_mat(v: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        if v[i] != 0.0 {
            for j in 0..n {
                out[j] += v[i] * m[i][j];
            }
        }
    }
    out
}

fn mat_square(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let a = m[i][k];
            if a != 0.0 {
                for j in 0..n {
                    out[i][j] += a * m[k][j];
                }
            }
        }
    }
    out
}

fn normalize_matrix(m: &mut [Vec<f64>]) {
    let max = m
        .iter()
        .flat_map(|r| r.iter().cloned())
        .fold(0.0f64, f64::max);
    if max > 0.0 && max.is_finite() {
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x /= max;
            }
        }
    }
}

/// Topological pressure `P(phi) = log rho(TransferMatrix)`.
pub fn pressure(sft: &Sft, phi: &LocallyConstantPotential) -> Result<f64> {
    let t = TransferMatrix::new(sft, phi)?;
    let p = t.perron()?;
    Ok(p.radius.ln() + t.shift)
}

/// Unique equilibrium state of a locally constant potential: the order-(K-1)
/// Markov measure built from the Perron eigenvectors, with kernel
/// `p(w -> w') = M_ww' r_w' / (rho r_w)` and stationary vector `l_w r_w`.
pub fn equilibrium_markov(sft: &Sft, phi: &LocallyConstantPotential) -> Result<MarkovMeasure> {
    let t = TransferMatrix::new(sft, phi)?;
    let p = t.perron()?;
    let order = t.blocks[0].len();
    let m = sft.alphabet_size();
    let index: std::collections::BTreeMap<&[u8], usize> = t
        .blocks
        .iter()
        .enumerate()
        .map(|(i, w)| (w.symbols(), i))
        .collect();
    let mut kernel = vec![vec![0.0; m]; t.blocks.len()];
    for (u, w) in t.blocks.iter().enumerate() {
        let last = *w.symbols().last().unwrap();
        let mut row_sum = 0.0;
        for &a in sft.successors(last) {
            let mut kw = w.symbols().to_vec();
            kw.push(a);
            let v = index[&kw[1..]];
            let val = t.entries[u][v] * p.right[v] / (p.radius * p.right[u]);
            kernel[u][a as usize] = val;
            row_sum += val;
        }
        // Guard against eigenvector roundoff: rows renormalized to sum 1.
        for x in kernel[u].iter_mut() {
            *x /= row_sum;
        }
    }
    let mut stationary: Vec<f64> = p
        .left
        .iter()
        .zip(&p.right)
        .map(|(l, r)| l * r)
        .collect();
    let total: f64 = stationary.iter().sum();
    stationary.iter_mut().for_each(|x| *x /= total);
    MarkovMeasure::new(sft, order, kernel, stationary)
}

/// Gradient of `q -> P(<q, Xi> + xi0)`: the integral of `Xi` under the
/// equilibrium state of the combined potential.
pub fn pressure_gradient(
    sft: &Sft,
    xi_vec: &VectorPotential,
    xi0: &LocallyConstantPotential,
    q: &[f64],
) -> Result<Vec<f64>> {
    assert_eq!(q.len(), xi_vec.dim());
    let combined = combine(sft, xi_vec, q, xi0)?;
    let mu = equilibrium_markov(sft, &combined)?;
    Ok(xi_vec
        .components()
        .iter()
        .map(|c| mu.integral(sft, c))
        .collect())
}

/// `<q, Xi> + xi0` as a single locally constant potential.
pub fn combine(
    sft: &Sft,
    xi_vec: &VectorPotential,
    q: &[f64],
    xi0: &LocallyConstantPotential,
) -> Result<LocallyConstantPotential> {
    let mut terms: Vec<(f64, &LocallyConstantPotential)> = xi_vec
        .components()
        .iter()
        .zip(q)
        .map(|(p, &c)| (c, p))
        .collect();
    terms.push((1.0, xi0));
    LocallyConstantPotential::linear_combination(sft, &terms, 0.0)
}

/// `<q, Phi - alpha*Psi> + xi` for level-set pressure minimization.
pub fn level_potential(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    alpha: &[f64],
    q: &[f64],
    xi: &LocallyConstantPotential,
) -> Result<LocallyConstantPotential> {
    let mut terms: Vec<(f64, &LocallyConstantPotential)> = Vec::new();
    for i in 0..phi.dim() {
        terms.push((q[i], phi.component(i)));
        terms.push((-q[i] * alpha[i], psi.component(i)));
    }
    terms.push((1.0, xi));
    LocallyConstantPotential::linear_combination(sft, &terms, 0.0)
}

/// `Phi - alpha*Psi` as a vector potential.
pub fn level_vector(
    sft: &Sft,
    phi: &VectorPotential,
    psi: &VectorPotential,
    alpha: &[f64],
) -> Result<VectorPotential> {
    let depth = phi.depth().max(psi.depth());
    let phi = lift_vector(sft, phi, depth)?;
    let psi = lift_vector(sft, psi, depth)?;
    let comps = (0..phi.dim())
        .map(|i| {
            LocallyConstantPotential::linear_combination(
                sft,
                &[(1.0, phi.component(i)), (-alpha[i], psi.component(i))],
                0.0,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    VectorPotential::new(sft, comps)
}

/// Oracle for a continuous potential evaluated at points of the shift space,
/// given by its values on finite prefixes and its modulus of variation.
pub trait PotentialOracle {
    /// Value of the potential at the point whose first `prefix.len()` symbols
    /// are `prefix` (continued lexicographically minimally).
    fn eval(&self, prefix: &[u8]) -> f64;
    /// Prefix length after which `eval` is accurate to machine precision.
    fn horizon(&self) -> usize;
    /// Upper bound on the oscillation of the potential within any
    /// `depth`-cylinder.
    fn variation(&self, depth: usize) -> f64;
}

/// Depth-`k` projection of a continuous potential: each admissible `k`-word
/// is evaluated at the lexicographically minimal point of its cylinder. The
/// sup-error is bounded by the variation on `k`-cylinders, and pressure moves
/// by at most that bound.
pub fn approximate_potential(
    sft: &Sft,
    oracle: &dyn PotentialOracle,
    k: usize,
) -> Result<(LocallyConstantPotential, f64)> {
    let words = enumerate_words(sft, k, DEFAULT_MAX_WORDS)?;
    let horizon = oracle.horizon().max(k);
    let mut map = std::collections::BTreeMap::new();
    for w in words {
        let point = sft.lex_min_extension(w.symbols(), horizon);
        let value = oracle.eval(&point);
        map.insert(w, value);
    }
    let pot = LocallyConstantPotential::from_map(sft, k, &map)?;
    Ok((pot, oracle.variation(k)))
}

/// Exact finite-level cover sum `(1/n) log sum_w exp(S_n phi(w))` over
/// admissible words of length `n + k - 1`; converges to the pressure.
///
/// Terms are accumulated in ascending order so the result is bit-identical
/// to any other traversal producing the same term multiset.
pub fn pressure_cover_estimate(
    sft: &Sft,
    phi: &LocallyConstantPotential,
    n: usize,
    cap: u64,
) -> Result<f64> {
    assert!(n >= 1);
    let k = phi.depth();
    let mut terms = Vec::new();
    crate::symbolic::visit_words(sft, n + k - 1, cap, |w| {
        terms.push(phi.birkhoff_sum(w, n).exp());
    })?;
    Ok(sorted_log_sum(&mut terms) / n as f64)
}

/// Sorts ascending and sums sequentially; shared by the cover estimates and
/// the brute-force oracle so the two agree bit-for-bit.
pub(crate) fn sorted_log_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    let sum: f64 = terms.iter().sum();
    sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::markov_stats;

    fn golden() -> Sft {
        Sft::new(vec![vec![true, true], vec![true, false]]).unwrap()
    }

    #[test]
    fn pressure_of_zero_is_entropy() {
        let full = Sft::full_shift(2);
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        assert!((pressure(&full, &zero).unwrap() - 2f64.ln()).abs() < 1e-13);
        let g = golden();
        let zero_g = LocallyConstantPotential::constant(&g, 0.0);
        let parry = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((pressure(&g, &zero_g).unwrap() - parry).abs() < 1e-13);
    }

    #[test]
    fn weighted_full_shift_pressure() {
        let full = Sft::full_shift(2);
        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        let p = pressure(&full, &ind1).unwrap();
        assert!((p - (1.0 + std::f64::consts::E).ln()).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_states_match_known_measures() {
        let full = Sft::full_shift(2);
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        let mu = equilibrium_markov(&full, &zero).unwrap();
        for row in mu.kernel() {
            assert!((row[0] - 0.5).abs() < 1e-12);
            assert!((row[1] - 0.5).abs() < 1e-12);
        }

        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        let mu = equilibrium_markov(&full, &ind1).unwrap();
        let e = std::f64::consts::E;
        for row in mu.kernel() {
            assert!((row[1] - e / (1.0 + e)).abs() < 1e-12);
        }

        let g = golden();
        let zero_g = LocallyConstantPotential::constant(&g, 0.0);
        let parry = equilibrium_markov(&g, &zero_g).unwrap();
        // transitions out of symbol 1 are forced to 0
        assert!((parry.kernel()[1][0] - 1.0).abs() < 1e-12);
        let phi_ratio = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let (h, _) = markov_stats(&g, &parry, &zero_g);
        assert!((h - phi_ratio).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_attains_the_variational_supremum() {
        let g = golden();
        let pot = LocallyConstantPotential::from_symbols(&g, &[0.3, -0.7]).unwrap();
        let mu = equilibrium_markov(&g, &pot).unwrap();
        let (h, i) = markov_stats(&g, &mu, &pot);
        let p = pressure(&g, &pot).unwrap();
        assert!((h + i - p).abs() < 1e-8, "variational gap {}", (h + i - p).abs());
    }

    #[test]
    fn gradient_matches_logistic_derivative() {
        let full = Sft::full_shift(2);
        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        let xi = VectorPotential::new(&full, vec![ind1]).unwrap();
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        let g0 = pressure_gradient(&full, &xi, &zero, &[0.0]).unwrap();
        assert!((g0[0] - 0.5).abs() < 1e-11);
        let g1 = pressure_gradient(&full, &xi, &zero, &[1.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((g1[0] - e / (1.0 + e)).abs() < 1e-11);
    }

    #[test]
    fn gradient_of_constant_component_is_constant() {
        let full = Sft::full_shift(2);
        let c = LocallyConstantPotential::constant(&full, 0.37);
        let xi = VectorPotential::new(&full, vec![c]).unwrap();
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        for q in [-2.0, 0.0, 1.5] {
            let g = pressure_gradient(&full, &xi, &zero, &[q]).unwrap();
            assert!((g[0] - 0.37).abs() < 1e-11);
        }
    }

    #[test]
    fn cover_estimate_exact_values() {
        let full = Sft::full_shift(2);
        let zero = LocallyConstantPotential::constant(&full, 0.0);
        for n in [1usize, 5, 10] {
            let est = pressure_cover_estimate(&full, &zero, n, DEFAULT_MAX_WORDS).unwrap();
            let expected = (2f64.powi(n as i32)).ln() / n as f64;
            assert_eq!(est, expected);
        }
        let g = golden();
        let zero_g = LocallyConstantPotential::constant(&g, 0.0);
        let est = pressure_cover_estimate(&g, &zero_g, 10, DEFAULT_MAX_WORDS).unwrap();
        assert_eq!(est, 144f64.ln() / 10.0);

        let ind1 = LocallyConstantPotential::indicator(&full, &[1]).unwrap();
        let est = pressure_cover_estimate(&full, &ind1, 1, DEFAULT_MAX_WORDS).unwrap();
        assert!((est - (1.0 + std::f64::consts::E).ln()).abs() < 1e-15);
    }

    #[test]
    fn projection_of_dyadic_expansion() {
        struct Dyadic;
        impl PotentialOracle for Dyadic {
            fn eval(&self, prefix: &[u8]) -> f64 {
                prefix
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| s as f64 * 2f64.powi(-(i as i32) - 1))
                    .sum()
            }
            fn horizon(&self) -> usize {
                60
            }
            fn variation(&self, depth: usize) -> f64 {
                2f64.powi(-(depth as i32))
            }
        }
        let full = Sft::full_shift(2);
        let (pot, err) = approximate_potential(&full, &Dyadic, 2).unwrap();
        assert_eq!(err, 0.25);
        assert_eq!(pot.value(&[0, 0]), 0.0);
        assert_eq!(pot.value(&[0, 1]), 0.25);
        assert_eq!(pot.value(&[1, 0]), 0.5);
        assert_eq!(pot.value(&[1, 1]), 0.75);

        // constant potential: exact at depth 1
        struct Const;
        impl PotentialOracle for Const {
            fn eval(&self, _: &[u8]) -> f64 {
                1.25
            }
            fn horizon(&self) -> usize {
                1
            }
            fn variation(&self, _: usize) -> f64 {
                0.0
            }
        }
        let (pot, err) = approximate_potential(&full, &Const, 1).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(pot.value(&[0]), 1.25);

        // pressure is 1-Lipschitz under projection refinement
        let (p2, v2) = approximate_potential(&full, &Dyadic, 2).unwrap();
        let (p5, _) = approximate_potential(&full, &Dyadic, 5).unwrap();
        let d = (pressure(&full, &p2).unwrap() - pressure(&full, &p5).unwrap()).abs();
        assert!(d <= v2 + 1e-12);
    }
}
