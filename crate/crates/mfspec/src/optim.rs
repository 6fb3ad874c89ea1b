//! Deterministic scalar and small-dimension convex minimization used by the
//! spectrum computations: golden-section bracketing with a Newton polish on
//! the derivative in one dimension, Armijo-backtracked gradient descent with
//! Barzilai-Borwein steps inside a ball for d > 1, and plain bisection.

use crate::error::{Error, Result};

pub const GRAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MinResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes a convex function on `[-radius, radius]` by golden-section
/// search followed by a Newton polish on the analytic derivative.
///
/// `f` may return `+inf` on part of the interval (extended-real convexity);
/// the golden-section comparisons handle that, and the polish only runs once
/// the iterate is in the finite region.
pub fn minimize_convex_1d(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut df: impl FnMut(f64) -> Result<f64>,
    radius: f64,
    max_iter: usize,
) -> Result<MinResult> {
    let mut iterations = 0usize;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-radius, radius);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    iterations += 2;
    while (b - a) > 1e-9 * radius.max(1.0) && iterations < max_iter {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
        iterations += 1;
    }
    let mut x = if f1 <= f2 { x1 } else { x2 };
    // Value comparisons cannot localize the minimum below sqrt(eps), and the
    // final golden bracket may exclude it by that much. Rebuild a genuine
    // sign bracket from the derivative (monotone by convexity) around x.
    let mut g = df(x)?;
    iterations += 1;
    let mut lo = x;
    let mut hi = x;
    let mut pad = (b - a).max(1e-12 * (1.0 + x.abs()));
    if g > 0.0 {
        while lo > -radius {
            lo = (x - pad).max(-radius);
            let gl = df(lo)?;
            iterations += 1;
            if gl <= 0.0 {
                break;
            }
            hi = lo;
            pad *= 4.0;
        }
    } else {
        while hi < radius {
            hi = (x + pad).min(radius);
            let gh = df(hi)?;
            iterations += 1;
            if gh >= 0.0 {
                break;
            }
            lo = hi;
            pad *= 4.0;
        }
    }
    // Newton on the derivative with bisection fallback inside [lo, hi].
    x = x.clamp(lo, hi);
    g = df(x)?;
    iterations += 1;
    for _ in 0..80 {
        if g.abs() <= GRAD_TOL || hi - lo < 1e-18 * (1.0 + x.abs()) {
            break;
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let h = 1e-6 * (1.0 + x.abs());
        let g_plus = df(x + h)?;
        let g_minus = df(x - h)?;
        iterations += 2;
        let curvature = (g_plus - g_minus) / (2.0 * h);
        let mut next = if curvature > 0.0 { x - g / curvature } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < 1e-18 * (1.0 + x.abs()) {
            break;
        }
        x = next;
        g = df(x)?;
        iterations += 1;
    }
    let value = f(x)?;
    Ok(MinResult {
        x: vec![x],
        value,
        grad_norm: g.abs(),
        iterations,
    })
}

/// Projected gradient descent with Armijo backtracking and Barzilai-Borwein
/// step sizes, constrained to the Euclidean ball of the given radius.
pub fn minimize_convex_ball(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    dim: usize,
    radius: f64,
    max_iter: usize,
) -> Result<MinResult> {
    let mut x = vec![0.0; dim];
    let mut fx = f(&x)?;
    let mut g = grad(&x)?;
    let mut iterations = 1usize;
    let mut step = 1.0 / (1.0 + norm(&g));
    let mut prev_x: Option<Vec<f64>> = None;
    let mut prev_g: Option<Vec<f64>> = None;
    for _ in 0..max_iter {
        let stat = stationarity(&x, &g, radius);
        if stat <= GRAD_TOL {
            return Ok(MinResult {
                x,
                value: fx,
                grad_norm: stat,
                iterations,
            });
        }
        // BB step from the previous pair, safeguarded.
        if let (Some(px), Some(pg)) = (&prev_x, &prev_g) {
            let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            let yy = dot(&y, &y);
            if sy > 0.0 && yy > 0.0 {
                step = (sy / yy).clamp(1e-12, 1e6);
            }
        }
        let mut t = step;
        let mut accepted = false;
        for _ in 0..80 {
            let trial = project_ball(
                &x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect::<Vec<_>>(),
                radius,
            );
            let ft = f(&trial)?;
            iterations += 1;
            let decrease: f64 = x
                .iter()
                .zip(&trial)
                .zip(&g)
                .map(|((xi, ti), gi)| gi * (xi - ti))
                .sum();
            if ft <= fx - 1e-4 * decrease {
                prev_x = Some(x.clone());
                prev_g = Some(g.clone());
                x = trial;
                fx = ft;
                g = grad(&x)?;
                iterations += 1;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No further progress at line-search resolution.
            let stat = stationarity(&x, &g, radius);
            return Ok(MinResult {
                x,
                value: fx,
                grad_norm: stat,
                iterations,
            });
        }
    }
    let stat = stationarity(&x, &g, radius);
    Ok(MinResult {
        x,
        value: fx,
        grad_norm: stat,
        iterations,
    })
}

/// Norm of the projected gradient mapping at unit step.
fn stationarity(x: &[f64], g: &[f64], radius: f64) -> f64 {
    let trial = project_ball(
        &x.iter().zip(g).map(|(xi, gi)| xi - gi).collect::<Vec<_>>(),
        radius,
    );
    x.iter()
        .zip(&trial)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn project_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let n = norm(x);
    if n <= radius {
        x.to_vec()
    } else {
        x.iter().map(|v| v * radius / n).collect()
    }
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto the probability simplex restricted to `allowed`
/// coordinates; forbidden coordinates are forced to zero.
pub fn project_simplex_masked(x: &[f64], allowed: &[bool]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).filter(|&i| allowed[i]).collect();
    assert!(!idx.is_empty(), "no allowed coordinates");
    idx.sort_by(|&i, &j| x[j].total_cmp(&x[i]));
    let mut cumsum = 0.0;
    let mut rho = 0usize;
    let mut theta = 0.0;
    for (r, &i) in idx.iter().enumerate() {
        cumsum += x[i];
        let t = (cumsum - 1.0) / (r + 1) as f64;
        if x[i] - t > 0.0 {
            rho = r + 1;
            theta = t;
        }
    }
    let _ = rho;
    let mut out = vec![0.0; x.len()];
    for &i in &idx {
        out[i] = (x[i] - theta).max(0.0);
    }
    out
}

/// Root of a monotone nonincreasing function by bracket growth + bisection:
/// returns `inf { t : f(t) <= 0 }` within `tol`, assuming a sign change
/// exists within the growth range.
pub fn bisect_nonincreasing(
    mut f: impl FnMut(f64) -> Result<f64>,
    tol: f64,
    max_growth: u32,
) -> Result<f64> {
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let f0 = f(0.0)?;
    if f0 > 0.0 {
        // grow upward until f <= 0
        let mut t = 1.0;
        let mut found = false;
        for _ in 0..max_growth {
            if f(t)? <= 0.0 {
                hi = t;
                found = true;
                break;
            }
            lo = t;
            t *= 2.0;
        }
        if !found {
            return Err(Error::NonConvergence {
                what: "root bracket growth (upper)",
            });
        }
    } else {
        // root is at or below 0: grow downward until f > 0
        hi = 0.0;
        let mut t = -1.0;
        let mut found = false;
        for _ in 0..max_growth {
            if f(t)? > 0.0 {
                lo = t;
                found = true;
                break;
            }
            hi = t;
            t *= 2.0;
        }
        if !found {
            return Err(Error::NonConvergence {
                what: "root bracket growth (lower)",
            });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_newton_finds_quadratic_minimum() {
        let r = minimize_convex_1d(
            |x| Ok((x - 0.7) * (x - 0.7) + 1.0),
            |x| Ok(2.0 * (x - 0.7)),
            10.0,
            500,
        )
        .unwrap();
        assert!((r.x[0] - 0.7).abs() < 1e-9);
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.grad_norm <= GRAD_TOL);
    }

    #[test]
    fn handles_infinite_region() {
        // convex extended function: +inf for x <= 0
        let f = |x: f64| {
            if x <= 0.0 {
                Ok(f64::INFINITY)
            } else {
                Ok(x + 1.0 / x)
            }
        };
        let df = |x: f64| {
            if x <= 0.0 {
                Ok(-1e9)
            } else {
                Ok(1.0 - 1.0 / (x * x))
            }
        };
        let r = minimize_convex_1d(f, df, 8.0, 500).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-7);
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ball_descent_on_quadratic_bowl() {
        let r = minimize_convex_ball(
            |x| Ok((x[0] - 1.0).powi(2) + 10.0 * (x[1] + 0.5).powi(2)),
            |x| Ok(vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 0.5)]),
            2,
            5.0,
            5000,
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-8, "{:?}", r);
        assert!((r.x[1] + 0.5).abs() < 1e-8);
    }

    #[test]
    fn ball_descent_respects_radius() {
        // unconstrained minimum at (3, 0), ball radius 1
        let r = minimize_convex_ball(
            |x| Ok((x[0] - 3.0).powi(2) + x[1].powi(2)),
            |x| Ok(vec![2.0 * (x[0] - 3.0), 2.0 * x[1]]),
            2,
            1.0,
            2000,
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6);
        assert!(r.x[1].abs() < 1e-6);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex_masked(&[0.4, 0.4, 2.0], &[true, true, true]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[0], p[1]);
        let p = project_simplex_masked(&[5.0, 1.0], &[true, false]);
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn bisection_moran() {
        // 2^-t + 3^-t = 1
        let root = bisect_nonincreasing(
            |t| Ok(0.5f64.powf(t) + (1.0 / 3.0f64).powf(t) - 1.0),
            1e-13,
            64,
        )
        .unwrap();
        assert!((root - 0.7878849110258697).abs() < 1e-10);
        // negative root allowed
        let root = bisect_nonincreasing(|t| Ok(-t - 2.0), 1e-13, 64).unwrap();
        assert!((root + 2.0).abs() < 1e-12);
    }
}
