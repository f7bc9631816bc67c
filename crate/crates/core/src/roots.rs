//! Simultaneous polynomial root finding (Aberth–Ehrlich).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::ResolventPolynomial;

pub const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-14;

/// Roots of `P(., z)` at a fixed `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    /// How many top coefficients vanished at this `z`; the roots that
    /// escaped to infinity are missing from `roots`.
    pub degree_drop: usize,
}

pub(crate) fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn abs_horner(coeffs: &[Complex64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Fujiwara bound on the moduli of the roots of a monic polynomial.
fn fujiwara(monic: &[Complex64]) -> f64 {
    let n = monic.len() - 1;
    let mut bound: f64 = 0.0;
    for k in 1..=n {
        let mut a = monic[n - k].norm();
        if k == n {
            a /= 2.0;
        }
        bound = bound.max(a.powf(1.0 / k as f64));
    }
    2.0 * bound
}

fn initial_guesses(monic: &[Complex64]) -> Vec<Complex64> {
    let n = monic.len() - 1;
    let r = fujiwara(monic).max(f64::MIN_POSITIVE);
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            // slight radial perturbation breaks symmetric stalls
            Complex64::from_polar(r * (1.0 + 0.01 * k as f64 / n as f64), theta)
        })
        .collect()
}

/// All roots of `sum coeffs[i] x^i` (leading coefficient nonzero),
/// optionally warm-started from `start`.
pub fn aberth(coeffs: &[Complex64], start: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    let radius = fujiwara(&monic).max(f64::MIN_POSITIVE);
    let mut z = match start {
        Some(s) if s.len() == n && s.iter().all(|w| w.is_finite()) => perturb_duplicates(s, radius),
        _ => initial_guesses(&monic),
    };
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (p, dp) = horner(&monic, z[k]);
            let scale = abs_horner(&monic, z[k].norm());
            if p.norm() <= 4.0 * f64::EPSILON * scale {
                done[k] = true;
                continue;
            }
            let newton = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    sum += (z[k] - z[j]).inv();
                }
            }
            let corr = newton / (Complex64::new(1.0, 0.0) - newton * sum);
            if !corr.is_finite() {
                // coincident iterates: nudge apart
                let nudge = Complex64::new(1e-8, 1e-8) * (z[k].norm() + 1e-3 * radius);
                z[k] += nudge;
                all_done = false;
                continue;
            }
            z[k] -= corr;
            if corr.norm() <= REL_TOL * z[k].norm() {
                done[k] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    // accept if every residual is at a multiple-root noise floor
    let worst = z
        .iter()
        .map(|&x| horner(&monic, x).0.norm() / abs_horner(&monic, x.norm()))
        .fold(0.0, f64::max);
    if worst <= 1e-12 {
        Ok(z)
    } else {
        Err(Error::convergence(format!(
            "Aberth iteration: {MAX_ITER} iterations, worst relative residual {worst:e}"
        )))
    }
}

fn perturb_duplicates(s: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut out = s.to_vec();
    for k in 0..out.len() {
        for j in 0..k {
            let size = out[k].norm() + 1e-3 * radius;
            if (out[k] - out[j]).norm() <= 1e-12 * size {
                let nudge = Complex64::new(1e-7, 1.3e-7) * size * (k as f64 + 1.0);
                out[k] += nudge;
            }
        }
    }
    out
}

/// Replaces each cluster of roots that agree to relative accuracy `rel` by
/// its centroid. The centroid of a multiple root's cluster is far more
/// accurate than its members.
pub fn merge_clusters(roots: &mut [Complex64], rel: f64) {
    let n = roots.len();
    let mut assigned = vec![false; n];
    for k in 0..n {
        if assigned[k] {
            continue;
        }
        let mut members = vec![k];
        for j in k + 1..n {
            if !assigned[j]
                && (roots[j] - roots[k]).norm() <= rel * roots[k].norm().max(roots[j].norm())
            {
                members.push(j);
            }
        }
        if members.len() > 1 {
            let c = members.iter().map(|&m| roots[m]).sum::<Complex64>() / members.len() as f64;
            for &m in &members {
                roots[m] = c;
                assigned[m] = true;
            }
        }
    }
}

/// All roots of a univariate polynomial given lowest degree first. Exact
/// zero low coefficients give exact zero roots; vanishing top coefficients
/// are dropped.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() == 0.0 {
        hi -= 1;
    }
    let lo = coeffs[..hi].iter().take_while(|c| c.norm() == 0.0).count();
    let mut out = vec![Complex64::new(0.0, 0.0); lo];
    if hi > lo {
        out.extend(aberth(&coeffs[lo..hi], None)?);
    }
    Ok(out)
}

/// Number of top coefficients that cancel to rounding level at this `z`.
fn count_drop(c: &[Complex64], scales: &[f64]) -> usize {
    c.iter()
        .zip(scales)
        .rev()
        .take_while(|(x, s)| x.norm() <= 1e-14 * **s)
        .count()
}

/// Roots in `w` of `P(w, z)`, warm-started from `start` when its length
/// matches. Clusters that agree to about `1e-7` relative are merged.
pub fn roots_at_from(
    poly: &ResolventPolynomial,
    z: Complex64,
    start: Option<&[Complex64]>,
) -> Result<RootSet> {
    roots_of_coeffs(poly.w_coeffs_at(z), &poly.w_coeff_scales(z), z, start)
}

/// Roots in `u = 1 + w`. Near `z = 0` the branches collide at `w = -1`,
/// where `w` coordinates would lose the relative accuracy of `u`.
pub fn u_roots_at_from(
    poly: &ResolventPolynomial,
    z: Complex64,
    start: Option<&[Complex64]>,
) -> Result<RootSet> {
    roots_of_coeffs(poly.u_coeffs_at(z), &poly.u_coeff_scales(z), z, start)
}

fn roots_of_coeffs(
    c: Vec<Complex64>,
    scales: &[f64],
    z: Complex64,
    start: Option<&[Complex64]>,
) -> Result<RootSet> {
    let drop = count_drop(&c, scales);
    let c = &c[..c.len() - drop];
    if c.len() < 2 {
        return Err(Error::DegreeDrop {
            z: z.to_string(),
            dropped: drop,
        });
    }
    let lo = c.iter().take_while(|x| x.norm() == 0.0).count();
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let start = start.filter(|s| lo == 0 && s.len() == c.len() - 1);
    roots.extend(aberth(&c[lo..], start)?);
    merge_clusters(&mut roots, 1e-7);
    Ok(RootSet {
        roots,
        degree_drop: drop,
    })
}

pub fn roots_at(poly: &ResolventPolynomial, z: Complex64) -> Result<RootSet> {
    roots_at_from(poly, z, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat_int, RatPoly};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn known_roots() {
        // (x-1)(x-2)(x+3i)
        let r = poly_roots(&[c(0.0, 6.0), c(2.0, -9.0), c(-3.0, 3.0), c(1.0, 0.0)]).unwrap();
        let r = sorted(r);
        let want = [c(0.0, -3.0), c(1.0, 0.0), c(2.0, 0.0)];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_case() {
        // z w = 1 + w at z = 2
        let p = ResolventPolynomial::from_rows(vec![
            RatPoly::from_ints(&[-1, -1]),
            RatPoly::from_ints(&[0, 1]),
        ])
        .unwrap();
        let r = roots_at(&p, c(2.0, 0.0)).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn double_root_at_mp_edge() {
        let p = crate::measures::build_resolvent(&"mp(1)".parse().unwrap());
        let r = roots_at(&p, c(4.0, 0.0)).unwrap();
        for w in &r.roots {
            assert!((w - 1.0).norm() < 1e-7, "{w}");
        }
    }

    #[test]
    fn large_z_limit_of_fc3_quartic() {
        // (1+w)^4 = z w: one root ~ 1/z, three with w^3 ~ z
        let p = crate::measures::build_resolvent(&"mp(1)^3".parse().unwrap());
        let z = 1e9;
        let r = roots_at(&p, c(z, 0.0)).unwrap();
        let small: Vec<_> = r.roots.iter().filter(|w| w.norm() < 1.0).collect();
        assert_eq!(small.len(), 1);
        assert!((small[0] * z - 1.0).norm() < 1e-6);
        let large = r.roots.iter().filter(|w| w.norm() > 1.0);
        for w in large {
            assert!((w.norm() / z.cbrt() - 1.0).abs() < 1e-2, "{w}");
        }
    }

    #[test]
    fn degree_drop_is_flagged() {
        // (z-1) w^2 + (z-2) w - 1: the quadratic term vanishes at z = 1
        let p = ResolventPolynomial::from_rows(vec![
            RatPoly::new(vec![rat_int(-1), rat_int(-2), rat_int(-1)]),
            RatPoly::new(vec![rat_int(0), rat_int(1), rat_int(1)]),
        ])
        .unwrap();
        let r = roots_at(&p, c(1.0, 0.0)).unwrap();
        assert_eq!(r.degree_drop, 1);
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn warm_start_reproduces_cold_start() {
        let p = crate::measures::build_resolvent(&"as*mp(1)^2".parse().unwrap());
        let z = c(3.0, 0.5);
        let cold = sorted(roots_at(&p, z).unwrap().roots);
        let warm = sorted(
            roots_at_from(&p, z + c(0.01, 0.0), Some(&cold))
                .unwrap()
                .roots,
        );
        let back = sorted(roots_at_from(&p, z, Some(&warm)).unwrap().roots);
        for (a, b) in cold.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
