//! Numerical R- and S-transforms from the functional relations
//! `R(G(z)) + 1/G(z) = z` and `y = z R(z)  <=>  z = y S(y)`.
//!
//! Both are damped fixed-point iterations; they are meant for small
//! arguments where the series converge, and mostly serve as cross-checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 200;

/// Evaluates `R(y)` given a Green's function `g`. Solves `G(z) = y` for `z`
/// starting from `z = 1/y`, then returns `z - 1/y`.
pub fn r_from_g(g: impl Fn(Complex64) -> Complex64, y: Complex64) -> Result<Complex64> {
    if y.norm() == 0.0 {
        return Err(Error::domain(
            "r_from_g needs y != 0; use the limit from small y",
        ));
    }
    let target = y.inv();
    let mut z = target;
    let step = |z: Complex64| target - g(z).inv();
    let mut delta = step(z);
    let mut theta = 1.0;
    for _ in 0..FIXED_POINT_MAX_ITER {
        if !delta.is_finite() {
            return Err(Error::convergence(format!(
                "r_from_g: non-finite iterate at y = {y}"
            )));
        }
        if delta.norm() <= FIXED_POINT_TOL * (1.0 + z.norm()) {
            return Ok(z - target);
        }
        let candidate = z + delta * theta;
        let next = step(candidate);
        if next.is_finite() && next.norm() < delta.norm() {
            z = candidate;
            delta = next;
            theta = (theta * 2.0).min(1.0);
        } else {
            theta *= 0.5;
            if theta < 1e-6 {
                return Err(Error::convergence(format!(
                    "r_from_g: damping collapsed at y = {y}"
                )));
            }
        }
    }
    Err(Error::convergence(format!(
        "r_from_g: {FIXED_POINT_MAX_ITER} iterations at y = {y}"
    )))
}

/// Evaluates `S(y)` given an R-transform `r`. Solves `z R(z) = y` with the
/// iteration `z <- y / R(z)` seeded at `y / kappa_1`, then returns `z / y`.
pub fn s_from_r(r: impl Fn(Complex64) -> Complex64, y: Complex64) -> Result<Complex64> {
    let mut k1 = r(Complex64::new(0.0, 0.0));
    if !k1.is_finite() {
        k1 = r(Complex64::new(1e-9, 0.0));
    }
    if !k1.is_finite() || k1.norm() < 1e-14 {
        return Err(Error::domain("s_from_r needs a nonzero first cumulant"));
    }
    if y.norm() == 0.0 {
        return Ok(k1.inv());
    }
    let mut z = y / k1;
    let mut theta = 1.0;
    let residual = |z: Complex64| y / r(z) - z;
    let mut delta = residual(z);
    for _ in 0..FIXED_POINT_MAX_ITER {
        if !delta.is_finite() {
            return Err(Error::convergence(format!(
                "s_from_r: non-finite iterate at y = {y}"
            )));
        }
        if delta.norm() <= FIXED_POINT_TOL * z.norm().max(y.norm()) {
            return Ok(z / y);
        }
        let candidate = z + delta * theta;
        let next = residual(candidate);
        if next.is_finite() && next.norm() < delta.norm() {
            z = candidate;
            delta = next;
            theta = (theta * 2.0).min(1.0);
        } else {
            theta *= 0.5;
            if theta < 1e-6 {
                return Err(Error::convergence(format!(
                    "s_from_r: damping collapsed at y = {y}"
                )));
            }
        }
    }
    Err(Error::convergence(format!(
        "s_from_r: {FIXED_POINT_MAX_ITER} iterations at y = {y}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn g_mp1(z: Complex64) -> Complex64 {
        // 2 / (z + sqrt(z^2 - 4z)), branch with G ~ 1/z
        let s = (z * z - 4.0 * z).sqrt();
        let s = if (z + s).norm() > (z - s).norm() {
            s
        } else {
            -s
        };
        2.0 / (z + s)
    }

    fn g_as(z: Complex64) -> Complex64 {
        let s = (z * (z - 2.0)).sqrt();
        let g = s.inv();
        if (g * z - 1.0).norm() < 0.5 {
            g
        } else {
            -g
        }
    }

    #[test]
    fn point_masses() {
        let r0 = r_from_g(|z| z.inv(), c(0.1)).unwrap();
        assert!(r0.norm() < 1e-12);
        let r1 = r_from_g(|z| (z - 1.0).inv(), c(0.1)).unwrap();
        assert!((r1 - 1.0).norm() < 1e-12);
        let s = s_from_r(|_| c(1.0), c(0.3)).unwrap();
        assert!((s - 1.0).norm() < 1e-12);
    }

    #[test]
    fn marchenko_pastur() {
        let r = r_from_g(g_mp1, c(0.1)).unwrap();
        assert!((r - 1.0 / 0.9).norm() < 1e-10, "{r}");
        let s = s_from_r(|z| (1.0 - z).inv(), c(0.2)).unwrap();
        assert!((s - 1.0 / 1.2).norm() < 1e-12);
    }

    #[test]
    fn arcsine_s_from_r() {
        let r_as = |z: Complex64| (z - 1.0 + (z * z + 1.0).sqrt()) / z;
        let r_as = move |z: Complex64| if z.norm() < 1e-12 { c(1.0) } else { r_as(z) };
        let s = s_from_r(r_as, c(0.5)).unwrap();
        assert!((s - 2.5 / 3.0).norm() < 1e-12, "{s}");
    }

    #[test]
    fn round_trip_through_green() {
        for (g, s_exact) in [
            (
                g_mp1 as fn(Complex64) -> Complex64,
                (|w: f64| 1.0 / (1.0 + w)) as fn(f64) -> f64,
            ),
            (g_as, |w: f64| (w + 2.0) / (2.0 + 2.0 * w)),
        ] {
            let r = |y: Complex64| r_from_g(g, y).unwrap_or(Complex64::new(f64::NAN, 0.0));
            for y in [0.05, 0.1, -0.1, 0.15] {
                let s = s_from_r(r, c(y)).unwrap();
                assert!((s.re - s_exact(y)).abs() < 1e-8, "y={y}: {s}");
            }
        }
    }
}
