//! Radial law of isotropic (bi-unitarily invariant) random matrices `X`
//! with `X X^dagger` distributed as a given measure `P^2`, and the Green's
//! function identities used to factor the arcsine law.
//!
//! The cumulative radial distribution solves `S(F(r) - 1) = 1/r^2`; it is
//! supported on the ring between `1/sqrt(S(-1))` and `1/sqrt(S(0))`.

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::moments::{moments_from_cumulants, CumulantSequence, MomentSequence};
use crate::poly::Rat;

/// Grid size of the monotonicity pre-scan of `S` on `(-1, 0)`.
const SCAN_POINTS: usize = 200;

/// `S(w)` at real `w`, with poles mapped to `+infinity`.
fn s_real(spec: &MeasureSpec, w: f64) -> Result<f64> {
    match spec.s_eval(Complex64::new(w, 0.0)) {
        Ok(s) => {
            if s.im.abs() > 1e-9 * s.norm() {
                return Err(Error::domain(format!("S({w}) = {s} is not real")));
            }
            Ok(s.re)
        }
        Err(Error::Pole(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// `(r_in, r_out)`: `r_out = 1/sqrt(S(0))`, `r_in = 1/sqrt(S(-1))`, which is
/// 0 when `S` diverges at `-1`.
pub fn ring_radii(spec: &MeasureSpec) -> Result<(f64, f64)> {
    let s0 = s_real(spec, 0.0)?;
    let s1 = s_real(spec, -1.0)?;
    if !(s0 > 0.0) || !(s1 > 0.0) {
        return Err(Error::domain(format!(
            "S must be positive on [-1, 0] (S(-1) = {s1}, S(0) = {s0})"
        )));
    }
    let r_out = 1.0 / s0.sqrt();
    let r_in = if s1.is_finite() { 1.0 / s1.sqrt() } else { 0.0 };
    Ok((r_in, r_out))
}

/// Checks that `S` is nonincreasing on a grid in `(-1, 0)`.
fn check_monotone(spec: &MeasureSpec) -> Result<()> {
    let mut last = f64::INFINITY;
    for k in 1..SCAN_POINTS {
        let w = -1.0 + k as f64 / SCAN_POINTS as f64;
        let s = s_real(spec, w)?;
        if s > last * (1.0 + 1e-12) {
            return Err(Error::NonMonotone(format!(
                "S increases near w = {w} ({last} -> {s})"
            )));
        }
        last = s;
    }
    Ok(())
}

fn solve_radial(spec: &MeasureSpec, r: f64, radii: (f64, f64)) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    let (r_in, r_out) = radii;
    if r >= r_out {
        return Ok(1.0);
    }
    if r <= r_in {
        return Ok(0.0);
    }
    let target = 1.0 / (r * r);
    // S(F - 1) - 1/r^2 decreases from >= 0 at F = 0 to <= 0 at F = 1
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if s_real(spec, mid - 1.0)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `F_X(r)`, the fraction of eigenvalues of modulus at most `r`; 0 inside
/// the ring and 1 outside it.
pub fn radial_cdf(spec: &MeasureSpec, r: f64) -> Result<f64> {
    let radii = ring_radii(spec)?;
    check_monotone(spec)?;
    solve_radial(spec, r, radii)
}

/// Radial CDF tabulated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub cdf: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl RadialProfile {
    /// `n` equally spaced radii across the ring (`n >= 2`).
    pub fn new(spec: &MeasureSpec, n: usize) -> Result<Self> {
        let (r_in, r_out) = ring_radii(spec)?;
        check_monotone(spec)?;
        let n = n.max(2);
        let radii: Vec<f64> = (0..n)
            .map(|k| r_in + (r_out - r_in) * k as f64 / (n - 1) as f64)
            .collect();
        let cdf = radii
            .iter()
            .map(|&r| solve_radial(spec, r, (r_in, r_out)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialProfile {
            radii,
            cdf,
            inner_radius: r_in,
            outer_radius: r_out,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,F\n");
        for (r, f) in self.radii.iter().zip(&self.cdf) {
            out.push_str(&format!("{r:?},{f:?}\n"));
        }
        out
    }
}

/// R-transform of `|U_1 + ... + U_k|` for independent Haar unitaries,
/// `k (sqrt(1 + 4z^2) - 1) / (2z)`, evaluated as `2kz / (1 + sqrt(1 + 4z^2))`
/// (no cancellation at small `z`, value 0 at `z = 0`).
pub fn r_sum_unitaries(k: u32, z: Complex64) -> Complex64 {
    let root = (1.0 + 4.0 * z * z).sqrt();
    2.0 * k as f64 * z / (1.0 + root)
}

/// Green's function of `|U_1 + ... + U_k|`: the root of
/// `(k^2 - z^2) G^2 - (k - 2) z G + (k - 1) = 0` (from `R(G) + 1/G = z`)
/// with `G ~ 1/z` and `Im G <= 0` above the axis. For `k = 2` this is
/// `1/sqrt(z^2 - 4)`.
pub fn green_sum_unitaries(k: u32, z: Complex64) -> Complex64 {
    let kf = k as f64;
    let a = kf * kf - z * z;
    let b = -(kf - 2.0) * z;
    let c = Complex64::new(kf - 1.0, 0.0);
    if a.norm() == 0.0 {
        return -c / b;
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    let roots = [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)];
    let score = |g: &Complex64| {
        let wrong_half = if z.im > 0.0 && g.im > 0.0 { 1.0 } else { 0.0 };
        wrong_half + (z * g - 1.0).norm()
    };
    if score(&roots[0]) <= score(&roots[1]) {
        roots[0]
    } else {
        roots[1]
    }
}

/// Principal square root, with the cut along the negative reals approached
/// from above.
fn sqrt_upper(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

/// `G_{H^2}(z) = G_H(sqrt z) / sqrt z` for a symmetric measure `H`.
pub fn square_modulus_green(g: impl Fn(Complex64) -> Complex64, z: Complex64) -> Complex64 {
    let s = sqrt_upper(z);
    g(s) / s
}

/// `G_{P/a}(z) = a G_P(a z)`.
pub fn rescale_green(g: impl Fn(Complex64) -> Complex64, a: f64, z: Complex64) -> Complex64 {
    a * g(a * z)
}

/// Exact free cumulants `kappa_1..=kappa_K` of `|U_1 + ... + U_k|` from the
/// expansion `k (sqrt(1 + 4z^2) - 1)/(2z) = k sum_{n>=1} (-1)^(n+1) C_{n-1} z^(2n-1)`.
pub fn sum_unitaries_cumulants(k: u32, order: usize) -> CumulantSequence {
    let mut values = vec![Rat::from_integer(BigInt::from(0)); order];
    let mut catalan = BigInt::from(1);
    let mut n: u64 = 1;
    // kappa_{2n} = k (-1)^(n+1) C_{n-1}
    while (2 * n as usize) <= order {
        let sign = if n % 2 == 1 { 1 } else { -1 };
        values[2 * n as usize - 1] = Rat::from_integer(BigInt::from(k) * &catalan * sign);
        // C_n = C_{n-1} * 2(2n-1)/(n+1)
        catalan = catalan * BigInt::from(2 * (2 * n - 1)) / BigInt::from(n + 1);
        n += 1;
    }
    CumulantSequence::new(values)
}

/// Moments of `H^2` from the moments of a symmetric `H`: `m_k(H^2) = m_{2k}(H)`.
pub fn square_modulus_moments(m: &MomentSequence) -> Result<MomentSequence> {
    MomentSequence::new(m.values().iter().step_by(2).cloned().collect())
}

/// Moments of `P/a`: `m_k / a^k`.
pub fn rescale_moments(m: &MomentSequence, a: &Rat) -> Result<MomentSequence> {
    let mut scale = Rat::from_integer(BigInt::from(1));
    let mut out = Vec::with_capacity(m.values().len());
    for v in m.values() {
        out.push(v / &scale);
        scale *= a;
    }
    MomentSequence::new(out)
}

/// Moments to order `order` of `|U_1 + U_2|^2 / 2`, computed from the
/// cumulants of `|U_1 + U_2|`; these are the arcsine moments.
pub fn arcsine_chain_moments(order: usize) -> Result<MomentSequence> {
    let kappa = sum_unitaries_cumulants(2, 2 * order);
    let h = moments_from_cumulants(&kappa)?;
    let h2 = square_modulus_moments(&h)?;
    rescale_moments(&h2, &Rat::from_integer(BigInt::from(2)))
}
