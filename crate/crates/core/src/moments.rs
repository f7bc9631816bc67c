//! Exact moments and free cumulants.
//!
//! Moments come from three independent routes: Fuss–Catalan numbers, the
//! formal expansion of the resolvent polynomial at `z = infinity`, and
//! Lagrange inversion of the S-transform series. Numerical moments of a
//! density provide a floating-point check.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::measures::{MeasureSpec, ResolventPolynomial};
use crate::poly::{rat_to_f64, Rat, RatPoly};
use crate::quadrature::{integrate_moment, DensitySource};
use crate::series::Series;

/// Default cap on the expansion order.
pub const DEFAULT_MAX_ORDER: usize = 64;

/// Exact moments `m_0..=m_K`, with `m_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequence {
    values: Vec<Rat>,
}

/// Exact free cumulants `kappa_1..=kappa_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantSequence {
    values: Vec<Rat>,
}

impl MomentSequence {
    /// `values[0]` must be 1.
    pub fn new(values: Vec<Rat>) -> Result<Self> {
        if values.first() != Some(&Rat::one()) {
            return Err(Error::domain("a moment sequence starts with m_0 = 1"));
        }
        Ok(MomentSequence { values })
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Highest order `K`.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<&Rat> {
        self.values.get(k)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(rat_to_f64).collect()
    }

    /// Determinants of the Hankel matrices `[m_{i+j}]_{i,j<k}` for
    /// `k = 1..=max_k` (as far as the sequence reaches).
    pub fn hankel_determinants(&self, max_k: usize) -> Vec<Rat> {
        (1..=max_k)
            .take_while(|k| 2 * (k - 1) <= self.order())
            .map(|k| {
                let m: Vec<Vec<Rat>> = (0..k)
                    .map(|i| (0..k).map(|j| self.values[i + j].clone()).collect())
                    .collect();
                determinant(m)
            })
            .collect()
    }

    /// Necessary condition for a positive measure: Hankel determinants up
    /// to size 4 are nonnegative.
    pub fn hankel_nonnegative(&self) -> bool {
        self.hankel_determinants(4).iter().all(|d| !d.is_negative())
    }
}

impl CumulantSequence {
    pub fn new(values: Vec<Rat>) -> Self {
        CumulantSequence { values }
    }

    /// `values[k-1] = kappa_k`.
    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    pub fn kappa(&self, k: usize) -> Option<&Rat> {
        k.checked_sub(1).and_then(|i| self.values.get(i))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(rat_to_f64).collect()
    }
}

impl fmt::Display for MomentSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn determinant(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            let factor = &m[r][col] / &p;
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let v = &factor * &m[col][c];
                m[r][c] -= v;
            }
        }
    }
    det
}

/// `C_s(n) = binom(sn + n, n) / (sn + 1)` for rational `s`, with the
/// binomial as a falling-factorial product.
pub fn fuss_catalan(s: &Rat, n: u64) -> Result<Rat> {
    let sn = s * Rat::from_integer(BigInt::from(n));
    let denom = &sn + Rat::one();
    if denom.is_zero() {
        return Err(Error::domain(format!(
            "fuss_catalan: s n + 1 = 0 for s = {s}, n = {n}"
        )));
    }
    let top = &sn + Rat::from_integer(BigInt::from(n));
    let mut binom = Rat::one();
    for i in 0..n {
        binom *= &top - Rat::from_integer(BigInt::from(i));
        binom /= Rat::from_integer(BigInt::from(i + 1));
    }
    Ok(binom / denom)
}

/// Exact leading coefficient `v_0 = m_1` of `w ~ v_0 / z`.
fn exact_first_moment(poly: &ResolventPolynomial, balance: &RatPoly) -> Result<Rat> {
    if let Some(m) = poly.first_moment() {
        return Ok(m.clone());
    }
    // polynomial built from rows: look for a rational root near the
    // numerical first moment
    let target = poly.first_moment_f64();
    let candidate = rationalize(target, 1_000_000)
        .ok_or_else(|| Error::SeriesAmbiguity(format!("first moment {target} is not rational")))?;
    if balance.eval(&candidate).is_zero() {
        Ok(candidate)
    } else {
        Err(Error::SeriesAmbiguity(format!(
            "first moment {target} is not rational"
        )))
    }
}

/// Best rational approximation with denominator at most `max_den`.
fn rationalize(x: f64, max_den: i64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-15 || ((h1 as f64) / (k1 as f64) - x).abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 != 0).then(|| Rat::new(BigInt::from(h1), BigInt::from(k1)))
}

/// Moments `m_0..=m_K` from the expansion of the physical branch at
/// infinity. With `w = u v(u)`, `u = 1/z`, the equation `u^Z P = 0` becomes
/// a power series in `u` whose lowest order fixes `v_0 = m_1`; each further
/// order is linear in the next coefficient of `v`, and `G = (1+w)/z` gives
/// `m_k = v_{k-1}`.
pub fn moments_from_resolvent(poly: &ResolventPolynomial, k_max: usize) -> Result<MomentSequence> {
    let z_deg = poly.z_degree();
    // F(v, u) = sum_ij c_ij v^i u^(i - j + Z); group by exponent offset
    let offsets: Vec<(usize, usize, i64)> = (0..=poly.w_degree())
        .flat_map(|i| (0..=z_deg).map(move |j| (i, j, i as i64 - j as i64 + z_deg as i64)))
        .filter(|&(i, j, _)| !poly.coeff(i, j).is_zero())
        .collect();
    let e0 = offsets
        .iter()
        .map(|o| o.2)
        .min()
        .expect("nonzero polynomial");
    let balance = RatPoly::new(
        (0..=poly.w_degree())
            .map(|i| {
                offsets
                    .iter()
                    .filter(|o| o.0 == i && o.2 == e0)
                    .map(|o| poly.coeff(o.0, o.1))
                    .fold(Rat::zero(), |a, b| a + b)
            })
            .collect(),
    );
    let v0 = exact_first_moment(poly, &balance)?;
    if !balance.eval(&v0).is_zero() {
        return Err(Error::SeriesAmbiguity(format!(
            "m_1 = {v0} does not solve the large-z balance"
        )));
    }
    // derivative of the balance at v0 multiplies each new coefficient
    let lin: Rat = balance
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rat::from_integer(BigInt::from(i)) * pow(&v0, i - 1))
        .fold(Rat::zero(), |a, b| a + b);
    if lin.is_zero() {
        return Err(Error::SeriesAmbiguity(
            "the large-z balance has a multiple root at m_1".into(),
        ));
    }
    if k_max == 0 {
        return MomentSequence::new(vec![Rat::one()]);
    }
    let order = k_max - 1;
    let mut v = vec![v0];
    v.resize(order + 1, Rat::zero());
    for n in 1..=order {
        let residual = f_coeff(poly, &offsets, e0, &v[..n], n);
        v[n] = -residual / &lin;
    }
    let mut m = vec![Rat::one()];
    m.extend(v);
    MomentSequence::new(m)
}

/// Coefficient of `u^(e0 + n)` in `F(v, u)` with `v` truncated to the
/// given coefficients (the next one set to zero).
fn f_coeff(
    poly: &ResolventPolynomial,
    offsets: &[(usize, usize, i64)],
    e0: i64,
    v: &[Rat],
    n: usize,
) -> Rat {
    let vs = Series::new(v.to_vec(), n);
    let mut powers = vec![Series::one(n)];
    for _ in 0..poly.w_degree() {
        let next = powers.last().unwrap().mul(&vs);
        powers.push(next);
    }
    let mut acc = Rat::zero();
    for &(i, j, e) in offsets {
        let shift = e - e0;
        if shift < 0 || shift as usize > n {
            continue;
        }
        let idx = n - shift as usize;
        acc += poly.coeff(i, j) * powers[i].coeff(idx);
    }
    acc
}

fn pow(x: &Rat, k: usize) -> Rat {
    (0..k).fold(Rat::one(), |a, _| a * x)
}

/// Moments from the S-transform series: `chi(w) = w S(w) / (1 + w)` is the
/// compositional inverse of `psi(z) = sum_{k>=1} m_k z^k`.
pub fn moments_from_s_transform(spec: &MeasureSpec, k_max: usize) -> Result<MomentSequence> {
    if k_max == 0 {
        return MomentSequence::new(vec![Rat::one()]);
    }
    let s = spec.s_series(k_max)?;
    let one_plus = Series::new(vec![Rat::one(), Rat::one()], k_max);
    let chi = s.mul(&one_plus.recip()?).shift_up(1);
    let psi = chi.reversion()?;
    let mut m = psi.into_coeffs();
    m[0] = Rat::one();
    MomentSequence::new(m)
}

/// Free cumulants from `C(z M(z)) = M(z)`, i.e. `C = M o (z M)^{-1}`.
pub fn cumulants_from_moments(m: &MomentSequence) -> Result<CumulantSequence> {
    let k = m.order();
    if k == 0 {
        return Ok(CumulantSequence::new(Vec::new()));
    }
    let ms = Series::new(m.values().to_vec(), k);
    let y = ms.shift_up(1);
    let inv = y.reversion()?;
    let c = ms.compose(&inv)?;
    Ok(CumulantSequence::new(c.coeffs()[1..].to_vec()))
}

/// Moments from free cumulants: `y = z M(z)` is the inverse of `y / C(y)`.
pub fn moments_from_cumulants(kappa: &CumulantSequence) -> Result<MomentSequence> {
    let k = kappa.values().len();
    if k == 0 {
        return MomentSequence::new(vec![Rat::one()]);
    }
    let mut c = vec![Rat::one()];
    c.extend(kappa.values().iter().cloned());
    // [z^(K+1)] y = m_K involves kappa_1..kappa_K only
    let cs = Series::new(c, k + 1);
    let z_of_y = cs.recip()?.shift_up(1);
    let y = z_of_y.reversion()?;
    MomentSequence::new(y.coeffs()[1..].to_vec())
}

/// `int x^k rho(x) dx` for `k = 0..=K` by quadrature to about `1e-9`
/// (resolvent densities carry ~1e-11 relative noise, so tighter targets
/// stall); the atom at zero contributes to `m_0` only.
pub fn moments_from_density(src: &impl DensitySource, k_max: usize) -> Result<Vec<f64>> {
    let atom = src.atom_at_zero()?;
    (0..=k_max)
        .map(|k| {
            let v = integrate_moment(src, k as u32, 1e-9)?;
            Ok(if k == 0 { v + atom } else { v })
        })
        .collect()
}

/// Empirical moments `(1/n) sum x_i^k`.
pub fn moments_from_samples(xs: &[f64], k_max: usize) -> Vec<f64> {
    let n = xs.len().max(1) as f64;
    (0..=k_max)
        .map(|k| xs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / n)
        .collect()
}

/// `C(2k, k) / 2^k`, the moments of the arcsine law on `[0, 2]`.
pub fn arcsine_moment(k: u64) -> Rat {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(2 * k - i) / BigInt::from(i + 1);
    }
    Rat::new(
        c,
        BigInt::from(2).pow(k.to_u32().expect("moment order fits u32")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_resolvent;
    use crate::poly::{rat, rat_int};

    fn spec(s: &str) -> MeasureSpec {
        s.parse().unwrap()
    }

    #[test]
    fn fuss_catalan_values() {
        let one = rat_int(1);
        let cat: Vec<Rat> = (0..5).map(|n| fuss_catalan(&one, n).unwrap()).collect();
        assert_eq!(cat, [1, 1, 2, 5, 14].map(rat_int));
        assert_eq!(fuss_catalan(&rat_int(2), 2).unwrap(), rat_int(3));
        assert_eq!(fuss_catalan(&rat_int(3), 2).unwrap(), rat_int(4));
        assert_eq!(fuss_catalan(&rat(7, 3), 0).unwrap(), rat_int(1));
        assert!(fuss_catalan(&rat(-1, 2), 2).is_err());
    }

    #[test]
    fn catalan_recurrence() {
        // C_{n+1} = sum C_i C_{n-i}
        let c: Vec<Rat> = (0..12)
            .map(|n| fuss_catalan(&rat_int(1), n).unwrap())
            .collect();
        for n in 0..11 {
            let s: Rat = (0..=n).map(|i| &c[i] * &c[n - i]).sum();
            assert_eq!(s, c[n + 1]);
        }
    }

    #[test]
    fn arcsine_from_resolvent() {
        let m = moments_from_resolvent(&build_resolvent(&spec("as")), 6).unwrap();
        assert_eq!(
            &m.values()[..4],
            &[rat_int(1), rat_int(1), rat(3, 2), rat(5, 2)]
        );
        for k in 0..=6 {
            assert_eq!(m.values()[k as usize], arcsine_moment(k));
        }
    }

    #[test]
    fn identity_and_rectangular() {
        let m = moments_from_resolvent(&build_resolvent(&MeasureSpec::identity()), 5).unwrap();
        assert!(m.values().iter().all(|v| v.is_one()));
        // MP(c): m_2 = 1 + c
        let m = moments_from_resolvent(&build_resolvent(&spec("mp(1/4)")), 3).unwrap();
        assert_eq!(m.values()[2], rat(5, 4));
        assert_eq!(m, moments_from_s_transform(&spec("mp(1/4)"), 3).unwrap());
    }

    #[test]
    fn fractional_clearing() {
        let s = spec("mp(1)^(1/2)");
        let a = moments_from_resolvent(&build_resolvent(&s), 10).unwrap();
        let b = moments_from_s_transform(&s, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[1], rat_int(1));
    }

    #[test]
    fn irrational_mean_is_ambiguous() {
        let p = build_resolvent(&spec("rat(2,1;1,1)^(1/2)"));
        assert!(matches!(
            moments_from_resolvent(&p, 3),
            Err(Error::SeriesAmbiguity(_))
        ));
    }

    #[test]
    fn cumulants() {
        let m = moments_from_s_transform(&spec("mp(1)"), 10).unwrap();
        let k = cumulants_from_moments(&m).unwrap();
        assert!(k.values().iter().all(|v| v.is_one()));
        let point = MomentSequence::new(vec![rat_int(1); 6]).unwrap();
        let k = cumulants_from_moments(&point).unwrap();
        assert_eq!(k.kappa(1), Some(&rat_int(1)));
        assert!(k.values()[1..].iter().all(|v| v.is_zero()));
        let m = moments_from_s_transform(&spec("as"), 6).unwrap();
        let k = cumulants_from_moments(&m).unwrap();
        assert_eq!(&k.values()[..2], &[rat_int(1), rat(1, 2)]);
        assert_eq!(moments_from_cumulants(&k).unwrap(), m);
    }

    #[test]
    fn hankel() {
        let m = moments_from_s_transform(&spec("mp(1)"), 8).unwrap();
        // Hankel determinants of the Catalan numbers are all 1
        assert_eq!(m.hankel_determinants(4), vec![rat_int(1); 4]);
        assert!(m.hankel_nonnegative());
        let bad = MomentSequence::new(vec![rat_int(1), rat_int(2), rat_int(1)]).unwrap();
        assert!(!bad.hankel_nonnegative());
    }

    #[test]
    fn rationalize_fractions() {
        assert_eq!(rationalize(0.75, 1000), Some(rat(3, 4)));
        assert_eq!(rationalize(1.0 / 3.0, 1000), Some(rat(1, 3)));
    }
}
