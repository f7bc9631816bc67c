use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use super::MeasureSpec;
use crate::error::{Error, Result};
use crate::poly::{rat_to_f64, Rat, RatPoly};

/// Bivariate polynomial `P(w, z) = sum c_ij w^i z^j` with exact rational
/// coefficients, stored as one polynomial in `w` per power of `z`.
#[derive(Clone, Debug)]
pub struct ResolventPolynomial {
    rows: Vec<RatPoly>,
    rows_f64: Vec<Vec<f64>>,
    /// Rows re-expanded in `u = 1 + w`.
    rows_u_f64: Vec<Vec<f64>>,
    w_degree: usize,
    z_degree: usize,
    clearing_power: u32,
    first_moment: Option<Rat>,
    first_moment_f64: f64,
    spec: Option<MeasureSpec>,
}

impl PartialEq for ResolventPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl ResolventPolynomial {
    /// Builds from `rows[j]` = coefficient polynomial of `z^j`. The first
    /// moment is recovered from the dominant balance at large `z`.
    pub fn from_rows(rows: Vec<RatPoly>) -> Result<Self> {
        let mut rows = rows;
        while rows.last().is_some_and(RatPoly::is_zero) {
            rows.pop();
        }
        if rows.is_empty() {
            return Err(Error::domain("zero resolvent polynomial"));
        }
        let w_degree = rows.iter().filter_map(RatPoly::degree).max().unwrap_or(0);
        if w_degree == 0 {
            return Err(Error::domain("resolvent polynomial does not involve w"));
        }
        let clearing_power = (rows.len() - 1) as u32;
        let mut p = ResolventPolynomial {
            rows_f64: rows.iter().map(RatPoly::to_f64).collect(),
            rows_u_f64: rows.iter().map(shift_to_u).collect(),
            z_degree: rows.len() - 1,
            rows,
            w_degree,
            clearing_power: clearing_power.max(1),
            first_moment: None,
            first_moment_f64: f64::NAN,
            spec: None,
        };
        p.first_moment_f64 = p.dominant_balance_moment()?;
        Ok(p)
    }

    pub fn coeff(&self, i: usize, j: usize) -> Rat {
        self.rows.get(j).map_or_else(Rat::zero, |r| r.coeff(i))
    }

    /// Coefficient polynomial in `w` of `z^j`.
    pub fn row(&self, j: usize) -> &RatPoly {
        &self.rows[j]
    }

    /// Coefficient polynomial in `z` of `w^i`.
    pub fn column(&self, i: usize) -> RatPoly {
        RatPoly::new((0..=self.z_degree).map(|j| self.coeff(i, j)).collect())
    }

    pub fn w_degree(&self) -> usize {
        self.w_degree
    }

    pub fn z_degree(&self) -> usize {
        self.z_degree
    }

    pub fn clearing_power(&self) -> u32 {
        self.clearing_power
    }

    /// Exact first moment `1/S(0)` when known.
    pub fn first_moment(&self) -> Option<&Rat> {
        self.first_moment.as_ref()
    }

    pub fn first_moment_f64(&self) -> f64 {
        self.first_moment_f64
    }

    pub fn spec(&self) -> Option<&MeasureSpec> {
        self.spec.as_ref()
    }

    /// Coefficients of `w^0..=w^deg` at the given `z`.
    pub fn w_coeffs_at(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs_at(&self.rows_f64, z)
    }

    /// Coefficients of `u^0..=u^deg` at `z`, where `u = 1 + w`.
    pub fn u_coeffs_at(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs_at(&self.rows_u_f64, z)
    }

    /// `sum_j |c_ij| |z|^j` for each power `i` of `w`, the scale against
    /// which the cancellation of a coefficient at `z` is judged.
    pub fn w_coeff_scales(&self, z: Complex64) -> Vec<f64> {
        Self::scales(&self.rows_f64, self.w_degree, z.norm())
    }

    pub fn u_coeff_scales(&self, z: Complex64) -> Vec<f64> {
        Self::scales(&self.rows_u_f64, self.w_degree, z.norm())
    }

    fn scales(rows: &[Vec<f64>], deg: usize, az: f64) -> Vec<f64> {
        let mut out = vec![0.0; deg + 1];
        let mut zp = 1.0;
        for row in rows {
            for (i, &c) in row.iter().enumerate() {
                out[i] += zp * c.abs();
            }
            zp *= az;
        }
        out
    }

    fn coeffs_at(&self, rows: &[Vec<f64>], z: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::zero(); self.w_degree + 1];
        let mut zp = Complex64::one();
        for row in rows {
            for (i, &c) in row.iter().enumerate() {
                out[i] += zp * c;
            }
            zp *= z;
        }
        out
    }

    pub fn eval(&self, w: Complex64, z: Complex64) -> Complex64 {
        let mut acc = Complex64::zero();
        for c in self.w_coeffs_at(z).iter().rev() {
            acc = acc * w + c;
        }
        acc
    }

    /// `sum |c_ij| |w|^i |z|^j`, the scale against which `|P(w,z)|` is judged.
    pub fn abs_scale(&self, w: Complex64, z: Complex64) -> f64 {
        let (aw, az) = (w.norm(), z.norm());
        let mut acc = 0.0;
        let mut zp = 1.0;
        for row in &self.rows_f64 {
            let mut r = 0.0;
            for c in row.iter().rev() {
                r = r * aw + c.abs();
            }
            acc += r * zp;
            zp *= az;
        }
        acc
    }

    /// Positive real `v` with `w ~ v/z` as `z -> infinity`.
    fn dominant_balance_moment(&self) -> Result<f64> {
        // P(v/z, z) = sum c_ij v^i z^(j-i); keep the largest power of z
        let mut top: Option<i64> = None;
        for (j, row) in self.rows.iter().enumerate() {
            for (i, c) in row.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    let e = j as i64 - i as i64;
                    top = Some(top.map_or(e, |t| t.max(e)));
                }
            }
        }
        let top = top.unwrap();
        let mut balance = vec![0.0; self.w_degree + 1];
        for (j, row) in self.rows.iter().enumerate() {
            for (i, c) in row.coeffs().iter().enumerate() {
                if j as i64 - i as i64 == top {
                    balance[i] += rat_to_f64(c);
                }
            }
        }
        let roots = crate::roots::poly_roots(
            &balance
                .iter()
                .map(|&c| Complex64::new(c, 0.0))
                .collect::<Vec<_>>(),
        )?;
        roots
            .iter()
            .filter(|r| r.re > 0.0 && r.im.abs() <= 1e-8 * r.norm())
            .map(|r| r.re)
            .fold(None, |acc: Option<f64>, r| {
                Some(acc.map_or(r, |a| a.max(r)))
            })
            .ok_or_else(|| Error::domain("no positive first moment in the large-z balance"))
    }
}

/// Exact Taylor shift `p(w) -> p(u - 1)`, rounded to `f64`.
fn shift_to_u(p: &RatPoly) -> Vec<f64> {
    let mut acc = RatPoly::zero();
    let u_minus_one = RatPoly::from_ints(&[-1, 1]);
    for c in p.coeffs().iter().rev() {
        acc = &(&acc * &u_minus_one) + &RatPoly::constant(c.clone());
    }
    acc.to_f64()
}

/// Clears denominators and fractional powers in `z w S(w) = 1 + w`.
///
/// With `Q` the lcm of exponent denominators, `S^Q = A/B` for polynomials
/// `A`, `B`, and the result is `z^Q w^Q A - (1+w)^Q B`, divided by the
/// common factor of its `z` rows, scaled to primitive integer coefficients
/// and signed so the top `w` power has a positive lowest-`z` coefficient.
pub fn build_resolvent(spec: &MeasureSpec) -> ResolventPolynomial {
    let q = spec.clearing_power();
    let mut a = RatPoly::one();
    let mut b = RatPoly::one();
    for f in spec.factors() {
        let (n, d) = f.kind.numer_denom();
        let k = &f.exponent * Rat::from_integer(q.into());
        let k = k.to_integer();
        let m: u32 = num_traits::ToPrimitive::to_u32(&k.abs()).expect("exponent fits in u32");
        if k.is_positive() {
            a = &a * &n.pow(m);
            b = &b * &d.pow(m);
        } else {
            a = &a * &d.pow(m);
            b = &b * &n.pow(m);
        }
    }
    let w = RatPoly::from_ints(&[0, 1]);
    let one_plus_w = RatPoly::from_ints(&[1, 1]);
    let top = &w.pow(q) * &a;
    let bottom = -&(&one_plus_w.pow(q) * &b);

    let content = top.gcd(&bottom);
    let top = top.div_rem(&content).0;
    let bottom = bottom.div_rem(&content).0;

    let mut rows = vec![RatPoly::zero(); q as usize + 1];
    rows[0] = bottom;
    rows[q as usize] = top;

    // primitive integer coefficients
    let lcm = rows.iter().fold(num_bigint::BigInt::one(), |acc, r| {
        num_integer::Integer::lcm(&acc, &r.denom_lcm())
    });
    let lcm = Rat::from_integer(lcm);
    rows = rows.iter().map(|r| r.scale(&lcm)).collect();
    let g = rows.iter().fold(num_bigint::BigInt::zero(), |acc, r| {
        num_integer::Integer::gcd(&acc, &r.numer_gcd())
    });
    let mut scale = Rat::from_integer(g).recip();

    let w_degree = rows.iter().filter_map(RatPoly::degree).max().unwrap_or(0);
    let lead = rows
        .iter()
        .map(|r| r.coeff(w_degree))
        .find(|c| !c.is_zero())
        .expect("some row reaches the top degree");
    if lead.is_negative() {
        scale = -scale;
    }
    rows = rows.iter().map(|r| r.scale(&scale)).collect();

    let first_moment = spec.first_moment();
    let first_moment_f64 = match &first_moment {
        Some(m) => rat_to_f64(m),
        None => {
            let s0 = spec
                .s_eval(Complex64::zero())
                .expect("S(0) is finite and nonzero");
            1.0 / s0.re
        }
    };
    ResolventPolynomial {
        rows_f64: rows.iter().map(RatPoly::to_f64).collect(),
        rows_u_f64: rows.iter().map(shift_to_u).collect(),
        w_degree,
        z_degree: rows.len() - 1,
        rows,
        clearing_power: q,
        first_moment,
        first_moment_f64,
        spec: Some(spec.clone()),
    }
}

fn fmt_coeff(c: &Rat) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("({}/{})", c.numer(), c.denom())
    }
}

/// Formats as a sum of monomials, highest `w` power first, e.g.
/// `w^3 - z^2 w^2 + 3w^2 + 3w + 1`.
impl fmt::Display for ResolventPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in (0..=self.w_degree).rev() {
            for j in (0..=self.z_degree).rev() {
                let c = self.coeff(i, j);
                if c.is_zero() {
                    continue;
                }
                let mag = c.abs();
                if first {
                    if c.is_negative() {
                        write!(f, "-")?;
                    }
                } else {
                    write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
                }
                first = false;
                let mut mono = String::new();
                if j > 0 {
                    mono.push_str(if j == 1 { "z".into() } else { format!("z^{j}") }.as_str());
                }
                if i > 0 {
                    if !mono.is_empty() {
                        mono.push(' ');
                    }
                    mono.push_str(if i == 1 { "w".into() } else { format!("w^{i}") }.as_str());
                }
                if !mag.is_one() || mono.is_empty() {
                    write!(f, "{}", fmt_coeff(&mag))?;
                }
                write!(f, "{mono}")?;
            }
        }
        Ok(())
    }
}
