//! Probability measures described by factored S-transforms.
//!
//! A [`MeasureSpec`] is a product of elementary factors raised to rational
//! exponents, e.g. `S(w) = (w+2)/(2(1+w)) * (1+w)^{-1}` for the Bures law.
//! Free multiplicative convolution multiplies S-transforms, so it is just
//! concatenation of factor lists, and free powers scale every exponent.

mod grammar;
mod resolvent_poly;
mod transforms;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::{exact_pow, Rat, RatPoly};
use crate::series::Series;

pub use resolvent_poly::{build_resolvent, ResolventPolynomial};
pub use transforms::{r_from_g, s_from_r, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL};

/// Elementary S-transform factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// Marchenko–Pastur with rectangularity `c`: `1/(1+cw)`.
    Mp(Rat),
    /// Arcsine law on `[0,2]`: `(w+2)/(2(1+w))`.
    Arcsine,
    /// Arbitrary rational function `numer(w)/denom(w)`.
    Rational { numer: RatPoly, denom: RatPoly },
}

impl FactorKind {
    pub fn mp(c: Rat) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::domain(format!("mp({c}) needs c > 0")));
        }
        Ok(FactorKind::Mp(c))
    }

    pub fn rational(numer: RatPoly, denom: RatPoly) -> Result<Self> {
        if numer.is_zero() || denom.is_zero() {
            return Err(Error::domain("rational factor with a zero polynomial"));
        }
        if numer.coeff(0).is_zero() || denom.coeff(0).is_zero() {
            return Err(Error::domain(
                "rational factor must be finite and nonzero at w = 0",
            ));
        }
        Ok(FactorKind::Rational { numer, denom })
    }

    /// Numerator and denominator polynomials in `w`.
    pub fn numer_denom(&self) -> (RatPoly, RatPoly) {
        match self {
            FactorKind::Mp(c) => (RatPoly::one(), RatPoly::linear(Rat::one(), c.clone())),
            FactorKind::Arcsine => (RatPoly::from_ints(&[2, 1]), RatPoly::from_ints(&[2, 2])),
            FactorKind::Rational { numer, denom } => (numer.clone(), denom.clone()),
        }
    }

    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        let (n, d) = self.numer_denom();
        let dv = d.eval_complex(w);
        if dv.norm() <= 1e-14 * d.abs_scale(w.norm()) {
            return Err(Error::Pole(format!("{self} has a pole at w = {w}")));
        }
        Ok(n.eval_complex(w) / dv)
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Mp(c) => write!(f, "mp({})", fmt_rat(c)),
            FactorKind::Arcsine => write!(f, "as"),
            FactorKind::Rational { numer, denom } => {
                let list =
                    |p: &RatPoly| p.coeffs().iter().map(fmt_rat).collect::<Vec<_>>().join(",");
                write!(f, "rat({};{})", list(numer), list(denom))
            }
        }
    }
}

pub(crate) fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub exponent: Rat,
}

/// S-transform as a product of factors. The empty product is the point mass
/// at 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MeasureSpec {
    factors: Vec<Factor>,
}

impl MeasureSpec {
    pub fn identity() -> Self {
        MeasureSpec::default()
    }

    pub fn from_kind(kind: FactorKind) -> Self {
        MeasureSpec {
            factors: vec![Factor {
                kind,
                exponent: Rat::one(),
            }],
        }
    }

    pub fn mp(c: Rat) -> Result<Self> {
        Ok(Self::from_kind(FactorKind::mp(c)?))
    }

    pub fn arcsine() -> Self {
        Self::from_kind(FactorKind::Arcsine)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Evaluates `S(w)` with principal branches for fractional powers.
    pub fn s_eval(&self, w: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for factor in &self.factors {
            let base = factor.kind.eval(w)?;
            let e = &factor.exponent;
            let term = if e.is_integer() {
                let k = e
                    .to_integer()
                    .to_i32()
                    .ok_or_else(|| Error::domain("exponent too large"))?;
                if k < 0 && base.norm() == 0.0 {
                    return Err(Error::Pole(format!("{} vanishes at w = {w}", factor.kind)));
                }
                base.powi(k)
            } else {
                if base.norm() == 0.0 {
                    if e.is_negative() {
                        return Err(Error::Pole(format!("{} vanishes at w = {w}", factor.kind)));
                    }
                    Complex64::new(0.0, 0.0)
                } else {
                    base.powf(crate::poly::rat_to_f64(e))
                }
            };
            acc *= term;
        }
        Ok(acc)
    }

    pub fn boxtimes(&self, other: &MeasureSpec) -> MeasureSpec {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        MeasureSpec { factors }
    }

    pub fn free_power(&self, s: &Rat) -> Result<MeasureSpec> {
        if !s.is_positive() {
            return Err(Error::domain(format!("free power needs s > 0, got {s}")));
        }
        Ok(MeasureSpec {
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    kind: f.kind.clone(),
                    exponent: &f.exponent * s,
                })
                .collect(),
        })
    }

    /// Merges repeated factor kinds (summing exponents, first-seen order) and
    /// drops zero exponents. The S-transform is unchanged.
    pub fn canonical(&self) -> MeasureSpec {
        let mut out: Vec<Factor> = Vec::new();
        for f in &self.factors {
            match out.iter_mut().find(|g| g.kind == f.kind) {
                Some(g) => g.exponent += &f.exponent,
                None => out.push(f.clone()),
            }
        }
        out.retain(|f| !f.exponent.is_zero());
        MeasureSpec { factors: out }
    }

    /// Least common multiple of the exponent denominators.
    pub fn clearing_power(&self) -> u32 {
        self.factors
            .iter()
            .fold(num_bigint::BigInt::one(), |acc, f| {
                acc.lcm(f.exponent.denom())
            })
            .to_u32()
            .expect("exponent denominators fit in u32")
    }

    /// `S(0)` when it is rational.
    pub fn s_at_zero(&self) -> Option<Rat> {
        let mut acc = Rat::one();
        for f in &self.factors {
            let (n, d) = f.kind.numer_denom();
            let base = n.coeff(0) / d.coeff(0);
            acc *= exact_pow(&base, &f.exponent)?;
        }
        Some(acc)
    }

    /// First moment `1/S(0)` when it is rational.
    pub fn first_moment(&self) -> Option<Rat> {
        self.s_at_zero().map(|s| s.recip())
    }

    /// `S(w)` as an exact power series to order `order`.
    pub fn s_series(&self, order: usize) -> Result<Series> {
        let mut acc = Series::one(order);
        for f in &self.factors {
            let (n, d) = f.kind.numer_denom();
            let ns = Series::from_poly(&n, order).pow_rat(&f.exponent)?;
            let ds = Series::from_poly(&d, order).pow_rat(&-&f.exponent)?;
            acc = acc.mul(&ns).mul(&ds);
        }
        Ok(acc)
    }

    pub fn build_resolvent(&self) -> ResolventPolynomial {
        build_resolvent(self)
    }
}

pub fn boxtimes(a: &MeasureSpec, b: &MeasureSpec) -> MeasureSpec {
    a.boxtimes(b)
}

pub fn free_power(a: &MeasureSpec, s: &Rat) -> Result<MeasureSpec> {
    a.free_power(s)
}

pub fn s_eval(spec: &MeasureSpec, w: Complex64) -> Result<Complex64> {
    spec.s_eval(w)
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|fac| {
                let e = &fac.exponent;
                if e.is_one() {
                    fac.kind.to_string()
                } else if e.is_integer() && e.is_positive() {
                    format!("{}^{}", fac.kind, e.numer())
                } else {
                    format!("{}^({})", fac.kind, fmt_rat(e))
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        grammar::parse(s)
    }
}

/// Parses a decimal (`0.25`), fraction (`1/4`) or integer into an exact
/// rational.
pub fn parse_rational(s: &str) -> Result<Rat> {
    grammar::parse_number_str(s)
}
