//! Truncated formal power series with exact rational coefficients.
//!
//! Every series carries an explicit order `K`: coefficients of `x^0..=x^K`
//! are exact, higher ones are discarded.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{exact_pow, Rat, RatPoly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<Rat>,
}

impl Series {
    /// Series of order `order` (keeps `order + 1` coefficients).
    pub fn new(mut coeffs: Vec<Rat>, order: usize) -> Self {
        coeffs.resize(order + 1, Rat::zero());
        Series { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::new(vec![Rat::one()], order)
    }

    pub fn from_poly(p: &RatPoly, order: usize) -> Self {
        let mut c = p.coeffs().to_vec();
        c.truncate(order + 1);
        Self::new(c, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Rat {
        &self.coeffs[i]
    }

    pub fn into_coeffs(self) -> Vec<Rat> {
        self.coeffs
    }

    pub fn mul(&self, other: &Series) -> Series {
        let k = self.order().min(other.order());
        let mut out = vec![Rat::zero(); k + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(k + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(k + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Series { coeffs: out }
    }

    pub fn add(&self, other: &Series) -> Series {
        let k = self.order().min(other.order());
        Series {
            coeffs: (0..=k)
                .map(|i| &self.coeffs[i] + &other.coeffs[i])
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiply by `x^k`, dropping terms beyond the order.
    pub fn shift_up(&self, k: usize) -> Series {
        let n = self.coeffs.len();
        let mut out = vec![Rat::zero(); n];
        for i in 0..n.saturating_sub(k) {
            out[i + k] = self.coeffs[i].clone();
        }
        Series { coeffs: out }
    }

    /// Divide by `x^k`; the dropped low coefficients must vanish. The order
    /// shrinks by `k`.
    pub fn shift_down(&self, k: usize) -> Result<Series> {
        if self.coeffs[..k].iter().any(|c| !c.is_zero()) {
            return Err(Error::SeriesAmbiguity(format!(
                "series has a nonzero coefficient below x^{k}"
            )));
        }
        Ok(Series {
            coeffs: self.coeffs[k..].to_vec(),
        })
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Series> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(Error::SeriesAmbiguity(
                "reciprocal of a series with zero constant term".into(),
            ));
        }
        let inv0 = c0.recip();
        let n = self.coeffs.len();
        let mut out: Vec<Rat> = Vec::with_capacity(n);
        out.push(inv0.clone());
        for k in 1..n {
            let mut acc = Rat::zero();
            for j in 1..=k {
                acc += &self.coeffs[j] * &out[k - j];
            }
            out.push(-acc * &inv0);
        }
        Ok(Series { coeffs: out })
    }

    /// `self^alpha` for rational `alpha`, using the recurrence from
    /// `f g' = alpha f' g`. The constant term must have an exact rational
    /// `alpha` power.
    pub fn pow_rat(&self, alpha: &Rat) -> Result<Series> {
        let f0 = &self.coeffs[0];
        if f0.is_zero() {
            return Err(Error::SeriesAmbiguity(
                "fractional power of a series with zero constant term".into(),
            ));
        }
        let g0 = exact_pow(f0, alpha).ok_or_else(|| {
            Error::SeriesAmbiguity(format!("constant term {f0} has no rational power {alpha}"))
        })?;
        let n = self.coeffs.len();
        let mut g: Vec<Rat> = Vec::with_capacity(n);
        g.push(g0);
        let alpha1 = alpha + Rat::one();
        for m in 1..n {
            let mut acc = Rat::zero();
            for k in 1..=m {
                let f = &self.coeffs[k];
                if f.is_zero() {
                    continue;
                }
                let w = &alpha1 * Rat::from_integer(k.into()) - Rat::from_integer(m.into());
                acc += w * f * &g[m - k];
            }
            g.push(acc / (Rat::from_integer(m.into()) * f0));
        }
        Ok(Series { coeffs: g })
    }

    /// Compositional inverse of `f = f_1 x + f_2 x^2 + ...` by Lagrange
    /// inversion: `[y^n] f^{-1} = (1/n) [x^{n-1}] (x/f(x))^n`.
    pub fn reversion(&self) -> Result<Series> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::SeriesAmbiguity(
                "reversion needs a series without constant term".into(),
            ));
        }
        let order = self.order();
        if order == 0 {
            return Ok(Series::zero(0));
        }
        if self.coeffs[1].is_zero() {
            return Err(Error::SeriesAmbiguity(
                "reversion needs a nonzero linear coefficient".into(),
            ));
        }
        // h = x / f(x), of order `order - 1`
        let h = self.shift_down(1)?.recip()?;
        let mut out = vec![Rat::zero(); order + 1];
        let mut power = Series::one(order - 1);
        for (n, slot) in out.iter_mut().enumerate().skip(1) {
            power = power.mul(&h);
            *slot = power.coeffs[n - 1].clone() / Rat::from_integer(n.into());
        }
        Ok(Series { coeffs: out })
    }

    /// `self(g(x))`, where `g` has no constant term.
    pub fn compose(&self, g: &Series) -> Result<Series> {
        if !g.coeffs[0].is_zero() {
            return Err(Error::SeriesAmbiguity(
                "composition with a series that has a constant term".into(),
            ));
        }
        let order = self.order().min(g.order());
        let mut acc = Series::zero(order);
        for c in self.coeffs.iter().take(order + 1).rev() {
            acc = acc.mul(g);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }
}
