//! Explicit density formulas for the families with known closed forms.
//!
//! All evaluations use real arithmetic; each radicand is clamped at zero
//! where rounding can push it slightly negative at a support edge.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measures::MeasureSpec;
use crate::poly::rat_to_f64;
use crate::quadrature::{integrate, CdfTable, DensitySource};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// Marchenko–Pastur with rectangularity `c` (atom `1 - 1/c` for `c > 1`).
    Mp(f64),
    /// Arcsine law on `[0, 2]`.
    Arcsine,
    /// Fuss–Catalan of order two, `mp(1)^2`.
    Fc2,
    /// Fuss–Catalan of order three, `mp(1)^3`.
    Fc3,
    /// Free square root of MP, `mp(1)^(1/2)`.
    MpSqrt,
    /// Free cube root of MP, `mp(1)^(1/3)`.
    MpCbrt,
    /// Bures law, `as*mp(1)`.
    Bures1,
    /// 2-Bures law, `as*mp(1)^2`.
    Bures2,
}

pub const ALL: [Family; 9] = [
    Family::Mp(1.0),
    Family::Mp(0.25),
    Family::Arcsine,
    Family::Fc2,
    Family::Fc3,
    Family::MpSqrt,
    Family::MpCbrt,
    Family::Bures1,
    Family::Bures2,
];

/// Zero of the radicand of the free cube root formula, `(6 - 2 sqrt 3)^(1/3)`.
fn cbrt_singular_point() -> f64 {
    (6.0 - 2.0 * 3f64.sqrt()).cbrt()
}

const CBRT_PATCH: f64 = 1e-3;

impl Family {
    /// The S-transform spec this family is the density of.
    pub fn spec(&self) -> MeasureSpec {
        let s = match self {
            Family::Mp(c) => return MeasureSpec::mp(f64_to_rat(*c)).expect("c > 0"),
            Family::Arcsine => "as",
            Family::Fc2 => "mp(1)^2",
            Family::Fc3 => "mp(1)^3",
            Family::MpSqrt => "mp(1)^(1/2)",
            Family::MpCbrt => "mp(1)^(1/3)",
            Family::Bures1 => "as*mp(1)",
            Family::Bures2 => "as*mp(1)^2",
        };
        s.parse().expect("built-in spec parses")
    }

    /// Recognises a spec that is one of the closed-form families.
    pub fn from_spec(spec: &MeasureSpec) -> Option<Family> {
        let canon = spec.canonical();
        if let [f] = canon.factors() {
            if let crate::measures::FactorKind::Mp(c) = &f.kind {
                if f.exponent == num_traits::One::one() {
                    return Some(Family::Mp(rat_to_f64(c)));
                }
            }
        }
        [
            Family::Arcsine,
            Family::Fc2,
            Family::Fc3,
            Family::MpSqrt,
            Family::MpCbrt,
            Family::Bures1,
            Family::Bures2,
        ]
        .into_iter()
        .find(|f| same_factors(&f.spec().canonical(), &canon))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Mp(c) if !(*c > 0.0 && c.is_finite()) => {
                Err(Error::domain(format!("mp({c}) needs c > 0")))
            }
            _ => Ok(()),
        }
    }

    /// Continuous support `[x_lo, x_hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Family::Mp(c) => {
                let s = c.sqrt();
                ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s))
            }
            Family::Arcsine => (0.0, 2.0),
            Family::Fc2 => (0.0, 27.0 / 4.0),
            Family::Fc3 => (0.0, 256.0 / 27.0),
            Family::MpSqrt => (0.0, (27.0f64 / 4.0).sqrt()),
            Family::MpCbrt => (0.0, (256.0f64 / 27.0).cbrt()),
            Family::Bures1 => (0.0, 3.0 * 3f64.sqrt()),
            Family::Bures2 => (0.0, 8.0),
        }
    }

    pub fn atom(&self) -> f64 {
        match self {
            Family::Mp(c) if *c > 1.0 => 1.0 - 1.0 / c,
            _ => 0.0,
        }
    }

    /// Exponents `beta` with `rho ~ d^beta` at the lower and upper edge.
    pub fn edge_exponents(&self) -> (f64, f64) {
        match self {
            Family::Mp(c) if *c == 1.0 => (-0.5, 0.5),
            Family::Mp(_) => (0.5, 0.5),
            Family::Arcsine => (-0.5, -0.5),
            Family::Fc2 => (-2.0 / 3.0, 0.5),
            Family::Fc3 => (-0.75, 0.5),
            Family::MpSqrt => (-1.0 / 3.0, 0.5),
            Family::MpCbrt => (-0.25, 0.5),
            Family::Bures1 => (-2.0 / 3.0, 0.5),
            Family::Bures2 => (-0.75, 0.5),
        }
    }

    /// Density at `x`; exactly 0 outside the closed support.
    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if !(x >= a && x <= b) {
            return 0.0;
        }
        let v = match *self {
            Family::Mp(c) => {
                if x == 0.0 {
                    return 0.0;
                }
                ((x - a) * (b - x)).max(0.0).sqrt() / (2.0 * PI * x * c)
            }
            Family::Arcsine => 1.0 / (PI * (x * (2.0 - x)).sqrt()),
            Family::Fc2 => {
                let q = 27.0 + 3.0 * (81.0 - 12.0 * x).max(0.0).sqrt();
                let k = 2f64.cbrt();
                k * 3f64.sqrt() / (12.0 * PI) * (k * q.powf(2.0 / 3.0) - 6.0 * x.cbrt())
                    / (x.powf(2.0 / 3.0) * q.cbrt())
            }
            Family::Fc3 => {
                let y = ((3.0 * 3f64.sqrt() / 16.0 * x.sqrt()).min(1.0).acos() / 3.0).cos();
                let inner = 4.0 * y - 3f64.powf(0.75) * x.powf(0.25) / y.sqrt();
                x.powf(-0.75) / (2.0 * 3f64.powf(0.25) * PI) * inner.max(0.0).sqrt()
            }
            Family::MpSqrt => {
                let y = (81.0 - 12.0 * x * x).max(0.0).sqrt();
                // 9 - y without cancellation at small x
                let (hi, lo) = (9.0 + y, 12.0 * x * x / (9.0 + y));
                let first =
                    (hi.cbrt() - lo.cbrt()) / (2f64.powf(4.0 / 3.0) * 3f64.powf(1.0 / 6.0) * PI);
                let second = (hi.powf(2.0 / 3.0) - lo.powf(2.0 / 3.0))
                    / (2f64.powf(5.0 / 3.0) * 3f64.powf(5.0 / 6.0) * PI);
                x.powf(-1.0 / 3.0) * first + x.cbrt() * second
            }
            Family::MpCbrt => {
                let x1 = cbrt_singular_point();
                if (x - x1).abs() < CBRT_PATCH {
                    return cbrt_patched(x, x1);
                }
                mp_cbrt_formula(x)
            }
            Family::Bures1 => {
                let a = 3.0 * 3f64.sqrt();
                let r = a / x;
                let s = (r * r - 1.0).max(0.0).sqrt();
                // r - s = 1 / (r + s)
                ((r + s).powf(2.0 / 3.0) - (r + s).powf(-2.0 / 3.0)) / (4.0 * PI * 3f64.sqrt())
            }
            Family::Bures2 => {
                (2.0 - (x / 2.0).sqrt()).max(0.0).sqrt() / (PI * 2f64.powf(1.25) * x.powf(0.75))
            }
        };
        if v.is_finite() {
            v.max(0.0)
        } else {
            0.0
        }
    }

    /// `P(X <= x)` including the atom; 1 at and beyond the upper edge.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let (a, b) = self.support();
        let atom = self.atom();
        if x < a.min(0.0) {
            return Ok(0.0);
        }
        if x <= a {
            return Ok(if x >= 0.0 { atom } else { 0.0 });
        }
        if x >= b {
            return Ok(1.0);
        }
        let (p_lo, p_hi) = self.edge_powers();
        let tol = 1e-12;
        let v = if x <= 0.5 * (a + b) {
            let h = x - a;
            let p = p_lo as i32;
            let f = |t: f64| self.eval(a + h * t.powi(p)) * h * p as f64 * t.powi(p - 1);
            atom + integrate(f, 0.0, 1.0, tol, tol)?
        } else {
            let h = b - x;
            let p = p_hi as i32;
            let f = |t: f64| self.eval(b - h * t.powi(p)) * h * p as f64 * t.powi(p - 1);
            1.0 - integrate(f, 0.0, 1.0, tol, tol)?
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Tabulated CDF for fast repeated evaluation.
    pub fn cdf_table(&self, panels_per_half: usize) -> Result<CdfTable> {
        CdfTable::build(self, panels_per_half)
    }
}

/// Equality of canonical specs up to factor order.
fn same_factors(a: &MeasureSpec, b: &MeasureSpec) -> bool {
    a.factors().len() == b.factors().len() && a.factors().iter().all(|f| b.factors().contains(f))
}

fn mp_cbrt_formula(x: f64) -> f64 {
    let x3 = x * x * x;
    let x32 = x.powf(1.5);
    let y =
        4.0 / 3f64.sqrt() * x32 * ((3.0 * 3f64.sqrt() / 16.0 * x32).min(1.0).acos() / 3.0).cos();
    let radicand = (y - 2.0 * x3 + 0.25 * x3 * x3).max(0.0);
    let s = radicand.sqrt() * (cbrt_singular_point() - x).signum();
    let term = x3 * (24.0 - 12.0 * x3 + x3 * x3) / (4.0 * s);
    let inner = y + 4.0 * x3 - 0.5 * x3 * x3 + term;
    inner.max(0.0).sqrt() / (2.0 * PI * x)
}

/// Cubic interpolation across the removable 0/0 at `x1`.
fn cbrt_patched(x: f64, x1: f64) -> f64 {
    let nodes = [
        x1 - 2.0 * CBRT_PATCH,
        x1 - CBRT_PATCH,
        x1 + CBRT_PATCH,
        x1 + 2.0 * CBRT_PATCH,
    ];
    let vals = nodes.map(mp_cbrt_formula);
    let mut acc = 0.0;
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        acc += vals[i] * l;
    }
    acc
}

fn f64_to_rat(c: f64) -> crate::poly::Rat {
    // shortest decimal representation round-trips exactly
    crate::measures::parse_rational(&format!("{c:?}")).expect("finite decimal")
}

impl DensitySource for Family {
    fn support(&self) -> (f64, f64) {
        Family::support(self)
    }
    fn density(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x))
    }
    fn edge_powers(&self) -> (u32, u32) {
        let (lo, hi) = self.edge_exponents();
        (
            crate::quadrature::substitution_power(lo),
            crate::quadrature::substitution_power(hi),
        )
    }
    fn atom_at_zero(&self) -> Result<f64> {
        Ok(self.atom())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Mp(c) => write!(f, "mp({c})"),
            Family::Arcsine => write!(f, "as"),
            Family::Fc2 => write!(f, "fc2"),
            Family::Fc3 => write!(f, "fc3"),
            Family::MpSqrt => write!(f, "mp-sqrt"),
            Family::MpCbrt => write!(f, "mp-cbrt"),
            Family::Bures1 => write!(f, "bures"),
            Family::Bures2 => write!(f, "bures2"),
        }
    }
}

/// Aliases (`fc2`, `fc3`, `bures`, `bures2`, `mp-sqrt`, `mp-cbrt`) or any
/// measure spec equivalent to a family.
impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let alias = match t.as_str() {
            "fc2" => Some(Family::Fc2),
            "fc3" => Some(Family::Fc3),
            "bures" | "bures1" => Some(Family::Bures1),
            "bures2" => Some(Family::Bures2),
            "mp-sqrt" => Some(Family::MpSqrt),
            "mp-cbrt" => Some(Family::MpCbrt),
            "as" | "arcsine" => Some(Family::Arcsine),
            _ => None,
        };
        if let Some(f) = alias {
            return Ok(f);
        }
        let spec: MeasureSpec = t.parse()?;
        Family::from_spec(&spec)
            .ok_or_else(|| Error::domain(format!("no closed form is known for {spec}")))
    }
}

/// Resolves a family alias to its measure spec, or parses a spec.
pub fn resolve_measure(s: &str) -> Result<MeasureSpec> {
    match s.trim().to_ascii_lowercase().as_str() {
        "fc2" | "fc3" | "bures" | "bures1" | "bures2" | "mp-sqrt" | "mp-cbrt" | "arcsine" => {
            Ok(s.parse::<Family>()?.spec())
        }
        _ => s.parse(),
    }
}
