//! Adaptive Gauss–Kronrod (7-15) quadrature with power-law edge
//! substitutions for integrable endpoint singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: `(estimate, |kronrod - gauss|)`.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        k += w * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

pub const MAX_PANELS: usize = 4000;

/// Globally adaptive integration: always bisects the panel with the largest
/// error estimate until the total error is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let (mut total, mut err) = (value, error);
    let mut panels = 1;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if panels >= MAX_PANELS || !err.is_finite() {
            return Err(Error::Quadrature {
                tol: abs_tol.max(rel_tol * total.abs()),
                estimate: err,
            });
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // panel cannot be split further in floating point
            return Err(Error::Quadrature {
                tol: abs_tol.max(rel_tol * total.abs()),
                estimate: err,
            });
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        panels += 1;
    }
    // recompute from panels to shed accumulated rounding in the running sums
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Integrates over `[a, b]` with `x = a + h t^p_lo` on the lower half and
/// `x = b - h t^p_hi` on the upper half, so that `(x-a)^beta` edge
/// behaviour with `beta = k/p - 1` becomes polynomial in `t`.
pub fn integrate_edges(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    p_lo: u32,
    p_hi: u32,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let h = m - a;
    let lower = |t: f64| {
        let p = p_lo as f64;
        let x = a + h * t.powi(p_lo as i32);
        f(x) * h * p * t.powi(p_lo as i32 - 1)
    };
    let upper = |t: f64| {
        let p = p_hi as f64;
        let x = b - h * t.powi(p_hi as i32);
        f(x) * h * p * t.powi(p_hi as i32 - 1)
    };
    let lo = integrate(lower, 0.0, 1.0, 0.5 * abs_tol, rel_tol)?;
    let hi = integrate(upper, 0.0, 1.0, 0.5 * abs_tol, rel_tol)?;
    Ok(lo + hi)
}

/// Smallest substitution power `p` in {1, 2, 3, 4, 6} such that the edge
/// exponent `beta` is (nearly) a multiple of `1/p`.
pub fn substitution_power(beta: f64) -> u32 {
    for p in [1u32, 2, 3, 4, 6] {
        let s = beta * p as f64;
        if (s - s.round()).abs() < 0.04 * p as f64 {
            return p;
        }
    }
    6
}

/// A density on a single interval, possibly with an atom at zero.
pub trait DensitySource: Sync {
    fn support(&self) -> (f64, f64);
    fn density(&self, x: f64) -> Result<f64>;
    /// Substitution powers `(p_lo, p_hi)` for [`integrate_edges`].
    fn edge_powers(&self) -> (u32, u32);
    fn atom_at_zero(&self) -> Result<f64>;
}

/// `int x^k rho(x) dx` over the support (the atom is not included).
pub fn integrate_moment(src: &impl DensitySource, k: u32, abs_tol: f64) -> Result<f64> {
    let (a, b) = src.support();
    let (p_lo, p_hi) = src.edge_powers();
    let err = std::sync::Mutex::new(None);
    let f = |x: f64| match src.density(x) {
        Ok(r) => r * x.powi(k as i32),
        Err(e) => {
            err.lock().unwrap().get_or_insert(e);
            0.0
        }
    };
    let v = integrate_edges(f, a, b, p_lo, p_hi, abs_tol, abs_tol)?;
    match err.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Cumulative distribution tabulated on uniform panels of the edge
/// substitution variable, with cubic Hermite interpolation inside panels.
#[derive(Clone, Debug)]
pub struct CdfTable {
    a: f64,
    b: f64,
    p_lo: u32,
    p_hi: u32,
    atom: f64,
    /// `F` and `dF/dt` at `t = k/n` on each half; the upper half is stored
    /// from `x = b` inward.
    lower: Vec<(f64, f64)>,
    upper: Vec<(f64, f64)>,
    half_mass: f64,
    total: f64,
}

impl CdfTable {
    pub fn build(src: &impl DensitySource, panels_per_half: usize) -> Result<Self> {
        let (a, b) = src.support();
        let (p_lo, p_hi) = src.edge_powers();
        let atom = src.atom_at_zero()?;
        let h = 0.5 * (b - a);
        let n = panels_per_half.max(4);
        let err = std::sync::Mutex::new(None);
        let rho = |x: f64| match src.density(x) {
            Ok(r) => r,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                0.0
            }
        };
        let half = |p: u32, sign: f64, origin: f64| -> Vec<(f64, f64)> {
            let g = |t: f64| {
                rho(origin + sign * h * t.powi(p as i32)) * h * p as f64 * t.powi(p as i32 - 1)
            };
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            // the edge itself is never evaluated; use a point just inside
            out.push((0.0, g(1e-3 / n as f64)));
            for k in 0..n {
                let (t0, t1) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
                acc += gk15(&g, t0, t1).0;
                out.push((acc, g(t1)));
            }
            out
        };
        let lower = half(p_lo, 1.0, a);
        let upper = half(p_hi, -1.0, b);
        if let Some(e) = err.into_inner().unwrap() {
            return Err(e);
        }
        let half_mass = lower[n].0;
        let total = half_mass + upper[n].0;
        Ok(CdfTable {
            a,
            b,
            p_lo,
            p_hi,
            atom,
            lower,
            upper,
            half_mass,
            total,
        })
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }

    /// Continuous mass as integrated by the table.
    pub fn continuous_mass(&self) -> f64 {
        self.total
    }

    fn interp(table: &[(f64, f64)], t: f64) -> f64 {
        let n = table.len() - 1;
        let s = (t * n as f64).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let u = s - k as f64;
        let (f0, d0) = table[k];
        let (f1, d1) = table[k + 1];
        if !d0.is_finite() || !d1.is_finite() {
            return f0 + u * (f1 - f0);
        }
        let dt = 1.0 / n as f64;
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * f0
            + (u3 - 2.0 * u2 + u) * dt * d0
            + (-2.0 * u3 + 3.0 * u2) * f1
            + (u3 - u2) * dt * d1
    }

    /// `P(X <= x)`, including the atom at zero.
    pub fn eval(&self, x: f64) -> f64 {
        let atom = if x >= 0.0 { self.atom } else { 0.0 };
        let cont = if x <= self.a {
            0.0
        } else if x >= self.b {
            self.total
        } else {
            let m = 0.5 * (self.a + self.b);
            let h = m - self.a;
            if x <= m {
                let t = ((x - self.a) / h).powf(1.0 / self.p_lo as f64);
                Self::interp(&self.lower, t).clamp(0.0, self.half_mass)
            } else {
                let t = ((self.b - x) / h).powf(1.0 / self.p_hi as f64);
                (self.total - Self::interp(&self.upper, t)).clamp(self.half_mass, self.total)
            }
        };
        (atom + cont).min(1.0)
    }
}
