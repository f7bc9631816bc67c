//! Physical branch of the resolvent polynomial and Stieltjes inversion.
//!
//! The physical root `w(z)` is selected once at large `|z|`, where
//! `w ~ m1/z`, and then continued along a path in the upper half-plane.
//! Every step re-solves `P(., z)` and pairs the tracked root with its
//! nearest successor, refining the step whenever the pairing is not
//! clear-cut.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{FactorKind, ResolventPolynomial};
use crate::quadrature::{substitution_power, DensitySource};
use crate::roots::{roots_at_from, u_roots_at_from, RootSet};

pub use crate::roots::roots_at;

/// Pairing margin: the runner-up root must be this many times farther away.
pub const MATCH_MARGIN: f64 = 2.0;
/// Tolerance on the relative residual of `z w S(w) = 1 + w`. Other branches
/// of a fractional power miss it by O(1).
pub const UNCLEARED_TOL: f64 = 1e-6;
const SEED_HEIGHT: f64 = 1e4;
/// Relative distance from an edge below which the density is extrapolated.
const EDGE_INSET: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Continuation state on the physical sheet. Roots are tracked in
/// `u = 1 + w`, so that `G = u/z` keeps full relative accuracy near `z = 0`.
#[derive(Clone, Debug)]
pub struct BranchTracker<'a> {
    poly: &'a ResolventPolynomial,
    z: Complex64,
    u: Complex64,
    /// `u - 1`, refined separately when it is small.
    w: Complex64,
    roots: Vec<Complex64>,
    /// Previous accepted point, for the linear predictor.
    prev: Option<(Complex64, Complex64)>,
    history: Vec<(Complex64, Complex64)>,
    /// Logs of the factor bases of `S`, continued along the path, for the
    /// check of the uncleared relation; `None` disables the check.
    s_logs: Option<Vec<Complex64>>,
}

/// Nearest root to `target`, and the distance to the nearest root that is
/// distinguishable from it.
fn nearest(roots: &[Complex64], target: Complex64) -> (Complex64, f64, f64) {
    let mut best = roots[0];
    let mut d1 = f64::INFINITY;
    for &r in roots {
        let d = (r - target).norm();
        if d < d1 {
            d1 = d;
            best = r;
        }
    }
    let same = 1e-12 * (1.0 + best.norm());
    let d2 = roots
        .iter()
        .filter(|r| (**r - best).norm() > same)
        .map(|r| (r - target).norm())
        .fold(f64::INFINITY, f64::min);
    (best, d1, d2)
}

impl<'a> BranchTracker<'a> {
    /// Seeds on the root nearest `m1/z0`; `z0` must be far from the support.
    pub fn seed(poly: &'a ResolventPolynomial, z0: Complex64) -> Result<Self> {
        let RootSet { roots, .. } = roots_in_u(poly, z0, None, true)?;
        let guess = 1.0 + poly.first_moment_f64() / z0;
        let (u, d1, d2) = nearest(&roots, guess);
        if d2 < MATCH_MARGIN * d1 {
            return Err(Error::BranchAmbiguity(format!("seed {z0}")));
        }
        let w = polish_w(poly, z0, u - 1.0, 0.25 * d2);
        // near w = 0 the bases of MP and arcsine factors are close to
        // positive reals, so principal logs start on the right branch; a
        // general rational factor may start anywhere
        let s_logs = poly
            .spec()
            .filter(|s| {
                s.factors().iter().all(|f| {
                    f.exponent.is_integer() || !matches!(f.kind, FactorKind::Rational { .. })
                })
            })
            .and_then(|s| {
                s.factors()
                    .iter()
                    .map(|f| f.kind.eval(w).ok().map(|b| b.ln()))
                    .collect()
            });
        Ok(BranchTracker {
            poly,
            z: z0,
            u: 1.0 + w,
            w,
            roots,
            prev: None,
            history: vec![(z0, 1.0 + w)],
            s_logs,
        })
    }

    /// Seeds at `x + iH` for a height `H` far above the support.
    pub fn seed_above(poly: &'a ResolventPolynomial, x: f64) -> Result<Self> {
        let h = SEED_HEIGHT * poly.first_moment_f64().max(1.0).max(x.abs());
        Self::seed(poly, c(x, h))
    }

    pub fn current_z(&self) -> Complex64 {
        self.z
    }

    pub fn current_w(&self) -> Complex64 {
        self.w
    }

    pub fn current_u(&self) -> Complex64 {
        self.u
    }

    /// Accepted `(z, u)` pairs along the path.
    pub fn history(&self) -> &[(Complex64, Complex64)] {
        &self.history
    }

    /// All roots in `u` at the current `z`.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Continues along the straight segment to `target` and returns `w`.
    pub fn move_to(&mut self, target: Complex64) -> Result<Complex64> {
        self.move_to_u(target)?;
        Ok(self.w)
    }

    /// Continues to `target` and returns `u = 1 + w`. Steps never exceed
    /// half the current height above the real axis, so the path cannot jump
    /// across the cut.
    pub fn move_to_u(&mut self, target: Complex64) -> Result<Complex64> {
        let mut h = 0.25 * (target - self.z).norm().min(self.z.norm().max(1.0));
        let mut guard = 0usize;
        while self.z != target {
            guard += 1;
            if guard > 100_000 {
                return Err(Error::convergence(format!(
                    "continuation to {target} stalled"
                )));
            }
            let remaining = target - self.z;
            let dist = remaining.norm();
            let mut step = h.min(dist);
            // real targets are approached down to a fixed floor, then jumped to
            let floor_im = if target.im > 0.0 {
                0.0
            } else {
                1e-9 * (1.0 + target.norm())
            };
            if self.z.im > floor_im {
                step = step.min(0.5 * self.z.im.max(target.im));
            }
            let z_new = if step >= dist {
                target
            } else {
                self.z + remaining * (step / dist)
            };
            let predicted = match self.prev {
                Some((z0, u0)) if z0 != self.z => {
                    self.u + (self.u - u0) / (self.z - z0) * (z_new - self.z)
                }
                _ => self.u,
            };
            let set = roots_in_u(self.poly, z_new, Some(&self.roots), self.w.norm() < 0.5)?;
            let (u_new, d1, d2) = nearest(&set.roots, predicted);
            if d2 < MATCH_MARGIN * d1 {
                h = 0.5 * step;
                if h < 1e-14 * (1.0 + self.z.norm()) {
                    return Err(Error::BranchAmbiguity(format!("{z_new}")));
                }
                continue;
            }
            let (mut u_new, mut w_new) = (u_new, u_new - 1.0);
            if w_new.norm() < 0.5 {
                w_new = polish_w(self.poly, z_new, w_new, 0.25 * d2);
                u_new = 1.0 + w_new;
            }
            let logs = self.continued_logs(w_new);
            // skipped next to the axis, where near-double roots lose half the digits
            if let (Some(logs), true) = (&logs, z_new.im > 1e-6 * (1.0 + z_new.norm())) {
                let r = self.uncleared_excess(logs, w_new, z_new);
                if r > UNCLEARED_TOL {
                    return Err(Error::BranchAmbiguity(format!(
                        "{z_new}: tracked root fails the uncleared relation (residual {r:e})"
                    )));
                }
            }
            if logs.is_some() {
                self.s_logs = logs;
            }
            self.prev = Some((self.z, self.u));
            self.z = z_new;
            self.u = u_new;
            self.w = w_new;
            self.roots = set.roots;
            self.history.push((z_new, u_new));
            h = 1.5 * step;
        }
        Ok(self.u)
    }

    /// Factor logs at `w`, each continued from its previous value; `None`
    /// when the check is off or a base vanishes or has a pole at `w`.
    fn continued_logs(&self, w: Complex64) -> Option<Vec<Complex64>> {
        self.continued_logs_from(self.s_logs.as_ref()?, w)
    }

    fn continued_logs_from(&self, old: &[Complex64], w: Complex64) -> Option<Vec<Complex64>> {
        let spec = self.poly.spec()?;
        spec.factors()
            .iter()
            .zip(old)
            .map(|(f, l)| {
                let b = f.kind.eval(w).ok().filter(|b| b.norm() > 0.0)?;
                Some(l + (b / l.exp()).ln())
            })
            .collect()
    }

    /// `z w S(w) - (1 + w)` with `S` on the continued branch, and the
    /// normaliser `|z w S| + 1 + |w|`.
    fn uncleared(&self, logs: &[Complex64], w: Complex64, z: Complex64) -> (Complex64, f64) {
        let spec = self.poly.spec().expect("logs exist only with a spec");
        let log_s: Complex64 = spec
            .factors()
            .iter()
            .zip(logs)
            .map(|(f, l)| l * crate::poly::rat_to_f64(&f.exponent))
            .sum();
        let lhs = z * w * log_s.exp();
        (lhs - (1.0 + w), lhs.norm() + 1.0 + w.norm())
    }

    /// Relative residual of the uncleared relation, less the part explained
    /// by the rounding error of the root itself (`eps * scale / |P'|`,
    /// which is large inside root clusters).
    fn uncleared_excess(&self, logs: &[Complex64], w: Complex64, z: Complex64) -> f64 {
        let (f, norm) = self.uncleared(logs, w, z);
        let (_, dp) = crate::roots::horner(&self.poly.w_coeffs_at(z), w);
        let dw = 1e-15 * self.poly.abs_scale(w, z) / dp.norm();
        let h = 1e-7 * (1.0 + w.norm());
        let slope = match self.continued_logs_from(logs, w + h) {
            Some(l2) => (self.uncleared(&l2, w + h, z).0 - f).norm() / h,
            None => return 0.0,
        };
        ((f.norm() - 10.0 * slope * dw) / norm).max(0.0)
    }

    /// `G(z) = (1 + w(z)) / z` after continuing to `z`.
    pub fn green(&mut self, z: Complex64) -> Result<Complex64> {
        Ok(self.move_to_u(z)? / z)
    }
}

/// Roots reported as `u = 1 + w`, computed in `w` coordinates while the
/// tracked branch is near `w = 0` (large `|z|`) and in `u` otherwise.
fn roots_in_u(
    poly: &ResolventPolynomial,
    z: Complex64,
    start: Option<&[Complex64]>,
    small_w: bool,
) -> Result<RootSet> {
    if small_w {
        let start: Option<Vec<Complex64>> = start.map(|s| s.iter().map(|u| u - 1.0).collect());
        let mut set = roots_at_from(poly, z, start.as_deref())?;
        for r in &mut set.roots {
            *r += 1.0;
        }
        Ok(set)
    } else {
        u_roots_at_from(poly, z, start)
    }
}

/// A few Newton steps in `w` coordinates, where a small `w` keeps its
/// relative accuracy; abandoned if they wander more than `radius`.
fn polish_w(poly: &ResolventPolynomial, z: Complex64, w0: Complex64, radius: f64) -> Complex64 {
    let coeffs = poly.w_coeffs_at(z);
    let mut w = w0;
    for _ in 0..4 {
        let (p, dp) = crate::roots::horner(&coeffs, w);
        let dw = p / dp;
        if !dw.is_finite() {
            return w0;
        }
        w -= dw;
        if dw.norm() <= 1e-15 * w.norm() {
            break;
        }
    }
    if (w - w0).norm() <= radius {
        w
    } else {
        w0
    }
}

/// Continues the tracker to `z` and returns the physical root `w(z)`.
pub fn physical_branch(tracker: &mut BranchTracker<'_>, z: Complex64) -> Result<Complex64> {
    tracker.move_to(z)
}

pub fn green(tracker: &mut BranchTracker<'_>, z: Complex64) -> Result<Complex64> {
    tracker.green(z)
}

/// Continuation paths from the large-`|z|` seed down to `x + iy`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPath {
    /// Straight down from `x + iH`.
    Vertical,
    /// From `iH` across to `x + iH`, then down.
    LShaped,
}

/// Physical root `w` at `z`; below the axis by conjugation.
pub fn branch_at(poly: &ResolventPolynomial, z: Complex64, path: BranchPath) -> Result<Complex64> {
    Ok(branch_u_at(poly, z, path)? - 1.0)
}

fn branch_u_at(poly: &ResolventPolynomial, z: Complex64, path: BranchPath) -> Result<Complex64> {
    if z.im < 0.0 {
        return branch_u_at(poly, z.conj(), path).map(|u| u.conj());
    }
    let mut t = match path {
        BranchPath::Vertical => BranchTracker::seed_above(poly, z.re)?,
        BranchPath::LShaped => {
            let h = SEED_HEIGHT * poly.first_moment_f64().max(1.0).max(z.re.abs());
            let mut t = BranchTracker::seed(poly, c(0.0, h))?;
            t.move_to(c(z.re, h))?;
            t
        }
    };
    t.move_to_u(z)
}

/// `G(z)` on the physical sheet (any `z` off the support).
pub fn green_at(poly: &ResolventPolynomial, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Pole("G is not defined at z = 0".into()));
    }
    Ok(branch_u_at(poly, z, BranchPath::Vertical)? / z)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionOptions {
    /// Heights `(eps1, eps2)` for the linear Richardson extrapolation.
    pub eps: (f64, f64),
    /// Fraction of the support width treated as the edge region.
    pub edge_margin: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            eps: (1e-6, 1e-7),
            edge_margin: 0.01,
        }
    }
}

/// Does the physical branch leave the real axis at real `x`? Continues to
/// `x + i eps` and then picks the nearest root of `P(., x)`.
fn inside_indicator(poly: &ResolventPolynomial, x: f64) -> Result<bool> {
    let eps = 1e-10 * x.abs().max(1.0);
    let u_eps = branch_u_at(poly, c(x, eps), BranchPath::Vertical)?;
    let u = match u_roots_at_from(poly, c(x, 0.0), None) {
        Ok(set) => nearest(&set.roots, u_eps).0,
        // all finite roots escaped at this exact x: keep the nearby value
        Err(Error::DegreeDrop { .. }) => u_eps,
        Err(e) => return Err(e),
    };
    Ok(u.im.abs() > 1e-7 * u.norm())
}

/// Edges of the (single-interval) continuous support, to about `1e-12` of
/// its width.
pub fn support_edges(poly: &ResolventPolynomial) -> Result<(f64, f64)> {
    let m1 = poly.first_moment_f64();
    let inside = |x: f64| inside_indicator(poly, x);
    let mut x_in = m1;
    if !inside(x_in)? {
        let mut found = None;
        for k in 0..64 {
            let x = m1 * 10f64.powf(-2.0 + 4.0 * (k as f64 + 0.37) / 64.0);
            if inside(x)? {
                found = Some(x);
                break;
            }
        }
        x_in = found.ok_or_else(|| Error::domain("no continuous spectrum found near the mean"))?;
    }
    // upper edge: double until outside
    let mut lo = x_in;
    let mut hi = 2.0137 * x_in;
    let mut k = 0;
    while inside(hi)? {
        lo = hi;
        hi *= 2.0;
        k += 1;
        if k > 60 {
            return Err(Error::domain("support appears unbounded"));
        }
    }
    let span_guess = hi;
    let tol = 1e-13 * span_guess;
    let bisect = |mut a_in: f64, mut b_out: f64| -> Result<f64> {
        while (b_out - a_in).abs() > tol {
            let m = 0.5 * (a_in + b_out);
            if inside(m)? {
                a_in = m;
            } else {
                b_out = m;
            }
        }
        Ok(0.5 * (a_in + b_out))
    };
    let x_hi = bisect(lo, hi)?;
    // lower edge: negative reals are always outside a positive measure
    let x_lo = bisect(x_in, -0.37 * x_in)?;
    // a positive measure has no spectrum below 0; rounding near the cluster
    // of branches at the origin can leave the bisection slightly negative
    let x_lo = if x_lo <= 4.0 * tol { 0.0 } else { x_lo };

    let span = x_hi - x_lo;
    let n = 64;
    let mut changes = 0;
    let mut last = None;
    for k in 0..n {
        let x = x_lo - 0.1 * span + 1.2 * span * (k as f64 + 0.5) / n as f64;
        if x == 0.0 {
            continue;
        }
        let v = inside(x)?;
        if last.is_some_and(|l| l != v) {
            changes += 1;
        }
        last = Some(v);
    }
    if changes > 2 {
        return Err(Error::MultiInterval(changes));
    }
    Ok((x_lo, x_hi))
}

/// Spectral data derived from one resolvent polynomial: support, edge
/// behaviour, density and atom.
#[derive(Clone, Debug)]
pub struct Spectrum {
    poly: ResolventPolynomial,
    opts: InversionOptions,
    support: (f64, f64),
    edge_exponents: (f64, f64),
    atom: std::sync::OnceLock<std::result::Result<f64, Error>>,
}

impl Spectrum {
    pub fn new(poly: ResolventPolynomial) -> Result<Self> {
        Self::with_options(poly, InversionOptions::default())
    }

    pub fn with_options(poly: ResolventPolynomial, opts: InversionOptions) -> Result<Self> {
        let support = support_edges(&poly)?;
        let mut s = Spectrum {
            poly,
            opts,
            support,
            edge_exponents: (0.0, 0.0),
            atom: std::sync::OnceLock::new(),
        };
        s.edge_exponents = s.estimate_edge_exponents()?;
        Ok(s)
    }

    pub fn from_spec(spec: &crate::MeasureSpec) -> Result<Self> {
        Self::new(spec.build_resolvent())
    }

    pub fn poly(&self) -> &ResolventPolynomial {
        &self.poly
    }

    pub fn options(&self) -> InversionOptions {
        self.opts
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// Power-law exponents `beta` with `rho ~ d^beta` at each edge.
    pub fn edge_exponents(&self) -> (f64, f64) {
        self.edge_exponents
    }

    fn estimate_edge_exponents(&self) -> Result<(f64, f64)> {
        let (a, b) = self.support;
        let span = b - a;
        let slope = |x1: f64, x2: f64, d1: f64, d2: f64| -> Result<f64> {
            let r1 = self.density_raw(x1)?;
            let r2 = self.density_raw(x2)?;
            Ok((r2 / r1).ln() / (d2 / d1).ln())
        };
        let lo = slope(a + 1e-7 * span, a + 1e-6 * span, 1e-7, 1e-6)?;
        let hi = slope(b - 1e-7 * span, b - 1e-6 * span, 1e-7, 1e-6)?;
        Ok((lo, hi))
    }

    pub fn green(&self, z: Complex64) -> Result<Complex64> {
        green_at(&self.poly, z)
    }

    /// Distance from `x` to the nearer support edge.
    fn edge_distance(&self, x: f64) -> f64 {
        (x - self.support.0).min(self.support.1 - x)
    }

    pub fn near_edge(&self, x: f64) -> bool {
        self.edge_distance(x) < self.opts.edge_margin * (self.support.1 - self.support.0)
    }

    /// Richardson-extrapolated `G(x + i0)`. Near an edge the heights shrink
    /// in proportion to the edge distance.
    fn green_limit(&self, x: f64) -> Result<Complex64> {
        let (e1, e2) = self.opts.eps;
        let d = self.edge_distance(x).abs().max(f64::MIN_POSITIVE);
        let s = (1e-4 * d / e1).min(1.0);
        let (e1, e2) = (e1 * s, e2 * s);
        let mut t = BranchTracker::seed_above(&self.poly, x)?;
        let g1 = t.green(c(x, e1))?;
        let g2 = t.green(c(x, e2))?;
        Ok((g2 * e1 - g1 * e2) / (e1 - e2))
    }

    fn density_raw(&self, x: f64) -> Result<f64> {
        let g = self.green_limit(x)?;
        let rho = -g.im / std::f64::consts::PI;
        if rho < -1e-12 {
            log::warn!("negative density {rho:e} at x = {x}; clipped to 0");
        }
        Ok(rho.max(0.0))
    }

    /// `-Im G(x + i0) / pi`; zero outside the support. Within `1e-12` of the
    /// width from an edge the power law `d^beta` is continued from the last
    /// resolved point; at an edge itself that point's value is returned.
    pub fn density(&self, x: f64) -> Result<f64> {
        let (a, b) = self.support;
        if x < a || x > b {
            return Ok(0.0);
        }
        let inset = EDGE_INSET * (b - a);
        if self.near_edge(x) {
            log::debug!("density at x = {x} lies within the edge margin");
        }
        let (edge, beta) = if x - a < inset {
            (a + inset, self.edge_exponents.0)
        } else if b - x < inset {
            (b - inset, self.edge_exponents.1)
        } else {
            return self.density_raw(x);
        };
        let d = (x - a).min(b - x);
        let rho = self.density_raw(edge)?;
        if d == 0.0 {
            return Ok(rho);
        }
        let p = substitution_power(beta) as f64;
        let beta = (beta * p).round() / p;
        Ok(rho * (d / inset).powf(beta))
    }

    /// `2 Re G(x + i0)`, the derivative of the confining potential.
    pub fn potential_derivative(&self, x: f64) -> Result<f64> {
        let (a, b) = self.support;
        if !(x > a && x < b) {
            return Err(Error::domain(format!(
                "x = {x} is outside the support [{a}, {b}]"
            )));
        }
        Ok(2.0 * self.green_limit(x)?.re)
    }

    pub fn continuous_mass(&self) -> Result<f64> {
        crate::quadrature::integrate_moment(self, 0, 1e-10)
    }

    /// Weight of the atom at zero: the mass missing from the continuous
    /// part, or 0 when that deficit is below quadrature accuracy.
    pub fn atom(&self) -> Result<f64> {
        self.atom
            .get_or_init(|| {
                let mass = self.continuous_mass()?;
                let deficit = 1.0 - mass;
                Ok(if deficit < 1e-7 { 0.0 } else { deficit })
            })
            .clone()
    }

    /// `lim_{z -> 0} z G(z)` read off the branch along the imaginary axis; an
    /// independent, less accurate estimate of the atom.
    pub fn atom_from_limit(&self) -> Result<f64> {
        let eps = 1e-12 * (self.support.1 - self.support.0);
        let w = branch_at(&self.poly, c(0.0, eps), BranchPath::Vertical)?;
        Ok((1.0 + w.re).max(0.0))
    }

    /// Density on a cosine-clustered grid strictly inside the support.
    pub fn curve(&self, n_points: usize, edge_margin: f64) -> Result<DensityCurve> {
        let (a, b) = self.support;
        let span = b - a;
        let lo = a + edge_margin * span;
        let hi = b - edge_margin * span;
        let n = n_points.max(2);
        let xs: Vec<f64> = (0..n)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                0.5 * (lo + hi) - 0.5 * (hi - lo) * t.cos()
            })
            .collect();
        let rhos: Vec<f64> = xs
            .par_iter()
            .map(|&x| self.density(x))
            .collect::<Result<_>>()?;
        Ok(DensityCurve {
            support: [a, b],
            atom_at_zero: self.atom()?,
            edge_margin,
            points: xs.into_iter().zip(rhos).collect(),
        })
    }
}

impl DensitySource for Spectrum {
    fn support(&self) -> (f64, f64) {
        self.support
    }
    fn density(&self, x: f64) -> Result<f64> {
        Spectrum::density(self, x)
    }
    fn edge_powers(&self) -> (u32, u32) {
        (
            substitution_power(self.edge_exponents.0),
            substitution_power(self.edge_exponents.1),
        )
    }
    fn atom_at_zero(&self) -> Result<f64> {
        self.atom()
    }
}

/// Convenience: density of the measure behind `poly` at `x` (recomputes
/// the support; use [`Spectrum`] for repeated evaluation).
pub fn density(poly: &ResolventPolynomial, x: f64) -> Result<f64> {
    Spectrum::new(poly.clone())?.density(x)
}

pub fn density_curve(
    poly: &ResolventPolynomial,
    n_points: usize,
    edge_margin: f64,
) -> Result<DensityCurve> {
    Spectrum::new(poly.clone())?.curve(n_points, edge_margin)
}

pub fn potential_derivative(poly: &ResolventPolynomial, x: f64) -> Result<f64> {
    Spectrum::new(poly.clone())?.potential_derivative(x)
}

/// Sampled density with its support and atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub support: [f64; 2],
    pub atom_at_zero: f64,
    pub edge_margin: f64,
    pub points: Vec<(f64, f64)>,
}

impl DensityCurve {
    /// `x,rho` lines with shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,rho\n");
        for (x, r) in &self.points {
            out.push_str(&format!("{x:?},{r:?}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse {
            position: e.column(),
            message: e.to_string(),
        })
    }

    /// Trapezoid mass of the sampled points (coarse; the grid stops short
    /// of the edges).
    pub fn trapezoid_mass(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_resolvent;
    use std::f64::consts::PI;

    fn poly(s: &str) -> ResolventPolynomial {
        build_resolvent(&s.parse().unwrap())
    }

    #[test]
    fn seed_sits_on_m1_over_z() {
        let p = poly("mp(1)^(1/2)");
        let t = BranchTracker::seed(&p, c(1e6, 0.0)).unwrap();
        assert!((t.current_w() * 1e6 - 1.0).norm() < 1e-5);
    }

    #[test]
    fn mp_green_off_support_is_real() {
        let p = poly("mp(1)");
        let g = green_at(&p, c(5.0, 0.0)).unwrap();
        // 2 / (z + sqrt(z^2 - 4z)) at z = 5
        let exact = 2.0 / (5.0 + 5f64.sqrt());
        assert!((g - exact).norm() < 1e-12, "{g}");
    }

    #[test]
    fn mp_green_near_axis() {
        let p = poly("mp(1)");
        let mut t = BranchTracker::seed_above(&p, 2.0).unwrap();
        let g = t.green(c(2.0, 1e-8)).unwrap();
        assert!((g.im + 0.5).abs() < 1e-7, "{g}");
        // w on the unit circle at z = 2
        assert!((t.current_w().norm() - 1.0).abs() < 1e-7);
        assert!((2.0 * g.re - 1.0).abs() < 1e-7);
    }

    #[test]
    fn arcsine_at_midpoint() {
        let s = Spectrum::from_spec(&"as".parse().unwrap()).unwrap();
        let g = s.green(c(1.0, 1e-9)).unwrap();
        assert!((g.im + 1.0).abs() < 1e-7);
        assert!(s.potential_derivative(1.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn mp_density_and_support() {
        let s = Spectrum::from_spec(&"mp(1)".parse().unwrap()).unwrap();
        let (a, b) = s.support();
        assert!(a.abs() < 1e-10 && (b - 4.0).abs() < 1e-10, "{a} {b}");
        assert!((s.density(1.0).unwrap() - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-10);
        assert_eq!(s.density(5.0).unwrap(), 0.0);
        let (lo, hi) = s.edge_exponents();
        assert!(
            (lo + 0.5).abs() < 0.02 && (hi - 0.5).abs() < 0.02,
            "{lo} {hi}"
        );
    }

    #[test]
    fn quarter_mp_support() {
        let s = Spectrum::from_spec(&"mp(1/4)".parse().unwrap()).unwrap();
        let (a, b) = s.support();
        assert!(
            (a - 0.25).abs() < 1e-9 && (b - 2.25).abs() < 1e-9,
            "{a} {b}"
        );
        assert_eq!(s.atom().unwrap(), 0.0);
    }

    #[test]
    fn paths_agree() {
        let p = poly("mp(1)^3");
        for x in [0.5, 2.0, 7.0] {
            let z = c(x, 1e-6);
            let a = branch_at(&p, z, BranchPath::Vertical).unwrap();
            let b = branch_at(&p, z, BranchPath::LShaped).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn curve_round_trips_through_json() {
        let s = Spectrum::from_spec(&"mp(1)".parse().unwrap()).unwrap();
        let curve = s.curve(16, 0.01).unwrap();
        let back = DensityCurve::from_json(&curve.to_json()).unwrap();
        assert_eq!(back, curve);
        assert!(curve.points.iter().all(|p| p.1 >= 0.0));
        assert!(curve.to_csv().starts_with("x,rho\n"));
    }
}
