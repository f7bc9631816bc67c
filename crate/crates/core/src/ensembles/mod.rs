//! Monte Carlo spectra of `X X^dagger` for
//! `X = (U_1 + ... + U_k)/sqrt(k) * G_1/sqrt(N_1) * ... * G_s/sqrt(N_s)`,
//! with Haar unitaries `U_i` and complex Ginibre factors `G_i` of shape
//! `N_{i-1} x N_i`. With `c_i = N_0 / N_i` the limiting law has
//! S-transform `S_k(w) prod_i 1/(1 + c_i w)`, where `S_2` is the arcsine
//! S-transform.
//!
//! Randomness: each sample draws from its own `ChaCha8` stream, seeded
//! with the configured seed and with stream number equal to the sample
//! index, so results do not depend on scheduling.

mod eigen;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eigen::{hermitian_eigenvalues, symmetric_eigenvalues, MAX_SWEEPS};

use crate::error::{Error, Result};
use crate::measures::{parse_rational, FactorKind, MeasureSpec};
use crate::poly::{rat_to_f64, Rat};

/// Name of the generator and splitting rule, echoed in output metadata.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng::seed_from_u64(seed), set_stream(sample_index); Box-Muller normals";

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    /// Dimension `N_0` of the square Gram matrix `X X^dagger`.
    pub n: usize,
    /// `c_i = N_0 / N_i`, one per Ginibre factor.
    pub shape_ratios: Vec<Rat>,
    /// Number of Haar unitaries summed in the prefactor (0 for none).
    pub unitary_sum_k: u32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n: 256,
            shape_ratios: vec![Rat::one()],
            unitary_sum_k: 0,
            samples: 40,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Shape(format!("N = {} must be at least 2", self.n)));
        }
        if self.samples == 0 {
            return Err(Error::Shape("at least one sample is needed".into()));
        }
        if let Some(c) = self.shape_ratios.iter().find(|c| !c.is_positive()) {
            return Err(Error::Shape(format!("shape ratio {c} must be positive")));
        }
        if self.unitary_sum_k == 1 {
            log::info!("k = 1 unitary prefactor does not change the spectrum");
        }
        self.dims().map(|_| ())
    }

    /// `[N_0, N_1, ..., N_s]` with `N_i = round(N_0 / c_i)`.
    pub fn dims(&self) -> Result<Vec<usize>> {
        let mut dims = vec![self.n];
        for c in &self.shape_ratios {
            let ni = (self.n as f64 / rat_to_f64(c)).round();
            if !(ni >= 1.0) || ni > 1e6 {
                return Err(Error::Shape(format!(
                    "N / c = {} / {c} is not a usable dimension",
                    self.n
                )));
            }
            dims.push(ni as usize);
        }
        Ok(dims)
    }

    /// The measure the ensemble approximates.
    pub fn spec(&self) -> Result<MeasureSpec> {
        let mut spec = MeasureSpec::identity();
        match self.unitary_sum_k {
            0 | 1 => {}
            2 => spec = spec.boxtimes(&MeasureSpec::arcsine()),
            k => {
                return Err(Error::domain(format!(
                    "no S-transform is available for a sum of {k} unitaries"
                )))
            }
        }
        for c in &self.shape_ratios {
            spec = spec.boxtimes(&MeasureSpec::mp(c.clone())?);
        }
        Ok(spec)
    }

    /// Ensemble whose limiting law is `spec`: integer powers of MP factors
    /// become Ginibre factors and a single arcsine factor the `k = 2`
    /// unitary prefactor. Other settings are kept.
    pub fn with_spec(&self, spec: &MeasureSpec) -> Result<Self> {
        let mut ratios = Vec::new();
        let mut k = 0;
        for f in spec.canonical().factors() {
            let e = &f.exponent;
            let times = (e.is_integer() && e.is_positive())
                .then(|| e.to_integer().to_usize())
                .flatten()
                .ok_or_else(|| {
                    Error::domain(format!("no ensemble realises the exponent {e} in {spec}"))
                })?;
            match &f.kind {
                FactorKind::Mp(c) => ratios.extend(std::iter::repeat_n(c.clone(), times)),
                FactorKind::Arcsine if times == 1 => k = 2,
                other => {
                    return Err(Error::domain(format!(
                        "no ensemble realises the factor {other}^{e}"
                    )));
                }
            }
        }
        Ok(EnsembleConfig {
            shape_ratios: ratios,
            unitary_sum_k: k,
            ..self.clone()
        })
    }
}

impl fmt::Display for EnsembleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.shape_ratios.iter().map(|c| c.to_string()).collect();
        write!(
            f,
            "N={},samples={},seed={},k={},c={}",
            self.n,
            self.samples,
            self.seed,
            self.unitary_sum_k,
            c.join(":")
        )
    }
}

/// `key=value` pairs separated by commas: `N`, `samples`, `seed`, `k`,
/// `c` (colon-separated ratios) or `s` (that many square factors).
/// Missing keys take the defaults.
impl FromStr for EnsembleConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = EnsembleConfig::default();
        let mut square_factors = None;
        let mut explicit_c = false;
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("expected key=value, got '{item}'")))?;
            let bad = |what: &str| Error::domain(format!("invalid {what} '{value}'"));
            match key.trim() {
                "N" | "n" => cfg.n = value.trim().parse().map_err(|_| bad("N"))?,
                "samples" => cfg.samples = value.trim().parse().map_err(|_| bad("sample count"))?,
                "seed" => cfg.seed = value.trim().parse().map_err(|_| bad("seed"))?,
                "k" => cfg.unitary_sum_k = value.trim().parse().map_err(|_| bad("k"))?,
                "s" => square_factors = Some(value.trim().parse::<usize>().map_err(|_| bad("s"))?),
                "c" => {
                    explicit_c = true;
                    cfg.shape_ratios = value
                        .split(':')
                        .map(|v| parse_rational(v.trim()))
                        .collect::<Result<_>>()?;
                }
                other => return Err(Error::domain(format!("unknown ensemble key '{other}'"))),
            }
        }
        if let Some(s) = square_factors {
            if explicit_c {
                return Err(Error::domain("give either s or c, not both"));
            }
            cfg.shape_ratios = vec![Rat::one(); s];
        }
        Ok(cfg)
    }
}

/// Stream for one sample.
pub fn sample_rng(seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    rng
}

/// Standard complex normal (`E|z|^2 = 1`) by Box–Muller.
pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    Complex64::new(r * theta.cos(), r * theta.sin())
}

/// `rows x cols` matrix of independent standard complex normals.
pub fn sample_ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar unitary: QR of a Ginibre draw with the phases of `diag R` moved
/// into `Q`.
pub fn sample_haar_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = sample_ginibre(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::one()
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Eigenvalues of one draw: the nonzero ones, and the number of zeros.
/// `X` has rank `min N_i` almost surely, so exactly `N_0 - min N_i`
/// eigenvalues are zeros; the smallest computed ones are taken to be them
/// rather than thresholding, since genuine eigenvalues of long products
/// can be far below any fixed cut.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpectrum {
    pub values: Vec<f64>,
    pub zeros: usize,
}

/// Draws sample number `index` of the ensemble.
pub fn build_sample(cfg: &EnsembleConfig, index: u64) -> Result<SampleSpectrum> {
    let dims = cfg.dims()?;
    let n0 = dims[0];
    let mut rng = sample_rng(cfg.seed, index);
    let mut x: Option<DMatrix<Complex64>> = None;
    if cfg.unitary_sum_k > 0 {
        let mut sum = DMatrix::<Complex64>::zeros(n0, n0);
        for _ in 0..cfg.unitary_sum_k {
            sum += sample_haar_unitary(n0, &mut rng);
        }
        sum /= Complex64::new((cfg.unitary_sum_k as f64).sqrt(), 0.0);
        x = Some(sum);
    }
    for w in dims.windows(2) {
        let mut g = sample_ginibre(w[0], w[1], &mut rng);
        g /= Complex64::new((w[1] as f64).sqrt(), 0.0);
        x = Some(match x {
            Some(x) => x * g,
            None => g,
        });
    }
    let x = x.unwrap_or_else(|| DMatrix::identity(n0, n0));
    // smaller Gram side; the other side adds structural zeros
    let (gram, structural) = if x.ncols() < x.nrows() {
        (x.adjoint() * &x, x.nrows() - x.ncols())
    } else {
        (&x * x.adjoint(), 0)
    };
    let eig = hermitian_eigenvalues(&gram)?;
    let rank = *dims.iter().min().expect("N_0 is always present");
    let deficit = eig.len().saturating_sub(rank);
    let values = eig[deficit..]
        .iter()
        .map(|&v| {
            if v < -1e-10 {
                log::warn!("clipping eigenvalue {v:e} to 0");
            }
            v.max(0.0)
        })
        .collect();
    Ok(SampleSpectrum {
        values,
        zeros: structural + deficit,
    })
}

/// Pooled eigenvalues of all samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    /// Sorted nonzero eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvalues counted as zero (the atom at the origin).
    pub zero_count: usize,
    pub samples: usize,
    pub n: usize,
}

/// Draws all samples (in parallel) and pools them.
pub fn simulate(cfg: &EnsembleConfig) -> Result<EmpiricalSpectrum> {
    cfg.validate()?;
    let parts: Vec<SampleSpectrum> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| build_sample(cfg, i))
        .collect::<Result<_>>()?;
    Ok(EmpiricalSpectrum::from_samples(parts, cfg.n))
}

impl EmpiricalSpectrum {
    pub fn from_samples(parts: Vec<SampleSpectrum>, n: usize) -> Self {
        let samples = parts.len();
        let zero_count = parts.iter().map(|p| p.zeros).sum();
        let mut values: Vec<f64> = parts.into_iter().flat_map(|p| p.values).collect();
        values.sort_by(f64::total_cmp);
        EmpiricalSpectrum {
            values,
            zero_count,
            samples,
            n,
        }
    }

    pub fn total(&self) -> usize {
        self.values.len() + self.zero_count
    }

    pub fn zero_fraction(&self) -> f64 {
        self.zero_count as f64 / self.total() as f64
    }

    /// Fraction of eigenvalues `<= x`, zeros included.
    pub fn ecdf(&self, x: f64) -> f64 {
        let zeros = if x >= 0.0 { self.zero_count } else { 0 };
        let below = self.values.partition_point(|&v| v <= x);
        (zeros + below) as f64 / self.total() as f64
    }

    /// `(1/n) sum x^k` over all eigenvalues, zeros included.
    pub fn moments(&self, k_max: usize) -> Vec<f64> {
        let n = self.total() as f64;
        (0..=k_max)
            .map(|k| {
                let s: f64 = self.values.iter().map(|x| x.powi(k as i32)).sum();
                if k == 0 {
                    1.0
                } else {
                    s / n
                }
            })
            .collect()
    }

    /// Equal-width histogram of the nonzero eigenvalues on `[lo, hi]`,
    /// normalised by the total count so it integrates to the continuous
    /// fraction.
    pub fn histogram(&self, bins: usize, lo: f64, hi: f64) -> Histogram {
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in &self.values {
            if v >= lo && v <= hi {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                counts[b] += 1;
            }
        }
        let total = self.total() as f64;
        Histogram {
            bins: counts
                .iter()
                .enumerate()
                .map(|(b, &c)| {
                    let a = lo + b as f64 * width;
                    (a, a + width, c as f64 / (total * width))
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serialises")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `(bin_lo, bin_hi, density)`.
    pub bins: Vec<(f64, f64, f64)>,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,density\n");
        for (a, b, d) in &self.bins {
            out.push_str(&format!("{a:?},{b:?},{d:?}\n"));
        }
        out
    }
}

/// Kolmogorov–Smirnov distance `sup |F_emp - F_model|`. The model CDF must
/// include any atom at zero and vanish below 0; its left limits are taken
/// one ulp below each jump of the empirical CDF.
pub fn ks_distance(spectrum: &EmpiricalSpectrum, model_cdf: impl Fn(f64) -> f64) -> f64 {
    let n = spectrum.total() as f64;
    let mut worst: f64 = 0.0;
    let mut count = 0usize;
    let mut step = |x: f64, jump: usize, worst: &mut f64| {
        let before = count as f64 / n;
        count += jump;
        let after = count as f64 / n;
        *worst = worst
            .max((model_cdf(x) - after).abs())
            .max((model_cdf(x.next_down()) - before).abs());
    };
    if spectrum.zero_count > 0 {
        step(0.0, spectrum.zero_count, &mut worst);
    }
    let v = &spectrum.values;
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        step(v[i], j - i, &mut worst);
        i = j;
    }
    worst
}
