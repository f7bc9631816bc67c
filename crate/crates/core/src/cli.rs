//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 when the
//! library reports a domain or numerical failure, 2 on usage errors
//! (including malformed measure strings, reported with a caret).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::closedform::{resolve_measure, Family};
use crate::ensembles::{ks_distance, simulate, EnsembleConfig, RNG_DESCRIPTION};
use crate::error::{Error, Result};
use crate::isotropic::RadialProfile;
use crate::moments::{moments_from_density, moments_from_resolvent};
use crate::quadrature::CdfTable;
use crate::resolvent::{InversionOptions, Spectrum};
use crate::MeasureSpec;

/// Panels per half-support for model CDFs used in KS comparisons.
const CDF_PANELS: usize = 200;

#[derive(Parser, Debug)]
#[command(
    name = "freewishart",
    version,
    about = "Spectral densities of free multiplicative convolutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Density table on a cosine-clustered grid inside the support.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Fraction of the support width left out at each edge.
        #[arg(long, default_value_t = 0.01)]
        edge_margin: f64,
        /// Heights of the Richardson pair.
        #[arg(long, num_args = 2, value_names = ["EPS1", "EPS2"], default_values_t = [1e-6, 1e-7])]
        eps: Vec<f64>,
    },
    /// Support edges, edge exponents and atom at zero.
    Support {
        #[command(flatten)]
        common: Common,
    },
    /// Exact moments from the resolvent series.
    Moments {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'K', long = "order", default_value_t = 8)]
        k: usize,
    },
    /// Monte Carlo spectrum of the matching random-matrix ensemble.
    Simulate {
        /// Ensemble as `N=256,samples=40,seed=7,k=2,c=1:1/2` (or `s=3`).
        #[arg(long, default_value = "")]
        config: String,
        /// Model measure; sets the factor chain and adds a KS distance.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Emit all eigenvalues instead of a histogram (JSON only).
        #[arg(long)]
        eigenvalues: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-checks of the resolvent density against closed forms, exact
    /// moments and, optionally, a simulation.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Ensemble settings for a Monte Carlo comparison.
        #[arg(long)]
        simulate: Option<String>,
    },
    /// Ring radii and radial distribution of the isotropic matrix.
    Ring {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Derivative of the confining potential, `2 Re G(x + i0)`.
    Potential {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long, default_value_t = 0.01)]
        edge_margin: f64,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Measure spec such as `as*mp(1/2)^2`, or an alias (fc2, fc3, bures,
    /// bures2, mp-sqrt, mp-cbrt, arcsine).
    #[arg(long, short = 'm')]
    pub measure: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parses `args` (program name first), runs the command and writes its
/// output to `out` (or the `--out` file) and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let (text, path) = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "{}", diagnostic(&cli.command, &e));
            return exit_code(&e);
        }
    };
    let written = match path {
        Some(p) => std::fs::write(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn measure_arg(cmd: &Command) -> Option<&str> {
    match cmd {
        Command::Density { common, .. }
        | Command::Support { common }
        | Command::Moments { common, .. }
        | Command::Compare { common, .. }
        | Command::Ring { common, .. }
        | Command::Potential { common, .. } => Some(&common.measure),
        Command::Simulate { measure, .. } => measure.as_deref(),
    }
}

/// Error text; parse errors in the measure echo the input with a caret.
pub fn diagnostic(cmd: &Command, e: &Error) -> String {
    match (e, measure_arg(cmd)) {
        (Error::Parse { position, message }, Some(m)) if *position <= m.len() => {
            format!(
                "error: invalid measure: {message}\n  {m}\n  {}^",
                " ".repeat(*position)
            )
        }
        (e, Some(m)) => format!("error: {e} (measure '{m}')"),
        (e, None) => format!("error: {e}"),
    }
}

fn render<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

fn csv_row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

/// Runs one command, returning its output and the file to write it to.
pub fn execute(cmd: &Command) -> Result<(String, Option<PathBuf>)> {
    match cmd {
        Command::Density {
            common,
            points,
            edge_margin,
            eps,
        } => {
            let spec = resolve_measure(&common.measure)?;
            let opts = InversionOptions {
                eps: (eps[0], eps[1]),
                edge_margin: *edge_margin,
            };
            if !(eps[0] > eps[1] && eps[1] > 0.0) {
                return Err(Error::domain("the Richardson heights need eps1 > eps2 > 0"));
            }
            let curve = Spectrum::with_options(spec.build_resolvent(), opts)?
                .curve(*points, *edge_margin)?;
            let text = match common.format {
                Format::Csv => curve.to_csv(),
                Format::Json => curve.to_json() + "\n",
            };
            Ok((text, common.out.clone()))
        }
        Command::Support { common } => {
            let spec = resolve_measure(&common.measure)?;
            let s = Spectrum::from_spec(&spec)?;
            let report = SupportReport {
                measure: spec.to_string(),
                support: [s.support().0, s.support().1],
                edge_exponents: [s.edge_exponents().0, s.edge_exponents().1],
                atom_at_zero: s.atom()?,
            };
            let text = match common.format {
                Format::Csv => {
                    let [a, b] = report.support;
                    let [p, q] = report.edge_exponents;
                    "x_lo,x_hi,beta_lo,beta_hi,atom\n".to_string()
                        + &csv_row(&[a, b, p, q, report.atom_at_zero].map(|v| format!("{v:?}")))
                }
                Format::Json => render(&report),
            };
            Ok((text, common.out.clone()))
        }
        Command::Moments { common, k } => {
            let spec = resolve_measure(&common.measure)?;
            let m = moments_from_resolvent(&spec.build_resolvent(), *k)?;
            let text = match common.format {
                Format::Csv => {
                    let mut s = String::from("k,moment,value\n");
                    for (i, (r, f)) in m.values().iter().zip(m.to_f64()).enumerate() {
                        s += &csv_row(&[i.to_string(), r.to_string(), format!("{f:?}")]);
                    }
                    s
                }
                Format::Json => render(&MomentsReport {
                    measure: spec.to_string(),
                    exact: m.values().iter().map(|r| r.to_string()).collect(),
                    values: m.to_f64(),
                }),
            };
            Ok((text, common.out.clone()))
        }
        Command::Simulate {
            config,
            measure,
            bins,
            eigenvalues,
            format,
            out,
        } => {
            let mut cfg: EnsembleConfig = config.parse()?;
            let spec = match measure {
                Some(m) => {
                    let spec = resolve_measure(m)?;
                    cfg = cfg.with_spec(&spec)?;
                    spec
                }
                None => cfg.spec()?,
            };
            let report = simulation_report(&cfg, &spec, measure.is_some(), *bins, *eigenvalues)?;
            let text = match format {
                Format::Csv if *eigenvalues => {
                    return Err(Error::domain("--eigenvalues needs --format json"));
                }
                Format::Csv => report
                    .histogram
                    .as_ref()
                    .expect("histogram requested")
                    .to_csv(),
                Format::Json => render(&report),
            };
            Ok((text, out.clone()))
        }
        Command::Compare {
            common,
            points,
            simulate,
        } => {
            let spec = resolve_measure(&common.measure)?;
            let report = compare(&spec, *points, simulate.as_deref())?;
            let text = match common.format {
                Format::Csv => report.to_csv(),
                Format::Json => render(&report),
            };
            Ok((text, common.out.clone()))
        }
        Command::Ring { common, points } => {
            let spec = resolve_measure(&common.measure)?;
            let profile = RadialProfile::new(&spec, *points)?;
            let text = match common.format {
                Format::Csv => format!(
                    "# r_in={:?} r_out={:?}\n{}",
                    profile.inner_radius,
                    profile.outer_radius,
                    profile.to_csv()
                ),
                Format::Json => render(&profile),
            };
            Ok((text, common.out.clone()))
        }
        Command::Potential {
            common,
            points,
            edge_margin,
        } => {
            let spec = resolve_measure(&common.measure)?;
            let s = Spectrum::from_spec(&spec)?;
            let grid: Vec<f64> = s
                .curve(*points, *edge_margin)?
                .points
                .iter()
                .map(|p| p.0)
                .collect();
            let values = grid
                .iter()
                .map(|&x| Ok((x, s.potential_derivative(x)?)))
                .collect::<Result<Vec<_>>>()?;
            let text = match common.format {
                Format::Csv => {
                    let mut t = String::from("x,dV\n");
                    for (x, v) in &values {
                        t += &csv_row(&[format!("{x:?}"), format!("{v:?}")]);
                    }
                    t
                }
                Format::Json => render(&PotentialReport {
                    measure: spec.to_string(),
                    points: values,
                }),
            };
            Ok((text, common.out.clone()))
        }
    }
}

#[derive(Serialize)]
struct SupportReport {
    measure: String,
    support: [f64; 2],
    edge_exponents: [f64; 2],
    atom_at_zero: f64,
}

#[derive(Serialize)]
struct MomentsReport {
    measure: String,
    exact: Vec<String>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct PotentialReport {
    measure: String,
    points: Vec<(f64, f64)>,
}

#[derive(Serialize)]
pub struct SimulationReport {
    pub config: String,
    pub rng: String,
    pub model: String,
    pub total_eigenvalues: usize,
    pub atom_fraction: f64,
    pub ks: Option<f64>,
    pub histogram: Option<crate::ensembles::Histogram>,
    pub eigenvalues: Option<Vec<f64>>,
}

/// KS distance of a simulated spectrum against the resolvent CDF of `spec`.
pub fn ks_against(
    spectrum: &crate::ensembles::EmpiricalSpectrum,
    spec: &MeasureSpec,
) -> Result<f64> {
    let model = CdfTable::build(&Spectrum::from_spec(spec)?, CDF_PANELS)?;
    Ok(ks_distance(spectrum, |x| model.eval(x)))
}

fn simulation_report(
    cfg: &EnsembleConfig,
    spec: &MeasureSpec,
    with_ks: bool,
    bins: usize,
    keep_values: bool,
) -> Result<SimulationReport> {
    let spectrum = simulate(cfg)?;
    let ks = if with_ks {
        Some(ks_against(&spectrum, spec)?)
    } else {
        None
    };
    let top = spectrum.values.last().copied().unwrap_or(1.0);
    Ok(SimulationReport {
        config: cfg.to_string(),
        rng: RNG_DESCRIPTION.to_string(),
        model: spec.to_string(),
        total_eigenvalues: spectrum.total(),
        atom_fraction: spectrum.zero_fraction(),
        ks,
        histogram: (!keep_values).then(|| spectrum.histogram(bins, 0.0, top)),
        eigenvalues: keep_values.then(|| spectrum.values.clone()),
    })
}

#[derive(Serialize)]
pub struct CompareReport {
    pub measure: String,
    pub support: [f64; 2],
    pub atom_at_zero: f64,
    pub mass: f64,
    pub mean: f64,
    /// Largest `|rho - rho_closed| / max rho_closed` on the grid.
    pub closed_form_error: Option<f64>,
    /// Largest relative gap between quadrature and exact moments, `k <= 4`.
    pub moment_error: f64,
    pub simulation: Option<SimulationReport>,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut rows = vec![
            ("support_lo", self.support[0]),
            ("support_hi", self.support[1]),
            ("atom_at_zero", self.atom_at_zero),
            ("mass", self.mass),
            ("mean", self.mean),
            ("moment_error", self.moment_error),
        ];
        if let Some(e) = self.closed_form_error {
            rows.push(("closed_form_error", e));
        }
        if let Some(sim) = &self.simulation {
            rows.push(("mc_atom_fraction", sim.atom_fraction));
            if let Some(ks) = sim.ks {
                rows.push(("mc_ks", ks));
            }
        }
        let mut s = String::from("check,value\n");
        for (k, v) in rows {
            s += &csv_row(&[k.to_string(), format!("{v:?}")]);
        }
        s
    }
}

pub fn compare(
    spec: &MeasureSpec,
    points: usize,
    simulate_cfg: Option<&str>,
) -> Result<CompareReport> {
    let s = Spectrum::from_spec(spec)?;
    let numeric = moments_from_density(&s, 4)?;
    let exact = moments_from_resolvent(s.poly(), 4)?.to_f64();
    let moment_error = numeric
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    let closed_form_error = match Family::from_spec(spec) {
        Some(f) => {
            let curve = s.curve(points, 0.01)?;
            let peak = curve
                .points
                .iter()
                .map(|&(x, _)| f.eval(x))
                .fold(0.0, f64::max);
            Some(
                curve
                    .points
                    .iter()
                    .map(|&(x, r)| (r - f.eval(x)).abs())
                    .fold(0.0, f64::max)
                    / peak,
            )
        }
        None => None,
    };
    let simulation = match simulate_cfg {
        Some(c) => {
            let cfg = c.parse::<EnsembleConfig>()?.with_spec(spec)?;
            Some(simulation_report(&cfg, spec, true, 64, false)?)
        }
        None => None,
    };
    Ok(CompareReport {
        measure: spec.to_string(),
        support: [s.support().0, s.support().1],
        atom_at_zero: s.atom()?,
        mass: numeric[0],
        mean: numeric[1],
        closed_form_error,
        moment_error,
        simulation,
    })
}
