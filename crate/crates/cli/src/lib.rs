//! `heavyqec` command line: analytic tables, distribution checks, surface-code
//! experiments, and the circuit layout.
//!
//! Exit codes: 0 success, 1 failed check or I/O error, 2 usage, 3 invalid
//! configuration, 4 numerical precision exhausted.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heavyqec::analytic::{fit_leading_order, log_grid, logical_error_correlated, logical_error_correlated_auto, logical_error_uncorrelated, PerfectCodeModel};
use heavyqec::distributions::{empirical_cf, DistributionSpec, Family};
use heavyqec::error::Error;
use heavyqec::experiment::{run_experiment, run_experiment_with_workers, ExperimentConfig};
use heavyqec::schwarma::{NoiseKind, NoiseSpec};
use heavyqec::surface_code::CodeLayout;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "heavyqec", version, about = "Heavy-tailed correlated rotation noise versus quantum error correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Code-capacity failure rates (P_ph, P_unc, P_cor) over a sigma grid.
    Analytic(AnalyticArgs),
    /// Surface-code Monte Carlo from a JSON config plus overrides.
    Simulate(SimulateArgs),
    /// Compare sampled and analytic characteristic functions.
    DistCheck(DistCheckArgs),
    /// Print qubit coordinates, stabilizers and the per-tick schedule.
    LayoutDump(LayoutArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Student,
    Stable,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Student => Family::StudentT,
            FamilyArg::Stable => Family::Stable,
        }
    }
}

#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    /// Degrees of freedom (student).
    #[arg(long)]
    nu: Option<u32>,
    /// Stability index (stable).
    #[arg(long)]
    alpha: Option<f64>,
}

impl FamilyArgs {
    fn spec(&self, sigma: f64) -> DistributionSpec {
        DistributionSpec { family: self.family.into(), sigma, nu: self.nu, alpha: self.alpha }
    }
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Code distance (odd).
    #[arg(long, short = 'd', default_value_t = 3)]
    distance: u32,
    /// Number of physical qubits; defaults to 2d - 1.
    #[arg(long, short = 'n')]
    n_qubits: Option<u32>,
    /// Explicit comma-separated sigma values; overrides the log grid.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3)]
    sigma_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    sigma_max: f64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Working precision for the correlated sum; automatic when omitted.
    #[arg(long)]
    bits: Option<u32>,
    /// Append fitted exponent and coefficient per curve.
    #[arg(long)]
    fit: bool,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON experiment config; flags and --set are applied on top.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// `key=value` override, repeatable (dotted keys reach into noise).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Result CSV path (the manifest is written alongside).
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    noise: Option<NoiseArg>,
    /// EMA half-life in ticks.
    #[arg(long)]
    half_life: Option<f64>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    nu: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<u64>,
    /// Print the log-log slope of logical against physical infidelity.
    #[arg(long)]
    fit: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseArg {
    White,
    Dc,
    Ema,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::White => NoiseKind::White,
            NoiseArg::Dc => NoiseKind::Dc,
            NoiseArg::Ema => NoiseKind::Ema,
        }
    }
}

#[derive(Debug, Args)]
struct DistCheckArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Deviation threshold in standard errors.
    #[arg(long, default_value_t = 4.0)]
    tolerance: f64,
    /// Samples at `sigma * factor` while comparing against `sigma`; a
    /// negative control for the check itself.
    #[arg(long, hide = true)]
    mis_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::InvalidParameter(_) | Error::Domain(_) | Error::Unsupported(_) => EXIT_INVALID,
            Error::PrecisionInsufficient { .. } => EXIT_PRECISION,
            _ => EXIT_FAILED,
        };
        let mut message = e.to_string();
        if let Error::PrecisionInsufficient { bits, .. } = e {
            message.push_str(&format!(" (hint: pass --bits {})", bits * 2));
        }
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_FAILED, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn emit(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Analytic(a) => cmd_analytic(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::DistCheck(a) => cmd_dist_check(&a, out),
        Command::LayoutDump(a) => emit(out, a.out.as_ref(), &CodeLayout::get().dump()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_analytic(a: &AnalyticArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let grid = match &a.sigma {
        Some(list) => list.clone(),
        None => {
            if !(a.sigma_min > 0.0 && a.sigma_max >= a.sigma_min) {
                return Err(usage(format!("need 0 < --sigma-min <= --sigma-max (got {} and {})", a.sigma_min, a.sigma_max)));
            }
            log_grid(a.sigma_min, a.sigma_max, a.points)
        }
    };
    if grid.is_empty() {
        return Err(usage("the sigma grid is empty"));
    }
    let mut model = PerfectCodeModel::new(a.distance, a.family.spec(grid[0]))?;
    if let Some(n) = a.n_qubits {
        model = model.with_n_qubits(n)?;
    }
    let mut text = String::from("sigma,P_ph,P_unc,P_cor\n");
    let (mut unc, mut cor) = (Vec::new(), Vec::new());
    for &sigma in &grid {
        let m = PerfectCodeModel { spec: model.spec.with_sigma(sigma), ..model };
        m.validate()?;
        let p_ph = m.spec.physical_error_prob()?;
        let p_unc = logical_error_uncorrelated(&m)?;
        let p_cor = match a.bits {
            Some(bits) => logical_error_correlated(&m, bits)?,
            None => logical_error_correlated_auto(&m)?.value,
        };
        text.push_str(&format!("{sigma:e},{p_ph:e},{p_unc:e},{p_cor:e}\n"));
        unc.push(p_unc);
        cor.push(p_cor);
    }
    if a.fit {
        for (name, values) in [("P_unc", &unc), ("P_cor", &cor)] {
            let fit = fit_leading_order(&grid, values)?;
            text.push_str(&format!(
                "# fit {name} exponent={:.6} coefficient={:.6e} drift={:.3e}\n",
                fit.exponent,
                fit.coefficient,
                fit.exponent_drift()
            ));
        }
    }
    emit(out, a.out.as_ref(), &text)
}

fn resolve_config(a: &SimulateArgs) -> Result<ExperimentConfig, Failure> {
    let base = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => {
            if a.sigma_grid.is_none() && a.overrides.iter().all(|o| !o.starts_with("sigma_grid=")) {
                return Err(usage("simulate needs --config or --sigma-grid"));
            }
            ExperimentConfig::new(NoiseSpec::white(DistributionSpec::gaussian(1.0)), vec![])
        }
    };
    let mut sets: Vec<String> = Vec::new();
    if let Some(n) = a.noise {
        sets.push(format!("noise.mode=\"{}\"", NoiseKind::from(n)));
    }
    if let Some(t) = a.half_life {
        sets.push(format!("noise.T_h={t}"));
    }
    if let Some(f) = a.family {
        sets.push(format!("noise.innovations.family=\"{}\"", Family::from(f)));
    }
    if let Some(nu) = a.nu {
        sets.push(format!("noise.innovations.nu={nu}"));
    }
    if let Some(alpha) = a.alpha {
        sets.push(format!("noise.innovations.alpha={alpha}"));
    }
    if let Some(grid) = &a.sigma_grid {
        let items: Vec<String> = grid.iter().map(|s| format!("{s:e}")).collect();
        sets.push(format!("sigma_grid=[{}]", items.join(",")));
    }
    if let Some(t) = a.trials {
        sets.push(format!("trials_per_point={t}"));
    }
    sets.extend(a.overrides.iter().cloned());
    if let Some(seed) = a.seed {
        sets.push(format!("master_seed={seed}"));
    }
    if let Some(out) = &a.out {
        sets.push(format!("output_path={}", serde_json::Value::from(out.to_string_lossy())));
    }
    let config = base.with_overrides(&sets)?;
    config.validate()?;
    Ok(config)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config = resolve_config(a)?;
    writeln!(err, "resolved config:\n{}", config.to_json_pretty())?;
    let table = match a.workers {
        Some(w) => run_experiment_with_workers(&config, w)?,
        None => run_experiment(&config)?,
    };
    write!(out, "{}", table.to_csv_string())?;
    if a.fit {
        let (slope, intercept) = table.loglog_slope()?;
        writeln!(out, "# fit slope={slope:.4} coefficient={:.4e}", intercept.exp())?;
    }
    writeln!(err, "wrote {} and {}", config.output_path, config.manifest_path().display())?;
    Ok(())
}

fn cmd_dist_check(a: &DistCheckArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    let spec = a.family.spec(a.sigma);
    spec.validate()?;
    let drawn = spec.with_sigma(a.sigma * a.mis_scale.unwrap_or(1.0));
    let sampler = drawn.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut samples = vec![0.0; a.samples];
    sampler.fill(&mut rng, &mut samples);
    writeln!(out, "distribution: {}", describe(&spec))?;
    writeln!(out, "{:>5} {:>14} {:>14} {:>12} {:>8}  verdict", "t", "empirical", "analytic", "std_err", "z")?;
    let mut ok = true;
    for t in [0.5, 1.0, 2.0] {
        let (m, se) = empirical_cf(&samples, t);
        let want = spec.char_fn(t)?;
        let z = if se > 0.0 { (m - want) / se } else if m == want { 0.0 } else { f64::INFINITY };
        let pass = z.abs() <= a.tolerance;
        ok &= pass;
        writeln!(out, "{t:>5} {m:>14.8} {want:>14.8} {se:>12.3e} {z:>8.2}  {}", if pass { "PASS" } else { "FAIL" })?;
    }
    writeln!(out, "overall: {}", if ok { "PASS" } else { "FAIL" })?;
    if ok {
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAILED, message: format!("empirical cf deviates by more than {} SE", a.tolerance) })
    }
}

fn describe(spec: &DistributionSpec) -> String {
    let mut s = format!("family={} sigma={}", spec.family, spec.sigma);
    if let Some(nu) = spec.nu {
        s.push_str(&format!(" nu={nu}"));
    }
    if let Some(alpha) = spec.alpha {
        s.push_str(&format!(" alpha={alpha}"));
    }
    s
}
