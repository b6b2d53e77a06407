//! Monte Carlo harness for the distance-3 surface code under rotation noise.
//!
//! A trial draws a random logical state, encodes it, runs the noisy rounds,
//! one perfect round, decodes, corrects, and reports the squared overlap with
//! the ideal encoded state. Every random draw comes from a stream derived by
//! hashing `(master_seed, point, trial, role)`, so results do not depend on
//! how trials are scheduled across workers.

use std::f64::consts::TAU;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{fit_power_law, McEstimate};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::schwarma::{ArmaModel, NoiseSpec};
use crate::surface_code::{SurfaceCode, N_QUBITS, TICKS_PER_ROUND};

pub const CSV_COLUMNS: [&str; 7] = ["sigma", "sigma_eff", "physical_infidelity", "logical_infidelity", "ci_low", "ci_high", "trials"];

pub const MIN_TRIALS_PER_POINT: u64 = 100;
pub const MAX_ROUNDS: usize = 20;

fn default_trials() -> u64 {
    10_000
}
fn default_rounds() -> usize {
    3
}
fn default_resamples() -> usize {
    1000
}
fn default_confidence() -> f64 {
    0.95
}
fn default_output() -> String {
    "results.csv".into()
}

/// `sigma_grid` sets the innovation scale; `noise.innovations.sigma` must be
/// left out (or 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub noise: NoiseSpec,
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_point: u64,
    #[serde(default = "default_rounds")]
    pub n_rounds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_output")]
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn new(noise: NoiseSpec, sigma_grid: Vec<f64>) -> Self {
        Self {
            noise: NoiseSpec { innovations: noise.innovations.with_sigma(1.0), ..noise },
            sigma_grid,
            trials_per_point: default_trials(),
            n_rounds: default_rounds(),
            master_seed: 0,
            bootstrap_resamples: default_resamples(),
            confidence: default_confidence(),
            output_path: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key=value` overrides. Dotted keys reach into `noise`
    /// (`noise.T_h`, `noise.innovations.alpha`). Values parse as JSON and
    /// fall back to a plain string. Unknown keys are rejected.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let mut problems = Vec::new();
        for item in overrides {
            let item = item.as_ref();
            let Some((key, raw)) = item.split_once('=') else {
                problems.push(format!("override `{item}` is not key=value"));
                continue;
            };
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut slot = &mut value;
            let parts: Vec<&str> = key.trim().split('.').collect();
            for (depth, part) in parts.iter().enumerate() {
                let Some(obj) = slot.as_object_mut() else {
                    problems.push(format!("override `{key}`: `{}` is not an object", parts[..depth].join(".")));
                    break;
                };
                if depth + 1 == parts.len() {
                    obj.insert(part.to_string(), parsed.clone());
                    break;
                }
                slot = obj.entry(part.to_string()).or_insert_with(|| serde_json::json!({}));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    /// Every problem with the config, each prefixed with its field.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.noise.problems().into_iter().map(|p| format!("noise.{p}")).collect();
        if self.noise.innovations.sigma != 1.0 {
            out.push("noise.innovations.sigma: the scale comes from sigma_grid; omit this field".into());
        }
        if self.sigma_grid.is_empty() {
            out.push("sigma_grid: must not be empty".into());
        }
        for (i, s) in self.sigma_grid.iter().enumerate() {
            if !(*s > 0.0 && s.is_finite()) {
                out.push(format!("sigma_grid[{i}]: must be positive and finite (got {s})"));
            }
        }
        if self.sigma_grid.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("sigma_grid: must be strictly increasing".into());
        }
        if self.trials_per_point < MIN_TRIALS_PER_POINT {
            out.push(format!("trials_per_point: at least {MIN_TRIALS_PER_POINT} (got {})", self.trials_per_point));
        }
        if !(1..=MAX_ROUNDS).contains(&self.n_rounds) {
            out.push(format!("n_rounds: must be in 1..={MAX_ROUNDS} (got {})", self.n_rounds));
        }
        if self.bootstrap_resamples == 0 {
            out.push("bootstrap_resamples: must be at least 1".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            out.push(format!("confidence: must lie in (0, 1) (got {})", self.confidence));
        }
        if self.output_path.trim().is_empty() {
            out.push("output_path: must not be empty".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// The manifest sits next to the CSV: `out.csv` → `out.manifest.json`.
    pub fn manifest_path(&self) -> PathBuf {
        manifest_path_for(Path::new(&self.output_path))
    }
}

pub fn manifest_path_for(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Independent random streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    State,
    Noise,
    Measurement,
    Bootstrap,
}

impl StreamRole {
    fn tag(self) -> u8 {
        match self {
            StreamRole::State => 1,
            StreamRole::Noise => 2,
            StreamRole::Measurement => 3,
            StreamRole::Bootstrap => 4,
        }
    }
}

/// First eight bytes of SHA-256 over the labelled indices.
pub fn trial_seed(master_seed: u64, point: usize, trial: u64) -> u64 {
    let digest = Sha256::new()
        .chain_update(b"heavyqec/trial")
        .chain_update(master_seed.to_le_bytes())
        .chain_update((point as u64).to_le_bytes())
        .chain_update(trial.to_le_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

pub fn stream(seed: u64, role: StreamRole) -> ChaCha8Rng {
    let digest = Sha256::new().chain_update(b"heavyqec/stream").chain_update(seed.to_le_bytes()).chain_update([role.tag()]).finalize();
    ChaCha8Rng::from_seed(digest.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub fidelity_sq: f64,
    pub seed: u64,
}

impl TrialResult {
    pub fn infidelity(&self) -> f64 {
        (1.0 - self.fidelity_sq).clamp(0.0, 1.0)
    }
}

/// One CSV row. `sigma` is the innovation scale; `sigma_eff` the per-tick
/// marginal scale that sets `physical_infidelity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sigma: f64,
    pub sigma_eff: f64,
    pub physical_infidelity: f64,
    pub logical_infidelity: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl ResultRow {
    pub fn innovation_sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ci_overlaps(&self, other: &ResultRow) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        let missing: Vec<&str> = CSV_COLUMNS.iter().copied().filter(|c| !headers.iter().any(|h| h == *c)).collect();
        if !missing.is_empty() {
            return Err(Error::Io(format!("result csv is missing columns: {}", missing.join(", "))));
        }
        let rows = reader.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>().map_err(|e| Error::Io(e.to_string()))?;
        Ok(Self { rows })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    /// Log-log least-squares slope of logical against physical infidelity
    /// over rows with a nonzero logical estimate. Returns (slope, intercept).
    pub fn loglog_slope(&self) -> Result<(f64, f64)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter(|r| r.logical_infidelity > 0.0).map(|r| (r.physical_infidelity, r.logical_infidelity)).unzip();
        fit_power_law(&xs, &ys)
    }

    /// Same fit restricted to rows whose logical infidelity lies in
    /// `[lo, hi]`: below `lo` a finite trial count cannot resolve the rate,
    /// above `hi` the curve bends toward saturation. Also returns the number
    /// of rows used.
    pub fn loglog_slope_within(&self, lo: f64, hi: f64) -> Result<(f64, f64, usize)> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.logical_infidelity >= lo && r.logical_infidelity <= hi)
            .map(|r| (r.physical_infidelity, r.logical_infidelity))
            .unzip();
        let (slope, intercept) = fit_power_law(&xs, &ys)?;
        Ok((slope, intercept, xs.len()))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointManifest {
    pub index: usize,
    pub innovation_sigma: f64,
    pub sigma_eff: f64,
    /// Trials `first_trial..first_trial + trials`; each trial's seed is
    /// `trial_seed(master_seed, index, trial)`.
    pub first_trial: u64,
    pub trials: u64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub seed_derivation: String,
    pub points: Vec<PointManifest>,
    pub wall_time_seconds: f64,
    pub complete: bool,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Percentile bootstrap interval for the mean: `resamples` resamples with
/// replacement, then the `(1-c)/2` and `(1+c)/2` quantiles of their means
/// (linear interpolation between order statistics).
pub fn bootstrap_ci<R: Rng + ?Sized>(samples: &[f64], resamples: usize, confidence: f64, rng: &mut R) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("bootstrap needs at least one sample".into()));
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter("bootstrap needs at least one resample".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence must lie in (0, 1) (got {confidence})")));
    }
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let quantile = |p: f64| {
        let h = p * (resamples - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(resamples - 1);
        means[lo] + (h - lo as f64) * (means[hi] - means[lo])
    };
    Ok((quantile((1.0 - confidence) / 2.0), quantile((1.0 + confidence) / 2.0)))
}

/// Direct Monte Carlo of `1 - |⟨ψ|exp(-iθσ_y)|ψ⟩|²` over uniformly drawn
/// `|ψ⟩ = cos α|0⟩ + e^{iβ} sin α|1⟩` and `θ ~ spec`.
pub fn estimate_physical_infidelity_mc<R: Rng + ?Sized>(spec: &DistributionSpec, trials: u64, rng: &mut R) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::InvalidParameter("need at least two trials".into()));
    }
    let sampler = spec.sampler()?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let (alpha, beta) = (TAU * rng.random::<f64>(), TAU * rng.random::<f64>());
        let theta = sampler.sample(rng);
        let a = Complex64::new(alpha.cos(), 0.0);
        let b = Complex64::from_polar(alpha.sin(), beta);
        let (s, c) = theta.sin_cos();
        let (ra, rb) = (a * c - b * s, a * s + b * c);
        let overlap = a.conj() * ra + b.conj() * rb;
        let x = 1.0 - overlap.norm_sqr();
        sum += x;
        sum_sq += x * x;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), trials })
}

#[derive(Debug, Clone)]
struct GridPoint {
    model: ArmaModel,
    marginal: DistributionSpec,
}

/// A validated config with the decoder and per-point noise models built.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    code: SurfaceCode,
    points: Vec<GridPoint>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let code = SurfaceCode::new(config.n_rounds)?;
        let points = config
            .sigma_grid
            .iter()
            .map(|&s| {
                let model = config.noise.with_sigma(s).model()?;
                let marginal = model.marginal_spec();
                Ok(GridPoint { model, marginal })
            })
            .collect::<Result<_>>()?;
        Ok(Self { config, code, points })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn run_trial(&self, point: usize, trial: u64) -> Result<TrialResult> {
        let p = self.points.get(point).ok_or_else(|| Error::InvalidParameter(format!("no grid point {point}")))?;
        let seed = trial_seed(self.config.master_seed, point, trial);
        self.trial_with_model(&p.model, seed).map_err(|e| Error::TrialFailed { point, trial, seed, message: e.to_string() })
    }

    /// One trial under an arbitrary noise model, fully determined by `seed`.
    pub fn trial_with_model(&self, model: &ArmaModel, seed: u64) -> Result<TrialResult> {
        let mut rs = stream(seed, StreamRole::State);
        let (alpha, beta) = (TAU * rs.random::<f64>(), TAU * rs.random::<f64>());
        let angles = model.generate(self.code.n_rounds() * TICKS_PER_ROUND, N_QUBITS, &mut stream(seed, StreamRole::Noise))?;
        let outcome = self.code.run(alpha, beta, &angles, None, &mut stream(seed, StreamRole::Measurement))?;
        Ok(TrialResult { fidelity_sq: outcome.fidelity, seed })
    }

    /// All trials of one grid point, in trial order.
    pub fn run_point_trials(&self, point: usize) -> Result<Vec<TrialResult>> {
        (0..self.config.trials_per_point).into_par_iter().map(|t| self.run_trial(point, t)).collect()
    }

    pub fn run_point(&self, point: usize) -> Result<ResultRow> {
        let trials = self.run_point_trials(point)?;
        let infid: Vec<f64> = trials.iter().map(TrialResult::infidelity).collect();
        let mean = infid.iter().sum::<f64>() / infid.len() as f64;
        let mut rng = stream(trial_seed(self.config.master_seed, point, u64::MAX), StreamRole::Bootstrap);
        let (lo, hi) = bootstrap_ci(&infid, self.config.bootstrap_resamples, self.config.confidence, &mut rng)?;
        let p = &self.points[point];
        Ok(ResultRow {
            sigma: self.config.sigma_grid[point],
            sigma_eff: p.marginal.sigma,
            physical_infidelity: p.marginal.physical_infidelity()?,
            logical_infidelity: mean,
            // the percentile interval can miss a heavily skewed mean by a hair
            ci_low: lo.min(mean),
            ci_high: hi.max(mean),
            trials: self.config.trials_per_point,
        })
    }

    fn manifest(&self, done: usize, wall: f64) -> Manifest {
        Manifest {
            artifact: "heavyqec".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config.clone(),
            master_seed: self.config.master_seed,
            seed_derivation: "trial seed = first 8 bytes (LE) of sha256(\"heavyqec/trial\" | master_seed | point | trial); \
                              streams = chacha8(sha256(\"heavyqec/stream\" | trial seed | role))"
                .into(),
            points: self
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| PointManifest {
                    index: i,
                    innovation_sigma: self.config.sigma_grid[i],
                    sigma_eff: p.marginal.sigma,
                    first_trial: 0,
                    trials: self.config.trials_per_point,
                    completed: i < done,
                })
                .collect(),
            wall_time_seconds: wall,
            complete: done == self.points.len(),
        }
    }

    /// Rows already on disk from an earlier run of this exact config.
    fn resume_rows(&self) -> Vec<ResultRow> {
        let csv = PathBuf::from(&self.config.output_path);
        let Ok(manifest) = Manifest::read(&self.config.manifest_path()) else { return vec![] };
        // where the rows live has no bearing on their values
        let same = ExperimentConfig { output_path: self.config.output_path.clone(), ..manifest.config };
        if same != self.config {
            return vec![];
        }
        let Ok(table) = ResultTable::read_csv(&csv) else { return vec![] };
        let consistent = table.rows.len() <= self.points.len()
            && table.rows.iter().zip(&self.config.sigma_grid).all(|(r, s)| r.sigma == *s && r.trials == self.config.trials_per_point);
        if consistent {
            table.rows
        } else {
            vec![]
        }
    }

    /// Runs every grid point, writing the CSV and manifest after each one.
    /// Points already present from an interrupted run of the same config
    /// are kept.
    pub fn run(&self) -> Result<ResultTable> {
        let start = Instant::now();
        let csv = PathBuf::from(&self.config.output_path);
        let mut table = ResultTable { rows: self.resume_rows() };
        let write = |table: &ResultTable| -> Result<()> {
            table.write_csv(&csv)?;
            let manifest = self.manifest(table.rows.len(), start.elapsed().as_secs_f64());
            write_atomic(&self.config.manifest_path(), serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes())
        };
        write(&table)?;
        for point in table.rows.len()..self.points.len() {
            table.rows.push(self.run_point(point)?);
            write(&table)?;
        }
        Ok(table)
    }
}

pub fn run_trial(config: &ExperimentConfig, point: usize, trial: u64) -> Result<TrialResult> {
    Experiment::new(config.clone())?.run_trial(point, trial)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    Experiment::new(config.clone())?.run()
}

/// As [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(config: &ExperimentConfig, workers: usize) -> Result<ResultTable> {
    let experiment = Experiment::new(config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| experiment.run())
}
