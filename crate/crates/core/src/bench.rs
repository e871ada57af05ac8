//! Seeded Monte-Carlo experiment sweeps with CSV/JSON outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::encoding::{build_qubo_b2, cost_oracle, SubproblemMatrix, MAX_ENCODING_BITS, MAX_QUBITS};
use crate::error::{invalid, Error, Result};
use crate::mimo::{infinite_resolution_gain, sample_rayleigh_channel, ChannelMatrix, PhaseIndexVector};
use crate::qaoa::{landscape_grid, solve_relaxed_with, GridAxis, InitialState, Landscape};
use crate::rng;
use crate::simulator::WarmStartAngles;
use crate::solvers::{
    co_based, exhaustive_search, quantized_svd, simulated_annealing, solve_alg1_b2, solve_alg2, AnnealingSchedule,
    AoConfig, SolveOutcome, EXHAUSTIVE_MAX_BITS,
};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

pub const RESULTS_HEADER: &str = "solver,nt,nr,b,trial,seed,snr,runtime_ms";
pub const SUMMARY_HEADER: &str = "solver,nt,nr,b,n,mean,ci95_low,ci95_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exhaustive,
    Sa,
    Qsvd,
    Alg1,
    Alg2,
    Alg2Ws,
    Co,
    Infinite,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        Self::Exhaustive,
        Self::Sa,
        Self::Qsvd,
        Self::Alg1,
        Self::Alg2,
        Self::Alg2Ws,
        Self::Co,
        Self::Infinite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::Sa => "sa",
            Self::Qsvd => "qsvd",
            Self::Alg1 => "alg1",
            Self::Alg2 => "alg2",
            Self::Alg2Ws => "alg2_ws",
            Self::Co => "co",
            Self::Infinite => "infinite",
        }
    }

    /// Why `(nt, nr, b)` cannot be run, if it cannot.
    pub fn infeasibility(self, nt: usize, nr: usize, b: u32) -> Option<String> {
        let widest = nt.max(nr);
        match self {
            Self::Exhaustive if b as usize * (nt + nr) > EXHAUSTIVE_MAX_BITS => Some(format!(
                "enumeration over {} bits exceeds {EXHAUSTIVE_MAX_BITS}",
                b as usize * (nt + nr)
            )),
            Self::Alg1 if b != 2 => Some(format!("the QUBO path requires b=2, got b={b}")),
            Self::Alg1 if 2 * widest > MAX_QUBITS => {
                Some(format!("{} qubits per subproblem exceeds {MAX_QUBITS}", 2 * widest))
            }
            Self::Alg2 | Self::Alg2Ws if b > MAX_ENCODING_BITS => {
                Some(format!("phase encoding supports b<={MAX_ENCODING_BITS}"))
            }
            Self::Alg2 | Self::Alg2Ws if b as usize * widest > MAX_QUBITS => {
                Some(format!("{} qubits per subproblem exceeds {MAX_QUBITS}", b as usize * widest))
            }
            _ => None,
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown solver '{s}' (expected one of {})", solver_names())))
    }
}

fn solver_names() -> String {
    SolverKind::ALL.map(SolverKind::name).join(", ")
}

/// Parameters shared by every solve in a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSettings {
    pub ao: AoConfig,
    pub n_inits: usize,
    pub annealing: AnnealingSchedule,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { ao: AoConfig::default(), n_inits: 3, annealing: AnnealingSchedule::default() }
    }
}

/// Runs one solver. `Infinite` has no quantized outcome and is rejected
/// here; see [`solver_snr`].
pub fn solve_with(kind: SolverKind, h: &ChannelMatrix, b: u32, seed: u64, s: &SolverSettings) -> Result<SolveOutcome> {
    if let Some(reason) = kind.infeasibility(h.nt(), h.nr(), b) {
        return Err(match kind {
            SolverKind::Alg1 if b != 2 => invalid(reason),
            _ => Error::ResourceLimit(reason),
        });
    }
    match kind {
        SolverKind::Exhaustive => exhaustive_search(h, b),
        SolverKind::Sa => simulated_annealing(h, b, &s.annealing, seed),
        SolverKind::Qsvd => quantized_svd(h, b),
        SolverKind::Alg1 => solve_alg1_b2(h, s.n_inits, seed, &s.ao),
        SolverKind::Alg2 => solve_alg2(h, b, false, seed, &s.ao),
        SolverKind::Alg2Ws => solve_alg2(h, b, true, seed, &s.ao),
        SolverKind::Co => co_based(h, b, s.ao.rounds, seed),
        SolverKind::Infinite => Err(invalid("the infinite-resolution bound is not a quantized solver")),
    }
}

pub fn solver_snr(kind: SolverKind, h: &ChannelMatrix, b: u32, seed: u64, s: &SolverSettings) -> Result<f64> {
    match kind {
        SolverKind::Infinite => infinite_resolution_gain(h),
        _ => Ok(solve_with(kind, h, b, seed, s)?.snr.0),
    }
}

/// A sweep over solvers, array sizes and resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub solvers: Vec<SolverKind>,
    /// `(N_T, N_R)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub bits: Vec<u32>,
    pub trials: usize,
    pub master_seed: u64,
    pub settings: SolverSettings,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Record wall-clock times; off keeps outputs reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            solvers: vec![SolverKind::Exhaustive],
            sizes: vec![(2, 2)],
            bits: vec![2],
            trials: 100,
            master_seed: 0,
            settings: SolverSettings::default(),
            out: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

/// Flat key/value overrides, as read from a config file or command line.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    solvers: Option<OneOrMany<String>>,
    nt: Option<OneOrMany<usize>>,
    nr: Option<OneOrMany<usize>>,
    b: Option<OneOrMany<u32>>,
    trials: Option<usize>,
    #[serde(alias = "K")]
    k: Option<usize>,
    p: Option<usize>,
    shots: Option<usize>,
    #[serde(alias = "seed")]
    master_seed: Option<u64>,
    n_inits: Option<usize>,
    warm_start: Option<bool>,
    out: Option<PathBuf>,
    timing: Option<bool>,
}

impl ConfigOverrides {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string().trim_end().to_owned()))
    }

    pub fn solvers(mut self, v: Vec<String>) -> Self {
        self.solvers = Some(OneOrMany::Many(v));
        self
    }

    pub fn nt(mut self, v: Vec<usize>) -> Self {
        self.nt = Some(OneOrMany::Many(v));
        self
    }

    pub fn nr(mut self, v: Vec<usize>) -> Self {
        self.nr = Some(OneOrMany::Many(v));
        self
    }

    pub fn bits(mut self, v: Vec<u32>) -> Self {
        self.b = Some(OneOrMany::Many(v));
        self
    }

    pub fn trials(mut self, v: usize) -> Self {
        self.trials = Some(v);
        self
    }

    pub fn rounds(mut self, v: usize) -> Self {
        self.k = Some(v);
        self
    }

    pub fn layers(mut self, v: usize) -> Self {
        self.p = Some(v);
        self
    }

    pub fn shots(mut self, v: usize) -> Self {
        self.shots = Some(v);
        self
    }

    pub fn seed(mut self, v: u64) -> Self {
        self.master_seed = Some(v);
        self
    }

    pub fn n_inits(mut self, v: usize) -> Self {
        self.n_inits = Some(v);
        self
    }

    pub fn warm_start(mut self, v: bool) -> Self {
        self.warm_start = Some(v);
        self
    }

    pub fn out(mut self, v: PathBuf) -> Self {
        self.out = Some(v);
        self
    }

    pub fn timing(mut self, v: bool) -> Self {
        self.timing = Some(v);
        self
    }

    /// Later values win.
    pub fn merge(self, later: Self) -> Self {
        Self {
            solvers: later.solvers.or(self.solvers),
            nt: later.nt.or(self.nt),
            nr: later.nr.or(self.nr),
            b: later.b.or(self.b),
            trials: later.trials.or(self.trials),
            k: later.k.or(self.k),
            p: later.p.or(self.p),
            shots: later.shots.or(self.shots),
            master_seed: later.master_seed.or(self.master_seed),
            n_inits: later.n_inits.or(self.n_inits),
            warm_start: later.warm_start.or(self.warm_start),
            out: later.out.or(self.out),
            timing: later.timing.or(self.timing),
        }
    }

    /// Applies the overrides to the defaults and validates the result.
    pub fn build(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let warm = self.warm_start.unwrap_or(false);
        if let Some(s) = self.solvers {
            cfg.solvers = s
                .into_vec()
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<SolverKind>>>()?;
        }
        if warm {
            for k in &mut cfg.solvers {
                if *k == SolverKind::Alg2 {
                    *k = SolverKind::Alg2Ws;
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        cfg.solvers.retain(|k| seen.insert(*k));

        match (self.nt.map(OneOrMany::into_vec), self.nr.map(OneOrMany::into_vec)) {
            (None, None) => {}
            (Some(nt), None) => cfg.sizes = nt.iter().map(|&n| (n, n)).collect(),
            (None, Some(nr)) => cfg.sizes = nr.iter().map(|&n| (n, n)).collect(),
            (Some(nt), Some(nr)) => {
                cfg.sizes = match (nt.len(), nr.len()) {
                    (a, b) if a == b => nt.into_iter().zip(nr).collect(),
                    (1, _) => nr.iter().map(|&r| (nt[0], r)).collect(),
                    (_, 1) => nt.iter().map(|&t| (t, nr[0])).collect(),
                    (a, b) => return Err(invalid(format!("nt has {a} entries but nr has {b}"))),
                }
            }
        }
        if let Some(b) = self.b {
            cfg.bits = b.into_vec();
        }
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.master_seed = self.master_seed.unwrap_or(cfg.master_seed);
        cfg.settings.ao.rounds = self.k.unwrap_or(cfg.settings.ao.rounds);
        cfg.settings.ao.qaoa.p = self.p.unwrap_or(cfg.settings.ao.qaoa.p);
        cfg.settings.ao.qaoa.shots = self.shots.unwrap_or(cfg.settings.ao.qaoa.shots);
        cfg.settings.n_inits = self.n_inits.unwrap_or(cfg.settings.n_inits);
        cfg.out = self.out;
        cfg.timing = self.timing.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        ConfigOverrides::from_toml(s)?.build()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trials", self.trials),
            ("K", self.settings.ao.rounds),
            ("p", self.settings.ao.qaoa.p),
            ("shots", self.settings.ao.qaoa.shots),
            ("n_inits", self.settings.n_inits),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(invalid(format!("{name} must be at least 1")));
        }
        if self.solvers.is_empty() || self.sizes.is_empty() || self.bits.is_empty() {
            return Err(invalid("solvers, sizes and b must be nonempty"));
        }
        if self.sizes.iter().any(|&(t, r)| t == 0 || r == 0) {
            return Err(invalid("array sizes must be positive"));
        }
        if self.bits.iter().any(|&b| !(1..=16).contains(&b)) {
            return Err(invalid("b must lie in 1..=16"));
        }
        Ok(())
    }
}

/// Seed of trial `t`; a trial can be rerun alone from this.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    rng::derive_seed(master, trial as u64)
}

/// Channel of one trial and array size, shared by every solver and `b`.
pub fn trial_channel(trial_seed: u64, nt: usize, nr: usize) -> Result<ChannelMatrix> {
    sample_rayleigh_channel(nt, nr, rng::derive_seed(trial_seed, ((nt as u64) << 32) | nr as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowValue {
    Snr(f64),
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub solver: SolverKind,
    pub nt: usize,
    pub nr: usize,
    pub b: u32,
    pub trial: usize,
    pub seed: u64,
    pub value: RowValue,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipNote {
    pub solver: SolverKind,
    pub nt: usize,
    pub nr: usize,
    pub b: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: ExperimentConfig,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<SkipNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub solver: SolverKind,
    pub nt: usize,
    pub nr: usize,
    pub b: u32,
    pub n: usize,
    pub mean: f64,
    pub ci95: f64,
}

/// Mean and 95% normal-approximation half width.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

pub fn cmd_bench(config: &ExperimentConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut skipped = Vec::new();
    for &(nt, nr) in &config.sizes {
        for &b in &config.bits {
            for &solver in &config.solvers {
                if let Some(reason) = solver.infeasibility(nt, nr, b) {
                    skipped.push(SkipNote { solver, nt, nr, b, reason });
                }
            }
        }
    }
    let skip_set: Vec<(SolverKind, usize, usize, u32)> =
        skipped.iter().map(|s| (s.solver, s.nt, s.nr, s.b)).collect();

    let per_trial: Vec<Vec<(BenchRow, Option<String>)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(config.master_seed, trial);
            let mut rows = Vec::new();
            for &(nt, nr) in &config.sizes {
                let h = trial_channel(seed, nt, nr)?;
                for &b in &config.bits {
                    for &solver in &config.solvers {
                        let mut row =
                            BenchRow { solver, nt, nr, b, trial, seed, value: RowValue::Skipped, runtime_ms: 0.0 };
                        if skip_set.contains(&(solver, nt, nr, b)) {
                            rows.push((row, None));
                            continue;
                        }
                        let start = Instant::now();
                        let result = solver_snr(solver, &h, b, seed, &config.settings);
                        if config.timing {
                            row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                        }
                        let note = match result {
                            Ok(v) => {
                                row.value = RowValue::Snr(v);
                                None
                            }
                            Err(e) => Some(e.to_string()),
                        };
                        rows.push((row, note));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (row, note) in per_trial.into_iter().flatten() {
        if let Some(reason) = note {
            skipped.push(SkipNote { solver: row.solver, nt: row.nt, nr: row.nr, b: row.b, reason: format!("trial {}: {reason}", row.trial) });
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.solver, r.nt, r.nr, r.b, r.trial));
    Ok(BenchReport { config: config.clone(), rows, skipped })
}

impl BenchReport {
    pub fn results_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            let snr = match r.value {
                RowValue::Snr(v) => v.to_string(),
                RowValue::Skipped => "skipped".into(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.solver.name(),
                r.nt,
                r.nr,
                r.b,
                r.trial,
                r.seed,
                snr,
                r.runtime_ms
            );
        }
        out
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out: Vec<SummaryRow> = Vec::new();
        for chunk in self.rows.chunk_by(|a, b| (a.solver, a.nt, a.nr, a.b) == (b.solver, b.nt, b.nr, b.b)) {
            let xs: Vec<f64> = chunk
                .iter()
                .filter_map(|r| match r.value {
                    RowValue::Snr(v) => Some(v),
                    RowValue::Skipped => None,
                })
                .collect();
            let (mean, ci95) = mean_ci95(&xs);
            let r = &chunk[0];
            out.push(SummaryRow { solver: r.solver, nt: r.nt, nr: r.nr, b: r.b, n: xs.len(), mean, ci95 });
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for s in self.summary() {
            let (mean, lo, hi) = if s.n == 0 {
                (String::new(), String::new(), String::new())
            } else {
                (s.mean.to_string(), (s.mean - s.ci95).to_string(), (s.mean + s.ci95).to_string())
            };
            let _ = writeln!(out, "{},{},{},{},{},{mean},{lo},{hi}", s.solver.name(), s.nt, s.nr, s.b, s.n);
        }
        out
    }

    pub fn manifest_json(&self) -> String {
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "bench",
            "config": self.config,
            "files": { "results": "results.csv", "summary": "summary.csv" },
            "columns": { "results": RESULTS_HEADER, "summary": SUMMARY_HEADER },
            "skipped": self.skipped,
        });
        serde_json::to_string_pretty(&v).expect("manifest serializes") + "\n"
    }

    /// Writes `results.csv`, `summary.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err)?;
        fs::write(dir.join("results.csv"), self.results_csv()).map_err(io_err)?;
        fs::write(dir.join("summary.csv"), self.summary_csv()).map_err(io_err)?;
        fs::write(dir.join("manifest.json"), self.manifest_json()).map_err(io_err)?;
        Ok(())
    }
}

fn io_err(e: std::io::Error) -> Error {
    invalid(format!("i/o: {e}"))
}

/// One `F(gamma, beta)` scan per cost formulation on a shared channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeConfig {
    pub nt: usize,
    pub nr: usize,
    pub b: u32,
    pub seed: u64,
    pub gamma: GridAxis,
    pub beta: GridAxis,
    pub warm_start_epsilon: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        let axis = GridAxis { lo: 0.0, hi: std::f64::consts::PI, steps: 41 };
        Self { nt: 5, nr: 5, b: 2, seed: 0, gamma: axis, beta: axis, warm_start_epsilon: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeReport {
    /// `(name, grid)`; names are `alg1`, `alg2` and `alg2_ws`.
    pub grids: Vec<(String, Landscape)>,
    pub skipped: Vec<String>,
}

/// Scans the transmit-side subproblem for a seeded channel and random
/// receive beamformer.
pub fn cmd_landscape(cfg: &LandscapeConfig) -> Result<LandscapeReport> {
    let h = trial_channel(cfg.seed, cfg.nt, cfg.nr)?;
    let mut r = rng::rng(rng::derive_seed(cfg.seed, 1));
    let g = PhaseIndexVector::random(cfg.b, cfg.nr, &mut r)?;
    let mut grids = Vec::new();
    let mut skipped = Vec::new();

    if cfg.b == 2 {
        let qubo = build_qubo_b2(&[h.row_combination(&g.decode())])?;
        grids.push(("alg1".into(), landscape_grid(&qubo.to_cost()?, &InitialState::Plus, cfg.gamma, cfg.beta)?));
    } else {
        skipped.push(format!("alg1: the QUBO path requires b=2, got b={}", cfg.b));
    }
    let q = SubproblemMatrix::transmit_side(&h, &g.decode())?;
    let cost = cost_oracle(&q, cfg.b)?;
    grids.push(("alg2".into(), landscape_grid(&cost, &InitialState::Plus, cfg.gamma, cfg.beta)?));
    let c = solve_relaxed_with(&q, cfg.b, rng::derive_seed(cfg.seed, 2), &Default::default())?.c_star;
    let ws = InitialState::WarmStart(WarmStartAngles::from_relaxed_regularized(&c, cfg.warm_start_epsilon)?);
    grids.push(("alg2_ws".into(), landscape_grid(&cost, &ws, cfg.gamma, cfg.beta)?));
    Ok(LandscapeReport { grids, skipped })
}

impl LandscapeReport {
    /// Writes `landscape_<name>.csv` per grid plus `manifest.json`.
    pub fn write(&self, dir: &Path, cfg: &LandscapeConfig) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err)?;
        let mut files = serde_json::Map::new();
        for (name, grid) in &self.grids {
            let file = format!("landscape_{name}.csv");
            fs::write(dir.join(&file), grid.to_csv()).map_err(io_err)?;
            files.insert(name.clone(), file.into());
        }
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "landscape",
            "config": cfg,
            "files": files,
            "skipped": self.skipped,
        });
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&v).expect("serializes") + "\n")
            .map_err(io_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionConfig {
    pub nt: usize,
    pub nr: usize,
    pub b: u32,
    pub seed: u64,
    pub warm_start: bool,
    pub ao: AoConfig,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        Self { nt: 2, nr: 2, b: 2, seed: 0, warm_start: true, ao: AoConfig::default() }
    }
}

/// Per-round sampled distributions of a warm-started or plain Alg. 2 run,
/// with every outcome flagged when it completes a globally optimal pair.
pub fn cmd_distribution(cfg: &DistributionConfig) -> Result<serde_json::Value> {
    let h = trial_channel(cfg.seed, cfg.nt, cfg.nr)?;
    let out = solve_alg2(&h, cfg.b, cfg.warm_start, cfg.seed, &cfg.ao)?;
    let opt = if SolverKind::Exhaustive.infeasibility(cfg.nt, cfg.nr, cfg.b).is_none() {
        Some(exhaustive_search(&h, cfg.b)?.snr.0)
    } else {
        None
    };
    let iterations: Vec<serde_json::Value> = out
        .per_iteration_histograms
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|side| {
            let outcomes: Vec<serde_json::Value> = side
                .outcomes
                .iter()
                .map(|o| {
                    let is_opt = opt.map(|v| o.snr >= v * (1.0 - 1e-9));
                    json!({
                        "bits": o.bits,
                        "count": o.count,
                        "indices": o.indices.indices(),
                        "snr": o.snr,
                        "is_global_opt": is_opt,
                    })
                })
                .collect();
            json!({
                "iteration": side.iteration,
                "side": side.side,
                "shots": side.shots,
                "fixed": side.fixed.indices(),
                "outcomes": outcomes,
            })
        })
        .collect();
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "distribution",
        "config": cfg,
        "channel": serde_json::from_str::<serde_json::Value>(&h.to_json()).expect("channel json"),
        "global_opt_snr": opt,
        "snr": out.snr,
        "iterations": iterations,
    }))
}

/// Where `cmd_solve` gets its channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Json(String),
    Seeded { nt: usize, nr: usize, seed: u64 },
}

pub fn cmd_solve(
    source: &ChannelSource,
    solver: SolverKind,
    b: u32,
    seed: u64,
    settings: &SolverSettings,
) -> Result<serde_json::Value> {
    let h = match source {
        ChannelSource::Json(s) => ChannelMatrix::from_json(s)?,
        ChannelSource::Seeded { nt, nr, seed } => trial_channel(*seed, *nt, *nr)?,
    };
    let out = solve_with(solver, &h, b, seed, settings)?;
    let mut v = serde_json::to_value(&out).expect("outcome serializes");
    let m = v.as_object_mut().expect("outcome is an object");
    m.insert("schema_version".into(), SCHEMA_VERSION.into());
    m.insert("channel".into(), serde_json::from_str(&h.to_json()).expect("channel json"));
    Ok(v)
}
