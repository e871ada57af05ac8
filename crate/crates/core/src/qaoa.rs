//! The hybrid QAOA loop: circuit evaluation, angle search, sampling, the
//! continuous relaxation behind warm starts, and landscape scans.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::encoding::{theta_angles, DiagonalCost, SubproblemMatrix, MAX_QUBITS};
use crate::error::{invalid, Error, Result};
use crate::optimize::{minimize_derivative_free, NelderMeadConfig};
use crate::rng;
use crate::simulator::{init_plus, init_warmstart, Histogram, StateVector, WarmStartAngles};

/// Layer angles `(gamma_l, beta_l)`, `l = 1..=p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(invalid(format!(
                "need p >= 1 gammas and betas of equal length, got {} and {}",
                gammas.len(),
                betas.len()
            )));
        }
        Ok(Self { gammas, betas })
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    /// `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(invalid("flat parameter vector must have even length"));
        }
        let (g, b) = v.split_at(v.len() / 2);
        Self::new(g.to_vec(), b.to_vec())
    }
}

/// Initial state, which also selects the mixer.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `|+>^n` with the transverse-field mixer.
    Plus,
    /// Relaxation-biased product state with the matching warm-start mixer.
    WarmStart(WarmStartAngles),
}

/// Classical outer loop settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Objective evaluations per restart.
    pub budget: usize,
    /// Start angles are drawn uniformly from `(0, init_max)`.
    pub init_max: f64,
    pub nelder_mead: NelderMeadConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 3, budget: 600, init_max: FRAC_PI_2, nelder_mead: NelderMeadConfig::default() }
    }
}

/// Everything `run_qaoa` needs besides the cost, seed and initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaoaConfig {
    pub p: usize,
    pub shots: usize,
    pub optimizer: OptimizerConfig,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self { p: 3, shots: 1024, optimizer: OptimizerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaoaResult {
    /// Sampled outcome of lowest cost (lowest index on ties).
    pub best_bits: u64,
    pub best_cost: f64,
    pub best_params: QaoaParams,
    /// Exact expectation `F` at `best_params`.
    pub best_expectation: f64,
    pub param_trace: Vec<(QaoaParams, f64)>,
    pub histogram: Histogram,
    pub evaluations: usize,
}

/// `prod_l U_M(beta_l) U_C(gamma_l) |psi_0>`.
pub fn prepare_state(cost: &DiagonalCost, init: &InitialState, params: &QaoaParams) -> Result<StateVector> {
    let mut s = match init {
        InitialState::Plus => init_plus(cost.n_qubits())?,
        InitialState::WarmStart(y) => init_warmstart(y)?,
    };
    for (&g, &b) in params.gammas.iter().zip(&params.betas) {
        s.apply_phase_separator(cost, g)?;
        match init {
            InitialState::Plus => s.apply_x_mixer(b),
            InitialState::WarmStart(y) => s.apply_ws_mixer(b, y)?,
        }
    }
    Ok(s)
}

/// `F(gamma, beta) = <psi| H_C |psi>`.
pub fn expectation_at(cost: &DiagonalCost, init: &InitialState, params: &QaoaParams) -> Result<f64> {
    prepare_state(cost, init, params)?.expectation(cost)
}

fn check_inputs(cost: &DiagonalCost, init: &InitialState, shots: usize) -> Result<()> {
    if cost.n_qubits() > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!("{} qubits exceeds {MAX_QUBITS}", cost.n_qubits())));
    }
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    if let InitialState::WarmStart(y) = init {
        if y.len() != cost.n_qubits() {
            return Err(invalid(format!(
                "{} warm-start angles for {} qubits",
                y.len(),
                cost.n_qubits()
            )));
        }
    }
    Ok(())
}

/// Optimizes `p`-layer angles from `optimizer.restarts` random starts, then
/// samples `shots` outcomes at the best angles.
pub fn run_qaoa(
    cost: &DiagonalCost,
    p: usize,
    shots: usize,
    seed: u64,
    init: &InitialState,
    optimizer: &OptimizerConfig,
) -> Result<QaoaResult> {
    if p == 0 {
        return Err(invalid("QAOA needs at least one layer"));
    }
    let mut r = rng::rng(seed);
    let starts: Vec<Vec<f64>> = (0..optimizer.restarts.max(1))
        .map(|_| (0..2 * p).map(|_| r.random::<f64>() * optimizer.init_max).collect())
        .collect();
    run_qaoa_from(cost, &starts, shots, seed, init, optimizer)
}

/// As [`run_qaoa`] with explicit flat start vectors.
pub fn run_qaoa_from(
    cost: &DiagonalCost,
    starts: &[Vec<f64>],
    shots: usize,
    seed: u64,
    init: &InitialState,
    optimizer: &OptimizerConfig,
) -> Result<QaoaResult> {
    check_inputs(cost, init, shots)?;
    let first = starts.first().ok_or_else(|| invalid("no start points"))?;
    if first.is_empty() || first.len() % 2 != 0 || starts.iter().any(|s| s.len() != first.len()) {
        return Err(invalid("start points must share one even, nonzero length"));
    }

    let objective = |v: &[f64]| {
        let params = QaoaParams::from_flat(v).expect("even-length parameters");
        expectation_at(cost, init, &params).unwrap_or(f64::INFINITY)
    };
    let min = minimize_derivative_free(objective, starts, optimizer.budget, &optimizer.nelder_mead);

    let best_params = QaoaParams::from_flat(&min.params)?;
    let state = prepare_state(cost, init, &best_params)?;
    let histogram = state.sample(shots, rng::derive_seed(seed, 1))?;
    let (best_bits, best_cost) = histogram
        .keys()
        .map(|&x| (x, cost.value(x)))
        .fold((u64::MAX, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });

    Ok(QaoaResult {
        best_bits,
        best_cost,
        best_expectation: min.value,
        best_params,
        evaluations: min.trace.len(),
        param_trace: min
            .trace
            .into_iter()
            .map(|e| (QaoaParams::from_flat(&e.params).expect("even length"), e.value))
            .collect(),
        histogram,
    })
}

/// Outcome bitstring, most significant qubit first.
pub fn bitstring(x: u64, n_qubits: usize) -> String {
    (0..n_qubits).rev().map(|q| if x >> q & 1 == 1 { '1' } else { '0' }).collect()
}

/// Histogram entries sorted by count (descending), then bitstring.
pub fn ranked_outcomes(hist: &Histogram) -> Vec<(u64, usize)> {
    let mut v: Vec<(u64, usize)> = hist.iter().map(|(&x, &c)| (x, c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// `{"bits": count, ...}` in [`ranked_outcomes`] order.
pub fn histogram_json(hist: &Histogram, n_qubits: usize) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (x, c) in ranked_outcomes(hist) {
        m.insert(bitstring(x, n_qubits), c.into());
    }
    serde_json::Value::Object(m)
}

/// Solution of the box-relaxed phase problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedSolution {
    /// Relaxed bits, qubit order, each in `[0, 1]`.
    pub c_star: Vec<f64>,
    pub objective: f64,
    /// Objective after each accepted step of the winning start.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxConfig {
    pub starts: usize,
    pub max_iters: usize,
    /// Stop once a step gains less than this.
    pub tol: f64,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self { starts: 8, max_iters: 500, tol: 1e-12 }
    }
}

fn relaxed_phases(thetas: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let b = thetas.len();
    (0..n).map(|k| (0..b).map(|i| x[k * b + i] * thetas[i]).sum()).collect()
}

/// `sum_{k != j} Q_kj exp(i (phi_j - phi_k))` with `phi_k = sum_i x_{k,i} theta_i`.
pub fn relaxed_objective(q: &SubproblemMatrix, thetas: &[f64], x: &[f64]) -> f64 {
    let n = q.dim();
    let phi = relaxed_phases(thetas, n, x);
    let mut total = 0.0;
    for k in 0..n {
        for j in 0..n {
            if k != j {
                total += (q.get(k, j) * Complex64::from_polar(1.0, phi[j] - phi[k])).re;
            }
        }
    }
    total
}

/// `d/dx_{k,i} = 2 theta_i sum_{j != k} Re{-i Q_kj exp(i (phi_j - phi_k))}`.
pub fn relaxed_gradient(q: &SubproblemMatrix, thetas: &[f64], x: &[f64]) -> Vec<f64> {
    let n = q.dim();
    let b = thetas.len();
    let phi = relaxed_phases(thetas, n, x);
    let mut grad = vec![0.0; n * b];
    for k in 0..n {
        let dphi: f64 = (0..n)
            .filter(|&j| j != k)
            .map(|j| 2.0 * (Complex64::new(0.0, -1.0) * q.get(k, j) * Complex64::from_polar(1.0, phi[j] - phi[k])).re)
            .sum();
        for i in 0..b {
            grad[k * b + i] = thetas[i] * dphi;
        }
    }
    grad
}

/// Maximizes the relaxed objective over `[0, 1]^{b n}` by projected
/// gradient ascent with backtracking, from several random starts.
pub fn solve_relaxed(q: &SubproblemMatrix, b: u32, seed: u64) -> Result<RelaxedSolution> {
    solve_relaxed_with(q, b, seed, &RelaxConfig::default())
}

pub fn solve_relaxed_with(q: &SubproblemMatrix, b: u32, seed: u64, cfg: &RelaxConfig) -> Result<RelaxedSolution> {
    let thetas = theta_angles(b)?.thetas;
    let dim = q.dim() * b as usize;
    if q.dim() == 1 {
        return Ok(RelaxedSolution { c_star: vec![0.5; dim], objective: 0.0, trace: vec![0.0] });
    }
    let mut r = rng::rng(seed);
    let mut best: Option<RelaxedSolution> = None;
    for _ in 0..cfg.starts.max(1) {
        let x0: Vec<f64> = (0..dim).map(|_| r.random::<f64>()).collect();
        let sol = ascend(q, &thetas, x0, cfg);
        if best.as_ref().is_none_or(|bst| sol.objective > bst.objective) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one start"))
}

fn ascend(q: &SubproblemMatrix, thetas: &[f64], mut x: Vec<f64>, cfg: &RelaxConfig) -> RelaxedSolution {
    let mut val = relaxed_objective(q, thetas, &x);
    let mut trace = vec![val];
    let mut step = 1.0;
    for _ in 0..cfg.max_iters {
        let g = relaxed_gradient(q, thetas, &x);
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| (xi + step * gi).clamp(0.0, 1.0)).collect();
            let lin: f64 = cand.iter().zip(&x).zip(&g).map(|((c, xi), gi)| gi * (c - xi)).sum();
            let v = relaxed_objective(q, thetas, &cand);
            if v >= val + 1e-4 * lin && v >= val {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let gain = v - val;
        x = cand;
        val = v;
        trace.push(val);
        step = (step * 2.0).min(1e3);
        if gain < cfg.tol {
            break;
        }
    }
    RelaxedSolution { c_star: x, objective: val, trace }
}

/// Axis of a landscape scan: `steps` evenly spaced points over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn points(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.lo],
            s => (0..s).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (s - 1) as f64).collect(),
        }
    }
}

/// `F(gamma, beta)` of a single-layer circuit, `values[i][j]` at
/// `(gammas[i], betas[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    /// Grid point with the lowest `F`: `(gamma, beta, F)`.
    pub fn argmin(&self) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (self.gammas[i], self.betas[j], v);
                }
            }
        }
        best
    }

    /// Row-major CSV with header `gamma,beta,F`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,beta,F\n");
        for (g, row) in self.gammas.iter().zip(&self.values) {
            for (b, v) in self.betas.iter().zip(row) {
                let _ = writeln!(out, "{g},{b},{v}");
            }
        }
        out
    }
}

pub fn landscape_grid(cost: &DiagonalCost, init: &InitialState, gamma: GridAxis, beta: GridAxis) -> Result<Landscape> {
    check_inputs(cost, init, 1)?;
    let gammas = gamma.points();
    let betas = beta.points();
    let values = gammas
        .par_iter()
        .map(|&g| {
            betas
                .iter()
                .map(|&b| expectation_at(cost, init, &QaoaParams { gammas: vec![g], betas: vec![b] }))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Landscape { gammas, betas, values })
}
