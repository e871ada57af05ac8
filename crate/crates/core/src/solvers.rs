//! End-to-end beamforming solvers: alternating optimization with QAOA
//! subproblem solves, plus the classical baselines.

use num_complex::Complex64;
use rand::Rng as _;
use serde::Serialize;
use serde_json::json;

use crate::encoding::{
    build_qubo_b2, cost_oracle, decode_basis_state, theta_angles, DiagonalCost, SubproblemMatrix, MAX_QUBITS,
};
use crate::error::{invalid, Error, Result};
use crate::mimo::{phase_table, quantize_to_phases, snr, top_singular_pair, ChannelMatrix, PhaseIndexVector, SnrValue};
use crate::qaoa::{bitstring, ranked_outcomes, run_qaoa, solve_relaxed_with, InitialState, QaoaConfig, RelaxConfig};
use crate::rng;
use crate::simulator::{Histogram, WarmStartAngles};

/// Largest `b (N_T + N_R)` that [`exhaustive_search`] will enumerate.
pub const EXHAUSTIVE_MAX_BITS: usize = 26;

const WARM_START_G0_STARTS: usize = 4;
const WARM_START_G0_ROUNDS: usize = 3;

/// Which beamformer a subproblem optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `f`, with `g` fixed.
    Transmit,
    /// `g`, with `f` fixed.
    Receive,
}

/// A sampled subproblem outcome decoded to phase indices and scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledOutcome {
    pub bits: String,
    pub count: usize,
    pub indices: PhaseIndexVector,
    /// SNR of this candidate against the fixed other side.
    pub snr: f64,
}

/// Measurement record of one subproblem solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideHistogram {
    pub iteration: usize,
    pub side: Side,
    pub fixed: PhaseIndexVector,
    pub shots: usize,
    /// By count, descending.
    pub outcomes: Vec<SampledOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub solver: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub f: PhaseIndexVector,
    pub g: PhaseIndexVector,
    pub snr: SnrValue,
    pub iterations: usize,
    pub per_iteration_snr: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_iteration_histograms: Option<Vec<SideHistogram>>,
}

impl SolveOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }
}

/// Settings shared by the alternating-optimization solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoConfig {
    /// AO rounds `K`.
    pub rounds: usize,
    pub qaoa: QaoaConfig,
    /// Relaxed values are clamped into `[eps, 1 - eps]` before they set
    /// warm-start angles.
    pub warm_start_epsilon: f64,
    pub relax: RelaxConfig,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self { rounds: 5, qaoa: QaoaConfig::default(), warm_start_epsilon: 0.25, relax: RelaxConfig::default() }
    }
}

fn config_echo<T: Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!("{qubits} qubits per subproblem, limit is {MAX_QUBITS}")));
    }
    Ok(())
}

fn snr_of(h: &ChannelMatrix, f: &PhaseIndexVector, g: &PhaseIndexVector) -> f64 {
    snr(h, f, g).expect("dimensions checked").0
}

/// Scores every sampled outcome, returning the best (lowest key on ties)
/// and the annotated record.
fn score_outcomes(
    hist: &Histogram,
    n_qubits: usize,
    decode: impl Fn(u64) -> PhaseIndexVector,
    score: impl Fn(&PhaseIndexVector) -> f64,
) -> (PhaseIndexVector, f64, Vec<SampledOutcome>) {
    let mut best: Option<(PhaseIndexVector, f64)> = None;
    for &x in hist.keys() {
        let v = decode(x);
        let s = score(&v);
        if best.as_ref().is_none_or(|b| s > b.1) {
            best = Some((v, s));
        }
    }
    let outcomes = ranked_outcomes(hist)
        .into_iter()
        .map(|(x, count)| {
            let indices = decode(x);
            let snr = score(&indices);
            SampledOutcome { bits: bitstring(x, n_qubits), count, indices, snr }
        })
        .collect();
    let (v, s) = best.expect("histogram is nonempty");
    (v, s, outcomes)
}

/// Alternating optimization for `b = 2` where each subproblem is the
/// real/imaginary QUBO solved by QAOA. Within one initialization the loop
/// stops as soon as a round lowers the SNR; the best pair over all rounds
/// and initializations is returned.
pub fn solve_alg1_b2(h: &ChannelMatrix, n_inits: usize, seed: u64, cfg: &AoConfig) -> Result<SolveOutcome> {
    check_qubits(2 * h.nt().max(h.nr()))?;
    if n_inits == 0 || cfg.rounds == 0 {
        return Err(invalid("need at least one initialization and one round"));
    }
    let mut r = rng::rng(seed);
    let mut best: Option<(PhaseIndexVector, PhaseIndexVector, f64, Vec<f64>, Vec<SideHistogram>, usize)> = None;
    let mut call = 0u64;

    for _ in 0..n_inits {
        let mut g = PhaseIndexVector::random(2, h.nr(), &mut r)?;
        let mut trace = Vec::new();
        let mut hists = Vec::new();
        let mut local_best: Option<(PhaseIndexVector, PhaseIndexVector, f64)> = None;
        let mut rounds = 0;
        for k in 0..cfg.rounds {
            rounds = k + 1;
            let a = vec![h.row_combination(&g.decode())];
            let qubo = build_qubo_b2(&a)?;
            let res = run_qaoa_on(&qubo.to_cost()?, &InitialState::Plus, rng::derive_seed(seed, call), cfg)?;
            call += 1;
            let (fc, _, outcomes) =
                score_outcomes(&res.histogram, qubo.n_vars(), |x| qubo.decode(x), |v| snr_of(h, v, &g));
            hists.push(SideHistogram { iteration: k, side: Side::Transmit, fixed: g.clone(), shots: cfg.qaoa.shots, outcomes });
            let f = fc;

            let hf: Vec<Complex64> = h.apply(&f.decode()).iter().map(|z| z.conj()).collect();
            let qubo = build_qubo_b2(&[hf])?;
            let res = run_qaoa_on(&qubo.to_cost()?, &InitialState::Plus, rng::derive_seed(seed, call), cfg)?;
            call += 1;
            let (gc, rho, outcomes) =
                score_outcomes(&res.histogram, qubo.n_vars(), |x| qubo.decode(x), |v| snr_of(h, &f, v));
            hists.push(SideHistogram { iteration: k, side: Side::Receive, fixed: f.clone(), shots: cfg.qaoa.shots, outcomes });
            g = gc;

            let dropped = trace.last().is_some_and(|&prev| rho < prev);
            trace.push(rho);
            if local_best.as_ref().is_none_or(|b| rho > b.2) {
                local_best = Some((f.clone(), g.clone(), rho));
            }
            if dropped {
                break;
            }
        }
        let (lf, lg, ls) = local_best.expect("at least one round");
        if best.as_ref().is_none_or(|b| ls > b.2) {
            best = Some((lf, lg, ls, trace, hists, rounds));
        }
    }

    let (f, g, _, trace, hists, rounds) = best.expect("at least one initialization");
    Ok(SolveOutcome {
        solver: "alg1".into(),
        seed: Some(seed),
        config: json!({ "b": 2, "n_inits": n_inits, "ao": config_echo(cfg) }),
        snr: snr(h, &f, &g)?,
        f,
        g,
        iterations: rounds,
        per_iteration_snr: trace,
        per_iteration_histograms: Some(hists),
    })
}

fn run_qaoa_on(cost: &DiagonalCost, init: &InitialState, seed: u64, cfg: &AoConfig) -> Result<crate::qaoa::QaoaResult> {
    run_qaoa(cost, cfg.qaoa.p, cfg.qaoa.shots, seed, init, &cfg.qaoa.optimizer)
}

/// Phases `sum_i c_i theta_i` of relaxed bits, quantized to the nearest level.
fn round_relaxed(c: &[f64], b: u32) -> Result<PhaseIndexVector> {
    let thetas = theta_angles(b)?.thetas;
    let z: Vec<Complex64> = c
        .chunks_exact(b as usize)
        .map(|x| Complex64::from_polar(1.0, x.iter().zip(&thetas).map(|(xi, t)| xi * t).sum()))
        .collect();
    quantize_to_phases(&z, b)
}

/// Initial receive beamformer from relaxed alternating searches started at
/// random transmit phases; the start whose rounded pair has the highest SNR
/// supplies `g`.
fn warm_start_g0(h: &ChannelMatrix, b: u32, r: &mut rng::Rng, seed: u64, cfg: &AoConfig) -> Result<PhaseIndexVector> {
    let mut best: Option<(PhaseIndexVector, f64)> = None;
    let mut call = 0;
    for _ in 0..WARM_START_G0_STARTS {
        let mut f = PhaseIndexVector::random(b, h.nt(), r)?;
        let mut g = PhaseIndexVector::zeros(b, h.nr())?;
        for _ in 0..WARM_START_G0_ROUNDS {
            let q = SubproblemMatrix::receive_side(h, &f.decode())?;
            g = round_relaxed(&solve_relaxed_with(&q, b, rng::derive_seed(seed, call), &cfg.relax)?.c_star, b)?;
            let q = SubproblemMatrix::transmit_side(h, &g.decode())?;
            f = round_relaxed(&solve_relaxed_with(&q, b, rng::derive_seed(seed, call + 1), &cfg.relax)?.c_star, b)?;
            call += 2;
        }
        let s = snr_of(h, &f, &g);
        if best.as_ref().is_none_or(|bst| s > bst.1) {
            best = Some((g, s));
        }
    }
    Ok(best.expect("at least one start").0)
}

/// Alternating optimization for general `b` where each subproblem is the
/// phase-encoded cost Hamiltonian solved by QAOA, optionally warm-started
/// from the continuous relaxation of the current subproblem.
pub fn solve_alg2(h: &ChannelMatrix, b: u32, warm_start: bool, seed: u64, cfg: &AoConfig) -> Result<SolveOutcome> {
    check_qubits(b as usize * h.nt().max(h.nr()))?;
    if cfg.rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let mut r = rng::rng(seed);
    let aux = rng::derive_seed(seed, u64::MAX);
    let mut g = if warm_start {
        warm_start_g0(h, b, &mut r, aux, cfg)?
    } else {
        PhaseIndexVector::random(b, h.nr(), &mut r)?
    };
    let mut best: Option<(PhaseIndexVector, PhaseIndexVector, f64)> = None;
    let mut trace = Vec::new();
    let mut hists = Vec::new();

    let mut call = 0u64;
    let solve_side = |q: &SubproblemMatrix, call: &mut u64| -> Result<(DiagonalCost, Histogram)> {
        let cost = cost_oracle(q, b)?;
        let init = if warm_start {
            let c = solve_relaxed_with(q, b, rng::derive_seed(seed, 2 * *call), &cfg.relax)?.c_star;
            InitialState::WarmStart(WarmStartAngles::from_relaxed_regularized(&c, cfg.warm_start_epsilon)?)
        } else {
            InitialState::Plus
        };
        let res = run_qaoa_on(&cost, &init, rng::derive_seed(seed, 2 * *call + 1), cfg)?;
        *call += 1;
        Ok((cost, res.histogram))
    };

    for k in 0..cfg.rounds {
        let q = SubproblemMatrix::transmit_side(h, &g.decode())?;
        let (cost, hist) = solve_side(&q, &mut call)?;
        let (fc, _, outcomes) = score_outcomes(
            &hist,
            cost.n_qubits(),
            |x| decode_basis_state(x, h.nt(), b),
            |v| snr_of(h, v, &g),
        );
        hists.push(SideHistogram { iteration: k, side: Side::Transmit, fixed: g.clone(), shots: cfg.qaoa.shots, outcomes });
        let f = fc;

        let q = SubproblemMatrix::receive_side(h, &f.decode())?;
        let (cost, hist) = solve_side(&q, &mut call)?;
        let (gc, rho, outcomes) = score_outcomes(
            &hist,
            cost.n_qubits(),
            |x| decode_basis_state(x, h.nr(), b),
            |v| snr_of(h, &f, v),
        );
        hists.push(SideHistogram { iteration: k, side: Side::Receive, fixed: f.clone(), shots: cfg.qaoa.shots, outcomes });
        g = gc;

        if best.as_ref().is_none_or(|bst| rho > bst.2) {
            best = Some((f.clone(), g.clone(), rho));
        }
        trace.push(best.as_ref().expect("set above").2);
    }

    let (f, g, _) = best.expect("at least one round");
    Ok(SolveOutcome {
        solver: if warm_start { "alg2_ws" } else { "alg2" }.into(),
        seed: Some(seed),
        config: json!({ "b": b, "warm_start": warm_start, "ao": config_echo(cfg) }),
        snr: snr(h, &f, &g)?,
        f,
        g,
        iterations: cfg.rounds,
        per_iteration_snr: trace,
        per_iteration_histograms: Some(hists),
    })
}

/// Global optimum by enumeration, with the first transmit phase fixed to
/// index 0. Ties resolve to the lexicographically smallest `(f, g)`.
pub fn exhaustive_search(h: &ChannelMatrix, b: u32) -> Result<SolveOutcome> {
    exhaustive_search_with(h, b, true)
}

/// [`exhaustive_search`] with the phase fixing optional.
pub fn exhaustive_search_with(h: &ChannelMatrix, b: u32, fix_first_phase: bool) -> Result<SolveOutcome> {
    if !(1..=16).contains(&b) {
        return Err(invalid(format!("bits must be in 1..=16, got {b}")));
    }
    let total = b as usize * (h.nt() + h.nr());
    if total > EXHAUSTIVE_MAX_BITS {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search over {total} bits exceeds {EXHAUSTIVE_MAX_BITS}"
        )));
    }
    let levels = 1u32 << b;
    let table = phase_table(b);
    let (nt, nr) = (h.nt(), h.nr());
    let norm = (nt * nr) as f64;

    let mut best_val = f64::NEG_INFINITY;
    let mut best_f = vec![0u32; nt];
    let mut best_g = vec![0u32; nr];

    let mut fi = vec![0u32; nt];
    let mut gi = vec![0u32; nr];
    let mut partial = vec![Complex64::new(0.0, 0.0); nr + 1];
    loop {
        let fv: Vec<Complex64> = fi.iter().map(|&i| table[i as usize]).collect();
        let y = h.apply(&fv);
        gi.iter_mut().for_each(|x| *x = 0);
        let mut from = 0;
        loop {
            for r in from..nr {
                partial[r + 1] = partial[r] + table[gi[r] as usize].conj() * y[r];
            }
            let v = partial[nr].norm_sqr() / norm;
            if v > best_val {
                best_val = v;
                best_f.copy_from_slice(&fi);
                best_g.copy_from_slice(&gi);
            }
            match advance(&mut gi, levels, 0) {
                Some(pos) => from = pos,
                None => break,
            }
        }
        if advance(&mut fi, levels, usize::from(fix_first_phase)).is_none() {
            break;
        }
    }

    let f = PhaseIndexVector::new(b, best_f)?;
    let g = PhaseIndexVector::new(b, best_g)?;
    Ok(SolveOutcome {
        solver: "exhaustive".into(),
        seed: None,
        config: json!({ "b": b, "fix_first_phase": fix_first_phase }),
        snr: snr(h, &f, &g)?,
        f,
        g,
        iterations: 1,
        per_iteration_snr: vec![best_val],
        per_iteration_histograms: None,
    })
}

/// Lexicographic odometer over `idx[lo..]`; returns the leftmost changed
/// position, or `None` after the last combination.
fn advance(idx: &mut [u32], levels: u32, lo: usize) -> Option<usize> {
    for pos in (lo..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < levels {
            return Some(pos);
        }
        idx[pos] = 0;
    }
    None
}

/// Geometric cooling schedule `T_{t+1} = alpha T_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnealingSchedule {
    pub t0: f64,
    pub alpha: f64,
    pub steps: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self { t0: 1.0, alpha: 0.999, steps: 20_000 }
    }
}

/// Metropolis search over joint `(f, g)` phase indices with
/// single-antenna moves. Returns the best state visited.
pub fn simulated_annealing(h: &ChannelMatrix, b: u32, schedule: &AnnealingSchedule, seed: u64) -> Result<SolveOutcome> {
    if !(1..=16).contains(&b) {
        return Err(invalid(format!("bits must be in 1..=16, got {b}")));
    }
    if !(schedule.t0 >= 0.0 && schedule.alpha > 0.0 && schedule.alpha <= 1.0) {
        return Err(invalid("schedule needs t0 >= 0 and alpha in (0, 1]"));
    }
    let (nt, nr) = (h.nt(), h.nr());
    let levels = 1u32 << b;
    let table = phase_table(b);
    let norm = (nt * nr) as f64;
    let mut r = rng::rng(seed);

    let mut f = PhaseIndexVector::random(b, nt, &mut r)?.indices().to_vec();
    let mut g = PhaseIndexVector::random(b, nr, &mut r)?.indices().to_vec();
    let mut y = h.apply(&f.iter().map(|&i| table[i as usize]).collect::<Vec<_>>());
    let inner = |g: &[u32], y: &[Complex64]| -> Complex64 {
        g.iter().zip(y).map(|(&i, yi)| table[i as usize].conj() * yi).sum()
    };
    let mut s = inner(&g, &y);
    let mut cur = s.norm_sqr() / norm;
    let (mut best_f, mut best_g, mut best) = (f.clone(), g.clone(), cur);
    let mut trace = vec![best];
    let mut temp = schedule.t0;

    for _ in 0..schedule.steps {
        let coord = r.random_range(0..nt + nr);
        let shift = r.random_range(1..levels);
        let (new_s, new_y) = if coord < nt {
            let old = f[coord];
            let new = (old + shift) % levels;
            let d = table[new as usize] - table[old as usize];
            let ny: Vec<Complex64> = (0..nr).map(|row| y[row] + h.get(row, coord) * d).collect();
            (inner(&g, &ny), Some((coord, new, ny)))
        } else {
            let row = coord - nt;
            let old = g[row];
            let new = (old + shift) % levels;
            let d = (table[new as usize] - table[old as usize]).conj();
            (s + d * y[row], None)
        };
        let cand = new_s.norm_sqr() / norm;
        let drop = cur - cand;
        let accept = drop <= 0.0 || (temp > 0.0 && r.random::<f64>() < (-drop / temp).exp());
        if accept {
            match new_y {
                Some((t, new, ny)) => {
                    f[t] = new;
                    y = ny;
                }
                None => {
                    let row = coord - nt;
                    g[row] = (g[row] + shift) % levels;
                }
            }
            s = new_s;
            cur = cand;
            if cur > best {
                best = cur;
                best_f.clone_from(&f);
                best_g.clone_from(&g);
                trace.push(best);
            }
        }
        temp *= schedule.alpha;
    }

    let f = PhaseIndexVector::new(b, best_f)?;
    let g = PhaseIndexVector::new(b, best_g)?;
    Ok(SolveOutcome {
        solver: "sa".into(),
        seed: Some(seed),
        config: json!({ "b": b, "schedule": config_echo(schedule) }),
        snr: snr(h, &f, &g)?,
        f,
        g,
        iterations: schedule.steps,
        per_iteration_snr: trace,
        per_iteration_histograms: None,
    })
}

/// Quantizes the dominant singular vectors of `H`.
pub fn quantized_svd(h: &ChannelMatrix, b: u32) -> Result<SolveOutcome> {
    let pair = top_singular_pair(h)?;
    let f = quantize_to_phases(&pair.v, b)?;
    let g = quantize_to_phases(&pair.u, b)?;
    let s = snr(h, &f, &g)?;
    Ok(SolveOutcome {
        solver: "qsvd".into(),
        seed: None,
        config: json!({ "b": b }),
        snr: s,
        f,
        g,
        iterations: 1,
        per_iteration_snr: vec![s.0],
        per_iteration_histograms: None,
    })
}

/// Settings of the phase-alignment inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-10 }
    }
}

/// Maximizes `x^H Q x` over unit-modulus `x` by `x <- phase(Q x)` from `x`.
pub fn phase_align(q: &SubproblemMatrix, mut x: Vec<Complex64>, cfg: &AlignmentConfig) -> Vec<Complex64> {
    let n = q.dim();
    let mut val = q.quadratic_form(&x);
    for _ in 0..cfg.max_iters {
        let next: Vec<Complex64> = (0..n)
            .map(|k| {
                let z: Complex64 = (0..n).map(|j| q.get(k, j) * x[j]).sum();
                if z.norm() > 0.0 { z / z.norm() } else { x[k] }
            })
            .collect();
        let nv = q.quadratic_form(&next);
        let gain = nv - val;
        if gain < 0.0 {
            break;
        }
        x = next;
        val = nv;
        if gain < cfg.tol {
            break;
        }
    }
    x
}

/// Alternating optimization where each side is solved continuously by
/// phase alignment and then quantized.
pub fn co_based(h: &ChannelMatrix, b: u32, rounds: usize, seed: u64) -> Result<SolveOutcome> {
    co_based_with(h, b, rounds, seed, &AlignmentConfig::default())
}

pub fn co_based_with(h: &ChannelMatrix, b: u32, rounds: usize, seed: u64, cfg: &AlignmentConfig) -> Result<SolveOutcome> {
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    let mut r = rng::rng(seed);
    let mut g = PhaseIndexVector::random(b, h.nr(), &mut r)?;
    let mut fc = vec![Complex64::new(1.0, 0.0); h.nt()];
    let mut gc = g.decode();
    let mut best: Option<(PhaseIndexVector, PhaseIndexVector, f64)> = None;
    let mut trace = Vec::new();
    for _ in 0..rounds {
        let q = SubproblemMatrix::transmit_side(h, &g.decode())?;
        fc = phase_align(&q, fc, cfg);
        let f = quantize_to_phases(&fc, b)?;
        let q = SubproblemMatrix::receive_side(h, &f.decode())?;
        gc = phase_align(&q, gc, cfg);
        g = quantize_to_phases(&gc, b)?;
        let s = snr_of(h, &f, &g);
        if best.as_ref().is_none_or(|bst| s > bst.2) {
            best = Some((f, g.clone(), s));
        }
        trace.push(best.as_ref().expect("set above").2);
    }
    let (f, g, _) = best.expect("at least one round");
    Ok(SolveOutcome {
        solver: "co".into(),
        seed: Some(seed),
        config: json!({ "b": b, "rounds": rounds, "alignment": config_echo(cfg) }),
        snr: snr(h, &f, &g)?,
        f,
        g,
        iterations: rounds,
        per_iteration_snr: trace,
        per_iteration_histograms: None,
    })
}
