//! MIMO system model: channels, quantized phase vectors, SNR and the
//! unquantized reference optimum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Largest supported phase-shifter resolution.
pub const MAX_BITS: u32 = 16;

/// Complex `nr x nt` channel matrix, stored row-major.
///
/// Row `r`, column `t` holds the gain from transmit antenna `t` to receive
/// antenna `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("channel must be at least 1x1, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(invalid(format!(
                "channel {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged channel rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut e = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            e[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(n, n, e)
    }

    /// Rank-one channel `a b^H`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        let e = a.iter().flat_map(|&ai| b.iter().map(move |bj| ai * bj.conj())).collect();
        Self::new(a.len(), b.len(), e)
    }

    /// Number of receive antennas.
    pub fn nr(&self) -> usize {
        self.rows
    }

    /// Number of transmit antennas.
    pub fn nt(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, t: usize) -> Complex64 {
        self.entries[r * self.cols + t]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `H x` for a length-`nt` vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.cols);
        self.entries
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(h, xi)| h * xi).sum())
            .collect()
    }

    /// `H^H y` for a length-`nr` vector.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, yr) in self.entries.chunks_exact(self.cols).zip(y) {
            for (o, h) in out.iter_mut().zip(row) {
                *o += h.conj() * yr;
            }
        }
        out
    }

    /// `g^H H` as a row of length `nt`.
    pub fn row_combination(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.apply_adjoint(g).into_iter().map(|z| z.conj()).collect()
    }

    fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.norm_sqr() == 0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    nr: usize,
    nt: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<ChannelJson> for ChannelMatrix {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        if j.re.len() != j.nr || j.im.len() != j.nr {
            return Err(invalid(format!("expected {} rows in re/im", j.nr)));
        }
        let mut e = Vec::with_capacity(j.nr * j.nt);
        for (re, im) in j.re.iter().zip(&j.im) {
            if re.len() != j.nt || im.len() != j.nt {
                return Err(invalid(format!("expected {} columns in re/im", j.nt)));
            }
            e.extend(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)));
        }
        ChannelMatrix::new(j.nr, j.nt, e)
    }
}

impl From<ChannelMatrix> for ChannelJson {
    fn from(h: ChannelMatrix) -> Self {
        let rows = h.entries.chunks_exact(h.cols);
        ChannelJson {
            nr: h.rows,
            nt: h.cols,
            re: rows.clone().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: rows.map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

/// Draws an i.i.d. CN(0, 1) channel: real and imaginary parts are
/// independent N(0, 1/2).
pub fn sample_rayleigh_channel(nt: usize, nr: usize, seed: u64) -> Result<ChannelMatrix> {
    if nt == 0 || nr == 0 {
        return Err(invalid(format!("channel dimensions must be positive, got nt={nt} nr={nr}")));
    }
    let mut r = rng::rng(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let entries = (0..nt * nr)
        .map(|_| {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    ChannelMatrix::new(nr, nt, entries)
}

/// Phase of index `i` at resolution `bits`: `2 pi i / 2^bits`.
pub fn phase_angle(i: u32, bits: u32) -> f64 {
    2.0 * PI * f64::from(i) / f64::from(1u32 << bits)
}

/// Unit-modulus values of all `2^bits` quantized phases.
pub fn phase_table(bits: u32) -> Vec<Complex64> {
    (0..1u32 << bits).map(|i| Complex64::from_polar(1.0, phase_angle(i, bits))).collect()
}

/// A beamforming vector of `b`-bit phase shifters, one index per antenna.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhaseIndexVector {
    bits: u32,
    indices: Vec<u32>,
}

impl PhaseIndexVector {
    pub fn new(bits: u32, indices: Vec<u32>) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(invalid(format!("bits must be in 1..={MAX_BITS}, got {bits}")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= 1 << bits) {
            return Err(invalid(format!("phase index {bad} out of range for b={bits}")));
        }
        Ok(Self { bits, indices })
    }

    pub fn zeros(bits: u32, len: usize) -> Result<Self> {
        Self::new(bits, vec![0; len])
    }

    /// Uniformly random indices.
    pub fn random(bits: u32, len: usize, rng: &mut rng::Rng) -> Result<Self> {
        let levels = 1u32.checked_shl(bits).unwrap_or(0);
        let idx = (0..len).map(|_| rng.random_range(0..levels.max(1))).collect();
        Self::new(bits, idx)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Adds `shift` to every index modulo `2^b` (global phase rotation).
    pub fn rotated(&self, shift: u32) -> Self {
        let m = 1u32 << self.bits;
        Self {
            bits: self.bits,
            indices: self.indices.iter().map(|&i| (i + shift % m) % m).collect(),
        }
    }

    pub fn decode(&self) -> Vec<Complex64> {
        decode_phase(self)
    }
}

/// Entry `k` becomes `exp(i 2 pi indices[k] / 2^b)`.
pub fn decode_phase(v: &PhaseIndexVector) -> Vec<Complex64> {
    v.indices
        .iter()
        .map(|&i| Complex64::from_polar(1.0, phase_angle(i, v.bits)))
        .collect()
}

/// Received SNR in linear scale with unit transmit power and noise variance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnrValue(pub f64);

impl SnrValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `|g^H H f|^2 / (|f|^2 |g|^2)` for quantized vectors.
pub fn snr(h: &ChannelMatrix, f: &PhaseIndexVector, g: &PhaseIndexVector) -> Result<SnrValue> {
    snr_complex(h, &f.decode(), &g.decode())
}

/// SNR for arbitrary nonzero complex pre/post-coders.
pub fn snr_complex(h: &ChannelMatrix, f: &[Complex64], g: &[Complex64]) -> Result<SnrValue> {
    if f.len() != h.nt() || g.len() != h.nr() {
        return Err(invalid(format!(
            "vector lengths f={} g={} do not match a {}x{} channel",
            f.len(),
            g.len(),
            h.nr(),
            h.nt()
        )));
    }
    let nf: f64 = f.iter().map(Complex64::norm_sqr).sum();
    let ng: f64 = g.iter().map(Complex64::norm_sqr).sum();
    if nf == 0.0 || ng == 0.0 {
        return Err(invalid("beamforming vectors must be nonzero"));
    }
    let hf = h.apply(f);
    let z: Complex64 = g.iter().zip(&hf).map(|(gi, y)| gi.conj() * y).sum();
    Ok(SnrValue(z.norm_sqr() / (nf * ng)))
}

/// Dominant singular triplet `H v = sigma u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPair {
    pub u: Vec<Complex64>,
    pub sigma: f64,
    pub v: Vec<Complex64>,
}

pub const POWER_ITERATION_MAX_ITERS: usize = 10_000;
pub const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_SEED: u64 = 0x5EED_0F5A;

/// Top singular pair by power iteration on `H^H H`.
pub fn top_singular_pair(h: &ChannelMatrix) -> Result<SingularPair> {
    top_singular_pair_seeded(h, POWER_ITERATION_SEED)
}

/// As [`top_singular_pair`], with the start vector drawn from `seed`.
///
/// Stops once the Rayleigh quotient changes by less than
/// `POWER_ITERATION_TOL` relative, or after `POWER_ITERATION_MAX_ITERS`.
pub fn top_singular_pair_seeded(h: &ChannelMatrix, seed: u64) -> Result<SingularPair> {
    if h.is_zero() {
        return Err(Error::DegenerateInput("all-zero channel has no dominant singular pair".into()));
    }
    let mut r = rng::rng(seed);
    let mut v: Vec<Complex64> = (0..h.nt())
        .map(|_| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect();
    normalize(&mut v);

    let mut lambda = rayleigh(h, &v);
    if lambda == 0.0 {
        // start landed in the null space; fall back to the strongest column
        let k = (0..h.nt())
            .max_by(|&a, &b| col_energy(h, a).total_cmp(&col_energy(h, b)))
            .unwrap_or(0);
        v = vec![Complex64::new(0.0, 0.0); h.nt()];
        v[k] = Complex64::new(1.0, 0.0);
        lambda = rayleigh(h, &v);
    }
    for _ in 0..POWER_ITERATION_MAX_ITERS {
        let mut w = h.apply_adjoint(&h.apply(&v));
        normalize(&mut w);
        v = w;
        let next = rayleigh(h, &v);
        let done = (next - lambda).abs() < POWER_ITERATION_TOL * next;
        lambda = next;
        if done {
            break;
        }
    }
    let mut u = h.apply(&v);
    let sigma = norm(&u);
    u.iter_mut().for_each(|z| *z /= sigma);
    Ok(SingularPair { u, sigma, v })
}

fn col_energy(h: &ChannelMatrix, t: usize) -> f64 {
    (0..h.nr()).map(|r| h.get(r, t).norm_sqr()).sum()
}

fn rayleigh(h: &ChannelMatrix, v: &[Complex64]) -> f64 {
    h.apply(v).iter().map(Complex64::norm_sqr).sum()
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

fn normalize(x: &mut [Complex64]) {
    let n = norm(x);
    x.iter_mut().for_each(|z| *z /= n);
}

/// Tolerance under which two angular distances count as a tie.
const TIE_EPS: f64 = 1e-12;

/// Maps each entry to the nearest `b`-bit phase, ties toward the smaller
/// index. Zero entries map to index 0.
pub fn quantize_to_phases(x: &[Complex64], bits: u32) -> Result<PhaseIndexVector> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(invalid(format!("bits must be in 1..={MAX_BITS}, got {bits}")));
    }
    let levels = 1u32 << bits;
    let idx = x
        .iter()
        .map(|z| {
            if z.norm_sqr() == 0.0 {
                return 0;
            }
            let arg = z.arg();
            let mut best = (0u32, f64::INFINITY);
            for i in 0..levels {
                let d = angular_distance(arg, phase_angle(i, bits));
                if d < best.1 - TIE_EPS {
                    best = (i, d);
                }
            }
            best.0
        })
        .collect();
    PhaseIndexVector::new(bits, idx)
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// `sigma_max^2`: the best SNR achievable with unconstrained pre/post-coders.
pub fn infinite_resolution_gain(h: &ChannelMatrix) -> Result<f64> {
    top_singular_pair(h).map(|p| p.sigma * p.sigma)
}
