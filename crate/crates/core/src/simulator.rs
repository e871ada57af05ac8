//! Dense statevector simulator with the handful of operations QAOA needs.
//!
//! Qubit 0 is the least significant bit of a basis-state index. Operations
//! never renormalize, so accumulated norm drift stays observable.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;

use crate::encoding::{DiagonalCost, ZHamiltonian, MAX_QUBITS};
use crate::error::{invalid, Error, Result};
use crate::rng;

/// Registers at least this large use data-parallel amplitude loops.
const PARALLEL_QUBITS: usize = 14;

type Gate = [[Complex64; 2]; 2];

/// Measurement outcome counts keyed by basis-state index.
pub type Histogram = BTreeMap<u64, usize>;

/// Per-qubit warm-start angles `y_i = 2 asin(sqrt(c_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartAngles {
    y: Vec<f64>,
}

impl WarmStartAngles {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.iter().any(|a| !(0.0..=PI).contains(a)) {
            return Err(invalid("warm-start angles must lie in [0, pi]"));
        }
        Ok(Self { y })
    }

    /// Angles for relaxed values `c` in `[0, 1]`.
    pub fn from_relaxed(c: &[f64]) -> Result<Self> {
        Self::from_relaxed_regularized(c, 0.0)
    }

    /// As [`from_relaxed`](Self::from_relaxed) after clamping every value
    /// into `[eps, 1 - eps]`. With `eps = 0` a value of exactly 0 or 1
    /// pins its qubit, since the warm-start mixer then leaves it invariant.
    pub fn from_relaxed_regularized(c: &[f64], eps: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&eps) {
            return Err(invalid("regularization must lie in [0, 0.5]"));
        }
        if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("relaxed values must lie in [0, 1]"));
        }
        Self::new(c.iter().map(|&v| 2.0 * v.clamp(eps, 1.0 - eps).sqrt().asin()).collect())
    }

    pub fn angles(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("register needs at least one qubit"));
    }
    if n > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!("{n} qubits exceeds {MAX_QUBITS}")));
    }
    Ok(())
}

impl StateVector {
    /// Basis state `|x>`.
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        check_qubits(n)?;
        if x >> n != 0 {
            return Err(invalid(format!("basis index {x} outside {n} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[x as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    /// Wraps raw amplitudes; they must already have unit norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(invalid("amplitude count must be a power of two"));
        }
        let n = amps.len().trailing_zeros() as usize;
        check_qubits(n)?;
        let s = Self { n_qubits: n, amps };
        if (s.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("amplitudes are not normalized"));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn overlap(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(invalid(format!("{n}-qubit operator on a {}-qubit state", self.n_qubits)));
        }
        Ok(())
    }

    /// Multiplies amplitude `x` by `exp(-i gamma cost[x])`.
    pub fn apply_phase_separator(&mut self, cost: &DiagonalCost, gamma: f64) -> Result<()> {
        self.check_dim(cost.n_qubits())?;
        let phase = |(a, v): (&mut Complex64, &f64)| *a *= Complex64::from_polar(1.0, -gamma * v);
        if self.n_qubits >= PARALLEL_QUBITS {
            self.amps.par_iter_mut().zip(cost.values().par_iter()).for_each(phase);
        } else {
            self.amps.iter_mut().zip(cost.values()).for_each(phase);
        }
        Ok(())
    }

    /// `exp(-i beta sum_j X_j)`, one `R_X(2 beta)` per qubit.
    pub fn apply_x_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let gate = [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ];
        for q in 0..self.n_qubits {
            self.apply_single(q, &gate);
        }
    }

    /// Warm-start mixer: `R_Y(y_i) R_Z(-2 beta) R_Y(-y_i)` on each qubit.
    pub fn apply_ws_mixer(&mut self, beta: f64, y: &WarmStartAngles) -> Result<()> {
        self.check_dim(y.len())?;
        for (q, &yi) in y.angles().iter().enumerate() {
            let g = matmul(&matmul(&ry(yi), &rz(-2.0 * beta)), &ry(-yi));
            self.apply_single(q, &g);
        }
        Ok(())
    }

    /// `R_Z(theta) = diag(e^{-i theta/2}, e^{i theta/2})` on qubit `q`.
    pub fn apply_rz(&mut self, q: usize, theta: f64) {
        self.apply_single(q, &rz(theta));
    }

    pub fn apply_ry(&mut self, q: usize, theta: f64) {
        self.apply_single(q, &ry(theta));
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        assert!(control != target && control < self.n_qubits && target < self.n_qubits);
        let (cb, tb) = (1usize << control, 1usize << target);
        for x in 0..self.amps.len() {
            if x & cb != 0 && x & tb == 0 {
                self.amps.swap(x, x | tb);
            }
        }
    }

    fn apply_single(&mut self, q: usize, g: &Gate) {
        let stride = 1usize << q;
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (x, y) = (*a, *b);
                *a = g[0][0] * x + g[0][1] * y;
                *b = g[1][0] * x + g[1][1] * y;
            }
        };
        if self.n_qubits >= PARALLEL_QUBITS {
            self.amps.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amps.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    /// `sum_x |amp[x]|^2 cost[x]`.
    pub fn expectation(&self, cost: &DiagonalCost) -> Result<f64> {
        self.check_dim(cost.n_qubits())?;
        Ok(self.amps.iter().zip(cost.values()).map(|(a, v)| a.norm_sqr() * v).sum())
    }

    /// `shots` independent measurements in the computational basis.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<Histogram> {
        if shots == 0 {
            return Err(invalid("shots must be at least 1"));
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut r = rng::rng(seed);
        let mut hist = Histogram::new();
        for _ in 0..shots {
            let u = r.random::<f64>() * acc;
            let x = cdf.partition_point(|&c| c <= u).min(self.amps.len() - 1);
            *hist.entry(x as u64).or_insert(0) += 1;
        }
        Ok(hist)
    }

    /// `exp(-i gamma H)` compiled term by term: a CNOT ladder folds the
    /// parity of the term's qubits onto its highest qubit, `R_Z(2 gamma c)`
    /// rotates it, and the reversed ladder uncomputes the parity.
    pub fn gate_level_phase_separator(&mut self, h: &ZHamiltonian, gamma: f64) -> Result<()> {
        self.check_dim(h.n_qubits())?;
        for t in h.terms() {
            let qubits: Vec<usize> = (0..self.n_qubits).filter(|&q| t.mask >> q & 1 == 1).collect();
            let last = *qubits.last().expect("non-identity term");
            for w in qubits.windows(2) {
                self.apply_cnot(w[0], w[1]);
            }
            self.apply_rz(last, 2.0 * gamma * t.coeff);
            for w in qubits.windows(2).rev() {
                self.apply_cnot(w[0], w[1]);
            }
        }
        Ok(())
    }

    /// Amplitude dump: `u64` qubit count, then `(re, im)` `f64` pairs, all
    /// little-endian.
    pub fn write_le<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.n_qubits as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// `|+>^n`.
pub fn init_plus(n: usize) -> Result<StateVector> {
    check_qubits(n)?;
    let a = Complex64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
    Ok(StateVector { n_qubits: n, amps: vec![a; 1 << n] })
}

/// Product state with qubit `i` in `cos(y_i/2)|0> + sin(y_i/2)|1>`.
pub fn init_warmstart(y: &WarmStartAngles) -> Result<StateVector> {
    let n = y.len();
    check_qubits(n)?;
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for &yi in y.angles() {
        let (s, c) = (yi / 2.0).sin_cos();
        let mut next = Vec::with_capacity(amps.len() * 2);
        next.extend(amps.iter().map(|a| a * c));
        next.extend(amps.iter().map(|a| a * s));
        amps = next;
    }
    Ok(StateVector { n_qubits: n, amps })
}

fn ry(theta: f64) -> Gate {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

fn rz(theta: f64) -> Gate {
    let zero = Complex64::new(0.0, 0.0);
    [
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]
}

fn matmul(a: &Gate, b: &Gate) -> Gate {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::ZTerm;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &StateVector, b: &StateVector, tol: f64) {
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn plus_state() {
        let s = init_plus(1).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let s = init_plus(2).unwrap();
        assert!(s.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert!(init_plus(0).is_err());
        assert!(matches!(init_plus(25), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn warmstart_states() {
        let zeros = WarmStartAngles::from_relaxed(&[0.0; 3]).unwrap();
        close(&init_warmstart(&zeros).unwrap(), &StateVector::basis(3, 0).unwrap(), 1e-15);
        let ones = WarmStartAngles::from_relaxed(&[1.0; 3]).unwrap();
        close(&init_warmstart(&ones).unwrap(), &StateVector::basis(3, 7).unwrap(), 1e-15);
        let half = WarmStartAngles::from_relaxed(&[0.5; 3]).unwrap();
        close(&init_warmstart(&half).unwrap(), &init_plus(3).unwrap(), 1e-15);
        assert!(WarmStartAngles::new(vec![4.0]).is_err());
        assert!(WarmStartAngles::from_relaxed(&[1.5]).is_err());
        let reg = WarmStartAngles::from_relaxed_regularized(&[0.0, 1.0], 0.25).unwrap();
        assert_abs_diff_eq!(reg.angles()[0], 2.0 * 0.5f64.asin(), epsilon = 1e-15);
    }

    #[test]
    fn phase_separator_examples() {
        let cost = DiagonalCost::new(2, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let mut s = init_plus(2).unwrap();
        s.apply_phase_separator(&cost, 0.0).unwrap();
        close(&s, &init_plus(2).unwrap(), 1e-15);

        let flat = DiagonalCost::new(2, vec![3.0; 4]).unwrap();
        let mut s = init_plus(2).unwrap();
        s.apply_phase_separator(&flat, 1.3).unwrap();
        assert!(s.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));

        // ZZ cost: +1 on even parity, -1 on odd parity
        let mut s = init_plus(2).unwrap();
        s.apply_phase_separator(&cost, PI / 4.0).unwrap();
        let m = Complex64::from_polar(0.5, -PI / 4.0);
        let p = Complex64::from_polar(0.5, PI / 4.0);
        for (got, want) in s.amplitudes().iter().zip([m, p, p, m]) {
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-15);
        }
        let wrong = DiagonalCost::new(3, vec![0.0; 8]).unwrap();
        assert!(s.apply_phase_separator(&wrong, 1.0).is_err());
    }

    #[test]
    fn x_mixer_examples() {
        let mut s = StateVector::basis(1, 0).unwrap();
        s.apply_x_mixer(0.0);
        close(&s, &StateVector::basis(1, 0).unwrap(), 1e-15);
        s.apply_x_mixer(PI / 2.0);
        assert_abs_diff_eq!(s.amplitudes()[1].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.probabilities()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ws_mixer_at_half_is_reversed_x_mixer() {
        let y = WarmStartAngles::new(vec![PI / 2.0; 3]).unwrap();
        let mut a = StateVector::basis(3, 5).unwrap();
        a.apply_x_mixer(0.4);
        let mut b = StateVector::basis(3, 5).unwrap();
        b.apply_ws_mixer(-0.4, &y).unwrap();
        close(&a, &b, 1e-14);
    }

    #[test]
    fn ws_mixer_identity_and_eigenstate() {
        let y = WarmStartAngles::from_relaxed(&[0.2, 0.9]).unwrap();
        let start = init_warmstart(&y).unwrap();
        let mut s = start.clone();
        s.apply_ws_mixer(0.0, &y).unwrap();
        close(&s, &start, 1e-15);

        let beta = 0.37;
        s.apply_ws_mixer(beta, &y).unwrap();
        // two qubits, each picks up e^{i beta}
        let phase = Complex64::from_polar(1.0, 2.0 * beta);
        for (got, want) in s.amplitudes().iter().zip(start.amplitudes()) {
            assert_abs_diff_eq!((got - want * phase).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn expectation_examples() {
        let cost = DiagonalCost::new(2, vec![0.5, -1.0, 2.0, 4.0]).unwrap();
        let s = StateVector::basis(2, 2).unwrap();
        assert_abs_diff_eq!(s.expectation(&cost).unwrap(), 2.0);
        let s = init_plus(2).unwrap();
        assert_abs_diff_eq!(s.expectation(&cost).unwrap(), 1.375, epsilon = 1e-15);
    }

    #[test]
    fn sampling() {
        let s = StateVector::basis(3, 6).unwrap();
        let h = s.sample(100, 1).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[&6], 100);

        let s = init_plus(2).unwrap();
        let h = s.sample(100_000, 9).unwrap();
        for x in 0..4 {
            let p = h[&x] as f64 / 1e5;
            assert!((p - 0.25).abs() < 0.01, "p({x}) = {p}");
        }
        assert_eq!(h, s.sample(100_000, 9).unwrap());
        assert!(s.sample(0, 1).is_err());
    }

    #[test]
    fn gate_level_single_z_is_rz() {
        let h = ZHamiltonian::new(2, vec![ZTerm { mask: 0b10, coeff: 0.8 }], 0.0).unwrap();
        let mut a = init_plus(2).unwrap();
        a.gate_level_phase_separator(&h, 0.3).unwrap();
        let mut b = init_plus(2).unwrap();
        b.apply_rz(1, 2.0 * 0.3 * 0.8);
        close(&a, &b, 1e-15);
    }

    #[test]
    fn gate_level_zz_matches_diagonal() {
        let h = ZHamiltonian::new(3, vec![ZTerm { mask: 0b101, coeff: -1.1 }], 0.0).unwrap();
        let mut s0 = init_plus(3).unwrap();
        s0.apply_ry(1, 0.7);
        let mut a = s0.clone();
        a.gate_level_phase_separator(&h, 0.91).unwrap();
        let mut b = s0;
        b.apply_phase_separator(&h.diagonal(), 0.91).unwrap();
        assert!(a.overlap(&b) > 1.0 - 1e-12);
    }

    #[test]
    fn amplitude_dump_layout() {
        let s = StateVector::basis(1, 1).unwrap();
        let mut buf = Vec::new();
        s.write_le(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 2 * 16);
        assert_eq!(&buf[24..32], &1.0f64.to_le_bytes());
    }
}
