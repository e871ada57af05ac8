//! Binary encodings of the fixed-side beamforming subproblem.
//!
//! With one side of the link fixed, the SNR reduces to the quadratic form
//! `f^H Q f` with `Q = A^H A`. This module turns that form into
//!
//! * the real/imaginary QUBO used at `b = 2` ([`build_qubo_b2`]),
//! * a dense diagonal cost over `b * n` qubits ([`cost_oracle`]),
//! * an explicit sum of Pauli-Z strings ([`build_z_hamiltonian`]).
//!
//! Qubit `k * b + i` carries bit `i` of antenna `k`'s phase index, and qubit
//! 0 is the least significant bit of a basis-state index. A bit value `x`
//! corresponds to the Z eigenvalue `(-1)^x`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{self, Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mimo::{phase_table, ChannelMatrix, PhaseIndexVector};

/// Largest register the dense encodings will allocate.
pub const MAX_QUBITS: usize = 24;

/// Largest phase resolution supported by the binary phase encoding.
pub const MAX_ENCODING_BITS: u32 = 6;

/// Pauli coefficients with magnitude at or below this are dropped.
pub const COEFF_TOLERANCE: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-10;

/// Hermitian positive semidefinite `Q = A^H A`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SubproblemMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(invalid(format!("subproblem matrix needs {n}x{n} entries")));
        }
        for k in 0..n {
            if data[k * n + k].re < -1e-9 {
                return Err(invalid("subproblem matrix has a negative diagonal entry"));
            }
            for j in 0..n {
                if (data[k * n + j] - data[j * n + k].conj()).norm() > HERMITIAN_TOL {
                    return Err(invalid("subproblem matrix is not Hermitian"));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Gram matrix `A^H A` of the rows of `a`.
    pub fn gram(a: &[Vec<Complex64>]) -> Result<Self> {
        let n = a.first().map_or(0, Vec::len);
        if n == 0 || a.iter().any(|r| r.len() != n) {
            return Err(invalid("factor must be a nonempty rectangular matrix"));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for row in a {
            for k in 0..n {
                for j in 0..n {
                    data[k * n + j] += row[k].conj() * row[j];
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Subproblem over `f` with `g` fixed: `A = g^H H`.
    pub fn transmit_side(h: &ChannelMatrix, g: &[Complex64]) -> Result<Self> {
        if g.len() != h.nr() {
            return Err(invalid(format!("g has {} entries, channel has {} rows", g.len(), h.nr())));
        }
        Self::gram(&[h.row_combination(g)])
    }

    /// Subproblem over `g` with `f` fixed: `A = (H f)^H`.
    pub fn receive_side(h: &ChannelMatrix, f: &[Complex64]) -> Result<Self> {
        if f.len() != h.nt() {
            return Err(invalid(format!("f has {} entries, channel has {} cols", f.len(), h.nt())));
        }
        let row: Vec<Complex64> = h.apply(f).into_iter().map(|z| z.conj()).collect();
        Self::gram(&[row])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, j: usize) -> Complex64 {
        self.data[k * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|k| self.get(k, k).re).sum()
    }

    /// `x^H Q x`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.n {
            let row = &self.data[k * self.n..(k + 1) * self.n];
            let qx: Complex64 = row.iter().zip(x).map(|(q, xj)| q * xj).sum();
            acc += x[k].conj() * qx;
        }
        acc.re
    }
}

/// Binary angles `theta_j = 2^j * 2 pi / 2^b` whose 0/1 subset sums reach
/// every `b`-bit phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSet {
    pub bits: u32,
    pub thetas: Vec<f64>,
}

pub fn theta_angles(bits: u32) -> Result<ThetaSet> {
    check_bits(bits)?;
    let base = 2.0 * PI / f64::from(1u32 << bits);
    let thetas = (0..bits).map(|j| f64::from(1u32 << j) * base).collect();
    Ok(ThetaSet { bits, thetas })
}

fn check_bits(bits: u32) -> Result<()> {
    if !(1..=MAX_ENCODING_BITS).contains(&bits) {
        return Err(invalid(format!("bits must be in 1..={MAX_ENCODING_BITS}, got {bits}")));
    }
    Ok(())
}

fn check_register(n_antennas: usize, bits: u32) -> Result<usize> {
    let qubits = n_antennas * bits as usize;
    if qubits > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{qubits} qubits requested, limit is {MAX_QUBITS}"
        )));
    }
    Ok(qubits)
}

/// Antenna `k` gets index `sum_j bits[k*b + j] * 2^j`.
pub fn decode_bits(bits: &[u8], b: u32) -> Result<PhaseIndexVector> {
    check_bits(b)?;
    let b = b as usize;
    if !bits.len().is_multiple_of(b) {
        return Err(invalid(format!("{} bits is not a multiple of b={b}", bits.len())));
    }
    if bits.iter().any(|&x| x > 1) {
        return Err(invalid("bit values must be 0 or 1"));
    }
    let idx = bits
        .chunks_exact(b)
        .map(|chunk| chunk.iter().enumerate().map(|(j, &x)| u32::from(x) << j).sum())
        .collect();
    PhaseIndexVector::new(b as u32, idx)
}

/// Phase indices encoded by basis state `x` of an `n_antennas * b` register.
pub fn decode_basis_state(x: u64, n_antennas: usize, b: u32) -> PhaseIndexVector {
    let mask = (1u64 << b) - 1;
    let idx = (0..n_antennas).map(|k| ((x >> (k as u32 * b)) & mask) as u32).collect();
    PhaseIndexVector::new(b, idx).expect("decoded indices are in range")
}

/// Inverse of [`decode_basis_state`].
pub fn encode_basis_state(v: &PhaseIndexVector) -> u64 {
    v.indices()
        .iter()
        .enumerate()
        .map(|(k, &i)| u64::from(i) << (k as u32 * v.bits()))
        .sum()
}

/// Classical objective per computational basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCost {
    n_qubits: usize,
    values: Vec<f64>,
}

impl DiagonalCost {
    pub fn new(n_qubits: usize, values: Vec<f64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "{n_qubits} qubits requested, limit is {MAX_QUBITS}"
            )));
        }
        if values.len() != 1 << n_qubits {
            return Err(invalid(format!(
                "{n_qubits} qubits need {} values, got {}",
                1u64 << n_qubits,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("cost values must be finite"));
        }
        Ok(Self { n_qubits, values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: u64) -> f64 {
        self.values[x as usize]
    }

    /// Lowest-index basis state of minimal cost.
    pub fn argmin(&self) -> u64 {
        let mut best = 0;
        for (x, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = x;
            }
        }
        best as u64
    }

    /// Little-endian dump: `u64` qubit count, then `2^n` `f64` values.
    pub fn write_le<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.n_qubits as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_le<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let io_err = |e: io::Error| Error::Parse(format!("diagonal cost: {e}"));
        r.read_exact(&mut word).map_err(io_err)?;
        let n = u64::from_le_bytes(word) as usize;
        if n > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("header declares {n} qubits")));
        }
        let mut values = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            r.read_exact(&mut word).map_err(io_err)?;
            values.push(f64::from_le_bytes(word));
        }
        Self::new(n, values)
    }
}

/// Negated SNR numerator (without the constant `tr Q` part) for every
/// `b`-bit assignment of the `dim(Q)` antennas.
///
/// `values[x] = -sum_{k != j} Q_kj exp(i (phi_j(x) - phi_k(x)))`.
pub fn cost_oracle(q: &SubproblemMatrix, b: u32) -> Result<DiagonalCost> {
    check_bits(b)?;
    let n = q.dim();
    let qubits = check_register(n, b)?;
    let table = phase_table(b);
    let trace = q.trace();
    let eval = |x: usize| {
        let f: Vec<Complex64> = decode_basis_state(x as u64, n, b)
            .indices()
            .iter()
            .map(|&i| table[i as usize])
            .collect();
        -(q.quadratic_form(&f) - trace)
    };
    let values: Vec<f64> = if qubits >= 12 {
        (0..1usize << qubits).into_par_iter().map(eval).collect()
    } else {
        (0..1usize << qubits).map(eval).collect()
    };
    DiagonalCost::new(qubits, values)
}

/// One Pauli-Z string: a real coefficient on the qubits set in `mask`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTerm {
    pub mask: u64,
    pub coeff: f64,
}

/// Diagonal Hamiltonian as a sum of Z strings plus a dropped identity
/// coefficient kept in `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZHamiltonian {
    n_qubits: usize,
    terms: Vec<ZTerm>,
    offset: f64,
}

impl ZHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<ZTerm>, offset: f64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if t.mask == 0 {
                return Err(invalid("identity term belongs in the offset"));
            }
            if t.mask >> n_qubits != 0 {
                return Err(invalid(format!("mask {:#b} exceeds {n_qubits} qubits", t.mask)));
            }
            if !seen.insert(t.mask) {
                return Err(invalid(format!("duplicate mask {:#b}", t.mask)));
            }
        }
        Ok(Self { n_qubits, terms, offset })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[ZTerm] {
        &self.terms
    }

    /// Identity coefficient removed from the term list.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Eigenvalue on `|x>`, excluding the offset.
    pub fn evaluate(&self, x: u64) -> f64 {
        self.terms
            .iter()
            .map(|t| if (t.mask & x).count_ones().is_multiple_of(2) { t.coeff } else { -t.coeff })
            .sum()
    }

    /// All `2^n` eigenvalues (offset excluded), via a fast Walsh-Hadamard
    /// transform of the coefficient vector.
    pub fn diagonal(&self) -> DiagonalCost {
        let mut v = vec![0.0; 1 << self.n_qubits];
        for t in &self.terms {
            v[t.mask as usize] = t.coeff;
        }
        fwht(&mut v);
        DiagonalCost::new(self.n_qubits, v).expect("diagonal of a valid Hamiltonian")
    }

    /// Two-qubit and single-qubit gates of the CNOT-ladder circuit for
    /// `exp(-i gamma H)`: `(cnot, rz)`.
    pub fn gate_counts(&self) -> (usize, usize) {
        let cnot = self.terms.iter().map(|t| 2 * (t.mask.count_ones() as usize - 1)).sum();
        (cnot, self.terms.len())
    }

    /// JSON list of `{"mask", "coeff"}` objects.
    pub fn terms_json(&self) -> String {
        serde_json::to_string(&self.terms).expect("terms serialize")
    }

    pub fn from_terms_json(n_qubits: usize, s: &str) -> Result<Self> {
        let terms: Vec<ZTerm> = serde_json::from_str(s).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        Self::new(n_qubits, terms, 0.0)
    }
}

/// Unnormalized in-place Walsh-Hadamard butterfly.
pub(crate) fn fwht(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Z-string coefficients of `R_Z(theta_0) (x) ... (x) R_Z(theta_{n-1})`,
/// one per mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ZExpansion {
    pub n_qubits: usize,
    /// `coeffs[mask]`; bit `j` of `mask` selects `Z` on position `j`.
    pub coeffs: Vec<Complex64>,
}

/// Expands a tensor product of Z rotations into Z strings:
/// the coefficient of `alpha` is `prod_j [alpha_j ? -i sin(t_j/2) : cos(t_j/2)]`.
/// A negative angle turns its `-i` into `+i`.
pub fn rotation_tensor_expansion(thetas: &[f64]) -> Result<ZExpansion> {
    if thetas.is_empty() || thetas.len() > 12 {
        return Err(invalid(format!("expansion supports 1..=12 angles, got {}", thetas.len())));
    }
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for (j, &t) in thetas.iter().enumerate() {
        let (s, c) = (t / 2.0).sin_cos();
        let z = Complex64::new(0.0, -s);
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() * 2];
        for (mask, &a) in coeffs.iter().enumerate() {
            next[mask] = a * c;
            next[mask | 1 << j] = a * z;
        }
        coeffs = next;
    }
    Ok(ZExpansion { n_qubits: thetas.len(), coeffs })
}

/// Complex Z-string coefficients of `rho(x) = sum_{k != j} Q_kj e^{i(phi_j - phi_k)}`
/// before the imaginary parts cancel. Includes the identity mask.
pub fn z_expansion_complex(q: &SubproblemMatrix, b: u32) -> Result<BTreeMap<u64, Complex64>> {
    let thetas = theta_angles(b)?.thetas;
    let n = q.dim();
    check_register(n, b)?;
    let bu = b as usize;
    let mut acc: BTreeMap<u64, Complex64> = BTreeMap::new();
    let mut angles = vec![0.0; 2 * bu];
    for k in 0..n {
        for j in 0..n {
            let qkj = q.get(k, j);
            if k == j || qkj.norm() == 0.0 {
                continue;
            }
            // e^{-i theta x} on block k, e^{+i theta x} on block j; with
            // x = (1 - z)/2 each factor is a Z rotation up to a phase that
            // cancels between the two blocks.
            for i in 0..bu {
                angles[i] = -thetas[i];
                angles[bu + i] = thetas[i];
            }
            let exp = rotation_tensor_expansion(&angles)?;
            for (alpha, c) in exp.coeffs.iter().enumerate() {
                let lo = (alpha & ((1 << bu) - 1)) as u64;
                let hi = (alpha >> bu) as u64;
                let mask = (lo << (k * bu)) | (hi << (j * bu));
                *acc.entry(mask).or_default() += qkj * c;
            }
        }
    }
    Ok(acc)
}

/// Pauli-Z Hamiltonian whose diagonal equals [`cost_oracle`] up to the
/// returned offset.
pub fn build_z_hamiltonian(q: &SubproblemMatrix, b: u32) -> Result<ZHamiltonian> {
    build_z_hamiltonian_with_tolerance(q, b, COEFF_TOLERANCE)
}

pub fn build_z_hamiltonian_with_tolerance(
    q: &SubproblemMatrix,
    b: u32,
    tol: f64,
) -> Result<ZHamiltonian> {
    let n_qubits = check_register(q.dim(), b)?;
    let mut offset = 0.0;
    let mut terms = Vec::new();
    for (mask, c) in z_expansion_complex(q, b)? {
        let coeff = -c.re;
        if mask == 0 {
            offset = coeff;
        } else if coeff.abs() > tol {
            terms.push(ZTerm { mask, coeff });
        }
    }
    ZHamiltonian::new(n_qubits, terms, offset)
}

/// Real QUBO `x^T Q x + l^T x + c` over `x = [x_R ; x_I]`, equal to
/// `|A (f_R + i f_I)|^2` with `f = 2x - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    qmat: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl QuboProblem {
    /// Number of complex variables; the QUBO has twice as many bits.
    pub fn n_antennas(&self) -> usize {
        self.n
    }

    pub fn n_vars(&self) -> usize {
        2 * self.n
    }

    pub fn qmat(&self) -> &[f64] {
        &self.qmat
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Objective at bit vector `x` (bit `v` of `x` is variable `v`).
    pub fn objective(&self, x: u64) -> f64 {
        let m = self.n_vars();
        let bit = |v: usize| (x >> v) & 1 == 1;
        let mut total = self.constant;
        for r in (0..m).filter(|&r| bit(r)) {
            total += self.linear[r];
            for c in (0..m).filter(|&c| bit(c)) {
                total += self.qmat[r * m + c];
            }
        }
        total
    }

    /// Diagonal for minimization: `-objective`.
    pub fn to_cost(&self) -> Result<DiagonalCost> {
        let m = self.n_vars();
        if m > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{m} qubits exceeds {MAX_QUBITS}")));
        }
        DiagonalCost::new(m, (0..1u64 << m).map(|x| -self.objective(x)).collect())
    }

    /// Spin vector `(2 x_R - 1) + i (2 x_I - 1)`.
    pub fn spins(&self, x: u64) -> Vec<Complex64> {
        let s = |v: usize| if (x >> v) & 1 == 1 { 1.0 } else { -1.0 };
        (0..self.n).map(|k| Complex64::new(s(k), s(self.n + k))).collect()
    }

    /// Maps the spin vector of `x` to 2-bit phase indices. The spins sit at
    /// odd multiples of `pi/4`; dropping that common offset sends `1+i`
    /// to index 0, `-1+i` to 1, `-1-i` to 2 and `1-i` to 3.
    pub fn decode(&self, x: u64) -> PhaseIndexVector {
        let idx = (0..self.n)
            .map(|k| match ((x >> k) & 1, (x >> (self.n + k)) & 1) {
                (1, 1) => 0,
                (0, 1) => 1,
                (0, 0) => 2,
                _ => 3,
            })
            .collect();
        PhaseIndexVector::new(2, idx).expect("2-bit indices")
    }
}

/// Builds the `b = 2` QUBO for `max |A f|^2` over `f in {+-1 +- i}^n`.
///
/// `Q = 4 [[S, 2 A_I^T A_R], [-2 A_I^T A_R, S]]` with
/// `S = A_R^T A_R + A_I^T A_I`. Because `Q` is not symmetric, the linear
/// term uses its symmetric part: `l = -(Q + Q^T) 1 / 2`, and `c = 1^T Q 1 / 4`.
pub fn build_qubo_b2(a: &[Vec<Complex64>]) -> Result<QuboProblem> {
    let n = a.first().map_or(0, Vec::len);
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(invalid("factor must be a nonempty rectangular matrix"));
    }
    let m = 2 * n;
    let mut s = vec![0.0; n * n];
    let mut cross = vec![0.0; n * n];
    for row in a {
        for k in 0..n {
            for j in 0..n {
                s[k * n + j] += row[k].re * row[j].re + row[k].im * row[j].im;
                cross[k * n + j] += row[k].im * row[j].re;
            }
        }
    }
    let mut qmat = vec![0.0; m * m];
    for k in 0..n {
        for j in 0..n {
            qmat[k * m + j] = 4.0 * s[k * n + j];
            qmat[(n + k) * m + n + j] = 4.0 * s[k * n + j];
            qmat[k * m + n + j] = 8.0 * cross[k * n + j];
            qmat[(n + k) * m + j] = -8.0 * cross[k * n + j];
        }
    }
    let linear = (0..m)
        .map(|r| -0.5 * (0..m).map(|c| qmat[r * m + c] + qmat[c * m + r]).sum::<f64>())
        .collect();
    let constant = 0.25 * qmat.iter().sum::<f64>();
    Ok(QuboProblem { n, qmat, linear, constant })
}
