//! Python bindings: `import qbeam`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use qbeam_core::bench::{self, SolverKind, SolverSettings};
use qbeam_core::encoding::{self, DiagonalCost, SubproblemMatrix};
use qbeam_core::mimo::{self, ChannelMatrix, PhaseIndexVector};
use qbeam_core::qaoa::{self, InitialState, OptimizerConfig};
use qbeam_core::simulator::WarmStartAngles;
use qbeam_core::Error;

create_exception!(qbeam, ResourceLimitError, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ResourceLimit(m) => ResourceLimitError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for qbeam_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Complex channel matrix with `nr` rows and `nt` columns.
#[pyclass(name = "Channel", module = "qbeam", frozen)]
struct PyChannel {
    inner: ChannelMatrix,
}

#[pymethods]
impl PyChannel {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self { inner: ChannelMatrix::from_rows(&rows).py()? })
    }

    #[staticmethod]
    fn rayleigh(nt: usize, nr: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: mimo::sample_rayleigh_channel(nt, nr, seed).py()? })
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: ChannelMatrix::from_json(s).py()? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn nt(&self) -> usize {
        self.inner.nt()
    }

    #[getter]
    fn nr(&self) -> usize {
        self.inner.nr()
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        self.inner.entries().chunks(self.inner.nt()).map(<[_]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!("Channel(nr={}, nt={})", self.inner.nr(), self.inner.nt())
    }
}

fn phases(indices: Vec<u32>, b: u32) -> PyResult<PhaseIndexVector> {
    PhaseIndexVector::new(b, indices).py()
}

/// SNR of phase-index beamformers `f` (transmit) and `g` (receive).
#[pyfunction]
fn snr(h: &PyChannel, f: Vec<u32>, g: Vec<u32>, b: u32) -> PyResult<f64> {
    Ok(mimo::snr(&h.inner, &phases(f, b)?, &phases(g, b)?).py()?.0)
}

#[pyfunction]
fn decode_phase(indices: Vec<u32>, b: u32) -> PyResult<Vec<Complex64>> {
    Ok(phases(indices, b)?.decode())
}

#[pyfunction]
fn quantize_to_phases(x: Vec<Complex64>, b: u32) -> PyResult<Vec<u32>> {
    Ok(mimo::quantize_to_phases(&x, b).py()?.indices().to_vec())
}

/// `(u, sigma, v)` with `H v = sigma u`.
#[pyfunction]
fn top_singular_pair(h: &PyChannel) -> PyResult<(Vec<Complex64>, f64, Vec<Complex64>)> {
    let p = mimo::top_singular_pair(&h.inner).py()?;
    Ok((p.u, p.sigma, p.v))
}

#[pyfunction]
fn infinite_resolution_gain(h: &PyChannel) -> PyResult<f64> {
    mimo::infinite_resolution_gain(&h.inner).py()
}

#[pyfunction]
fn theta_angles(b: u32) -> PyResult<Vec<f64>> {
    Ok(encoding::theta_angles(b).py()?.thetas)
}

/// Subproblem matrix for optimizing one side with the other side fixed.
/// `side` is `"transmit"` (optimize f, `fixed` is g) or `"receive"`.
#[pyfunction]
#[pyo3(signature = (h, fixed, b, side = "transmit"))]
fn subproblem_matrix(h: &PyChannel, fixed: Vec<u32>, b: u32, side: &str) -> PyResult<Vec<Vec<Complex64>>> {
    let v = phases(fixed, b)?.decode();
    let q = match side {
        "transmit" => SubproblemMatrix::transmit_side(&h.inner, &v),
        "receive" => SubproblemMatrix::receive_side(&h.inner, &v),
        other => return Err(PyValueError::new_err(format!("side must be 'transmit' or 'receive', got '{other}'"))),
    }
    .py()?;
    Ok((0..q.dim()).map(|k| (0..q.dim()).map(|j| q.get(k, j)).collect()).collect())
}

fn matrix(q: Vec<Vec<Complex64>>) -> PyResult<SubproblemMatrix> {
    let n = q.len();
    if q.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("Q must be square"));
    }
    SubproblemMatrix::new(n, q.into_iter().flatten().collect()).py()
}

/// Diagonal cost `-(x^H Q x - tr Q)` over all basis states.
#[pyfunction]
fn cost_oracle(q: Vec<Vec<Complex64>>, b: u32) -> PyResult<Vec<f64>> {
    Ok(encoding::cost_oracle(&matrix(q)?, b).py()?.values().to_vec())
}

/// `([(mask, coeff), ...], offset)` of the Pauli-Z cost Hamiltonian.
#[pyfunction]
fn build_z_hamiltonian(q: Vec<Vec<Complex64>>, b: u32) -> PyResult<(Vec<(u64, f64)>, f64)> {
    let hz = encoding::build_z_hamiltonian(&matrix(q)?, b).py()?;
    Ok((hz.terms().iter().map(|t| (t.mask, t.coeff)).collect(), hz.offset()))
}

/// Result of [`run_qaoa`].
#[pyclass(name = "QaoaResult", module = "qbeam", frozen, get_all)]
struct PyQaoaResult {
    best_bits: u64,
    best_cost: f64,
    best_expectation: f64,
    gammas: Vec<f64>,
    betas: Vec<f64>,
    histogram: BTreeMap<u64, usize>,
    evaluations: usize,
}

/// Optimizes and samples a `p`-layer circuit for a diagonal cost of
/// length `2^n`. Passing relaxed values `warm_start` in `[0, 1]` selects
/// the warm-start state and mixer.
#[pyfunction]
#[pyo3(signature = (cost, p = 3, shots = 1024, seed = 0, warm_start = None, restarts = 3, budget = 600))]
fn run_qaoa(
    cost: Vec<f64>,
    p: usize,
    shots: usize,
    seed: u64,
    warm_start: Option<Vec<f64>>,
    restarts: usize,
    budget: usize,
) -> PyResult<PyQaoaResult> {
    let len = cost.len();
    if !len.is_power_of_two() {
        return Err(PyValueError::new_err("cost length must be a power of two"));
    }
    let cost = DiagonalCost::new(len.trailing_zeros() as usize, cost).py()?;
    let init = match warm_start {
        Some(c) => InitialState::WarmStart(WarmStartAngles::from_relaxed(&c).py()?),
        None => InitialState::Plus,
    };
    let opt = OptimizerConfig { restarts, budget, ..Default::default() };
    let r = qaoa::run_qaoa(&cost, p, shots, seed, &init, &opt).py()?;
    Ok(PyQaoaResult {
        best_bits: r.best_bits,
        best_cost: r.best_cost,
        best_expectation: r.best_expectation,
        gammas: r.best_params.gammas,
        betas: r.best_params.betas,
        histogram: r.histogram,
        evaluations: r.evaluations,
    })
}

/// Relaxed bits `c*` and objective of the continuous subproblem.
#[pyfunction]
#[pyo3(signature = (q, b, seed = 0))]
fn solve_relaxed(q: Vec<Vec<Complex64>>, b: u32, seed: u64) -> PyResult<(Vec<f64>, f64)> {
    let s = qaoa::solve_relaxed(&matrix(q)?, b, seed).py()?;
    Ok((s.c_star, s.objective))
}

/// Runs a named solver (`exhaustive`, `sa`, `qsvd`, `alg1`, `alg2`,
/// `alg2_ws`, `co`) and returns the outcome as a JSON string.
#[pyfunction]
#[pyo3(signature = (h, solver, b, seed = 0, rounds = 5, p = 3, shots = 1024, n_inits = 3))]
#[allow(clippy::too_many_arguments)]
fn solve(
    h: &PyChannel,
    solver: &str,
    b: u32,
    seed: u64,
    rounds: usize,
    p: usize,
    shots: usize,
    n_inits: usize,
) -> PyResult<String> {
    let kind: SolverKind = solver.parse().py()?;
    let mut s = SolverSettings::default();
    s.ao.rounds = rounds;
    s.ao.qaoa.p = p;
    s.ao.qaoa.shots = shots;
    s.n_inits = n_inits;
    Ok(bench::solve_with(kind, &h.inner, b, seed, &s).py()?.to_json())
}

#[pymodule]
fn qbeam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ResourceLimitError", m.py().get_type::<ResourceLimitError>())?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyQaoaResult>()?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(decode_phase, m)?)?;
    m.add_function(wrap_pyfunction!(quantize_to_phases, m)?)?;
    m.add_function(wrap_pyfunction!(top_singular_pair, m)?)?;
    m.add_function(wrap_pyfunction!(infinite_resolution_gain, m)?)?;
    m.add_function(wrap_pyfunction!(theta_angles, m)?)?;
    m.add_function(wrap_pyfunction!(subproblem_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cost_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(build_z_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(run_qaoa, m)?)?;
    m.add_function(wrap_pyfunction!(solve_relaxed, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    Ok(())
}
