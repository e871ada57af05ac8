//! Phase-quantized MIMO beamforming with QAOA subproblem solvers.

pub mod bench;
pub mod encoding;
pub mod error;
pub mod mimo;
pub mod optimize;
pub mod qaoa;
pub mod rng;
pub mod simulator;
pub mod solvers;

pub use encoding::{
    build_qubo_b2, build_z_hamiltonian, cost_oracle, theta_angles, DiagonalCost, QuboProblem, SubproblemMatrix,
    ZHamiltonian, ZTerm,
};
pub use error::{Error, Result};
pub use mimo::{
    decode_phase, quantize_to_phases, sample_rayleigh_channel, snr, top_singular_pair, ChannelMatrix,
    PhaseIndexVector, SingularPair, SnrValue,
};
pub use qaoa::{run_qaoa, solve_relaxed, InitialState, OptimizerConfig, QaoaParams, QaoaResult, RelaxedSolution};
pub use simulator::{init_plus, init_warmstart, Histogram, StateVector, WarmStartAngles};
