use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qbeam::encoding::{
    build_qubo_b2, build_z_hamiltonian, cost_oracle, decode_basis_state, encode_basis_state, SubproblemMatrix,
};
use qbeam::mimo::{
    infinite_resolution_gain, quantize_to_phases, sample_rayleigh_channel, snr, top_singular_pair, PhaseIndexVector,
};
use qbeam::qaoa::{expectation_at, solve_relaxed, InitialState, QaoaParams};
use qbeam::simulator::{init_plus, init_warmstart, StateVector, WarmStartAngles};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b))
}

/// Gram matrix of 1..=3 random rows over `n` columns.
fn subproblem(n: usize) -> impl Strategy<Value = (Vec<Vec<Complex64>>, SubproblemMatrix)> {
    prop::collection::vec(prop::collection::vec(complex(), n), 1..=3)
        .prop_map(|rows| (rows.clone(), SubproblemMatrix::gram(&rows).unwrap()))
}

fn dense_q(q: &SubproblemMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(q.dim(), q.dim(), |k, j| q.get(k, j))
}

/// `-(v^H Q v - tr Q)` written out directly.
fn direct_cost(q: &SubproblemMatrix, v: &[Complex64]) -> f64 {
    let m = dense_q(q);
    let x = DMatrix::from_column_slice(v.len(), 1, v);
    let quad = (x.adjoint() * &m * &x)[(0, 0)].re;
    -(quad - m.trace().re)
}

/// `exp(-i beta sum_j X_j)` as a dense matrix, by Taylor series.
fn dense_x_mixer(n: usize, beta: f64) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let b = DMatrix::from_fn(dim, dim, |r, col| {
        let flip = r ^ col;
        if flip.count_ones() == 1 && flip < dim {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let a = b * c(0.0, -beta);
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..120 {
        term = &term * &a / c(k as f64, 0.0);
        sum += &term;
    }
    sum
}

fn state_distance(a: &StateVector, b: &[Complex64]) -> f64 {
    a.amplitudes().iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snr_bounded_by_infinite_resolution(
        seed in any::<u64>(), nt in 1usize..4, nr in 1usize..4, b in 1u32..4, fs in any::<u64>(), gs in any::<u64>()
    ) {
        let h = sample_rayleigh_channel(nt, nr, seed).unwrap();
        let f = decode_basis_state(fs, nt, b);
        let g = decode_basis_state(gs, nr, b);
        let s = snr(&h, &f, &g).unwrap().0;
        prop_assert!(s >= 0.0);
        prop_assert!(s <= infinite_resolution_gain(&h).unwrap() + 1e-9);
    }

    #[test]
    fn snr_invariant_under_global_rotation(seed in any::<u64>(), b in 1u32..4, shift in 0u32..8, fs in any::<u64>(), gs in any::<u64>()) {
        let h = sample_rayleigh_channel(3, 2, seed).unwrap();
        let f = decode_basis_state(fs, 3, b);
        let g = decode_basis_state(gs, 2, b);
        let base = snr(&h, &f, &g).unwrap().0;
        prop_assert!((snr(&h, &f.rotated(shift), &g).unwrap().0 - base).abs() <= 1e-12 * base.max(1.0));
        prop_assert!((snr(&h, &f, &g.rotated(shift)).unwrap().0 - base).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn quantization_picks_a_nearest_level(x in prop::collection::vec(complex(), 1..6), b in 1u32..6) {
        let v = quantize_to_phases(&x, b).unwrap();
        let step = TAU / f64::from(1u32 << b);
        for (z, &i) in x.iter().zip(v.indices()) {
            if z.norm() == 0.0 {
                prop_assert_eq!(i, 0);
                continue;
            }
            let dist = |k: u32| {
                let d = (z.arg() - f64::from(k) * step).rem_euclid(TAU);
                d.min(TAU - d)
            };
            let best = (0..1u32 << b).map(dist).fold(f64::INFINITY, f64::min);
            prop_assert!(dist(i) <= best + 1e-12);
        }
    }

    #[test]
    fn basis_state_encoding_roundtrips(x in any::<u64>(), n in 1usize..5, b in 1u32..5) {
        let x = x & ((1u64 << (n as u32 * b)) - 1);
        let v = decode_basis_state(x, n, b);
        prop_assert_eq!(encode_basis_state(&v), x);
    }

    #[test]
    fn cost_oracle_matches_direct_evaluation((_, q) in subproblem(3), b in 1u32..4) {
        let cost = cost_oracle(&q, b).unwrap();
        for x in 0..1u64 << (3 * b) {
            let v = decode_basis_state(x, 3, b).decode();
            prop_assert!((cost.value(x) - direct_cost(&q, &v)).abs() <= 1e-9);
        }
    }

    #[test]
    fn hamiltonian_diagonal_equals_cost((_, q) in subproblem(2), b in 1u32..4) {
        let cost = cost_oracle(&q, b).unwrap();
        let hz = build_z_hamiltonian(&q, b).unwrap();
        let mean = cost.values().iter().sum::<f64>() / cost.values().len() as f64;
        prop_assert!((hz.offset() - mean).abs() <= 1e-9);
        for x in 0..1u64 << (2 * b) {
            prop_assert!((hz.evaluate(x) - cost.value(x)).abs() <= 1e-8);
        }
        let (cnots, rz) = hz.gate_counts();
        let expect: usize = hz.terms().iter().map(|t| 2 * (t.mask.count_ones() as usize - 1)).sum();
        prop_assert_eq!(cnots, expect);
        prop_assert_eq!(rz, hz.terms().len());
    }

    #[test]
    fn b2_qubo_agrees_with_phase_cost(a in prop::collection::vec(complex(), 2..4)) {
        let n = a.len();
        let q = SubproblemMatrix::gram(std::slice::from_ref(&a)).unwrap();
        let qubo = build_qubo_b2(std::slice::from_ref(&a)).unwrap();
        let mut best_qubo = f64::NEG_INFINITY;
        for x in 0..1u64 << (2 * n) {
            let s = qubo.spins(x);
            let direct: Complex64 = a.iter().zip(&s).map(|(ai, si)| ai * si).sum();
            prop_assert!((qubo.objective(x) - direct.norm_sqr()).abs() <= 1e-9);
            let phases = qubo.decode(x).decode();
            prop_assert!((qubo.objective(x) - 2.0 * q.quadratic_form(&phases)).abs() <= 1e-9);
            best_qubo = best_qubo.max(qubo.objective(x));
        }
        let cost = cost_oracle(&q, 2).unwrap();
        let min_cost = cost.values().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((best_qubo - 2.0 * (-min_cost + q.trace())).abs() <= 1e-9);
    }

    #[test]
    fn singular_value_matches_eigen_oracle(seed in any::<u64>(), nt in 1usize..5, nr in 1usize..5) {
        let h = sample_rayleigh_channel(nt, nr, seed).unwrap();
        let m = DMatrix::from_fn(nr, nt, |r, t| h.get(r, t));
        let top = (m.adjoint() * &m).symmetric_eigen().eigenvalues.max();
        let pair = top_singular_pair(&h).unwrap();
        prop_assert!((pair.sigma * pair.sigma - top).abs() <= 1e-8 * top.max(1.0));
        let hv = h.apply(&pair.v);
        let resid: f64 = hv.iter().zip(&pair.u).map(|(a, u)| (a - u * pair.sigma).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(resid <= 1e-8 * pair.sigma.max(1.0));
    }

    #[test]
    fn x_mixer_matches_dense_exponential(n in 1usize..4, beta in -PI..PI, amps in prop::collection::vec(complex(), 8)) {
        let dim = 1usize << n;
        let norm = amps[..dim].iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let v: Vec<Complex64> = amps[..dim].iter().map(|a| a / norm).collect();
        let mut s = StateVector::from_amplitudes(v.clone()).unwrap();
        s.apply_x_mixer(beta);
        let expect = dense_x_mixer(n, beta) * DMatrix::from_column_slice(dim, 1, &v);
        prop_assert!(state_distance(&s, expect.as_slice()) <= 1e-10);
    }

    #[test]
    fn warm_start_state_is_mixer_eigenstate(y in prop::collection::vec(0.0..PI, 1..6), beta in -PI..PI) {
        let y = WarmStartAngles::new(y).unwrap();
        let s0 = init_warmstart(&y).unwrap();
        let mut s = s0.clone();
        s.apply_ws_mixer(beta, &y).unwrap();
        prop_assert!((s.overlap(&s0) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn neutral_warm_start_mirrors_plus_mixer((_, q) in subproblem(2), gamma in -PI..PI, beta in -PI..PI) {
        let cost = cost_oracle(&q, 2).unwrap();
        let y = WarmStartAngles::from_relaxed(&[0.5; 4]).unwrap();
        let ws = expectation_at(&cost, &InitialState::WarmStart(y), &QaoaParams::new(vec![gamma], vec![beta]).unwrap()).unwrap();
        let plus = expectation_at(&cost, &InitialState::Plus, &QaoaParams::new(vec![gamma], vec![-beta]).unwrap()).unwrap();
        prop_assert!((ws - plus).abs() <= 1e-9);
    }

    #[test]
    fn phase_separator_preserves_probabilities((_, q) in subproblem(2), b in 1u32..3, gamma in -PI..PI) {
        let cost = cost_oracle(&q, b).unwrap();
        let mut s = init_plus(2 * b as usize).unwrap();
        s.apply_x_mixer(0.3);
        let before = s.probabilities();
        s.apply_phase_separator(&cost, gamma).unwrap();
        for (a, p) in before.iter().zip(s.probabilities()) {
            prop_assert!((a - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn relaxed_solution_is_boxed_and_monotone((_, q) in subproblem(3), b in 1u32..4, seed in any::<u64>()) {
        let s = solve_relaxed(&q, b, seed).unwrap();
        prop_assert_eq!(s.c_star.len(), 3 * b as usize);
        prop_assert!(s.c_star.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(s.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn sampling_conserves_shots(seed in any::<u64>(), shots in 1usize..2000) {
        let y = WarmStartAngles::from_relaxed(&[0.2, 0.7, 0.5]).unwrap();
        let h = init_warmstart(&y).unwrap().sample(shots, seed).unwrap();
        prop_assert_eq!(h.values().sum::<usize>(), shots);
        prop_assert!(h.keys().all(|&x| x < 8));
    }

    #[test]
    fn phase_vector_decode_has_unit_modulus(idx in prop::collection::vec(0u32..16, 1..8)) {
        let v = PhaseIndexVector::new(4, idx).unwrap();
        prop_assert!(v.decode().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-15));
        prop_assert_eq!(quantize_to_phases(&v.decode(), 4).unwrap(), v);
    }
}
