use std::f64::consts::TAU;

use num_complex::Complex64;
use qbeam::encoding::{cost_oracle, SubproblemMatrix};
use qbeam::mimo::{infinite_resolution_gain, sample_rayleigh_channel, snr, ChannelMatrix, PhaseIndexVector};
use qbeam::qaoa::{run_qaoa, InitialState, OptimizerConfig};
use qbeam::rng;
use qbeam::solvers::{
    co_based, exhaustive_search, exhaustive_search_with, quantized_svd, simulated_annealing, solve_alg1_b2,
    solve_alg2, AnnealingSchedule, AoConfig, SolveOutcome,
};
use rand::Rng as _;
use rayon::prelude::*;

/// Best SNR and its lexicographically first `(f, g)`, by direct enumeration.
fn enumerate(h: &ChannelMatrix, b: u32) -> (f64, Vec<u32>, Vec<u32>) {
    let levels = 1u32 << b;
    let (nt, nr) = (h.nt(), h.nr());
    let digits = |mut x: u64, n: usize| {
        let mut d = vec![0u32; n];
        for k in (0..n).rev() {
            d[k] = (x % u64::from(levels)) as u32;
            x /= u64::from(levels);
        }
        d
    };
    let mut best = (f64::NEG_INFINITY, vec![], vec![]);
    for fx in 0..u64::from(levels).pow(nt as u32) {
        for gx in 0..u64::from(levels).pow(nr as u32) {
            let (fi, gi) = (digits(fx, nt), digits(gx, nr));
            let f: Vec<Complex64> = fi.iter().map(|&i| Complex64::from_polar(1.0, TAU * f64::from(i) / f64::from(levels))).collect();
            let g: Vec<Complex64> = gi.iter().map(|&i| Complex64::from_polar(1.0, TAU * f64::from(i) / f64::from(levels))).collect();
            let hf = h.apply(&f);
            let z: Complex64 = g.iter().zip(&hf).map(|(a, y)| a.conj() * y).sum();
            let v = z.norm_sqr() / (nt * nr) as f64;
            if v > best.0 + 1e-12 {
                best = (v, fi, gi);
            }
        }
    }
    best
}

fn feasible(h: &ChannelMatrix, b: u32, out: &SolveOutcome) {
    assert!(out.f.indices().iter().chain(out.g.indices()).all(|&i| i < 1 << b));
    assert_eq!((out.f.len(), out.g.len()), (h.nt(), h.nr()));
    assert!((snr(h, &out.f, &out.g).unwrap().0 - out.snr.0).abs() <= 1e-12);
}

#[test]
fn exhaustive_matches_enumeration() {
    for (seed, (nt, nr, b)) in [(1, 1, 3), (2, 2, 1), (2, 2, 2), (3, 2, 2), (2, 3, 1), (3, 3, 1), (2, 2, 3)].into_iter().enumerate() {
        let h = sample_rayleigh_channel(nt, nr, 40 + seed as u64).unwrap();
        let (v, f, g) = enumerate(&h, b);
        let e = exhaustive_search_with(&h, b, false).unwrap();
        assert!((e.snr.0 - v).abs() <= 1e-12 * v.max(1.0));
        let at_oracle = snr(&h, &PhaseIndexVector::new(b, f).unwrap(), &PhaseIndexVector::new(b, g).unwrap()).unwrap().0;
        assert!((at_oracle - v).abs() <= 1e-12 * v.max(1.0));
        assert!((snr(&h, &e.f, &e.g).unwrap().0 - v).abs() <= 1e-12 * v.max(1.0));
    }
}

#[test]
fn exhaustive_phase_fixing_is_lossless() {
    let mut checked = 0;
    for nt in 1..=4 {
        for nr in 1..=4 {
            for b in 1..=3u32 {
                if b as usize * (nt + nr) > 12 {
                    continue;
                }
                for seed in 0..3 {
                    let h = sample_rayleigh_channel(nt, nr, 100 * seed + (nt * 10 + nr) as u64).unwrap();
                    let fixed = exhaustive_search(&h, b).unwrap();
                    let free = exhaustive_search_with(&h, b, false).unwrap();
                    assert!((fixed.snr.0 - free.snr.0).abs() <= 1e-12 * free.snr.0.max(1.0));
                    assert_eq!(fixed.f.indices()[0], 0);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 30);
}

#[test]
fn dominance_chain() {
    let cfg = AoConfig::default();
    (0..12u64).into_par_iter().for_each(|seed| {
        let (n, b) = if seed % 2 == 0 { (2, 2) } else { (3, 2) };
        let h = sample_rayleigh_channel(n, n, 700 + seed).unwrap();
        let exh = exhaustive_search(&h, b).unwrap();
        let bound = infinite_resolution_gain(&h).unwrap();
        assert!(exh.snr.0 <= bound + 1e-9);
        for out in [
            quantized_svd(&h, b).unwrap(),
            simulated_annealing(&h, b, &AnnealingSchedule::default(), seed).unwrap(),
            solve_alg2(&h, b, seed % 3 == 0, seed, &cfg).unwrap(),
            solve_alg1_b2(&h, 1, seed, &cfg).unwrap(),
            co_based(&h, b, 5, seed).unwrap(),
        ] {
            feasible(&h, b, &out);
            assert!(out.snr.0 <= exh.snr.0 + 1e-9, "{} beat exhaustive", out.solver);
        }
    });
}

#[test]
fn single_antenna_pair_is_trivially_optimal() {
    let h = ChannelMatrix::from_rows(&[vec![Complex64::new(0.3, -1.2)]]).unwrap();
    let gain = Complex64::new(0.3, -1.2).norm_sqr();
    for ws in [false, true] {
        let out = solve_alg2(&h, 3, ws, 4, &AoConfig::default()).unwrap();
        assert!((out.snr.0 - gain).abs() <= 1e-12);
    }
    assert!((exhaustive_search(&h, 2).unwrap().snr.0 - gain).abs() <= 1e-12);
}

#[test]
fn alg1_on_equal_phase_rank_one_channel() {
    let a = vec![Complex64::from_polar(1.3, 0.4); 3];
    let b = vec![Complex64::from_polar(0.8, 0.4); 2];
    let h = ChannelMatrix::outer(&a, &b).unwrap();
    let out = solve_alg1_b2(&h, 3, 2, &AoConfig::default()).unwrap();
    let exh = exhaustive_search(&h, 2).unwrap();
    assert!((out.snr.0 - exh.snr.0).abs() <= 1e-9 * exh.snr.0);
}

#[test]
fn alg1_trace_rises_until_a_terminal_drop() {
    for seed in 0..10 {
        let h = sample_rayleigh_channel(3, 3, 900 + seed).unwrap();
        let out = solve_alg1_b2(&h, 1, seed, &AoConfig::default()).unwrap();
        let t = &out.per_iteration_snr;
        let body = if t.len() >= 2 && t[t.len() - 1] < t[t.len() - 2] { &t[..t.len() - 1] } else { &t[..] };
        assert!(body.windows(2).all(|w| w[1] >= w[0]), "{t:?}");
        assert_eq!(out.iterations, t.len());
    }
}

#[test]
fn alg2_kept_best_trace_is_monotone() {
    for (seed, ws) in [(1, false), (2, true), (3, false)] {
        let h = sample_rayleigh_channel(3, 2, 950 + seed).unwrap();
        let out = solve_alg2(&h, 2, ws, seed, &AoConfig::default()).unwrap();
        assert_eq!(out.per_iteration_snr.len(), 5);
        assert!(out.per_iteration_snr.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*out.per_iteration_snr.last().unwrap(), out.snr.0);
        let hists = out.per_iteration_histograms.unwrap();
        assert_eq!(hists.len(), 10);
        assert!(hists.iter().all(|h| h.outcomes.iter().map(|o| o.count).sum::<usize>() == 1024));
    }
}

#[test]
fn warm_start_is_not_worse_than_plain_alg2() {
    let cfg = AoConfig::default();
    let ratios: Vec<(f64, f64)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let h = sample_rayleigh_channel(3, 3, 20_000 + seed).unwrap();
            let opt = exhaustive_search(&h, 3).unwrap().snr.0;
            let plain = solve_alg2(&h, 3, false, seed, &cfg).unwrap().snr.0;
            let warm = solve_alg2(&h, 3, true, seed, &cfg).unwrap().snr.0;
            (plain / opt, warm / opt)
        })
        .collect();
    let plain = ratios.iter().map(|r| r.0).sum::<f64>() / 50.0;
    let warm = ratios.iter().map(|r| r.1).sum::<f64>() / 50.0;
    assert!(warm >= 0.95, "warm-start mean ratio {warm}");
    assert!(plain <= warm + 0.02, "plain {plain} vs warm {warm}");
}

#[test]
fn quantized_svd_is_exact_for_quantized_singular_vectors() {
    let a = PhaseIndexVector::new(3, vec![0, 5, 2]).unwrap().decode();
    let b = PhaseIndexVector::new(3, vec![7, 1, 4, 4]).unwrap().decode();
    let h = ChannelMatrix::outer(&a, &b).unwrap();
    let q = quantized_svd(&h, 3).unwrap();
    let e = exhaustive_search(&h, 3).unwrap();
    assert!((q.snr.0 - e.snr.0).abs() <= 1e-9 * e.snr.0);
    assert!((e.snr.0 - 12.0).abs() <= 1e-9);
}

#[test]
fn co_based_recovers_rank_one_alignment() {
    for seed in 0..10 {
        let mut r = rng::rng(seed);
        let mut unit = |n: usize| -> Vec<Complex64> {
            (0..n).map(|_| Complex64::from_polar(1.0, r.random::<f64>() * TAU)).collect()
        };
        let h = ChannelMatrix::outer(&unit(4), &unit(3)).unwrap();
        let out = co_based(&h, 6, 5, seed).unwrap();
        assert!(out.snr.0 / infinite_resolution_gain(&h).unwrap() >= 0.99);
    }
}

#[test]
fn annealing_is_reproducible() {
    let h = sample_rayleigh_channel(3, 3, 5).unwrap();
    let a = simulated_annealing(&h, 3, &AnnealingSchedule::default(), 8).unwrap();
    let b = simulated_annealing(&h, 3, &AnnealingSchedule::default(), 8).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iterations, 20_000);
}

fn random_q(r: &mut rng::Rng, n: usize) -> SubproblemMatrix {
    let rows: Vec<Vec<Complex64>> =
        (0..2).map(|_| (0..n).map(|_| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect()).collect();
    SubproblemMatrix::gram(&rows).unwrap()
}

#[test]
fn qaoa_reaches_global_minimum_on_small_instances() {
    let hits = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let mut r = rng::rng(seed);
            let n = 2 + r.random_range(0..2);
            let b = 1 + r.random_range(0..2u32);
            let cost = cost_oracle(&random_q(&mut r, n), b).unwrap();
            let res = run_qaoa(&cost, 3, 4096, seed, &InitialState::Plus, &OptimizerConfig::default()).unwrap();
            let min = cost.values().iter().copied().fold(f64::INFINITY, f64::min);
            res.best_cost <= min + 1e-12
        })
        .count();
    assert!(hits >= 80, "{hits}/100");
}

#[test]
fn qaoa_beats_random_guessing_on_average() {
    let (mut qaoa, mut random) = (0.0, 0.0);
    for seed in 0..100u64 {
        let mut r = rng::rng(10_000 + seed);
        let cost = cost_oracle(&random_q(&mut r, 2), 2).unwrap();
        let res = run_qaoa(&cost, 3, 16, seed, &InitialState::Plus, &OptimizerConfig::default()).unwrap();
        qaoa += res.best_cost;
        random += cost.value(r.random_range(0..16));
    }
    assert!(qaoa <= random);
}

#[test]
fn qaoa_best_bits_is_best_sampled() {
    let mut r = rng::rng(77);
    let cost = cost_oracle(&random_q(&mut r, 3), 2).unwrap();
    let res = run_qaoa(&cost, 2, 300, 1, &InitialState::Plus, &OptimizerConfig::default()).unwrap();
    let best = res.histogram.keys().map(|&x| cost.value(x)).fold(f64::INFINITY, f64::min);
    assert_eq!(res.best_cost, best);
    assert_eq!(cost.value(res.best_bits), best);
    assert!(res.evaluations <= 3 * 600);
}
