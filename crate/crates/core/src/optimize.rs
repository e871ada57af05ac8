//! Derivative-free minimization for the QAOA angle search.
//!
//! A Nelder-Mead simplex search run from each supplied start, with a hard
//! per-start evaluation budget. The result is always the best point that was
//! actually evaluated, so a stalled or degenerate search still returns
//! something usable.

use serde::Serialize;

/// Simplex coefficients and stopping tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Stop when the simplex values span less than this...
    pub ftol: f64,
    /// ...and its vertices lie within this distance of the best one.
    pub xtol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.25,
            ftol: 1e-10,
            xtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub value: f64,
    /// Every evaluation, in call order.
    pub trace: Vec<Evaluation>,
}

struct Budgeted<'a, F> {
    f: &'a mut F,
    left: usize,
    trace: &'a mut Vec<Evaluation>,
}

impl<F: FnMut(&[f64]) -> f64> Budgeted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.trace.push(Evaluation { params: x.to_vec(), value: v });
        Some(v)
    }
}

/// Minimizes `f` from every start with at most `budget` evaluations each
/// and returns the best evaluated point (earliest on ties).
///
/// Panics if `starts` is empty or the starts differ in dimension.
pub fn minimize_derivative_free<F>(
    mut f: F,
    starts: &[Vec<f64>],
    budget: usize,
    cfg: &NelderMeadConfig,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(!starts.is_empty(), "at least one start point is required");
    let dim = starts[0].len();
    assert!(starts.iter().all(|s| s.len() == dim), "start points differ in dimension");
    let budget = budget.max(1);

    let mut trace = Vec::new();
    for start in starts {
        let mut b = Budgeted { f: &mut f, left: budget, trace: &mut trace };
        nelder_mead(&mut b, start, cfg);
    }
    let best = trace
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, e)| e.clone())
        .expect("at least one evaluation");
    Minimum { params: best.params, value: best.value, trace }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(b: &mut Budgeted<'_, F>, start: &[f64], cfg: &NelderMeadConfig) {
    let n = start.len();
    let Some(f0) = b.eval(start) else { return };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), f0)];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += cfg.initial_step;
        let Some(v) = b.eval(&x) else { return };
        simplex.push((x, v));
    }
    if n == 0 {
        return;
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_f, worst_f) = (simplex[0].1, simplex[n].1);
        let spread = (worst_f - best_f).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| dist(x, &simplex[0].0))
            .fold(0.0, f64::max);
        if spread <= cfg.ftol && diameter <= cfg.xtol {
            return;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let toward = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + t * (x - c)).collect()
        };

        let worst = simplex[n].0.clone();
        let xr = toward(-cfg.reflection, &worst);
        let Some(fr) = b.eval(&xr) else { return };

        if fr < best_f {
            let xe = toward(-cfg.reflection * cfg.expansion, &worst);
            let Some(fe) = b.eval(&xe) else { return };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }

        let (xc, limit) = if fr < worst_f {
            (toward(-cfg.reflection * cfg.contraction, &worst), fr)
        } else {
            (toward(cfg.contraction, &worst), worst_f)
        };
        let Some(fc) = b.eval(&xc) else { return };
        if fc < limit || (fc <= limit && fr < worst_f) {
            simplex[n] = (xc, fc);
            continue;
        }

        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + cfg.shrink * (v - a))
                .collect();
            let Some(v) = b.eval(&x) else { return };
            *vertex = (x, v);
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum()
    }

    fn rosenbrock(v: &[f64]) -> f64 {
        (1.0 - v[0]).powi(2) + 100.0 * (v[1] - v[0] * v[0]).powi(2)
    }

    #[test]
    fn convex_bowl_converges() {
        for dim in [2, 6] {
            let m = minimize_derivative_free(bowl, &[vec![1.0; dim]], 500, &Default::default());
            let norm = bowl(&m.params).sqrt();
            assert!(norm <= 1e-3, "dim {dim}: |best| = {norm}");
            assert!(m.trace.len() <= 500);
        }
    }

    #[test]
    fn budget_of_one_returns_start() {
        let m = minimize_derivative_free(bowl, &[vec![0.3, -0.2]], 1, &Default::default());
        assert_eq!(m.params, vec![0.3, -0.2]);
        assert_eq!(m.trace.len(), 1);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let m = minimize_derivative_free(rosenbrock, &[vec![-1.2, 1.0]], 2000, &Default::default());
        assert!(m.value < 1e-2, "f = {}", m.value);
    }

    #[test]
    fn best_over_starts_and_deterministic() {
        let starts = vec![vec![5.0, 5.0], vec![0.1, 0.1]];
        let a = minimize_derivative_free(bowl, &starts, 20, &Default::default());
        let b = minimize_derivative_free(bowl, &starts, 20, &Default::default());
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 40);
        let min = a.trace.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
        assert_eq!(a.value, min);
    }

    #[test]
    fn nan_objective_never_wins() {
        let f = |v: &[f64]| if v[0] > 0.0 { f64::NAN } else { v[0] * v[0] };
        let m = minimize_derivative_free(f, &[vec![-1.0]], 50, &Default::default());
        assert!(m.value.is_finite());
    }
}
