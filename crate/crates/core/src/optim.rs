// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Smooth local minimisation (L-BFGS from `argmin`) and restart bookkeeping.

use std::cell::RefCell;

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use serde::{Deserialize, Serialize};

/// A smooth objective with an exact gradient.
pub trait Objective: Sync {
    fn n_params(&self) -> usize;

    /// Value at `x`; fills `grad` when given.
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSearchConfig {
    /// Iteration cap across all internal restarts.
    pub max_iters: u64,
    /// Stop once the objective falls below this value.
    pub target: f64,
    pub grad_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            target: f64::NEG_INFINITY,
            grad_tol: 1e-12,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    pub evaluations: u64,
}

struct Best {
    x: Vec<f64>,
    value: f64,
    evaluations: u64,
    last: Option<(Vec<f64>, f64, Vec<f64>)>,
}

struct Problem<'a, O: Objective> {
    obj: &'a O,
    state: &'a RefCell<Best>,
}

impl<O: Objective> Problem<'_, O> {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        if let Some((lx, lv, lg)) = &self.state.borrow().last {
            if lx.as_slice() == x {
                return (*lv, lg.clone());
            }
        }
        let mut g = vec![0.0; x.len()];
        let mut v = self.obj.eval(x, Some(&mut g));
        if !v.is_finite() || g.iter().any(|z| !z.is_finite()) {
            v = f64::INFINITY;
            g.iter_mut().for_each(|z| *z = 0.0);
        }
        let mut st = self.state.borrow_mut();
        st.evaluations += 1;
        if v < st.value {
            st.value = v;
            st.x = x.to_vec();
        }
        st.last = Some((x.to_vec(), v, g.clone()));
        (v, g)
    }
}

impl<O: Objective> CostFunction for Problem<'_, O> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, ArgminError> {
        let (v, _) = self.eval(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ArgminError::msg("non-finite objective"))
        }
    }
}

impl<O: Objective> Gradient for Problem<'_, O> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        Ok(self.eval(p).1)
    }
}

/// Minimise `obj` from `x0`, restarting L-BFGS from the best point whenever its
/// line search gives up before the iteration budget is spent.
pub fn minimize<O: Objective>(obj: &O, x0: Vec<f64>, cfg: &LocalSearchConfig) -> LocalResult {
    let state = RefCell::new(Best {
        x: x0.clone(),
        value: f64::INFINITY,
        evaluations: 0,
        last: None,
    });
    let problem = Problem { obj, state: &state };
    let _ = problem.eval(&x0);
    let mut iterations = 0u64;
    let mut stalls = 0;
    while iterations < cfg.max_iters && stalls < 3 {
        let (start, before) = {
            let st = problem.state.borrow();
            (st.x.clone(), st.value)
        };
        if before <= cfg.target || !before.is_finite() {
            break;
        }
        let remaining = cfg.max_iters - iterations;
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), cfg.memory)
            .with_tolerance_grad(cfg.grad_tol)
            .and_then(|s| s.with_tolerance_cost(0.0))
            .expect("valid L-BFGS tolerances");
        let run = Executor::new(Problem { obj, state: &state }, solver)
            .configure(|st| st.param(start).max_iters(remaining).target_cost(cfg.target))
            .run();
        let used = match &run {
            Ok(r) => r.state().get_iter().max(1),
            Err(_) => 1,
        };
        iterations += used;
        let after = problem.state.borrow().value;
        let converged = matches!(&run, Ok(r) if r.state().get_iter() < remaining);
        if after < before * (1.0 - 1e-12) && !converged {
            stalls = 0;
        } else {
            stalls += 1;
            if converged && after >= before * (1.0 - 1e-12) {
                break;
            }
        }
    }
    let st = state.into_inner();
    LocalResult {
        x: st.x,
        value: st.value,
        iterations,
        evaluations: st.evaluations,
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        (**self).eval(x, grad)
    }
}

/// Seed of restart `index` derived from a run seed.
pub fn restart_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Central finite-difference gradient, used to validate analytic gradients.
pub fn numeric_gradient<O: Objective>(obj: &O, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = obj.value(&xp);
            xp[i] = x[i] - h;
            let fm = obj.value(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn n_params(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
            let (a, b) = (x[0], x[1]);
            if let Some(g) = grad {
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
            }
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize(&Rosenbrock, vec![-1.2, 1.0], &LocalSearchConfig::default());
        assert!(r.value < 1e-12, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn target_stops_early() {
        let cfg = LocalSearchConfig { target: 1e-2, ..Default::default() };
        let r = minimize(&Rosenbrock, vec![-1.2, 1.0], &cfg);
        assert!(r.value <= 1e-2 && r.value > 1e-12);
    }

    #[test]
    fn restart_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..100).map(|i| restart_seed(7, i)).collect();
        assert_eq!(s.len(), 100);
    }
}
