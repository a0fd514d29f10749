// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Fully numerical synthesis: piecewise-constant carrier controls under a
//! constant sideband coupling, optimised against leakage-penalised infidelity.

use std::f64::consts::PI;
use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{dim, idx, ModeSpace, Spin};
use crate::linalg::{c, trace, CMatrix, HermitianEigen, C64};
use crate::metrics::{cost_cfn, leakage, restrict, DEFAULT_LEAKAGE_WEIGHT};
use crate::optim::{minimize, restart_seed, LocalSearchConfig, Objective};
use crate::pulses::{hamiltonian, GeneralPulse, Pulse, PulseSequence, G_MAX, T_G};

/// Carrier controls held during one subpulse.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlStep {
    pub chi: f64,
    pub delta: f64,
    pub phi: f64,
}

/// Stepwise-constant `χ, Δ, φ` with the coupling fixed at `g_max`, `β = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControls {
    pub dt: f64,
    pub steps: Vec<ControlStep>,
}

impl PiecewiseControls {
    pub fn new(dt: f64, steps: Vec<ControlStep>) -> Result<Self> {
        if !(dt > 0.0) || steps.is_empty() {
            return Err(Error::InvalidInput("need dt > 0 and at least one step".into()));
        }
        Ok(Self { dt, steps })
    }

    pub fn zeros(dt: f64, n_steps: usize) -> Result<Self> {
        Self::new(dt, vec![ControlStep::default(); n_steps])
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn t_f(&self) -> f64 {
        self.dt * self.steps.len() as f64
    }

    fn from_params(dt: f64, x: &[f64]) -> Self {
        Self {
            dt,
            steps: x
                .chunks(3)
                .map(|p| ControlStep {
                    chi: p[0],
                    delta: p[1],
                    phi: p[2],
                })
                .collect(),
        }
    }

    fn pulse(&self, s: &ControlStep) -> GeneralPulse {
        GeneralPulse {
            mode: 0,
            delta: s.delta,
            chi: s.chi,
            phi: s.phi,
            g: G_MAX,
            beta: 0.0,
            duration: self.dt,
        }
    }

    pub fn to_sequence(&self) -> PulseSequence {
        PulseSequence::from_pulses(self.steps.iter().map(|s| Pulse::General(self.pulse(s))).collect())
    }

    /// Largest `|χ|` and `|Δ|`.
    pub fn peaks(&self) -> (f64, f64) {
        self.steps
            .iter()
            .fold((0.0, 0.0), |(a, b), s| (f64::max(a, s.chi.abs()), f64::max(b, s.delta.abs())))
    }
}

/// Cumulative propagators after each subpulse on truncation `top`.
pub fn cumulative_unitaries(top: usize, controls: &PiecewiseControls) -> Vec<CMatrix> {
    let d = dim(top);
    let mut u = CMatrix::identity(d, d);
    controls
        .steps
        .iter()
        .map(|s| {
            u = HermitianEigen::new(&hamiltonian(top, &controls.pulse(s))).propagator(controls.dt) * &u;
            u.clone()
        })
        .collect()
}

/// Full propagator on truncation `top`.
pub fn simulate(top: usize, controls: &PiecewiseControls) -> CMatrix {
    cumulative_unitaries(top, controls).pop().expect("at least one step")
}

/// Spin-controlled cyclic increment on the computational space:
/// `|n↓⟩ → |n↓⟩`, `|n↑⟩ → |n⊕1 ↑⟩` with `⊕` modulo `N+1`.
pub fn cinc_prime_target(n_comp: usize) -> CMatrix {
    let d = dim(n_comp);
    let mut m = CMatrix::zeros(d, d);
    for n in 0..=n_comp {
        m[(idx(n, Spin::Down), idx(n, Spin::Down))] = c(1.0, 0.0);
        m[(idx((n + 1) % (n_comp + 1), Spin::Up), idx(n, Spin::Up))] = c(1.0, 0.0);
    }
    m
}

/// `|Tr(U_C† T)|² / d²` with `U_C` the computational block of `u`.
pub fn gate_fidelity_in(n_comp: usize, target: &CMatrix, u: &CMatrix) -> f64 {
    let d = dim(n_comp);
    let tau: C64 = restrict(u, d).component_mul(&target.map(|z| z.conj())).sum();
    tau.norm_sqr() / (d * d) as f64
}

/// Leakage-penalised infidelity `C = 1 − F + w L` as a function of the stacked
/// controls `[χ₁, Δ₁, φ₁, χ₂, …]`, with exact gradients.
#[derive(Debug, Clone)]
pub struct PiecewiseObjective {
    pub space: ModeSpace,
    pub target: CMatrix,
    pub dt: f64,
    pub n_steps: usize,
    pub weight: f64,
}

/// Cost and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParts {
    pub cost: f64,
    pub fidelity: f64,
    pub leakage: f64,
}

impl PiecewiseObjective {
    pub fn parts(&self, x: &[f64], grad: Option<&mut [f64]>) -> CostParts {
        let top = self.space.n_opt;
        let big = dim(top);
        let d = self.space.comp_dim();
        let (lo, hi) = (dim(self.space.n_pad), big);
        let controls = PiecewiseControls::from_params(self.dt, x);
        let eigs: Vec<HermitianEigen> =
            controls.steps.iter().map(|s| HermitianEigen::new(&hamiltonian(top, &controls.pulse(s)))).collect();
        let props: Vec<CMatrix> = eigs.iter().map(|e| e.propagator(self.dt)).collect();
        // ys[j]: computational columns after j subpulses.
        let mut ys = Vec::with_capacity(self.n_steps + 1);
        ys.push(CMatrix::identity(big, d));
        for u in &props {
            let next = u * ys.last().expect("non-empty");
            ys.push(next);
        }
        let final_c = ys[self.n_steps].rows(0, d).clone_owned();
        let tau: C64 = final_c.component_mul(&self.target.map(|z| z.conj())).sum();
        let fidelity = tau.norm_sqr() / (d * d) as f64;
        let norm = 1.0 / (d * (d + 1)) as f64;
        let ms: Vec<CMatrix> = ys[1..]
            .iter()
            .map(|y| {
                let b = y.rows(lo, hi - lo);
                b.adjoint() * b
            })
            .collect();
        let leak: f64 = ms
            .iter()
            .map(|m| norm * (m.norm_squared() + trace(m).norm_sqr()))
            .sum();
        let cost = cost_cfn(fidelity, leak, self.weight);
        let Some(grad) = grad else {
            return CostParts {
                cost,
                fidelity,
                leakage: leak,
            };
        };
        // Adjoint pass. With Re Tr(K_j dU_j) the first-order cost change,
        // K_j = Y_{j−1} (−2τ̄/d² A_j + 4 w c Λ_j), where A_j = T† U_n⋯U_{j+1}
        // and Λ_j = G_j Y_j† P_L + Λ_{j+1} U_{j+1}, G = M + Tr(M) I.
        let mut a = CMatrix::zeros(d, big);
        a.columns_mut(0, d).copy_from(&self.target.adjoint());
        let mut lam = CMatrix::zeros(d, big);
        let fw = -2.0 * tau.conj() / (d * d) as f64;
        let lw = c(4.0 * self.weight * norm, 0.0);
        for j in (0..self.n_steps).rev() {
            let m = &ms[j];
            let g = m + CMatrix::identity(d, d) * trace(m);
            let mut gy = g * ys[j + 1].adjoint();
            gy.columns_mut(0, lo).fill(C64::new(0.0, 0.0));
            lam += gy;
            let k = &ys[j] * (&a * fw + &lam * lw);
            let e = &eigs[j];
            let inner = e.vectors.adjoint() * k * &e.vectors;
            let q = &e.vectors * inner.component_mul(&e.derivative_kernel(self.dt)) * e.vectors.adjoint();
            let s = controls.steps[j];
            let (mut s_ul, mut s_lu, mut s_z) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for n in 0..=top {
                let (u, l) = (idx(n, Spin::Up), idx(n, Spin::Down));
                s_ul += q[(l, u)];
                s_lu += q[(u, l)];
                s_z += q[(l, l)] - q[(u, u)];
            }
            let (e_m, e_p) = (crate::linalg::cis(-s.phi), crate::linalg::cis(s.phi));
            grad[3 * j] = (0.5 * (e_m * s_ul + e_p * s_lu)).re;
            grad[3 * j + 1] = (0.5 * s_z).re;
            grad[3 * j + 2] = (0.5 * s.chi * (c(0.0, -1.0) * e_m * s_ul + c(0.0, 1.0) * e_p * s_lu)).re;
            a = &a * &props[j];
            lam = &lam * &props[j];
        }
        CostParts {
            cost,
            fidelity,
            leakage: leak,
        }
    }
}

impl Objective for PiecewiseObjective {
    fn n_params(&self) -> usize {
        3 * self.n_steps
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.parts(x, grad).cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiecewiseConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Leakage weight `w`.
    pub weight: f64,
    /// Initial `χ` and `|Δ|` are drawn below this multiple of `g_max`.
    pub init_max: f64,
    pub local: LocalSearchConfig,
}

impl Default for PiecewiseConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            weight: DEFAULT_LEAKAGE_WEIGHT,
            init_max: 0.9,
            local: LocalSearchConfig {
                max_iters: 3000,
                ..Default::default()
            },
        }
    }
}

/// One restart of [`optimize_piecewise`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub fidelity: f64,
    pub leakage: f64,
    pub cost: f64,
    pub iterations: u64,
}

/// Best restart of a piecewise optimisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRun {
    pub n_comp: usize,
    pub space: ModeSpace,
    pub dt: f64,
    pub t_f: f64,
    pub seed: u64,
    pub weight: f64,
    pub controls: PiecewiseControls,
    #[serde(rename = "F")]
    pub fidelity: f64,
    #[serde(rename = "L")]
    pub leakage: f64,
    #[serde(rename = "C_FN")]
    pub cost: f64,
    /// Fidelity re-simulated on `space.n_check`.
    #[serde(rename = "F_check")]
    pub fidelity_check: f64,
    pub max_chi: f64,
    pub max_abs_delta: f64,
    #[serde(rename = "wall_time")]
    pub wall_time_s: f64,
    pub restarts: Vec<RestartRecord>,
}

impl DirectRun {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }

    /// `|F(n_opt) − F(n_check)|`.
    pub fn fidelity_drop(&self) -> f64 {
        (self.fidelity - self.fidelity_check).abs()
    }
}

fn random_controls(n_steps: usize, init_max: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_steps)
        .flat_map(|_| {
            let chi = rng.random_range(0.0..init_max * G_MAX);
            let delta = rng.random_range(-init_max * G_MAX..init_max * G_MAX);
            let phi = rng.random_range(0.0..2.0 * PI);
            [chi, delta, phi]
        })
        .collect()
}

/// Attempts per restart before a run that keeps producing non-finite costs is abandoned.
const MAX_RESEEDS: u64 = 5;

/// Best of `config.restarts` local optimisations of `C = 1 − F + wL`,
/// selected by fidelity.
pub fn optimize_piecewise(
    space: &ModeSpace,
    target: &CMatrix,
    dt: f64,
    n_steps: usize,
    config: &PiecewiseConfig,
) -> Result<DirectRun> {
    let d = space.comp_dim();
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::InvalidInput(format!("target must be {d}×{d}")));
    }
    if !(dt > 0.0) || n_steps == 0 || config.restarts == 0 {
        return Err(Error::InvalidInput("need dt > 0, n_steps ≥ 1 and restarts ≥ 1".into()));
    }
    let start = Instant::now();
    let obj = PiecewiseObjective {
        space: *space,
        target: target.clone(),
        dt,
        n_steps,
        weight: config.weight,
    };
    let results: Vec<(RestartRecord, Vec<f64>)> = (0..config.restarts)
        .into_par_iter()
        .filter_map(|r| {
            (0..MAX_RESEEDS).find_map(|attempt| {
                let seed = restart_seed(config.seed, ((r as u64) << 8) | attempt);
                let res = minimize(&obj, random_controls(n_steps, config.init_max, seed), &config.local);
                let p = obj.parts(&res.x, None);
                p.cost.is_finite().then(|| {
                    let rec = RestartRecord {
                        restart: r,
                        seed,
                        fidelity: p.fidelity,
                        leakage: p.leakage,
                        cost: p.cost,
                        iterations: res.iterations,
                    };
                    (rec, res.x)
                })
            })
        })
        .collect();
    let (best, x) = results
        .iter()
        .max_by(|a, b| a.0.fidelity.total_cmp(&b.0.fidelity).then(b.0.restart.cmp(&a.0.restart)))
        .cloned()
        .ok_or_else(|| Error::InvalidInput("every restart produced a non-finite cost".into()))?;
    let controls = PiecewiseControls::from_params(dt, &x);
    let (max_chi, max_abs_delta) = controls.peaks();
    if max_chi > 2.0 * G_MAX || max_abs_delta > 2.0 * G_MAX {
        warn!("controls exceed 2 g_max: max χ = {max_chi:.3}, max |Δ| = {max_abs_delta:.3}");
    }
    let fidelity_check = gate_fidelity_in(space.n_comp, target, &simulate(space.n_check, &controls));
    Ok(DirectRun {
        n_comp: space.n_comp,
        space: *space,
        dt,
        t_f: controls.t_f(),
        seed: best.seed,
        weight: config.weight,
        fidelity: best.fidelity,
        leakage: best.leakage,
        cost: best.cost,
        fidelity_check,
        max_chi,
        max_abs_delta,
        controls,
        wall_time_s: start.elapsed().as_secs_f64(),
        restarts: results.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Fidelity on the optimisation and check truncations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub fidelity_opt: f64,
    pub fidelity_check: f64,
    pub leakage: f64,
    /// `F(n_opt) − F(n_check)`.
    pub drop: f64,
}

/// Re-simulate `controls` on `space.n_check` and compare with `space.n_opt`.
pub fn verify_in_larger_space(space: &ModeSpace, controls: &PiecewiseControls, target: &CMatrix) -> CheckReport {
    let cum = cumulative_unitaries(space.n_opt, controls);
    let fidelity_opt = gate_fidelity_in(space.n_comp, target, cum.last().expect("at least one step"));
    let fidelity_check = gate_fidelity_in(space.n_comp, target, &simulate(space.n_check, controls));
    CheckReport {
        fidelity_opt,
        fidelity_check,
        leakage: leakage(space, &cum),
        drop: fidelity_opt - fidelity_check,
    }
}

/// Durations of `dt` in units of `T_G`.
pub fn in_rabi_periods(t: f64) -> f64 {
    t / T_G
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, unitarity_defect};
    use crate::optim::numeric_gradient;

    #[test]
    fn cinc_prime_is_a_cyclic_permutation() {
        let n = 3;
        let m = cinc_prime_target(n);
        assert_eq!(m[(idx(1, Spin::Down), idx(1, Spin::Down))], c(1.0, 0.0));
        assert_eq!(m[(idx(0, Spin::Up), idx(n, Spin::Up))], c(1.0, 0.0));
        for i in 0..dim(n) {
            assert_eq!(m.row(i).iter().filter(|z| z.norm() == 1.0).count(), 1);
            assert_eq!(m.column(i).iter().filter(|z| z.norm() == 1.0).count(), 1);
            assert_eq!(m.column(i).iter().map(|z| z.norm()).sum::<f64>(), 1.0);
        }
    }

    fn small_objective(weight: f64) -> PiecewiseObjective {
        let space = ModeSpace::new(1, 2, 3, 6).unwrap();
        PiecewiseObjective {
            space,
            target: cinc_prime_target(1),
            dt: 0.5 * T_G,
            n_steps: 4,
            weight,
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obj = small_objective(100.0);
        let x = random_controls(4, 0.9, 11);
        let mut g = vec![0.0; obj.n_params()];
        obj.eval(&x, Some(&mut g));
        let fd = numeric_gradient(&obj, &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_controls_on_identity() {
        let space = ModeSpace::new(1, 2, 3, 6).unwrap();
        let obj = PiecewiseObjective {
            space,
            target: identity(dim(1)),
            dt: 1e-9,
            n_steps: 1,
            weight: 100.0,
        };
        assert!(obj.eval(&[0.0; 3], None) < 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_zero_controls_do_not_drop() {
        let space = ModeSpace::new(2, 5, 7, 28).unwrap();
        let ctl = PiecewiseControls::new(0.5 * T_G, random_controls(6, 0.9, 2).chunks(3).map(|p| ControlStep { chi: p[0], delta: p[1], phi: p[2] }).collect()).unwrap();
        assert!(unitarity_defect(&simulate(space.n_opt, &ctl)) < 1e-12);
        let zero = PiecewiseControls::zeros(0.5 * T_G, 3).unwrap();
        let r = verify_in_larger_space(&space, &zero, &cinc_prime_target(2));
        assert!(r.drop.abs() < 1e-12);
    }

    #[test]
    fn leakage_does_not_grow_with_padding() {
        let ctl = PiecewiseControls::from_params(0.5 * T_G, &random_controls(8, 0.9, 4));
        let narrow = ModeSpace::new(2, 4, 7, 28).unwrap();
        let wide = ModeSpace::new(2, 5, 7, 28).unwrap();
        let cum = cumulative_unitaries(7, &ctl);
        assert!(leakage(&wide, &cum) <= leakage(&narrow, &cum));
    }

    #[test]
    fn short_run_is_deterministic() {
        let space = ModeSpace::new(1, 2, 3, 8).unwrap();
        let cfg = PiecewiseConfig {
            restarts: 2,
            local: LocalSearchConfig {
                max_iters: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = optimize_piecewise(&space, &cinc_prime_target(1), 0.5 * T_G, 6, &cfg).unwrap();
        let b = optimize_piecewise(&space, &cinc_prime_target(1), 0.5 * T_G, 6, &cfg).unwrap();
        assert_eq!(a.controls, b.controls);
        assert_eq!(a.restarts.len(), 2);
        assert!(a.cost >= 0.0);
    }
}
