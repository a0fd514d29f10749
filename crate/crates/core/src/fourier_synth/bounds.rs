// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Error and time bounds of the analytic construction.
//!
//! Times are in natural units (`T_G = 2π`); divide by [`T_G`] for Rabi periods.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulses::T_G;

/// Prefactor of the optimal time to synthesize one `U⁽²⁾`: `2304·3888·π⁵`.
pub const K2: f64 = 2304.0 * 3888.0 * PI * PI * PI * PI * PI;
/// Prefactor for one carrier-family rotation, `16 K2`.
pub const K1: f64 = 16.0 * K2;
/// Prefactor of the total analytic compile time, `K2 / 8`.
pub const K: f64 = K2 / 8.0;

/// Repetition counts of the analytic construction.
///
/// `p` repeats each `w` pair, `q` repeats `t_a`. Both hold integral values;
/// they are floats because bound-optimal plans overflow 64-bit integers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisPlan {
    pub p: f64,
    pub q: f64,
}

impl SynthesisPlan {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidInput("P and Q must be at least 1".into()));
        }
        Ok(Self {
            p: p as f64,
            q: q as f64,
        })
    }

    /// Step `dφ = φ/Q` of the `t_a` sequence for Fourier term `l`.
    pub fn dphi(&self, n_comp: usize, l: usize) -> f64 {
        z_angle(n_comp, l) / self.q
    }

    /// Pulse area `dθ = α/(2P)` inside one `w` sequence.
    pub fn dtheta(&self, alpha: f64) -> f64 {
        alpha / (2.0 * self.p)
    }

    /// `(P, Q)` as loop counts, refusing plans too long to build.
    pub fn counts(&self, limit: f64) -> Result<(usize, usize)> {
        for (name, v) in [("P", self.p), ("Q", self.q)] {
            if !(v >= 1.0) || v.fract() != 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be a positive integer, got {v}")));
            }
        }
        if self.p * self.q > limit {
            return Err(Error::OutOfRange(format!(
                "plan with P = {:e}, Q = {:e} exceeds the executable limit {limit:e}",
                self.p, self.q
            )));
        }
        Ok((self.p as usize, self.q as usize))
    }
}

/// Total z angle `φ = πl/(N+1)` of the `T_a` used for Fourier term `l`.
pub fn z_angle(n_comp: usize, l: usize) -> f64 {
    PI * l as f64 / (n_comp + 1) as f64
}

fn np1(n_comp: usize) -> f64 {
    (n_comp + 1) as f64
}

/// Bound on `‖P_C(T − T_a)P_C‖`.
pub fn eps_t_bound(n_comp: usize, q: f64) -> f64 {
    4.0 * (2.0 * PI).powf(1.5) * np1(n_comp).powf(2.5) / q.sqrt()
}

/// Bound on the error of one Fourier term `W_kl`.
pub fn eps_w_bound(n_comp: usize, p: f64, q: f64) -> f64 {
    let n = np1(n_comp);
    p * (2f64.sqrt() * (2.0 * PI * n / p).powi(2) + 16.0 * (2.0 * PI).powf(1.5) * n.powf(2.5) / q.sqrt())
}

/// Bound on the error `E′⁽²⁾` of a whole `U⁽²⁾`.
pub fn eps_u2_bound(n_comp: usize, p: f64, q: f64) -> f64 {
    let n = np1(n_comp);
    3.0 * p
        * (2f64.sqrt() * n.powi(3) * (2.0 * PI / p).powi(2) + 16.0 * (2.0 * PI).powf(1.5) * n.powf(3.5) / q.sqrt())
}

/// Time bound for `T_a`.
pub fn time_t_a(q: f64) -> f64 {
    4.0 * T_G * (q / (2.0 * PI)).sqrt()
}

/// Time bound for one `W_kl`.
pub fn time_w_kl(p: f64, q: f64) -> f64 {
    16.0 / (2.0 * PI).sqrt() * p * q.sqrt() * T_G
}

/// Time bound for one `U⁽²⁾`.
pub fn time_u2(n_comp: usize, p: f64, q: f64) -> f64 {
    48.0 / (2.0 * PI).sqrt() * p * q.sqrt() * T_G * np1(n_comp)
}

/// Optimal `U⁽²⁾` time at error `E′`: `K2 T_G (N+1)^10.5 / E′³`.
pub fn time_u2_optimal(n_comp: usize, eps: f64) -> f64 {
    K2 * T_G * np1(n_comp).powf(10.5) / eps.powi(3)
}

/// Optimal time for one carrier-family rotation at error `ε′⁽¹⁾`.
pub fn time_u1_optimal(n_comp: usize, eps: f64) -> f64 {
    K1 * T_G * np1(n_comp).powf(10.5) / eps.powi(3)
}

/// Gate counts `(g_a, g_sa)`: block rotations of the analytic construction and
/// V gates of the semi-analytic one.
pub fn gate_counts(n_comp: usize) -> (usize, usize) {
    let n = n_comp;
    (3 * n * n + 5 * n + 2, 4 * n * n + 6 * n + 2)
}

/// Bound on the time of the fully analytic compile of one gate with error `η`.
pub fn analytic_total_time(n_comp: usize, eta: f64) -> f64 {
    let ga = gate_counts(n_comp).0 as f64;
    K * T_G * ga.powi(4) * np1(n_comp).powi(9) / eta.powf(1.5)
}

/// Bound-optimal plan for a target `E′⁽²⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedSynthesis {
    pub plan: SynthesisPlan,
    pub target_error: f64,
    /// Error bound at the rounded `(P, Q)`.
    pub error_bound: f64,
    /// Time bound at the rounded `(P, Q)`.
    pub time_bound: f64,
    /// Closed-form optimum `K2 T_G (N+1)^10.5 / E′³`.
    pub predicted_time: f64,
}

/// Choose `(P, Q)` so the `U⁽²⁾` error bound equals `target_error` at minimal time.
///
/// With `A = 12√2π²(N+1)³` the bound is met for `P > A/E′`, where
/// `Q = 18432π³(N+1)⁷P⁴/(E′P − A)²`; the time is smallest at `P = 3A/(2E′)`.
pub fn plan_pq(n_comp: usize, target_error: f64) -> Result<PlannedSynthesis> {
    if !(target_error > 0.0) || !target_error.is_finite() {
        return Err(Error::OutOfRange(format!(
            "no (P, Q) reaches target error {target_error}: it must be positive and finite"
        )));
    }
    let n = np1(n_comp);
    let a = 12.0 * 2f64.sqrt() * PI * PI * n.powi(3);
    let mut p = (1.5 * a / target_error).round().max(1.0);
    if target_error * p <= a {
        p = (a / target_error).floor() + 1.0;
    }
    let q = (18432.0 * PI.powi(3) * n.powi(7) * p.powi(4) / (target_error * p - a).powi(2))
        .ceil()
        .max(1.0);
    let plan = SynthesisPlan { p, q };
    Ok(PlannedSynthesis {
        plan,
        target_error,
        error_bound: eps_u2_bound(n_comp, p, q),
        time_bound: time_u2(n_comp, p, q),
        predicted_time: time_u2_optimal(n_comp, target_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((K2 / 2.7e9 - 1.0).abs() < 0.02);
        assert!((K1 / 4.4e10 - 1.0).abs() < 0.01);
        assert!((K / 3.4e8 - 1.0).abs() < 0.01);
    }

    #[test]
    fn gate_count_values() {
        assert_eq!(gate_counts(1), (10, 12));
        assert_eq!(gate_counts(3).0, 44);
        assert_eq!(gate_counts(2).1, 30);
    }

    #[test]
    fn plan_meets_target_at_predicted_time() {
        let r = plan_pq(1, 0.1).unwrap();
        let n = 2f64;
        let a = 12.0 * 2f64.sqrt() * PI * PI * n.powi(3);
        assert_eq!(r.plan.p, (1.5 * a / 0.1).round());
        assert!(r.error_bound <= 0.1 * (1.0 + 1e-9));
        assert!((r.time_bound / r.predicted_time - 1.0).abs() < 1e-3);
        // The closed form is the substituted time bound at the unrounded optimum.
        let p = 1.5 * a / 0.1;
        let q = 18432.0 * PI.powi(3) * n.powi(7) * p.powi(4) / (0.1 * p - a).powi(2);
        assert!((time_u2(1, p, q) / r.predicted_time - 1.0).abs() < 1e-12);
        assert!((eps_u2_bound(1, p, q) / 0.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_time_decreases_with_error() {
        let t: Vec<f64> = [1e-3, 1e-2, 1e-1, 1.0].iter().map(|&e| plan_pq(2, e).unwrap().predicted_time).collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn infeasible_targets() {
        assert!(plan_pq(1, 0.0).is_err());
        assert!(plan_pq(1, -1.0).is_err());
        assert!(plan_pq(1, f64::NAN).is_err());
    }

    #[test]
    fn total_time_substitution() {
        let t = analytic_total_time(1, 1e-4);
        let want = K * T_G * 10f64.powi(4) * 2f64.powi(9) / 1e-6;
        assert!((t / want - 1.0).abs() < 1e-14);
        assert!(analytic_total_time(2, 1e-4) > t);
    }
}
