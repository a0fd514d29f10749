// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Error, fidelity and leakage functionals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hilbert::{dim, ModeSpace, OptSubspace};
use crate::linalg::{c, frobenius, inner, CMatrix, C64};

/// Leakage weight in the direct-numeric cost.
pub const DEFAULT_LEAKAGE_WEIGHT: f64 = 100.0;

/// Distance between a target and a candidate with the global phase removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `min_φ ‖P(T − e^{iφ}C)P‖`.
    pub raw_error: f64,
    /// `raw_error² / 2d`, which is `raw_error² / 4(N+1)` for one qudit.
    pub eta: f64,
    /// `|Tr P T† P C P|² / d²`.
    pub fidelity: f64,
    /// Minimising phase.
    pub optimal_phase: f64,
}

/// Top-left `d × d` corner, i.e. the restriction to the lowest `d` basis states.
pub fn restrict(m: &CMatrix, d: usize) -> CMatrix {
    m.view((0, 0), (d, d)).into_owned()
}

/// Phase-minimised error on a space of dimension `d`.
pub fn phase_min_error_dim(d: usize, target: &CMatrix, candidate: &CMatrix, projector: &CMatrix) -> ErrorReport {
    let pt = projector * target * projector;
    let pc = projector * candidate * projector;
    let tau: C64 = inner(&pt, &pc);
    let optimal_phase = if tau.norm() == 0.0 { 0.0 } else { -tau.arg() };
    // The residual is formed explicitly; ‖T‖² + ‖C‖² − 2|τ| cancels catastrophically.
    let raw = frobenius(&(&pt - &pc * crate::linalg::cis(optimal_phase)));
    let raw2 = raw * raw;
    ErrorReport {
        raw_error: raw,
        eta: raw2 / (2.0 * d as f64),
        fidelity: tau.norm_sqr() / (d * d) as f64,
        optimal_phase,
    }
}

/// Phase-minimised error of a single-qudit candidate.
///
/// All matrices share one truncation; `projector` selects the subspace compared.
pub fn phase_min_error(n_comp: usize, target: &CMatrix, candidate: &CMatrix, projector: &CMatrix) -> ErrorReport {
    phase_min_error_dim(dim(n_comp), target, candidate, projector)
}

/// Phase-minimised error on the computational space, projecting both operators.
pub fn comp_error(n_comp: usize, target: &CMatrix, candidate: &CMatrix) -> ErrorReport {
    let d = dim(n_comp);
    let t = restrict(target, d);
    let u = restrict(candidate, d);
    phase_min_error(n_comp, &t, &u, &CMatrix::identity(d, d))
}

/// `|Tr T† U|² / (2(N+1))²` on the computational space.
pub fn gate_fidelity(n_comp: usize, target: &CMatrix, candidate: &CMatrix) -> f64 {
    let d = dim(n_comp);
    let tau = inner(&restrict(target, d), &restrict(candidate, d));
    tau.norm_sqr() / (d * d) as f64
}

/// `1 − |d_⊥ + Tr P T† P C P| / 2(N+1)` for a V-gate candidate.
pub fn subspace_objective(n_comp: usize, sub: &OptSubspace, target: &CMatrix, candidate: &CMatrix) -> f64 {
    let d = dim(n_comp);
    let p = &sub.matrix;
    let pt = p * restrict(target, d) * p;
    let pc = p * restrict(candidate, d) * p;
    let tau = inner(&pt, &pc) + c(sub.d_perp as f64, 0.0);
    1.0 - tau.norm() / d as f64
}

/// Average population pushed into the penalised levels, summed over subpulses.
///
/// `cumulative[j]` is the propagator after subpulse `j` on truncation `space.n_opt`.
pub fn leakage(space: &ModeSpace, cumulative: &[CMatrix]) -> f64 {
    let d = space.comp_dim();
    let lo = dim(space.n_pad);
    let hi = dim(space.n_opt);
    let norm = 1.0 / (d * (d + 1)) as f64;
    cumulative
        .iter()
        .map(|u| {
            let b = u.view((lo, 0), (hi - lo, d));
            let m: DMatrix<C64> = b.adjoint() * b;
            let tr: C64 = m.trace();
            norm * (frobenius(&m).powi(2) + tr.norm_sqr())
        })
        .sum()
}

/// `1 − F + w L`.
pub fn cost_cfn(fidelity: f64, leak: f64, w: f64) -> f64 {
    1.0 - fidelity + w * leak
}
