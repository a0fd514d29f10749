// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::hilbert::Family;
use crate::law_eberly::BlockRotation;
use crate::linalg::{su2_exp, CMatrix, Su2};
use crate::pulses::{Pulse, PulseSequence, SidebandPulse};

use super::bounds::{z_angle, SynthesisPlan};
use super::euler::{dct_angles, dct_phase, euler_decompose, DctCoefficients, EulerAngleTable};
use super::tree::SequenceTree;

/// Largest `P·Q` a plan may have before building is refused.
pub const MAX_PLAN_SIZE: f64 = 1e9;

fn resonant(area: f64, beta: f64) -> Pulse {
    Pulse::Sideband(SidebandPulse::resonant(0, area, beta))
}

/// Block rotations `e^{−i nφ σz/2}` for `n = 0..=N+1`.
pub fn t_a_target(n_comp: usize, phi: f64) -> Vec<Su2> {
    (0..=n_comp + 1).map(|n| su2_exp([0.0, 0.0, n as f64 * phi])).collect()
}

/// Group commutator of x and y pulses with area `s`; a z-rotation by `n s²` on block `n`.
pub(crate) fn commutator_sequence(s: f64) -> PulseSequence {
    // Operator order e^{−iX} e^{−iY} e^{iX} e^{iY}, so the +y pulse comes first.
    PulseSequence::from_pulses(vec![
        resonant(s, -FRAC_PI_2),
        resonant(s, PI),
        resonant(s, FRAC_PI_2),
        resonant(s, 0.0),
    ])
}

/// Four resonant sideband pulses of area `√dφ` approximating `e^{−i n dφ σz/2}` on block `n`.
pub fn build_t_a(dphi: f64) -> Result<PulseSequence> {
    if !(dphi >= 0.0) {
        return Err(Error::InvalidInput(format!("dphi must be non-negative, got {dphi}")));
    }
    Ok(commutator_sequence(dphi.sqrt()))
}

/// `t_a` repeated `q` times, approximating `e^{−i nφ σz/2}` on block `n`.
#[allow(non_snake_case)]
pub fn build_T_a(phi_total: f64, q: usize) -> Result<SequenceTree> {
    if q == 0 {
        return Err(Error::InvalidInput("Q must be at least 1".into()));
    }
    Ok(SequenceTree::from(build_t_a(phi_total / q as f64)?).repeat(q))
}

/// Axis angle offset of Euler factor `k`: x for 1 and 3, y for 2.
fn axis_offset(k: usize) -> Result<f64> {
    match k {
        1 | 3 => Ok(0.0),
        2 => Ok(FRAC_PI_2),
        _ => Err(Error::InvalidInput(format!("Euler index must be 1, 2 or 3, got {k}"))),
    }
}

/// Exact Fourier term: `e^{iα√n cos(π(n−½)l/(N+1)) σ/2}` on block `n`.
pub fn w_kl_target(n_comp: usize, k: usize, l: usize, alpha: f64) -> Result<Vec<Su2>> {
    let off = axis_offset(k)?;
    Ok((0..=n_comp + 1)
        .map(|n| {
            if n == 0 {
                return Su2::identity();
            }
            let a = -alpha * (n as f64).sqrt() * dct_phase(n_comp, n, l).cos();
            su2_exp([a * off.cos(), a * off.sin(), 0.0])
        })
        .collect())
}

/// One `w₁w₂` pair: pulses of area `dθ` at phases `±πl/(2(N+1))` conjugated by `T_a^∓`.
pub fn build_w_pair(n_comp: usize, k: usize, l: usize, dtheta: f64, q: usize) -> Result<SequenceTree> {
    let off = axis_offset(k)?;
    let t_a = build_T_a(z_angle(n_comp, l), q)?;
    let delta = 0.5 * z_angle(n_comp, l);
    let pulse = |beta: f64| SequenceTree::Leaf(PulseSequence::from_pulses(vec![resonant(dtheta, beta + off)]));
    // w₂ = T_a R(−δ) T_a† acts first, then w₁ = T_a† R(δ) T_a.
    Ok(SequenceTree::Concat(vec![
        t_a.dagger(),
        pulse(-delta),
        t_a.clone(),
        t_a.clone(),
        pulse(delta),
        t_a.dagger(),
    ]))
}

/// Sequence approximating [`w_kl_target`].
///
/// The `l = 0` term needs no conjugation and is a single exact pulse.
pub fn build_w_kl(n_comp: usize, k: usize, l: usize, alpha_kl: f64, plan: &SynthesisPlan) -> Result<SequenceTree> {
    let off = axis_offset(k)?;
    if l > n_comp {
        return Err(Error::InvalidInput(format!("Fourier index {l} exceeds N = {n_comp}")));
    }
    if l == 0 {
        return Ok(PulseSequence::from_pulses(vec![resonant(-alpha_kl, off)]).into());
    }
    let (p, q) = plan.counts(MAX_PLAN_SIZE)?;
    Ok(build_w_pair(n_comp, k, l, -plan.dtheta(alpha_kl), q)?.repeat(p))
}

/// `‖P_C(A − B)P_C‖` for block lists `0..=N+1` of two sideband-block operators.
pub fn comp_block_distance(n_comp: usize, a: &[Su2], b: &[Su2]) -> f64 {
    let mut s = (a[0][(1, 1)] - b[0][(1, 1)]).norm_sqr();
    for n in 1..=n_comp {
        s += (a[n] - b[n]).norm_squared();
    }
    s += (a[n_comp + 1][(0, 0)] - b[n_comp + 1][(0, 0)]).norm_sqr();
    s.sqrt()
}

/// Realisation of a sideband-block target together with its decomposition.
#[derive(Debug, Clone)]
pub struct U2Synthesis {
    pub angles: EulerAngleTable,
    pub coefficients: DctCoefficients,
    pub sequence: SequenceTree,
}

/// Coefficients below this are dropped.
const NEGLIGIBLE: f64 = 1e-14;

fn synthesize_table(angles: EulerAngleTable, plan: &SynthesisPlan) -> Result<U2Synthesis> {
    let n_comp = angles.n_comp;
    let coefficients = dct_angles(&angles);
    let mut parts = Vec::new();
    // U = V₁V₂V₃, so V₃ acts first.
    for k in [3, 2, 1] {
        for (l, &a) in coefficients.a[k - 1].iter().enumerate() {
            if a.abs() > NEGLIGIBLE {
                parts.push(build_w_kl(n_comp, k, l, a, plan)?);
            }
        }
    }
    Ok(U2Synthesis {
        angles,
        coefficients,
        sequence: SequenceTree::Concat(parts),
    })
}

/// Sideband sequence approximating a block-diagonal target on truncation `N+1`.
pub fn synthesize_u2(n_comp: usize, target_u2: &CMatrix, plan: &SynthesisPlan) -> Result<U2Synthesis> {
    synthesize_table(euler_decompose(n_comp, target_u2)?, plan)
}

/// [`synthesize_u2`] for explicit blocks `0..=N+1`.
pub fn synthesize_blocks(n_comp: usize, blocks: &[Su2], plan: &SynthesisPlan) -> Result<U2Synthesis> {
    synthesize_table(EulerAngleTable::from_blocks(n_comp, blocks)?, plan)
}

/// Sequence realising a carrier-family block rotation, with the V gates it
/// conjugates by synthesised analytically.
pub fn synthesize_u1(n_comp: usize, rot: &BlockRotation, plan: &SynthesisPlan) -> Result<SequenceTree> {
    use crate::semi_analytic::{assemble_u, v_gate_blocks};
    if rot.family != 1 {
        return Err(Error::InvalidInput("synthesize_u1 expects a carrier-family rotation".into()));
    }
    assemble_u(n_comp, rot, |spec| Ok(synthesize_blocks(n_comp, &v_gate_blocks(spec), plan)?.sequence))
}

/// Measured `‖P_C(T − T_a)P_C‖` of [`build_T_a`] at the largest phase step.
pub fn t_a_error(n_comp: usize, q: usize) -> Result<f64> {
    let phi = z_angle(n_comp, n_comp);
    let t = build_T_a(phi, q)?;
    Ok(comp_block_distance(n_comp, &t.sideband_blocks(n_comp + 1)?, &t_a_target(n_comp, phi)))
}

/// Measured error of one Fourier term [`build_w_kl`].
pub fn w_kl_error(n_comp: usize, k: usize, l: usize, alpha_kl: f64, plan: &SynthesisPlan) -> Result<f64> {
    let w = build_w_kl(n_comp, k, l, alpha_kl, plan)?;
    Ok(comp_block_distance(n_comp, &w.sideband_blocks(n_comp + 1)?, &w_kl_target(n_comp, k, l, alpha_kl)?))
}

/// Measured error of [`synthesize_blocks`] against its block targets.
pub fn u2_error(n_comp: usize, blocks: &[Su2], plan: &SynthesisPlan) -> Result<f64> {
    let s = synthesize_blocks(n_comp, blocks, plan)?;
    Ok(comp_block_distance(n_comp, &s.sequence.sideband_blocks(n_comp + 1)?, blocks))
}

/// Sequence realising one block rotation of either family.
pub fn synthesize_rotation(n_comp: usize, rot: &BlockRotation, plan: &SynthesisPlan) -> Result<SequenceTree> {
    match rot.family() {
        Family::Carrier => synthesize_u1(n_comp, rot, plan),
        Family::Sideband => {
            if rot.block == 0 || rot.block > n_comp {
                return Err(Error::InvalidInput(format!("sideband rotation on block {} is outside 1..=N", rot.block)));
            }
            let mut blocks = vec![Su2::identity(); n_comp + 2];
            blocks[rot.block] = rot.matrix();
            Ok(synthesize_blocks(n_comp, &blocks, plan)?.sequence)
        }
    }
}
