// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact compiler from qudit unitaries to programs of two-level block rotations.
//!
//! Basis states are prepared in the order `|0↓⟩, |0↑⟩, |1↓⟩, …, |N↑⟩`. Each step
//! walks the population of the current column down the oscillator ladder with
//! alternating carrier- and sideband-block rotations, leaving every previously
//! prepared state fixed, and finishes with a rotation that also zeroes the phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{block_states, dim, Family};
use crate::linalg::{frobenius, su2_angle_axis, su2_rotation, CMatrix, CVector, Su2, C64};
use crate::pulses::embed_blocks;

/// A rotation `exp(−i θ m·σ/2)` on one carrier or sideband block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRotation {
    pub family: u8,
    pub block: usize,
    pub angle: f64,
    pub axis: [f64; 3],
    /// Highest level the surrounding gate must leave untouched (`𝒩`), when
    /// the rotation was emitted by the compiler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_through: Option<i64>,
}

impl BlockRotation {
    pub fn family(&self) -> Family {
        Family::from_index(self.family).expect("family is 1 or 2")
    }

    pub fn matrix(&self) -> Su2 {
        su2_rotation(self.angle, self.axis)
    }

    pub fn identity(family: Family, block: usize) -> Self {
        Self {
            family: family.index(),
            block,
            angle: 0.0,
            axis: [0.0, 0.0, 1.0],
            identity_through: None,
        }
    }

    /// Whether the axis leaves the xy-plane.
    pub fn has_z_component(&self) -> bool {
        self.angle != 0.0 && self.axis[2].abs() > 1e-14
    }

    pub fn inverse(&self) -> Self {
        Self {
            angle: -self.angle,
            ..*self
        }
    }
}

/// Ordered layers; the first layer is applied first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockRotationProgram {
    pub layers: Vec<Vec<BlockRotation>>,
}

impl BlockRotationProgram {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn rotations(&self) -> impl Iterator<Item = &BlockRotation> {
        self.layers.iter().flatten()
    }

    pub fn inverse(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .rev()
                .map(|l| l.iter().map(BlockRotation::inverse).collect())
                .collect(),
        }
    }
}

/// Matrix of one layer on the computational space.
pub fn layer_matrix(n_comp: usize, layer: &[BlockRotation]) -> CMatrix {
    let d = dim(n_comp);
    let mut m = CMatrix::identity(d, d);
    for r in layer {
        let block = embed_rotation(n_comp, r);
        m = block * m;
    }
    m
}

fn embed_rotation(n_comp: usize, r: &BlockRotation) -> CMatrix {
    let b = r.matrix();
    let fam = r.family();
    embed_blocks(fam, n_comp, |j| if j == r.block { b } else { Su2::identity() })
}

/// Exact matrix of a program on the computational space.
pub fn evaluate(n_comp: usize, program: &BlockRotationProgram) -> CMatrix {
    let d = dim(n_comp);
    program
        .layers
        .iter()
        .fold(CMatrix::identity(d, d), |acc, l| layer_matrix(n_comp, l) * acc)
}

/// Rotation taking `(amp_a, amp_b)` to `(0, r e^{iγ})`.
///
/// With `zero_phase` the rotation also sets `γ = 0`, which needs a z-component
/// in the axis. Zero amplitudes give the identity.
pub fn two_level_transfer(amp_a: C64, amp_b: C64, zero_phase: bool) -> (f64, [f64; 3]) {
    let (ra, rb) = (amp_a.norm(), amp_b.norm());
    let r = ra.hypot(rb);
    if r == 0.0 {
        return (0.0, [0.0, 0.0, 1.0]);
    }
    let beta = if rb > 0.0 { amp_b.arg() } else { 0.0 };
    let (angle, axis) = if ra == 0.0 {
        (0.0, [0.0, 0.0, 1.0])
    } else {
        let nu = beta - amp_a.arg() + std::f64::consts::FRAC_PI_2;
        (2.0 * ra.atan2(rb), [nu.cos(), nu.sin(), 0.0])
    };
    if !zero_phase || beta == 0.0 {
        return (angle, axis);
    }
    // A z-rotation by −2γ removes the output phase.
    let rz = su2_rotation(-2.0 * beta, [0.0, 0.0, 1.0]);
    su2_angle_axis(&(rz * su2_rotation(angle, axis)))
}

/// Where a block rotation must move the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dest {
    Upper,
    Lower,
}

/// Rotation in block coordinates that moves `(upper, lower)` entirely into `dest`.
fn transfer_in_block(upper: C64, lower: C64, dest: Dest, zero_phase: bool) -> (f64, [f64; 3]) {
    match dest {
        Dest::Lower => two_level_transfer(upper, lower, zero_phase),
        Dest::Upper => {
            // Solve in swapped coordinates; σx R σx flips the y and z axis components.
            let (angle, a) = two_level_transfer(lower, upper, zero_phase);
            (angle, [a[0], -a[1], -a[2]])
        }
    }
}

/// Realises block rotations and reports the operator actually applied.
pub trait Realizer {
    /// Apply `rot` and return the implemented operator on the computational space.
    fn apply(&mut self, n_comp: usize, rot: &BlockRotation) -> Result<CMatrix>;
}

/// Applies rotations exactly.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactRealizer;

impl Realizer for ExactRealizer {
    fn apply(&mut self, n_comp: usize, rot: &BlockRotation) -> Result<CMatrix> {
        Ok(embed_rotation(n_comp, rot))
    }
}

/// Rotations of one preparation step, as `(family, block, dest, 𝒩, zero_phase)`.
fn step_plan(big_n: usize, n: usize, up: bool) -> Vec<(Family, usize, Dest, i64, bool)> {
    let mut plan = Vec::new();
    let (n1, n2) = if up { (n as i64, n as i64) } else { (n as i64 - 1, n as i64) };
    for j in ((n + 1)..=big_n).rev() {
        plan.push((Family::Carrier, j, Dest::Lower, n1, false));
        let last = up && j == n + 1;
        plan.push((Family::Sideband, j, Dest::Upper, n2, last));
    }
    if !up {
        plan.push((Family::Carrier, n, Dest::Lower, n1, true));
    }
    plan
}

/// `(family, block, 𝒩)` of every rotation [`compile_unitary`] emits, in order.
pub fn rotation_slots(n_comp: usize) -> Vec<(Family, usize, i64)> {
    (0..=n_comp)
        .flat_map(|n| [false, true].map(|up| (n, up)))
        .flat_map(|(n, up)| step_plan(n_comp, n, up))
        .map(|(f, j, _, ns, _)| (f, j, ns))
        .collect()
}

/// Build a rotation for the current state `psi` and hand it to the realizer.
fn emit<R: Realizer>(
    n_comp: usize,
    psi: &CVector,
    (family, block, dest, n_script, zero_phase): (Family, usize, Dest, i64, bool),
    realizer: &mut R,
) -> Result<(BlockRotation, CMatrix)> {
    let (u, l) = block_states(family, n_comp, block);
    let (u, l) = (u.expect("upper state in range"), l.expect("lower state in range"));
    let (angle, axis) = transfer_in_block(psi[u], psi[l], dest, zero_phase);
    let rot = BlockRotation {
        family: family.index(),
        block,
        angle,
        axis,
        identity_through: Some(n_script),
    };
    let applied = realizer.apply(n_comp, &rot)?;
    Ok((rot, applied))
}

fn check_square(n_comp: usize, m: &CMatrix) -> Result<()> {
    let d = dim(n_comp);
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "expected a {d}×{d} computational-space matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Compile `target` through `realizer`.
///
/// Returns the abstract program and the product of the operators the realizer
/// reported, which for [`ExactRealizer`] equals `target` up to a global phase.
pub fn compile_with<R: Realizer>(
    n_comp: usize,
    target: &CMatrix,
    realizer: &mut R,
) -> Result<(BlockRotationProgram, CMatrix)> {
    check_square(n_comp, target)?;
    let d = dim(n_comp);
    let defect = frobenius(&(target.adjoint() * target - CMatrix::identity(d, d)));
    if defect > 1e-8 {
        return Err(Error::InvalidInput(format!("target is not unitary (defect {defect:.2e})")));
    }
    // Remove the global phase so the target lies in SU(d), like the program.
    let alpha = target.clone().determinant().arg() / d as f64;
    let phi = (target * crate::linalg::cis(-alpha)).adjoint();
    let mut program = BlockRotationProgram::default();
    let mut current = CMatrix::identity(d, d);
    for n in 0..=n_comp {
        for up in [false, true] {
            let col = 2 * n + usize::from(up);
            for step in step_plan(n_comp, n, up) {
                let psi = &current * phi.column(col);
                let (rot, applied) = emit(n_comp, &psi, step, realizer)?;
                current = applied * current;
                program.layers.push(vec![rot]);
            }
        }
    }
    Ok((program, current))
}

/// Program reproducing `target` up to a global phase.
pub fn compile_unitary(n_comp: usize, target: &CMatrix) -> Result<BlockRotationProgram> {
    compile_with(n_comp, target, &mut ExactRealizer).map(|(p, _)| p)
}

/// Program mapping `state` to `|0↓⟩`.
pub fn state_prep(n_comp: usize, state: &CVector) -> Result<BlockRotationProgram> {
    if state.len() != dim(n_comp) {
        return Err(Error::InvalidInput("state dimension does not match the qudit".into()));
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("state is not normalised (norm {norm})")));
    }
    let mut program = BlockRotationProgram::default();
    let mut psi = state.clone();
    for step in step_plan(n_comp, 0, false) {
        let (rot, applied) = emit(n_comp, &psi, step, &mut ExactRealizer)?;
        psi = applied * psi;
        program.layers.push(vec![rot]);
    }
    Ok(program)
}

/// Number of layers produced by [`compile_unitary`], `(N+1)(2N+1)`.
pub fn layer_count(n_comp: usize) -> usize {
    (n_comp + 1) * (2 * n_comp + 1)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{idx, spin_pauli, Axis, Spin};
    use crate::linalg::{c, haar_state, haar_unitary, identity, Su2, I};
    use crate::metrics::comp_error;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn apply2(angle: f64, axis: [f64; 3], a: C64, b: C64) -> (C64, C64) {
        let r: Su2 = su2_rotation(angle, axis);
        (r[(0, 0)] * a + r[(0, 1)] * b, r[(1, 0)] * a + r[(1, 1)] * b)
    }

    #[test]
    fn transfer_examples() {
        let (angle, axis) = two_level_transfer(c(1.0, 0.0), c(0.0, 0.0), false);
        assert!((angle - std::f64::consts::PI).abs() < 1e-15 && axis[2] == 0.0);
        assert_eq!(two_level_transfer(c(0.0, 0.0), c(1.0, 0.0), false).0, 0.0);
        for zero in [false, true] {
            let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
            let (angle, axis) = two_level_transfer(a, b, zero);
            let (x, y) = apply2(angle, axis, a, b);
            assert!(x.norm() < 1e-12);
            assert!((y.norm() - 1.0).abs() < 1e-12);
            if zero {
                assert!((y - c(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn transfer_zeroes_first_component(ar in -1.0..1.0f64, ai in -1.0..1.0f64, br in -1.0..1.0f64, bi in -1.0..1.0f64, zero: bool) {
            let (a, b) = (c(ar, ai), c(br, bi));
            let (angle, axis) = two_level_transfer(a, b, zero);
            let (x, y) = apply2(angle, axis, a, b);
            prop_assert!(x.norm() < 1e-12);
            if zero {
                prop_assert!(y.im.abs() < 1e-12 && y.re >= -1e-12);
            }
        }
    }

    #[test]
    fn state_prep_reaches_vacuum() {
        let big_n = 3;
        let d = dim(big_n);
        let vac = CVector::from_fn(d, |i, _| if i == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let p = state_prep(big_n, &vac).unwrap();
        assert!(p.rotations().all(|r| r.angle == 0.0));
        let mut s = CVector::zeros(d);
        s[idx(0, Spin::Down)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        s[idx(big_n, Spin::Down)] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let p = state_prep(big_n, &s).unwrap();
        assert!(p.len() <= 2 * big_n + 1);
        let out = evaluate(big_n, &p) * &s;
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = haar_state(dim(6), &mut rng);
        let out = evaluate(6, &state_prep(6, &s).unwrap()) * &s;
        assert!(out[0].norm() > 1.0 - 1e-12);
        assert!(state_prep(2, &(s.rows(0, 6) * c(2.0, 0.0))).is_err());
    }

    #[test]
    fn compiles_identity_and_carrier_flip() {
        let big_n = 2;
        let d = dim(big_n);
        let p = compile_unitary(big_n, &identity(d)).unwrap();
        assert_eq!(p.len(), layer_count(big_n));
        assert!(p.rotations().all(|r| r.angle.abs() < 1e-12));
        let flip = spin_pauli(big_n, Axis::X) * -I;
        let p = compile_unitary(big_n, &flip).unwrap();
        assert!(comp_error(big_n, &flip, &evaluate(big_n, &p)).raw_error < 1e-10);
    }

    #[test]
    fn evaluate_basics() {
        let big_n = 2;
        let rot = BlockRotation {
            family: 2,
            block: 1,
            angle: std::f64::consts::PI,
            axis: [1.0, 0.0, 0.0],
            identity_through: None,
        };
        let prog = BlockRotationProgram { layers: vec![vec![rot]] };
        let u = evaluate(big_n, &prog);
        assert!((u[(idx(1, Spin::Down), idx(0, Spin::Up))] - (-I)).norm() < 1e-15);
        assert!((u[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let target = haar_unitary(dim(big_n), &mut rng);
        let p = compile_unitary(big_n, &target).unwrap();
        let mut both = p.clone();
        both.layers.extend(p.inverse().layers);
        assert!(frobenius(&(evaluate(big_n, &both) - identity(dim(big_n)))) < 1e-12);
    }

    #[test]
    fn random_targets_compile_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for big_n in 1..=4 {
            for _ in 0..5 {
                let target = haar_unitary(dim(big_n), &mut rng);
                let p = compile_unitary(big_n, &target).unwrap();
                assert!(p.len() <= 2 * dim(big_n) * (2 * big_n + 1));
                let e = comp_error(big_n, &target, &evaluate(big_n, &p));
                assert!(e.raw_error < 1e-10, "N={big_n}: {e:?}");
            }
        }
    }

    #[test]
    fn rejects_non_unitary_targets() {
        assert!(compile_unitary(1, &(identity(4) * c(2.0, 0.0))).is_err());
        assert!(compile_unitary(1, &identity(6)).is_err());
    }
}
