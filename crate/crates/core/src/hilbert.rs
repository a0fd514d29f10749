// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Basis indexing, operators and projectors on the truncated oscillator ⊗ spin space.
//!
//! A truncation is described by its highest kept oscillator level `top`, giving
//! dimension `2(top + 1)`. Basis states are indexed `2n + s` with spin down `s = 0`
//! and spin up `s = 1`, so the sideband block `{|n−1↑⟩, |n↓⟩}` occupies the adjacent
//! pair `(2n − 1, 2n)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, I, ONE, ZERO};

/// Truncations used when simulating a qudit stored in levels `0..=n_comp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpace {
    /// Highest computational oscillator level.
    pub n_comp: usize,
    /// Highest level that is not penalised as leakage.
    pub n_pad: usize,
    /// Highest level kept during optimisation.
    pub n_opt: usize,
    /// Truncation used to verify optimised controls.
    pub n_check: usize,
}

impl ModeSpace {
    pub fn new(n_comp: usize, n_pad: usize, n_opt: usize, n_check: usize) -> Result<Self> {
        if n_comp < 1 {
            return Err(Error::Config("n_comp must be at least 1".into()));
        }
        if !(n_comp < n_pad && n_pad < n_opt && n_opt < n_check) {
            return Err(Error::Config(format!(
                "need n_comp < n_pad < n_opt < n_check, got {n_comp}, {n_pad}, {n_opt}, {n_check}"
            )));
        }
        Ok(Self {
            n_comp,
            n_pad,
            n_opt,
            n_check,
        })
    }

    /// Default padding: `n_pad = N + 3`, `n_opt = N + 5`, `n_check = 4 n_opt`.
    pub fn with_defaults(n_comp: usize) -> Result<Self> {
        let n_opt = n_comp + 5;
        Self::new(n_comp, n_comp + 3, n_opt, 4 * n_opt)
    }

    /// Dimension of the computational space, `2(N + 1)`.
    pub fn comp_dim(&self) -> usize {
        dim(self.n_comp)
    }
}

/// Dimension of the space truncated at level `top`.
#[inline]
pub const fn dim(top: usize) -> usize {
    2 * (top + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    #[inline]
    pub const fn bit(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// A product basis state `|n s⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub n: usize,
    pub s: Spin,
}

impl BasisIndex {
    pub const fn new(n: usize, s: Spin) -> Self {
        Self { n, s }
    }

    #[inline]
    pub const fn flat(self) -> usize {
        2 * self.n + self.s.bit()
    }

    pub const fn from_flat(flat: usize) -> Self {
        let s = if flat % 2 == 0 { Spin::Down } else { Spin::Up };
        Self { n: flat / 2, s }
    }
}

/// Flat index of `|n s⟩`.
#[inline]
pub const fn idx(n: usize, s: Spin) -> usize {
    BasisIndex::new(n, s).flat()
}

/// Pulse family: carrier blocks `h1_n = {|n↑⟩, |n↓⟩}` or sideband blocks
/// `h2_n = {|n−1↑⟩, |n↓⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Carrier,
    Sideband,
}

impl Family {
    pub fn from_index(a: u8) -> Result<Self> {
        match a {
            1 => Ok(Family::Carrier),
            2 => Ok(Family::Sideband),
            _ => Err(Error::InvalidInput(format!("family must be 1 or 2, got {a}"))),
        }
    }

    pub const fn index(self) -> u8 {
        match self {
            Family::Carrier => 1,
            Family::Sideband => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Flat indices `(upper, lower)` of block `n` at truncation `top`.
///
/// Local coordinates put the upper state first, so `σ_z = +1` on it. Sideband
/// block 0 has no upper state and block `top + 1` has no lower state.
pub fn block_states(family: Family, top: usize, n: usize) -> (Option<usize>, Option<usize>) {
    match family {
        Family::Carrier => {
            if n > top {
                (None, None)
            } else {
                (Some(idx(n, Spin::Up)), Some(idx(n, Spin::Down)))
            }
        }
        Family::Sideband => {
            let upper = (n >= 1 && n - 1 <= top).then(|| idx(n - 1, Spin::Up));
            let lower = (n <= top).then(|| idx(n, Spin::Down));
            (upper, lower)
        }
    }
}

fn projector_onto(d: usize, states: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(d, d);
    for &s in states {
        p[(s, s)] = ONE;
    }
    p
}

/// Projector onto `h1_n`.
pub fn proj_h1(top: usize, n: usize) -> Result<CMatrix> {
    if n > top {
        return Err(Error::OutOfRange(format!("h1 block {n} above truncation {top}")));
    }
    Ok(projector_onto(dim(top), &[idx(n, Spin::Down), idx(n, Spin::Up)]))
}

/// Projector onto `h2_n`, rank 1 at `n = 0` and at `n = top + 1`.
pub fn proj_h2(top: usize, n: usize) -> Result<CMatrix> {
    if n > top + 1 {
        return Err(Error::OutOfRange(format!("h2 block {n} above truncation {top} + 1")));
    }
    let (u, l) = block_states(Family::Sideband, top, n);
    let states: Vec<usize> = [u, l].into_iter().flatten().collect();
    Ok(projector_onto(dim(top), &states))
}

/// Projector onto oscillator levels `lo..=hi` (both spins).
pub fn proj_levels(top: usize, lo: usize, hi: usize) -> CMatrix {
    let states: Vec<usize> = (lo..=hi.min(top))
        .flat_map(|n| [idx(n, Spin::Down), idx(n, Spin::Up)])
        .collect();
    projector_onto(dim(top), &states)
}

/// Projector onto the computational space embedded in truncation `top ≥ n_comp`.
pub fn proj_comp(top: usize, n_comp: usize) -> CMatrix {
    proj_levels(top, 0, n_comp)
}

/// Block Pauli operator. Family-2 operators on block 0 are zero.
pub fn pauli_block(top: usize, family: Family, axis: Axis, n: usize) -> Result<CMatrix> {
    let d = dim(top);
    let (u, l) = block_states(family, top, n);
    let limit = match family {
        Family::Carrier => top,
        Family::Sideband => top + 1,
    };
    if n > limit {
        return Err(Error::OutOfRange(format!("block {n} above truncation {top}")));
    }
    let mut m = CMatrix::zeros(d, d);
    match (u, l) {
        (Some(u), Some(l)) => match axis {
            Axis::X => {
                m[(u, l)] = ONE;
                m[(l, u)] = ONE;
            }
            Axis::Y => {
                m[(u, l)] = -I;
                m[(l, u)] = I;
            }
            Axis::Z => {
                m[(u, u)] = ONE;
                m[(l, l)] = -ONE;
            }
        },
        // A truncated top block keeps only its diagonal part.
        (Some(u), None) if axis == Axis::Z && family == Family::Sideband => m[(u, u)] = ONE,
        _ => {}
    }
    Ok(m)
}

/// Truncated annihilation operator `a ⊗ I`.
pub fn annihilation(top: usize) -> CMatrix {
    let d = dim(top);
    let mut m = CMatrix::zeros(d, d);
    for n in 1..=top {
        let amp = c((n as f64).sqrt(), 0.0);
        m[(idx(n - 1, Spin::Down), idx(n, Spin::Down))] = amp;
        m[(idx(n - 1, Spin::Up), idx(n, Spin::Up))] = amp;
    }
    m
}

/// Spin Pauli `I ⊗ σ` with `σ_z = +1` on spin up.
pub fn spin_pauli(top: usize, axis: Axis) -> CMatrix {
    let d = dim(top);
    let mut m = CMatrix::zeros(d, d);
    for n in 0..=top {
        let (u, l) = (idx(n, Spin::Up), idx(n, Spin::Down));
        match axis {
            Axis::X => {
                m[(u, l)] = ONE;
                m[(l, u)] = ONE;
            }
            Axis::Y => {
                m[(u, l)] = -I;
                m[(l, u)] = I;
            }
            Axis::Z => {
                m[(u, u)] = ONE;
                m[(l, l)] = -ONE;
            }
        }
    }
    m
}

/// Spin lowering operator `I ⊗ |↓⟩⟨↑|`.
pub fn spin_lowering(top: usize) -> CMatrix {
    let d = dim(top);
    let mut m = CMatrix::zeros(d, d);
    for n in 0..=top {
        m[(idx(n, Spin::Down), idx(n, Spin::Up))] = ONE;
    }
    m
}

/// Which states of a sideband block enter an objective restricted to the
/// computational space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockPart {
    Both,
    UpperOnly,
    LowerOnly,
}

/// Projector onto the subspace on which a V gate is optimised.
#[derive(Debug, Clone, PartialEq)]
pub struct OptSubspace {
    /// Sideband blocks in the subspace, ascending.
    pub blocks: Vec<usize>,
    /// Matrix on the computational space (truncation `N`).
    pub matrix: CMatrix,
    pub rank: usize,
    /// Dimension of the computational space orthogonal to the projector.
    pub d_perp: usize,
}

impl OptSubspace {
    /// Part of block `j` that lies inside the computational space.
    pub fn part(&self, n_comp: usize, j: usize) -> BlockPart {
        if j == 0 {
            BlockPart::LowerOnly
        } else if j == n_comp + 1 {
            BlockPart::UpperOnly
        } else {
            BlockPart::Both
        }
    }
}

/// Optimised-subspace projector for `V⁽ᵃ⁾_{n,𝒩}` on a qudit with ceiling `n_comp`.
///
/// `n_script` may be `−1`, meaning no states are held fixed.
pub fn opt_subspace_projector(
    n_comp: usize,
    family: Family,
    n: usize,
    n_script: i64,
) -> Result<OptSubspace> {
    let big_n = n_comp;
    if n_script < -1 || (n as i64) < n_script + 1 || n > big_n {
        return Err(Error::InvalidInput(format!(
            "need -1 <= 𝒩 < n <= N, got n = {n}, 𝒩 = {n_script}, N = {big_n}"
        )));
    }
    if family == Family::Sideband && n == 0 {
        return Err(Error::InvalidInput("family-2 gates need n >= 1".into()));
    }
    let mut blocks = BTreeSet::new();
    let fixed_top = match family {
        Family::Carrier if (n as i64) != n_script + 1 => n_script + 1,
        _ => n_script,
    };
    for j in 1..=fixed_top {
        blocks.insert(j as usize);
    }
    match family {
        Family::Carrier => {
            blocks.insert(n);
            if n != big_n {
                blocks.insert(n + 1);
            }
        }
        Family::Sideband => {
            blocks.insert(n);
        }
    }
    blocks.insert(big_n + 1);
    let blocks: Vec<usize> = blocks.into_iter().collect();
    let mut matrix = CMatrix::zeros(dim(big_n), dim(big_n));
    for &j in &blocks {
        matrix += proj_h2(big_n, j)?;
    }
    let rank = (0..matrix.nrows()).filter(|&i| matrix[(i, i)] != ZERO).count();
    Ok(OptSubspace {
        blocks,
        matrix,
        rank,
        d_perp: dim(big_n) - rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, identity};

    #[test]
    fn defaults_follow_padding_rule() {
        let s = ModeSpace::with_defaults(2).unwrap();
        assert_eq!((s.n_pad, s.n_opt, s.n_check), (5, 7, 28));
        let s = ModeSpace::new(1, 2, 3, 4).unwrap();
        assert_eq!([dim(s.n_comp), dim(s.n_pad), dim(s.n_opt), dim(s.n_check)], [4, 6, 8, 10]);
        assert!(ModeSpace::new(3, 3, 5, 6).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        for f in 0..20 {
            assert_eq!(BasisIndex::from_flat(f).flat(), f);
        }
        assert_eq!(idx(3, Spin::Up), 7);
    }

    #[test]
    fn projectors_are_complete() {
        let top = 4;
        let mut s1 = CMatrix::zeros(dim(top), dim(top));
        let mut s2 = s1.clone();
        for n in 0..=top {
            s1 += proj_h1(top, n).unwrap();
        }
        for n in 0..=top + 1 {
            s2 += proj_h2(top, n).unwrap();
        }
        assert_eq!(s1, identity(dim(top)));
        assert_eq!(s2, identity(dim(top)));
        assert!(proj_h2(top, top + 2).is_err());
        let p0 = proj_h1(1, 0).unwrap();
        assert_eq!(p0.diagonal().map(|z| z.re).as_slice(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn block_paulis() {
        let top = 3;
        let z1 = pauli_block(top, Family::Sideband, Axis::Z, 1).unwrap();
        assert_eq!(z1[(idx(0, Spin::Up), idx(0, Spin::Up))], ONE);
        assert_eq!(z1[(idx(1, Spin::Down), idx(1, Spin::Down))], -ONE);
        assert_eq!(frobenius(&pauli_block(top, Family::Sideband, Axis::X, 0).unwrap()), 0.0);
        for n in 1..=top {
            let x = pauli_block(top, Family::Sideband, Axis::X, n).unwrap();
            let y = pauli_block(top, Family::Sideband, Axis::Y, n).unwrap();
            let z = pauli_block(top, Family::Sideband, Axis::Z, n).unwrap();
            assert!(frobenius(&(&x * &x - proj_h2(top, n).unwrap())) < 1e-15);
            assert!(frobenius(&(&x * &y - z * I)) < 1e-15);
        }
    }

    #[test]
    fn opt_subspace_cases() {
        let p = opt_subspace_projector(3, Family::Sideband, 3, 1).unwrap();
        assert_eq!(p.blocks, vec![1, 3, 4]);
        let p = opt_subspace_projector(3, Family::Carrier, 3, 1).unwrap();
        assert_eq!(p.blocks, vec![1, 2, 3, 4]);
        for big_n in 1..6 {
            for ns in -1..big_n as i64 {
                for n in (ns + 1) as usize..=big_n {
                    let p = opt_subspace_projector(big_n, Family::Carrier, n, ns).unwrap();
                    assert_eq!(p.rank + p.d_perp, dim(big_n));
                }
            }
        }
    }
}
