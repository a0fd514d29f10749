// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::dim;
use crate::linalg::{su2_exp, CMatrix, Su2};
use crate::pulses::is_sideband_block_diagonal;

/// Per-block x-y-x Euler angles of a sideband-block target.
///
/// Block `n` equals `e^{iα₁σx/2} e^{iα₂σy/2} e^{iα₃σx/2}` with `alpha[n] = [α₁, α₂, α₃]`,
/// for `n = 0..=N+1`. Block 0 holds a single state and always has zero angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerAngleTable {
    pub n_comp: usize,
    pub alpha: Vec<[f64; 3]>,
}

/// Cosine-series coefficients `a[k][l]` of `α_{nk}/√n`, `l = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DctCoefficients {
    pub n_comp: usize,
    pub a: [Vec<f64>; 3],
}

/// Rotation about axis `k` (1 and 3 are x, 2 is y) by `e^{iθσ/2}`.
pub(crate) fn euler_factor(k: usize, theta: f64) -> Su2 {
    match k {
        2 => su2_exp([0.0, -theta, 0.0]),
        _ => su2_exp([-theta, 0.0, 0.0]),
    }
}

/// x-y-x angles of one SU(2) block.
fn block_angles(u: &Su2) -> [f64; 3] {
    // The Hadamard maps x-y-x rotations to z-y-z ones with the outer angles
    // negated: H U H = Rz(a) Ry(b) Rz(c), U = V₁V₂V₃ with α = (−a, b, −c).
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Su2::new(s.into(), s.into(), s.into(), (-s).into());
    let w = h * u * h;
    let (p, q) = (w[(0, 0)], w[(1, 0)]);
    let b = 2.0 * q.norm().atan2(p.norm());
    let (a, c) = if q.norm() < 1e-15 {
        (-2.0 * p.arg(), 0.0)
    } else if p.norm() < 1e-15 {
        (2.0 * q.arg(), 0.0)
    } else {
        (q.arg() - p.arg(), -q.arg() - p.arg())
    };
    [-a, b, -c]
}

/// Recompose the blocks `0..=N+1` of a table.
pub fn recompose(table: &EulerAngleTable) -> Vec<Su2> {
    table
        .alpha
        .iter()
        .map(|a| euler_factor(1, a[0]) * euler_factor(2, a[1]) * euler_factor(3, a[2]))
        .collect()
}

impl EulerAngleTable {
    /// Angles of explicit blocks `0..=N+1`; block 0 must be the identity and
    /// every other block special unitary.
    pub fn from_blocks(n_comp: usize, blocks: &[Su2]) -> Result<Self> {
        if blocks.len() != n_comp + 2 {
            return Err(Error::InvalidInput(format!(
                "expected {} blocks, got {}",
                n_comp + 2,
                blocks.len()
            )));
        }
        if (blocks[0][(1, 1)] - 1.0).norm() > 1e-9 {
            return Err(Error::InvalidInput("block 0 must act as the identity".into()));
        }
        let mut alpha = vec![[0.0; 3]];
        for (n, b) in blocks.iter().enumerate().skip(1) {
            let defect = (b.adjoint() * b - Su2::identity()).norm();
            let det = b.determinant();
            if defect > 1e-9 || (det - 1.0).norm() > 1e-9 {
                return Err(Error::InvalidInput(format!("block {n} is not special unitary")));
            }
            alpha.push(block_angles(b));
        }
        Ok(Self { n_comp, alpha })
    }
}

/// Euler angles of a target on truncation `N+1` (dimension `2(N+2)`).
///
/// The target must be block diagonal in the sideband family. Its global phase
/// is fixed by the `|0↓⟩` entry.
pub fn euler_decompose(n_comp: usize, target: &CMatrix) -> Result<EulerAngleTable> {
    let top = n_comp + 1;
    let d = dim(top);
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "expected a {d}×{d} matrix on truncation {top}, got {}×{}",
            target.nrows(),
            target.ncols()
        )));
    }
    if !is_sideband_block_diagonal(top, target, 1e-10) {
        return Err(Error::InvalidInput("target is not block diagonal in the sideband family".into()));
    }
    let g = target[(0, 0)];
    if (g.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("target is not unitary on |0↓⟩".into()));
    }
    let phase = g.conj();
    let blocks: Vec<Su2> = (0..=n_comp + 1)
        .map(|n| {
            if n == 0 {
                Su2::identity()
            } else {
                let (u, l) = (2 * n - 1, 2 * n);
                Su2::new(target[(u, u)], target[(u, l)], target[(l, u)], target[(l, l)]) * phase
            }
        })
        .collect();
    EulerAngleTable::from_blocks(n_comp, &blocks)
}

/// Cosine argument `π(n − ½)l/(N+1)` of block `n ≥ 1`.
pub(crate) fn dct_phase(n_comp: usize, n: usize, l: usize) -> f64 {
    PI * (n as f64 - 0.5) * l as f64 / (n_comp + 1) as f64
}

/// Expand `α_{nk}/√n`, `n = 1..=N+1`, in the cosines `cos(π(n − ½)l/(N+1))`.
pub fn dct_angles(table: &EulerAngleTable) -> DctCoefficients {
    let big_n = table.n_comp;
    let m = (big_n + 1) as f64;
    let a = [0, 1, 2].map(|k| {
        (0..=big_n)
            .map(|l| {
                let s: f64 = (1..=big_n + 1)
                    .map(|n| table.alpha[n][k] / (n as f64).sqrt() * dct_phase(big_n, n, l).cos())
                    .sum();
                if l == 0 {
                    s / m
                } else {
                    2.0 * s / m
                }
            })
            .collect()
    });
    DctCoefficients { n_comp: big_n, a }
}

/// Inverse of [`dct_angles`].
pub fn idct_angles(coeffs: &DctCoefficients) -> EulerAngleTable {
    let big_n = coeffs.n_comp;
    let mut alpha = vec![[0.0; 3]; big_n + 2];
    for (n, row) in alpha.iter_mut().enumerate().skip(1) {
        for (k, a) in coeffs.a.iter().enumerate() {
            let s: f64 = a.iter().enumerate().map(|(l, c)| c * dct_phase(big_n, n, l).cos()).sum();
            row[k] = s * (n as f64).sqrt();
        }
    }
    EulerAngleTable { n_comp: big_n, alpha }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, su2_dist};
    use crate::pulses::embed_blocks;
    use crate::hilbert::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_su2(rng: &mut ChaCha8Rng) -> Su2 {
        let u = haar_unitary(2, rng);
        let m = Su2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        let det = m.determinant();
        m * det.sqrt().conj()
    }

    #[test]
    fn identity_has_zero_angles() {
        let t = euler_decompose(2, &CMatrix::identity(dim(3), dim(3))).unwrap();
        assert!(t.alpha.iter().flatten().all(|a| a.abs() < 1e-15));
    }

    #[test]
    fn pure_x_rotation_has_no_y_angle() {
        let mut blocks = vec![Su2::identity(); 4];
        blocks[2] = su2_exp([0.7, 0.0, 0.0]);
        let t = EulerAngleTable::from_blocks(2, &blocks).unwrap();
        assert!(t.alpha[2][1].abs() < 1e-15);
    }

    #[test]
    fn random_targets_recompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for big_n in 1..=4 {
            let mut blocks: Vec<Su2> = (0..big_n + 2).map(|_| random_su2(&mut rng)).collect();
            blocks[0] = Su2::identity();
            let phase = crate::linalg::cis(rng.random_range(0.0..6.0));
            let m = embed_blocks(Family::Sideband, big_n + 1, |n| blocks.get(n).copied().unwrap_or_else(Su2::identity)) * phase;
            let t = euler_decompose(big_n, &m).unwrap();
            for (a, b) in recompose(&t).iter().zip(&blocks).skip(1) {
                assert!(su2_dist(a, b) < 1e-12, "{}", su2_dist(a, b));
            }
        }
    }

    #[test]
    fn degenerate_blocks_recompose() {
        let cases = [su2_exp([0.0, 0.0, 1.3]), su2_exp([0.0, std::f64::consts::PI - 1e-5, 0.0]), -Su2::identity()];
        for b in cases {
            let blocks = vec![Su2::identity(), b, Su2::identity()];
            let t = EulerAngleTable::from_blocks(1, &blocks).unwrap();
            assert!(su2_dist(&recompose(&t)[1], &b) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_block_diagonal() {
        let mut m = CMatrix::identity(dim(2), dim(2));
        m[(0, 3)] = 0.1.into();
        assert!(euler_decompose(1, &m).is_err());
    }

    #[test]
    fn dct_constant_and_single_mode() {
        let big_n = 3;
        let c = 0.37;
        let mut alpha = vec![[0.0; 3]; big_n + 2];
        for (n, a) in alpha.iter_mut().enumerate().skip(1) {
            a[0] = c * (n as f64).sqrt();
            a[1] = (n as f64).sqrt() * dct_phase(big_n, n, 2).cos();
        }
        let d = dct_angles(&EulerAngleTable { n_comp: big_n, alpha });
        assert!((d.a[0][0] - c).abs() < 1e-14);
        assert!(d.a[0][1..].iter().all(|x| x.abs() < 1e-14));
        for (l, x) in d.a[1].iter().enumerate() {
            let want = if l == 2 { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-14);
        }
    }

    #[test]
    fn dct_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for big_n in 1..=6 {
            let mut alpha = vec![[0.0; 3]; big_n + 2];
            for a in alpha.iter_mut().skip(1) {
                *a = [0, 1, 2].map(|_| rng.random_range(-6.0..6.0));
            }
            let t = EulerAngleTable { n_comp: big_n, alpha };
            let back = idct_angles(&dct_angles(&t));
            for (x, y) in t.alpha.iter().flatten().zip(back.alpha.iter().flatten()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
