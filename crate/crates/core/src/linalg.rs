// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type Su2 = Matrix2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Frobenius norm, `sqrt(Tr M†M)`.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖U†U − I‖` in the Frobenius norm.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let d = u.adjoint() * u - identity(u.nrows());
    frobenius(&d)
}

/// `‖AB − BA‖`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// `Tr(A† B)` without forming the product.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        // Symmetrise first so tiny rounding asymmetries never leak into the solver.
        let hs = (h + h.adjoint()) * c(0.5, 0.0);
        let eig = hs.symmetric_eigen();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `exp(−i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let ph = cis(-l * t);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= ph;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Divided-difference kernel `Γ` of `exp(−i H t)`.
    ///
    /// For a perturbation `dH`, the first-order change of the propagator is
    /// `V (Γ ∘ (V† dH V)) V†`.
    pub fn derivative_kernel(&self, t: f64) -> CMatrix {
        let n = self.values.len();
        CMatrix::from_fn(n, n, |j, k| {
            let (lj, lk) = (self.values[j], self.values[k]);
            let half = 0.5 * (lj - lk) * t;
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            c(0.0, -t) * cis(-0.5 * (lj + lk) * t) * sinc
        })
    }
}

/// `exp(−i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    HermitianEigen::new(h).propagator(t)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for z in q.column_mut(j).iter_mut() {
            *z *= ph;
        }
    }
    q
}

/// Haar-random unit vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let n = v.norm();
    v / c(n, 0.0)
}

pub mod pauli {
    use super::*;

    pub fn x() -> Su2 {
        Su2::new(ZERO, ONE, ONE, ZERO)
    }
    pub fn y() -> Su2 {
        Su2::new(ZERO, -I, I, ZERO)
    }
    pub fn z() -> Su2 {
        Su2::new(ONE, ZERO, ZERO, -ONE)
    }
}

/// `exp(−i v·σ / 2)` for a real 3-vector `v` (rotation by `|v|` about `v̂`).
pub fn su2_exp(v: [f64; 3]) -> Su2 {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if r == 0.0 {
        return Su2::identity();
    }
    let (s, co) = (0.5 * r).sin_cos();
    let (nx, ny, nz) = (v[0] / r, v[1] / r, v[2] / r);
    Su2::new(
        c(co, -s * nz),
        c(-s * ny, -s * nx),
        c(s * ny, -s * nx),
        c(co, s * nz),
    )
}

/// Partial derivatives of [`su2_exp`] with respect to the three components of `v`.
pub fn su2_exp_grad(v: [f64; 3]) -> [Su2; 3] {
    let r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let r = r2.sqrt();
    let (s, co) = (0.5 * r).sin_cos();
    // U = cos(r/2) I − i (sin(r/2)/r) v·σ
    // ∂U/∂v_k = −(sin(r/2)/2r) v_k I − i [a σ_k + b v_k v·σ]
    let (a, b, half_sinc) = if r < 1e-4 {
        (0.5 - r2 / 48.0, -1.0 / 24.0 + r2 / 960.0, 0.25 - r2 / 96.0)
    } else {
        (s / r, 0.5 * co / r2 - s / (r2 * r), 0.5 * s / r)
    };
    let paulis = [pauli::x(), pauli::y(), pauli::z()];
    let vs = paulis[0] * c(v[0], 0.0) + paulis[1] * c(v[1], 0.0) + paulis[2] * c(v[2], 0.0);
    let mut out = [Su2::zeros(); 3];
    for k in 0..3 {
        let term = paulis[k] * c(a, 0.0) + vs * c(b * v[k], 0.0);
        out[k] = Su2::identity() * c(-half_sinc * v[k], 0.0) - term * I;
    }
    out
}

/// Rotation by `angle` about the unit `axis`.
pub fn su2_rotation(angle: f64, axis: [f64; 3]) -> Su2 {
    su2_exp([angle * axis[0], angle * axis[1], angle * axis[2]])
}

/// Angle in `[0, 2π]` and unit axis of a matrix in SU(2).
///
/// The identity returns angle 0 with the z axis.
pub fn su2_angle_axis(u: &Su2) -> (f64, [f64; 3]) {
    let p = u[(0, 0)];
    let q = u[(0, 1)];
    // u = cos(θ/2) I − i sin(θ/2) n·σ
    let cos_half = p.re;
    let sx = -q.im;
    let sy = -q.re;
    let sz = -p.im;
    let sin_half = (sx * sx + sy * sy + sz * sz).sqrt();
    if sin_half < 1e-300 {
        return (0.0, [0.0, 0.0, 1.0]);
    }
    let angle = 2.0 * sin_half.atan2(cos_half);
    (angle, [sx / sin_half, sy / sin_half, sz / sin_half])
}

/// Frobenius distance between 2×2 matrices.
pub fn su2_dist(a: &Su2, b: &Su2) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn su2_exp_matches_eigen_exponential() {
        let v = [0.3, -1.1, 0.7];
        let h = (pauli::x() * c(v[0], 0.0) + pauli::y() * c(v[1], 0.0) + pauli::z() * c(v[2], 0.0))
            * c(0.5, 0.0);
        let hd = CMatrix::from_fn(2, 2, |i, j| h[(i, j)]);
        let u = expm_hermitian(&hd, 1.0);
        let s = su2_exp(v);
        for i in 0..2 {
            for j in 0..2 {
                assert!((u[(i, j)] - s[(i, j)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn angle_axis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let v: [f64; 3] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let u = su2_exp(v);
            let (a, n) = su2_angle_axis(&u);
            assert!(su2_dist(&su2_rotation(a, n), &u) < 1e-12);
        }
    }

    #[test]
    fn su2_exp_grad_matches_finite_difference() {
        for v in [[0.3, -1.1, 0.7], [1e-6, 2e-6, -1e-6], [0.0, 0.0, 0.0], [2.0, 0.0, 0.5]] {
            let g = su2_exp_grad(v);
            for k in 0..3 {
                let h = 1e-6;
                let (mut vp, mut vm) = (v, v);
                vp[k] += h;
                vm[k] -= h;
                let fd = (su2_exp(vp) - su2_exp(vm)) / c(2.0 * h, 0.0);
                assert!(su2_dist(&fd, &g[k]) < 1e-8, "{v:?} {k}");
            }
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(9, &mut rng);
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn derivative_kernel_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = haar_unitary(5, &mut rng);
        let b = haar_unitary(5, &mut rng);
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let dh = (&b + b.adjoint()) * c(0.5, 0.0);
        let t = 0.8;
        let eig = HermitianEigen::new(&h);
        let gamma = eig.derivative_kernel(t);
        let inner = eig.vectors.adjoint() * &dh * &eig.vectors;
        let du = &eig.vectors * inner.component_mul(&gamma) * eig.vectors.adjoint();
        let e = 1e-6;
        let fd = (expm_hermitian(&(&h + &dh * c(e, 0.0)), t) - expm_hermitian(&(&h - &dh * c(e, 0.0)), t))
            / c(2.0 * e, 0.0);
        assert!(frobenius(&(du - fd)) < 1e-8);
    }
}
