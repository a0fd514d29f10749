// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Control pulses and their exact propagators.
//!
//! Units: `g_max = χ_max = 1`, so the vacuum Rabi period is `T_G = 2π`. Durations
//! are stored in these natural units and written to JSON in units of `T_G`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{block_states, dim, Family};
use crate::linalg::{c, su2_exp, CMatrix, HermitianEigen, Su2};

/// Maximum coupling and carrier Rabi frequency.
pub const G_MAX: f64 = 1.0;
/// Vacuum Rabi period `2π / g_max`.
pub const T_G: f64 = 2.0 * PI / G_MAX;

/// Spin-only drive.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CarrierPulse {
    pub delta: f64,
    pub chi: f64,
    pub phi: f64,
    pub duration: f64,
}

/// Spin-oscillator coupling on mode `mode` with the carrier off.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SidebandPulse {
    pub mode: usize,
    pub g: f64,
    pub delta: f64,
    pub beta: f64,
    pub duration: f64,
}

/// Carrier and coupling applied together.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralPulse {
    pub mode: usize,
    pub delta: f64,
    pub chi: f64,
    pub phi: f64,
    pub g: f64,
    pub beta: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "PulseRecord", try_from = "PulseRecord")]
pub enum Pulse {
    Carrier(CarrierPulse),
    Sideband(SidebandPulse),
    General(GeneralPulse),
}

impl CarrierPulse {
    /// Carrier realising `exp(−i θ n·σ/2)` at full drive strength.
    pub fn rotation(angle: f64, axis: [f64; 3]) -> Self {
        let v = [angle * axis[0], angle * axis[1], angle * axis[2]];
        // T·(χ cosφ, χ sinφ, −Δ) = v with χ = χ_max whenever χ is needed.
        let xy = v[0].hypot(v[1]);
        let len = (xy * xy + v[2] * v[2]).sqrt();
        if len == 0.0 {
            return Self::default();
        }
        let duration = if xy > 0.0 { xy / G_MAX } else { len / G_MAX };
        Self {
            delta: -v[2] / duration,
            chi: xy / duration,
            phi: v[1].atan2(v[0]),
            duration,
        }
    }
}

impl SidebandPulse {
    /// Resonant pulse of area `g T = area` at full coupling; negative areas flip the phase.
    pub fn resonant(mode: usize, area: f64, beta: f64) -> Self {
        let (area, beta) = if area < 0.0 { (-area, beta + PI) } else { (area, beta) };
        Self {
            mode,
            g: G_MAX,
            delta: 0.0,
            beta,
            duration: area / G_MAX,
        }
    }
}

impl Pulse {
    pub fn duration(&self) -> f64 {
        match self {
            Pulse::Carrier(p) => p.duration,
            Pulse::Sideband(p) => p.duration,
            Pulse::General(p) => p.duration,
        }
    }

    pub fn mode(&self) -> Option<usize> {
        match self {
            Pulse::Carrier(_) => None,
            Pulse::Sideband(p) => Some(p.mode),
            Pulse::General(p) => Some(p.mode),
        }
    }

    fn with_mode(self, mode: usize) -> Self {
        match self {
            Pulse::Carrier(p) => Pulse::Carrier(p),
            Pulse::Sideband(p) => Pulse::Sideband(SidebandPulse { mode, ..p }),
            Pulse::General(p) => Pulse::General(GeneralPulse { mode, ..p }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        // General pulses come from unconstrained optimisation, so only their
        // duration is checked.
        let (d, nonneg) = match self {
            Pulse::Carrier(p) => (p.duration, p.chi),
            Pulse::Sideband(p) => (p.duration, p.g),
            Pulse::General(p) => (p.duration, 0.0),
        };
        if !(d >= 0.0) || !(nonneg >= 0.0) || !d.is_finite() {
            return Err(Error::InvalidInput(format!("invalid pulse {self:?}")));
        }
        Ok(())
    }
}

/// Same pulse at half the duration; squares to the original.
pub fn pulse_sqrt(p: &Pulse) -> Pulse {
    match *p {
        Pulse::Carrier(q) => Pulse::Carrier(CarrierPulse { duration: 0.5 * q.duration, ..q }),
        Pulse::Sideband(q) => Pulse::Sideband(SidebandPulse { duration: 0.5 * q.duration, ..q }),
        Pulse::General(q) => Pulse::General(GeneralPulse { duration: 0.5 * q.duration, ..q }),
    }
}

/// Pulse whose propagator is the inverse of `p`'s.
pub fn pulse_dagger(p: &Pulse) -> Pulse {
    match *p {
        Pulse::Carrier(q) => Pulse::Carrier(CarrierPulse {
            delta: -q.delta,
            phi: q.phi + PI,
            ..q
        }),
        Pulse::Sideband(q) => Pulse::Sideband(SidebandPulse {
            delta: -q.delta,
            beta: q.beta + PI,
            ..q
        }),
        Pulse::General(q) => Pulse::General(GeneralPulse {
            delta: -q.delta,
            phi: q.phi + PI,
            beta: q.beta + PI,
            ..q
        }),
    }
}

/// Rotation generated by a carrier pulse on every `h1_n`, in (↑, ↓) coordinates.
pub fn carrier_block(p: &CarrierPulse) -> Su2 {
    let t = p.duration;
    su2_exp([t * p.chi * p.phi.cos(), t * p.chi * p.phi.sin(), -t * p.delta])
}

/// Rotation generated by a sideband pulse on `h2_n`, in (|n−1↑⟩, |n↓⟩) coordinates.
///
/// Block 0 only uses its lower entry.
pub fn sideband_block(p: &SidebandPulse, n: usize) -> Su2 {
    let t = p.duration;
    let k = p.g * (n as f64).sqrt() * t;
    su2_exp([k * p.beta.cos(), k * p.beta.sin(), -t * p.delta])
}

/// Dense block-diagonal matrix from per-block 2×2 rotations.
///
/// Blocks missing a state keep the diagonal entry of the state that exists.
pub fn embed_blocks(family: Family, top: usize, block: impl Fn(usize) -> Su2) -> CMatrix {
    let d = dim(top);
    let mut m = CMatrix::zeros(d, d);
    let last = match family {
        Family::Carrier => top,
        Family::Sideband => top + 1,
    };
    for n in 0..=last {
        let b = block(n);
        let (u, l) = block_states(family, top, n);
        if let Some(u) = u {
            m[(u, u)] = b[(0, 0)];
        }
        if let Some(l) = l {
            m[(l, l)] = b[(1, 1)];
        }
        if let (Some(u), Some(l)) = (u, l) {
            m[(u, l)] = b[(0, 1)];
            m[(l, u)] = b[(1, 0)];
        }
    }
    m
}

/// Rotation of the truncated top block: the coupling to the dropped state vanishes.
fn truncated_sideband_block(p: &SidebandPulse, n: usize, top: usize) -> Su2 {
    if n == top + 1 {
        su2_exp([0.0, 0.0, -p.duration * p.delta])
    } else {
        sideband_block(p, n)
    }
}

pub fn propagate_carrier(top: usize, p: &CarrierPulse) -> CMatrix {
    let b = carrier_block(p);
    embed_blocks(Family::Carrier, top, |_| b)
}

pub fn propagate_sideband(top: usize, p: &SidebandPulse) -> CMatrix {
    embed_blocks(Family::Sideband, top, |n| truncated_sideband_block(p, n, top))
}

/// Hamiltonian of a general pulse on truncation `top`.
pub fn hamiltonian(top: usize, p: &GeneralPulse) -> CMatrix {
    use crate::hilbert::{idx, Spin};
    let d = dim(top);
    let mut h = CMatrix::zeros(d, d);
    let drive = c(0.5 * p.chi * p.phi.cos(), 0.5 * p.chi * p.phi.sin());
    for n in 0..=top {
        let (u, l) = (idx(n, Spin::Up), idx(n, Spin::Down));
        h[(u, u)] = c(-0.5 * p.delta, 0.0);
        h[(l, l)] = c(0.5 * p.delta, 0.0);
        // (cosφ σx + sinφ σy)/2 has ⟨↑|·|↓⟩ = e^{−iφ}/2.
        h[(u, l)] += drive.conj();
        h[(l, u)] += drive;
        if n >= 1 {
            let (up, lo) = (idx(n - 1, Spin::Up), idx(n, Spin::Down));
            let k = c(0.5 * p.g * (n as f64).sqrt(), 0.0) * crate::linalg::cis(p.beta);
            h[(lo, up)] += k;
            h[(up, lo)] += k.conj();
        }
    }
    h
}

pub fn propagate_general(top: usize, p: &GeneralPulse) -> CMatrix {
    HermitianEigen::new(&hamiltonian(top, p)).propagator(p.duration)
}

/// Propagator of a single-mode pulse.
pub fn propagate(top: usize, p: &Pulse) -> CMatrix {
    match p {
        Pulse::Carrier(q) => propagate_carrier(top, q),
        Pulse::Sideband(q) => propagate_sideband(top, q),
        Pulse::General(q) => propagate_general(top, q),
    }
}

/// Ordered pulse list; the first pulse is applied first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pulses(pulses: Vec<Pulse>) -> Self {
        Self { pulses }
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn push(&mut self, p: impl Into<Pulse>) {
        self.pulses.push(p.into());
    }

    /// Append `other`, which is applied after `self`.
    pub fn extend(&mut self, other: &PulseSequence) {
        self.pulses.extend_from_slice(&other.pulses);
    }

    pub fn repeated(&self, times: usize) -> PulseSequence {
        let mut pulses = Vec::with_capacity(self.len() * times);
        for _ in 0..times {
            pulses.extend_from_slice(&self.pulses);
        }
        PulseSequence { pulses }
    }

    /// Total duration in natural units.
    pub fn duration(&self) -> f64 {
        self.pulses.iter().map(Pulse::duration).sum()
    }

    /// Inverse sequence: reversed order, each pulse daggered.
    pub fn dagger(&self) -> PulseSequence {
        PulseSequence {
            pulses: self.pulses.iter().rev().map(pulse_dagger).collect(),
        }
    }

    /// Copy with every coupling moved to `mode`.
    pub fn on_mode(&self, mode: usize) -> PulseSequence {
        PulseSequence {
            pulses: self.pulses.iter().map(|p| p.with_mode(mode)).collect(),
        }
    }

    pub fn is_sideband_only(&self) -> bool {
        self.pulses.iter().all(|p| matches!(p, Pulse::Sideband(_)))
    }
}

impl From<CarrierPulse> for Pulse {
    fn from(p: CarrierPulse) -> Self {
        Pulse::Carrier(p)
    }
}

impl From<SidebandPulse> for Pulse {
    fn from(p: SidebandPulse) -> Self {
        Pulse::Sideband(p)
    }
}

impl From<GeneralPulse> for Pulse {
    fn from(p: GeneralPulse) -> Self {
        Pulse::General(p)
    }
}

/// Per-block rotations of a sideband-only sequence, blocks `0..=top + 1`.
pub fn sideband_sequence_blocks(top: usize, seq: &PulseSequence) -> Result<Vec<Su2>> {
    let mut blocks = vec![Su2::identity(); top + 2];
    for p in &seq.pulses {
        let Pulse::Sideband(q) = p else {
            return Err(Error::InvalidInput("expected a sideband-only sequence".into()));
        };
        for (n, b) in blocks.iter_mut().enumerate() {
            *b = truncated_sideband_block(q, n, top) * *b;
        }
    }
    Ok(blocks)
}

/// Propagator of a single-mode sequence on truncation `top`.
pub fn sequence_unitary(top: usize, seq: &PulseSequence) -> Result<CMatrix> {
    if let Some(m) = seq.pulses.iter().filter_map(Pulse::mode).find(|&m| m != 0) {
        return Err(Error::InvalidInput(format!(
            "pulse on mode {m} in a single-mode sequence; use the two-mode simulator"
        )));
    }
    if !seq.is_empty() && seq.is_sideband_only() {
        let blocks = sideband_sequence_blocks(top, seq)?;
        return Ok(embed_blocks(Family::Sideband, top, |n| blocks[n]));
    }
    let mut u = CMatrix::identity(dim(top), dim(top));
    let mut run: Option<Su2> = None;
    // Consecutive carriers are merged into one block rotation.
    for p in &seq.pulses {
        match p {
            Pulse::Carrier(q) => {
                let b = carrier_block(q);
                run = Some(run.map_or(b, |r| b * r));
            }
            other => {
                if let Some(r) = run.take() {
                    u = embed_blocks(Family::Carrier, top, |_| r) * u;
                }
                u = propagate(top, other) * u;
            }
        }
    }
    if let Some(r) = run {
        u = embed_blocks(Family::Carrier, top, |_| r) * u;
    }
    Ok(u)
}

/// Flat JSON form of a pulse; durations in units of `T_G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseRecord {
    pub kind: PulseKind,
    #[serde(default)]
    pub mode: usize,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Carrier,
    Sideband,
    General,
}

impl From<Pulse> for PulseRecord {
    fn from(p: Pulse) -> Self {
        let zero = PulseRecord {
            kind: PulseKind::Carrier,
            mode: 0,
            delta: 0.0,
            chi: 0.0,
            phi: 0.0,
            g: 0.0,
            beta: 0.0,
            duration: p.duration() / T_G,
        };
        match p {
            Pulse::Carrier(q) => PulseRecord {
                delta: q.delta,
                chi: q.chi,
                phi: q.phi,
                ..zero
            },
            Pulse::Sideband(q) => PulseRecord {
                kind: PulseKind::Sideband,
                mode: q.mode,
                delta: q.delta,
                g: q.g,
                beta: q.beta,
                ..zero
            },
            Pulse::General(q) => PulseRecord {
                kind: PulseKind::General,
                mode: q.mode,
                delta: q.delta,
                chi: q.chi,
                phi: q.phi,
                g: q.g,
                beta: q.beta,
                ..zero
            },
        }
    }
}

impl TryFrom<PulseRecord> for Pulse {
    type Error = Error;

    fn try_from(r: PulseRecord) -> Result<Self> {
        let duration = r.duration * T_G;
        let p = match r.kind {
            PulseKind::Carrier => Pulse::Carrier(CarrierPulse {
                delta: r.delta,
                chi: r.chi,
                phi: r.phi,
                duration,
            }),
            PulseKind::Sideband => Pulse::Sideband(SidebandPulse {
                mode: r.mode,
                g: r.g,
                delta: r.delta,
                beta: r.beta,
                duration,
            }),
            PulseKind::General => Pulse::General(GeneralPulse {
                mode: r.mode,
                delta: r.delta,
                chi: r.chi,
                phi: r.phi,
                g: r.g,
                beta: r.beta,
                duration,
            }),
        };
        p.validate()?;
        Ok(p)
    }
}

/// `true` if `m` is diagonal in sideband blocks up to `tol`.
pub fn is_sideband_block_diagonal(top: usize, m: &CMatrix, tol: f64) -> bool {
    let mut off = 0.0;
    for n in 0..=top + 1 {
        let p = crate::hilbert::proj_h2(top, n).expect("block in range");
        off += crate::linalg::frobenius(&(&p * m - m * &p)).powi(2);
    }
    off.sqrt() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{idx, proj_h1, proj_h2, spin_pauli, Axis, Spin};
    use crate::linalg::{commutator_norm, frobenius, identity, unitarity_defect, I};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let e = frobenius(&(a - b));
        assert!(e <= tol, "distance {e:.3e}");
    }

    #[test]
    fn carrier_pi_pulse_is_minus_i_sigma_x() {
        let top = 3;
        let p = CarrierPulse { chi: 1.0, duration: PI, ..Default::default() };
        let u = propagate_carrier(top, &p);
        close(&u, &(spin_pauli(top, Axis::X) * -I), 1e-12);
        assert!(unitarity_defect(&u) < 1e-12);
        close(&propagate_carrier(top, &CarrierPulse::default()), &identity(dim(top)), 0.0);
    }

    #[test]
    fn sideband_pi_pulse_moves_vacuum_up() {
        let top = 5;
        let p = SidebandPulse { g: 1.0, duration: PI, ..Default::default() };
        let u = propagate_sideband(top, &p);
        let v = u.column(idx(0, Spin::Up));
        assert!((v[idx(1, Spin::Down)] - (-I)).norm() < 1e-12);
        // √4·π = 2π on block 4.
        let p4 = proj_h2(top, 4).unwrap();
        close(&(&p4 * &u * &p4), &(-&p4), 1e-12);
    }

    #[test]
    fn detuning_only_sideband_is_diagonal() {
        let p = SidebandPulse { delta: 0.7, duration: 1.3, ..Default::default() };
        let u = propagate_sideband(3, &p);
        for i in 0..u.nrows() {
            for j in 0..u.ncols() {
                if i != j {
                    assert_eq!(u[(i, j)].norm(), 0.0);
                }
            }
        }
        // |0↓⟩ evolves under the restriction of −Δσz/2.
        assert!((u[(0, 0)] - crate::linalg::cis(-0.5 * 0.7 * 1.3)).norm() < 1e-14);
    }

    #[test]
    fn regimes_agree_with_general_propagator() {
        let top = 4;
        let s = SidebandPulse { g: 0.8, delta: -0.3, beta: 1.1, duration: 2.2, mode: 0 };
        let g = GeneralPulse { g: 0.8, delta: -0.3, beta: 1.1, duration: 2.2, ..Default::default() };
        close(&propagate_general(top, &g), &propagate_sideband(top, &s), 1e-12);
        let cp = CarrierPulse { chi: 0.6, delta: 0.4, phi: -0.9, duration: 1.7 };
        let g = GeneralPulse { chi: 0.6, delta: 0.4, phi: -0.9, duration: 1.7, ..Default::default() };
        close(&propagate_general(top, &g), &propagate_carrier(top, &cp), 1e-12);
    }

    #[test]
    fn excitation_number_conserved_without_carrier() {
        let top = 4;
        let g = GeneralPulse { g: 0.9, delta: 0.2, beta: 0.3, duration: 3.0, ..Default::default() };
        let u = propagate_general(top, &g);
        let a = crate::hilbert::annihilation(top);
        let up = (spin_pauli(top, Axis::Z) + identity(dim(top))) * c(0.5, 0.0);
        let num = a.adjoint() * &a + up;
        assert!(commutator_norm(&u, &num) < 1e-12);
    }

    #[test]
    fn block_structure_commutes_with_projectors() {
        let top = 4;
        let cu = propagate_carrier(top, &CarrierPulse { chi: 0.7, delta: 0.2, phi: 0.4, duration: 2.0 });
        let su = propagate_sideband(top, &SidebandPulse { g: 0.7, delta: 0.2, beta: 0.4, duration: 2.0, mode: 0 });
        for n in 0..=top {
            assert!(commutator_norm(&cu, &proj_h1(top, n).unwrap()) < 1e-12);
        }
        for n in 0..=top + 1 {
            assert!(commutator_norm(&su, &proj_h2(top, n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn sequence_ordering_and_inverse() {
        let top = 3;
        let p1: Pulse = SidebandPulse { g: 0.5, delta: 0.3, beta: 0.2, duration: 1.0, mode: 0 }.into();
        let p2: Pulse = CarrierPulse { chi: 0.9, delta: -0.1, phi: 1.0, duration: 0.8 }.into();
        let p3: Pulse = GeneralPulse { chi: 0.2, g: 1.0, delta: 0.5, phi: 0.1, beta: 2.0, duration: 0.6, mode: 0 }.into();
        let seq = PulseSequence::from_pulses(vec![p1, p2, p3]);
        let u = sequence_unitary(top, &seq).unwrap();
        let expect = propagate(top, &p3) * propagate(top, &p2) * propagate(top, &p1);
        close(&u, &expect, 1e-12);
        let mut round = seq.clone();
        round.extend(&seq.dagger());
        close(&sequence_unitary(top, &round).unwrap(), &identity(dim(top)), 1e-10);
        close(&sequence_unitary(top, &PulseSequence::new()).unwrap(), &identity(dim(top)), 0.0);
    }

    #[test]
    fn sqrt_and_dagger() {
        let top = 3;
        let pulses: [Pulse; 3] = [
            CarrierPulse { chi: 0.9, delta: -0.4, phi: 1.0, duration: 1.8 }.into(),
            SidebandPulse { g: 0.6, delta: 0.3, beta: -0.7, duration: 2.5, mode: 0 }.into(),
            SidebandPulse::default().into(),
        ];
        for p in &pulses {
            let u = propagate(top, p);
            let h = propagate(top, &pulse_sqrt(p));
            close(&(&h * &h), &u, 1e-12);
            close(&(propagate(top, &pulse_dagger(p)) * &u), &identity(dim(top)), 1e-12);
            close(&propagate(top, &pulse_dagger(&pulse_dagger(p))), &u, 1e-12);
        }
        let Pulse::Sideband(d) = pulse_dagger(&pulses[1]) else { unreachable!() };
        let Pulse::Sideband(b0) = pulse_dagger(&SidebandPulse { g: 1.0, delta: 0.2, ..Default::default() }.into()) else {
            unreachable!()
        };
        assert_eq!((d.delta, b0.beta), (-0.3, PI));
    }

    #[test]
    fn carrier_rotation_helper() {
        for (angle, axis) in [(1.2, [0.6, 0.8, 0.0]), (0.7, [0.0, 0.0, 1.0]), (2.0, [0.48, 0.0, -0.877_496_438_739_212_2])] {
            let p = CarrierPulse::rotation(angle, axis);
            let want = crate::linalg::su2_rotation(angle, axis);
            assert!(crate::linalg::su2_dist(&carrier_block(&p), &want) < 1e-12);
            assert!(p.chi <= G_MAX + 1e-15);
        }
    }

    #[test]
    fn json_round_trip_in_units_of_tg() {
        let seq = PulseSequence::from_pulses(vec![
            SidebandPulse { g: 1.0, duration: PI, beta: 0.5, ..Default::default() }.into(),
            CarrierPulse { chi: 1.0, duration: T_G, ..Default::default() }.into(),
        ]);
        let s = serde_json::to_string(&seq).unwrap();
        assert!(s.contains("\"duration\":0.5"));
        let back: PulseSequence = serde_json::from_str(&s).unwrap();
        assert_eq!(back, seq);
        let sparse: PulseSequence = serde_json::from_str(r#"[{"kind":"sideband","g":1,"duration":0.25}]"#).unwrap();
        assert_eq!(sparse.duration(), 0.25 * T_G);
        assert!(serde_json::from_str::<PulseSequence>(r#"[{"kind":"carrier","chi":-1}]"#).is_err());
    }
}
