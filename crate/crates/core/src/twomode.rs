// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Two oscillators sharing one spin, coupled one at a time.
//!
//! Basis ordering is mode 1 ⊗ mode 2 ⊗ spin. Pulse `mode` index 0 addresses
//! mode 1 and index 1 addresses mode 2.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blockopt::{scan_pulse_counts, Attempt, BlockAnsatz, BlockObjective, BlockTarget, DetuningAnsatz, ScanConfig};
use crate::error::{Error, Result};
use crate::hilbert::{dim, idx, BlockPart, Family, Spin};
use crate::linalg::{frobenius, CMatrix, Su2, I, ONE, ZERO};
use crate::metrics::{phase_min_error_dim, ErrorReport};
use crate::optim::LocalSearchConfig;
use crate::pulses::{embed_blocks, sequence_unitary, PulseSequence, G_MAX, T_G};

/// Truncations of the two modes, each holding a qudit in levels `0..=n_comp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoModeSpace {
    pub n_comp: usize,
    /// Highest level kept per mode.
    pub tops: [usize; 2],
}

impl TwoModeSpace {
    pub fn new(n_comp: usize, top1: usize, top2: usize) -> Result<Self> {
        if n_comp < 1 || top1 < n_comp || top2 < n_comp {
            return Err(Error::Config(format!(
                "need n_comp ≥ 1 and both truncations ≥ n_comp, got {n_comp}, {top1}, {top2}"
            )));
        }
        Ok(Self {
            n_comp,
            tops: [top1, top2],
        })
    }

    pub fn dim(&self) -> usize {
        2 * (self.tops[0] + 1) * (self.tops[1] + 1)
    }

    /// Qudit ⊗ qudit dimension `(N+1)²`.
    pub fn qudit_dim(&self) -> usize {
        (self.n_comp + 1) * (self.n_comp + 1)
    }

    pub fn index(&self, n1: usize, n2: usize, spin: Spin) -> usize {
        (n1 * (self.tops[1] + 1) + n2) * 2 + idx(0, spin)
    }

    /// Basis positions of `|n1, n2, ↓⟩` for `n1, n2 ≤ N`, in qudit order.
    pub fn spin_down_qudits(&self) -> Vec<usize> {
        let n = self.n_comp;
        (0..=n).flat_map(|a| (0..=n).map(move |b| (a, b))).map(|(a, b)| self.index(a, b, Spin::Down)).collect()
    }

    /// Lift a single-mode operator on `mode ⊗ spin` to the full space.
    pub fn embed(&self, mode: usize, op: &CMatrix) -> Result<CMatrix> {
        let top = *self.tops.get(mode).ok_or_else(|| Error::InvalidInput(format!("no mode {mode}")))?;
        if op.nrows() != dim(top) || op.ncols() != dim(top) {
            return Err(Error::InvalidInput(format!("operator for mode {mode} must be {}×{}", dim(top), dim(top))));
        }
        let other = self.tops[1 - mode] + 1;
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        let place = |n: usize, k: usize, s: usize| {
            let (n1, n2) = if mode == 0 { (n, k) } else { (k, n) };
            (n1 * (self.tops[1] + 1) + n2) * 2 + s
        };
        for (a, b) in (0..dim(top)).flat_map(|a| (0..dim(top)).map(move |b| (a, b))) {
            let z = op[(a, b)];
            if z == ZERO {
                continue;
            }
            for k in 0..other {
                m[(place(a / 2, k, a % 2), place(b / 2, k, b % 2))] = z;
            }
        }
        Ok(m)
    }

    /// Restriction of a full-space operator to the spin-down qudit ⊗ qudit subspace.
    pub fn spin_down_block(&self, u: &CMatrix) -> CMatrix {
        let s = self.spin_down_qudits();
        CMatrix::from_fn(s.len(), s.len(), |i, j| u[(s[i], s[j])])
    }
}

/// `CINC` on qudit ⊗ qudit: increments the `1 − control` mode modulo `N+1`
/// when the `control` mode holds `N`. Index order is `n1 (N+1) + n2`.
pub fn cinc_target_controlled(n_comp: usize, control: usize) -> CMatrix {
    let q = n_comp + 1;
    let mut m = CMatrix::zeros(q * q, q * q);
    for (a, b) in (0..q).flat_map(|a| (0..q).map(move |b| (a, b))) {
        let (a2, b2) = match (control, a, b) {
            (0, a, b) if a == n_comp => (a, (b + 1) % q),
            (1, a, b) if b == n_comp => ((a + 1) % q, b),
            _ => (a, b),
        };
        m[(a2 * q + b2, a * q + b)] = ONE;
    }
    m
}

/// `Σ_{n₁<N} |n₁⟩⟨n₁| ⊗ I + |N⟩⟨N| ⊗ Σ |n₂⊕1⟩⟨n₂|`.
pub fn cinc_target(n_comp: usize) -> CMatrix {
    cinc_target_controlled(n_comp, 0)
}

/// Rotation of the BUS gate on each `h2_n`: identity below `N`, `iσx` on block `N`.
pub fn bus_blocks(n_comp: usize) -> Vec<Su2> {
    let mut b = vec![Su2::identity(); n_comp + 1];
    b[n_comp] = Su2::new(ZERO, I, I, ZERO);
    b
}

/// BUS on one mode ⊗ spin at truncation `top ≥ N`, identity on blocks above `N`.
pub fn bus_target_on(n_comp: usize, top: usize) -> CMatrix {
    let b = bus_blocks(n_comp);
    embed_blocks(Family::Sideband, top, |j| b.get(j).copied().unwrap_or_else(Su2::identity))
}

pub fn bus_target(n_comp: usize) -> CMatrix {
    bus_target_on(n_comp, n_comp)
}

/// Block objective of a detuning-only BUS sequence over blocks `0..=N`.
pub fn bus_objective(n_comp: usize, pulses: usize, dt: f64) -> BlockObjective<DetuningAnsatz> {
    let targets = bus_blocks(n_comp)
        .into_iter()
        .enumerate()
        .map(|(j, target)| BlockTarget {
            block: j,
            target,
            part: if j == 0 { BlockPart::LowerOnly } else { BlockPart::Both },
        })
        .collect();
    BlockObjective {
        ansatz: DetuningAnsatz { pulses, duration: dt },
        targets,
        d_perp: 0.0,
        dim: (2 * n_comp + 1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusConfig {
    pub m_min: usize,
    pub m_max: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Required `ε⁽²⁾`.
    pub threshold: f64,
    /// Initial detunings are drawn from `±delta_max · g_max`.
    pub delta_max: f64,
    pub local: LocalSearchConfig,
}

impl Default for BusConfig {
    fn default() -> Self {
        Self {
            m_min: 1,
            m_max: 40,
            restarts: 20,
            seed: 0,
            threshold: 1e-4,
            delta_max: 2.0,
            local: LocalSearchConfig {
                max_iters: 2000,
                ..Default::default()
            },
        }
    }
}

/// Detuning-only BUS sequence with the fewest pulses reaching the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRun {
    pub n_comp: usize,
    pub dt: f64,
    pub pulses: usize,
    pub seed: u64,
    pub deltas: Vec<f64>,
    pub achieved_error: f64,
    pub threshold: f64,
    pub met_threshold: bool,
    pub wall_time_s: f64,
    pub iterate_log: Vec<Attempt>,
}

impl BusRun {
    /// Sequence on pulse mode index 0; see [`compose_cinc`] for the mode used there.
    pub fn sequence(&self) -> PulseSequence {
        DetuningAnsatz {
            pulses: self.pulses,
            duration: self.dt,
        }
        .sequence(&self.deltas)
    }

    pub fn duration(&self) -> f64 {
        self.pulses as f64 * self.dt
    }
}

pub fn optimize_bus(n_comp: usize, dt: f64, config: &BusConfig) -> Result<BusRun> {
    if n_comp < 1 || !(dt > 0.0) || !(config.threshold > 0.0) {
        return Err(Error::InvalidInput("need n_comp ≥ 1, dt > 0 and a positive threshold".into()));
    }
    let start = Instant::now();
    let scan = ScanConfig {
        m_min: config.m_min,
        m_max: config.m_max,
        restarts: config.restarts,
        seed: config.seed ^ (n_comp as u64) << 40,
        local: config.local,
    };
    let spread = config.delta_max * G_MAX;
    let init = |pulses: usize, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..pulses).map(|_| rng.random_range(-spread..=spread)).collect::<Vec<f64>>()
    };
    let (log, (a, x)) = scan_pulse_counts(&scan, config.threshold, |m| Ok(bus_objective(n_comp, m, dt)), init)?;
    Ok(BusRun {
        n_comp,
        dt,
        pulses: a.pulses,
        seed: a.seed,
        deltas: x,
        achieved_error: a.error,
        threshold: config.threshold,
        met_threshold: a.error <= config.threshold,
        wall_time_s: start.elapsed().as_secs_f64(),
        iterate_log: log,
    })
}

/// Reversed order with each pulse inverted (`Δ → −Δ`, `β → β + π`).
pub fn bus_dagger(seq: &PulseSequence) -> PulseSequence {
    seq.dagger()
}

/// Propagator of a two-mode sequence. Runs of pulses on one mode are simulated
/// on that mode's truncation and lifted; carrier pulses join the current run.
pub fn simulate_two_mode(space: &TwoModeSpace, seq: &PulseSequence) -> Result<CMatrix> {
    let mut u = CMatrix::identity(space.dim(), space.dim());
    let mut run = PulseSequence::new();
    let mut run_mode = 0;
    let flush = |run: &mut PulseSequence, mode: usize, u: &mut CMatrix| -> Result<()> {
        if !run.is_empty() {
            let op = sequence_unitary(space.tops[mode], &run.on_mode(0))?;
            *u = space.embed(mode, &op)? * &*u;
            *run = PulseSequence::new();
        }
        Ok(())
    };
    for p in &seq.pulses {
        match p.mode() {
            Some(m) if m > 1 => return Err(Error::InvalidInput(format!("pulse on mode {m}; only modes 0 and 1 exist"))),
            Some(m) if m != run_mode => {
                flush(&mut run, run_mode, &mut u)?;
                run_mode = m;
            }
            _ => {}
        }
        run.push(*p);
    }
    flush(&mut run, run_mode, &mut u)?;
    Ok(u)
}

/// Outcome of the spin-bus composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CincComposition {
    pub space: TwoModeSpace,
    pub sequence: PulseSequence,
    /// Error against CINC with mode 2 as control, on the spin-down qudit ⊗ qudit subspace.
    pub report: ErrorReport,
    /// Norm of the spin-down → spin-up part restricted to qudit inputs.
    pub cross_norm: f64,
    pub duration: f64,
}

impl CincComposition {
    pub fn error(&self) -> f64 {
        1.0 - self.report.fidelity
    }
}

/// Error of a two-mode propagator against CINC controlled by mode 2 on the
/// spin-down qudit ⊗ qudit subspace, and the norm of its spin-flipping part.
pub fn cinc_error(space: &TwoModeSpace, u: &CMatrix) -> (ErrorReport, f64) {
    let d = space.qudit_dim();
    let target = cinc_target_controlled(space.n_comp, 1);
    let report = phase_min_error_dim(d, &target, &space.spin_down_block(u), &CMatrix::identity(d, d));
    let cols = space.spin_down_qudits();
    let n = &space.tops;
    let ups: Vec<usize> = (0..=n[0])
        .flat_map(|a| (0..=n[1]).map(move |b| (a, b)))
        .map(|(a, b)| space.index(a, b, Spin::Up))
        .collect();
    let cross = CMatrix::from_fn(ups.len(), cols.len(), |i, j| u[(ups[i], cols[j])]);
    (report, frobenius(&cross))
}

/// `BUS†₂ CINC′₁ BUS₂`: BUS on mode 2 (pulse index 1), CINC′ on mode 1
/// (pulse index 0). With the spin starting in `↓` this is CINC controlled by
/// mode 2 and incrementing mode 1; spin-up inputs are outside the contract.
pub fn compose_cinc(space: &TwoModeSpace, bus: &PulseSequence, cinc_prime: &PulseSequence) -> Result<CincComposition> {
    let bus2 = bus.on_mode(1);
    let mut sequence = bus2.clone();
    sequence.extend(&cinc_prime.on_mode(0));
    sequence.extend(&bus_dagger(&bus2));
    let u = simulate_two_mode(space, &sequence)?;
    let (report, cross_norm) = cinc_error(space, &u);
    Ok(CincComposition {
        space: *space,
        duration: sequence.duration(),
        sequence,
        report,
        cross_norm,
    })
}

/// The composition with exact BUS and CINC′ operators; zero error up to rounding.
pub fn compose_exact(n_comp: usize) -> Result<ErrorReport> {
    let space = TwoModeSpace::new(n_comp, n_comp, n_comp + 1)?;
    let bus = space.embed(1, &bus_target_on(n_comp, n_comp + 1))?;
    let cp = space.embed(0, &crate::direct_numeric::cinc_prime_target(n_comp))?;
    let u = bus.adjoint() * cp * &bus;
    Ok(cinc_error(&space, &u).0)
}

/// Durations in units of `T_G`.
pub fn in_rabi_periods(t: f64) -> f64 {
    t / T_G
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;
    use crate::optim::Objective;
    use crate::pulses::{sideband_sequence_blocks, Pulse, SidebandPulse};

    #[test]
    fn cinc_is_a_permutation_with_expected_moves() {
        let n = 2;
        let q = n + 1;
        let m = cinc_target(n);
        assert_eq!(m[(0, 0)], ONE);
        assert_eq!(m[(n * q, n * q + n)], ONE);
        assert!(unitarity_defect(&m) < 1e-15);
        let swapped = cinc_target_controlled(n, 1);
        assert_eq!(swapped[(n, n * q + n)], ONE);
    }

    #[test]
    fn bus_target_structure() {
        let n = 3;
        let b = bus_target(n);
        assert_eq!(b[(idx(1, Spin::Down), idx(1, Spin::Down))], ONE);
        assert_eq!(b[(idx(n, Spin::Down), idx(n - 1, Spin::Up))], I);
        assert_eq!(b[(idx(n - 1, Spin::Up), idx(n, Spin::Down))], I);
        assert_eq!(b[(idx(n, Spin::Up), idx(n, Spin::Up))], ONE);
    }

    #[test]
    fn embedding_respects_the_tensor_order() {
        let space = TwoModeSpace::new(1, 1, 2).unwrap();
        let flip = bus_target_on(1, 2);
        let m = space.embed(1, &flip).unwrap();
        let a = space.index(1, 1, Spin::Down);
        let b = space.index(1, 0, Spin::Up);
        assert_eq!(m[(b, a)], I);
        let x = space.embed(0, &bus_target_on(1, 1)).unwrap();
        assert_eq!(x[(space.index(0, 2, Spin::Up), space.index(1, 2, Spin::Down))], I);
        assert!(unitarity_defect(&m) < 1e-15);
    }

    #[test]
    fn exact_composition_is_cinc() {
        for n in 1..=4 {
            let r = compose_exact(n).unwrap();
            assert!(r.raw_error < 1e-12, "N={n}: {}", r.raw_error);
        }
    }

    #[test]
    fn dagger_inverts() {
        let seq = PulseSequence::from_pulses(vec![
            Pulse::Sideband(SidebandPulse { mode: 1, g: 1.0, delta: 0.3, beta: 0.0, duration: 1.1 }),
            Pulse::Sideband(SidebandPulse { mode: 1, g: 1.0, delta: -0.7, beta: 0.0, duration: 1.1 }),
        ]);
        assert!(bus_dagger(&PulseSequence::new()).is_empty());
        let mut both = seq.clone();
        both.extend(&bus_dagger(&seq));
        let blocks = sideband_sequence_blocks(4, &both.on_mode(0)).unwrap();
        for b in blocks {
            assert!(crate::linalg::su2_dist(&b, &Su2::identity()) < 1e-13);
        }
    }

    #[test]
    fn bus_objective_is_zero_on_exact_blocks() {
        let obj = bus_objective(2, 1, 1.0);
        let blocks = bus_blocks(2);
        assert!(obj.value_of_blocks(&blocks).abs() < 1e-15);
        assert!(obj.eval(&[0.0], None) > 0.0);
    }

    #[test]
    fn bus_optimization_meets_threshold_and_composes() {
        let n = 2;
        let cfg = BusConfig::default();
        let run = optimize_bus(n, 0.5 * T_G, &cfg).unwrap();
        assert!(run.met_threshold, "{}", run.achieved_error);
        let again = optimize_bus(n, 0.5 * T_G, &cfg).unwrap();
        assert_eq!(run.deltas, again.deltas);
        // Exact CINC′ in place of a pulse sequence: the composed error is the BUS error alone.
        let space = TwoModeSpace::new(n, n, n + 1).unwrap();
        let bus = space.embed(1, &sequence_unitary(n + 1, &run.sequence()).unwrap()).unwrap();
        let cp = space.embed(0, &crate::direct_numeric::cinc_prime_target(n)).unwrap();
        let (r, cross) = cinc_error(&space, &(bus.adjoint() * cp * &bus));
        assert!(1.0 - r.fidelity < 10.0 * run.achieved_error, "{}", 1.0 - r.fidelity);
        assert!(cross < 1e-1);
    }
}
