// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Semi-analytic synthesis: optimised sideband sequences for the target-independent
//! V gates, assembled into block rotations by exact conjugation identities.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::blockopt::Attempt;
use crate::blockopt::{scan_pulse_counts, BlockObjective, BlockTarget, CouplingAnsatz, ScanConfig};
use crate::error::{Error, Result};
use crate::fourier_synth::SequenceTree;
use crate::hilbert::{block_states, dim, opt_subspace_projector, Family};
use crate::law_eberly::{compile_with, rotation_slots, BlockRotation, BlockRotationProgram, Realizer};
use crate::linalg::{frobenius, su2_angle_axis, su2_exp, CMatrix, Su2, I, ZERO};
use crate::metrics::{comp_error, restrict};
use crate::optim::{restart_seed, LocalSearchConfig};
use crate::pulses::{
    carrier_block, embed_blocks, pulse_dagger, sequence_unitary, CarrierPulse, Pulse, PulseSequence, SidebandPulse,
    T_G,
};

/// Identifies one V gate `V⁽ᵃ⁾_{n,𝒩}` on a qudit with ceiling `n_comp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VGateSpec {
    /// 1 for carrier-family gates, 2 for sideband-family gates.
    pub family: u8,
    pub n: usize,
    /// Highest oscillator level held fixed; `-1` holds nothing.
    pub n_script: i64,
    pub n_comp: usize,
}

impl VGateSpec {
    pub fn new(family: Family, n: usize, n_script: i64, n_comp: usize) -> Result<Self> {
        let spec = Self {
            family: family.index(),
            n,
            n_script,
            n_comp,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn family(&self) -> Family {
        Family::from_index(self.family).expect("validated family")
    }

    pub fn validate(&self) -> Result<()> {
        Family::from_index(self.family)?;
        opt_subspace_projector(self.n_comp, self.family(), self.n, self.n_script).map(|_| ())
    }

    /// Stable key used by the V cache.
    pub fn key(&self) -> String {
        format!("a{}_n{}_s{}_N{}", self.family, self.n, self.n_script, self.n_comp)
    }
}

/// Rotation `e^{iπσ_z/2}` in block coordinates.
fn z_half_turn() -> Su2 {
    Su2::new(I, ZERO, ZERO, -I)
}

/// Target rotation of every sideband block `0..=N+1`.
///
/// Blocks outside the defined subspace are the identity.
pub fn v_gate_blocks(spec: &VGateSpec) -> Vec<Su2> {
    let big_n = spec.n_comp;
    let n = spec.n;
    let mut blocks = vec![Su2::identity(); big_n + 2];
    match spec.family() {
        Family::Carrier if n as i64 == spec.n_script + 1 => {
            // diag(−1, 1) on h1_n, i.e. −I on the sideband block above it.
            blocks[n + 1] = -Su2::identity();
        }
        Family::Carrier => {
            // diag(i, −i) on h1_n forces the same rotation on both sideband
            // blocks that share a state with it.
            blocks[n] = z_half_turn();
            blocks[n + 1] = z_half_turn();
        }
        Family::Sideband => blocks[n] = z_half_turn().adjoint(),
    }
    blocks
}

/// Exact V gate on the computational space.
pub fn v_gate_target(spec: &VGateSpec) -> CMatrix {
    let blocks = v_gate_blocks(spec);
    embed_blocks(Family::Sideband, spec.n_comp, |j| blocks[j])
}

/// Exact V gate on truncation `top ≥ N`, identity above the computational space.
pub fn v_gate_target_on(spec: &VGateSpec, top: usize) -> CMatrix {
    let blocks = v_gate_blocks(spec);
    embed_blocks(Family::Sideband, top, |j| blocks.get(j).copied().unwrap_or_else(Su2::identity))
}

/// The block objective optimised for a V gate.
pub fn v_gate_objective(spec: &VGateSpec, pulses: usize) -> Result<BlockObjective<CouplingAnsatz>> {
    let sub = opt_subspace_projector(spec.n_comp, spec.family(), spec.n, spec.n_script)?;
    let blocks = v_gate_blocks(spec);
    let targets = sub
        .blocks
        .iter()
        .map(|&j| BlockTarget {
            block: j,
            target: blocks[j],
            part: sub.part(spec.n_comp, j),
        })
        .collect();
    Ok(BlockObjective {
        ansatz: CouplingAnsatz {
            pulses,
            duration: 0.5 * T_G,
        },
        targets,
        d_perp: sub.d_perp as f64,
        dim: dim(spec.n_comp) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VOptConfig {
    pub m_min: usize,
    pub m_max: usize,
    /// Restarts per pulse count.
    pub restarts: usize,
    pub seed: u64,
    pub local: LocalSearchConfig,
}

impl Default for VOptConfig {
    fn default() -> Self {
        Self {
            m_min: 3,
            m_max: 40,
            restarts: 40,
            seed: 0,
            local: LocalSearchConfig {
                max_iters: 3000,
                ..Default::default()
            },
        }
    }
}

/// Coupling and phase of one optimised pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandControl {
    pub g: f64,
    pub beta: f64,
}

/// Result of optimising one V gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub spec: VGateSpec,
    /// Number of pulses `M`.
    pub pulses: usize,
    /// Seed of the winning restart.
    pub seed: u64,
    pub controls: Vec<SidebandControl>,
    pub achieved_error: f64,
    pub threshold: f64,
    pub met_threshold: bool,
    /// How the bound `g ≤ g_max` is enforced.
    pub parameterization: String,
    pub wall_time_s: f64,
    pub iterate_log: Vec<Attempt>,
}

impl OptimizationRun {
    /// Pulse duration, each pulse lasting `T_G / 2`.
    pub fn duration(&self) -> f64 {
        self.pulses as f64 * 0.5 * T_G
    }

    pub fn sequence(&self) -> PulseSequence {
        PulseSequence::from_pulses(
            self.controls
                .iter()
                .map(|c| {
                    Pulse::Sideband(SidebandPulse {
                        mode: 0,
                        g: c.g,
                        delta: 0.0,
                        beta: c.beta,
                        duration: 0.5 * T_G,
                    })
                })
                .collect(),
        )
    }
}

fn random_start(pulses: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pulses)
        .flat_map(|_| {
            let g: f64 = rng.random_range(0.0..1.0);
            let beta = rng.random_range(0.0..2.0 * PI);
            [CouplingAnsatz::param_for_coupling(g), beta]
        })
        .collect::<Vec<_>>()
}

/// Search pulse counts upward from `m_min`, with up to `restarts` random starts
/// each, until the subspace objective reaches `eps_threshold`.
///
/// The returned run records whether the threshold was met; on failure it holds
/// the best attempt seen.
pub fn optimize_v(spec: &VGateSpec, eps_threshold: f64, config: &VOptConfig) -> Result<OptimizationRun> {
    if !(eps_threshold > 0.0) {
        return Err(Error::InvalidInput("eps_threshold must be positive".into()));
    }
    spec.validate()?;
    let start = Instant::now();
    let base = restart_seed(config.seed, ((spec.family as u64) << 48) ^ ((spec.n as u64) << 32));
    let scan = ScanConfig {
        m_min: config.m_min,
        m_max: config.m_max,
        restarts: config.restarts,
        seed: base,
        local: config.local,
    };
    let (log, best) = scan_pulse_counts(&scan, eps_threshold, |m| v_gate_objective(spec, m), random_start)?;
    let (a, x) = best;
    let controls = (0..a.pulses)
        .map(|m| SidebandControl {
            g: CouplingAnsatz::coupling(x[2 * m]),
            beta: x[2 * m + 1].rem_euclid(2.0 * PI),
        })
        .collect();
    Ok(OptimizationRun {
        spec: *spec,
        pulses: a.pulses,
        seed: a.seed,
        controls,
        achieved_error: a.error,
        threshold: eps_threshold,
        met_threshold: a.error <= eps_threshold,
        parameterization: "g = g_max sin^2(x)".into(),
        wall_time_s: start.elapsed().as_secs_f64(),
        iterate_log: log,
    })
}

/// V-gate threshold `η / g_sa(N)²` for a requested gate error `η`.
pub fn eps_threshold(n_comp: usize, eta: f64) -> f64 {
    let g = crate::fourier_synth::gate_counts(n_comp).1 as f64;
    eta / (g * g)
}

/// One factor of an assembled block rotation, in application order.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Pulses(PulseSequence),
    V { spec: VGateSpec, dagger: bool },
}

/// V gate a block rotation is conjugated with.
pub fn v_spec_for(n_comp: usize, rot: &BlockRotation) -> Result<VGateSpec> {
    VGateSpec::new(rot.family(), rot.block, rot.identity_through.unwrap_or(-1), n_comp)
}

/// Factors realising `rot` from pulses and one V gate.
///
/// In-plane axes use `V† √Ũ† V √Ũ`; axes with a z-component are first tilted
/// into the plane by an x rotation `Ũ′`, giving `Ũ′† V† √Ũ† V √Ũ Ũ′`. For the
/// carrier family `√Ũ Ũ′` merges into one pulse. An identity rotation gives no
/// factors.
pub fn assembly_segments(n_comp: usize, rot: &BlockRotation) -> Result<Vec<Segment>> {
    let spec = v_spec_for(n_comp, rot)?;
    let norm = rot.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
    if rot.angle == 0.0 || norm == 0.0 {
        return Ok(Vec::new());
    }
    let sign = rot.angle.signum();
    let theta = rot.angle.abs();
    let m = rot.axis.map(|a| sign * a / norm);
    let tilted = m[2].abs() > 1e-14;
    // Ũ lies in the xy-plane at angle ν; Ũ′ = e^{iησx/2} rotates it onto m.
    let (nu, eta) = if tilted {
        (m[1].hypot(m[2]).atan2(m[0]), m[2].atan2(m[1]))
    } else {
        (m[1].atan2(m[0]), 0.0)
    };
    let seq = |p: Vec<Pulse>| Segment::Pulses(PulseSequence::from_pulses(p));
    let v = |dagger| Segment::V { spec, dagger };
    let mut out = Vec::new();
    match rot.family() {
        Family::Carrier => {
            let half = CarrierPulse::rotation(0.5 * theta, [nu.cos(), nu.sin(), 0.0]);
            if tilted {
                let tilt = su2_exp([-eta, 0.0, 0.0]);
                let (a, axis) = su2_angle_axis(&(carrier_block(&half) * tilt));
                out.push(seq(vec![CarrierPulse::rotation(a, axis).into()]));
            } else {
                out.push(seq(vec![half.into()]));
            }
            out.push(v(false));
            out.push(seq(vec![pulse_dagger(&half.into())]));
            out.push(v(true));
            if tilted {
                out.push(seq(vec![CarrierPulse::rotation(eta, [1.0, 0.0, 0.0]).into()]));
            }
        }
        Family::Sideband => {
            let s = (rot.block as f64).sqrt();
            let half: Pulse = SidebandPulse::resonant(0, 0.5 * theta / s, nu).into();
            let tilt: Pulse = SidebandPulse::resonant(0, -eta / s, 0.0).into();
            if tilted {
                out.push(seq(vec![tilt]));
            }
            out.push(seq(vec![half]));
            out.push(v(false));
            out.push(seq(vec![pulse_dagger(&half)]));
            out.push(v(true));
            if tilted {
                out.push(seq(vec![pulse_dagger(&tilt)]));
            }
        }
    }
    Ok(out)
}

/// Sequence realising `rot`, with each V gate taken from `v_sequence`.
pub fn assemble_u(
    n_comp: usize,
    rot: &BlockRotation,
    mut v_sequence: impl FnMut(&VGateSpec) -> Result<SequenceTree>,
) -> Result<SequenceTree> {
    let segments = assembly_segments(n_comp, rot)?;
    let mut v_tree = None;
    let mut parts = Vec::with_capacity(segments.len());
    for s in segments {
        match s {
            Segment::Pulses(p) => parts.push(SequenceTree::Leaf(p)),
            Segment::V { spec, dagger } => {
                if v_tree.is_none() {
                    v_tree = Some(v_sequence(&spec)?);
                }
                let t = v_tree.as_ref().expect("set above");
                parts.push(if dagger { t.dagger() } else { t.clone() });
            }
        }
    }
    Ok(SequenceTree::Concat(parts))
}

/// Operator of the assembled factors on truncation `top` with exact V gates.
pub fn assemble_exact(top: usize, n_comp: usize, rot: &BlockRotation) -> Result<CMatrix> {
    let d = dim(top);
    let mut u = CMatrix::identity(d, d);
    for s in assembly_segments(n_comp, rot)? {
        let f = match s {
            Segment::Pulses(p) => sequence_unitary(top, &p)?,
            Segment::V { spec, dagger: false } => v_gate_target_on(&spec, top),
            Segment::V { spec, dagger: true } => v_gate_target_on(&spec, top).adjoint(),
        };
        u = f * u;
    }
    Ok(u)
}

/// Largest violation of the properties an assembled rotation must have, with
/// exact V gates: identity on the held-fixed blocks, `rot` on its own block,
/// and no coupling out of the computational space.
pub fn assembly_defect(n_comp: usize, rot: &BlockRotation) -> Result<f64> {
    let u = restrict(&assemble_exact(n_comp + 1, n_comp, rot)?, dim(n_comp));
    let d = dim(n_comp);
    let leak = frobenius(&(u.adjoint() * &u - CMatrix::identity(d, d)));
    let fam = rot.family();
    let ns = rot.identity_through.unwrap_or(-1);
    let mut fixed = Vec::new();
    for j in 0..=ns.max(-1) {
        let (a, b) = block_states(fam, n_comp, j as usize);
        fixed.extend(a.into_iter().chain(b));
    }
    let mut worst = leak;
    for &k in &fixed {
        let mut col = u.column(k).clone_owned();
        col[k] -= 1.0;
        worst = worst.max(col.norm());
    }
    let want = rot.matrix();
    let (a, b) = block_states(fam, n_comp, rot.block);
    let states = [a, b];
    for (r, sr) in states.iter().enumerate() {
        for (c, sc) in states.iter().enumerate() {
            if let (Some(i), Some(k)) = (sr, sc) {
                worst = worst.max((u[(*i, *k)] - want[(r, c)]).norm());
            }
        }
    }
    Ok(worst)
}

/// Every distinct V gate a compile on `n_comp` uses.
pub fn required_specs(n_comp: usize) -> Vec<VGateSpec> {
    let mut specs: Vec<VGateSpec> = rotation_slots(n_comp)
        .into_iter()
        .map(|(f, j, ns)| VGateSpec::new(f, j, ns, n_comp).expect("compiler slots are valid V gates"))
        .collect();
    specs.sort();
    specs.dedup();
    specs
}

/// Optimised V gates keyed by [`VGateSpec::key`], persisted as JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VCache {
    pub runs: BTreeMap<String, OptimizationRun>,
}

impl VCache {
    /// Read a cache file; a missing file gives an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(s) => serde_json::from_str(&s)
                .map_err(|e| Error::Config(format!("V cache {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Write through a temporary file and rename, so readers never see a partial cache.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let body = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn get(&self, spec: &VGateSpec) -> Option<&OptimizationRun> {
        self.runs.get(&spec.key())
    }

    pub fn insert(&mut self, run: OptimizationRun) {
        self.runs.insert(run.spec.key(), run);
    }

    /// Cached run if it meets `eps_threshold`, otherwise a fresh optimisation,
    /// which replaces the cached one when it is better.
    pub fn get_or_optimize(
        &mut self,
        spec: &VGateSpec,
        eps_threshold: f64,
        config: &VOptConfig,
    ) -> Result<OptimizationRun> {
        if let Some(r) = self.get(spec).filter(|r| r.achieved_error <= eps_threshold) {
            return Ok(r.clone());
        }
        let run = optimize_v(spec, eps_threshold, config)?;
        if self.get(spec).map_or(true, |old| run.achieved_error < old.achieved_error) {
            self.insert(run.clone());
        }
        Ok(run)
    }
}

/// Where assembled rotations take their V gates from.
pub enum VSource<'a> {
    Exact,
    Optimized(&'a BTreeMap<VGateSpec, PulseSequence>),
}

/// Realises compiler rotations by assembly and records the pulses.
pub struct AssemblyRealizer<'a> {
    pub source: VSource<'a>,
    pub sequence: PulseSequence,
}

impl Realizer for AssemblyRealizer<'_> {
    fn apply(&mut self, n_comp: usize, rot: &BlockRotation) -> Result<CMatrix> {
        let top = n_comp + 1;
        let u = match &self.source {
            VSource::Exact => assemble_exact(top, n_comp, rot)?,
            VSource::Optimized(map) => {
                let tree = assemble_u(n_comp, rot, |spec| {
                    map.get(spec)
                        .cloned()
                        .map(SequenceTree::Leaf)
                        .ok_or_else(|| Error::InvalidInput(format!("no V gate for {}", spec.key())))
                })?;
                let seq = tree.flatten();
                let u = sequence_unitary(top, &seq)?;
                self.sequence.extend(&seq);
                u
            }
        };
        Ok(restrict(&u, dim(n_comp)))
    }
}

/// Outcome of a semi-analytic compile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaCompilation {
    pub n_comp: usize,
    pub program: BlockRotationProgram,
    pub sequence: PulseSequence,
    /// Phase-minimised error on the computational space, measured on `measure_top`.
    pub eta: f64,
    pub fidelity: f64,
    pub measure_top: usize,
    /// Keys of the V gates used.
    pub v_gates: Vec<String>,
    /// Worst V-gate objective among those used.
    pub worst_v_error: f64,
}

impl SaCompilation {
    pub fn duration(&self) -> f64 {
        self.sequence.duration()
    }
}

/// Compile `target` with optimised V gates taken from `runs`.
///
/// The rotation of every step is recomputed from the operator actually realised
/// so far, so V-gate imperfections outside the held-fixed levels are absorbed.
/// The result is simulated on truncation `N + 4`.
pub fn compile_gate_sa(n_comp: usize, target: &CMatrix, runs: &[OptimizationRun]) -> Result<SaCompilation> {
    let map: BTreeMap<VGateSpec, PulseSequence> = runs.iter().map(|r| (r.spec, r.sequence())).collect();
    let needed = required_specs(n_comp);
    if let Some(missing) = needed.iter().find(|s| !map.contains_key(s)) {
        return Err(Error::InvalidInput(format!("missing V gate {}", missing.key())));
    }
    let mut realizer = AssemblyRealizer {
        source: VSource::Optimized(&map),
        sequence: PulseSequence::new(),
    };
    let (program, _) = compile_with(n_comp, target, &mut realizer)?;
    let sequence = realizer.sequence;
    let measure_top = n_comp + 4;
    let u = restrict(&sequence_unitary(measure_top, &sequence)?, dim(n_comp));
    let report = comp_error(n_comp, target, &u);
    let worst_v_error = runs
        .iter()
        .filter(|r| needed.contains(&r.spec))
        .map(|r| r.achieved_error)
        .fold(0.0, f64::max);
    Ok(SaCompilation {
        n_comp,
        program,
        sequence,
        eta: report.eta,
        fidelity: report.fidelity,
        measure_top,
        v_gates: needed.iter().map(VGateSpec::key).collect(),
        worst_v_error,
    })
}

/// Compile `target` through the assembly with exact V gates and return the
/// realised operator; equals `target` up to phase when the identities hold.
pub fn compile_exact_assembly(n_comp: usize, target: &CMatrix) -> Result<(BlockRotationProgram, CMatrix)> {
    let mut realizer = AssemblyRealizer {
        source: VSource::Exact,
        sequence: PulseSequence::new(),
    };
    compile_with(n_comp, target, &mut realizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;
    use crate::metrics::comp_error;
    use rand::SeedableRng;

    #[test]
    fn v_gate_blocks_match_definition() {
        let s = VGateSpec::new(Family::Carrier, 2, 1, 3).unwrap();
        let b = v_gate_blocks(&s);
        assert_eq!(b[3], -Su2::identity());
        assert!(b.iter().enumerate().all(|(j, m)| j == 3 || *m == Su2::identity()));
        let s = VGateSpec::new(Family::Carrier, 3, 1, 3).unwrap();
        let b = v_gate_blocks(&s);
        assert_eq!(b[3], z_half_turn());
        assert_eq!(b[4], z_half_turn());
        let s = VGateSpec::new(Family::Sideband, 2, 0, 3).unwrap();
        assert_eq!(v_gate_blocks(&s)[2], z_half_turn().adjoint());
        assert!(VGateSpec::new(Family::Sideband, 0, -1, 3).is_err());
        assert!(VGateSpec::new(Family::Carrier, 2, 2, 3).is_err());
    }

    #[test]
    fn exact_targets_have_zero_objective() {
        for spec in required_specs(3) {
            let obj = v_gate_objective(&spec, 1).unwrap();
            let tgt = v_gate_blocks(&spec);
            let blocks: Vec<Su2> = (0..=4).map(|j| tgt[j]).collect();
            assert!(obj.value_of_blocks(&blocks) < 1e-15, "{}", spec.key());
        }
    }

    #[test]
    fn distinct_v_gate_counts() {
        for n in 1..=5 {
            let specs = required_specs(n);
            let f1 = specs.iter().filter(|s| s.family == 1).count();
            let f2 = specs.iter().filter(|s| s.family == 2).count();
            assert_eq!(f1, (n + 1) * (n + 2) / 2);
            assert_eq!(f2, n * (n + 1) / 2);
        }
    }

    #[test]
    fn assembly_identities_hold_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n_comp in 1..=4 {
            for (f, j, ns) in rotation_slots(n_comp) {
                for tilted in [false, true] {
                    let z = if tilted { rng.random_range(-1.0..1.0) } else { 0.0 };
                    let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let r = (x * x + y * y + z * z).sqrt();
                    let rot = BlockRotation {
                        family: f.index(),
                        block: j,
                        angle: rng.random_range(-3.0..3.0),
                        axis: [x / r, y / r, z / r],
                        identity_through: Some(ns),
                    };
                    let d = assembly_defect(n_comp, &rot).unwrap();
                    assert!(d < 1e-12, "N={n_comp} {f:?} j={j} 𝒩={ns}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn exact_assembly_compiles_random_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n_comp in 1..=3 {
            let target = haar_unitary(dim(n_comp), &mut rng);
            let (program, realised) = compile_exact_assembly(n_comp, &target).unwrap();
            assert!(comp_error(n_comp, &target, &realised).raw_error < 1e-10);
            assert_eq!(program.len(), crate::law_eberly::layer_count(n_comp));
        }
    }

    #[test]
    fn cache_round_trip() {
        let spec = VGateSpec::new(Family::Sideband, 1, 0, 1).unwrap();
        let cfg = VOptConfig {
            m_min: 4,
            m_max: 6,
            restarts: 4,
            ..Default::default()
        };
        let mut cache = VCache::default();
        let run = cache.get_or_optimize(&spec, 1e-6, &cfg).unwrap();
        assert!(run.met_threshold);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("v.json");
        cache.save(&path).unwrap();
        let back = VCache::load(&path).unwrap();
        assert_eq!(back, cache);
        assert!(VCache::load(&dir.path().join("none.json")).unwrap().runs.is_empty());
        // The stored controls reproduce the recorded objective.
        let obj = v_gate_objective(&spec, run.pulses).unwrap();
        let blocks = crate::pulses::sideband_sequence_blocks(2, &run.sequence()).unwrap();
        assert!((obj.value_of_blocks(&blocks) - run.achieved_error).abs() < 1e-9);
    }

    #[test]
    fn thresholds() {
        assert_eq!(eps_threshold(2, 1e-4), 1e-4 / 900.0);
    }
}
