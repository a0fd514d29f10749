// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hilbert::dim;
use crate::law_eberly::{compile_with, BlockRotation, BlockRotationProgram, Realizer};
use crate::linalg::CMatrix;
use crate::metrics::{comp_error, restrict};

use super::bounds::SynthesisPlan;
use super::sequences::synthesize_rotation;
use super::tree::SequenceTree;

/// Realises compiler rotations with analytic sequences at a fixed plan.
pub struct SynthesisRealizer {
    pub plan: SynthesisPlan,
    /// Truncation on which each realised rotation is simulated.
    pub top: usize,
    pub parts: Vec<SequenceTree>,
}

impl Realizer for SynthesisRealizer {
    fn apply(&mut self, n_comp: usize, rot: &BlockRotation) -> Result<CMatrix> {
        let tree = synthesize_rotation(n_comp, rot, &self.plan)?;
        let u = tree.unitary(self.top)?;
        self.parts.push(tree);
        Ok(restrict(&u, dim(n_comp)))
    }
}

/// Outcome of a fully analytic compile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCompilation {
    pub n_comp: usize,
    pub p: f64,
    pub q: f64,
    pub program: BlockRotationProgram,
    pub pulses: usize,
    pub duration: f64,
    /// Phase-minimised error on the computational space, measured on `measure_top`.
    pub eta: f64,
    pub raw_error: f64,
    pub fidelity: f64,
    pub measure_top: usize,
    #[serde(skip)]
    pub sequence: Option<SequenceTree>,
}

/// Compile `target` with every rotation synthesised at `plan`, adapting each
/// step to the operator realised so far. The result is simulated on `N + 4`.
pub fn compile_analytic(n_comp: usize, target: &CMatrix, plan: &SynthesisPlan) -> Result<AnalyticCompilation> {
    let mut realizer = SynthesisRealizer {
        plan: *plan,
        top: n_comp + 1,
        parts: Vec::new(),
    };
    let (program, _) = compile_with(n_comp, target, &mut realizer)?;
    let tree = SequenceTree::Concat(realizer.parts);
    let measure_top = n_comp + 4;
    let report = comp_error(n_comp, target, &tree.unitary(measure_top)?);
    Ok(AnalyticCompilation {
        n_comp,
        p: plan.p,
        q: plan.q,
        program,
        pulses: tree.len(),
        duration: tree.duration(),
        eta: report.eta,
        raw_error: report.raw_error,
        fidelity: report.fidelity,
        measure_top,
        sequence: Some(tree),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;
    use rand::SeedableRng;

    #[test]
    fn analytic_compile_converges() {
        let n = 1;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let target = haar_unitary(dim(n), &mut rng);
        let err = |p, q| compile_analytic(n, &target, &SynthesisPlan::new(p, q).unwrap()).unwrap();
        let (coarse, fine) = (err(2, 40), err(4, 320));
        assert!(fine.eta < 0.3 * coarse.eta, "{} -> {}", coarse.eta, fine.eta);
        assert!(fine.duration > coarse.duration);
        assert_eq!(fine.program.len(), crate::law_eberly::layer_count(n));
    }
}
