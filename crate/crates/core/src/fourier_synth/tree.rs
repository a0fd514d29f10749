// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

use crate::error::Result;
use crate::hilbert::dim;
use crate::linalg::{CMatrix, Su2};
use crate::pulses::{sequence_unitary, sideband_sequence_blocks, Pulse, PulseSequence};

/// Pulse sequence with explicit repetition, so that sequences of millions of
/// pulses can be evaluated without being materialised.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceTree {
    Leaf(PulseSequence),
    /// Children in application order.
    Concat(Vec<SequenceTree>),
    Repeat(Box<SequenceTree>, usize),
}

impl SequenceTree {
    pub fn empty() -> Self {
        SequenceTree::Leaf(PulseSequence::new())
    }

    pub fn repeat(self, times: usize) -> Self {
        SequenceTree::Repeat(Box::new(self), times)
    }

    /// Number of pulses once flattened.
    pub fn len(&self) -> usize {
        match self {
            SequenceTree::Leaf(s) => s.len(),
            SequenceTree::Concat(c) => c.iter().map(SequenceTree::len).sum(),
            SequenceTree::Repeat(t, k) => t.len() * k,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        match self {
            SequenceTree::Leaf(s) => s.duration(),
            SequenceTree::Concat(c) => c.iter().map(SequenceTree::duration).sum(),
            SequenceTree::Repeat(t, k) => t.duration() * *k as f64,
        }
    }

    pub fn flatten(&self) -> PulseSequence {
        let mut out = PulseSequence::new();
        self.flatten_into(&mut out);
        out
    }

    fn flatten_into(&self, out: &mut PulseSequence) {
        match self {
            SequenceTree::Leaf(s) => out.extend(s),
            SequenceTree::Concat(c) => c.iter().for_each(|t| t.flatten_into(out)),
            SequenceTree::Repeat(t, k) => {
                let inner = t.flatten();
                for _ in 0..*k {
                    out.extend(&inner);
                }
            }
        }
    }

    /// Inverse: reversed order with every pulse daggered.
    pub fn dagger(&self) -> Self {
        match self {
            SequenceTree::Leaf(s) => SequenceTree::Leaf(s.dagger()),
            SequenceTree::Concat(c) => SequenceTree::Concat(c.iter().rev().map(SequenceTree::dagger).collect()),
            SequenceTree::Repeat(t, k) => SequenceTree::Repeat(Box::new(t.dagger()), *k),
        }
    }

    /// Per-block rotations (blocks `0..=top+1`) of a sideband-only tree.
    ///
    /// Repetitions are evaluated by sequential multiplication so the result
    /// matches the flattened sequence up to rounding.
    pub fn sideband_blocks(&self, top: usize) -> Result<Vec<Su2>> {
        match self {
            SequenceTree::Leaf(s) => sideband_sequence_blocks(top, s),
            SequenceTree::Concat(c) => {
                let mut acc = vec![Su2::identity(); top + 2];
                for t in c {
                    let b = t.sideband_blocks(top)?;
                    for (a, x) in acc.iter_mut().zip(b) {
                        *a = x * *a;
                    }
                }
                Ok(acc)
            }
            SequenceTree::Repeat(t, k) => {
                let b = t.sideband_blocks(top)?;
                let mut acc = vec![Su2::identity(); top + 2];
                for _ in 0..*k {
                    for (a, x) in acc.iter_mut().zip(&b) {
                        *a = x * *a;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Propagator on truncation `top`; repetitions use binary powers.
    pub fn unitary(&self, top: usize) -> Result<CMatrix> {
        match self {
            SequenceTree::Leaf(s) => sequence_unitary(top, s),
            SequenceTree::Concat(c) => c.iter().try_fold(CMatrix::identity(dim(top), dim(top)), |acc, t| Ok(t.unitary(top)? * acc)),
            SequenceTree::Repeat(t, k) => {
                let mut base = t.unitary(top)?;
                let mut acc = CMatrix::identity(dim(top), dim(top));
                let mut k = *k;
                while k > 0 {
                    if k & 1 == 1 {
                        acc = &base * acc;
                    }
                    base = &base * &base;
                    k >>= 1;
                }
                Ok(acc)
            }
        }
    }

    /// All pulses in the tree, with repetition collapsed.
    pub fn distinct_pulses(&self) -> Vec<Pulse> {
        match self {
            SequenceTree::Leaf(s) => s.pulses.clone(),
            SequenceTree::Concat(c) => c.iter().flat_map(SequenceTree::distinct_pulses).collect(),
            SequenceTree::Repeat(t, _) => t.distinct_pulses(),
        }
    }
}

impl From<PulseSequence> for SequenceTree {
    fn from(s: PulseSequence) -> Self {
        SequenceTree::Leaf(s)
    }
}
