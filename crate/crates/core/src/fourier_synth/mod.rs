// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Analytic realisation of sideband-block unitaries from resonant sideband pulses.
//!
//! A block-diagonal target is split into x-y-x Euler rotations, the per-block
//! angles are expanded in a cosine series over the ladder, and each series term
//! is synthesised by conjugating short sideband pulses with a commutator-built
//! z-rotation. The [`bounds`] module holds the matching error and time bounds.

pub mod bounds;
mod euler;
mod pipeline;
mod sequences;
mod tree;

pub use bounds::{analytic_total_time, gate_counts, plan_pq, PlannedSynthesis, SynthesisPlan};
pub use euler::{dct_angles, euler_decompose, idct_angles, recompose, DctCoefficients, EulerAngleTable};
pub use sequences::{
    build_t_a, build_w_kl, build_w_pair, comp_block_distance, synthesize_blocks, synthesize_rotation,
    synthesize_u1, synthesize_u2, t_a_error, t_a_target, u2_error, w_kl_error, w_kl_target, U2Synthesis,
};
pub use pipeline::{compile_analytic, AnalyticCompilation, SynthesisRealizer};
pub use tree::SequenceTree;

pub use sequences::build_T_a;
