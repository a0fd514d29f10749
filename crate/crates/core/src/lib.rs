// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Gate compilation for a spin coupled to one or two harmonic oscillators.
//!
//! [`law_eberly`] turns a qudit unitary into block rotations. [`fourier_synth`]
//! realises them with analytic pulse sequences, [`semi_analytic`] with
//! optimised V gates, and [`direct_numeric`] optimises piecewise controls for a
//! single target. [`twomode`] composes the two-qudit CINC gate.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockopt;
pub mod direct_numeric;
pub mod error;
pub mod fourier_synth;
pub mod hilbert;
pub mod law_eberly;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod pulses;
pub mod semi_analytic;
pub mod twomode;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/exact-compiler.md")]
    mod exact_compiler {}
    #[doc = include_str!("../../../book/src/analytic.md")]
    mod analytic {}
    #[doc = include_str!("../../../book/src/semi-analytic.md")]
    mod semi_analytic {}
    #[doc = include_str!("../../../book/src/direct-numeric.md")]
    mod direct_numeric {}
    #[doc = include_str!("../../../book/src/two-mode.md")]
    mod two_mode {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
