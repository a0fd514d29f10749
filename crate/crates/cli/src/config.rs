// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configurations. Times are in units of `T_g`.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use jcpulse::direct_numeric::cinc_prime_target;
use jcpulse::hilbert::dim;
use jcpulse::linalg::{c, haar_unitary, identity, unitarity_defect, CMatrix};
use jcpulse::pulses::Pulse;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Field-path-aware validation run after parsing.
pub trait Validate {
    fn validate(&self) -> Result<(), CliError>;
}

/// Parse `raw` into `T`, reporting the path of the first offending field.
pub fn parse<T: DeserializeOwned + Validate>(raw: &serde_json::Value) -> Result<T, CliError> {
    match raw.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(CliError::config("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(CliError::config("schema_version", "missing field")),
    }
    let cfg: T = serde_path_to_error::deserialize(raw).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a JSON file, mapping failures to configuration errors on `label`.
pub fn read_json(path: &Path, label: &str) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(label, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(label, format!("{}: {e}", path.display())))
}

fn check(ok: bool, path: impl Into<String>, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, msg))
    }
}

fn positive(x: f64, path: &str) -> Result<(), CliError> {
    check(x > 0.0 && x.is_finite(), path, format!("must be positive and finite, got {x}"))
}

fn n_comp_ok(n: usize, path: &str) -> Result<(), CliError> {
    check((1..=12).contains(&n), path, format!("must be in 1..=12, got {n}"))
}

/// Gate to compile or compare against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// Haar-random unitary; the seed defaults to the run seed.
    Haar {
        #[serde(default)]
        seed: Option<u64>,
    },
    // Empty braces make `deny_unknown_fields` apply to these variants.
    Identity {},
    CincPrime {},
    /// Explicit matrix on the computational space, row-major.
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl TargetConfig {
    pub fn label(&self) -> &'static str {
        match self {
            TargetConfig::Haar { .. } => "haar",
            TargetConfig::Identity {} => "identity",
            TargetConfig::CincPrime {} => "cinc_prime",
            TargetConfig::Matrix { .. } => "matrix",
        }
    }

    pub fn build(&self, n_comp: usize, run_seed: u64, path: &str) -> Result<CMatrix, CliError> {
        let d = dim(n_comp);
        let m = match self {
            TargetConfig::Haar { seed } => haar_unitary(d, &mut ChaCha8Rng::seed_from_u64(seed.unwrap_or(run_seed))),
            TargetConfig::Identity {} => identity(d),
            TargetConfig::CincPrime {} => cinc_prime_target(n_comp),
            TargetConfig::Matrix { re, im } => {
                let shape_ok = re.len() == d && im.len() == d && re.iter().chain(im).all(|r| r.len() == d);
                check(shape_ok, format!("{path}.re"), format!("re and im must both be {d}×{d}"))?;
                let m = CMatrix::from_fn(d, d, |i, j| c(re[i][j], im[i][j]));
                let defect = unitarity_defect(&m);
                check(defect < 1e-8, path, format!("matrix is not unitary (defect {defect:.2e})"))?;
                m
            }
        };
        Ok(m)
    }
}

fn default_restarts_cinc() -> usize {
    20
}
fn default_weight() -> f64 {
    jcpulse::metrics::DEFAULT_LEAKAGE_WEIGHT
}
fn default_iters() -> u64 {
    3000
}
fn default_eta() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeTops {
    pub top1: usize,
    pub top2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub n_comp: usize,
    /// Truncation; defaults to `n_comp + 4`.
    #[serde(default)]
    pub top: Option<usize>,
    /// Pulse-sequence JSON file, relative to the config file.
    #[serde(default)]
    pub sequence: Option<PathBuf>,
    #[serde(default)]
    pub pulses: Option<Vec<Pulse>>,
    /// Simulate two modes sharing the spin and compare against CINC.
    #[serde(default)]
    pub two_mode: Option<TwoModeTops>,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    /// Exit with status 1 when the error exceeds this.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Validate for SimulateConfig {
    fn validate(&self) -> Result<(), CliError> {
        n_comp_ok(self.n_comp, "n_comp")?;
        check(self.sequence.is_some() != self.pulses.is_some(), "sequence", "give exactly one of `sequence` and `pulses`")?;
        if let Some(top) = self.top {
            check(top >= self.n_comp, "top", "must be at least n_comp")?;
        }
        if let Some(t) = self.two_mode {
            check(t.top1 >= self.n_comp, "two_mode.top1", "must be at least n_comp")?;
            check(t.top2 >= self.n_comp, "two_mode.top2", "must be at least n_comp")?;
            check(self.target.is_none(), "target", "two-mode runs always compare against CINC")?;
        }
        if let Some(t) = self.threshold {
            positive(t, "threshold")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub p: u64,
    pub q: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileAnalyticConfig {
    pub schema_version: u32,
    pub n_comp: usize,
    pub target: TargetConfig,
    /// Executed `(P, Q)` plans.
    pub plans: Vec<PlanConfig>,
    /// Gate error for the bound-optimal plan in the bounds table.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Validate for CompileAnalyticConfig {
    fn validate(&self) -> Result<(), CliError> {
        n_comp_ok(self.n_comp, "n_comp")?;
        check(!self.plans.is_empty(), "plans", "at least one plan is required")?;
        for (i, p) in self.plans.iter().enumerate() {
            check(p.p >= 1 && p.q >= 1, format!("plans[{i}]"), "p and q must be at least 1")?;
            check((p.p as f64) * (p.q as f64) <= 1e7, format!("plans[{i}]"), "p·q above 1e7 is not executable")?;
        }
        positive(self.eta, "eta")?;
        if let Some(t) = self.threshold {
            positive(t, "threshold")?;
        }
        Ok(())
    }
}

/// Pulse-count scan settings for sideband optimisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "SearchConfig::m_min")]
    pub m_min: usize,
    #[serde(default = "SearchConfig::m_max")]
    pub m_max: usize,
    #[serde(default = "SearchConfig::restarts")]
    pub restarts: usize,
    #[serde(default = "default_iters")]
    pub max_iters: u64,
}

impl SearchConfig {
    fn m_min() -> usize {
        3
    }
    fn m_max() -> usize {
        24
    }
    fn restarts() -> usize {
        40
    }

    fn validate(&self, path: &str) -> Result<(), CliError> {
        check(self.m_min >= 1 && self.m_min <= self.m_max, format!("{path}.m_min"), "need 1 ≤ m_min ≤ m_max")?;
        check(self.restarts >= 1, format!("{path}.restarts"), "must be at least 1")?;
        check(self.max_iters >= 1, format!("{path}.max_iters"), "must be at least 1")
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            m_min: Self::m_min(),
            m_max: Self::m_max(),
            restarts: Self::restarts(),
            max_iters: default_iters(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VCell {
    pub family: u8,
    pub n_comp: usize,
    pub n: usize,
    pub n_script: i64,
}

/// `V⁽ᵃ⁾_{N, N−k}` for every `N` and offset `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VSweep {
    #[serde(default = "VSweep::family")]
    pub family: u8,
    pub n_comp: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl VSweep {
    fn family() -> u8 {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeVConfig {
    pub schema_version: u32,
    /// Gate error the V thresholds are derived from.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub cells: Vec<VCell>,
    #[serde(default)]
    pub sweep: Option<VSweep>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub seed: u64,
}

impl OptimizeVConfig {
    pub fn all_cells(&self) -> Vec<VCell> {
        let mut cells = self.cells.clone();
        if let Some(s) = &self.sweep {
            for &n in &s.n_comp {
                for &k in &s.offsets {
                    cells.push(VCell {
                        family: s.family,
                        n_comp: n,
                        n,
                        n_script: n as i64 - k as i64,
                    });
                }
            }
        }
        cells
    }
}

impl Validate for OptimizeVConfig {
    fn validate(&self) -> Result<(), CliError> {
        positive(self.eta, "eta")?;
        self.search.validate("search")?;
        check(!self.all_cells().is_empty(), "cells", "give `cells` or a non-empty `sweep`")?;
        for (i, c) in self.cells.iter().enumerate() {
            jcpulse::semi_analytic::VGateSpec::new(
                jcpulse::hilbert::Family::from_index(c.family).map_err(|e| CliError::config(format!("cells[{i}].family"), e.to_string()))?,
                c.n,
                c.n_script,
                c.n_comp,
            )
            .map_err(|e| CliError::config(format!("cells[{i}]"), e.to_string()))?;
        }
        if let Some(s) = &self.sweep {
            check(s.family == 1 || s.family == 2, "sweep.family", "must be 1 or 2")?;
            for (i, &n) in s.n_comp.iter().enumerate() {
                n_comp_ok(n, &format!("sweep.n_comp[{i}]"))?;
            }
            for (i, &k) in s.offsets.iter().enumerate() {
                check(k >= 1, format!("sweep.offsets[{i}]"), "must be at least 1")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileSaConfig {
    pub schema_version: u32,
    pub n_comp: usize,
    pub target: TargetConfig,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Validate for CompileSaConfig {
    fn validate(&self) -> Result<(), CliError> {
        n_comp_ok(self.n_comp, "n_comp")?;
        positive(self.eta, "eta")?;
        self.search.validate("search")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CincRun {
    pub n_comp: usize,
    pub dt: f64,
    pub t_f: f64,
}

impl CincRun {
    fn validate(&self, path: &str) -> Result<(), CliError> {
        n_comp_ok(self.n_comp, &format!("{path}.n_comp"))?;
        positive(self.dt, &format!("{path}.dt"))?;
        positive(self.t_f, &format!("{path}.t_f"))?;
        let k = self.t_f / self.dt;
        check(
            (k - k.round()).abs() < 1e-9 && k.round() >= 1.0,
            format!("{path}.t_f"),
            "must be a positive multiple of dt",
        )
    }
}

/// Settings of the piecewise-control optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSettings {
    #[serde(default = "default_restarts_cinc")]
    pub restarts: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default = "default_iters")]
    pub max_iters: u64,
    /// Stop a restart early once its cost falls below this.
    #[serde(default)]
    pub stop_cost: Option<f64>,
}

impl Default for PiecewiseSettings {
    fn default() -> Self {
        Self {
            restarts: default_restarts_cinc(),
            weight: default_weight(),
            max_iters: default_iters(),
            stop_cost: None,
        }
    }
}

impl PiecewiseSettings {
    fn validate(&self, path: &str) -> Result<(), CliError> {
        check(self.restarts >= 1, format!("{path}.restarts"), "must be at least 1")?;
        check(self.weight >= 0.0 && self.weight.is_finite(), format!("{path}.weight"), "must be non-negative")?;
        check(self.max_iters >= 1, format!("{path}.max_iters"), "must be at least 1")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeCincConfig {
    pub schema_version: u32,
    pub runs: Vec<CincRun>,
    #[serde(default)]
    pub optimizer: PiecewiseSettings,
    /// Largest accepted `1 − F`.
    #[serde(default = "OptimizeCincConfig::threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl OptimizeCincConfig {
    fn threshold() -> f64 {
        5e-4
    }
}

impl Validate for OptimizeCincConfig {
    fn validate(&self) -> Result<(), CliError> {
        check(!self.runs.is_empty(), "runs", "at least one run is required")?;
        for (i, r) in self.runs.iter().enumerate() {
            r.validate(&format!("runs[{i}]"))?;
            check(dim(r.n_comp + 5) <= 64, format!("runs[{i}].n_comp"), "too large for dense simulation")?;
        }
        self.optimizer.validate("optimizer")?;
        positive(self.threshold, "threshold")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSettings {
    pub dt: f64,
    #[serde(default = "BusSettings::m_max")]
    pub m_max: usize,
    #[serde(default = "default_restarts_cinc")]
    pub restarts: usize,
    #[serde(default = "default_eta")]
    pub threshold: f64,
}

impl BusSettings {
    fn m_max() -> usize {
        40
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CincPrimeSettings {
    pub dt: f64,
    pub t_f: f64,
    #[serde(default)]
    pub optimizer: PiecewiseSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeCincConfig {
    pub schema_version: u32,
    pub n_comp: usize,
    pub bus: BusSettings,
    pub cinc_prime: CincPrimeSettings,
    /// Largest accepted composed `1 − F`.
    #[serde(default = "ComposeCincConfig::threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ComposeCincConfig {
    fn threshold() -> f64 {
        1e-3
    }
}

impl Validate for ComposeCincConfig {
    fn validate(&self) -> Result<(), CliError> {
        n_comp_ok(self.n_comp, "n_comp")?;
        check(self.n_comp <= 4, "n_comp", "two-mode composition is limited to n_comp ≤ 4")?;
        positive(self.bus.dt, "bus.dt")?;
        check(self.bus.m_max >= 1, "bus.m_max", "must be at least 1")?;
        check(self.bus.restarts >= 1, "bus.restarts", "must be at least 1")?;
        positive(self.bus.threshold, "bus.threshold")?;
        CincRun {
            n_comp: self.n_comp,
            dt: self.cinc_prime.dt,
            t_f: self.cinc_prime.t_f,
        }
        .validate("cinc_prime")?;
        self.cinc_prime.optimizer.validate("cinc_prime.optimizer")?;
        positive(self.threshold, "threshold")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub schema_version: u32,
    pub n_comp: Vec<usize>,
    pub eta: Vec<f64>,
    /// `Q` values at which the `T_a` error is measured against its bound.
    #[serde(default)]
    pub q_values: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Validate for BoundsConfig {
    fn validate(&self) -> Result<(), CliError> {
        check(!self.n_comp.is_empty(), "n_comp", "at least one value is required")?;
        for (i, &n) in self.n_comp.iter().enumerate() {
            n_comp_ok(n, &format!("n_comp[{i}]"))?;
        }
        check(!self.eta.is_empty(), "eta", "at least one value is required")?;
        for (i, &e) in self.eta.iter().enumerate() {
            positive(e, &format!("eta[{i}]"))?;
        }
        for (i, &q) in self.q_values.iter().enumerate() {
            check((1..=10_000_000).contains(&q), format!("q_values[{i}]"), "must be in 1..=1e7")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(name: &str) -> serde_json::Value {
        read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name), name).unwrap()
    }

    #[test]
    fn example_configs_parse() {
        parse::<SimulateConfig>(&example("simulate.json")).unwrap();
        parse::<CompileAnalyticConfig>(&example("compile_analytic.json")).unwrap();
        let v = parse::<OptimizeVConfig>(&example("optimize_v.json")).unwrap();
        assert_eq!(v.all_cells().len(), 12);
        parse::<CompileSaConfig>(&example("compile_sa.json")).unwrap();
        parse::<OptimizeCincConfig>(&example("optimize_cinc.json")).unwrap();
        parse::<ComposeCincConfig>(&example("compose_cinc.json")).unwrap();
        parse::<BoundsConfig>(&example("bounds.json")).unwrap();
    }

    #[test]
    fn target_kinds_reject_unknown_fields() {
        let raw = serde_json::json!({"kind": "identity", "seed": 1});
        assert!(serde_json::from_value::<TargetConfig>(raw).is_err());
        let raw = serde_json::json!({"kind": "haar", "seed": 1});
        assert_eq!(serde_json::from_value::<TargetConfig>(raw).unwrap(), TargetConfig::Haar { seed: Some(1) });
    }
}
