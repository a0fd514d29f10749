// Copyright 2026 The jcpulse Authors
// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand. Each writes its artifacts and reports whether
//! every configured threshold was met.

use std::path::{Path, PathBuf};

use serde::Serialize;

use jcpulse::direct_numeric::{cinc_prime_target, optimize_piecewise, DirectRun, PiecewiseConfig};
use jcpulse::fourier_synth::bounds::{eps_t_bound, eps_u2_bound, time_u2};
use jcpulse::fourier_synth::{analytic_total_time, compile_analytic, gate_counts, plan_pq, t_a_error, PlannedSynthesis, SynthesisPlan};
use jcpulse::hilbert::{dim, Family, ModeSpace};
use jcpulse::law_eberly::compile_unitary;
use jcpulse::linalg::unitarity_defect;
use jcpulse::metrics::{comp_error, restrict, ErrorReport};
use jcpulse::optim::{restart_seed, LocalSearchConfig};
use jcpulse::pulses::{sequence_unitary, PulseSequence, T_G};
use jcpulse::semi_analytic::{compile_gate_sa, eps_threshold, optimize_v, required_specs, OptimizationRun, VCache, VGateSpec, VOptConfig};
use jcpulse::twomode::{cinc_error, compose_cinc, optimize_bus, simulate_two_mode, BusConfig, TwoModeSpace};

use crate::artifacts::{Artifacts, CsvRow, MatrixJson};
use crate::config::*;
use crate::error::CliError;

/// Run-wide settings shared by every command.
pub struct Context {
    pub seed: u64,
    pub config_dir: PathBuf,
    /// V-cache file, when `JCPULSE_CACHE` is set.
    pub cache: Option<PathBuf>,
}

fn tg(t: f64) -> f64 {
    t / T_G
}

fn local(max_iters: u64, stop: Option<f64>) -> LocalSearchConfig {
    LocalSearchConfig {
        max_iters,
        target: stop.unwrap_or(f64::NEG_INFINITY),
        ..Default::default()
    }
}

pub fn simulate(cfg: &SimulateConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let seq: PulseSequence = match (&cfg.pulses, &cfg.sequence) {
        (Some(p), _) => PulseSequence::from_pulses(p.clone()),
        (None, Some(path)) => {
            let raw = read_json(&ctx.config_dir.join(path), "sequence")?;
            serde_path_to_error::deserialize(&raw).map_err(|e| CliError::config(format!("sequence:{}", e.path()), e.into_inner().to_string()))?
        }
        (None, None) => unreachable!("validated"),
    };
    #[derive(Serialize)]
    struct SimResult {
        n_comp: usize,
        dim: usize,
        pulses: usize,
        duration_tg: f64,
        unitarity_defect: f64,
        /// Largest population a computational state loses to higher levels.
        max_comp_loss: f64,
        target: Option<String>,
        error: Option<ErrorReport>,
        /// Two-mode only: norm of the spin-flipping part on spin-down qudit inputs.
        cross_norm: Option<f64>,
        threshold: Option<f64>,
    }
    let (result, unitary, err) = if let Some(t) = cfg.two_mode {
        let space = TwoModeSpace::new(cfg.n_comp, t.top1, t.top2)?;
        let u = simulate_two_mode(&space, &seq)?;
        let (report, cross) = cinc_error(&space, &u);
        let block = space.spin_down_block(&u);
        let r = SimResult {
            n_comp: cfg.n_comp,
            dim: space.dim(),
            pulses: seq.len(),
            duration_tg: tg(seq.duration()),
            unitarity_defect: unitarity_defect(&u),
            max_comp_loss: column_loss(&block),
            target: Some("cinc".into()),
            error: Some(report),
            cross_norm: Some(cross),
            threshold: cfg.threshold,
        };
        (r, block, 1.0 - report.fidelity)
    } else {
        let top = cfg.top.unwrap_or(cfg.n_comp + 4);
        let u = sequence_unitary(top, &seq)?;
        let comp = restrict(&u, dim(cfg.n_comp));
        let report = match &cfg.target {
            Some(t) => Some(comp_error(cfg.n_comp, &t.build(cfg.n_comp, ctx.seed, "target")?, &comp)),
            None => None,
        };
        let r = SimResult {
            n_comp: cfg.n_comp,
            dim: dim(top),
            pulses: seq.len(),
            duration_tg: tg(seq.duration()),
            unitarity_defect: unitarity_defect(&u),
            max_comp_loss: column_loss(&comp),
            target: cfg.target.as_ref().map(|t| t.label().to_string()),
            error: report,
            cross_norm: None,
            threshold: cfg.threshold,
        };
        (r, comp, report.map_or(0.0, |r| r.eta))
    };
    out.json("unitary.json", &MatrixJson::from(&unitary))?;
    out.json("result.json", &result)?;
    Ok(cfg.threshold.map_or(true, |t| err <= t))
}

/// `max_j (1 − ‖U e_j‖²)` over the columns of a restricted propagator.
fn column_loss(u: &jcpulse::linalg::CMatrix) -> f64 {
    u.column_iter().map(|c| 1.0 - c.norm_squared()).fold(0.0, f64::max)
}

pub fn compile_analytic_cmd(cfg: &CompileAnalyticConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let n = cfg.n_comp;
    let target = cfg.target.build(n, ctx.seed, "target")?;
    let program = compile_unitary(n, &target)?;
    #[derive(Serialize)]
    struct PlanResult {
        p: f64,
        q: f64,
        pulses: usize,
        duration_tg: f64,
        eta: f64,
        raw_error: f64,
        fidelity: f64,
        /// Bound on each synthesised `U⁽²⁾` at this `(P, Q)`.
        eps_u2_bound: f64,
        time_u2_bound_tg: f64,
    }
    let mut plans = Vec::new();
    let mut rows = Vec::new();
    for p in &cfg.plans {
        let plan = SynthesisPlan::new(p.p, p.q)?;
        let c = compile_analytic(n, &target, &plan)?;
        rows.push(CsvRow {
            x: plan.q,
            y: c.eta,
            series: format!("P={}", p.p),
            seed: ctx.seed,
        });
        plans.push(PlanResult {
            p: plan.p,
            q: plan.q,
            pulses: c.pulses,
            duration_tg: tg(c.duration),
            eta: c.eta,
            raw_error: c.raw_error,
            fidelity: c.fidelity,
            eps_u2_bound: eps_u2_bound(n, plan.p, plan.q),
            time_u2_bound_tg: tg(time_u2(n, plan.p, plan.q)),
        });
    }
    let bounds = bounds_row(n, cfg.eta)?;
    #[derive(Serialize)]
    struct Result<'a> {
        n_comp: usize,
        target: &'a str,
        layers: usize,
        plans: Vec<PlanResult>,
        bounds: BoundsRow,
        threshold: Option<f64>,
    }
    out.json("program.json", &program)?;
    let met = cfg.threshold.map_or(true, |t| plans.iter().all(|p| p.eta <= t));
    out.json(
        "result.json",
        &Result {
            n_comp: n,
            target: cfg.target.label(),
            layers: program.len(),
            plans,
            bounds,
            threshold: cfg.threshold,
        },
    )?;
    out.csv("analytic.csv", &rows)?;
    Ok(met)
}

fn load_cache(ctx: &Context) -> Result<Option<VCache>, CliError> {
    Ok(ctx.cache.as_deref().map(VCache::load).transpose()?)
}

fn save_cache(ctx: &Context, cache: &Option<VCache>) -> Result<(), CliError> {
    if let (Some(path), Some(c)) = (&ctx.cache, cache) {
        c.save(path)?;
    }
    Ok(())
}

fn v_run(cache: &mut Option<VCache>, spec: &VGateSpec, threshold: f64, vcfg: &VOptConfig) -> Result<OptimizationRun, CliError> {
    Ok(match cache {
        Some(c) => c.get_or_optimize(spec, threshold, vcfg)?,
        None => optimize_v(spec, threshold, vcfg)?,
    })
}

fn v_config(search: &SearchConfig, seed: u64) -> VOptConfig {
    VOptConfig {
        m_min: search.m_min,
        m_max: search.m_max,
        restarts: search.restarts,
        seed,
        local: local(search.max_iters, None),
    }
}

#[derive(Serialize)]
struct VSummary {
    key: String,
    family: u8,
    n_comp: usize,
    n: usize,
    n_script: i64,
    pulses: usize,
    duration_tg: f64,
    achieved_error: f64,
    threshold: f64,
    met: bool,
    seed: u64,
    attempts: usize,
}

impl From<&OptimizationRun> for VSummary {
    fn from(r: &OptimizationRun) -> Self {
        VSummary {
            key: r.spec.key(),
            family: r.spec.family,
            n_comp: r.spec.n_comp,
            n: r.spec.n,
            n_script: r.spec.n_script,
            pulses: r.pulses,
            duration_tg: tg(r.duration()),
            achieved_error: r.achieved_error,
            threshold: r.threshold,
            met: r.met_threshold,
            seed: r.seed,
            attempts: r.iterate_log.len(),
        }
    }
}

pub fn optimize_v_cmd(cfg: &OptimizeVConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let vcfg = v_config(&cfg.search, ctx.seed);
    let mut cache = load_cache(ctx)?;
    let mut runs = Vec::new();
    for (i, c) in cfg.all_cells().iter().enumerate() {
        let family = Family::from_index(c.family).map_err(|e| CliError::config(format!("cells[{i}].family"), e.to_string()))?;
        let spec = VGateSpec::new(family, c.n, c.n_script, c.n_comp)?;
        let run = v_run(&mut cache, &spec, eps_threshold(c.n_comp, cfg.eta), &vcfg)?;
        log::info!("{}: M = {}, error {:.3e}", spec.key(), run.pulses, run.achieved_error);
        runs.push(run);
        save_cache(ctx, &cache)?;
    }
    let summaries: Vec<VSummary> = runs.iter().map(VSummary::from).collect();
    let rows: Vec<CsvRow> = summaries
        .iter()
        .map(|s| CsvRow {
            x: s.n_comp as f64,
            y: s.duration_tg,
            series: format!("V{}_n{}_s{}", s.family, if s.n == s.n_comp { "N".into() } else { s.n.to_string() }, offset_label(s)),
            seed: s.seed,
        })
        .collect();
    let met = summaries.iter().all(|s| s.met);
    #[derive(Serialize)]
    struct Result {
        eta: f64,
        cells: Vec<VSummary>,
        met: usize,
        total: usize,
    }
    out.json("runs.json", &runs)?;
    out.json(
        "result.json",
        &Result {
            eta: cfg.eta,
            met: summaries.iter().filter(|s| s.met).count(),
            total: summaries.len(),
            cells: summaries,
        },
    )?;
    out.csv("v_gates.csv", &rows)?;
    Ok(met)
}

fn offset_label(s: &VSummary) -> String {
    let k = s.n_comp as i64 - s.n_script;
    format!("N-{k}")
}

pub fn compile_sa_cmd(cfg: &CompileSaConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let n = cfg.n_comp;
    let target = cfg.target.build(n, ctx.seed, "target")?;
    let vcfg = v_config(&cfg.search, ctx.seed);
    let threshold = eps_threshold(n, cfg.eta);
    let mut cache = load_cache(ctx)?;
    let mut runs = Vec::new();
    for spec in required_specs(n) {
        runs.push(v_run(&mut cache, &spec, threshold, &vcfg)?);
        save_cache(ctx, &cache)?;
    }
    let sa = compile_gate_sa(n, &target, &runs)?;
    let v_met = runs.iter().all(|r| r.met_threshold);
    #[derive(Serialize)]
    struct Result<'a> {
        n_comp: usize,
        target: &'a str,
        eta_target: f64,
        eta: f64,
        fidelity: f64,
        measure_top: usize,
        pulses: usize,
        duration_tg: f64,
        worst_v_error: f64,
        v_threshold: f64,
        v_gates: Vec<VSummary>,
    }
    out.json("program.json", &sa.program)?;
    out.json("sequence.json", &sa.sequence)?;
    out.json(
        "result.json",
        &Result {
            n_comp: n,
            target: cfg.target.label(),
            eta_target: cfg.eta,
            eta: sa.eta,
            fidelity: sa.fidelity,
            measure_top: sa.measure_top,
            pulses: sa.sequence.len(),
            duration_tg: tg(sa.duration()),
            worst_v_error: sa.worst_v_error,
            v_threshold: threshold,
            v_gates: runs.iter().map(VSummary::from).collect(),
        },
    )?;
    out.csv(
        "sa.csv",
        &[
            CsvRow {
                x: n as f64,
                y: tg(sa.duration()),
                series: "duration_tg".into(),
                seed: ctx.seed,
            },
            CsvRow {
                x: n as f64,
                y: sa.eta,
                series: "eta".into(),
                seed: ctx.seed,
            },
        ],
    )?;
    Ok(v_met && sa.eta <= cfg.eta)
}

/// Run record of a CINC′ optimisation.
#[derive(Serialize)]
struct CincRecord<'a> {
    target: &'static str,
    #[serde(flatten)]
    run: &'a DirectRun,
}

/// Largest accepted fidelity drop between the optimisation and check truncations.
const MAX_CHECK_DROP: f64 = 1e-5;

fn optimize_cinc_prime(n: usize, dt_tg: f64, t_f_tg: f64, s: &PiecewiseSettings, seed: u64) -> Result<DirectRun, CliError> {
    let space = ModeSpace::with_defaults(n)?;
    let steps = (t_f_tg / dt_tg).round() as usize;
    let cfg = PiecewiseConfig {
        restarts: s.restarts,
        seed,
        weight: s.weight,
        local: local(s.max_iters, s.stop_cost),
        ..Default::default()
    };
    Ok(optimize_piecewise(&space, &cinc_prime_target(n), dt_tg * T_G, steps, &cfg)?)
}

pub fn optimize_cinc_cmd(cfg: &OptimizeCincConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let mut runs = Vec::new();
    for (i, r) in cfg.runs.iter().enumerate() {
        let run = optimize_cinc_prime(r.n_comp, r.dt, r.t_f, &cfg.optimizer, restart_seed(ctx.seed, i as u64))?;
        log::info!("N={} dt={} T_f={}: 1 - F = {:.3e}", r.n_comp, r.dt, r.t_f, run.infidelity());
        runs.push(run);
    }
    let rows: Vec<CsvRow> = cfg
        .runs
        .iter()
        .zip(&runs)
        .map(|(r, run)| CsvRow {
            x: r.t_f,
            y: run.infidelity(),
            series: format!("N={} dt={}", r.n_comp, r.dt),
            seed: run.seed,
        })
        .collect();
    let met = runs.iter().all(|r| r.infidelity() <= cfg.threshold && r.fidelity_drop() < MAX_CHECK_DROP);
    let records: Vec<CincRecord> = runs.iter().map(|run| CincRecord { target: "cinc_prime", run }).collect();
    #[derive(Serialize)]
    struct Result<'a> {
        threshold: f64,
        max_check_drop: f64,
        runs: Vec<CincRecord<'a>>,
    }
    out.json(
        "result.json",
        &Result {
            threshold: cfg.threshold,
            max_check_drop: MAX_CHECK_DROP,
            runs: records,
        },
    )?;
    out.csv("cinc_prime.csv", &rows)?;
    Ok(met)
}

pub fn compose_cinc_cmd(cfg: &ComposeCincConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let n = cfg.n_comp;
    let bus_cfg = BusConfig {
        m_max: cfg.bus.m_max,
        restarts: cfg.bus.restarts,
        seed: restart_seed(ctx.seed, 1),
        threshold: cfg.bus.threshold,
        ..Default::default()
    };
    let bus = optimize_bus(n, cfg.bus.dt * T_G, &bus_cfg)?;
    let cp = optimize_cinc_prime(n, cfg.cinc_prime.dt, cfg.cinc_prime.t_f, &cfg.cinc_prime.optimizer, restart_seed(ctx.seed, 2))?;
    let space = TwoModeSpace::new(n, cp.space.n_opt, n + 1)?;
    let comp = compose_cinc(&space, &bus.sequence(), &cp.controls.to_sequence())?;
    out.json("bus.json", &bus)?;
    out.json("cinc_prime.json", &CincRecord { target: "cinc_prime", run: &cp })?;
    out.json("sequence.json", &comp.sequence)?;
    #[derive(Serialize)]
    struct Component {
        run_id: String,
        pulses: usize,
        duration_tg: f64,
        error: f64,
        threshold: Option<f64>,
        /// Fidelity lost when re-simulated in the larger check space.
        fidelity_drop: Option<f64>,
        met: bool,
    }
    #[derive(Serialize)]
    struct Result {
        n_comp: usize,
        tops: [usize; 2],
        bus: Component,
        cinc_prime: Component,
        error: f64,
        report: ErrorReport,
        cross_norm: f64,
        duration_tg: f64,
        threshold: f64,
    }
    let error = comp.error();
    let result = Result {
        n_comp: n,
        tops: space.tops,
        bus: Component {
            run_id: out.sha256_of("bus.json").unwrap_or_default(),
            pulses: bus.pulses,
            duration_tg: tg(bus.duration()),
            error: bus.achieved_error,
            threshold: Some(bus.threshold),
            fidelity_drop: None,
            met: bus.met_threshold,
        },
        cinc_prime: Component {
            run_id: out.sha256_of("cinc_prime.json").unwrap_or_default(),
            pulses: cp.controls.n_steps(),
            duration_tg: tg(cp.t_f),
            error: cp.infidelity(),
            threshold: None,
            fidelity_drop: Some(cp.fidelity_drop()),
            met: cp.fidelity_drop() < MAX_CHECK_DROP,
        },
        error,
        report: comp.report,
        cross_norm: comp.cross_norm,
        duration_tg: tg(comp.duration),
        threshold: cfg.threshold,
    };
    out.json("result.json", &result)?;
    out.csv(
        "cinc.csv",
        &[CsvRow {
            x: tg(comp.duration),
            y: error,
            series: format!("N={n} bus_dt={}", cfg.bus.dt),
            seed: ctx.seed,
        }],
    )?;
    Ok(bus.met_threshold && error <= cfg.threshold)
}

#[derive(Serialize)]
struct BoundsRow {
    n_comp: usize,
    eta: f64,
    g_a: usize,
    g_sa: usize,
    eps_threshold: f64,
    /// Error budget of one block rotation, `√(4(N+1)η) / g_a`.
    per_rotation_error: f64,
    plan: PlannedSynthesis,
    analytic_total_time_tg: f64,
}

fn bounds_row(n: usize, eta: f64) -> Result<BoundsRow, CliError> {
    let (g_a, g_sa) = gate_counts(n);
    let per_rotation_error = (4.0 * (n + 1) as f64 * eta).sqrt() / g_a as f64;
    Ok(BoundsRow {
        n_comp: n,
        eta,
        g_a,
        g_sa,
        eps_threshold: eps_threshold(n, eta),
        per_rotation_error,
        plan: plan_pq(n, per_rotation_error)?,
        analytic_total_time_tg: tg(analytic_total_time(n, eta)),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn bounds_cmd(cfg: &BoundsConfig, ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let mut table = Vec::new();
    let mut rows = Vec::new();
    for &n in &cfg.n_comp {
        for &eta in &cfg.eta {
            let r = bounds_row(n, eta)?;
            rows.push(CsvRow {
                x: n as f64,
                y: r.analytic_total_time_tg,
                series: format!("eta={eta:e}"),
                seed: ctx.seed,
            });
            table.push(r);
        }
    }
    #[derive(Serialize)]
    struct TaPoint {
        n_comp: usize,
        q: u64,
        error: f64,
        bound: f64,
    }
    #[derive(Serialize)]
    struct TaFit {
        n_comp: usize,
        slope: Option<f64>,
    }
    let mut ta = Vec::new();
    let mut fits = Vec::new();
    let mut ta_rows = Vec::new();
    for &n in &cfg.n_comp {
        let mut pts = Vec::new();
        for &q in &cfg.q_values {
            let error = t_a_error(n, q as usize)?;
            let bound = eps_t_bound(n, q as f64);
            pts.push((q as f64, error));
            for (series, y) in [(format!("empirical N={n}"), error), (format!("bound N={n}"), bound)] {
                ta_rows.push(CsvRow {
                    x: q as f64,
                    y,
                    series,
                    seed: ctx.seed,
                });
            }
            ta.push(TaPoint { n_comp: n, q, error, bound });
        }
        if !cfg.q_values.is_empty() {
            fits.push(TaFit {
                n_comp: n,
                slope: (pts.len() >= 2).then(|| log_slope(&pts)),
            });
        }
    }
    let met = ta.iter().all(|p| p.error <= p.bound);
    #[derive(Serialize)]
    struct Result {
        table: Vec<BoundsRow>,
        t_a: Vec<TaPoint>,
        t_a_fits: Vec<TaFit>,
    }
    out.json("result.json", &Result { table, t_a: ta, t_a_fits: fits })?;
    out.csv("bounds.csv", &rows)?;
    if !cfg.q_values.is_empty() {
        out.csv("t_a.csv", &ta_rows)?;
    }
    Ok(met)
}

/// Directory the config file lives in, for resolving relative paths.
pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|&q: &f64| (q, 3.0 * q.powf(-0.5))).collect();
        assert!((log_slope(&pts) + 0.5).abs() < 1e-12);
    }
}
