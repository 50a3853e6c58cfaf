//! End-to-end experiment runs: skeleton, calibration, flow, distance
//! matrices, fits, and the measured-inequality checks that make up a report.
//!
//! Independent lattice orders run on their own threads (they share nothing
//! mutable); everything downstream of the raw measurements is deterministic,
//! so identical configs produce identical reports.

use crate::config::ExperimentConfig;
use crate::snapshot::write_snapshot;
use ricci_torus::skeleton::{build_initial_factor, build_skeleton, calibrate_width, Alignment, SkeletonMode};
use ricci_torus::{
    attach_distances, conformal_distance_matrix, convergence_to_double, evolve, fit_beta, fit_c0,
    init_state, DiagnosticsRecord, DistanceInputs, DistanceMatrix, Error, GridSpec, Result,
    ScalarField, StencilSpec,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::thread;

/// One diagnostics sample, mirrored into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub t: f64,
    pub area: f64,
    pub l1_gap: f64,
    pub sup_gap: f64,
    pub sup_k: f64,
    pub inf_k: f64,
    pub t_sup_k: f64,
    pub grad_decay: Option<f64>,
    pub hess_decay: Option<f64>,
    pub dist_sup_gap_to_d0: Option<f64>,
    pub dist_sup_gap_to_sqrt2_d0: Option<f64>,
    pub dist_min_signed_vs_initial: Option<f64>,
    /// Running fits over the samples up to this row: max of t sup|K| over
    /// t >= 1e-3, and the shrinkage fit over matrices measured so far.
    pub c0_running: Option<f64>,
    pub beta_running: Option<f64>,
}

impl From<&DiagnosticsRecord> for RecordRow {
    fn from(r: &DiagnosticsRecord) -> Self {
        RecordRow {
            t: r.t,
            area: r.area,
            l1_gap: r.l1_gap,
            sup_gap: r.sup_gap,
            sup_k: r.sup_k,
            inf_k: r.inf_k,
            t_sup_k: r.t_sup_k,
            grad_decay: r.grad_decay,
            hess_decay: r.hess_decay,
            dist_sup_gap_to_d0: r.dist_sup_gap_to_d0,
            dist_sup_gap_to_sqrt2_d0: r.dist_sup_gap_to_sqrt2_d0,
            dist_min_signed_vs_initial: r.dist_min_signed_vs_initial,
            c0_running: None,
            beta_running: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub t: f64,
    pub sup_gap_to_d0: f64,
    pub sup_gap_to_sqrt2_d0: f64,
    pub min_signed_vs_initial: f64,
}

/// t = 0 comparisons against the flat graph metric: the two-sided chain on
/// the sampled block and exact preservation on the lattice block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDistanceChecks {
    /// max over sample pairs of d_u0 - (d0 + 4/i + 0.028 d0 + 4h).
    pub chain_upper_worst_slack: f64,
    /// min over sample pairs of d_u0 - d0.
    pub chain_lower_worst: f64,
    /// max over lattice pairs of |d_u0 - d0| - (0.028 d0 + 4h); meaningful
    /// only when the lattice block has at least two points.
    pub lattice_worst_slack: Option<f64>,
    /// max over all pairs of d0.
    pub diameter_d0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub i: u32,
    pub n: usize,
    pub target_gap: f64,
    pub width: f64,
    pub area0: f64,
    pub l1_initial: f64,
    /// Extremes of u over every accepted step, not just sample times.
    pub u_min_seen: f64,
    pub u_max_seen: f64,
    /// max over samples t >= 1e-3 of t sup|K|; None when too few samples.
    pub c0: Option<f64>,
    /// Shrinkage constants fitted on the first half / all of the sampled
    /// points; present only when matrices were measured at positive times.
    pub beta_half: Option<f64>,
    pub beta_full: Option<f64>,
    /// max over recorded (pair, t) of shrinkage minus beta_full sqrt(c0 t).
    pub beta_worst_residual: Option<f64>,
    pub initial_distances: Option<InitialDistanceChecks>,
    pub distances: Vec<DistanceSummary>,
    pub records: Vec<RecordRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// One measured inequality: lhs cmp rhs, with the verdict precomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub i: Option<u32>,
    pub lhs: f64,
    pub cmp: Cmp,
    pub rhs: f64,
    pub pass: bool,
}

pub fn check(name: &str, i: Option<u32>, lhs: f64, cmp: Cmp, rhs: f64) -> CheckResult {
    let pass = match cmp {
        Cmp::Le => lhs <= rhs,
        Cmp::Ge => lhs >= rhs,
    };
    CheckResult { name: name.into(), i, lhs, cmp, rhs, pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub i: u32,
    pub sup_gap: f64,
    pub l1_gap: f64,
    pub dist_sup_gap_to_sqrt2_d0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunReport>,
    /// Gaps to the doubled flat metric at t_star, one row per i.
    pub convergence: Vec<ConvergenceEntry>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

/// Sample times: geometric doublings from 1e-3 while below t_end, plus
/// t_star, t_end, and every positive distance time, sorted and deduplicated.
pub fn sample_schedule(t_end: f64, t_star: f64, distance_times: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0];
    let mut k = 0;
    loop {
        let t = 1e-3 * f64::powi(2.0, k);
        if t >= t_end {
            break;
        }
        s.push(t);
        k += 1;
    }
    s.push(t_star);
    s.push(t_end);
    s.extend(distance_times.iter().copied().filter(|&t| t > 0.0));
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    s.dedup();
    s
}

struct RunOutput {
    report: RunReport,
    records: Vec<DiagnosticsRecord>,
}

fn run_single(cfg: &ExperimentConfig, i: u32, out_dir: &Path) -> Result<RunOutput> {
    let n = cfg.n_for(i)?;
    let gap = cfg.gap_for(i)?;
    let grid = GridSpec::new(n)?;
    let sk = build_skeleton(i, SkeletonMode::AllPairs)?.snapped_to(grid)?;
    let cal = calibrate_width(grid, &sk, gap, Alignment::Snap)?;
    let u0 = build_initial_factor(grid, &sk, cal.width, cal.width, Alignment::Snap)?;
    let area0 = u0.integrate();
    let l1_initial = {
        let two = ScalarField::constant(grid, 2.0)?;
        u0.norms(&two)?.0
    };

    let dist_times = cfg.distance_times();
    let samples = sample_schedule(cfg.t_end, cfg.t_star, &dist_times);
    let (_final, mut trace) =
        evolve(&init_state(&u0)?, cfg.t_end, &cfg.scheme_config(), &samples)?;
    let (u_min_seen, u_max_seen) = trace.u_range_seen();

    if cfg.emit_snapshots {
        for (idx, v) in trace.fields().iter().enumerate() {
            let t = trace.records()[idx].t;
            let path = out_dir.join(format!("snapshot_i{i}_{idx:03}.rt2f"));
            write_snapshot(&v.exp_scale(2.0)?, t, &path)?;
        }
    }

    let c0 = match fit_c0(trace.records()) {
        Ok(fit) => Some(fit.constant),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };

    let mut initial_distances = None;
    let mut summaries = Vec::new();
    let mut beta_mats: Vec<(f64, DistanceMatrix)> = Vec::new();
    let mut running_beta: Vec<(f64, f64)> = Vec::new();
    let (mut beta_half, mut beta_full, mut beta_worst_residual) = (None, None, None);
    if !dist_times.is_empty() {
        let pts = cfg.measurement_points(i, n)?;
        let st = StencilSpec::new(cfg.stencil_radius)?;
        let flat = ScalarField::constant(grid, 1.0)?;
        let d_flat = conformal_distance_matrix(&flat, &pts, &st)?;
        let d_init = conformal_distance_matrix(&u0, &pts, &st)?;

        for &tq in &dist_times {
            let idx = trace
                .records()
                .iter()
                .position(|r| r.t == tq)
                .expect("schedule contains every distance time");
            let d_t = if tq == 0.0 {
                d_init.clone()
            } else {
                conformal_distance_matrix(&trace.fields()[idx].exp_scale(2.0)?, &pts, &st)?
            };
            attach_distances(
                &mut trace.records_mut()[idx],
                &DistanceInputs { current: &d_t, flat_graph: &d_flat, initial: &d_init },
            )?;
            let r = &trace.records()[idx];
            summaries.push(DistanceSummary {
                t: tq,
                sup_gap_to_d0: r.dist_sup_gap_to_d0.unwrap(),
                sup_gap_to_sqrt2_d0: r.dist_sup_gap_to_sqrt2_d0.unwrap(),
                min_signed_vs_initial: r.dist_min_signed_vs_initial.unwrap(),
            });
            if tq > 0.0 {
                beta_mats.push((tq, d_t));
            }
        }

        initial_distances =
            Some(initial_checks(i, grid.h(), cfg.points.count, &d_flat, &d_init));

        if !beta_mats.is_empty() {
            if let Some(c0) = c0 {
                let count = cfg.points.count;
                let block: Vec<(f64, DistanceMatrix)> = beta_mats
                    .iter()
                    .map(|(t, m)| Ok((*t, m.prefix(count)?)))
                    .collect::<Result<_>>()?;
                let d_init_block = d_init.prefix(count)?;
                for k in 0..block.len() {
                    let fit = fit_beta(&block[..=k], &d_init_block, c0)?.constant;
                    running_beta.push((block[k].0, fit));
                }
                beta_full = running_beta.last().map(|&(_, b)| b);
                if count >= 2 {
                    let half: Vec<(f64, DistanceMatrix)> = beta_mats
                        .iter()
                        .map(|(t, m)| Ok((*t, m.prefix(count / 2)?)))
                        .collect::<Result<_>>()?;
                    beta_half =
                        Some(fit_beta(&half, &d_init.prefix(count / 2)?, c0)?.constant);
                }
                beta_worst_residual =
                    Some(worst_beta_residual(&beta_mats, &d_init, beta_full.unwrap(), c0));
            }
        }
    }

    let mut rows: Vec<RecordRow> = trace.records().iter().map(RecordRow::from).collect();
    let mut c0_acc: Option<f64> = None;
    for row in &mut rows {
        if row.t >= 1e-3 {
            c0_acc = Some(c0_acc.unwrap_or(0.0).max(row.t_sup_k));
        }
        row.c0_running = c0_acc;
        row.beta_running =
            running_beta.iter().rev().find(|&&(t, _)| t <= row.t).map(|&(_, b)| b);
    }

    let report = RunReport {
        i,
        n,
        target_gap: gap,
        width: cal.width,
        area0,
        l1_initial,
        u_min_seen,
        u_max_seen,
        c0,
        beta_half,
        beta_full,
        beta_worst_residual,
        initial_distances,
        distances: summaries,
        records: rows,
    };
    Ok(RunOutput { report, records: trace.records().to_vec() })
}

fn initial_checks(
    i: u32,
    h: f64,
    sample_count: usize,
    d_flat: &DistanceMatrix,
    d_init: &DistanceMatrix,
) -> InitialDistanceChecks {
    let m = d_flat.len();
    let block = sample_count.min(m);
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut diameter = 0.0f64;
    for p in 0..m {
        for q in 0..p {
            diameter = diameter.max(d_flat.get(p, q));
        }
    }
    for p in 0..block {
        for q in 0..p {
            let d0 = d_flat.get(p, q);
            let du = d_init.get(p, q);
            upper = upper.max(du - (d0 + 4.0 / i as f64 + 0.028 * d0 + 4.0 * h));
            lower = lower.min(du - d0);
        }
    }
    let mut lattice = f64::NEG_INFINITY;
    for p in block..m {
        for q in block..p {
            let d0 = d_flat.get(p, q);
            let du = d_init.get(p, q);
            lattice = lattice.max((du - d0).abs() - (0.028 * d0 + 4.0 * h));
        }
    }
    InitialDistanceChecks {
        chain_upper_worst_slack: upper,
        chain_lower_worst: lower,
        lattice_worst_slack: (m - block >= 2).then_some(lattice),
        diameter_d0: diameter,
    }
}

fn worst_beta_residual(
    mats: &[(f64, DistanceMatrix)],
    d_init: &DistanceMatrix,
    beta: f64,
    c0: f64,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (t, m) in mats {
        let allowance = beta * (c0 * t).sqrt();
        for p in 0..m.len() {
            for q in 0..p {
                worst = worst.max(d_init.get(p, q) - m.get(p, q) - allowance);
            }
        }
    }
    worst
}

fn run_checks(run: &RunReport, t_star: f64) -> Vec<CheckResult> {
    let i = run.i;
    let inv_i = 1.0 / i as f64;
    let area_drift = run
        .records
        .iter()
        .fold(0.0f64, |w, r| w.max((r.area - run.area0).abs() / run.area0));
    let l1_worst = run.records.iter().fold(0.0f64, |w, r| w.max(r.l1_gap));
    let decay_worst = run
        .records
        .iter()
        .filter(|r| r.t >= 1e-3)
        .fold(0.0f64, |w, r| w.max(r.t_sup_k));
    let curv_lower = run
        .records
        .iter()
        .filter(|r| r.t > 0.0)
        .fold(f64::INFINITY, |w, r| w.min(r.inf_k * 2.0 * r.t));

    let some = Some(i);
    let mut out = vec![
        check("area_conservation", some, area_drift, Cmp::Le, 1e-6),
        check("max_principle_lower", some, 1.0 - run.u_min_seen, Cmp::Le, 1e-8),
        check("max_principle_upper", some, run.u_max_seen - 2.0, Cmp::Le, 1e-8),
        check("initial_area", some, run.area0, Cmp::Ge, 2.0 - inv_i),
        check("initial_l1", some, run.l1_initial, Cmp::Le, inv_i),
        check("l1_bound_in_time", some, l1_worst, Cmp::Le, inv_i + 1e-6),
        check(
            "curvature_decay_finite",
            some,
            decay_worst,
            Cmp::Le,
            f64::MAX,
        ),
        check("curvature_lower_bound", some, curv_lower, Cmp::Ge, -1.05),
    ];
    if let Some(init) = &run.initial_distances {
        out.push(check("initial_chain_upper", some, init.chain_upper_worst_slack, Cmp::Le, 0.0));
        out.push(check("initial_chain_lower", some, init.chain_lower_worst, Cmp::Ge, -1e-9));
        if let Some(lat) = init.lattice_worst_slack {
            out.push(check("lattice_preservation", some, lat, Cmp::Le, 0.0));
        }
        if let Some(ds) = run.distances.iter().find(|d| d.t == t_star) {
            out.push(check(
                "t_star_distance_to_doubled",
                some,
                ds.sup_gap_to_sqrt2_d0,
                Cmp::Le,
                0.05 + 0.028 * init.diameter_d0,
            ));
        }
    }
    if let (Some(half), Some(full)) = (run.beta_half, run.beta_full) {
        out.push(check(
            "beta_stability_under_doubling",
            some,
            (full - half).abs() / half,
            Cmp::Le,
            0.25,
        ));
    }
    if let Some(res) = run.beta_worst_residual {
        out.push(check("beta_inequality", some, res, Cmp::Le, 1e-9));
    }
    out
}

/// Rebuilds every check from the measurements stored in a report. Used by
/// both the runner and report verification, so a hand-edited report cannot
/// claim a verdict its own numbers do not support.
pub fn evaluate_checks(config: &ExperimentConfig, runs: &[RunReport]) -> Vec<CheckResult> {
    runs.iter().flat_map(|run| run_checks(run, config.t_star)).collect()
}

fn annotate(i: u32, e: Error) -> Error {
    match e {
        Error::StiffnessFailure(m) => Error::StiffnessFailure(format!("i = {i}: {m}")),
        Error::StepRejected(m) => Error::StepRejected(format!("i = {i}: {m}")),
        Error::ResolutionTooCoarse(m) => Error::ResolutionTooCoarse(format!("i = {i}: {m}")),
        Error::ConfigInvalid(m) => Error::ConfigInvalid(format!("i = {i}: {m}")),
        Error::InvalidField(m) => Error::InvalidField(format!("i = {i}: {m}")),
        other => other,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    if cfg.emit_snapshots {
        std::fs::create_dir_all(out_dir)?;
    }

    // Independent orders on independent threads; join order fixes the
    // assembly order, so reports are deterministic.
    let outputs: Vec<Result<RunOutput>> = thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .i_list
            .iter()
            .map(|&i| scope.spawn(move || run_single(cfg, i, out_dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| match h.join() {
                Ok(r) => r,
                Err(_) => Err(Error::InvalidField("experiment worker panicked".into())),
            })
            .collect()
    });

    let mut runs = Vec::new();
    let mut raw_records = Vec::new();
    for (&i, out) in cfg.i_list.iter().zip(outputs) {
        let out = out.map_err(|e| annotate(i, e))?;
        runs.push(out.report);
        raw_records.push((i, out.records));
    }

    let borrowed: Vec<(u32, &[DiagnosticsRecord])> =
        raw_records.iter().map(|(i, r)| (*i, r.as_slice())).collect();
    let convergence = convergence_to_double(&borrowed, cfg.t_star)?
        .into_iter()
        .map(|r| ConvergenceEntry {
            i: r.i,
            sup_gap: r.sup_gap,
            l1_gap: r.l1_gap,
            dist_sup_gap_to_sqrt2_d0: r.dist_sup_gap_to_sqrt2_d0,
        })
        .collect();

    let checks = evaluate_checks(cfg, &runs);
    let pass = checks.iter().all(|c| c.pass);
    Ok(ExperimentReport { config: cfg.clone(), runs, convergence, checks, pass })
}

pub fn serialize_report(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

pub fn parse_report(text: &str) -> Result<ExperimentReport> {
    serde_json::from_str(text).map_err(|e| Error::ConfigSyntax(format!("report: {e}")))
}
