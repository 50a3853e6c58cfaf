//! Every quantity the flow is supposed to control: curvature and its decay,
//! area, gaps to the doubled flat metric, derivative decay, and the distance
//! comparison constants.

use crate::error::{Error, Result};
use crate::fft;
use crate::field::ScalarField;
use crate::flow::FlowState;
use crate::metric::DistanceMatrix;

/// One sampled row of diagnostics.  Decay quantities are absent at t = 0
/// (they carry 1/t weights); distance fields are absent until a matrix has
/// been attached.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Total area integrate(u); conserved by the continuum flow.
    pub area: f64,
    pub sup_k: f64,
    pub inf_k: f64,
    /// t * sup |K|, the running curvature-decay constant.
    pub t_sup_k: f64,
    /// L1 norm of u - 2.
    pub l1_gap: f64,
    /// Sup norm of u - 2.
    pub sup_gap: f64,
    /// sqrt(t) * sup |grad v|.
    pub grad_decay: Option<f64>,
    /// t * sup |Hess v| (largest component magnitude).
    pub hess_decay: Option<f64>,
    /// Sup-gap between the current distance matrix and the flat one.
    pub dist_sup_gap_to_d0: Option<f64>,
    /// Sup-gap between the current matrix and sqrt(2) times the flat one.
    pub dist_sup_gap_to_sqrt2_d0: Option<f64>,
    /// Min over pairs of d_t(p,q) - d_0(p,q); negative iff some distance
    /// shrank below its initial value.
    pub dist_min_signed_vs_initial: Option<f64>,
}

/// Distance matrices measured at one sample time, together with the two
/// reference matrices they are compared against.
pub struct DistanceInputs<'a> {
    /// Matrix under the current metric u(t) g_flat.
    pub current: &'a DistanceMatrix,
    /// Matrix under u = 1 on the same graph (the discrete d_0).
    pub flat_graph: &'a DistanceMatrix,
    /// Matrix at t = 0 of the same run.
    pub initial: &'a DistanceMatrix,
}

/// K = -e^{-2v} lap v, the Gauss curvature of e^{2v} g_flat.
pub fn gauss_curvature(v: &ScalarField) -> ScalarField {
    let ops = fft::spectral_ops(v.n());
    let lap = ops.laplacian(v.values());
    let values: Vec<f64> =
        v.values().iter().zip(lap).map(|(&vi, l)| -(-2.0 * vi).exp() * l).collect();
    ScalarField::from_values_unchecked(v.grid(), values)
}

/// Samples every scalar diagnostic of the state.  Distance fields start
/// empty; use attach_distances once matrices exist.
pub fn record(state: &FlowState) -> DiagnosticsRecord {
    let v = state.v();
    let u = state.u();
    let k = gauss_curvature(v);
    let sup_k = k.max_value();
    let inf_k = k.min_value();
    let mut l1 = 0.0;
    let mut sup = 0.0f64;
    for &ui in u.values() {
        let d = (ui - 2.0).abs();
        l1 += d;
        sup = sup.max(d);
    }
    let h2 = u.h() * u.h();
    let t = state.t();
    let (grad_decay, hess_decay) = if t > 0.0 {
        let ops = fft::spectral_ops(v.n());
        let vx = ops.dx(v.values());
        let vy = ops.dy(v.values());
        let grad_sup = vx
            .iter()
            .zip(&vy)
            .fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()));
        let hess_sup = [ops.dxx(v.values()), ops.dyy(v.values()), ops.dxy(v.values())]
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()));
        (Some(t.sqrt() * grad_sup), Some(t * hess_sup))
    } else {
        (None, None)
    };
    DiagnosticsRecord {
        t,
        area: u.integrate(),
        sup_k,
        inf_k,
        t_sup_k: t * sup_k.abs().max(inf_k.abs()),
        l1_gap: l1 * h2,
        sup_gap: sup,
        grad_decay,
        hess_decay,
        dist_sup_gap_to_d0: None,
        dist_sup_gap_to_sqrt2_d0: None,
        dist_min_signed_vs_initial: None,
    }
}

/// Fills the distance comparison fields of a record from measured matrices.
pub fn attach_distances(rec: &mut DiagnosticsRecord, inputs: &DistanceInputs) -> Result<()> {
    rec.dist_sup_gap_to_d0 = Some(inputs.current.uniform_gap(inputs.flat_graph)?);
    rec.dist_sup_gap_to_sqrt2_d0 =
        Some(inputs.current.uniform_gap(&inputs.flat_graph.scale(std::f64::consts::SQRT_2))?);
    let m = inputs.current.len();
    if m != inputs.initial.len()
        || inputs
            .current
            .points()
            .iter()
            .zip(inputs.initial.points())
            .any(|(p, q)| p != q)
    {
        return Err(Error::PointSetMismatch);
    }
    let mut min_signed = f64::INFINITY;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                min_signed = min_signed.min(inputs.current.get(i, j) - inputs.initial.get(i, j));
            }
        }
    }
    rec.dist_min_signed_vs_initial = if m >= 2 { Some(min_signed) } else { None };
    Ok(())
}

/// A fitted inequality constant; residual is the worst violation at the
/// fitted value (zero when the fit is the max over samples).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub constant: f64,
    pub residual: f64,
}

/// c0 = max over samples of t sup|K|, the smallest constant for which
/// |K(t)| <= c0/t holds at every sample.
pub fn fit_c0(records: &[DiagnosticsRecord]) -> Result<FitResult> {
    let mut count = 0;
    let mut c0 = 0.0f64;
    for r in records {
        if r.t > 0.0 {
            count += 1;
            c0 = c0.max(r.t_sup_k);
        }
    }
    if count < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 samples with t > 0 to fit c0, got {count}"
        )));
    }
    Ok(FitResult { constant: c0, residual: 0.0 })
}

/// beta = max over samples and pairs of (d_0(p,q) - d_t(p,q)) / sqrt(c0 t),
/// clamped at 0: the smallest constant with d_t >= d_0 - beta sqrt(c0 t)
/// across every measured pair.
pub fn fit_beta(
    matrices: &[(f64, DistanceMatrix)],
    initial: &DistanceMatrix,
    c0: f64,
) -> Result<FitResult> {
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(Error::ConfigInvalid(format!("c0 {c0} must be positive")));
    }
    if matrices.is_empty() {
        return Err(Error::InsufficientData("no distance matrices to fit beta".into()));
    }
    let m = initial.len();
    let mut beta = 0.0f64;
    for (t, mat) in matrices {
        if !(*t > 0.0) {
            return Err(Error::ConfigInvalid(format!("sample time {t} must be positive")));
        }
        if mat.len() != m || mat.points().iter().zip(initial.points()).any(|(p, q)| p != q) {
            return Err(Error::PointSetMismatch);
        }
        let scale = (c0 * t).sqrt();
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let shrink = initial.get(i, j) - mat.get(i, j);
                    if shrink > 0.0 {
                        beta = beta.max(shrink / scale);
                    }
                }
            }
        }
    }
    Ok(FitResult { constant: beta, residual: 0.0 })
}

/// One row of the late-time convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub i: u32,
    pub sup_gap: f64,
    pub l1_gap: f64,
    pub dist_sup_gap_to_sqrt2_d0: Option<f64>,
}

/// Collects, for each run of the family, the gaps to the doubled flat metric
/// at the common late time t_star.  Rows come back sorted by i; callers
/// check the expected monotonicity.
pub fn convergence_to_double(
    runs: &[(u32, &[DiagnosticsRecord])],
    t_star: f64,
) -> Result<Vec<ConvergenceRow>> {
    let tol = 1e-9 * t_star.max(1.0);
    let mut rows = Vec::with_capacity(runs.len());
    for (i, records) in runs {
        let rec = records.iter().find(|r| (r.t - t_star).abs() <= tol).ok_or_else(|| {
            Error::InsufficientData(format!("run i = {i} has no sample at t = {t_star}"))
        })?;
        rows.push(ConvergenceRow {
            i: *i,
            sup_gap: rec.sup_gap,
            l1_gap: rec.l1_gap,
            dist_sup_gap_to_sqrt2_d0: rec.dist_sup_gap_to_sqrt2_d0,
        });
    }
    rows.sort_by_key(|r| r.i);
    Ok(rows)
}
