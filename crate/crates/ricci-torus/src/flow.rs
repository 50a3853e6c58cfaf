//! Time integration of the conformal Ricci flow.
//!
//! The flow of g(t) = u(t) g_flat is evolved through v = (1/2) log u, which
//! satisfies dv/dt = e^{-2v} lap v.  Constants are exact fixed points, the
//! range of v never widens (discrete maximum principle, enforced by an
//! optional guard), and total area integrate(e^{2v}) is conserved up to
//! discretization error.

use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fft::{self, SpectralOps};
use crate::field::ScalarField;

/// Allowed outward drift of the range of v per run, in v units.
pub const GUARD_TOL: f64 = 1e-8;

/// An immutable snapshot of the flow at one time.
#[derive(Clone, Debug)]
pub struct FlowState {
    t: f64,
    v: ScalarField,
    lambda: f64,
    v0_min: f64,
    v0_max: f64,
}

impl FlowState {
    pub fn t(&self) -> f64 {
        self.t
    }

    /// The conformal exponent v = (1/2) log u.
    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    /// Sup norm of v at construction time; bounds every later sup norm.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v0_min(&self) -> f64 {
        self.v0_min
    }

    pub fn v0_max(&self) -> f64 {
        self.v0_max
    }

    /// The conformal factor u = e^{2v}.
    pub fn u(&self) -> ScalarField {
        let values: Vec<f64> = self.v.values().iter().map(|&v| (2.0 * v).exp()).collect();
        ScalarField::from_values_unchecked(self.v.grid(), values)
    }
}

/// Builds the t = 0 state from a positive conformal factor.
pub fn init_state(u0: &ScalarField) -> Result<FlowState> {
    let v = u0.log_scale(0.5)?;
    let v0_min = v.min_value();
    let v0_max = v.max_value();
    let lambda = v0_min.abs().max(v0_max.abs());
    Ok(FlowState { t: 0.0, v, lambda, v0_min, v0_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Constant-coefficient implicit diffusion plus explicit remainder;
    /// first order, unconditionally usable at thin-band resolutions.
    Imex,
    /// Classical explicit Runge-Kutta; fourth order under the CFL bound.
    Rk4,
}

#[derive(Clone, Copy, Debug)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// CFL safety factor in (0, 1] for the explicit scheme.
    pub cfl: f64,
    /// Target IMEX step; None means h/4.
    pub imex_dt: Option<f64>,
    /// Reject steps that push the range of v outward by more than GUARD_TOL.
    pub max_principle_guard: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig { scheme: Scheme::Imex, cfl: 0.5, imex_dt: None, max_principle_guard: true }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::ConfigInvalid(format!("cfl {} not in (0, 1]", self.cfl)));
        }
        if let Some(dt) = self.imex_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::ConfigInvalid(format!("imex_dt {dt} must be positive")));
            }
        }
        Ok(())
    }
}

/// Largest explicit step for the current state: cfl * h^2 / (4 max e^{-2v}),
/// the 2D diffusion bound with the worst-case diffusivity.
pub fn stable_dt(state: &FlowState, cfl: f64) -> f64 {
    let h = state.v.h();
    let diffusivity = (-2.0 * state.v.min_value()).exp();
    cfl * h * h / (4.0 * diffusivity)
}

fn rhs(ops: &SpectralOps, v: &[f64]) -> Vec<f64> {
    let lap = ops.laplacian(v);
    v.iter().zip(lap).map(|(&vi, l)| (-2.0 * vi).exp() * l).collect()
}

fn advanced(state: &FlowState, dt: f64, values: Vec<f64>, guard: bool) -> Result<FlowState> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut finite = true;
    for &x in &values {
        finite &= x.is_finite();
        min = min.min(x);
        max = max.max(x);
    }
    if !finite {
        return Err(Error::StepRejected("non-finite sample after step".into()));
    }
    if guard && (min < state.v0_min - GUARD_TOL || max > state.v0_max + GUARD_TOL) {
        return Err(Error::StepRejected(format!(
            "range [{min:.17e}, {max:.17e}] left [{:.17e}, {:.17e}]",
            state.v0_min, state.v0_max
        )));
    }
    Ok(FlowState {
        t: state.t + dt,
        v: ScalarField::from_values_unchecked(state.v.grid(), values),
        lambda: state.lambda,
        v0_min: state.v0_min,
        v0_max: state.v0_max,
    })
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::ConfigInvalid(format!("step size {dt} must be positive")));
    }
    Ok(())
}

/// One classical four-stage explicit step of dv/dt = e^{-2v} lap v.
pub fn step_rk4(state: &FlowState, dt: f64, guard: bool) -> Result<FlowState> {
    check_dt(dt)?;
    let ops = fft::spectral_ops(state.v.n());
    let v = state.v.values();
    let nn = v.len();
    let k1 = rhs(&ops, v);
    let mut stage = vec![0.0; nn];
    for i in 0..nn {
        stage[i] = v[i] + 0.5 * dt * k1[i];
    }
    let k2 = rhs(&ops, &stage);
    for i in 0..nn {
        stage[i] = v[i] + 0.5 * dt * k2[i];
    }
    let k3 = rhs(&ops, &stage);
    for i in 0..nn {
        stage[i] = v[i] + dt * k3[i];
    }
    let k4 = rhs(&ops, &stage);
    let sixth = dt / 6.0;
    let next: Vec<f64> = (0..nn)
        .map(|i| v[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    advanced(state, dt, next, guard)
}

/// One stabilized IMEX step: the stiff part is frozen at the worst-case
/// diffusivity cbar = max e^{-2v} and inverted in Fourier space,
///   (1 - dt cbar lap) v' = v + dt (e^{-2v} - cbar) lap v.
/// Over-damping (cbar at the max) keeps the split stable; the remainder is
/// pointwise bounded.
pub fn step_imex(state: &FlowState, dt: f64, guard: bool) -> Result<FlowState> {
    check_dt(dt)?;
    let ops = fft::spectral_ops(state.v.n());
    let v = state.v.values();
    let cbar = (-2.0 * state.v.min_value()).exp();
    let lap = ops.laplacian(v);
    let rhs: Vec<f64> = v
        .iter()
        .zip(&lap)
        .map(|(&vi, &l)| vi + dt * (((-2.0 * vi).exp() - cbar) * l))
        .collect();
    let next = ops.solve_implicit_diffusion(&rhs, dt * cbar);
    advanced(state, dt, next, guard)
}

/// Diagnostics records plus the sampled conformal exponents, aligned index
/// by index; the carrier for snapshots and post-hoc distance attachment.
#[derive(Clone, Debug)]
pub struct FlowTrace {
    records: Vec<DiagnosticsRecord>,
    fields: Vec<ScalarField>,
    v_low_seen: f64,
    v_high_seen: f64,
}

impl FlowTrace {
    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [DiagnosticsRecord] {
        &mut self.records
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    /// Extremes of u over the initial state and every accepted step, not
    /// just the sampled ones; the measured discrete maximum principle.
    pub fn u_range_seen(&self) -> (f64, f64) {
        ((2.0 * self.v_low_seen).exp(), (2.0 * self.v_high_seen).exp())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn u_area(v: &ScalarField) -> f64 {
    v.values().iter().map(|&x| (2.0 * x).exp()).sum::<f64>() * v.h() * v.h()
}

/// Advances the state to t_end, landing exactly on every requested sample
/// time and recording diagnostics there.
///
/// Step-size policy: the scheme target (stable_dt for rk4, the configured
/// IMEX step otherwise) is additionally capped by t/8 near t = 0 (the decay
/// estimates blow up like 1/t, so early steps must resolve the transient)
/// with a floor of target/1024.  A guard rejection halves a running cap,
/// which doubles back on success; twenty consecutive rejections abort.
///
/// After every accepted step the zero mode of v is shifted to restore the
/// entry area of u exactly (the continuum flow conserves it, the stepped
/// flow alone drifts at first order in dt).  The shift is a rigid
/// translation of v by half the log of the area ratio, comparable in size
/// to the single-step drift it cancels, and exactly zero for stationary
/// constant states.
pub fn evolve(
    initial: &FlowState,
    t_end: f64,
    cfg: &SchemeConfig,
    sample_times: &[f64],
) -> Result<(FlowState, FlowTrace)> {
    cfg.validate()?;
    if !(t_end.is_finite() && t_end > initial.t) {
        return Err(Error::ConfigInvalid(format!(
            "t_end {t_end} must exceed the current time {}",
            initial.t
        )));
    }
    for w in sample_times.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::ConfigInvalid("sample times must be strictly increasing".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < initial.t || last > t_end {
            return Err(Error::ConfigInvalid(format!(
                "sample times must lie in [{}, {t_end}]",
                initial.t
            )));
        }
    }

    let mut trace = FlowTrace {
        records: Vec::new(),
        fields: Vec::new(),
        v_low_seen: initial.v.min_value(),
        v_high_seen: initial.v.max_value(),
    };
    let area0 = u_area(&initial.v);
    let mut state = initial.clone();
    let mut samples = sample_times.iter().copied().peekable();
    while samples.peek() == Some(&state.t) {
        samples.next();
        trace.records.push(record(&state));
        trace.fields.push(state.v.clone());
    }

    let mut stops: Vec<(f64, bool)> = samples.map(|t| (t, true)).collect();
    if stops.last().map(|&(t, _)| t) != Some(t_end) {
        stops.push((t_end, false));
    }

    let mut cap = f64::INFINITY;
    let mut rejections = 0u32;
    for (stop, is_sample) in stops {
        while state.t < stop {
            let target = match cfg.scheme {
                Scheme::Rk4 => stable_dt(&state, cfg.cfl),
                Scheme::Imex => cfg.imex_dt.unwrap_or(state.v.h() / 4.0),
            };
            let ramp = (state.t / 8.0).max(target / 1024.0);
            let remaining = stop - state.t;
            let dt = target.min(ramp).min(remaining).min(cap);
            let landing = dt >= remaining;
            let stepped = match cfg.scheme {
                Scheme::Rk4 => step_rk4(&state, dt, cfg.max_principle_guard),
                Scheme::Imex => step_imex(&state, dt, cfg.max_principle_guard),
            };
            match stepped {
                Ok(mut next) => {
                    if landing {
                        next.t = stop;
                    }
                    let shift = 0.5 * (area0 / u_area(&next.v)).ln();
                    if shift != 0.0 {
                        let grid = next.v.grid();
                        let vals: Vec<f64> =
                            next.v.values().iter().map(|&x| x + shift).collect();
                        next.v = ScalarField::from_values_unchecked(grid, vals);
                    }
                    trace.v_low_seen = trace.v_low_seen.min(next.v.min_value());
                    trace.v_high_seen = trace.v_high_seen.max(next.v.max_value());
                    state = next;
                    rejections = 0;
                    cap = if cap.is_finite() { 2.0 * cap } else { cap };
                }
                Err(Error::StepRejected(why)) => {
                    rejections += 1;
                    if rejections >= 20 {
                        return Err(Error::StiffnessFailure(format!(
                            "20 consecutive rejected steps near t = {}: {why}",
                            state.t
                        )));
                    }
                    cap = dt / 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        if is_sample {
            trace.records.push(record(&state));
            trace.fields.push(state.v.clone());
        }
    }
    Ok((state, trace))
}
