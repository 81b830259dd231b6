//! Fixed-step RK4 for both formulations, with diagnostics and blow-up detection.

use std::fmt;

use serde::Serialize;

use crate::diagnostics::{energy, mean_momentum, sobolev_norm, DiagnosticSeries};
use crate::equation::{eulerian_rhs, eulerian_velocity, lagrangian_rhs, BParams};
use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::grid::{check_same_grid, GridSpec, VectorField};

/// State of an explicit ODE that RK4 can advance.
pub trait OdeState: Clone {
    /// `self += alpha * other`.
    fn axpy(&mut self, alpha: f64, other: &Self);
    fn is_finite(&self) -> bool;
}

impl OdeState for VectorField {
    fn axpy(&mut self, alpha: f64, other: &Self) {
        VectorField::axpy(self, alpha, other);
    }

    fn is_finite(&self) -> bool {
        VectorField::is_finite(self)
    }
}

/// `(φ, v)` pair of the Lagrangian system.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub phi: FlowMap,
    pub v: VectorField,
}

impl OdeState for FlowState {
    fn axpy(&mut self, alpha: f64, other: &Self) {
        let mut f = self.phi.displacement().clone();
        f.axpy(alpha, other.phi.displacement());
        self.phi = FlowMap::from_displacement_unchecked(f);
        self.v.axpy(alpha, &other.v);
    }

    fn is_finite(&self) -> bool {
        self.phi.displacement().is_finite() && self.v.is_finite()
    }
}

/// One classical RK4 step of `y' = f(y)`.
pub fn rk4<S: OdeState>(y: &S, dt: f64, mut f: impl FnMut(&S) -> Result<S>) -> Result<S> {
    let k1 = f(y)?;
    let mut stage = y.clone();
    stage.axpy(0.5 * dt, &k1);
    let k2 = f(&stage)?;
    let mut stage = y.clone();
    stage.axpy(0.5 * dt, &k2);
    let k3 = f(&stage)?;
    let mut stage = y.clone();
    stage.axpy(dt, &k3);
    let k4 = f(&stage)?;
    let mut out = y.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    if !out.is_finite() {
        return Err(Error::NonFinite("rk4 stage"));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Formulation {
    Eulerian { u: VectorField },
    Lagrangian { phi: FlowMap, v: VectorField },
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub time: f64,
    pub formulation: Formulation,
}

impl SolverState {
    pub fn eulerian(u: VectorField) -> Self {
        Self { time: 0.0, formulation: Formulation::Eulerian { u } }
    }

    /// `φ = id`, `v = u₀`.
    pub fn lagrangian(u: VectorField) -> Self {
        let phi = FlowMap::identity(u.grid());
        Self { time: 0.0, formulation: Formulation::Lagrangian { phi, v: u } }
    }

    pub fn is_lagrangian(&self) -> bool {
        matches!(self.formulation, Formulation::Lagrangian { .. })
    }

    fn carried(&self) -> &VectorField {
        match &self.formulation {
            Formulation::Eulerian { u } => u,
            Formulation::Lagrangian { v, .. } => v,
        }
    }

    /// Eulerian velocity; `v∘φ⁻¹` on Lagrangian states.
    pub fn velocity(&self, p: &BParams) -> Result<VectorField> {
        match &self.formulation {
            Formulation::Eulerian { u } => Ok(u.clone()),
            Formulation::Lagrangian { phi, v } => eulerian_velocity(phi, v, p),
        }
    }
}

/// Advance `state` by one RK4 step on its own formulation.
pub fn step_rk4(state: &SolverState, dt: f64, p: &BParams) -> Result<SolverState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let formulation = match &state.formulation {
        Formulation::Eulerian { u } => {
            check_same_grid(u.grid(), p.grid())?;
            Formulation::Eulerian { u: rk4(u, dt, |y| eulerian_rhs(y, p))? }
        }
        Formulation::Lagrangian { phi, v } => {
            let start = FlowState { phi: phi.clone(), v: v.clone() };
            let end = rk4(&start, dt, |y| {
                let (dphi, dv) = lagrangian_rhs(&y.phi, &y.v, p)?;
                Ok(FlowState { phi: FlowMap::from_displacement_unchecked(dphi), v: dv })
            })?;
            Formulation::Lagrangian { phi: end.phi, v: end.v }
        }
    };
    Ok(SolverState { time: state.time + dt, formulation })
}

/// `safety · min_j h_j / max(1e−12, sup|u|)`.
pub fn cfl_dt(u: &VectorField, spec: &GridSpec, safety: f64) -> f64 {
    safety * spec.min_spacing() / u.sup_magnitude().max(1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupCaps {
    pub max_sup_norm: f64,
    pub min_jacobian: f64,
}

impl Default for BlowupCaps {
    fn default() -> Self {
        Self { max_sup_norm: 1e6, min_jacobian: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dt: TimeStep,
    pub t_end: f64,
    /// CFL safety factor for [`TimeStep::Auto`].
    pub safety: f64,
    pub blowup_caps: BlowupCaps,
    /// Diagnostics every this many steps (0: first and last only).
    pub diagnostics_every: usize,
    /// Stored states every this many steps (0: first and last only).
    pub snapshot_every: usize,
    pub sobolev_orders: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            t_end: 1.0,
            safety: 0.5,
            blowup_caps: BlowupCaps::default(),
            diagnostics_every: 1,
            snapshot_every: 0,
            sobolev_orders: vec![1.0, 2.0, 3.0, 4.0],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety must lie in (0, 1], got {}", self.safety));
        }
        if !(self.blowup_caps.max_sup_norm > 0.0 && self.blowup_caps.min_jacobian > 0.0) {
            return bad("blow-up caps must be positive".into());
        }
        if self.sobolev_orders.iter().any(|s| !(*s >= 0.0)) {
            return bad("sobolev orders must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlowupReason {
    Nan,
    SupNorm,
    Jacobian,
    Inversion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Completed,
    Blowup(BlowupReason),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Blowup(BlowupReason::Nan) => "blowup:nan",
            Termination::Blowup(BlowupReason::SupNorm) => "blowup:sup_norm",
            Termination::Blowup(BlowupReason::Jacobian) => "blowup:jacobian",
            Termination::Blowup(BlowupReason::Inversion) => "blowup:inversion",
        }
    }

    pub fn is_completed(&self) -> bool {
        *self == Termination::Completed
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Termination {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Errors that mean the solution left the admissible set rather than a bug
/// or bad input.
fn blowup_of(err: &Error) -> Option<BlowupReason> {
    match err {
        Error::NonFinite(_) => Some(BlowupReason::Nan),
        Error::JacobianMargin { .. } => Some(BlowupReason::Jacobian),
        Error::NewtonDivergence { .. } => Some(BlowupReason::Inversion),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub state: SolverState,
    /// Eulerian velocity at this time.
    pub velocity: VectorField,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    snapshots: Vec<Snapshot>,
    series: Vec<DiagnosticSeries>,
    termination: Termination,
    steps: usize,
    dt: f64,
}

impl Trajectory {
    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn series(&self) -> &[DiagnosticSeries] {
        &self.series
    }

    pub fn series_named(&self, name: &str) -> Option<&DiagnosticSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Steps actually taken.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size used (0 when no step was needed).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial state")
    }
}

struct Recorder {
    orders: Vec<f64>,
    lagrangian: bool,
    series: Vec<DiagnosticSeries>,
    energy0: Option<f64>,
}

impl Recorder {
    fn new(orders: &[f64], lagrangian: bool, dim: usize) -> Self {
        let mut names = vec!["energy".to_string(), "energy_rel_drift".to_string()];
        names.extend((0..dim).map(|i| format!("mean_momentum_{i}")));
        names.push("sup_norm".into());
        names.push("l2_norm".into());
        names.extend(orders.iter().map(|s| format!("sobolev_{s}")));
        if lagrangian {
            names.push("min_jacobian".into());
            names.extend((0..dim).map(|i| format!("mean_displacement_{i}")));
        }
        let series = names.into_iter().map(DiagnosticSeries::new).collect();
        Self { orders: orders.to_vec(), lagrangian, series, energy0: None }
    }

    fn record(&mut self, state: &SolverState, u: &VectorField, p: &BParams) -> Result<()> {
        let t = state.time;
        let e = energy(u, p)?;
        let e0 = *self.energy0.get_or_insert(e);
        let drift = if e0 != 0.0 { (e - e0).abs() / e0.abs() } else { (e - e0).abs() };
        let mut values = vec![e, drift];
        values.extend(mean_momentum(u, p)?);
        values.push(u.sup_norm());
        values.push(u.l2_norm());
        values.extend(self.orders.iter().map(|&s| sobolev_norm(u, s)));
        if self.lagrangian {
            if let Formulation::Lagrangian { phi, .. } = &state.formulation {
                values.push(phi.min_jacobian());
                values.extend(phi.mean_displacement());
            }
        }
        debug_assert_eq!(values.len(), self.series.len());
        for (s, v) in self.series.iter_mut().zip(values) {
            s.push(t, v);
        }
        Ok(())
    }
}

/// Post-step admissibility check.
fn check_caps(state: &SolverState, caps: &BlowupCaps) -> Option<BlowupReason> {
    let carried = state.carried();
    if !carried.is_finite() {
        return Some(BlowupReason::Nan);
    }
    if carried.sup_norm() > caps.max_sup_norm {
        return Some(BlowupReason::SupNorm);
    }
    if let Formulation::Lagrangian { phi, .. } = &state.formulation {
        if !phi.displacement().is_finite() {
            return Some(BlowupReason::Nan);
        }
        if !(phi.min_jacobian() >= caps.min_jacobian) {
            return Some(BlowupReason::Jacobian);
        }
    }
    None
}

fn due(k: usize, every: usize) -> bool {
    every > 0 && k % every == 0
}

/// Integrate from `initial` to `initial.time + t_end`.
///
/// The step count is `ceil(t_end/dt)` and the step is shrunk to land exactly
/// on `t_end`; step `k` sits at `t₀ + k·dt`. On blow-up the last admissible
/// state becomes the final snapshot.
pub fn run(initial: &SolverState, p: &BParams, cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_same_grid(initial.carried().grid(), p.grid())?;
    let lagrangian = initial.is_lagrangian();
    let mut recorder = Recorder::new(&cfg.sobolev_orders, lagrangian, p.grid().dim());
    let t0 = initial.time;

    if let Some(reason) = check_caps(initial, &cfg.blowup_caps) {
        return Err(Error::InvalidConfig(format!(
            "initial state is not admissible ({})",
            Termination::Blowup(reason)
        )));
    }
    let u0 = initial.velocity(p)?;
    recorder.record(initial, &u0, p)?;

    let (steps, dt) = if cfg.t_end == 0.0 {
        (0, 0.0)
    } else {
        let nominal = match cfg.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => cfl_dt(&u0, p.spec(), cfg.safety).min(cfg.t_end),
        };
        let n = (cfg.t_end / nominal).ceil().max(1.0) as usize;
        (n, cfg.t_end / n as f64)
    };

    let mut snapshots = vec![Snapshot { time: t0, state: initial.clone(), velocity: u0 }];
    let mut state = initial.clone();
    let mut termination = Termination::Completed;
    let mut taken = 0;
    for k in 1..=steps {
        let mut next = match step_rk4(&state, dt, p) {
            Ok(s) => s,
            Err(e) => match blowup_of(&e) {
                Some(reason) => {
                    termination = Termination::Blowup(reason);
                    break;
                }
                None => return Err(e),
            },
        };
        next.time = t0 + k as f64 * dt;
        if let Some(reason) = check_caps(&next, &cfg.blowup_caps) {
            termination = Termination::Blowup(reason);
            break;
        }
        let last = k == steps;
        let want_diag = last || due(k, cfg.diagnostics_every);
        let want_snap = last || due(k, cfg.snapshot_every);
        if want_diag || want_snap {
            let u = match next.velocity(p) {
                Ok(u) => u,
                Err(e) => match blowup_of(&e) {
                    Some(reason) => {
                        termination = Termination::Blowup(reason);
                        break;
                    }
                    None => return Err(e),
                },
            };
            if want_diag {
                recorder.record(&next, &u, p)?;
            }
            if want_snap {
                snapshots.push(Snapshot { time: next.time, state: next.clone(), velocity: u });
            }
        }
        state = next;
        taken = k;
    }

    if !termination.is_completed() && taken > 0 && snapshots.last().map(|s| s.time) != Some(state.time) {
        // keep the last admissible state; its velocity may itself be unreachable
        if let Ok(u) = state.velocity(p) {
            if recorder.series[0].times.last() != Some(&state.time) {
                recorder.record(&state, &u, p)?;
            }
            snapshots.push(Snapshot { time: state.time, state: state.clone(), velocity: u });
        }
    }

    Ok(Trajectory { snapshots, series: recorder.series, termination, steps: taken, dt })
}

/// Observed order `log2(|y_h − y_{h/2}| / |y_{h/2} − y_{h/4}|)` in the sup norm.
pub fn richardson_order(coarse: &VectorField, mid: &VectorField, fine: &VectorField) -> f64 {
    (coarse.max_abs_diff(mid) / mid.max_abs_diff(fine)).log2()
}
