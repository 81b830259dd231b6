//! The four subcommands. Each returns an [`Outcome`] mapped to the exit status
//! by `main`; configuration and I/O failures surface as [`CliError`].

use std::path::{Path, PathBuf};
use std::sync::Arc;

use bequation::diagnostics::regularity_trace;
use bequation::equation::BParams;
use bequation::integrate::{cfl_dt, run, Formulation, RunConfig, SolverState, TimeStep, Trajectory};
use bequation::multipliers::{validate_class, SamplingPlan};
use bequation::{Grid, GridSpec, VectorField};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigFile, FormulationChoice, SymbolConfig};
use crate::error::{CliError, CliResult};
use crate::output::{format_f64, timestamp, ManifestHeader, OutputDir};

/// Minimum temporal order accepted by `convergence`.
pub const ORDER_GATE: f64 = 3.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Blowup,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Blowup => 2,
            Outcome::ValidationFailed => 3,
        }
    }
}

/// Exit status for a command error.
pub const ERROR_EXIT: u8 = 1;

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed_override: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Eulerian,
    Lagrangian,
}

impl Which {
    pub fn label(self) -> &'static str {
        match self {
            Which::Eulerian => "eulerian",
            Which::Lagrangian => "lagrangian",
        }
    }
}

/// A parsed config with its solver objects built.
pub struct Prepared {
    pub config: ConfigFile,
    pub params: BParams,
    pub initial: VectorField,
    pub run: RunConfig,
}

impl Prepared {
    pub fn from_config(mut config: ConfigFile, opts: &Options) -> CliResult<Self> {
        if let Some(seed) = opts.seed_override {
            config.override_seed(seed)?;
        }
        let grid = config.grid()?;
        Self::on_grid(config, &grid)
    }

    /// Same physics on a different grid (used by spatial convergence).
    pub fn on_grid(config: ConfigFile, grid: &Arc<Grid>) -> CliResult<Self> {
        let symbol = config.params.operator.symbol(grid.dim())?;
        let params = BParams::new(config.params.b, symbol, grid)?.with_flow_options(config.flow_options());
        let initial = config.scenario.build(grid)?;
        let run = config.run_config()?;
        Ok(Self { config, params, initial, run })
    }

    pub fn load(path: &Path, opts: &Options) -> CliResult<Self> {
        Self::from_config(ConfigFile::load(path)?, opts)
    }

    pub fn formulations(&self) -> Vec<Which> {
        match self.config.run.formulation {
            FormulationChoice::Eulerian => vec![Which::Eulerian],
            FormulationChoice::Lagrangian => vec![Which::Lagrangian],
            FormulationChoice::Both => vec![Which::Eulerian, Which::Lagrangian],
        }
    }

    pub fn integrate(&self, which: Which, run_cfg: &RunConfig) -> CliResult<Trajectory> {
        let state = match which {
            Which::Eulerian => SolverState::eulerian(self.initial.clone()),
            Which::Lagrangian => SolverState::lagrangian(self.initial.clone()),
        };
        Ok(run(&state, &self.params, run_cfg)?)
    }

    /// Run the requested formulations, concurrently when the pool allows.
    pub fn integrate_all(&self, which: &[Which]) -> CliResult<Vec<Trajectory>> {
        which.par_iter().map(|&w| self.integrate(w, &self.run)).collect()
    }
}

fn output_root(out: Option<&Path>, config: &ConfigFile) -> CliResult<PathBuf> {
    out.map(Path::to_path_buf)
        .or_else(|| config.output.directory.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set output.directory".into()))
}

fn header(command: &str, config: serde_json::Value, started: String, termination: serde_json::Value) -> ManifestHeader {
    ManifestHeader {
        tool: "bequation".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config,
        started,
        finished: timestamp(),
        termination,
    }
}

fn config_echo<T: Serialize>(config: &T) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Series, regularity trace and optional snapshots of one trajectory.
fn write_trajectory(out: &mut OutputDir, prep: &Prepared, which: Which, traj: &Trajectory) -> CliResult<()> {
    let label = which.label();
    if prep.config.output.series {
        out.write_series(&format!("series_{label}.csv"), traj.series())?;
        out.write_series(&format!("regularity_{label}.csv"), &regularity_trace(traj, &prep.run.sobolev_orders))?;
    }
    if prep.config.output.snapshots {
        for (i, snap) in traj.snapshots().iter().enumerate() {
            let stem = format!("snapshots/{label}_{i:05}");
            out.write_snapshot(&format!("{stem}_u"), "u", snap.time, &snap.velocity)?;
            if let Formulation::Lagrangian { phi, v } = &snap.state.formulation {
                out.write_snapshot(&format!("{stem}_v"), "v", snap.time, v)?;
                out.write_snapshot(&format!("{stem}_displacement"), "displacement", snap.time, phi.displacement())?;
            }
        }
    }
    Ok(())
}

fn terminations(which: &[Which], trajs: &[Trajectory]) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = which
        .iter()
        .zip(trajs)
        .map(|(w, t)| (w.label().to_string(), json!(t.termination().as_str())))
        .collect();
    serde_json::Value::Object(map)
}

fn any_blowup(trajs: &[Trajectory]) -> bool {
    trajs.iter().any(|t| !t.termination().is_completed())
}

pub fn cmd_run(config: &Path, out: Option<&Path>, opts: &Options) -> CliResult<Outcome> {
    let started = timestamp();
    let prep = Prepared::load(config, opts)?;
    let root = output_root(out, &prep.config)?;
    let which = prep.formulations();
    let trajs = prep.integrate_all(&which)?;
    let mut dir = OutputDir::create(&root)?;
    for (w, t) in which.iter().zip(&trajs) {
        write_trajectory(&mut dir, &prep, *w, t)?;
    }
    dir.finish(header("run", config_echo(&prep.config), started, terminations(&which, &trajs)))?;
    Ok(if any_blowup(&trajs) { Outcome::Blowup } else { Outcome::Success })
}

/// Per-snapshot `‖u − v∘φ⁻¹‖` rows: time, sup, relative sup, relative L².
pub fn comparison_rows(eulerian: &Trajectory, lagrangian: &Trajectory) -> Vec<Vec<f64>> {
    eulerian
        .snapshots()
        .iter()
        .zip(lagrangian.snapshots())
        .filter(|(a, b)| a.time == b.time)
        .map(|(a, b)| {
            let diff = a.velocity.sub(&b.velocity);
            let sup = diff.sup_norm();
            let rel = |d: f64, scale: f64| if scale > 0.0 { d / scale } else { d };
            vec![a.time, sup, rel(sup, a.velocity.sup_norm()), rel(diff.l2_norm(), a.velocity.l2_norm())]
        })
        .collect()
}

pub fn cmd_compare(config: &Path, out: Option<&Path>, opts: &Options) -> CliResult<Outcome> {
    let started = timestamp();
    let prep = Prepared::load(config, opts)?;
    if prep.config.run.formulation != FormulationChoice::Both {
        return Err(CliError::Config("compare needs run.formulation = \"both\"".into()));
    }
    let root = output_root(out, &prep.config)?;
    let which = [Which::Eulerian, Which::Lagrangian];
    let trajs = prep.integrate_all(&which)?;
    let mut dir = OutputDir::create(&root)?;
    for (w, t) in which.iter().zip(&trajs) {
        write_trajectory(&mut dir, &prep, *w, t)?;
    }
    let rows = comparison_rows(&trajs[0], &trajs[1]);
    let header_row: Vec<String> =
        ["time", "sup_diff", "rel_sup_diff", "rel_l2_diff"].iter().map(|s| s.to_string()).collect();
    dir.write_table("compare.csv", &header_row, &rows)?;
    dir.finish(header("compare", config_echo(&prep.config), started, terminations(&which, &trajs)))?;
    if any_blowup(&trajs) {
        return Ok(Outcome::Blowup);
    }
    let final_rel = rows.last().map(|r| r[2]).unwrap_or(0.0);
    Ok(if final_rel <= prep.config.run.compare_tolerance { Outcome::Success } else { Outcome::ValidationFailed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StudyKind {
    Temporal,
    Spatial,
    Both,
}

/// Result of a step-halving study.
#[derive(Clone, Debug)]
pub struct TemporalStudy {
    pub dts: Vec<f64>,
    /// `‖u_i − u_{i+1}‖_∞` between successive levels.
    pub diffs: Vec<f64>,
    /// `log2(diffs[i] / diffs[i+1])`.
    pub orders: Vec<f64>,
    pub blowup: bool,
}

/// Result of a grid-doubling study against the finest level.
#[derive(Clone, Debug)]
pub struct SpatialStudy {
    pub points: Vec<usize>,
    /// Sup error at the coarse nodes against the finest level.
    pub errors: Vec<f64>,
    /// `errors[i] / errors[i+1]`.
    pub factors: Vec<f64>,
    pub blowup: bool,
}

fn final_velocity(traj: &Trajectory) -> &VectorField {
    &traj.final_snapshot().velocity
}

fn study_formulation(prep: &Prepared) -> Which {
    match prep.config.run.formulation {
        FormulationChoice::Lagrangian => Which::Lagrangian,
        _ => Which::Eulerian,
    }
}

fn base_dt(prep: &Prepared) -> f64 {
    match prep.run.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => cfl_dt(&prep.initial, prep.params.spec(), prep.run.safety).min(prep.run.t_end),
    }
}

/// Runs at `dt, dt/2, …, dt/2^(levels−1)` on the config grid.
pub fn temporal_study(prep: &Prepared, levels: usize) -> CliResult<TemporalStudy> {
    let which = study_formulation(prep);
    let dt0 = base_dt(prep);
    let dts: Vec<f64> = (0..levels).map(|i| dt0 / f64::powi(2.0, i as i32)).collect();
    let trajs: Vec<Trajectory> = dts
        .par_iter()
        .map(|&dt| {
            let cfg = RunConfig { dt: TimeStep::Fixed(dt), diagnostics_every: 0, snapshot_every: 0, ..prep.run.clone() };
            prep.integrate(which, &cfg)
        })
        .collect::<CliResult<_>>()?;
    let blowup = any_blowup(&trajs);
    let diffs: Vec<f64> =
        trajs.windows(2).map(|w| final_velocity(&w[0]).max_abs_diff(final_velocity(&w[1]))).collect();
    let orders = diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(TemporalStudy { dts, diffs, orders, blowup })
}

/// Runs at `N, 2N, …` with a common step; the finest level is the reference.
pub fn spatial_study(prep: &Prepared, levels: usize) -> CliResult<SpatialStudy> {
    let which = study_formulation(prep);
    let base = prep.params.spec();
    let points: Vec<usize> = (0..levels).map(|i| base.points()[0] << i).collect();
    let finest_points: Vec<usize> = base.points().iter().map(|n| n << (levels - 1)).collect();
    let finest = Prepared::on_grid(prep.config.clone(), &Grid::new(GridSpec::new(finest_points, base.lengths().to_vec())?))?;
    let dt = base_dt(&finest);
    let cfg = RunConfig { dt: TimeStep::Fixed(dt), diagnostics_every: 0, snapshot_every: 0, ..prep.run.clone() };
    let trajs: Vec<Trajectory> = (0..levels)
        .into_par_iter()
        .map(|i| {
            let pts: Vec<usize> = base.points().iter().map(|n| n << i).collect();
            let level = Prepared::on_grid(prep.config.clone(), &Grid::new(GridSpec::new(pts, base.lengths().to_vec())?))?;
            level.integrate(which, &cfg)
        })
        .collect::<CliResult<_>>()?;
    let blowup = any_blowup(&trajs);
    let reference = final_velocity(trajs.last().expect("levels >= 3"));
    let errors: Vec<f64> = trajs[..levels - 1]
        .iter()
        .enumerate()
        .map(|(i, t)| coarse_node_error(final_velocity(t), reference, 1 << (levels - 1 - i)))
        .collect();
    let factors = errors.windows(2).map(|e| e[0] / e[1]).collect();
    Ok(SpatialStudy { points, errors, factors, blowup })
}

/// Sup difference at the coarse nodes, which are every `stride`-th fine node per axis.
pub fn coarse_node_error(coarse: &VectorField, fine: &VectorField, stride: usize) -> f64 {
    let cg = coarse.grid();
    let fg = fine.grid();
    let mut worst = 0.0f64;
    for k in 0..cg.len() {
        let fk: usize = (0..cg.dim()).map(|a| cg.axis_index(k, a) * stride * fg.strides()[a]).sum();
        for c in 0..cg.dim() {
            worst = worst.max((coarse.component(c).values()[k] - fine.component(c).values()[fk]).abs());
        }
    }
    worst
}

fn cell(x: Option<&f64>) -> String {
    x.map(|&v| format_f64(v)).unwrap_or_default()
}

pub fn cmd_convergence(
    config: &Path,
    out: Option<&Path>,
    levels: usize,
    kind: StudyKind,
    opts: &Options,
) -> CliResult<Outcome> {
    if levels < 3 {
        return Err(CliError::Config(format!("convergence needs at least 3 levels, got {levels}")));
    }
    let started = timestamp();
    let prep = Prepared::load(config, opts)?;
    let root = output_root(out, &prep.config)?;
    let mut dir = OutputDir::create(&root)?;
    let mut blowup = false;
    let mut gate_ok = true;
    let mut summary = serde_json::Map::new();

    if matches!(kind, StudyKind::Temporal | StudyKind::Both) {
        let study = temporal_study(&prep, levels)?;
        blowup |= study.blowup;
        let mut text = String::from("level,dt,diff_to_next,observed_order\n");
        for i in 0..levels {
            text.push_str(&format!(
                "{i},{},{},{}\n",
                format_f64(study.dts[i]),
                cell(study.diffs.get(i)),
                cell(study.orders.get(i))
            ));
        }
        dir.write("convergence_temporal.csv", text.as_bytes())?;
        let first = study.orders.first().copied().unwrap_or(f64::NAN);
        gate_ok &= first >= ORDER_GATE;
        summary.insert("temporal_order".into(), json!(first));
    }
    if matches!(kind, StudyKind::Spatial | StudyKind::Both) {
        let study = spatial_study(&prep, levels)?;
        blowup |= study.blowup;
        let mut text = String::from("level,points,error_vs_finest,reduction_factor\n");
        for i in 0..levels {
            text.push_str(&format!(
                "{i},{},{},{}\n",
                study.points[i],
                cell(study.errors.get(i)),
                cell(study.factors.get(i))
            ));
        }
        dir.write("convergence_spatial.csv", text.as_bytes())?;
        summary.insert("spatial_first_factor".into(), json!(study.factors.first()));
    }

    let status = if blowup { "blowup" } else if gate_ok { "passed" } else { "failed" };
    summary.insert("status".into(), json!(status));
    dir.finish(header("convergence", config_echo(&prep.config), started, serde_json::Value::Object(summary)))?;
    Ok(if blowup {
        Outcome::Blowup
    } else if gate_ok {
        Outcome::Success
    } else {
        Outcome::ValidationFailed
    })
}

pub fn cmd_validate_symbol(config: &Path, out: Option<&Path>) -> CliResult<Outcome> {
    let started = timestamp();
    let cfg = SymbolConfig::load(config)?;
    let root = out
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::Config("validate-symbol needs --out".into()))?;
    let symbol = cfg.operator.symbol(cfg.dim)?;
    let defaults = SamplingPlan::default();
    let plan = SamplingPlan {
        xi_max: cfg.xi_max.unwrap_or(defaults.xi_max),
        magnitudes: cfg.samples.unwrap_or(defaults.magnitudes),
        cap: cfg.cap.unwrap_or(defaults.cap),
        ..defaults
    };
    let report = validate_class(&symbol, cfg.order, &plan)?;
    let mut dir = OutputDir::create(&root)?;
    dir.write("class_report.json", &serde_json::to_vec_pretty(&report).expect("report serializes"))?;
    let verdict = if report.all_ok() { "passed" } else { "failed" };
    dir.finish(header("validate-symbol", config_echo(&cfg), started, json!(verdict)))?;
    Ok(if report.all_ok() { Outcome::Success } else { Outcome::ValidationFailed })
}
