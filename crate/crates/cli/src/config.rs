//! JSON run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use bequation::flow::FlowOptions;
use bequation::integrate::{BlowupCaps, RunConfig, TimeStep};
use bequation::interp::Interpolation;
use bequation::multipliers::{builtin_diff_poly, builtin_hilbert, builtin_sobolev, MultiplierSymbol, PolyTerm};
use bequation::scenarios;
use bequation::{Grid, GridSpec, VectorField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub scenario: ScenarioConfig,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub b: f64,
    pub operator: OperatorConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Sobolev { s: f64 },
    Hilbert {},
    DiffPoly { terms: Vec<TermConfig> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_im: Option<f64>,
    pub powers: Vec<u32>,
}

impl OperatorConfig {
    pub fn symbol(&self, dim: usize) -> CliResult<MultiplierSymbol> {
        Ok(match self {
            OperatorConfig::Sobolev { s } => builtin_sobolev(dim, *s)?,
            OperatorConfig::Hilbert {} => builtin_hilbert(dim)?,
            OperatorConfig::DiffPoly { terms } => {
                let terms: Vec<PolyTerm> = terms
                    .iter()
                    .map(|t| PolyTerm {
                        coeff: Complex64::new(t.coeff, t.coeff_im.unwrap_or(0.0)),
                        powers: t.powers.clone(),
                    })
                    .collect();
                builtin_diff_poly(dim, &terms)?
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    Gaussian {
        amplitude: f64,
        width: f64,
        /// Defaults to the domain center.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Random {
        seed: u64,
        kmax: usize,
        amplitude: f64,
    },
    Peakon {
        c: f64,
        /// Gaussian mollifier width in wavenumber units.
        sigma_k: f64,
        #[serde(default)]
        t: f64,
    },
}

impl ScenarioConfig {
    pub fn build(&self, grid: &Arc<Grid>) -> CliResult<VectorField> {
        Ok(match self {
            ScenarioConfig::Gaussian { amplitude, width, center } => {
                let center = center
                    .clone()
                    .unwrap_or_else(|| grid.spec().lengths().iter().map(|l| l / 2.0).collect());
                scenarios::gaussian_bump(grid, &center, *amplitude, *width)?
            }
            ScenarioConfig::Random { seed, kmax, amplitude } => {
                scenarios::band_limited_random(grid, *seed, *kmax, *amplitude)?
            }
            ScenarioConfig::Peakon { c, sigma_k, t } => {
                scenarios::mollify(&scenarios::periodic_peakon(grid, *c, *t)?, *sigma_k)?
            }
        })
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FormulationChoice {
    Eulerian,
    Lagrangian,
    Both,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationChoice {
    #[default]
    Cubic,
    Trigonometric,
}

/// `dt` is a positive number or the string `"auto"`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum DtConfig {
    Fixed(f64),
    Keyword(String),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    #[serde(default = "default_max_sup")]
    pub max_sup_norm: f64,
    #[serde(default = "default_min_jacobian")]
    pub min_jacobian: f64,
}

impl Default for CapsConfig {
    fn default() -> Self {
        Self { max_sup_norm: default_max_sup(), min_jacobian: default_min_jacobian() }
    }
}

fn default_max_sup() -> f64 {
    1e6
}
fn default_min_jacobian() -> f64 {
    1e-3
}
fn default_safety() -> f64 {
    0.5
}
fn default_every() -> usize {
    1
}
fn default_orders() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0]
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_true() -> bool {
    true
}
fn default_scheme() -> String {
    "rk4".into()
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub formulation: FormulationChoice,
    pub dt: DtConfig,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "default_every")]
    pub diagnostics_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub blowup_caps: CapsConfig,
    #[serde(default)]
    pub interpolation: InterpolationChoice,
    #[serde(default = "default_orders")]
    pub sobolev_orders: Vec<f64>,
    /// Final relative sup difference accepted by `compare`.
    #[serde(default = "default_tolerance")]
    pub compare_tolerance: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default = "default_true")]
    pub series: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, snapshots: false, series: true }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.grid.points.len() != self.grid.dim || self.grid.lengths.len() != self.grid.dim {
            return bad(format!(
                "grid.dim = {} but {} points and {} lengths given",
                self.grid.dim,
                self.grid.points.len(),
                self.grid.lengths.len()
            ));
        }
        if self.run.scheme != "rk4" {
            return bad(format!("run.scheme must be \"rk4\", got {:?}", self.run.scheme));
        }
        if let DtConfig::Keyword(k) = &self.run.dt {
            if k != "auto" {
                return bad(format!("run.dt must be a number or \"auto\", got {k:?}"));
            }
        }
        if !(self.run.compare_tolerance > 0.0) {
            return bad("run.compare_tolerance must be positive".into());
        }
        self.run_config()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        GridSpec::new(self.grid.points.clone(), self.grid.lengths.clone()).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Replace the seed of a random scenario.
    pub fn override_seed(&mut self, seed: u64) -> CliResult<()> {
        match &mut self.scenario {
            ScenarioConfig::Random { seed: s, .. } => {
                *s = seed;
                Ok(())
            }
            _ => Err(CliError::Config("--seed-override needs a random scenario".into())),
        }
    }

    pub fn grid(&self) -> CliResult<Arc<Grid>> {
        Ok(Grid::new(GridSpec::new(self.grid.points.clone(), self.grid.lengths.clone())?))
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions::with_interpolation(match self.run.interpolation {
            InterpolationChoice::Cubic => Interpolation::CubicSpline,
            InterpolationChoice::Trigonometric => Interpolation::Trigonometric,
        })
    }

    pub fn run_config(&self) -> CliResult<RunConfig> {
        let dt = match &self.run.dt {
            DtConfig::Fixed(dt) => TimeStep::Fixed(*dt),
            DtConfig::Keyword(_) => TimeStep::Auto,
        };
        Ok(RunConfig {
            dt,
            t_end: self.run.t_end,
            safety: self.run.safety,
            blowup_caps: BlowupCaps {
                max_sup_norm: self.run.blowup_caps.max_sup_norm,
                min_jacobian: self.run.blowup_caps.min_jacobian,
            },
            diagnostics_every: self.run.diagnostics_every,
            snapshot_every: self.run.snapshot_every,
            sobolev_orders: self.run.sobolev_orders.clone(),
        })
    }
}

/// Input of `validate-symbol`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymbolConfig {
    pub dim: usize,
    pub operator: OperatorConfig,
    /// Order `r` to certify against.
    pub order: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl SymbolConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: SymbolConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if !cfg.order.is_finite() {
            return Err(CliError::Config("order must be finite".into()));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "grid": {"dim": 1, "points": [64], "lengths": [6.283185307179586]},
        "params": {"b": 2.0, "operator": {"type": "sobolev", "s": 1.0}},
        "scenario": {"type": "gaussian", "amplitude": 0.5, "width": 0.8},
        "run": {"formulation": "eulerian", "dt": 0.01, "t_end": 0.1}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ConfigFile::from_json(BASE).unwrap();
        assert_eq!(cfg.run.safety, 0.5);
        assert_eq!(cfg.run.sobolev_orders, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(cfg.output.series && !cfg.output.snapshots);
        let u = cfg.scenario.build(&cfg.grid().unwrap()).unwrap();
        assert!((u.sup_norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let with = |from: &str, to: &str| ConfigFile::from_json(&BASE.replace(from, to));
        assert!(with("\"t_end\": 0.1", "\"t_end\": 0.1, \"extra\": 1").is_err());
        assert!(with("\"s\": 1.0", "\"s\": 1.0, \"order\": 2").is_err());
        assert!(with("\"width\": 0.8", "\"width\": 0.8, \"sigma\": 1").is_err());
        assert!(with("\"dim\": 1,", "\"dim\": 1, \"ghost\": true,").is_err());
        assert!(with("{\"type\": \"sobolev\", \"s\": 1.0}", "{\"type\": \"hilbert\", \"s\": 1.0}").is_err());
    }

    #[test]
    fn dt_accepts_auto_only() {
        let auto = ConfigFile::from_json(&BASE.replace("\"dt\": 0.01", "\"dt\": \"auto\"")).unwrap();
        assert_eq!(auto.run_config().unwrap().dt, TimeStep::Auto);
        assert!(ConfigFile::from_json(&BASE.replace("\"dt\": 0.01", "\"dt\": \"fast\"")).is_err());
        assert!(ConfigFile::from_json(&BASE.replace("\"dt\": 0.01", "\"dt\": -1")).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(ConfigFile::from_json(&BASE.replace("\"dim\": 1", "\"dim\": 2")).is_err());
    }

    #[test]
    fn seed_override_needs_random_scenario() {
        let mut cfg = ConfigFile::from_json(BASE).unwrap();
        assert!(cfg.override_seed(3).is_err());
        let mut random = ConfigFile::from_json(&BASE.replace(
            r#"{"type": "gaussian", "amplitude": 0.5, "width": 0.8}"#,
            r#"{"type": "random", "seed": 1, "kmax": 5, "amplitude": 0.2}"#,
        ))
        .unwrap();
        random.override_seed(9).unwrap();
        assert!(matches!(random.scenario, ScenarioConfig::Random { seed: 9, .. }));
    }

    #[test]
    fn diff_poly_operator() {
        let op: OperatorConfig = serde_json::from_str(
            r#"{"type": "diff_poly", "terms": [{"coeff": 1.0, "powers": [0]}, {"coeff": -1.0, "powers": [2]}]}"#,
        )
        .unwrap();
        let sym = op.symbol(1).unwrap();
        assert_eq!(sym.evaluate_scalar(&[2.0]).unwrap().re, 5.0);
    }
}
