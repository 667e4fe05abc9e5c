//! Run configuration: TOML with one table per module, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lsuq_core::assembly::PlaneWave;
use lsuq_core::forward_uq::{Contrast, ErrorNorm, PipelineConfig};
use lsuq_core::geometry::{DegeneratePolicy, KappaFrame, ParamVector, RadiusModel};
use lsuq_core::potential::ObservationSetup;
use lsuq_core::solver::SolverKind;
use lsuq_core::{Error, Result};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub label: String,
    pub geometry: GeometryConfig,
    pub mesh: MeshConfig,
    pub assembly: AssemblyConfig,
    pub solver: SolverConfig,
    pub observation: ObservationConfig,
    pub forward: ForwardConfig,
    pub bayes: BayesConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub theta: f64,
    pub zeta: f64,
    /// Parameter dimension, twice the number of Fourier modes.
    pub s: usize,
    pub base_radius: f64,
    /// `material` or `spatial`.
    pub kappa_frame: String,
    /// `variable`, `zero` or a number for a constant contrast.
    pub contrast: String,
    pub rho_floor: f64,
    /// `error` or `clamp`.
    pub degenerate: String,
    pub validation_grid: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            theta: 0.25,
            zeta: 3.0,
            s: 100,
            base_radius: 1.0,
            kappa_frame: "material".into(),
            contrast: "variable".into(),
            rho_floor: lsuq_core::geometry::DEFAULT_RHO_FLOOR,
            degenerate: "error".into(),
            validation_grid: lsuq_core::forward_uq::DEFAULT_VALIDATION_GRID,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub level: u32,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { level: 2 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyConfig {
    pub quad_order: usize,
    pub near_threshold: f64,
    pub uinc_direction: [f64; 2],
    pub kappa0: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            quad_order: lsuq_core::assembly::DEFAULT_QUAD_ORDER,
            near_threshold: lsuq_core::assembly::DEFAULT_NEAR_THRESHOLD,
            uinc_direction: [1.0, 0.0],
            kappa0: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// `direct` or `iterative`.
    pub solver: String,
    pub iter_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver: "direct".into(),
            iter_tol: 1e-12,
            restart: 100,
            max_iter: 2000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationConfig {
    pub obs_count: usize,
    pub obs_radius: f64,
    pub obs_phase: f64,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        ObservationConfig {
            obs_count: lsuq_core::potential::DEFAULT_OBS_COUNT,
            obs_radius: lsuq_core::potential::DEFAULT_OBS_RADIUS,
            obs_phase: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    #[serde(rename = "N_list")]
    pub n_list: Vec<u64>,
    #[serde(rename = "N_ref")]
    pub n_ref: u64,
    /// Any of `rlr`, `ipl2`, `ipl3`, `mc`.
    pub rules: Vec<String>,
    /// Rule family for the reference estimate; empty means the same family.
    pub reference_rule: String,
    /// `max` or `l2`.
    pub error_norm: String,
    /// Random shifts of the lattice rule.
    pub shifts: usize,
    pub shift_seed: u64,
    /// Lattice generating-vector file; empty means embedded CBC.
    pub generating_data: String,
    pub record_timing: bool,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            n_list: vec![8, 16, 32, 64, 128, 256, 512],
            n_ref: 2048,
            rules: vec!["rlr".into()],
            reference_rule: String::new(),
            error_norm: "max".into(),
            shifts: 4,
            shift_seed: 2024,
            generating_data: String::new(),
            record_timing: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BayesConfig {
    pub sigma: f64,
    pub noise_seed: u64,
    /// Ground truth; empty means the default `(-0.4, 0.4, ..., 0.4, 0, ...)`.
    pub ystar: Vec<f64>,
    pub angles: usize,
    #[serde(rename = "N")]
    pub n: u64,
    pub rule: String,
    /// Sample sizes for the inversion convergence table; empty skips it.
    #[serde(rename = "N_list")]
    pub n_list: Vec<u64>,
    #[serde(rename = "N_ref")]
    pub n_ref: u64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            sigma: lsuq_core::bayes::DEFAULT_SIGMA,
            noise_seed: 7,
            ystar: Vec::new(),
            angles: lsuq_core::bayes::DEFAULT_ANGLE_COUNT,
            n: 512,
            rule: "rlr".into(),
            n_list: Vec::new(),
            n_ref: 2048,
        }
    }
}

fn bad(key: &str, value: impl std::fmt::Display) -> Error {
    Error::Parameter(format!("invalid value for {key}: {value}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parameter(e.to_string()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Fully resolved configuration as TOML.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn radius_model(&self) -> Result<RadiusModel> {
        let g = &self.geometry;
        if g.s == 0 || g.s % 2 != 0 {
            return Err(bad("geometry.s (positive and even)", g.s));
        }
        let mut model = RadiusModel::new(g.theta, g.zeta, g.s / 2)?;
        if !(g.base_radius > 0.0) {
            return Err(bad("geometry.base_radius", g.base_radius));
        }
        model.base_radius = g.base_radius;
        Ok(model)
    }

    pub fn kappa_frame(&self) -> Result<KappaFrame> {
        match self.geometry.kappa_frame.as_str() {
            "material" => Ok(KappaFrame::Material),
            "spatial" => Ok(KappaFrame::Spatial),
            other => Err(bad("geometry.kappa_frame", other)),
        }
    }

    pub fn contrast(&self) -> Result<Contrast> {
        match self.geometry.contrast.as_str() {
            "variable" => Ok(Contrast::Variable(self.kappa_frame()?)),
            "zero" => Ok(Contrast::Zero),
            other => other
                .parse::<f64>()
                .map(Contrast::Constant)
                .map_err(|_| bad("geometry.contrast", other)),
        }
    }

    pub fn degenerate_policy(&self) -> Result<DegeneratePolicy> {
        match self.geometry.degenerate.as_str() {
            "error" => Ok(DegeneratePolicy::Error),
            "clamp" => Ok(DegeneratePolicy::Clamp),
            other => Err(bad("geometry.degenerate", other)),
        }
    }

    pub fn solver_kind(&self) -> Result<SolverKind> {
        let s = &self.solver;
        match s.solver.as_str() {
            "direct" => Ok(SolverKind::Direct),
            "iterative" => Ok(SolverKind::Iterative {
                tol: s.iter_tol,
                restart: s.restart,
                max_iter: s.max_iter,
            }),
            other => Err(bad("solver.solver", other)),
        }
    }

    pub fn error_norm(&self) -> Result<ErrorNorm> {
        match self.forward.error_norm.as_str() {
            "max" => Ok(ErrorNorm::Max),
            "l2" => Ok(ErrorNorm::L2),
            other => Err(bad("forward.error_norm", other)),
        }
    }

    pub fn observation_setup(&self) -> Result<ObservationSetup> {
        let o = &self.observation;
        ObservationSetup::circle(o.obs_count, o.obs_radius, o.obs_phase, self.assembly.kappa0)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let a = &self.assembly;
        let mut cfg = PipelineConfig::new(self.radius_model()?, self.mesh.level)?;
        cfg.kappa0 = a.kappa0;
        cfg.incident = PlaneWave::new(a.kappa0, a.uinc_direction)?;
        cfg.quad_order = a.quad_order;
        cfg.near_threshold = a.near_threshold;
        cfg.solver = self.solver_kind()?;
        cfg.observation = self.observation_setup()?;
        cfg.contrast = self.contrast()?;
        cfg.rho_floor = self.geometry.rho_floor;
        cfg.validation_grid = self.geometry.validation_grid;
        cfg.degenerate_policy = self.degenerate_policy()?;
        Ok(cfg)
    }

    pub fn ground_truth(&self) -> Result<ParamVector> {
        let s = self.geometry.s;
        if self.bayes.ystar.is_empty() {
            return Ok(lsuq_core::bayes::default_ground_truth(s));
        }
        if self.bayes.ystar.len() > s {
            return Err(bad("bayes.ystar (length at most s)", self.bayes.ystar.len()));
        }
        let mut v = self.bayes.ystar.clone();
        v.resize(s, 0.0);
        ParamVector::new(v)
    }

    pub fn generating_data_path(&self) -> Option<PathBuf> {
        (!self.forward.generating_data.is_empty()).then(|| PathBuf::from(&self.forward.generating_data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.geometry.s, 100);
        assert_eq!(cfg.forward.n_ref, 2048);
        let p = cfg.pipeline_config().unwrap();
        assert_eq!(p.observation.len(), 10);
        assert_eq!(p.model.dimension(), 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[geometry]\ntheta = 0.5\nfoo = 1\n").is_err());
        assert!(RunConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::parse("label = \"x\"\n[forward]\nN_list = [8, 16]\nrules = [\"rlr\", \"mc\"]\n").unwrap();
        let again = RunConfig::parse(&cfg.echo()).unwrap();
        assert_eq!(again.echo(), cfg.echo());
        assert_eq!(again.forward.n_list, vec![8, 16]);
    }

    #[test]
    fn enumerations_are_checked() {
        let cfg = RunConfig::parse("[solver]\nsolver = \"magic\"\n").unwrap();
        assert!(cfg.solver_kind().is_err());
        let cfg = RunConfig::parse("[geometry]\ncontrast = \"3.0\"\ns = 7\n").unwrap();
        assert_eq!(cfg.contrast().unwrap(), Contrast::Constant(3.0));
        assert!(cfg.radius_model().is_err());
    }
}
