//! Parameter-to-observation pipeline, equal-weight estimators and
//! convergence studies against a reference rule.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{assemble_system, P1Space, PlaneWave};
use crate::error::{Error, Result};
use crate::geometry::{
    kappa_squared, validate_shape_with, DegeneratePolicy, KappaFrame, ParamVector, Point, RadiusModel,
    ShapeSample, DEFAULT_RHO_FLOOR,
};
use crate::mesh::{unit_disk_mesh, TriangleMesh};
use crate::potential::{observe_with, ObservationSetup};
use crate::qmc::{to_param, QmcRule};
use crate::quadrature::TriangleQuadrature;
use crate::solver::{solve_ls, DiscreteSolution, SolverKind};

/// Observation margin relative to the largest admissible radius.
pub const OBSERVATION_MARGIN: f64 = 0.1;
pub const DEFAULT_VALIDATION_GRID: usize = 256;

/// Contrast `beta = kappa^2 - kappa0^2` inside the scatterer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Contrast {
    Zero,
    Constant(f64),
    /// `kappa = 2 + |x|^2 / 2` in the given frame.
    Variable(KappaFrame),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub model: RadiusModel,
    pub mesh_level: u32,
    pub kappa0: f64,
    pub incident: PlaneWave,
    pub quad_order: usize,
    pub near_threshold: f64,
    pub solver: SolverKind,
    pub observation: ObservationSetup,
    pub contrast: Contrast,
    pub rho_floor: f64,
    pub validation_grid: usize,
    pub degenerate_policy: DegeneratePolicy,
}

impl PipelineConfig {
    /// Defaults of the experiments: unit wavenumber, incident direction
    /// (1, 0), ten observation points on the circle of radius 2, variable
    /// contrast in the material frame.
    pub fn new(model: RadiusModel, mesh_level: u32) -> Result<Self> {
        Ok(PipelineConfig {
            model,
            mesh_level,
            kappa0: 1.0,
            incident: PlaneWave::new(1.0, [1.0, 0.0])?,
            quad_order: crate::assembly::DEFAULT_QUAD_ORDER,
            near_threshold: crate::assembly::DEFAULT_NEAR_THRESHOLD,
            solver: SolverKind::Direct,
            observation: ObservationSetup::circle(10, 2.0, 0.0, 1.0)?,
            contrast: Contrast::Variable(KappaFrame::Material),
            rho_floor: DEFAULT_RHO_FLOOR,
            validation_grid: DEFAULT_VALIDATION_GRID,
            degenerate_policy: DegeneratePolicy::Error,
        })
    }
}

/// Anything mapping parameters to a real output vector.
pub trait ForwardModel: Sync {
    fn dimension(&self) -> usize;
    fn output_len(&self) -> usize;
    fn eval(&self, y: &ParamVector) -> Result<Vec<f64>>;
}

/// Full pipeline: validate, push forward, assemble, solve, observe.
#[derive(Clone, Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    reference: TriangleMesh,
    quad: TriangleQuadrature,
}

/// Result of a single solve, for inspection and output.
#[derive(Clone, Debug)]
pub struct SampleSolution {
    pub shape: ShapeSample,
    pub solution: DiscreteSolution,
    pub observation: Vec<f64>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if (config.kappa0 - config.incident.kappa0()).abs() > 0.0
            || (config.kappa0 - config.observation.kappa0()).abs() > 0.0
        {
            return Err(Error::Parameter(
                "kappa0 must agree between incident field, observation setup and kernel".into(),
            ));
        }
        config
            .observation
            .check_clearance(config.model.radius_upper_bound(), OBSERVATION_MARGIN)?;
        let reference = unit_disk_mesh(config.mesh_level)?;
        let quad = TriangleQuadrature::of_order(config.quad_order)?;
        Ok(Pipeline {
            config,
            reference,
            quad,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn reference_mesh(&self) -> &TriangleMesh {
        &self.reference
    }

    fn beta<'a>(&'a self, shape: &'a ShapeSample) -> impl Fn(Point) -> f64 + Sync + 'a {
        let kappa0_sq = self.config.kappa0 * self.config.kappa0;
        move |x: Point| match self.config.contrast {
            Contrast::Zero => 0.0,
            Contrast::Constant(c) => c,
            Contrast::Variable(frame) => {
                let xhat = match frame {
                    KappaFrame::Material => shape.inverse(x),
                    KappaFrame::Spatial => x,
                };
                kappa_squared(frame, xhat, x) - kappa0_sq
            }
        }
    }

    pub fn shape(&self, y: &ParamVector) -> Result<ShapeSample> {
        validate_shape_with(
            &self.config.model,
            y,
            self.config.validation_grid,
            self.config.rho_floor,
            self.config.degenerate_policy,
        )
    }

    pub fn solve(&self, y: &ParamVector) -> Result<SampleSolution> {
        let shape = self.shape(y)?;
        let (solution, observation) = self.solve_shape(&shape)?;
        Ok(SampleSolution {
            shape,
            solution,
            observation,
        })
    }

    fn solve_shape(&self, shape: &ShapeSample) -> Result<(DiscreteSolution, Vec<f64>)> {
        let space = P1Space::new(self.reference.pushforward(shape));
        let beta = self.beta(shape);
        let wave = self.config.incident;
        let u_inc = |x: Point| wave.eval(x);
        let system = assemble_system(
            &space,
            self.config.kappa0,
            &beta,
            &u_inc,
            &self.quad,
            self.config.near_threshold,
        )?;
        let coefficients = solve_ls(&system, self.config.solver)?;
        let solution = DiscreteSolution::new(space, coefficients)?;
        let observation = observe_with(&solution, &self.config.observation, &beta, &u_inc, &self.quad)?;
        Ok((solution, observation))
    }

    /// Stacked real and imaginary parts of the field at the observation
    /// points.
    pub fn qoi(&self, y: &ParamVector) -> Result<Vec<f64>> {
        Ok(self.solve(y)?.observation)
    }
}

impl ForwardModel for Pipeline {
    fn dimension(&self) -> usize {
        self.config.model.dimension()
    }

    fn output_len(&self) -> usize {
        2 * self.config.observation.len()
    }

    fn eval(&self, y: &ParamVector) -> Result<Vec<f64>> {
        self.qoi(y)
    }
}

/// Pairwise (cascade) sum; the grouping depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Componentwise pairwise mean of equal-length rows.
pub fn pairwise_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let mut column = vec![0.0; rows.len()];
    (0..width)
        .map(|k| {
            for (c, r) in column.iter_mut().zip(rows) {
                *c = r[k];
            }
            pairwise_sum(&column) / rows.len() as f64
        })
        .collect()
}

/// Model outputs keyed by the exact bits of the QMC point.
#[derive(Debug, Default)]
pub struct SampleCache {
    values: HashMap<Vec<u64>, Vec<f64>>,
    hits: usize,
}

impl SampleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }
}

fn key(t: &[f64]) -> Vec<u64> {
    t.iter().map(|v| v.to_bits()).collect()
}

/// Evaluate the model at the QMC points `t`, in parallel, reusing and
/// filling the cache. Output order follows the input order.
pub fn evaluate_points(
    model: &dyn ForwardModel,
    points: &[Vec<f64>],
    cache: &mut SampleCache,
) -> Result<Vec<Vec<f64>>> {
    let keys: Vec<Vec<u64>> = points.iter().map(|t| key(t)).collect();
    let mut missing: Vec<usize> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, k) in keys.iter().enumerate() {
        if !cache.values.contains_key(k) && seen.insert(k.clone()) {
            missing.push(i);
        }
    }
    cache.hits += points.len() - missing.len();
    let fresh: Vec<Vec<f64>> = missing
        .par_iter()
        .map(|&i| model.eval(&to_param(&points[i])).map_err(|e| e.at_sample(i)))
        .collect::<Result<_>>()?;
    for (i, v) in missing.into_iter().zip(fresh) {
        cache.values.insert(keys[i].clone(), v);
    }
    Ok(keys.iter().map(|k| cache.values[k].clone()).collect())
}

/// Equal-weight estimate, averaged over the shifts of randomised rules.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub per_shift: Vec<Vec<f64>>,
}

pub fn estimate(model: &dyn ForwardModel, rule: &QmcRule, n: u64, cache: &mut SampleCache) -> Result<Estimate> {
    if rule.dimension() != model.dimension() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            got: rule.dimension(),
        });
    }
    let sub = rule.restrict(n)?;
    let mut per_shift = Vec::with_capacity(sub.shift_count());
    for shift_index in 0..sub.shift_count() {
        let shift = sub.shift(shift_index);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut t = vec![0.0; sub.dimension()];
                sub.point_into(&shift, i, &mut t);
                t
            })
            .collect();
        let values = evaluate_points(model, &points, cache)?;
        per_shift.push(pairwise_mean(&values));
    }
    Ok(Estimate {
        mean: pairwise_mean(&per_shift),
        per_shift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    #[default]
    Max,
    L2,
}

impl ErrorNorm {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            ErrorNorm::Max => d.fold(0.0, f64::max),
            ErrorNorm::L2 => d.map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Rule for a study: a label and a constructor of the rule at each size.
pub struct StudyRule<'a> {
    pub label: String,
    pub rule_for: Box<dyn Fn(u64) -> Result<QmcRule> + Sync + 'a>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub rule: String,
    pub n: u64,
    pub shift_count: usize,
    pub error: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    /// Least-squares slope of log2(error) against log2(N), per rule.
    pub slopes: Vec<(String, f64)>,
}

/// Least-squares slope of `log2 y` against `log2 x`, skipping zero errors.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &b)| (a.log2(), b.log2()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Errors `|Q_N - Q_ref|` for every rule and size, reference first so that
/// nested rules reuse its samples.
pub fn convergence_report(
    model: &dyn ForwardModel,
    rules: &[StudyRule],
    n_list: &[u64],
    n_ref: u64,
    norm: ErrorNorm,
    record_timing: bool,
) -> Result<ConvergenceReport> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list.iter().any(|&n| n >= n_ref) {
        return Err(Error::Parameter(
            "N values must be strictly increasing and below N_ref".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for study in rules {
        let mut cache = SampleCache::new();
        let reference_rule = (study.rule_for)(n_ref)?;
        let reference = estimate(model, &reference_rule, n_ref, &mut cache)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &n in n_list {
            let start = Instant::now();
            let rule = (study.rule_for)(n)?;
            let est = estimate(model, &rule, n, &mut cache)?;
            let error = norm.distance(&est.mean, &reference.mean);
            rows.push(ReportRow {
                rule: study.label.clone(),
                n,
                shift_count: rule.shift_count(),
                error,
                seconds: if record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
            });
            xs.push(n as f64);
            ys.push(error);
        }
        rows.push(ReportRow {
            rule: study.label.clone(),
            n: n_ref,
            shift_count: reference_rule.shift_count(),
            error: 0.0,
            seconds: 0.0,
        });
        slopes.push((study.label.clone(), loglog_slope(&xs, &ys)));
    }
    Ok(ConvergenceReport { rows, slopes })
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rule,N,shift_count,error,seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.17e},{:.6}\n",
                r.rule, r.n, r.shift_count, r.error, r.seconds
            ));
        }
        out
    }

    pub fn slopes_csv(&self) -> String {
        let mut out = String::from("rule,slope\n");
        for (rule, slope) in &self.slopes {
            out.push_str(&format!("{rule},{slope:.6}\n"));
        }
        out
    }

    pub fn slope(&self, label: &str) -> Option<f64> {
        self.slopes.iter().find(|(l, _)| l == label).map(|(_, s)| *s)
    }
}
