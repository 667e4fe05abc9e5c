//! Bayesian shape inversion with Gaussian noise: synthetic data, misfit
//! potential and the ratio estimator of the posterior mean boundary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward_uq::{
    evaluate_points, loglog_slope, pairwise_sum, ConvergenceReport, ForwardModel, ReportRow, SampleCache, StudyRule,
};
use crate::geometry::{ParamVector, RadiusModel};
use crate::qmc::{normal_pair, to_param, QmcRule};

pub const DEFAULT_SIGMA: f64 = 0.1;
pub const DEFAULT_ANGLE_COUNT: usize = 256;
pub const MIN_ANGLE_COUNT: usize = 64;
/// Smallest admissible normalisation constant.
pub const Z_FLOOR: f64 = 1e-300;

/// `y*_j = (-1)^j 0.4` for `j <= 6`, zero beyond.
pub fn default_ground_truth(s: usize) -> ParamVector {
    let v = (1..=s)
        .map(|j| if j <= 6 { if j % 2 == 0 { 0.4 } else { -0.4 } } else { 0.0 })
        .collect();
    ParamVector::new(v).expect("entries within [-1, 1]")
}

/// Ground truth, noise level and the (noisy) data vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesSetup {
    ground_truth: ParamVector,
    sigma: f64,
    noise_seed: u64,
    data: Vec<f64>,
}

impl BayesSetup {
    /// Solve at the ground truth and add seeded noise.
    pub fn synthesize(model: &dyn ForwardModel, ground_truth: ParamVector, sigma: f64, noise_seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        if let Some(v) = ground_truth.as_slice().iter().find(|v| v.abs() > 0.5) {
            return Err(Error::Parameter(format!("ground truth entry {v} outside [-1/2, 1/2]")));
        }
        let clean = model.eval(&ground_truth)?;
        let data = add_noise(&clean, sigma, noise_seed);
        Ok(BayesSetup {
            ground_truth,
            sigma,
            noise_seed,
            data,
        })
    }

    pub fn ground_truth(&self) -> &ParamVector {
        &self.ground_truth
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Same data, evaluated under a different noise level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(BayesSetup { sigma, ..self.clone() })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("sigma must be positive, got {sigma}")))
    }
}

/// `clean + sigma * eta` with `eta` standard normal from the seeded stream.
pub fn add_noise(clean: &[f64], sigma: f64, noise_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut out = Vec::with_capacity(clean.len());
    while out.len() < clean.len() {
        let (a, b) = normal_pair(&mut rng);
        out.push(a);
        out.push(b);
    }
    out.truncate(clean.len());
    out.iter().zip(clean).map(|(e, c)| c + sigma * e).collect()
}

/// `|data - g|^2 / (2 sigma^2)`.
pub fn potential(data: &[f64], g: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if data.len() != g.len() {
        return Err(Error::Dimension {
            expected: data.len(),
            got: g.len(),
        });
    }
    let sq: Vec<f64> = data.iter().zip(g).map(|(d, v)| (d - v) * (d - v)).collect();
    Ok(0.5 * pairwise_sum(&sq) / (sigma * sigma))
}

/// `P` equispaced angles in `[0, 2 pi)`.
pub fn angle_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / count as f64)
        .collect()
}

/// Discrete L2 norm over an equispaced angle grid.
pub fn angular_l2(a: &[f64], b: &[f64]) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    (2.0 * std::f64::consts::PI * pairwise_sum(&sq) / a.len().max(1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorBoundary {
    pub angles: Vec<f64>,
    pub prior_mean: Vec<f64>,
    /// Pointwise sample standard deviation of the radius over `sqrt(N)`.
    pub prior_std_error: Vec<f64>,
    pub posterior_mean: Vec<f64>,
    /// Normalisation constant `Z`.
    pub z: f64,
    pub sample_count: usize,
}

/// Ratio estimator from per-sample potentials and boundary radii.
/// The minimum potential is subtracted before exponentiation, so adding a
/// constant to every potential only changes `z`.
pub fn ratio_estimate(angles: &[f64], potentials: &[f64], boundaries: &[Vec<f64>]) -> Result<PosteriorBoundary> {
    let n = potentials.len();
    if n == 0 || boundaries.len() != n {
        return Err(Error::Parameter("ratio estimator needs one boundary per potential".into()));
    }
    let phi_min = potentials.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = potentials.iter().map(|p| (phi_min - p).exp()).collect();
    let weight_sum = pairwise_sum(&weights);
    let z = (weight_sum / n as f64).ln() - phi_min;
    let z = z.exp();
    if !(z >= Z_FLOOR) {
        return Err(Error::DegeneratePosterior(z));
    }
    let mut column = vec![0.0; n];
    let mut prior_mean = Vec::with_capacity(angles.len());
    let mut prior_std_error = Vec::with_capacity(angles.len());
    let mut posterior_mean = Vec::with_capacity(angles.len());
    for k in 0..angles.len() {
        for (c, b) in column.iter_mut().zip(boundaries) {
            *c = b[k];
        }
        let mean = pairwise_sum(&column) / n as f64;
        let dev: Vec<f64> = column.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        let weighted: Vec<f64> = column.iter().zip(&weights).map(|(v, w)| v * w).collect();
        prior_mean.push(mean);
        prior_std_error.push((var / n as f64).sqrt());
        posterior_mean.push(pairwise_sum(&weighted) / weight_sum);
    }
    Ok(PosteriorBoundary {
        angles: angles.to_vec(),
        prior_mean,
        prior_std_error,
        posterior_mean,
        z,
        sample_count: n,
    })
}

/// Misfit potentials and boundary radii of every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSamples {
    pub potentials: Vec<f64>,
    pub boundaries: Vec<Vec<f64>>,
}

/// Potentials and boundaries at the `n` points of `rule`, all shifts pooled.
pub fn posterior_samples(
    model: &dyn ForwardModel,
    radius: &RadiusModel,
    setup: &BayesSetup,
    rule: &QmcRule,
    n: u64,
    angles: &[f64],
    cache: &mut SampleCache,
) -> Result<PosteriorSamples> {
    if angles.len() < MIN_ANGLE_COUNT {
        return Err(Error::Parameter(format!(
            "posterior boundary needs at least {MIN_ANGLE_COUNT} angles, got {}",
            angles.len()
        )));
    }
    if rule.dimension() != model.dimension() || radius.dimension() != model.dimension() {
        return Err(Error::Dimension {
            expected: model.dimension(),
            got: rule.dimension(),
        });
    }
    let sub = rule.restrict(n)?;
    let mut points = Vec::with_capacity(n as usize * sub.shift_count());
    for shift_index in 0..sub.shift_count() {
        let shift = sub.shift(shift_index);
        for i in 0..n {
            let mut t = vec![0.0; sub.dimension()];
            sub.point_into(&shift, i, &mut t);
            points.push(t);
        }
    }
    let observations = evaluate_points(model, &points, cache)?;
    let potentials = observations
        .iter()
        .map(|g| potential(setup.data(), g, setup.sigma()))
        .collect::<Result<Vec<_>>>()?;
    let boundaries = points
        .iter()
        .map(|t| {
            let y = to_param(t);
            angles.iter().map(|&a| radius.radius(&y, a)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(PosteriorSamples { potentials, boundaries })
}

/// Posterior mean boundary with `n` points of `rule` (all shifts pooled).
pub fn posterior_boundary(
    model: &dyn ForwardModel,
    radius: &RadiusModel,
    setup: &BayesSetup,
    rule: &QmcRule,
    n: u64,
    angles: &[f64],
    cache: &mut SampleCache,
) -> Result<PosteriorBoundary> {
    let samples = posterior_samples(model, radius, setup, rule, n, angles, cache)?;
    ratio_estimate(angles, &samples.potentials, &samples.boundaries)
}

/// Radius of the ground truth on the angle grid.
pub fn truth_boundary(radius: &RadiusModel, setup: &BayesSetup, angles: &[f64]) -> Result<Vec<f64>> {
    angles.iter().map(|&a| radius.radius(setup.ground_truth(), a)).collect()
}

/// Error of the posterior mean boundary against the `n_ref` estimate, in
/// discrete L2 over the angles.
pub fn inversion_convergence(
    model: &dyn ForwardModel,
    radius: &RadiusModel,
    setup: &BayesSetup,
    rules: &[StudyRule],
    n_list: &[u64],
    n_ref: u64,
    angles: &[f64],
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
        let reference = posterior_boundary(model, radius, setup, &reference_rule, n_ref, angles, &mut cache)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &n in n_list {
            let rule = (study.rule_for)(n)?;
            let est = posterior_boundary(model, radius, setup, &rule, n, angles, &mut cache)?;
            let error = angular_l2(&est.posterior_mean, &reference.posterior_mean);
            rows.push(ReportRow {
                rule: study.label.clone(),
                n,
                shift_count: rule.shift_count(),
                error,
                seconds: 0.0,
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

impl PosteriorBoundary {
    /// `angle,prior_mean,posterior_mean,truth`.
    pub fn to_csv(&self, truth: &[f64]) -> String {
        let mut out = String::from("angle,prior_mean,posterior_mean,truth\n");
        for k in 0..self.angles.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.angles[k], self.prior_mean[k], self.posterior_mean[k], truth[k]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn potential_values() {
        assert_eq!(potential(&[1.0, 2.0], &[1.0, 2.0], 0.1).unwrap(), 0.0);
        assert_abs_diff_eq!(potential(&[0.2, 0.0], &[0.0, 0.0], 0.1).unwrap(), 2.0, epsilon = 1e-12);
        let a = potential(&[0.3, -0.1], &[0.0, 0.2], 0.05).unwrap();
        let b = potential(&[0.3, -0.1], &[0.0, 0.2], 0.1).unwrap();
        assert_abs_diff_eq!(a, 4.0 * b, epsilon = 1e-12);
        assert!(potential(&[0.0], &[0.0], 0.0).is_err());
        assert!(potential(&[0.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn noise_statistics() {
        let clean = vec![0.0; 20_000];
        let noisy = add_noise(&clean, 0.1, 11);
        let var = noisy.iter().map(|v| v * v).sum::<f64>() / noisy.len() as f64;
        assert!((var.sqrt() / 0.1 - 1.0).abs() < 0.03, "{}", var.sqrt());
        assert_eq!(add_noise(&clean[..5], 0.0, 3), vec![0.0; 5]);
        assert_eq!(add_noise(&clean[..7], 0.2, 3), add_noise(&clean[..7], 0.2, 3));
        assert_ne!(add_noise(&clean[..7], 0.2, 3), add_noise(&clean[..7], 0.2, 4));
    }

    #[test]
    fn ratio_estimator_shift_invariance() {
        let angles = angle_grid(4);
        let potentials = [3.0, 0.5, 12.0, 1.25, 7.0];
        let boundaries: Vec<Vec<f64>> = (0..5)
            .map(|i| angles.iter().map(|a| 1.0 + 0.1 * (a + i as f64).sin()).collect())
            .collect();
        let base = ratio_estimate(&angles, &potentials, &boundaries).unwrap();
        let shifted: Vec<f64> = potentials.iter().map(|p| p + 250.0).collect();
        let moved = ratio_estimate(&angles, &shifted, &boundaries).unwrap();
        for (a, b) in base.posterior_mean.iter().zip(&moved.posterior_mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(base.z > 0.0 && base.z <= 1.0);
        assert!(matches!(
            ratio_estimate(&angles, &[800.0, 900.0], &boundaries[..2]),
            Err(Error::DegeneratePosterior(_))
        ));
    }

    #[test]
    fn constant_weights_give_prior_mean() {
        let angles = angle_grid(3);
        let boundaries = vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]];
        let est = ratio_estimate(&angles, &[0.7, 0.7], &boundaries).unwrap();
        assert_eq!(est.prior_mean, vec![2.0, 2.0, 2.0]);
        assert_eq!(est.posterior_mean, est.prior_mean);
    }

    #[test]
    fn default_truth_layout() {
        let y = default_ground_truth(10);
        assert_eq!(y.as_slice(), &[-0.4, 0.4, -0.4, 0.4, -0.4, 0.4, 0.0, 0.0, 0.0, 0.0]);
    }
}
