//! Star-shaped parametric domains `D_y = r_y(D_ref)` obtained by radially
//! rescaling the reference disk with an affine-parametric radius
//!
//! ```text
//! rho_y(phi) = rho_ref + theta * sum_{j=1}^{J} j^{-zeta} (y_{2j} cos(j phi) + y_{2j-1} sin(j phi))
//! ```
//!
//! and the wavenumber field of the inclusion.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Truncated parameter vector in `[-1, 1]^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.abs() <= 1.0))
        {
            return Err(Error::Parameter(format!(
                "parameter y_{} = {v} outside [-1, 1]",
                i + 1
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(s: usize) -> Self {
        Self(vec![0.0; s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Affine-parametric radius expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusModel {
    pub theta: f64,
    pub zeta: f64,
    pub modes: usize,
    pub base_radius: f64,
}

impl RadiusModel {
    pub fn new(theta: f64, zeta: f64, modes: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Parameter(format!("theta must be > 0, got {theta}")));
        }
        if !(zeta > 1.0) || !zeta.is_finite() {
            return Err(Error::Parameter(format!("zeta must be > 1, got {zeta}")));
        }
        if modes == 0 {
            return Err(Error::Parameter("at least one Fourier mode is required".into()));
        }
        Ok(Self {
            theta,
            zeta,
            modes,
            base_radius: 1.0,
        })
    }

    /// Model with parameter dimension `s` (must be even; `J = s / 2` modes).
    pub fn with_dimension(theta: f64, zeta: f64, s: usize) -> Result<Self> {
        if s == 0 || s % 2 != 0 {
            return Err(Error::Parameter(format!(
                "parameter dimension s must be a positive even number, got {s}"
            )));
        }
        Self::new(theta, zeta, s / 2)
    }

    pub fn dimension(&self) -> usize {
        2 * self.modes
    }

    /// Amplitude `theta * j^{-zeta}` of Fourier mode `j >= 1`.
    pub fn mode_amplitude(&self, j: usize) -> f64 {
        self.theta * (j as f64).powf(-self.zeta)
    }

    /// `W^{1,inf}` norms `b_k` of the expansion functions, `k = 1..=s`.
    pub fn parameter_weights(&self) -> Vec<f64> {
        (1..=self.dimension())
            .map(|k| {
                let j = (k + 1) / 2;
                self.mode_amplitude(j) * (1.0 + j as f64)
            })
            .collect()
    }

    /// Lower bound `rho_ref - theta * sqrt(2) * sum j^{-zeta}` over all `y`.
    pub fn radius_lower_bound(&self) -> f64 {
        let sum: f64 = (1..=self.modes).map(|j| self.mode_amplitude(j)).sum();
        self.base_radius - std::f64::consts::SQRT_2 * sum
    }

    /// Upper bound `rho_ref + theta * sqrt(2) * sum j^{-zeta}` over all `y`.
    pub fn radius_upper_bound(&self) -> f64 {
        let sum: f64 = (1..=self.modes).map(|j| self.mode_amplitude(j)).sum();
        self.base_radius + std::f64::consts::SQRT_2 * sum
    }

    fn check(&self, y: &ParamVector) -> Result<()> {
        if y.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                got: y.len(),
            });
        }
        Ok(())
    }

    pub fn radius(&self, y: &ParamVector, phi: f64) -> Result<f64> {
        self.check(y)?;
        Ok(self.radius_unchecked(y.as_slice(), phi))
    }

    /// Radius without the dimension check. `y[2j-2]` multiplies `sin(j phi)`
    /// and `y[2j-1]` multiplies `cos(j phi)` (0-based storage of the 1-based
    /// `y_{2j-1}`, `y_{2j}`).
    pub(crate) fn radius_unchecked(&self, y: &[f64], phi: f64) -> f64 {
        let (s1, c1) = phi.sin_cos();
        let (mut s_prev, mut c_prev) = (0.0, 1.0);
        let (mut s_cur, mut c_cur) = (s1, c1);
        let mut acc = 0.0;
        for j in 1..=self.modes {
            let amp = self.mode_amplitude(j);
            acc += amp * (y[2 * j - 1] * c_cur + y[2 * j - 2] * s_cur);
            let s_next = 2.0 * c1 * s_cur - s_prev;
            let c_next = 2.0 * c1 * c_cur - c_prev;
            s_prev = s_cur;
            c_prev = c_cur;
            s_cur = s_next;
            c_cur = c_next;
        }
        self.base_radius + acc
    }

    pub fn transform(&self, y: &ParamVector, xhat: Point) -> Result<Point> {
        self.check(y)?;
        let q = self.radius_unchecked(y.as_slice(), angle(xhat)) / self.base_radius;
        Ok([q * xhat[0], q * xhat[1]])
    }

    /// `det D r_y(xhat) = q(phi)^2` with `q = rho_y / rho_ref`.
    pub fn jacobian_det(&self, y: &ParamVector, xhat: Point) -> Result<f64> {
        self.check(y)?;
        let q = self.radius_unchecked(y.as_slice(), angle(xhat)) / self.base_radius;
        Ok(q * q)
    }
}

/// Polar angle with `phi(0) = 0`.
pub fn angle(x: Point) -> f64 {
    if x[0] == 0.0 && x[1] == 0.0 {
        0.0
    } else {
        x[1].atan2(x[0])
    }
}

/// What to do with a sample whose radius drops to the floor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    /// Abort with a degenerate-shape error.
    #[default]
    Error,
    /// Replace the radius by `max(rho_y, rho_floor)`; the sample is flagged.
    Clamp,
}

pub const DEFAULT_RHO_FLOOR: f64 = 1e-3;
pub const MIN_VALIDATION_GRID: usize = 64;

/// A validated shape `D_y`.
#[derive(Clone, Debug)]
pub struct ShapeSample {
    model: RadiusModel,
    y: ParamVector,
    rho_min_observed: f64,
    clamp_floor: Option<f64>,
}

/// Evaluate `rho_y` on a uniform angular grid and reject shapes whose
/// minimum radius is at or below `rho_floor`.
pub fn validate_shape(
    model: &RadiusModel,
    y: &ParamVector,
    grid_size: usize,
    rho_floor: f64,
) -> Result<ShapeSample> {
    validate_shape_with(model, y, grid_size, rho_floor, DegeneratePolicy::Error)
}

pub fn validate_shape_with(
    model: &RadiusModel,
    y: &ParamVector,
    grid_size: usize,
    rho_floor: f64,
    policy: DegeneratePolicy,
) -> Result<ShapeSample> {
    model.check(y)?;
    if grid_size < MIN_VALIDATION_GRID {
        return Err(Error::Parameter(format!(
            "validation grid must have at least {MIN_VALIDATION_GRID} angles, got {grid_size}"
        )));
    }
    let min = (0..grid_size)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / grid_size as f64;
            model.radius_unchecked(y.as_slice(), phi)
        })
        .fold(f64::INFINITY, f64::min);
    let clamp_floor = if min <= rho_floor {
        match policy {
            DegeneratePolicy::Error => {
                return Err(Error::DegenerateShape {
                    min_radius: min,
                    floor: rho_floor,
                })
            }
            DegeneratePolicy::Clamp => Some(rho_floor),
        }
    } else {
        None
    };
    Ok(ShapeSample {
        model: model.clone(),
        y: y.clone(),
        rho_min_observed: min,
        clamp_floor,
    })
}

impl ShapeSample {
    pub fn model(&self) -> &RadiusModel {
        &self.model
    }

    pub fn params(&self) -> &ParamVector {
        &self.y
    }

    pub fn rho_min_observed(&self) -> f64 {
        self.rho_min_observed
    }

    /// True when the radius had to be clamped at the floor.
    pub fn is_clamped(&self) -> bool {
        self.clamp_floor.is_some()
    }

    pub fn radius(&self, phi: f64) -> f64 {
        let r = self.model.radius_unchecked(self.y.as_slice(), phi);
        match self.clamp_floor {
            Some(floor) => r.max(floor),
            None => r,
        }
    }

    fn scale(&self, phi: f64) -> f64 {
        self.radius(phi) / self.model.base_radius
    }

    pub fn transform(&self, xhat: Point) -> Point {
        let q = self.scale(angle(xhat));
        [q * xhat[0], q * xhat[1]]
    }

    /// Inverse of [`ShapeSample::transform`]; the angle is preserved because `q > 0`.
    pub fn inverse(&self, x: Point) -> Point {
        let q = self.scale(angle(x));
        [x[0] / q, x[1] / q]
    }

    pub fn jacobian_det(&self, xhat: Point) -> f64 {
        let q = self.scale(angle(xhat));
        q * q
    }
}

/// Frame in which the inhomogeneous wavenumber is prescribed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KappaFrame {
    /// `kappa` is a function of the reference point and moves with the shape.
    #[default]
    Material,
    /// `kappa` is a function of the physical point.
    Spatial,
}

/// Background wavenumber outside the inclusion.
pub const EXTERIOR_KAPPA: f64 = 1.0;

/// Squared wavenumber inside the inclusion: `(2 + |x|^2 / 2)^2` evaluated at
/// the reference point (material frame) or the physical point (spatial frame).
pub fn kappa_squared(frame: KappaFrame, xhat: Point, x_phys: Point) -> f64 {
    let p = match frame {
        KappaFrame::Material => xhat,
        KappaFrame::Spatial => x_phys,
    };
    let k = 2.0 + 0.5 * (p[0] * p[0] + p[1] * p[1]);
    k * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(theta: f64, zeta: f64, modes: usize) -> RadiusModel {
        RadiusModel::new(theta, zeta, modes).unwrap()
    }

    fn y(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn radius_examples() {
        let m = model(0.25, 2.0, 1);
        assert_eq!(m.radius(&y(&[0.0, 0.0]), 1.234).unwrap(), 1.0);
        assert_abs_diff_eq!(m.radius(&y(&[1.0, 0.0]), PI / 2.0).unwrap(), 1.25, epsilon = 1e-15);
        let m = model(0.75, 3.0, 1);
        assert_abs_diff_eq!(m.radius(&y(&[0.0, -1.0]), 0.0).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn radius_matches_direct_sum() {
        let m = model(0.75, 2.0, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = y(&v);
        for k in 0..50 {
            let phi = 0.13 * k as f64;
            let direct: f64 = 1.0
                + (1..=7)
                    .map(|j| {
                        let a = 0.75 * (j as f64).powf(-2.0);
                        a * (v[2 * j - 1] * (j as f64 * phi).cos()
                            + v[2 * j - 2] * (j as f64 * phi).sin())
                    })
                    .sum::<f64>();
            assert_abs_diff_eq!(m.radius(&p, phi).unwrap(), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(0.25, 2.0, 2);
        assert!(matches!(
            m.radius(&y(&[0.0, 0.0]), 0.0),
            Err(Error::Dimension { expected: 4, got: 2 })
        ));
        assert!(RadiusModel::with_dimension(0.25, 2.0, 3).is_err());
        assert!(RadiusModel::new(0.25, 1.0, 3).is_err());
        assert!(ParamVector::new(vec![1.5]).is_err());
    }

    #[test]
    fn transform_examples() {
        let m = model(0.25, 2.0, 1);
        let p = m.transform(&y(&[1.0, 0.0]), [0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.625, epsilon = 1e-15);
        assert_eq!(m.transform(&y(&[0.3, -0.2]), [0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert_eq!(m.transform(&y(&[0.0, 0.0]), [0.3, -0.4]).unwrap(), [0.3, -0.4]);
        assert_abs_diff_eq!(
            m.jacobian_det(&y(&[1.0, 0.0]), [0.0, 0.5]).unwrap(),
            1.5625,
            epsilon = 1e-14
        );
    }

    #[test]
    fn jacobian_is_scale_invariant() {
        let m = model(0.5, 2.0, 3);
        let p = y(&[0.2, -0.7, 0.5, 0.1, -0.9, 0.3]);
        let base = m.jacobian_det(&p, [0.6, 0.3]).unwrap();
        for c in [0.1, 0.5, 1.0] {
            let v = m.jacobian_det(&p, [0.6 * c, 0.3 * c]).unwrap();
            assert_abs_diff_eq!(v, base, epsilon = 1e-14);
        }
    }

    #[test]
    fn validate_examples() {
        let m = model(0.25, 2.0, 50);
        let ones = ParamVector::new(vec![1.0; 100]).unwrap();
        let shape = validate_shape(&m, &ones, 256, DEFAULT_RHO_FLOOR).unwrap();
        assert!(shape.rho_min_observed() >= m.radius_lower_bound());
        let full_series = 1.0 - 0.25 * std::f64::consts::SQRT_2 * std::f64::consts::PI.powi(2) / 6.0;
        assert!(m.radius_lower_bound() > full_series && m.radius_lower_bound() < full_series + 0.01);

        let zero = ParamVector::zeros(100);
        let shape = validate_shape(&m, &zero, 64, DEFAULT_RHO_FLOOR).unwrap();
        assert_eq!(shape.rho_min_observed(), 1.0);

        let m = model(0.75, 3.0, 1);
        let err = validate_shape(&m, &y(&[0.0, -1.0]), 64, 0.3).unwrap_err();
        match err {
            Error::DegenerateShape { min_radius, .. } => {
                assert_abs_diff_eq!(min_radius, 0.25, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(validate_shape(&m, &y(&[0.0, -1.0]), 32, 0.3).is_err());
    }

    #[test]
    fn clamp_policy_flags_and_floors() {
        let m = model(0.75, 3.0, 1);
        let shape =
            validate_shape_with(&m, &y(&[0.0, -1.0]), 64, 0.3, DegeneratePolicy::Clamp).unwrap();
        assert!(shape.is_clamped());
        assert_abs_diff_eq!(shape.radius(0.0), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(shape.radius(PI), 1.75, epsilon = 1e-15);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_squared(KappaFrame::Material, [0.0, 0.0], [5.0, 5.0]), 4.0);
        assert_eq!(kappa_squared(KappaFrame::Material, [0.6, 0.8], [0.0, 0.0]), 6.25);
        assert_eq!(kappa_squared(KappaFrame::Spatial, [0.6, 0.8], [0.0, 0.0]), 4.0);
        assert_eq!(EXTERIOR_KAPPA * EXTERIOR_KAPPA - 1.0, 0.0);
    }

    #[test]
    fn parameter_weights_follow_mode_index() {
        let m = model(0.25, 3.0, 3);
        let b = m.parameter_weights();
        assert_eq!(b.len(), 6);
        assert_abs_diff_eq!(b[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[2], 0.25 * 3.0 / 8.0, epsilon = 1e-15);
    }
}
