//! Exterior field by the representation formula and the observation map.

use num_complex::Complex64;

use crate::assembly::DEFAULT_QUAD_ORDER;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::signed_area;
use crate::quadrature::TriangleQuadrature;
use crate::solver::DiscreteSolution;
use crate::special::green2d;

pub const DEFAULT_OBS_COUNT: usize = 10;
pub const DEFAULT_OBS_RADIUS: f64 = 2.0;

/// Exterior measurement points, `K` equispaced on a circle by default.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSetup {
    points: Vec<Point>,
    kappa0: f64,
}

impl ObservationSetup {
    /// `count` points on the circle of radius `radius`, the first at angle
    /// `phase`, counterclockwise.
    pub fn circle(count: usize, radius: f64, phase: f64, kappa0: f64) -> Result<Self> {
        if count == 0 || !(radius > 0.0) {
            return Err(Error::Parameter(format!(
                "observation circle needs count > 0 and radius > 0, got {count}, {radius}"
            )));
        }
        let points = (0..count)
            .map(|k| {
                let a = phase + 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::from_points(points, kappa0)
    }

    pub fn from_points(points: Vec<Point>, kappa0: f64) -> Result<Self> {
        if !(kappa0 > 0.0) {
            return Err(Error::Parameter(format!("kappa0 must be positive, got {kappa0}")));
        }
        Ok(ObservationSetup { points, kappa0 })
    }

    /// Check that every point keeps distance `margin * max_radius` from the
    /// hold-all disk of radius `max_radius`.
    pub fn check_clearance(&self, max_radius: f64, margin: f64) -> Result<()> {
        for p in &self.points {
            if p[0].hypot(p[1]) < max_radius * (1.0 + margin) {
                return Err(Error::Proximity(p[0], p[1]));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn inside_or_on(solution: &DiscreteSolution, x: Point) -> bool {
    let mesh = solution.space().mesh();
    (0..mesh.triangle_count()).any(|t| {
        let [a, b, c] = mesh.corners(t);
        signed_area(a, b, x) >= 0.0 && signed_area(b, c, x) >= 0.0 && signed_area(c, a, x) >= 0.0
    })
}

/// `u_inc(x) + sum_T int_T G(x - y) beta(y) u_h(y) dy`.
pub fn exterior_eval(
    solution: &DiscreteSolution,
    kappa0: f64,
    beta_at: &dyn Fn(Point) -> f64,
    u_inc: &dyn Fn(Point) -> Complex64,
    quad: &TriangleQuadrature,
    x: Point,
) -> Result<Complex64> {
    if inside_or_on(solution, x) {
        return Err(Error::Proximity(x[0], x[1]));
    }
    let mesh = solution.space().mesh();
    let c = solution.coefficients();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        let corners = mesh.corners(t);
        let mut local = Complex64::new(0.0, 0.0);
        for ((y, lam), w) in quad.map(&corners).iter().zip(quad.points()).zip(quad.weights()) {
            let uh: Complex64 = (0..3).map(|k| c[tri[k]] * lam[k]).sum();
            let r = (x[0] - y[0]).hypot(x[1] - y[1]);
            local += green2d(kappa0, r)? * uh * (w * beta_at(*y));
        }
        acc += local * area;
    }
    Ok(u_inc(x) + acc)
}

/// Stacked `(Re u(x_1), Im u(x_1), ..., Re u(x_K), Im u(x_K))`.
pub fn observe(
    solution: &DiscreteSolution,
    setup: &ObservationSetup,
    beta_at: &dyn Fn(Point) -> f64,
    u_inc: &dyn Fn(Point) -> Complex64,
) -> Result<Vec<f64>> {
    let quad = TriangleQuadrature::of_order(DEFAULT_QUAD_ORDER)?;
    observe_with(solution, setup, beta_at, u_inc, &quad)
}

pub fn observe_with(
    solution: &DiscreteSolution,
    setup: &ObservationSetup,
    beta_at: &dyn Fn(Point) -> f64,
    u_inc: &dyn Fn(Point) -> Complex64,
    quad: &TriangleQuadrature,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * setup.len());
    for &x in setup.points() {
        let u = exterior_eval(solution, setup.kappa0(), beta_at, u_inc, quad, x)?;
        out.push(u.re);
        out.push(u.im);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, P1Space, PlaneWave};
    use crate::mesh::unit_disk_mesh;
    use crate::oracle::{mie_solve, DiskScatterer};
    use crate::solver::{solve_ls, SolverKind};
    use nalgebra::DVector;

    fn disk_solution(level: u32, beta: f64) -> DiscreteSolution {
        let space = P1Space::new(unit_disk_mesh(level).unwrap());
        let wave = PlaneWave::new(1.0, [1.0, 0.0]).unwrap();
        let quad = TriangleQuadrature::of_order(4).unwrap();
        let sys = assemble_system(&space, 1.0, &|_| beta, &|x| wave.eval(x), &quad, 0.5).unwrap();
        let x = solve_ls(&sys, SolverKind::Direct).unwrap();
        DiscreteSolution::new(space, x).unwrap()
    }

    fn wave() -> PlaneWave {
        PlaneWave::new(1.0, [1.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_contrast_observes_incident_field() {
        let sol = disk_solution(1, 0.0);
        let setup = ObservationSetup::from_points(vec![[2.0, 0.0]], 1.0).unwrap();
        let w = wave();
        let obs = observe(&sol, &setup, &|_| 0.0, &|x| w.eval(x)).unwrap();
        assert_eq!(obs, vec![2f64.cos(), 2f64.sin()]);
    }

    #[test]
    fn default_setup_layout() {
        let setup = ObservationSetup::circle(10, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(setup.len(), 10);
        assert_eq!(setup.points()[0], [2.0, 0.0]);
        let p = setup.points()[1];
        assert!(p[1] > 0.0);
        assert!(setup.check_clearance(1.5, 0.1).is_ok());
        assert!(setup.check_clearance(1.9, 0.1).is_err());
        let sol = disk_solution(2, 3.0);
        let w = wave();
        let obs = observe(&sol, &setup, &|_| 3.0, &|x| w.eval(x)).unwrap();
        assert_eq!(obs.len(), 20);
        assert!(obs.iter().all(|v| v.is_finite() && v.abs() < 5.0));
    }

    #[test]
    fn rejects_points_on_the_mesh() {
        let sol = disk_solution(1, 3.0);
        let w = wave();
        let q = TriangleQuadrature::of_order(4).unwrap();
        for x in [[0.0, 0.0], [1.0, 0.0], [0.3, 0.2]] {
            assert!(matches!(
                exterior_eval(&sol, 1.0, &|_| 3.0, &|x| w.eval(x), &q, x),
                Err(Error::Proximity(..))
            ));
        }
    }

    #[test]
    fn sommerfeld_decay() {
        let sol = disk_solution(3, 3.0);
        let w = wave();
        let q = TriangleQuadrature::of_order(4).unwrap();
        let scaled: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&r| {
                let x = [r * 0.6, r * 0.8];
                let u = exterior_eval(&sol, 1.0, &|_| 3.0, &|x| w.eval(x), &q, x).unwrap();
                (u - w.eval(x)).norm() * r.sqrt()
            })
            .collect();
        for v in &scaled[1..] {
            assert!((v / scaled[0] - 1.0).abs() < 0.1, "{scaled:?}");
        }
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let sol = disk_solution(3, 3.0);
        let w = wave();
        let q4 = TriangleQuadrature::of_order(4).unwrap();
        let q6 = TriangleQuadrature::of_order(6).unwrap();
        for x in [[2.0, 0.0], [0.0, -2.5], [-3.0, 3.0]] {
            let a = exterior_eval(&sol, 1.0, &|_| 3.0, &|x| w.eval(x), &q4, x).unwrap();
            let b = exterior_eval(&sol, 1.0, &|_| 3.0, &|x| w.eval(x), &q6, x).unwrap();
            assert!((a - b).norm() < 1e-8, "{:e}", (a - b).norm());
        }
    }

    #[test]
    fn observation_is_linear_in_coefficients() {
        let space = P1Space::new(unit_disk_mesh(2).unwrap());
        let n = space.dof_count();
        let c1 = DVector::from_fn(n, |i, _| Complex64::new((i as f64).sin(), 0.3));
        let c2 = DVector::from_fn(n, |i, _| Complex64::new(0.1, (i as f64).cos()));
        let setup = ObservationSetup::circle(4, 2.0, 0.0, 1.0).unwrap();
        let zero = |_: Point| Complex64::new(0.0, 0.0);
        let obs = |c: DVector<Complex64>| {
            let sol = DiscreteSolution::new(space.clone(), c).unwrap();
            observe(&sol, &setup, &|_| 3.0, &zero).unwrap()
        };
        let a = obs(c1.clone());
        let b = obs(c2.clone());
        let ab = obs(c1 + c2);
        for i in 0..a.len() {
            assert!((ab[i] - a[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn exterior_value_approaches_series() {
        let mie = mie_solve(
            DiskScatterer {
                radius: 1.0,
                kappa_in: 2.0,
                kappa0: 1.0,
            },
            [1.0, 0.0],
        )
        .unwrap();
        let exact = mie.eval([2.0, 0.0]).unwrap();
        let w = wave();
        let q = TriangleQuadrature::of_order(4).unwrap();
        let errs: Vec<f64> = (1..=3)
            .map(|l| {
                let sol = disk_solution(l, 3.0);
                (exterior_eval(&sol, 1.0, &|_| 3.0, &|x| w.eval(x), &q, [2.0, 0.0]).unwrap() - exact).norm()
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        assert!(errs[2] < 0.4 * errs[1], "{errs:?}");
    }
}
