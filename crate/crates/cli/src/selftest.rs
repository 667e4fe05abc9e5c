//! Fast invariant checks, one line per check.

use std::f64::consts::PI;

use lsuq_core::assembly::{assemble_system, P1Space, PlaneWave};
use lsuq_core::bayes::{potential, ratio_estimate};
use lsuq_core::forward_uq::{estimate, ForwardModel, SampleCache};
use lsuq_core::geometry::{ParamVector, RadiusModel};
use lsuq_core::mesh::unit_disk_mesh;
use lsuq_core::oracle::{mie_solve, oracle_errors, DiskScatterer};
use lsuq_core::qmc::{GeneratingData, QmcRule};
use lsuq_core::quadrature::TriangleQuadrature;
use lsuq_core::solver::{solve_ls, DiscreteSolution, SolverKind};
use lsuq_core::special::hankel1;
use lsuq_core::{Error, Result};

type Check = (&'static str, fn() -> Result<bool>);

fn hankel_values() -> Result<bool> {
    let h = hankel1(0, 1.0)?;
    Ok((h.re - 0.765_197_686_557_966_6).abs() < 1e-13 && (h.im - 0.088_256_964_215_676_96).abs() < 1e-13)
}

fn mesh_nesting_and_area() -> Result<bool> {
    let coarse = unit_disk_mesh(2)?;
    let fine = unit_disk_mesh(3)?;
    let nested = coarse.vertices() == &fine.vertices()[..coarse.vertex_count()];
    let area = fine.total_area();
    Ok(nested && area < PI && area > 0.99 * PI)
}

fn nominal_radius() -> Result<bool> {
    let model = RadiusModel::new(0.25, 3.0, 5)?;
    let y = ParamVector::zeros(10);
    Ok((0..16).all(|k| model.radius(&y, k as f64).map(|r| r == 1.0).unwrap_or(false)))
}

fn lattice_definition() -> Result<bool> {
    let points = QmcRule::lattice(4, vec![1, 3])?.generate(0)?;
    let expected = [[0.0, 0.0], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25]];
    let same = points.iter().zip(expected).all(|(p, e)| p == e);
    Ok(same)
}

struct One;

impl ForwardModel for One {
    fn dimension(&self) -> usize {
        3
    }
    fn output_len(&self) -> usize {
        1
    }
    fn eval(&self, _: &ParamVector) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }
}

fn constant_integrand() -> Result<bool> {
    let rule = QmcRule::shifted_lattice(GeneratingData::Lattice { n: 16, z: vec![1, 5, 7] }, 1, 3)?;
    let est = estimate(&One, &rule, 16, &mut SampleCache::new())?;
    Ok(est.mean == vec![1.0] && est.per_shift.iter().all(|v| v == &vec![1.0]))
}

fn disk_against_series() -> Result<bool> {
    let wave = PlaneWave::new(1.0, [1.0, 0.0])?;
    let space = P1Space::new(unit_disk_mesh(2)?);
    let quad = TriangleQuadrature::of_order(4)?;
    let system = assemble_system(&space, 1.0, &|_| 3.0, &|x| wave.eval(x), &quad, 0.5)?;
    let solution = DiscreteSolution::new(space, solve_ls(&system, SolverKind::Direct)?)?;
    let mie = mie_solve(
        DiskScatterer {
            radius: 1.0,
            kappa_in: 2.0,
            kappa0: 1.0,
        },
        [1.0, 0.0],
    )?;
    Ok(oracle_errors(&solution, &mie)?.l2 < 0.03)
}

fn misfit_potential() -> Result<bool> {
    Ok((potential(&[0.2, 0.0], &[0.0, 0.0], 0.1)? - 2.0).abs() < 1e-12)
}

fn ratio_shift_invariance() -> Result<bool> {
    let boundaries = vec![vec![1.0, 1.1], vec![0.9, 1.3], vec![1.2, 0.8]];
    let a = ratio_estimate(&[0.0, PI], &[1.0, 4.0, 9.0], &boundaries)?;
    let b = ratio_estimate(&[0.0, PI], &[301.0, 304.0, 309.0], &boundaries)?;
    Ok(a.posterior_mean.iter().zip(&b.posterior_mean).all(|(x, y)| (x - y).abs() < 1e-12))
}

fn degenerate_posterior_reported() -> Result<bool> {
    Ok(matches!(
        ratio_estimate(&[0.0], &[900.0], &[vec![1.0]]),
        Err(Error::DegeneratePosterior(_))
    ))
}

const CHECKS: &[Check] = &[
    ("hankel function H0(1)", hankel_values),
    ("mesh nesting and area", mesh_nesting_and_area),
    ("nominal radius", nominal_radius),
    ("rank-1 lattice definition", lattice_definition),
    ("constant integrand estimate", constant_integrand),
    ("disk solution against series", disk_against_series),
    ("misfit potential", misfit_potential),
    ("ratio estimator shift invariance", ratio_shift_invariance),
    ("degenerate posterior reported", degenerate_posterior_reported),
];

pub fn run() -> Result<()> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        let outcome = check();
        let pass = matches!(outcome, Ok(true));
        if !pass {
            failed += 1;
        }
        match outcome {
            Err(e) => println!("FAIL {name}: {e}"),
            _ => println!("{} {name}", if pass { "PASS" } else { "FAIL" }),
        }
    }
    println!("{} passed, {failed} failed", CHECKS.len() - failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(Error::Resource(format!("{failed} self-test checks failed")))
    }
}
