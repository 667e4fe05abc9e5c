use proptest::prelude::*;

use lsuq_core::bayes::ratio_estimate;
use lsuq_core::forward_uq::{estimate, pairwise_sum, ForwardModel, SampleCache};
use lsuq_core::geometry::{validate_shape, ParamVector, RadiusModel};
use lsuq_core::mesh::unit_disk_mesh;
use lsuq_core::qmc::{to_param, GeneratingData, QmcRule};
use lsuq_core::Result;

const S: usize = 20;

fn model() -> RadiusModel {
    RadiusModel::new(0.25, 3.0, S / 2).unwrap()
}

fn params() -> impl Strategy<Value = ParamVector> {
    prop::collection::vec(-1.0f64..=1.0, S).prop_map(|v| ParamVector::new(v).unwrap())
}

fn reference_point() -> impl Strategy<Value = [f64; 2]> {
    (0.1f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| [r * a.cos(), r * a.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobian_matches_finite_differences(y in params(), x in reference_point()) {
        let m = model();
        let h = 1e-6;
        let d = |dx: f64, dy: f64| m.transform(&y, [x[0] + dx, x[1] + dy]).unwrap();
        let (xp, xm, yp, ym) = (d(h, 0.0), d(-h, 0.0), d(0.0, h), d(0.0, -h));
        let a = (xp[0] - xm[0]) / (2.0 * h);
        let b = (yp[0] - ym[0]) / (2.0 * h);
        let c = (xp[1] - xm[1]) / (2.0 * h);
        let e = (yp[1] - ym[1]) / (2.0 * h);
        let exact = m.jacobian_det(&y, x).unwrap();
        prop_assert!((a * e - b * c - exact).abs() < 1e-6, "{} vs {}", a * e - b * c, exact);
    }

    #[test]
    fn transform_round_trip(y in params(), x in reference_point()) {
        let shape = validate_shape(&model(), &y, 128, 1e-3).unwrap();
        let back = shape.inverse(shape.transform(x));
        prop_assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn radius_within_bounds(y in params(), phi in 0.0f64..std::f64::consts::TAU) {
        let m = model();
        let r = m.radius(&y, phi).unwrap();
        prop_assert!(r >= m.radius_lower_bound() - 1e-14 && r <= m.radius_upper_bound() + 1e-14);
    }

    #[test]
    fn pushforward_keeps_orientation_and_topology(y in params()) {
        let reference = unit_disk_mesh(2).unwrap();
        let shape = validate_shape(&model(), &y, 128, 1e-3).unwrap();
        let physical = reference.pushforward(&shape);
        prop_assert_eq!(physical.triangles(), reference.triangles());
        prop_assert!((0..physical.triangle_count()).all(|t| physical.signed_area(t) > 0.0));
    }

    #[test]
    fn shifted_lattice_points_in_unit_cube(seed in any::<u64>(), shift in 0usize..8) {
        let rule = QmcRule::shifted_lattice(GeneratingData::Lattice { n: 64, z: vec![1, 19, 27, 41] }, seed, 8).unwrap();
        let points = rule.generate(shift).unwrap();
        for t in points.iter() {
            prop_assert!(t.iter().all(|&v| (0.0..1.0).contains(&v)));
            prop_assert!(to_param(t).as_slice().iter().all(|&v| (-1.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn ratio_estimator_ignores_potential_offsets(
        phis in prop::collection::vec(0.0f64..40.0, 2..30),
        offset in 0.0f64..500.0,
    ) {
        let angles = [0.0, 1.0, 2.0];
        let boundaries: Vec<Vec<f64>> = (0..phis.len())
            .map(|i| angles.iter().map(|a| 1.0 + 0.2 * (a * i as f64).cos()).collect())
            .collect();
        let base = ratio_estimate(&angles, &phis, &boundaries).unwrap();
        let moved: Vec<f64> = phis.iter().map(|p| p + offset).collect();
        let other = ratio_estimate(&angles, &moved, &boundaries).unwrap();
        for (a, b) in base.posterior_mean.iter().zip(&other.posterior_mean) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(base.z > 0.0 && base.z <= 1.0);
    }

    #[test]
    fn pairwise_sum_close_to_naive(v in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }
}

struct Constant;

impl ForwardModel for Constant {
    fn dimension(&self) -> usize {
        4
    }
    fn output_len(&self) -> usize {
        2
    }
    fn eval(&self, _: &ParamVector) -> Result<Vec<f64>> {
        Ok(vec![1.0, -3.0])
    }
}

#[test]
fn constant_integrand_exact_for_every_rule_and_shift() {
    let lattice = QmcRule::shifted_lattice(GeneratingData::Lattice { n: 32, z: vec![1, 7, 11, 13] }, 9, 5).unwrap();
    let mc = QmcRule::monte_carlo(32, 4, 3);
    for rule in [lattice, mc] {
        let est = estimate(&Constant, &rule, 32, &mut SampleCache::new()).unwrap();
        assert_eq!(est.mean, vec![1.0, -3.0]);
        assert!(est.per_shift.iter().all(|v| v == &vec![1.0, -3.0]));
    }
}
