//! Gauss-Legendre and triangle quadrature rules.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Rule on the reference triangle in barycentric coordinates. Weights sum to
/// one and are multiplied by the element area at use.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleQuadrature {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl TriangleQuadrature {
    /// Symmetric rules exact for polynomials of total degree 2, 4 or 6.
    pub fn of_order(order: usize) -> Result<Self> {
        let mut rule = TriangleQuadrature {
            points: Vec::new(),
            weights: Vec::new(),
            degree: order,
        };
        match order {
            2 => rule.orbit3(1.0 / 6.0, 1.0 / 3.0),
            4 => {
                rule.orbit3(0.445948490915965, 0.223381589678011);
                rule.orbit3(0.091576213509771, 0.109951743655322);
            }
            6 => {
                rule.orbit3(0.249286745170910, 0.116786275726379);
                rule.orbit3(0.063089014491502, 0.050844906370207);
                rule.orbit6(
                    0.053145049844817,
                    0.310352451033784,
                    0.082851075618374,
                );
            }
            _ => return Err(Error::QuadratureOrder(order)),
        }
        Ok(rule)
    }

    /// Collapsed tensor Gauss rule with `n * n` points, exact to degree
    /// `2n - 2`. Used for reference computations.
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                let l1 = u;
                let l2 = (1.0 - u) * v;
                points.push([1.0 - l1 - l2, l1, l2]);
                // reference area 1/2 normalised to 1
                weights.push(0.5 * w[i] * 0.5 * w[j] * (1.0 - u) * 2.0);
            }
        }
        TriangleQuadrature {
            points,
            weights,
            degree: 2 * n - 2,
        }
    }

    fn orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical quadrature points on the triangle with the given corners.
    pub fn map(&self, corners: &[[f64; 2]; 3]) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|l| {
                [
                    l[0] * corners[0][0] + l[1] * corners[1][0] + l[2] * corners[2][0],
                    l[0] * corners[0][1] + l[1] * corners[1][1] + l[2] * corners[2][1],
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // exact integral of l1^a l2^b l3^c over a triangle of unit area
    fn monomial(a: u32, b: u32, c: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * f(a) * f(b) * f(c) / f(a + b + c + 2)
    }

    fn check_exactness(rule: &TriangleQuadrature) {
        let d = rule.degree() as u32;
        for a in 0..=d {
            for b in 0..=d - a {
                let c = d - a - b;
                let q: f64 = rule
                    .points()
                    .iter()
                    .zip(rule.weights())
                    .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                    .sum();
                assert_abs_diff_eq!(q, monomial(a, b, c), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..20 {
            let (x, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            let k = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32 - 1)).sum();
            let exact = if (k - 1) % 2 == 0 { 2.0 / k as f64 } else { 0.0 };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn symmetric_rules_are_exact() {
        for order in [2, 4, 6] {
            let rule = TriangleQuadrature::of_order(order).unwrap();
            assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            check_exactness(&rule);
        }
        assert!(matches!(TriangleQuadrature::of_order(3), Err(Error::QuadratureOrder(3))));
    }

    #[test]
    fn collapsed_rule_is_exact() {
        for n in 2..8 {
            check_exactness(&TriangleQuadrature::collapsed_gauss(n));
        }
    }
}
