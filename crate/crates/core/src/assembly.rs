//! P1 Galerkin discretisation of the Lippmann-Schwinger equation
//! `u - N(beta u) = u_inc` on a physical triangulation.
//!
//! Well-separated element pairs use the tensor product of the element rule.
//! For near and coincident pairs the logarithmic part of the kernel is
//! integrated in closed form over the inner element, and the tensor rule is
//! applied only to the continuous remainder.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{signed_area, TriangleMesh};
use crate::quadrature::TriangleQuadrature;
use crate::special::{green2d_regular, green2d_unchecked};

const INV_2PI: f64 = 0.5 * std::f64::consts::FRAC_1_PI;
const ROW_CHUNK: usize = 32;

pub const DEFAULT_NEAR_THRESHOLD: f64 = 0.5;
pub const DEFAULT_QUAD_ORDER: usize = 4;

/// Continuous piecewise linear functions on a triangulation, one degree of
/// freedom per vertex.
#[derive(Clone, Debug)]
pub struct P1Space {
    mesh: TriangleMesh,
}

impl P1Space {
    pub fn new(mesh: TriangleMesh) -> Self {
        P1Space { mesh }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.mesh.vertex_count()
    }
}

/// Dense system `(M - A) u = b`.
#[derive(Clone, Debug)]
pub struct ComplexLinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
}

/// Incident plane wave `exp(i kappa0 d.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    kappa0: f64,
    direction: Point,
}

impl PlaneWave {
    pub fn new(kappa0: f64, direction: Point) -> Result<Self> {
        let norm = direction[0].hypot(direction[1]);
        if !(kappa0 > 0.0) || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Parameter(format!(
                "plane wave needs kappa0 > 0 and a nonzero direction, got {kappa0}, {direction:?}"
            )));
        }
        Ok(PlaneWave {
            kappa0,
            direction: [direction[0] / norm, direction[1] / norm],
        })
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn direction(&self) -> Point {
        self.direction
    }

    pub fn eval(&self, x: Point) -> Complex64 {
        let phase = self.kappa0 * (self.direction[0] * x[0] + self.direction[1] * x[1]);
        Complex64::from_polar(1.0, phase)
    }
}

/// Exact P1 mass matrix.
pub fn mass_matrix(space: &P1Space) -> DMatrix<f64> {
    let n = space.dof_count();
    let mesh = space.mesh();
    let mut m = DMatrix::zeros(n, n);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        for a in 0..3 {
            for b in 0..3 {
                let factor = if a == b { 2.0 } else { 1.0 };
                m[(tri[a], tri[b])] += area / 12.0 * factor;
            }
        }
    }
    m
}

/// `b_i = int u_inc phi_i` by the element rule.
pub fn rhs_vector(
    space: &P1Space,
    u_inc: &dyn Fn(Point) -> Complex64,
    quad: &TriangleQuadrature,
) -> DVector<Complex64> {
    let mesh = space.mesh();
    let mut b = DVector::zeros(space.dof_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.signed_area(t);
        let pts = quad.map(&mesh.corners(t));
        for ((x, lam), w) in pts.iter().zip(quad.points()).zip(quad.weights()) {
            let f = u_inc(*x) * (w * area);
            for a in 0..3 {
                b[tri[a]] += f * lam[a];
            }
        }
    }
    b
}

struct Element {
    corners: [Point; 3],
    diameter: f64,
    centroid: Point,
    reach: f64,
    points: Vec<Point>,
    weights: Vec<f64>,
    beta: Vec<f64>,
}

fn elements(
    mesh: &TriangleMesh,
    quad: &TriangleQuadrature,
    beta_at: &(dyn Fn(Point) -> f64 + Sync),
) -> Vec<Element> {
    (0..mesh.triangle_count())
        .map(|t| {
            let corners = mesh.corners(t);
            let area = mesh.signed_area(t);
            let centroid = [
                (corners[0][0] + corners[1][0] + corners[2][0]) / 3.0,
                (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0,
            ];
            let reach = corners
                .iter()
                .map(|c| dist(*c, centroid))
                .fold(0.0, f64::max);
            let points = quad.map(&corners);
            let beta = points.iter().map(|&x| beta_at(x)).collect();
            Element {
                corners,
                diameter: mesh.diameter(t),
                centroid,
                reach,
                points,
                weights: quad.weights().iter().map(|w| w * area).collect(),
                beta,
            }
        })
        .collect()
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Distance between two non-overlapping triangles of a conforming mesh.
fn triangle_distance(s: &[Point; 3], t: &[Point; 3]) -> f64 {
    let mut d = f64::INFINITY;
    for (u, v) in [(s, t), (t, s)] {
        for p in u {
            for k in 0..3 {
                d = d.min(point_segment_distance(*p, v[k], v[(k + 1) % 3]));
            }
        }
    }
    d
}

fn is_near(
    s: &Element,
    t: &Element,
    ts: &[usize; 3],
    tt: &[usize; 3],
    threshold: f64,
) -> bool {
    let limit = threshold * (s.diameter + t.diameter);
    if dist(s.centroid, t.centroid) - s.reach - t.reach > limit {
        return false;
    }
    if ts.iter().any(|v| tt.contains(v)) {
        return true;
    }
    triangle_distance(&s.corners, &t.corners) <= limit
}

/// `int_T ln|x - y| lambda_b(y) dy` for the three barycentric functions of
/// `T`, exact for any `x` in the plane.
///
/// `T` is split into the signed triangles `(x, A, B)` over its edges; on each
/// the radial integral is elementary and the remaining edge integral reduces
/// to antiderivatives of `ln(u^2 + e^2)` and `u ln(u^2 + e^2)`.
pub fn log_potential_p1(corners: &[Point; 3], x: Point) -> [f64; 3] {
    let area = signed_area(corners[0], corners[1], corners[2]);
    let lam_x = [
        signed_area(x, corners[1], corners[2]) / area,
        signed_area(corners[0], x, corners[2]) / area,
        signed_area(corners[0], corners[1], x) / area,
    ];
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = corners[k];
        let b = corners[(k + 1) % 3];
        let d = [b[0] - a[0], b[1] - a[1]];
        let ax = [a[0] - x[0], a[1] - x[1]];
        let d2 = d[0] * d[0] + d[1] * d[1];
        let cross = ax[0] * d[1] - ax[1] * d[0];
        let e = cross.abs() / d2;
        if e < 1e-13 {
            continue;
        }
        let v0 = -(ax[0] * d[0] + ax[1] * d[1]) / d2;
        let e2 = e * e;
        let f0 = |u: f64| u * (u * u + e2).ln() - 2.0 * u + 2.0 * e * (u / e).atan();
        let f1 = |u: f64| 0.5 * ((u * u + e2) * (u * u + e2).ln() - u * u);
        let (lo, hi) = (-v0, 1.0 - v0);
        let df0 = f0(hi) - f0(lo);
        let df1 = f1(hi) - f1(lo);
        let ln_d = 0.5 * d2.ln();
        let m0 = ln_d + 0.5 * df0;
        let m1 = 0.5 * ln_d + 0.5 * (df1 + v0 * df0);
        for (bi, o) in out.iter_mut().enumerate() {
            let at_a = if bi == k { 1.0 } else { 0.0 };
            let at_b = if bi == (k + 1) % 3 { 1.0 } else { 0.0 };
            let g0 = at_a - lam_x[bi];
            let g1 = at_b - at_a;
            *o += cross
                * (lam_x[bi] * (-0.25 + 0.5 * m0) - (g0 + 0.5 * g1) / 9.0
                    + (g0 * m0 + g1 * m1) / 3.0);
        }
    }
    out
}

type Block = [[Complex64; 3]; 3];

/// Far pair: returns the blocks for `(s, t)` and `(t, s)` from one set of
/// kernel evaluations.
fn far_blocks(s: &Element, t: &Element, lam: &[[f64; 3]], kappa0: f64) -> (Block, Block) {
    let zero = Complex64::new(0.0, 0.0);
    let mut st = [[zero; 3]; 3];
    let mut ts = [[zero; 3]; 3];
    for (p, xp) in s.points.iter().enumerate() {
        let wp = s.weights[p];
        let mut row_st = [zero; 3];
        let mut row_ts = [zero; 3];
        for (q, yq) in t.points.iter().enumerate() {
            let g = green2d_unchecked(kappa0, dist(*xp, *yq)) * (wp * t.weights[q]);
            let g_st = g * t.beta[q];
            let g_ts = g * s.beta[p];
            for b in 0..3 {
                row_st[b] += g_st * lam[q][b];
                row_ts[b] += g_ts * lam[q][b];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                st[a][b] += row_st[b] * lam[p][a];
                ts[b][a] += row_ts[b] * lam[p][a];
            }
        }
    }
    (st, ts)
}

/// Near or coincident pair, outer element `s`, inner element `t`.
fn near_block(s: &Element, t: &Element, lam: &[[f64; 3]], kappa0: f64) -> Block {
    let zero = Complex64::new(0.0, 0.0);
    let mut block = [[zero; 3]; 3];
    for (p, xp) in s.points.iter().enumerate() {
        let beta_p = s.beta[p];
        let mut row = [zero; 3];
        for (q, yq) in t.points.iter().enumerate() {
            let r = dist(*xp, *yq);
            let smooth = green2d_regular(kappa0, r) * t.beta[q];
            let log_diff = if r > 0.0 {
                INV_2PI * r.ln() * (t.beta[q] - beta_p)
            } else {
                0.0
            };
            let k = (smooth - log_diff) * t.weights[q];
            for b in 0..3 {
                row[b] += k * lam[q][b];
            }
        }
        let log_exact = log_potential_p1(&t.corners, *xp);
        for b in 0..3 {
            row[b] -= Complex64::new(INV_2PI * beta_p * log_exact[b], 0.0);
        }
        for a in 0..3 {
            for b in 0..3 {
                block[a][b] += row[b] * (s.weights[p] * lam[p][a]);
            }
        }
    }
    block
}

fn block_is_finite(b: &Block) -> bool {
    b.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Galerkin matrix `A_ij = int int G(x - y) beta(y) phi_j(y) phi_i(x) dy dx`.
///
/// Pairs with `dist(T, T') > near_threshold (diam T + diam T')` use the plain
/// tensor rule, all others the log-subtracted rule. Rows are computed in
/// parallel and scattered in a fixed order, so the result does not depend
/// on the number of threads.
pub fn vio_matrix(
    space: &P1Space,
    kappa0: f64,
    beta_at: &(dyn Fn(Point) -> f64 + Sync),
    quad: &TriangleQuadrature,
    near_threshold: f64,
) -> Result<DMatrix<Complex64>> {
    if !(kappa0 > 0.0) {
        return Err(Error::Parameter(format!("kappa0 must be positive, got {kappa0}")));
    }
    if !(near_threshold >= 0.0) {
        return Err(Error::Parameter(format!(
            "near_threshold must be nonnegative, got {near_threshold}"
        )));
    }
    let mesh = space.mesh();
    let tris = mesh.triangles();
    let elems = elements(mesh, quad, beta_at);
    let lam = quad.points();
    let n = space.dof_count();
    let mut a = DMatrix::<Complex64>::zeros(n, n);

    let row_blocks = |s: usize| -> Result<Vec<(usize, Block, Option<Block>)>> {
        let mut out = Vec::with_capacity(tris.len() - s);
        for t in s..tris.len() {
            let (es, et) = (&elems[s], &elems[t]);
            let entry = if t == s {
                (t, near_block(es, es, lam, kappa0), None)
            } else if is_near(es, et, &tris[s], &tris[t], near_threshold) {
                (
                    t,
                    near_block(es, et, lam, kappa0),
                    Some(near_block(et, es, lam, kappa0)),
                )
            } else {
                let (st, ts) = far_blocks(es, et, lam, kappa0);
                (t, st, Some(ts))
            };
            if !block_is_finite(&entry.1) || entry.2.as_ref().is_some_and(|b| !block_is_finite(b)) {
                return Err(Error::NonFinite(s, t));
            }
            out.push(entry);
        }
        Ok(out)
    };

    for start in (0..tris.len()).step_by(ROW_CHUNK) {
        let end = (start + ROW_CHUNK).min(tris.len());
        let rows: Vec<_> = (start..end)
            .into_par_iter()
            .map(row_blocks)
            .collect::<Result<_>>()?;
        for (s, row) in (start..end).zip(rows) {
            let ts = &tris[s];
            for (t, st, back) in row {
                let tt = &tris[t];
                for i in 0..3 {
                    for j in 0..3 {
                        a[(ts[i], tt[j])] += st[i][j];
                    }
                }
                if let Some(back) = back {
                    for i in 0..3 {
                        for j in 0..3 {
                            a[(tt[i], ts[j])] += back[i][j];
                        }
                    }
                }
            }
        }
    }
    Ok(a)
}

/// Full system `(M - A) u = b` for a plane wave and contrast `beta_at`.
pub fn assemble_system(
    space: &P1Space,
    kappa0: f64,
    beta_at: &(dyn Fn(Point) -> f64 + Sync),
    u_inc: &dyn Fn(Point) -> Complex64,
    quad: &TriangleQuadrature,
    near_threshold: f64,
) -> Result<ComplexLinearSystem> {
    let a = vio_matrix(space, kappa0, beta_at, quad, near_threshold)?;
    let m = mass_matrix(space);
    let matrix = m.map(|v| Complex64::new(v, 0.0)) - a;
    let rhs = rhs_vector(space, u_inc, quad);
    Ok(ComplexLinearSystem { matrix, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_disk_mesh, TriangleMesh};
    use approx::assert_abs_diff_eq;

    fn unit_right_triangle() -> [Point; 3] {
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    }


    #[test]
    fn mass_matrix_sums_to_area() {
        let space = P1Space::new(unit_disk_mesh(3).unwrap());
        let m = mass_matrix(&space);
        assert_abs_diff_eq!(m.sum(), space.mesh().total_area(), epsilon = 1e-13);
        assert_eq!(&m, &m.transpose());
    }

    #[test]
    fn mass_element_entries() {
        let single = TriangleMesh::from_parts(unit_right_triangle().to_vec(), vec![[0, 1, 2]]).unwrap();
        let m = mass_matrix(&P1Space::new(single));
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert_abs_diff_eq!(m[(i, j)], expected, epsilon = 1e-16);
            }
        }

        let m = mass_matrix(&P1Space::new(unit_disk_mesh(0).unwrap()));
        // centre vertex 0 touches all six triangles of area sqrt(3)/4
        let area = 3f64.sqrt() / 4.0;
        assert_abs_diff_eq!(m[(0, 0)], 6.0 * area / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 2)], area / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn log_potential_matches_brute_force() {
        let tri = [[0.2, -0.1], [1.3, 0.4], [0.1, 0.9]];
        let fine = TriangleQuadrature::collapsed_gauss(40);
        let area = signed_area(tri[0], tri[1], tri[2]);
        for x in [[3.0, 2.0], [1.0, -0.5], [0.7, 0.75]] {
            let exact = log_potential_p1(&tri, x);
            let pts = fine.map(&tri);
            for b in 0..3 {
                let q: f64 = pts
                    .iter()
                    .zip(fine.points())
                    .zip(fine.weights())
                    .map(|((y, l), w)| w * area * dist(x, *y).ln() * l[b])
                    .sum();
                // (0.7, 0.75) sits 0.1 outside an edge, which limits the reference rule
                assert_abs_diff_eq!(exact[b], q, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn log_potential_inside_and_on_edges() {
        // interior points: split T at x into three subtriangles whose
        // integrands are smooth away from the shared apex
        let tri = unit_right_triangle();
        let fine = TriangleQuadrature::collapsed_gauss(60);
        for x in [[0.25, 0.25], [0.5, 0.0], [0.0, 0.0], [0.1, 0.6]] {
            let exact = log_potential_p1(&tri, x);
            let mut q = [0.0; 3];
            for k in 0..3 {
                let sub = [x, tri[k], tri[(k + 1) % 3]];
                let area = signed_area(sub[0], sub[1], sub[2]);
                if area.abs() < 1e-15 {
                    continue;
                }
                for (y, w) in fine.map(&sub).iter().zip(fine.weights()) {
                    let lam = [1.0 - y[0] - y[1], y[0], y[1]];
                    for b in 0..3 {
                        q[b] += w * area * dist(x, *y).ln() * lam[b];
                    }
                }
            }
            for b in 0..3 {
                assert_abs_diff_eq!(exact[b], q[b], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn log_self_integral_of_unit_right_triangle() {
        let tri = unit_right_triangle();
        let outer = TriangleQuadrature::collapsed_gauss(30);
        let total: f64 = outer
            .map(&tri)
            .iter()
            .zip(outer.weights())
            .map(|(x, w)| w * 0.5 * log_potential_p1(&tri, *x).iter().sum::<f64>())
            .sum();
        // Monte Carlo reference, 1e8 samples, standard error 2.7e-6
        assert_abs_diff_eq!(-INV_2PI * total, 0.042453, epsilon = 1e-4);
    }

    #[test]
    fn zero_contrast_gives_zero_matrix() {
        let space = P1Space::new(unit_disk_mesh(1).unwrap());
        let quad = TriangleQuadrature::of_order(4).unwrap();
        let a = vio_matrix(&space, 1.0, &|_| 0.0, &quad, 0.5).unwrap();
        assert!(a.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn constant_contrast_is_symmetric() {
        let space = P1Space::new(unit_disk_mesh(2).unwrap());
        let quad = TriangleQuadrature::of_order(4).unwrap();
        let a = vio_matrix(&space, 1.0, &|_| 1.0, &quad, 0.5).unwrap();
        let asym = (&a - a.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        // near pairs swap the roles of inner and outer element, so symmetry
        // holds up to the quadrature error
        assert!(asym <= 1e-5 * scale, "{asym} vs {scale}");
    }

    #[test]
    fn quadrature_order_convergence() {
        let space = P1Space::new(unit_disk_mesh(3).unwrap());
        let coarse = vio_matrix(
            &space,
            1.0,
            &|_| 1.0,
            &TriangleQuadrature::of_order(6).unwrap(),
            0.5,
        )
        .unwrap();
        let fine = vio_matrix(
            &space,
            1.0,
            &|_| 1.0,
            &TriangleQuadrature::collapsed_gauss(7),
            0.5,
        )
        .unwrap();
        let diff = (&coarse - &fine).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "max change {diff:e}");
    }

    #[test]
    fn rhs_of_constant_is_lumped_area() {
        let space = P1Space::new(unit_disk_mesh(2).unwrap());
        let quad = TriangleQuadrature::of_order(2).unwrap();
        let b = rhs_vector(&space, &|_| Complex64::new(1.0, 0.0), &quad);
        let mesh = space.mesh();
        let mut lumped = vec![0.0; space.dof_count()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for v in tri {
                lumped[*v] += mesh.signed_area(t) / 3.0;
            }
        }
        for (bi, li) in b.iter().zip(&lumped) {
            assert_abs_diff_eq!(bi.re, *li, epsilon = 1e-14);
            assert_eq!(bi.im, 0.0);
        }
    }

    #[test]
    fn rhs_plane_wave_against_dense_rule() {
        let space = P1Space::new(unit_disk_mesh(2).unwrap());
        let wave = PlaneWave::new(1.0, [1.0, 0.0]).unwrap();
        let b = rhs_vector(&space, &|x| wave.eval(x), &TriangleQuadrature::of_order(6).unwrap());
        let dense = rhs_vector(&space, &|x| wave.eval(x), &TriangleQuadrature::collapsed_gauss(10));
        for i in 0..space.dof_count() {
            assert!((b[i] - dense[i]).norm() < 1e-8);
        }
        let scaled = rhs_vector(
            &space,
            &|x| wave.eval(x) * Complex64::new(0.0, 2.0),
            &TriangleQuadrature::of_order(6).unwrap(),
        );
        for i in 0..space.dof_count() {
            assert!((scaled[i] - b[i] * Complex64::new(0.0, 2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_plane_wave() {
        assert!(PlaneWave::new(1.0, [0.0, 0.0]).is_err());
        assert!(PlaneWave::new(0.0, [1.0, 0.0]).is_err());
    }
}
