//! Dense complex solves and the discrete solution as a P1 field.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::assembly::{ComplexLinearSystem, P1Space};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::signed_area;

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverKind {
    /// LU with partial pivoting and one step of iterative refinement.
    Direct,
    /// Restarted GMRES without preconditioning.
    Iterative {
        tol: f64,
        restart: usize,
        max_iter: usize,
    },
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Direct
    }
}

fn norm(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn relative_residual(system: &ComplexLinearSystem, x: &DVector<Complex64>) -> f64 {
    let r = &system.rhs - &system.matrix * x;
    let b = norm(&system.rhs);
    if b == 0.0 {
        norm(&r)
    } else {
        norm(&r) / b
    }
}

/// Solve `(M - A) x = b`.
pub fn solve_ls(system: &ComplexLinearSystem, kind: SolverKind) -> Result<DVector<Complex64>> {
    let n = system.matrix.nrows();
    if system.matrix.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: system.matrix.ncols(),
        });
    }
    if system.rhs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: system.rhs.len(),
        });
    }
    match kind {
        SolverKind::Direct => solve_direct(system),
        SolverKind::Iterative {
            tol,
            restart,
            max_iter,
        } => gmres(&system.matrix, &system.rhs, tol, restart, max_iter),
    }
}

/// Ratio of largest to smallest pivot magnitude of the LU factors. A cheap
/// lower estimate of the condition number.
fn pivot_condition(u_diag: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in u_diag {
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn solve_direct(system: &ComplexLinearSystem) -> Result<DVector<Complex64>> {
    let n = system.matrix.nrows();
    let lu = system.matrix.clone().lu();
    let u = lu.u();
    let condition = pivot_condition((0..n).map(|i| u[(i, i)].norm()));
    if !(condition * f64::EPSILON * (n as f64) < 1.0) {
        return Err(Error::Solver {
            message: "matrix is singular to working precision".into(),
            condition,
        });
    }
    let singular = || Error::Solver {
        message: "LU solve failed".into(),
        condition,
    };
    let mut x = lu.solve(&system.rhs).ok_or_else(singular)?;
    let r = &system.rhs - &system.matrix * &x;
    x += lu.solve(&r).ok_or_else(singular)?;
    let res = relative_residual(system, &x);
    if !(res <= RESIDUAL_TOLERANCE) {
        return Err(Error::Solver {
            message: format!("relative residual {res:.3e} above {RESIDUAL_TOLERANCE:e}"),
            condition,
        });
    }
    Ok(x)
}

fn gmres(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<DVector<Complex64>> {
    let n = b.len();
    let m = restart.clamp(1, n.max(1));
    let b_norm = norm(b);
    let mut x = DVector::<Complex64>::zeros(n);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut iterations = 0;
    let mut res = 1.0;
    while iterations < max_iter {
        let r = b - a * &x;
        let beta = norm(&r);
        res = beta / b_norm;
        if res <= tol {
            return Ok(x);
        }
        let mut basis: Vec<DVector<Complex64>> = vec![r / Complex64::new(beta, 0.0)];
        let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = DVector::<Complex64>::zeros(m + 1);
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        while k < m && iterations < max_iter {
            let mut w = a * &basis[k];
            for (j, v) in basis.iter().enumerate() {
                let hij = v.dotc(&w);
                h[(j, k)] = hij;
                w -= v * hij;
            }
            let wn = norm(&w);
            h[(k + 1, k)] = Complex64::new(wn, 0.0);
            for j in 0..k {
                let (hj, hj1) = (h[(j, k)], h[(j + 1, k)]);
                h[(j, k)] = cs[j].conj() * hj + sn[j].conj() * hj1;
                h[(j + 1, k)] = -sn[j] * hj + cs[j] * hj1;
            }
            let (hk, hk1) = (h[(k, k)], h[(k + 1, k)]);
            let d = (hk.norm_sqr() + hk1.norm_sqr()).sqrt();
            if d == 0.0 {
                break;
            }
            cs[k] = hk / d;
            sn[k] = hk1 / d;
            h[(k, k)] = Complex64::new(d, 0.0);
            h[(k + 1, k)] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            iterations += 1;
            k += 1;
            res = g[k].norm() / b_norm;
            if res <= tol || wn == 0.0 {
                break;
            }
            basis.push(w / Complex64::new(wn, 0.0));
        }
        let mut yk = DVector::<Complex64>::zeros(k);
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * yk[j];
            }
            yk[i] = s / h[(i, i)];
        }
        for (i, v) in basis.iter().take(k).enumerate() {
            x += v * yk[i];
        }
        if res <= tol {
            let true_res = norm(&(b - a * &x)) / b_norm;
            if true_res <= tol * 10.0 {
                return Ok(x);
            }
        }
    }
    Err(Error::Solver {
        message: format!("GMRES stopped after {iterations} iterations at residual {res:.3e}"),
        condition: f64::NAN,
    })
}

/// Nodal values of `u_h` on the physical mesh.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    space: P1Space,
    coefficients: DVector<Complex64>,
    neighbors: Vec<[Option<usize>; 3]>,
}

impl DiscreteSolution {
    pub fn new(space: P1Space, coefficients: DVector<Complex64>) -> Result<Self> {
        if coefficients.len() != space.dof_count() {
            return Err(Error::Dimension {
                expected: space.dof_count(),
                got: coefficients.len(),
            });
        }
        if let Some(i) = coefficients.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Solver {
                message: format!("non-finite coefficient at dof {i}"),
                condition: f64::NAN,
            });
        }
        let neighbors = space.mesh().neighbors();
        Ok(DiscreteSolution {
            space,
            coefficients,
            neighbors,
        })
    }

    pub fn space(&self) -> &P1Space {
        &self.space
    }

    pub fn coefficients(&self) -> &DVector<Complex64> {
        &self.coefficients
    }

    fn barycentric(&self, t: usize, x: Point) -> [f64; 3] {
        let [a, b, c] = self.space.mesh().corners(t);
        let area = signed_area(a, b, c);
        [
            signed_area(x, b, c) / area,
            signed_area(a, x, c) / area,
            signed_area(a, b, x) / area,
        ]
    }

    /// Triangle containing `x`, found by walking from triangle 0 with a
    /// linear scan as fallback for non-convex meshes.
    pub fn locate(&self, x: Point) -> Result<(usize, [f64; 3])> {
        const SLACK: f64 = -1e-12;
        let count = self.neighbors.len();
        let mut t = 0;
        for _ in 0..count {
            let lam = self.barycentric(t, x);
            let (k, min) = lam
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
            if min >= SLACK {
                return Ok((t, lam));
            }
            // vertex k is opposite the edge (k + 1, k + 2)
            match self.neighbors[t][(k + 1) % 3] {
                Some(next) => t = next,
                None => break,
            }
        }
        (0..count)
            .map(|t| (t, self.barycentric(t, x)))
            .find(|(_, lam)| lam.iter().all(|&l| l >= SLACK))
            .ok_or(Error::Location(x[0], x[1]))
    }

    /// Barycentric interpolation of the nodal values.
    pub fn evaluate(&self, x: Point) -> Result<Complex64> {
        let (t, lam) = self.locate(x)?;
        let tri = self.space.mesh().triangles()[t];
        Ok((0..3).map(|k| self.coefficients[tri[k]] * lam[k]).sum())
    }
}
