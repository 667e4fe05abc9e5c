//! Separation-of-variables solution for plane-wave scattering by a
//! homogeneous disk, and error norms of discrete solutions against it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::TriangleQuadrature;
use crate::solver::DiscreteSolution;
use crate::special::{bessel_j_all, bessel_y_all, MAX_ORDER};

const TAIL_TOLERANCE: f64 = 1e-12;
const MIN_ORDERS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskScatterer {
    pub radius: f64,
    pub kappa_in: f64,
    pub kappa0: f64,
}

/// Coefficients of the interior field `sum a_n J_n(kappa_in r) e^{in(theta - theta_d)}`
/// and the scattered field `sum b_n H_n(kappa0 r) e^{in(theta - theta_d)}`.
/// Orders `n` and `-n` share coefficients, so only `n >= 0` is stored.
#[derive(Clone, Debug)]
pub struct MieSolution {
    scatterer: DiskScatterer,
    direction: Point,
    interior: Vec<Complex64>,
    scattered: Vec<Complex64>,
    residuals: Vec<f64>,
}

fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn derivatives(values: &[f64], x: f64) -> Vec<f64> {
    (0..values.len() - 1)
        .map(|n| {
            if n == 0 {
                -values[1]
            } else {
                values[n - 1] - n as f64 / x * values[n]
            }
        })
        .collect()
}

/// Solve the per-order 2x2 transmission systems with adaptive truncation.
pub fn mie_solve(scatterer: DiskScatterer, direction: Point) -> Result<MieSolution> {
    mie_solve_with_orders(scatterer, direction, None)
}

/// As [`mie_solve`] with a fixed number of orders `0..=nmax` when given.
pub fn mie_solve_with_orders(
    scatterer: DiskScatterer,
    direction: Point,
    nmax: Option<usize>,
) -> Result<MieSolution> {
    let DiskScatterer {
        radius: a,
        kappa_in: k1,
        kappa0: k0,
    } = scatterer;
    if !(a > 0.0 && k1 > 0.0 && k0 > 0.0) {
        return Err(Error::Parameter(format!("invalid disk scatterer {scatterer:?}")));
    }
    let dn = direction[0].hypot(direction[1]);
    if !(dn > 0.0) {
        return Err(Error::Parameter("incident direction must be nonzero".into()));
    }
    let direction = [direction[0] / dn, direction[1] / dn];
    let cap = MAX_ORDER as usize - 1;
    let guess = (k1.max(k0) * a + 40.0).ceil() as usize;
    let top = nmax.unwrap_or(guess).min(cap);
    let j_in = bessel_j_all(top as u32 + 1, k1 * a)?;
    let j_out = bessel_j_all(top as u32 + 1, k0 * a)?;
    let y_out = bessel_y_all(top as u32 + 1, k0 * a)?;
    let dj_in = derivatives(&j_in, k1 * a);
    let dj_out = derivatives(&j_out, k0 * a);
    let dy_out = derivatives(&y_out, k0 * a);

    let mut interior = Vec::new();
    let mut scattered = Vec::new();
    let mut residuals = Vec::new();
    let mut peak = 0.0f64;
    for n in 0..=top {
        let h = Complex64::new(j_out[n], y_out[n]);
        let dh = Complex64::new(dj_out[n], dy_out[n]);
        let inc = i_pow(n);
        // [ J_n(k1 a)      -H_n(k0 a)     ] [a_n]   [ i^n J_n(k0 a)     ]
        // [ k1 J_n'(k1 a)  -k0 H_n'(k0 a) ] [b_n] = [ i^n k0 J_n'(k0 a) ]
        let m11 = Complex64::new(j_in[n], 0.0);
        let m12 = -h;
        let m21 = Complex64::new(k1 * dj_in[n], 0.0);
        let m22 = -dh * k0;
        let r1 = inc * j_out[n];
        let r2 = inc * (k0 * dj_out[n]);
        let det = m11 * m22 - m12 * m21;
        let scale = (m11.norm() * m22.norm()).max(m12.norm() * m21.norm());
        if !(det.norm() > 1e-14 * scale) {
            return Err(Error::Resonance(n));
        }
        let an = (r1 * m22 - m12 * r2) / det;
        let bn = (m11 * r2 - r1 * m21) / det;
        let res = ((m11 * an + m12 * bn - r1).norm() + (m21 * an + m22 * bn - r2).norm())
            / (r1.norm() + r2.norm()).max(f64::MIN_POSITIVE);
        interior.push(an);
        scattered.push(bn);
        residuals.push(res);
        let size = (an * j_in[n]).norm() + (bn * h).norm();
        peak = peak.max(size);
        if nmax.is_none() && n >= MIN_ORDERS && size < TAIL_TOLERANCE * peak {
            break;
        }
        if nmax.is_none() && n == top {
            return Err(Error::Resource(format!(
                "Mie series did not converge within {top} orders"
            )));
        }
    }
    Ok(MieSolution {
        scatterer,
        direction,
        interior,
        scattered,
        residuals,
    })
}

impl MieSolution {
    pub fn scatterer(&self) -> DiskScatterer {
        self.scatterer
    }

    pub fn order_count(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_coefficients(&self) -> &[Complex64] {
        &self.interior
    }

    pub fn scattered_coefficients(&self) -> &[Complex64] {
        &self.scattered
    }

    /// Relative residuals of the per-order 2x2 systems.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    fn polar(&self, x: Point) -> (f64, f64) {
        let r = x[0].hypot(x[1]);
        let psi = x[1].atan2(x[0]) - self.direction[1].atan2(self.direction[0]);
        (r, psi)
    }

    pub fn incident(&self, x: Point) -> Complex64 {
        let k0 = self.scatterer.kappa0;
        Complex64::from_polar(1.0, k0 * (self.direction[0] * x[0] + self.direction[1] * x[1]))
    }

    /// Scattered field `u - u_inc` outside the disk.
    pub fn scattered(&self, x: Point) -> Result<Complex64> {
        let (r, psi) = self.polar(x);
        if r < self.scatterer.radius {
            return Err(Error::Domain(format!("scattered series needs r >= a, got {r}")));
        }
        let nmax = self.order_count() - 1;
        let kr = self.scatterer.kappa0 * r;
        let j = bessel_j_all(nmax as u32, kr)?;
        let y = bessel_y_all(nmax as u32, kr)?;
        Ok(self.sum(psi, |n| self.scattered[n] * Complex64::new(j[n], y[n])))
    }

    fn sum(&self, psi: f64, term: impl Fn(usize) -> Complex64) -> Complex64 {
        let mut u = term(0);
        for n in 1..self.order_count() {
            u += term(n) * (2.0 * (n as f64 * psi).cos());
        }
        u
    }

    /// Total field: interior series for `r < a`, incident plus scattered
    /// series otherwise.
    pub fn eval(&self, x: Point) -> Result<Complex64> {
        let (r, psi) = self.polar(x);
        if r < self.scatterer.radius {
            let nmax = self.order_count() - 1;
            let j = bessel_j_all(nmax as u32, self.scatterer.kappa_in * r)?;
            Ok(self.sum(psi, |n| self.interior[n] * j[n]))
        } else {
            Ok(self.incident(x) + self.scattered(x)?)
        }
    }

    /// Gradient of the interior field, `r < a`.
    pub fn interior_gradient(&self, x: Point) -> Result<[Complex64; 2]> {
        let (r, psi) = self.polar(x);
        let k1 = self.scatterer.kappa_in;
        if r >= self.scatterer.radius {
            return Err(Error::Domain(format!("interior gradient needs r < a, got {r}")));
        }
        let d = self.direction;
        if r == 0.0 {
            let g = self.interior.get(1).copied().unwrap_or_default() * k1;
            return Ok([g * d[0], g * d[1]]);
        }
        let nmax = self.order_count();
        let j = bessel_j_all(nmax as u32, k1 * r)?;
        let dj = derivatives(&j, k1 * r);
        let mut ur = self.interior[0] * (k1 * dj[0]);
        let mut ut = Complex64::new(0.0, 0.0);
        for n in 1..self.order_count() {
            let nf = n as f64;
            ur += self.interior[n] * (2.0 * k1 * dj[n] * (nf * psi).cos());
            ut -= self.interior[n] * (2.0 * nf * j[n] / r * (nf * psi).sin());
        }
        let theta = x[1].atan2(x[0]);
        let (s, c) = theta.sin_cos();
        Ok([ur * c - ut * s, ur * s + ut * c])
    }
}

/// Relative errors of a discrete solution against the series solution over
/// the mesh polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleErrors {
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
}

/// Relative L2 and H1 errors, integrated with a dense rule on every element.
pub fn oracle_errors(solution: &DiscreteSolution, mie: &MieSolution) -> Result<OracleErrors> {
    let mesh = solution.space().mesh();
    let quad = TriangleQuadrature::collapsed_gauss(6);
    let c = solution.coefficients();
    let (mut e0, mut n0, mut e1, mut n1) = (0.0, 0.0, 0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let corners = mesh.corners(t);
        let area = mesh.signed_area(t);
        // constant gradient of the P1 interpolant
        let mut grad = [Complex64::new(0.0, 0.0); 2];
        for k in 0..3 {
            let p = corners[(k + 1) % 3];
            let q = corners[(k + 2) % 3];
            let gx = (p[1] - q[1]) / (2.0 * area);
            let gy = (q[0] - p[0]) / (2.0 * area);
            grad[0] += c[tri[k]] * gx;
            grad[1] += c[tri[k]] * gy;
        }
        for ((x, lam), w) in quad.map(&corners).iter().zip(quad.points()).zip(quad.weights()) {
            let uh: Complex64 = (0..3).map(|k| c[tri[k]] * lam[k]).sum();
            let u = mie.eval(*x)?;
            let gu = mie.interior_gradient(*x)?;
            let wa = w * area;
            e0 += wa * (uh - u).norm_sqr();
            n0 += wa * u.norm_sqr();
            let dg = (grad[0] - gu[0]).norm_sqr() + (grad[1] - gu[1]).norm_sqr();
            e1 += wa * dg;
            n1 += wa * (gu[0].norm_sqr() + gu[1].norm_sqr());
        }
    }
    Ok(OracleErrors {
        h: mesh.mesh_size(),
        l2: (e0 / n0).sqrt(),
        h1: ((e0 + e1) / (n0 + n1)).sqrt(),
    })
}
