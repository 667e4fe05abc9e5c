//! Real-argument Bessel and Hankel functions and the 2D Helmholtz
//! fundamental solution.
//!
//! Orders 0 and 1 use the ascending power series below `SERIES_CUTOFF` and
//! the Hankel asymptotic expansion above it. Higher orders of `J` come from
//! Miller's downward recurrence normalised with `J_0 + 2 sum J_2k = 1`, and
//! higher orders of `Y` from the (stable) upward recurrence.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported Bessel order.
pub const MAX_ORDER: u32 = 200;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_CUTOFF: f64 = 12.0;

fn check_order(n: u32) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Ascending series of `J_0` together with the logarithm-free remainder of
/// `Y_0`, i.e. `S(x) = sum_{k>=1} (-1)^{k+1} H_k (x^2/4)^k / (k!)^2` so that
/// `Y_0 = (2/pi) [ (ln(x/2) + gamma) J_0 + S ]`.
fn j0_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut j0 = 1.0;
    let mut rem = 0.0;
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        j0 += term;
        rem -= harmonic * term;
        if term.abs() * (1.0 + harmonic) < 1e-18 {
            break;
        }
    }
    (j0, rem)
}

/// Ascending series of `J_1` and the digamma-weighted sum entering `Y_1`.
fn j1_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let half = 0.5 * x;
    // k = 0 term: psi(1) + psi(2) = 1 - 2 gamma
    let mut term = 1.0;
    let mut psi_sum = 1.0 - 2.0 * EULER_GAMMA;
    let mut j1 = 1.0;
    let mut weighted = psi_sum;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        // psi(k+1) + psi(k+2) grows by 1/k + 1/(k+1)
        psi_sum += 1.0 / kf + 1.0 / (kf + 1.0);
        j1 += term;
        weighted += psi_sum * term;
        if term.abs() * psi_sum.abs().max(1.0) < 1e-18 {
            break;
        }
    }
    (half * j1, half * weighted)
}

/// Hankel asymptotic expansion for order `nu` in {0, 1}: returns (J, Y).
fn asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (nu as f64) * (nu as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu as f64 + 0.25) * PI;
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `(J_0(x), Y_0(x))` for `x > 0`.
pub(crate) fn j0_y0(x: f64) -> (f64, f64) {
    if x < SERIES_CUTOFF {
        let (j0, rem) = j0_series(x);
        let y0 = FRAC_2_PI * (((0.5 * x).ln() + EULER_GAMMA) * j0 + rem);
        (j0, y0)
    } else {
        asymptotic(0, x)
    }
}

fn j1_y1(x: f64) -> (f64, f64) {
    if x < SERIES_CUTOFF {
        let (j1, weighted) = j1_series(x);
        let y1 = -FRAC_2_PI / x + FRAC_2_PI * (0.5 * x).ln() * j1 - FRAC_1_PI * weighted;
        (j1, y1)
    } else {
        asymptotic(1, x)
    }
}

fn j0_only(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        j0_series(x).0
    } else {
        asymptotic(0, x).0
    }
}

fn j1_only(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        j1_series(x).0
    } else {
        asymptotic(1, x).0
    }
}

/// `J_0(x), ..., J_nmax(x)` for `x >= 0`.
///
/// Orders 0 and 1 come from the series/asymptotic branch; orders `>= 2`
/// from Miller's algorithm.
pub fn bessel_j_all(nmax: u32, x: f64) -> Result<Vec<f64>> {
    check_order(nmax)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j requires finite x >= 0, got {x}")));
    }
    let n = nmax as usize;
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    out[0] = j0_only(x);
    if n >= 1 {
        out[1] = j1_only(x);
    }
    if n >= 2 {
        let miller = miller_j(n, x);
        out[2..].copy_from_slice(&miller[2..]);
    }
    Ok(out)
}

/// Miller's downward recurrence, normalised by the Neumann sum.
fn miller_j(n: usize, x: f64) -> Vec<f64> {
    let top = (n as f64).max(x);
    let mut start = (top + 30.0 + (60.0 * top).sqrt()).ceil() as usize;
    start += start % 2;
    let mut vals = vec![0.0; n + 1];
    let mut next = 0.0; // j_{k+1}
    let mut cur = 1e-300; // j_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds j_{k-1}
        let km1 = k - 1;
        if km1 <= n {
            vals[km1] = cur;
        }
        if km1 % 2 == 0 && km1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            next *= scale;
            norm *= scale;
            for v in vals.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm += cur;
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals
}

/// Bessel function of the first kind `J_n(x)`, `x >= 0`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    check_order(n)?;
    match n {
        0 | 1 => Ok(bessel_j_all(n, x)?[n as usize]),
        _ => {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Domain(format!(
                    "bessel_j requires finite x >= 0, got {x}"
                )));
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            Ok(miller_j(n as usize, x)[n as usize])
        }
    }
}

/// `Y_0(x), ..., Y_nmax(x)` for `x > 0` by upward recurrence.
pub fn bessel_y_all(nmax: u32, x: f64) -> Result<Vec<f64>> {
    check_order(nmax)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_y requires finite x > 0 (logarithmic singularity at 0), got {x}"
        )));
    }
    let n = nmax as usize;
    let mut out = Vec::with_capacity(n + 1);
    let (_, y0) = j0_y0(x);
    out.push(y0);
    if n >= 1 {
        let (_, y1) = j1_y1(x);
        out.push(y1);
    }
    for k in 1..n {
        let next = 2.0 * k as f64 / x * out[k] - out[k - 1];
        if !next.is_finite() {
            return Err(Error::Domain(format!("Y_{}({x}) overflows", k + 1)));
        }
        out.push(next);
    }
    Ok(out)
}

/// Bessel function of the second kind `Y_n(x)`, `x > 0`.
pub fn bessel_y(n: u32, x: f64) -> Result<f64> {
    Ok(bessel_y_all(n, x)?[n as usize])
}

/// Hankel function of the first kind `H_n^(1)(x) = J_n(x) + i Y_n(x)`, `n` in {0, 1}.
pub fn hankel1(n: u32, x: f64) -> Result<Complex64> {
    if n > 1 {
        return Err(Error::UnsupportedOrder { order: n, max: 1 });
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("hankel1 requires finite x > 0, got {x}")));
    }
    let (j, y) = if n == 0 { j0_y0(x) } else { j1_y1(x) };
    Ok(Complex64::new(j, y))
}

/// Hankel functions of all orders `0..=nmax` (used by the disk oracle).
pub fn hankel1_all(nmax: u32, x: f64) -> Result<Vec<Complex64>> {
    let j = bessel_j_all(nmax, x)?;
    let y = bessel_y_all(nmax, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// 2D Helmholtz fundamental solution `G(r) = (i/4) H_0^(1)(kappa0 r)`.
pub fn green2d(kappa0: f64, r: f64) -> Result<Complex64> {
    if !(kappa0 > 0.0) {
        return Err(Error::Parameter(format!("wavenumber must be positive, got {kappa0}")));
    }
    if !(r > 0.0) {
        return Err(Error::Singularity(r));
    }
    Ok(green2d_unchecked(kappa0, r))
}

/// Unchecked kernel for hot loops; caller guarantees `kappa0 > 0`, `r > 0`.
#[inline]
pub(crate) fn green2d_unchecked(kappa0: f64, r: f64) -> Complex64 {
    let (j0, y0) = j0_y0(kappa0 * r);
    Complex64::new(-0.25 * y0, 0.25 * j0)
}

/// Smooth part of the kernel, `G(r) + ln(r) / (2 pi)`, valid for `r >= 0`.
///
/// The logarithm is cancelled analytically in the series branch so the
/// value is continuous at `r = 0`.
pub fn green2d_regular(kappa0: f64, r: f64) -> Complex64 {
    let x = kappa0 * r;
    let inv_2pi = 0.5 * FRAC_1_PI;
    if x < SERIES_CUTOFF {
        let (j0, rem) = j0_series(x);
        let log_part = if r > 0.0 { r.ln() * (j0 - 1.0) } else { 0.0 };
        let re = -inv_2pi * (((0.5 * kappa0).ln() + EULER_GAMMA) * j0 + log_part + rem);
        Complex64::new(re, 0.25 * j0)
    } else {
        green2d_unchecked(kappa0, r) + inv_2pi * r.ln()
    }
}
