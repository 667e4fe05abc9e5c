//! QMC and Monte Carlo point sets on `[0,1)^s` and their map to `[-1,1]^s`.
//!
//! Lattice rules are rank-1 with a random shift per shift index. Interlaced
//! polynomial lattice rules are read from generating-matrix files; a default
//! set is embedded (see `data/ipl/README.md`).

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ParamVector;

pub const MAX_CBC_DIMENSION: usize = 200;
const MAX_IPL_BITS: usize = 52;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    MonteCarlo,
    ShiftedLattice,
    InterlacedPolyLattice,
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::MonteCarlo => "mc",
            RuleKind::ShiftedLattice => "rlr",
            RuleKind::InterlacedPolyLattice => "ipl",
        }
    }
}

/// Generating vector or generating matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratingData {
    /// Rank-1 lattice generating vector for `n` points.
    Lattice { n: u64, z: Vec<u64> },
    /// Polynomial lattice with `2^m` points in dimension `alpha * s`.
    /// `matrices[j][r]` is row `r` of the `m x m` matrix of component `j`,
    /// bit `c` holding column `c`.
    PolyLattice {
        m: usize,
        s: usize,
        alpha: usize,
        matrices: Vec<Vec<u64>>,
    },
}

impl GeneratingData {
    pub fn n_points(&self) -> u64 {
        match self {
            GeneratingData::Lattice { n, .. } => *n,
            GeneratingData::PolyLattice { m, .. } => 1 << m,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            GeneratingData::Lattice { z, .. } => z.len(),
            GeneratingData::PolyLattice { s, .. } => *s,
        }
    }

    /// Parse the plain-text generating-data format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Format {
            line: 1,
            message: "empty generating-data file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let num = |k: usize| -> Result<u64> {
            fields
                .get(k)
                .and_then(|v| v.parse().ok())
                .ok_or(Error::Format {
                    line: hline,
                    message: format!("header field {k} missing or not an integer: {header:?}"),
                })
        };
        match fields.first().copied() {
            Some("lattice") if fields.len() == 3 => {
                let n = num(1)?;
                let s = num(2)? as usize;
                if n < 1 {
                    return Err(Error::Format {
                        line: hline,
                        message: "lattice needs n >= 1".into(),
                    });
                }
                let mut z = Vec::with_capacity(s);
                for _ in 0..s {
                    let (line, l) = lines.next().ok_or(Error::Format {
                        line: hline + z.len() + 1,
                        message: format!("expected {s} generating vector entries, found {}", z.len()),
                    })?;
                    let v: u64 = l.parse().map_err(|_| Error::Format {
                        line,
                        message: format!("not an integer: {l:?}"),
                    })?;
                    z.push(v);
                }
                if let Some((line, _)) = lines.next() {
                    return Err(Error::Format {
                        line,
                        message: "trailing content after generating vector".into(),
                    });
                }
                Ok(GeneratingData::Lattice { n, z })
            }
            Some("polylattice") if fields.len() == 4 => {
                let n = num(1)?;
                let s = num(2)? as usize;
                let alpha = num(3)? as usize;
                if !n.is_power_of_two() || n < 2 {
                    return Err(Error::Format {
                        line: hline,
                        message: format!("polynomial lattice size {n} is not a power of two"),
                    });
                }
                let m = n.trailing_zeros() as usize;
                if alpha == 0 || alpha * m > MAX_IPL_BITS {
                    return Err(Error::Format {
                        line: hline,
                        message: format!("unsupported interlacing factor {alpha} for m = {m}"),
                    });
                }
                let mut matrices = Vec::with_capacity(alpha * s);
                for j in 0..alpha * s {
                    let mut rows = Vec::with_capacity(m);
                    for r in 0..m {
                        let (line, l) = lines.next().ok_or(Error::Format {
                            line: hline + j * m + r + 1,
                            message: format!(
                                "expected {} matrix rows, file ends after {}",
                                alpha * s * m,
                                j * m + r
                            ),
                        })?;
                        if l.len() != m || !l.bytes().all(|b| b == b'0' || b == b'1') {
                            return Err(Error::Format {
                                line,
                                message: format!("expected a row of {m} binary digits, got {l:?}"),
                            });
                        }
                        let bits = l
                            .bytes()
                            .enumerate()
                            .fold(0u64, |acc, (c, b)| acc | (u64::from(b == b'1') << c));
                        rows.push(bits);
                    }
                    matrices.push(rows);
                }
                if let Some((line, _)) = lines.next() {
                    return Err(Error::Format {
                        line,
                        message: "trailing content after generating matrices".into(),
                    });
                }
                Ok(GeneratingData::PolyLattice {
                    m,
                    s,
                    alpha,
                    matrices,
                })
            }
            _ => Err(Error::Format {
                line: hline,
                message: format!("unknown header {header:?}"),
            }),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            GeneratingData::Lattice { n, z } => {
                let _ = writeln!(out, "lattice {n} {}", z.len());
                for v in z {
                    let _ = writeln!(out, "{v}");
                }
            }
            GeneratingData::PolyLattice {
                m,
                s,
                alpha,
                matrices,
            } => {
                let _ = writeln!(out, "polylattice {} {s} {alpha}", 1u64 << m);
                for rows in matrices {
                    for bits in rows {
                        for c in 0..*m {
                            out.push(if bits >> c & 1 == 1 { '1' } else { '0' });
                        }
                        out.push('\n');
                    }
                }
            }
        }
        out
    }
}

pub fn load_generating_data(path: &Path) -> Result<GeneratingData> {
    let text = std::fs::read_to_string(path)?;
    GeneratingData::parse(&text)
}

pub fn write_generating_data(path: &Path, data: &GeneratingData) -> Result<()> {
    std::fs::write(path, data.to_text())?;
    Ok(())
}

macro_rules! ipl_assets {
    ($($alpha:literal => [$($m:literal),*]),*) => {
        fn embedded_ipl_text(alpha: usize, m: usize) -> Option<&'static str> {
            match (alpha, m) {
                $($(($alpha, $m) => Some(include_str!(concat!(
                    "../data/ipl/ipl_a", $alpha, "_m", $m, ".txt"
                ))),)*)*
                _ => None,
            }
        }
    };
}

ipl_assets!(2 => [3, 4, 5, 6, 7, 8, 9, 10, 11, 12], 3 => [3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);

/// Embedded interlaced polynomial lattice with `2^m` points, truncated to the
/// first `s` dimensions. Available for `alpha` in {2, 3}, `m` in 3..=12 and
/// `s <= 100`.
pub fn embedded_ipl(alpha: usize, m: usize, s: usize) -> Result<GeneratingData> {
    let text = embedded_ipl_text(alpha, m).ok_or_else(|| {
        Error::Parameter(format!(
            "no embedded interlaced rule for alpha = {alpha}, n = 2^{m}; supply a generating-data file"
        ))
    })?;
    match GeneratingData::parse(text)? {
        GeneratingData::PolyLattice {
            m,
            s: full,
            alpha,
            mut matrices,
        } => {
            if s > full {
                return Err(Error::Parameter(format!(
                    "embedded interlaced rules cover s <= {full}, requested {s}"
                )));
            }
            matrices.truncate(alpha * s);
            Ok(GeneratingData::PolyLattice {
                m,
                s,
                alpha,
                matrices,
            })
        }
        GeneratingData::Lattice { .. } => unreachable!("embedded assets are polynomial lattices"),
    }
}

/// A point generator. Points are a pure function of `(rule, shift, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QmcRule {
    kind: RuleKind,
    n_points: u64,
    dimension: usize,
    data: Option<GeneratingData>,
    shift_seed: u64,
    shift_count: usize,
}

/// `n x s` points, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    n: usize,
    s: usize,
    values: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dimension(&self) -> usize {
        self.s
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.s..(i + 1) * self.s]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.s.max(1)).take(self.n)
    }
}

impl QmcRule {
    pub fn monte_carlo(n: u64, s: usize, seed: u64) -> Self {
        QmcRule {
            kind: RuleKind::MonteCarlo,
            n_points: n,
            dimension: s,
            data: None,
            shift_seed: seed,
            shift_count: 1,
        }
    }

    pub fn shifted_lattice(data: GeneratingData, seed: u64, shift_count: usize) -> Result<Self> {
        let GeneratingData::Lattice { n, z } = &data else {
            return Err(Error::Parameter("shifted lattice needs a generating vector".into()));
        };
        if shift_count == 0 {
            return Err(Error::Parameter("shift_count must be at least 1".into()));
        }
        if let Some(bad) = z.iter().find(|&&v| v >= *n) {
            return Err(Error::Format {
                line: 0,
                message: format!("generating vector entry {bad} not below n = {n}"),
            });
        }
        Ok(QmcRule {
            kind: RuleKind::ShiftedLattice,
            n_points: *n,
            dimension: z.len(),
            data: Some(data),
            shift_seed: seed,
            shift_count,
        })
    }

    /// Unshifted lattice, for tests and single-point rules.
    pub fn lattice(n: u64, z: Vec<u64>) -> Result<Self> {
        let mut rule = Self::shifted_lattice(GeneratingData::Lattice { n, z }, 0, 1)?;
        rule.shift_count = 0;
        Ok(rule)
    }

    pub fn interlaced(data: GeneratingData) -> Result<Self> {
        let GeneratingData::PolyLattice { m, s, alpha, matrices } = &data else {
            return Err(Error::Parameter("interlaced rule needs generating matrices".into()));
        };
        if matrices.len() != alpha * s || matrices.iter().any(|rows| rows.len() != *m) {
            return Err(Error::Format {
                line: 0,
                message: "generating matrices do not match the declared shape".into(),
            });
        }
        Ok(QmcRule {
            kind: RuleKind::InterlacedPolyLattice,
            n_points: 1 << m,
            dimension: *s,
            data: Some(data),
            shift_seed: 0,
            shift_count: 1,
        })
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn n_points(&self) -> u64 {
        self.n_points
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of independent randomisations (1 for deterministic rules).
    pub fn shift_count(&self) -> usize {
        self.shift_count.max(1)
    }

    pub fn generating_data(&self) -> Option<&GeneratingData> {
        self.data.as_ref()
    }

    /// Random shift for a lattice rule; zero for the unshifted lattice.
    pub fn shift(&self, shift_index: usize) -> Vec<f64> {
        if self.kind != RuleKind::ShiftedLattice || self.shift_count == 0 {
            return vec![0.0; self.dimension];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.shift_seed);
        rng.set_stream(shift_index as u64);
        (0..self.dimension).map(|_| rng.gen::<f64>()).collect()
    }

    /// Embedded sub-rule with the first `n` points of a lattice (`z mod n`)
    /// or Monte Carlo sequence. Interlaced rules are not nested and must be
    /// loaded per size.
    pub fn restrict(&self, n: u64) -> Result<QmcRule> {
        if n == self.n_points {
            return Ok(self.clone());
        }
        if n > self.n_points || n == 0 {
            return Err(Error::Parameter(format!(
                "rule holds {} points, {n} requested",
                self.n_points
            )));
        }
        match (&self.kind, &self.data) {
            (RuleKind::MonteCarlo, _) => Ok(QmcRule {
                n_points: n,
                ..self.clone()
            }),
            (RuleKind::ShiftedLattice, Some(GeneratingData::Lattice { n: big, z })) => {
                if big % n != 0 {
                    return Err(Error::Parameter(format!(
                        "lattice of {big} points has no embedded rule of {n} points"
                    )));
                }
                Ok(QmcRule {
                    n_points: n,
                    data: Some(GeneratingData::Lattice {
                        n,
                        z: z.iter().map(|v| v % n).collect(),
                    }),
                    ..self.clone()
                })
            }
            _ => Err(Error::Parameter(
                "interlaced polynomial lattice rules are not embedded; load a rule of the requested size"
                    .into(),
            )),
        }
    }

    /// Point `i` for the given shift, written into `out` (length `s`).
    pub fn point_into(&self, shift: &[f64], i: u64, out: &mut [f64]) {
        match (&self.kind, &self.data) {
            (RuleKind::MonteCarlo, _) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.shift_seed);
                rng.set_word_pos(2 * u128::from(i) * self.dimension as u128);
                for o in out.iter_mut() {
                    *o = rng.gen::<f64>();
                }
            }
            (RuleKind::ShiftedLattice, Some(GeneratingData::Lattice { n, z })) => {
                for ((o, &zj), &dj) in out.iter_mut().zip(z).zip(shift) {
                    let r = (u128::from(i) * u128::from(zj) % u128::from(*n)) as f64 / *n as f64;
                    let v = r + dj;
                    *o = if v >= 1.0 { v - 1.0 } else { v };
                }
            }
            (
                RuleKind::InterlacedPolyLattice,
                Some(GeneratingData::PolyLattice {
                    m, alpha, matrices, ..
                }),
            ) => {
                let scale = 0.5f64.powi((alpha * m) as i32);
                for (k, o) in out.iter_mut().enumerate() {
                    let mut bits = 0u64;
                    for r in 0..*m {
                        for l in 0..*alpha {
                            let digit = (matrices[k * alpha + l][r] & i).count_ones() as u64 & 1;
                            bits = bits << 1 | digit;
                        }
                    }
                    *o = bits as f64 * scale;
                }
            }
            _ => unreachable!("rule constructors guarantee matching data"),
        }
    }

    pub fn generate(&self, shift_index: usize) -> Result<PointSet> {
        if shift_index >= self.shift_count() {
            return Err(Error::Parameter(format!(
                "shift index {shift_index} out of range for {} shifts",
                self.shift_count()
            )));
        }
        let n = usize::try_from(self.n_points)
            .map_err(|_| Error::Resource(format!("{} points do not fit in memory", self.n_points)))?;
        let s = self.dimension;
        let shift = self.shift(shift_index);
        let mut values = vec![0.0; n * s];
        for (i, row) in values.chunks_mut(s.max(1)).enumerate().take(n) {
            self.point_into(&shift, i as u64, row);
        }
        Ok(PointSet { n, s, values })
    }
}

/// `y = 2t - 1` componentwise.
pub fn to_param(t: &[f64]) -> ParamVector {
    ParamVector::new(t.iter().map(|&v| 2.0 * v - 1.0).collect())
        .expect("points in [0,1) map into [-1,1)")
}

pub fn to_params(points: &PointSet) -> Vec<ParamVector> {
    points.iter().map(to_param).collect()
}

fn bernoulli2(x: f64) -> f64 {
    x * x - x + 1.0 / 6.0
}

fn cbc_candidates(n: u64) -> Vec<u64> {
    if n.is_power_of_two() {
        (1..n).step_by(2).collect()
    } else {
        (1..n).collect()
    }
}

fn check_cbc(n: u64, s: usize, weights: &[f64]) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("CBC needs n >= 2, got {n}")));
    }
    if s > MAX_CBC_DIMENSION {
        return Err(Error::Parameter(format!(
            "CBC dimension {s} exceeds {MAX_CBC_DIMENSION}"
        )));
    }
    if weights.len() < s || weights.iter().take(s).any(|&g| !(g > 0.0)) {
        return Err(Error::Parameter(format!("need {s} positive weights")));
    }
    Ok(())
}

/// Result of a component-by-component construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CbcResult {
    pub z: Vec<u64>,
    /// Squared shift-averaged worst-case error after each coordinate.
    pub errors: Vec<f64>,
}

/// Squared shift-averaged worst-case error of a lattice for product
/// weights in the unanchored Sobolev space.
pub fn lattice_error_squared(n: u64, z: &[u64], weights: &[f64]) -> f64 {
    let total: f64 = (0..n)
        .map(|k| {
            z.iter()
                .zip(weights)
                .map(|(&zj, &g)| 1.0 + g * bernoulli2((k * zj % n) as f64 / n as f64))
                .product::<f64>()
        })
        .sum();
    -1.0 + total / n as f64
}

/// Component-by-component lattice construction for `n` prime or a power of
/// two. Ties go to the smallest candidate.
pub fn cbc_lattice(n: u64, s: usize, weights: &[f64]) -> Result<CbcResult> {
    check_cbc(n, s, weights)?;
    let omega: Vec<f64> = (0..n).map(|r| bernoulli2(r as f64 / n as f64)).collect();
    let candidates = cbc_candidates(n);
    let mut prod = vec![1.0; n as usize];
    let mut z = Vec::with_capacity(s);
    let mut errors = Vec::with_capacity(s);
    for &g in &weights[..s] {
        let mut best = (f64::INFINITY, 0);
        for &c in &candidates {
            let mut sum = 0.0;
            let mut r = 0u64;
            for p in &prod {
                sum += p * (1.0 + g * omega[r as usize]);
                r = (r + c) % n;
            }
            let e2 = -1.0 + sum / n as f64;
            if e2 < best.0 {
                best = (e2, c);
            }
        }
        let c = best.1;
        let mut r = 0u64;
        for p in prod.iter_mut() {
            *p *= 1.0 + g * omega[r as usize];
            r = (r + c) % n;
        }
        z.push(c);
        errors.push(best.0);
    }
    Ok(CbcResult { z, errors })
}

/// Embedded lattice for `n = 2^m_min .. 2^m_max`: each coordinate minimises
/// the worst ratio, over the nested sizes, of the candidate's error to the
/// best error attainable at that size.
pub fn cbc_embedded_lattice(m_min: u32, m_max: u32, s: usize, weights: &[f64]) -> Result<CbcResult> {
    if m_min > m_max || m_max > 30 {
        return Err(Error::Parameter(format!("invalid embedded range 2^{m_min}..2^{m_max}")));
    }
    let n = 1u64 << m_max;
    check_cbc(n, s, weights)?;
    let levels = (m_max - m_min + 1) as usize;
    let omega: Vec<f64> = (0..n).map(|r| bernoulli2(r as f64 / n as f64)).collect();
    let candidates = cbc_candidates(n);
    let mut prod = vec![1.0; n as usize];
    let mut z = Vec::with_capacity(s);
    let mut errors = Vec::with_capacity(s);
    // level index of point k: the smallest size containing it
    let level_of: Vec<usize> = (0..n)
        .map(|k| {
            let tz = if k == 0 { m_max } else { k.trailing_zeros().min(m_max) };
            (m_max - tz).max(m_min) as usize - m_min as usize
        })
        .collect();
    let mut per_candidate = vec![vec![0.0; levels]; candidates.len()];
    for &g in &weights[..s] {
        for (ci, &c) in candidates.iter().enumerate() {
            let sums = &mut per_candidate[ci];
            sums.iter_mut().for_each(|v| *v = 0.0);
            let mut r = 0u64;
            for (k, p) in prod.iter().enumerate() {
                sums[level_of[k]] += p * (1.0 + g * omega[r as usize]);
                r = (r + c) & (n - 1);
            }
            let mut acc = 0.0;
            for (l, v) in sums.iter_mut().enumerate() {
                acc += *v;
                *v = -1.0 + acc / (1u64 << (m_min as usize + l)) as f64;
            }
        }
        let best_per_level: Vec<f64> = (0..levels)
            .map(|l| per_candidate.iter().map(|e| e[l]).fold(f64::INFINITY, f64::min))
            .collect();
        let mut best = (f64::INFINITY, 0usize);
        for (ci, e) in per_candidate.iter().enumerate() {
            let worst = e
                .iter()
                .zip(&best_per_level)
                .map(|(v, b)| v / b)
                .fold(0.0, f64::max);
            if worst < best.0 {
                best = (worst, ci);
            }
        }
        let c = candidates[best.1];
        let mut r = 0u64;
        for p in prod.iter_mut() {
            *p *= 1.0 + g * omega[r as usize];
            r = (r + c) & (n - 1);
        }
        z.push(c);
        errors.push(per_candidate[best.1][levels - 1]);
    }
    Ok(CbcResult { z, errors })
}

/// Default product weights `theta (1 + ceil(j/2)) ceil(j/2)^(-zeta)`.
pub fn default_weights(theta: f64, zeta: f64, s: usize) -> Vec<f64> {
    (1..=s)
        .map(|j| {
            let k = j.div_ceil(2) as f64;
            theta * (1.0 + k) * k.powf(-zeta)
        })
        .collect()
}

/// Draw a standard normal pair by Box-Muller from a counter-based stream.
pub(crate) fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    (r * c, r * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_lattice_points() {
        let rule = QmcRule::lattice(4, vec![1, 3]).unwrap();
        let pts = rule.generate(0).unwrap();
        let expect = [[0.0, 0.0], [0.25, 0.75], [0.5, 0.5], [0.75, 0.25]];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(pts.point(i), e);
        }
    }

    #[test]
    fn shift_is_frac_translation() {
        let plain = QmcRule::lattice(16, vec![1, 5]).unwrap();
        let p = plain.generate(0).unwrap();
        let mut out = [0.0; 2];
        for i in 0..16 {
            plain.point_into(&[0.5, 0.5], i, &mut out);
            for j in 0..2 {
                let expected = (p.point(i as usize)[j] + 0.5).fract();
                assert_eq!(out[j], expected);
            }
        }
    }

    #[test]
    fn parameter_map() {
        assert_eq!(to_param(&[0.5, 0.0]).as_slice(), &[0.0, -1.0]);
        let rule = QmcRule::lattice(8, vec![1, 3, 5]).unwrap();
        let pts = rule.generate(0).unwrap();
        for j in 0..3 {
            let mean: f64 = to_params(&pts).iter().map(|y| y.as_slice()[j]).sum::<f64>() / 8.0;
            // lattice coordinate mean is (n - 1) / (2n)
            assert_abs_diff_eq!(mean, 2.0 * 7.0 / 16.0 - 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn all_rules_stay_in_unit_cube_and_integrate_constants() {
        let weights = default_weights(0.25, 3.0, 6);
        let z = cbc_lattice(64, 6, &weights).unwrap().z;
        let rules = vec![
            QmcRule::monte_carlo(64, 6, 3),
            QmcRule::shifted_lattice(GeneratingData::Lattice { n: 64, z }, 9, 4).unwrap(),
            QmcRule::interlaced(embedded_ipl(2, 6, 6).unwrap()).unwrap(),
            QmcRule::interlaced(embedded_ipl(3, 6, 6).unwrap()).unwrap(),
        ];
        for rule in rules {
            for shift in 0..rule.shift_count() {
                let pts = rule.generate(shift).unwrap();
                assert!(pts.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
                let avg: f64 = pts.iter().map(|_| 1.0).sum::<f64>() / pts.len() as f64;
                assert_eq!(avg, 1.0);
            }
        }
    }

    #[test]
    fn cbc_first_coordinate_is_one() {
        assert_eq!(cbc_lattice(64, 1, &[0.5]).unwrap().z, vec![1]);
        assert_eq!(cbc_lattice(31, 1, &[0.5]).unwrap().z, vec![1]);
    }

    #[test]
    fn cbc_step_matches_exhaustive_search() {
        let weights: Vec<f64> = (1..=4).map(|j| (j as f64).powi(-2)).collect();
        let res = cbc_lattice(16, 4, &weights).unwrap();
        let best = (1..16)
            .step_by(2)
            .map(|c| lattice_error_squared(16, &[res.z[0], c], &weights[..2]))
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(res.errors[1], best, epsilon = 1e-14);
        assert_abs_diff_eq!(
            res.errors[3],
            lattice_error_squared(16, &res.z, &weights),
            epsilon = 1e-14
        );
    }

    #[test]
    fn embedded_lattice_restricts_bitwise() {
        let weights = default_weights(0.25, 3.0, 8);
        let res = cbc_embedded_lattice(2, 7, 8, &weights).unwrap();
        let big = QmcRule::shifted_lattice(GeneratingData::Lattice { n: 128, z: res.z }, 5, 2).unwrap();
        let small = big.restrict(16).unwrap();
        for shift in 0..2 {
            let pb = big.generate(shift).unwrap();
            let ps = small.generate(shift).unwrap();
            for i in 0..16 {
                assert_eq!(ps.point(i), pb.point(8 * i));
            }
        }
    }

    #[test]
    fn monte_carlo_is_counter_based() {
        let rule = QmcRule::monte_carlo(32, 5, 11);
        let pts = rule.generate(0).unwrap();
        let mut out = [0.0; 5];
        rule.point_into(&[], 17, &mut out);
        assert_eq!(pts.point(17), &out);
        assert_eq!(rule.restrict(8).unwrap().generate(0).unwrap().point(3), pts.point(3));
    }

    #[test]
    fn file_round_trip_and_errors() {
        let lat = GeneratingData::Lattice { n: 17, z: vec![1, 7] };
        assert_eq!(GeneratingData::parse(&lat.to_text()).unwrap(), lat);
        assert_eq!(
            GeneratingData::parse("lattice 8 2\n1\n3\n").unwrap().dimension(),
            2
        );
        match GeneratingData::parse("lattice 8 3\n1\n3\n") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(GeneratingData::parse("lattice 8 1\nx\n").is_err());
        assert!(GeneratingData::parse("spiral 8 1\n1\n").is_err());
        let ipl = embedded_ipl(2, 4, 3).unwrap();
        assert_eq!(GeneratingData::parse(&ipl.to_text()).unwrap(), ipl);
        let truncated: String = ipl.to_text().lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(GeneratingData::parse(&truncated), Err(Error::Format { .. })));
    }

    #[test]
    fn ipl_first_point_is_origin_and_points_are_distinct() {
        let rule = QmcRule::interlaced(embedded_ipl(2, 8, 4).unwrap()).unwrap();
        let pts = rule.generate(0).unwrap();
        assert!(pts.point(0).iter().all(|&v| v == 0.0));
        // each coordinate takes 256 distinct values (the leading digits of the
        // interlaced components form a net)
        for j in 0..4 {
            let mut v: Vec<u64> = pts.iter().map(|p| (p[j] * 2f64.powi(16)) as u64).collect();
            v.sort_unstable();
            v.dedup();
            assert_eq!(v.len(), 256);
        }
    }
}
