//! Offline construction of the embedded interlaced polynomial lattice rules.
//!
//! For every interlacing factor `alpha` in {2, 3} and `m` in 3..=12 this
//! builds a polynomial lattice with `2^m` points in dimension `alpha * s`
//! (`s = 100`) component by component and writes its generating matrices to
//! `data/ipl/ipl_a{alpha}_m{m}.txt`.
//!
//! The criterion is the shift-free Walsh figure of merit with product
//! weights `gamma_j = j^-3` per output dimension: each output dimension
//! contributes `1 + gamma_j (prod_l (1 + psi(x_{j,l})) - 1)` over its `alpha`
//! interlaced components, with `psi` the base-2 Walsh kernel of order
//! `alpha`. Components are chosen in order, ties broken by the smallest
//! generating polynomial.
//!
//! Usage: `cargo run --release --example ipl_generator -- <output dir>`

use std::path::PathBuf;

use lsuq_core::qmc::{write_generating_data, GeneratingData};

const DIMENSION: usize = 100;

/// Primitive modulus of degree `m` for m = 3..=12, bit `k` is the
/// coefficient of `x^k`.
const MODULI: [(usize, u64); 10] = [
    (3, 0xB),
    (4, 0x13),
    (5, 0x25),
    (6, 0x43),
    (7, 0x83),
    (8, 0x11D),
    (9, 0x211),
    (10, 0x409),
    (11, 0x805),
    (12, 0x1053),
];

fn degree(p: u64) -> u32 {
    63 - p.leading_zeros()
}

fn poly_mod(mut a: u64, b: u64) -> u64 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

fn irreducible(p: u64) -> bool {
    let d = degree(p);
    (2u64..1 << (d / 2 + 1)).all(|q| degree(q) > d / 2 || poly_mod(p, q) != 0)
}

/// Laurent coefficients `u_1, ..., u_len` of `q / p`.
fn laurent(q: u64, p: u64, m: usize, len: usize) -> Vec<u8> {
    let mut r = q;
    (0..len)
        .map(|_| {
            r <<= 1;
            if r >> m & 1 == 1 {
                r ^= p;
                1
            } else {
                0
            }
        })
        .collect()
}

/// Matrix rows `C[r]` with bit `c` set when `u_{r+c+1} = 1`, and the columns
/// encoded as `m`-digit integers with digit `r` at bit `m - 1 - r`.
fn matrix(q: u64, p: u64, m: usize) -> (Vec<u64>, Vec<u64>) {
    let u = laurent(q, p, m, 2 * m);
    let rows = (0..m)
        .map(|r| (0..m).fold(0u64, |acc, c| acc | (u64::from(u[r + c]) << c)))
        .collect();
    let cols = (0..m)
        .map(|c| (0..m).fold(0u64, |acc, r| acc | (u64::from(u[r + c]) << (m - 1 - r))))
        .collect();
    (rows, cols)
}

/// Walsh kernel of order `lambda` at a point whose `m`-digit expansion is
/// `x`, indexed by the position `t` of the first nonzero digit (0 for x = 0).
fn kernel_table(lambda: f64, m: usize) -> Vec<f64> {
    let rho = 2f64.powf(1.0 - lambda);
    let base = 2f64.powf(-lambda);
    let mut table = vec![base / (1.0 - rho)];
    for t in 1..=m as i32 {
        let v = base * (1.0 - rho.powi(t - 1)) / (1.0 - rho)
            - 2f64.powi(t - 1) * 2f64.powf(-lambda * t as f64);
        table.push(v);
    }
    table
}

fn points(cols: &[u64], n: usize) -> Vec<u64> {
    let mut x = vec![0u64; n];
    for i in 1..n {
        let low = i.trailing_zeros() as usize;
        x[i] = x[i & (i - 1)] ^ cols[low];
    }
    x
}

fn construct(alpha: usize, m: usize, p: u64) -> GeneratingData {
    let n = 1usize << m;
    // product weights j^-3 for output dimension j
    let gamma: Vec<f64> = (1..=DIMENSION).map(|j| (j as f64).powi(-3)).collect();
    let psi = kernel_table(alpha as f64, m);
    let first_digit = |x: u64| -> usize {
        if x == 0 {
            0
        } else {
            m - (63 - x.leading_zeros() as usize)
        }
    };
    let mut done = vec![1.0f64; n];
    let mut block = vec![1.0f64; n];
    let mut matrices = Vec::with_capacity(alpha * DIMENSION);
    for (k, &g) in gamma.iter().enumerate() {
        block.iter_mut().for_each(|v| *v = 1.0);
        for _ in 0..alpha {
            let mut best = (f64::INFINITY, 0u64);
            for q in 1..n as u64 {
                let (_, cols) = matrix(q, p, m);
                let x = points(&cols, n);
                let e: f64 = x
                    .iter()
                    .zip(&done)
                    .zip(&block)
                    .map(|((&xi, d), b)| d * (1.0 + g * (b * (1.0 + psi[first_digit(xi)]) - 1.0)))
                    .sum();
                if e < best.0 {
                    best = (e, q);
                }
            }
            let (rows, cols) = matrix(best.1, p, m);
            for (b, xi) in block.iter_mut().zip(points(&cols, n)) {
                *b *= 1.0 + psi[first_digit(xi)];
            }
            matrices.push(rows);
        }
        for (d, b) in done.iter_mut().zip(&block) {
            *d *= 1.0 + g * (b - 1.0);
        }
        if k % 20 == 19 {
            eprintln!("  alpha {alpha} m {m}: {} dimensions", k + 1);
        }
    }
    GeneratingData::PolyLattice {
        m,
        s: DIMENSION,
        alpha,
        matrices,
    }
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/data/ipl"));
    std::fs::create_dir_all(&out).expect("create output directory");
    for (m, p) in MODULI {
        assert_eq!(degree(p) as usize, m);
        assert!(irreducible(p), "modulus {p:#x} is reducible");
        for alpha in [2, 3] {
            let data = construct(alpha, m, p);
            let path = out.join(format!("ipl_a{alpha}_m{m}.txt"));
            write_generating_data(&path, &data).expect("write generating data");
            eprintln!("wrote {}", path.display());
        }
    }
}
