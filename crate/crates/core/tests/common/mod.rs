#![allow(dead_code)]

use gplhr::{ordered_qz, GeneralizedEigenvalue, Pencil, SparseMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn crand(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Sparse random matrix with a dominant-free diagonal and `per_row` extra entries per row,
/// scaled so its spectrum sits roughly in the unit disk.
pub fn random_sparse(n: usize, per_row: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
    let scale = 1.0 / ((per_row + 1) as f64).sqrt();
    let mut trip = Vec::with_capacity(n * (per_row + 1));
    for i in 0..n {
        trip.push((i, i, crand(rng) * scale));
        for _ in 0..per_row {
            trip.push((i, rng.random_range(0..n), crand(rng) * scale));
        }
    }
    SparseMatrix::from_triplets(n, n, trip).unwrap()
}

/// A random pencil: standard when `standard`, otherwise `B = I + 0.3·E` with sparse `E`.
pub fn random_pencil(n: usize, standard: bool, seed: u64) -> Pencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_sparse(n, 8, &mut rng);
    if standard {
        return Pencil::standard(a).unwrap();
    }
    let e = random_sparse(n, 4, &mut rng);
    let b = SparseMatrix::identity(n).add_scaled(c(0.3), &e).unwrap();
    Pencil::new(a, Some(b)).unwrap()
}

pub fn random_shift(seed: u64) -> C64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
}

/// The `k` eigenvalues of the dense pencil closest to `sigma`.
pub fn oracle(p: &Pencil, sigma: C64, k: usize) -> Vec<C64> {
    let (a, b) = p.to_dense();
    ordered_qz(&a, &b, sigma).unwrap().eigenvalues().iter().take(k).map(|e| e.ratio()).collect()
}

/// Largest relative distance after greedily matching `got` to `want`.
pub fn multiset_error(got: &[C64], want: &[C64]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    let mut pool = want.to_vec();
    let mut worst = 0.0_f64;
    for g in got {
        let (i, e) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (g - w).norm() / w.norm().max(1e-300)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        pool.remove(i);
        worst = worst.max(e);
    }
    worst
}

pub fn ratios(ev: &[GeneralizedEigenvalue]) -> Vec<C64> {
    ev.iter().map(|e| e.ratio()).collect()
}

/// Writes to the stderr handle, bypassing test output capture.
pub fn note(msg: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{msg}");
}

pub fn line(name: &str, ok: bool, detail: &str) {
    note(&format!("{name}: {} ({detail})", if ok { "PASS" } else { "FAIL" }));
}
