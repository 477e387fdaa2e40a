//! Seeded random matrices and states for property suites.

use faer::{c64, Mat};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator for case `case` of a suite seeded with `seed`; independent of
/// the order in which cases run.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

fn gaussian(rng: &mut impl Rng) -> c64 {
    c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Gaussian (Ginibre) matrix.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat<c64> {
    Mat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn random_unit_vector(rng: &mut impl Rng, d: usize) -> Vec<c64> {
    let v: Vec<c64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// `(G + G†)/2` for a Ginibre `G`.
pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> Mat<c64> {
    let g = ginibre(rng, d, d);
    Mat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

/// Haar-random unitary: `Q` of a Ginibre QR with the phases of `diag(R)`
/// divided out.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Mat<c64> {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<c64> = (0..d)
        .map(|k| {
            let z = r[(k, k)];
            if z.norm() == 0.0 {
                c64::ONE
            } else {
                z / z.norm()
            }
        })
        .collect();
    Mat::from_fn(d, d, |i, j| q[(i, j)] * phases[j])
}

pub fn random_permutation(rng: &mut impl Rng, d: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(rng);
    p
}
