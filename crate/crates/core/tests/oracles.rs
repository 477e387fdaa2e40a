//! Independent reference computations: Jordan-Wigner matrices on the full
//! Fock space, closed-form free-particle spectra and fixed values computed
//! outside this crate.

use faer::Mat;
use fock_skin::c64;
use fock_skin::fockspace::{binomial, enumerate_basis, FockBasis};
use fock_skin::models::{
    build_effective_hamiltonian, build_h0_and_lindblad, build_hatano_nelson_single, build_interacting_hn,
    build_similarity_transform, build_single_particle_similarity, number_operator, Boundary, ModelParams,
};
use fock_skin::spectral::{diagonalize, eigenvalues, Method};
use std::f64::consts::PI;

/// Annihilator of site `j` (1-based) on all `2^L` occupation states indexed
/// by `sum_k n_k 2^(k-1)`, with the string running over lower sites.
fn annihilator(l: usize, j: usize) -> Mat<c64> {
    let d = 1usize << l;
    let bit = 1usize << (j - 1);
    let mut m = Mat::<c64>::zeros(d, d);
    for s in 0..d {
        if s & bit != 0 {
            let sign = if (s & (bit - 1)).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            m[(s ^ bit, s)] = c64::new(sign, 0.0);
        }
    }
    m
}

fn dagger(m: &Mat<c64>) -> Mat<c64> {
    m.adjoint().to_owned()
}

fn scaled(m: &Mat<c64>, z: c64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * z)
}

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Rows and columns of `full` belonging to the states of `basis`.
fn restrict(full: &Mat<c64>, basis: &FockBasis) -> Mat<c64> {
    let idx: Vec<usize> = basis.states().iter().map(|s| (s.bits() >> 1) as usize).collect();
    Mat::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])])
}

fn max_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn full_chain(l: usize, alpha: f64, u: f64, bc: Boundary) -> Mat<c64> {
    let c: Vec<Mat<c64>> = (1..=l).map(|j| annihilator(l, j)).collect();
    let n: Vec<Mat<c64>> = c.iter().map(|cj| dagger(cj) * cj).collect();
    let d = 1usize << l;
    let mut h = Mat::<c64>::zeros(d, d);
    let mut bonds: Vec<(usize, usize)> = (0..l - 1).map(|j| (j, j + 1)).collect();
    if bc == Boundary::Periodic {
        bonds.push((l - 1, 0));
    }
    for (a, b) in bonds {
        h += scaled(&(dagger(&c[a]) * &c[b]), real(alpha.exp()));
        h += scaled(&(dagger(&c[b]) * &c[a]), real((-alpha).exp()));
        h += scaled(&(&n[a] * &n[b]), real(u));
    }
    h
}

#[test]
fn sector_hamiltonian_matches_jordan_wigner() {
    let l = 5;
    for bc in [Boundary::Open, Boundary::Periodic] {
        let full = full_chain(l, 0.3, -0.7, bc);
        for n in 0..=l {
            let basis = enumerate_basis(l, n).unwrap();
            let p = ModelParams::interacting(l, n, 0.3, -0.7, bc);
            let h = build_interacting_hn(&p, &basis).unwrap();
            let diff = max_diff(&h.mat, &restrict(&full, &basis));
            assert!(diff < 1e-14, "{bc} N={n}: {diff:e}");
        }
    }
}

#[test]
fn effective_hamiltonian_from_explicit_jumps() {
    let (l, alpha, u) = (4usize, 0.5f64, -1.0);
    let c: Vec<Mat<c64>> = (1..=l).map(|j| annihilator(l, j)).collect();
    let d = 1usize << l;
    let mut h0 = Mat::<c64>::zeros(d, d);
    for j in 0..l - 1 {
        h0 += scaled(
            &(dagger(&c[j]) * &c[j + 1] + dagger(&c[j + 1]) * &c[j]),
            real(alpha.cosh()),
        );
        h0 += scaled(&(dagger(&c[j]) * &c[j] * dagger(&c[j + 1]) * &c[j + 1]), real(u));
    }
    let amp = real((2.0 * alpha.sinh()).sqrt());
    let mut jumps: Vec<Mat<c64>> = (0..l - 1)
        .map(|j| scaled(&(&c[j] + scaled(&c[j + 1], c64::new(0.0, 1.0))), amp))
        .collect();
    jumps.push(scaled(&c[0], amp));
    jumps.push(scaled(&c[l - 1], amp));
    let mut heff = h0;
    for lj in &jumps {
        heff -= scaled(&(dagger(lj) * lj), c64::new(0.0, 0.5));
    }
    for n in 0..=l {
        let basis = enumerate_basis(l, n).unwrap();
        let p = ModelParams::interacting(l, n, alpha, u, Boundary::Open);
        let (h0s, decay) = build_h0_and_lindblad(&p, &basis).unwrap();
        let built = build_effective_hamiltonian(&h0s, &decay).unwrap();
        let oracle = restrict(&heff, &basis);
        assert!(max_diff(&built.mat, &oracle) < 1e-13, "N={n}");

        let h = build_interacting_hn(&p, &basis).unwrap();
        let num = number_operator(&basis);
        let shifted = Mat::from_fn(basis.dim(), basis.dim(), |i, j| {
            h.mat[(i, j)] - c64::new(0.0, 2.0 * alpha.sinh()) * num.mat[(i, j)]
        });
        assert!(max_diff(&shifted, &oracle) < 1e-13, "N={n}");
    }
}

fn sorted_re(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn free_fermion_many_body_spectrum() {
    let (l, n) = (8usize, 4usize);
    let modes: Vec<f64> = (1..=l).map(|k| 2.0 * (k as f64 * PI / (l + 1) as f64).cos()).collect();
    let mut sums = Vec::new();
    for mask in 0u32..(1 << l) {
        if mask.count_ones() as usize == n {
            sums.push((0..l).filter(|k| mask >> k & 1 == 1).map(|k| modes[k]).sum::<f64>());
        }
    }
    let want = sorted_re(sums);
    assert_eq!(want.len(), binomial(l, n).unwrap());

    let p = ModelParams::interacting(l, n, 0.7, 0.0, Boundary::Open);
    let basis = enumerate_basis(l, n).unwrap();
    let h = build_interacting_hn(&p, &basis).unwrap();
    let r = build_similarity_transform(&p, &basis).unwrap();
    let got = eigenvalues(&h, Method::Gauge(&r)).unwrap();
    assert!(got.iter().all(|e| e.im == 0.0));
    let got = sorted_re(got.iter().map(|e| e.re).collect());
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn single_particle_open_spectrum_is_closed_form() {
    let (t, g) = (1.0f64, 0.2f64);
    for l in [20usize, 100, 150] {
        let p = ModelParams::single_particle(l, t, g, Boundary::Open);
        let h = build_hatano_nelson_single(&p).unwrap();
        let r = build_single_particle_similarity(&p).unwrap();
        let got = sorted_re(
            eigenvalues(&h, Method::Gauge(&r))
                .unwrap()
                .iter()
                .map(|e| e.re)
                .collect(),
        );
        let want = sorted_re(
            (1..=l)
                .map(|k| 2.0 * (t * t - g * g).sqrt() * (k as f64 * PI / (l + 1) as f64).cos())
                .collect(),
        );
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "L={l}: {a} vs {b}");
        }
    }
}

#[test]
fn single_particle_periodic_spectrum_is_closed_form() {
    let (l, t, g) = (9usize, 1.0f64, 0.2f64);
    let p = ModelParams::single_particle(l, t, g, Boundary::Periodic);
    let h = build_hatano_nelson_single(&p).unwrap();
    let mut got = eigenvalues(&h, Method::Direct).unwrap();
    for m in 0..l {
        let z = c64::from_polar(1.0, 2.0 * PI * m as f64 / l as f64);
        let e = z * (t + g) + z.conj() * (t - g);
        let (k, d) = got
            .iter()
            .enumerate()
            .map(|(k, x)| (k, (x - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(d < 1e-12, "momentum {m}: off by {d:e}");
        got.swap_remove(k);
    }
}

#[test]
fn two_site_open_chain() {
    let p = ModelParams::interacting(2, 1, 0.5, -1.0, Boundary::Open);
    let basis = enumerate_basis(2, 1).unwrap();
    let h = build_interacting_hn(&p, &basis).unwrap();
    let r = build_similarity_transform(&p, &basis).unwrap();
    let e = eigenvalues(&h, Method::Gauge(&r)).unwrap();
    assert!((e[0] - c64::new(-1.0, 0.0)).norm() < 1e-15);
    assert!((e[1] - c64::new(1.0, 0.0)).norm() < 1e-15);
}

/// Reference value from an independent dense computation (numpy) with
/// orthonormal bases inside degenerate eigenspaces.
#[test]
fn four_site_condition_number() {
    let p = ModelParams::interacting(4, 2, 0.5, -1.0, Boundary::Open);
    let basis = enumerate_basis(4, 2).unwrap();
    let h = build_interacting_hn(&p, &basis).unwrap();
    let r = build_similarity_transform(&p, &basis).unwrap();
    let gauge = diagonalize(&h, Method::Gauge(&r)).unwrap().condition_number();
    let direct = diagonalize(&h, Method::Direct).unwrap().condition_number();
    assert!((gauge - 7.771538669940).abs() < 1e-9, "{gauge}");
    assert!((direct - 7.771538669940).abs() < 1e-8, "{direct}");
}

#[test]
fn hermitian_chain_is_perfectly_conditioned() {
    let p = ModelParams::interacting(8, 4, 0.0, -1.0, Boundary::Open);
    let basis = enumerate_basis(8, 4).unwrap();
    let h = build_interacting_hn(&p, &basis).unwrap();
    let kappa = diagonalize(&h, Method::Direct).unwrap().condition_number();
    assert!((kappa - 1.0).abs() < 1e-12, "{kappa}");
}
