//! Dense eigendecomposition, condition numbers and propagator norms.
//!
//! Eigenvector columns are always normalized to unit 2-norm, which fixes
//! the scale of the condition number `kappa(V) = sigma_max / sigma_min`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef, Side};

use crate::error::{domain, Error, Result};
use crate::models::{diagonal_entries, Operator};

/// `sigma_min(V) < DEFECT_RATIO * eps * sigma_max(V)` marks a direct
/// eigendecomposition as defective.
pub const DEFECT_RATIO: f64 = 1e3;

/// Eigenvalues closer than this (relative to `max |E|`) span one eigenspace.
pub const DEGENERACY_REL_TOL: f64 = 1e-10;

/// Relative size of the anti-Hermitian remainder accepted by the gauge path.
pub const GAUGE_HERMITIAN_TOL: f64 = 1e-12;

/// How to diagonalize.
#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    /// Complex Schur based decomposition of the matrix as given (Hermitian
    /// inputs are routed to the self-adjoint solver).
    Direct,
    /// Diagonalize `R^-1 H R`, which must equal a Hermitian matrix plus a
    /// multiple of the identity, then map eigenvectors back with `R`.
    Gauge(&'a Operator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Direct,
    Gauge,
}

/// Right eigenpairs of a diagonalizable matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending by real part, then imaginary part.
    pub eigenvalues: Vec<c64>,
    /// Unit-norm right eigenvectors as columns.
    pub v: Mat<c64>,
    pub v_inv: Mat<c64>,
    /// `max_m ||H v_m - E_m v_m||_2`.
    pub residual: f64,
    /// `max |(V V^-1 - I)_ij|`, recorded as a diagnostic only.
    pub inverse_defect: f64,
    pub method: MethodKind,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `m` of `V`.
    pub fn vector(&self, m: usize) -> Vec<c64> {
        self.v.col(m).iter().copied().collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.im.abs()).fold(0.0, f64::max)
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(self.v.as_ref())
    }
}

fn sort_key_order(values: &[c64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    idx
}

fn is_exactly_hermitian(m: MatRef<'_, c64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..=j).all(|i| m[(i, j)] == m[(j, i)].conj()))
}

fn max_residual(h: MatRef<'_, c64>, v: MatRef<'_, c64>, e: &[c64]) -> f64 {
    let hv = h * v;
    (0..v.ncols())
        .map(|m| {
            let mut s = 0.0;
            for i in 0..v.nrows() {
                s += (hv[(i, m)] - e[m] * v[(i, m)]).norm_sqr();
            }
            s.sqrt()
        })
        .fold(0.0, f64::max)
}

fn inverse_defect(v: MatRef<'_, c64>, v_inv: MatRef<'_, c64>) -> f64 {
    let p = v * v_inv;
    let mut worst: f64 = 0.0;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            let target = if i == j { c64::ONE } else { c64::ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// Ranges `[start, end)` of consecutive (sorted) eigenvalues that agree
/// within `DEGENERACY_REL_TOL * max |E|`.
pub fn degenerate_blocks(eigenvalues: &[c64]) -> Vec<(usize, usize)> {
    let scale = eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let tol = DEGENERACY_REL_TOL * scale.max(f64::MIN_POSITIVE);
    let mut blocks = Vec::new();
    let mut start = 0;
    for k in 1..=eigenvalues.len() {
        if k == eigenvalues.len() || (eigenvalues[k] - eigenvalues[start]).norm() > tol {
            blocks.push((start, k));
            start = k;
        }
    }
    blocks
}

/// Replaces the columns of every degenerate eigenspace by an orthonormal
/// basis of their span (thin QR) and updates the inverse to match. The
/// singular values of `V`, hence `kappa(V)`, then no longer depend on which
/// basis of each eigenspace the solver happened to return.
fn orthonormalize_eigenspaces(eigenvalues: &[c64], v: &mut Mat<c64>, v_inv: &mut Mat<c64>) {
    for (start, end) in degenerate_blocks(eigenvalues) {
        let k = end - start;
        if k < 2 {
            continue;
        }
        let qr = v.as_ref().subcols(start, k).qr();
        let q = qr.compute_thin_Q();
        let rq = qr.thin_R().to_owned();
        v.as_mut().subcols_mut(start, k).copy_from(&q);
        let rows = &rq * v_inv.as_ref().subrows(start, k);
        v_inv.as_mut().subrows_mut(start, k).copy_from(&rows);
    }
}

fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Eigendecomposition with unit-norm eigenvectors.
pub fn diagonalize(h: &Operator, method: Method<'_>) -> Result<EigenSystem> {
    match method {
        Method::Direct => diagonalize_direct(h),
        Method::Gauge(r) => diagonalize_gauge(h, r),
    }
}

fn diagonalize_direct(h: &Operator) -> Result<EigenSystem> {
    let d = h.dim();
    let a = h.mat.as_ref();
    if is_exactly_hermitian(a) {
        let (vals, u) = hermitian_eigen(a)?;
        let eigenvalues: Vec<c64> = vals.iter().map(|&x| c64::new(x, 0.0)).collect();
        let v_inv = u.adjoint().to_owned();
        let residual = max_residual(a, u.as_ref(), &eigenvalues);
        let inverse_defect = inverse_defect(u.as_ref(), v_inv.as_ref());
        return Ok(EigenSystem {
            eigenvalues,
            v: u,
            v_inv,
            residual,
            inverse_defect,
            method: MethodKind::Direct,
        });
    }
    let evd = h.mat.eigen().map_err(|e| Error::Backend(format!("{e:?}")))?;
    let raw: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    let order = sort_key_order(&raw);
    let u = evd.U();
    let mut v = Mat::<c64>::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        let n = u.col(src).norm_l2();
        for i in 0..d {
            v[(i, k)] = u[(i, src)] / n;
        }
    }
    let eigenvalues: Vec<c64> = order.iter().map(|&k| raw[k]).collect();
    let sv = v.singular_values().map_err(|e| Error::Backend(format!("{e:?}")))?;
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if !(smin >= DEFECT_RATIO * f64::EPSILON * smax) {
        return Err(Error::Defective {
            ratio: smin / smax,
            residual: max_residual(a, v.as_ref(), &eigenvalues),
        });
    }
    let mut v_inv = v.partial_piv_lu().inverse();
    orthonormalize_eigenspaces(&eigenvalues, &mut v, &mut v_inv);
    let residual = max_residual(a, v.as_ref(), &eigenvalues);
    let inverse_defect = inverse_defect(v.as_ref(), v_inv.as_ref());
    Ok(EigenSystem {
        eigenvalues,
        v,
        v_inv,
        residual,
        inverse_defect,
        method: MethodKind::Direct,
    })
}

/// Splits `m` into `A + i sigma I` with `A` Hermitian, or fails.
fn hermitian_plus_shift(m: MatRef<'_, c64>) -> Result<(Mat<c64>, f64)> {
    let d = m.nrows();
    let sigma = (0..d).map(|k| m[(k, k)].im).sum::<f64>() / d as f64;
    let mut shifted = m.to_owned();
    for k in 0..d {
        shifted[(k, k)] -= c64::new(0.0, sigma);
    }
    let herm = Mat::<c64>::from_fn(d, d, |i, j| (shifted[(i, j)] + shifted[(j, i)].conj()) * 0.5);
    let scale = m.norm_l2().max(f64::MIN_POSITIVE);
    let rest = (&shifted - &herm).norm_l2();
    if rest > GAUGE_HERMITIAN_TOL * scale {
        return domain(format!(
            "R^-1 H R is not Hermitian up to a scalar shift (relative remainder {:e})",
            rest / scale
        ));
    }
    Ok((herm, sigma))
}

fn diagonalize_gauge(h: &Operator, r: &Operator) -> Result<EigenSystem> {
    if h.basis != r.basis || h.dim() != r.dim() {
        return domain("operator and transform live on different bases");
    }
    let d = h.dim();
    let rd = diagonal_entries(r)?;
    let m = Mat::<c64>::from_fn(d, d, |i, j| h.mat[(i, j)] * rd[j] / rd[i]);
    let (herm, sigma) = hermitian_plus_shift(m.as_ref())?;
    let (vals, phi) = hermitian_eigen(herm.as_ref())?;
    let eigenvalues: Vec<c64> = vals.iter().map(|&x| c64::new(x, sigma)).collect();
    let mut v = Mat::<c64>::zeros(d, d);
    let mut norms = vec![0.0; d];
    for k in 0..d {
        let mut s = 0.0;
        for i in 0..d {
            let z = rd[i] * phi[(i, k)];
            v[(i, k)] = z;
            s += z.norm_sqr();
        }
        let n = s.sqrt();
        norms[k] = n;
        for i in 0..d {
            v[(i, k)] /= n;
        }
    }
    // V = R Phi diag(1/n)  =>  V^-1 = diag(n) Phi^dag R^-1
    let mut v_inv = Mat::<c64>::from_fn(d, d, |k, i| phi[(i, k)].conj() * norms[k] / rd[i]);
    orthonormalize_eigenspaces(&eigenvalues, &mut v, &mut v_inv);
    let residual = max_residual(h.mat.as_ref(), v.as_ref(), &eigenvalues);
    let inverse_defect = inverse_defect(v.as_ref(), v_inv.as_ref());
    Ok(EigenSystem {
        eigenvalues,
        v,
        v_inv,
        residual,
        inverse_defect,
        method: MethodKind::Gauge,
    })
}

/// Eigenvalues only, sorted like [`EigenSystem::eigenvalues`].
pub fn eigenvalues(h: &Operator, method: Method<'_>) -> Result<Vec<c64>> {
    match method {
        Method::Direct => {
            let a = h.mat.as_ref();
            let mut vals = if is_exactly_hermitian(a) {
                a.self_adjoint_eigenvalues(Side::Lower)
                    .map_err(|e| Error::Backend(format!("{e:?}")))?
                    .into_iter()
                    .map(|x| c64::new(x, 0.0))
                    .collect()
            } else {
                h.mat.eigenvalues().map_err(|e| Error::Backend(format!("{e:?}")))?
            };
            let order = sort_key_order(&vals);
            vals = order.iter().map(|&k| vals[k]).collect();
            Ok(vals)
        }
        Method::Gauge(r) => {
            if h.basis != r.basis || h.dim() != r.dim() {
                return domain("operator and transform live on different bases");
            }
            let d = h.dim();
            let rd = diagonal_entries(r)?;
            let m = Mat::<c64>::from_fn(d, d, |i, j| h.mat[(i, j)] * rd[j] / rd[i]);
            let (herm, sigma) = hermitian_plus_shift(m.as_ref())?;
            Ok(herm
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Backend(format!("{e:?}")))?
                .into_iter()
                .map(|x| c64::new(x, sigma))
                .collect())
        }
    }
}

/// `sigma_max / sigma_min` of a square matrix, `+inf` when singular.
pub fn condition_number(v: MatRef<'_, c64>) -> f64 {
    assert_eq!(v.nrows(), v.ncols(), "condition_number expects a square matrix");
    ratio_of_extreme_singular_values(v)
}

/// `sigma_max / sigma_min` over the `k` singular values of a `D x k` matrix.
pub fn submatrix_condition_number(v: MatRef<'_, c64>) -> Result<f64> {
    if v.ncols() > v.nrows() {
        return domain(format!("expected D x k with k <= D, got {}x{}", v.nrows(), v.ncols()));
    }
    Ok(ratio_of_extreme_singular_values(v))
}

/// The columns `cols` of `v`, in that order.
pub fn select_columns(v: MatRef<'_, c64>, cols: &[usize]) -> Mat<c64> {
    Mat::<c64>::from_fn(v.nrows(), cols.len(), |i, k| v[(i, cols[k])])
}

fn ratio_of_extreme_singular_values(v: MatRef<'_, c64>) -> f64 {
    if v.ncols() == 0 || v.nrows() == 0 {
        return 1.0;
    }
    let sv = match v.singular_values() {
        Ok(sv) => sv,
        Err(_) => return f64::NAN,
    };
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Largest singular value.
pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().map(|s| s[0]).unwrap_or(f64::NAN)
}

/// `max |lambda|` over the eigenvalues.
pub fn spectral_radius(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return domain("spectral radius needs a square matrix");
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let vals: Vec<f64> = if is_exactly_hermitian(m) {
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Backend(format!("{e:?}")))?
    } else {
        m.eigenvalues()
            .map_err(|e| Error::Backend(format!("{e:?}")))?
            .into_iter()
            .map(|z| z.norm())
            .collect()
    };
    Ok(vals.into_iter().map(f64::abs).fold(0.0, f64::max))
}

/// `V diag(exp(-i E t) e^{-gamma t}) V^-1` with `gamma = max Im E`, so the
/// entries stay bounded for any `t >= 0`.
fn scaled_propagator(eig: &EigenSystem, t: f64, gamma: f64) -> Mat<c64> {
    let d = eig.dim();
    let phases: Vec<c64> = eig
        .eigenvalues
        .iter()
        .map(|&e| {
            let z = c64::new(0.0, -t) * e;
            c64::from_polar((z.re - gamma * t).exp(), z.im)
        })
        .collect();
    let vd = Mat::<c64>::from_fn(d, d, |i, k| eig.v[(i, k)] * phases[k]);
    vd * &eig.v_inv
}

/// `ln ||exp(-i H t)||_2` from a cached eigensystem of `H`.
pub fn log_propagator_norm(eig: &EigenSystem, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be non-negative, got {t}"));
    }
    let gamma = eig.max_imag();
    let p = scaled_propagator(eig, t, gamma);
    Ok(gamma * t + spectral_norm(p.as_ref()).ln())
}

/// `||exp(-i H t)||_2`.
pub fn propagator_norm(eig: &EigenSystem, t: f64) -> Result<f64> {
    Ok(log_propagator_norm(eig, t)?.exp())
}

/// `exp(-i H t) psi` for every `t`, via the eigenbasis.
pub fn evolve_state(eig: &EigenSystem, psi: &[c64], t: f64) -> Vec<c64> {
    let d = eig.dim();
    let coeff: Vec<c64> = (0..d)
        .map(|k| (0..d).map(|i| eig.v_inv[(k, i)] * psi[i]).sum())
        .collect();
    let phased: Vec<c64> = coeff
        .iter()
        .zip(&eig.eigenvalues)
        .map(|(&c, &e)| c * (c64::new(0.0, -t) * e).exp())
        .collect();
    (0..d)
        .map(|i| (0..d).map(|k| eig.v[(i, k)] * phased[k]).sum())
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::models::{BasisTag, Operator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn op(m: Mat<c64>) -> Operator {
        let n = m.nrows();
        Operator::new(m, BasisTag::Sites { sites: n }, "test").unwrap()
    }

    pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<c64> {
        Mat::<c64>::from_fn(r, c, |_, _| {
            c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Scaling-and-squaring Taylor exponential, independent of any
    /// eigendecomposition.
    pub(crate) fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
        let n = a.nrows();
        let norm = a.norm_l2();
        let mut s = 0;
        while norm / 2f64.powi(s) > 0.25 {
            s += 1;
        }
        let scaled = Mat::<c64>::from_fn(n, n, |i, j| a[(i, j)] / 2f64.powi(s));
        let mut result = Mat::<c64>::identity(n, n);
        let mut term = Mat::<c64>::identity(n, n);
        for k in 1..=24 {
            term = &term * &scaled;
            term = Mat::<c64>::from_fn(n, n, |i, j| term[(i, j)] / k as f64);
            result += &term;
        }
        for _ in 0..s {
            result = &result * &result;
        }
        result
    }

    #[test]
    fn two_by_two_hatano_nelson() {
        let a: f64 = 0.8;
        let m = Mat::<c64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c64::new(a.exp(), 0.0),
            (1, 0) => c64::new((-a).exp(), 0.0),
            _ => c64::ZERO,
        });
        let eig = diagonalize(&op(m), Method::Direct).unwrap();
        assert!((eig.eigenvalues[0] - c64::new(-1.0, 0.0)).norm() < 1e-13);
        assert!((eig.eigenvalues[1] - c64::new(1.0, 0.0)).norm() < 1e-13);
        // eigenvectors proportional to (e^{a/2}, +-e^{-a/2})
        for (k, s) in [(0usize, -1.0), (1, 1.0)] {
            let v = eig.vector(k);
            let ratio = v[1] / v[0];
            assert!((ratio - c64::new(s * (-a).exp(), 0.0)).norm() < 1e-12);
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_input_gives_unitary_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 12, 12);
        let h = &x + x.adjoint();
        let eig = diagonalize(&op(h), Method::Direct).unwrap();
        assert!(eig.eigenvalues.iter().all(|e| e.im == 0.0));
        let g = eig.v.adjoint() * &eig.v;
        assert!((&g - Mat::<c64>::identity(12, 12)).norm_max() < 1e-10);
        assert!((eig.condition_number() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_eigenspaces_are_orthonormal() {
        use crate::fockspace::enumerate_basis;
        use crate::models::{build_interacting_hn, build_similarity_transform, Boundary, ModelParams};
        let p = ModelParams::interacting(8, 4, 0.5, -1.0, Boundary::Open);
        let b = enumerate_basis(8, 4).unwrap();
        let h = build_interacting_hn(&p, &b).unwrap();
        let r = build_similarity_transform(&p, &b).unwrap();
        let gauge = diagonalize(&h, Method::Gauge(&r)).unwrap();
        let direct = diagonalize(&h, Method::Direct).unwrap();
        let blocks = degenerate_blocks(&gauge.eigenvalues);
        assert!(blocks.len() < 70, "this chain has degenerate levels");
        for eig in [&gauge, &direct] {
            for &(s, e) in &blocks {
                let blk = eig.v.as_ref().subcols(s, e - s);
                let g = blk.adjoint() * blk;
                for j in 0..e - s {
                    for i in 0..e - s {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((g[(i, j)] - c64::new(want, 0.0)).norm() < 1e-12);
                    }
                }
            }
            assert!(eig.residual < 1e-10 * spectral_norm(h.mat.as_ref()));
            assert!(eig.inverse_defect < 1e-8);
        }
        let (kg, kd) = (gauge.condition_number(), direct.condition_number());
        assert!((kg - kd).abs() < 1e-9 * kg, "{kg} vs {kd}");
    }

    #[test]
    fn nilpotent_is_defective() {
        let m = Mat::<c64>::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { c64::ONE } else { c64::ZERO });
        match diagonalize(&op(m), Method::Direct) {
            Err(Error::Defective { .. }) => {}
            other => panic!("expected defective error, got {other:?}"),
        }
    }

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(Mat::<c64>::identity(4, 4).as_ref()), 1.0);
        let d = Mat::<c64>::from_fn(2, 2, |i, j| {
            if i == j {
                c64::new(2.0 - i as f64, 0.0)
            } else {
                c64::ZERO
            }
        });
        assert!((condition_number(d.as_ref()) - 2.0).abs() < 1e-15);
        let z = Mat::<c64>::zeros(3, 3);
        assert_eq!(condition_number(z.as_ref()), f64::INFINITY);
        // unitary from a QR factorization
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_matrix(&mut rng, 6, 6).qr().compute_Q();
        assert!((condition_number(q.as_ref()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_invariant_under_phase_and_column_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_matrix(&mut rng, 7, 7);
        let k = condition_number(v.as_ref());
        let phase = c64::from_polar(1.0, 1.234);
        let vp = Mat::<c64>::from_fn(7, 7, |i, j| v[(i, (j + 3) % 7)] * phase);
        assert!((condition_number(vp.as_ref()) - k).abs() < 1e-10 * k);
    }

    #[test]
    fn submatrix_examples() {
        let e = Mat::<c64>::identity(5, 5);
        assert!((submatrix_condition_number(select_columns(e.as_ref(), &[2]).as_ref()).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (submatrix_condition_number(select_columns(e.as_ref(), &[0, 4]).as_ref()).unwrap() - 1.0).abs() < 1e-15
        );
        assert!(submatrix_condition_number(Mat::<c64>::zeros(2, 3).as_ref()).is_err());
    }

    #[test]
    fn deleting_columns_never_raises_kappa() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_matrix(&mut rng, 5, 5);
            let mut cols: Vec<usize> = (0..5).collect();
            for _ in 0..2 {
                let k = rng.random_range(0..cols.len());
                cols.remove(k);
            }
            let sub = select_columns(v.as_ref(), &cols);
            let ks = submatrix_condition_number(sub.as_ref()).unwrap();
            assert!(ks <= condition_number(v.as_ref()) * (1.0 + 1e-12), "seed {seed}");
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let d = Mat::<c64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::ONE,
            (1, 1) => c64::new(-2.0, 0.0),
            _ => c64::ZERO,
        });
        assert!((spectral_radius(d.as_ref()).unwrap() - 2.0).abs() < 1e-15);
        let n = Mat::<c64>::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { c64::ONE } else { c64::ZERO });
        assert!(spectral_radius(n.as_ref()).unwrap() < 1e-12);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, 6, 4);
            let p = x.adjoint() * &x;
            let tr: f64 = (0..4).map(|k| p[(k, k)].re).sum();
            assert!(spectral_radius(p.as_ref()).unwrap() <= tr + 1e-10);
        }
    }

    #[test]
    fn propagator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 8, 8);
        let eig = diagonalize(&op(&x + x.adjoint()), Method::Direct).unwrap();
        for t in [0.0, 0.3, 2.0, 17.0] {
            assert!((propagator_norm(&eig, t).unwrap() - 1.0).abs() < 1e-10);
        }
        let h = Mat::<c64>::from_fn(2, 2, |i, j| {
            if i == j {
                c64::new(0.0, -(i as f64 + 1.0))
            } else {
                c64::ZERO
            }
        });
        let eig = diagonalize(&op(h), Method::Direct).unwrap();
        assert!((propagator_norm(&eig, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-14);
        assert!((propagator_norm(&eig, 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(propagator_norm(&eig, -1.0).is_err());
    }

    #[test]
    fn propagator_norm_matches_matrix_exponential() {
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let n = 4 + 10 * seed as usize;
            let x = random_matrix(&mut rng, n, n);
            let h = Mat::<c64>::from_fn(n, n, |i, j| x[(i, j)] * 0.5);
            let eig = diagonalize(&op(h.clone()), Method::Direct).unwrap();
            for t in [0.5, 2.0, 5.0] {
                let a = Mat::<c64>::from_fn(n, n, |i, j| h[(i, j)] * c64::new(0.0, -t));
                let want = spectral_norm(expm(a.as_ref()).as_ref());
                let got = propagator_norm(&eig, t).unwrap();
                assert!((got - want).abs() <= 1e-8 * want, "n={n} t={t}: {got} vs {want}");
            }
        }
    }
}
