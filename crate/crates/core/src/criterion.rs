//! Lambda-localization of eigenstates and the skin-effect criterion.
//!
//! A unit vector is Lambda-localized with length `xi` in an ordered
//! orthonormal basis when every amplitude at display positions
//! `xi+1..=D` is strictly below `Lambda`. If `xi+1` eigenstates with
//! pairwise different eigenvalues are localized at
//! `Lambda_xi = 1/sqrt((xi+1)(D-xi))`, the operator cannot be Hermitian
//! (in fact not normal). The Gram-matrix split `P = P1 + P2` behind that
//! statement, and the condition-number bounds that follow from it, are
//! exposed here as well.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exec::{self, Execution};
use crate::fockspace::binomial;
use crate::fockspace::enumerate_basis;
use crate::fockspace::{check_permutation, descending_order};
use crate::models::{build_interacting_hn, build_similarity_transform, Boundary, ModelParams};
use crate::spectral::{diagonalize, spectral_radius, EigenSystem, Method, MethodKind};

/// Relative eigenvalue separation below which two eigenvalues count as equal.
pub const DISTINCT_REL_TOL: f64 = 1e-8;

/// Tolerance on `||psi|| = 1` accepted by [`is_lambda_localized`].
pub const NORM_TOL: f64 = 1e-10;

/// `1 / sqrt((xi+1)(D-xi))`.
pub fn lambda_threshold(xi: usize, d: usize) -> Result<f64> {
    check_xi(xi, d)?;
    Ok(1.0 / (((xi + 1) * (d - xi)) as f64).sqrt())
}

fn check_xi(xi: usize, d: usize) -> Result<()> {
    if d < 2 {
        return domain(format!("localization needs dimension D > 1, got {d}"));
    }
    if xi < 1 || xi >= d {
        return domain(format!("localization length {xi} outside 1..={}", d - 1));
    }
    Ok(())
}

/// Largest tail amplitude `max_{k >= xi} |<order[k]|psi>|` (0-based display
/// slots), i.e. over basis positions `xi+1..=D`.
fn tail_margin(column: impl Fn(usize) -> c64, xi: usize, order: &[usize]) -> f64 {
    order[xi..].iter().map(|&n| column(n).norm()).fold(0.0, f64::max)
}

fn tail_weight(column: impl Fn(usize) -> c64, xi: usize, order: &[usize]) -> f64 {
    order[xi..].iter().map(|&n| column(n).norm_sqr()).sum()
}

/// Tests one state. Returns the flag and the tail margin.
pub fn is_lambda_localized(psi: &[c64], xi: usize, lambda: f64, order: &[usize]) -> Result<(bool, f64)> {
    let d = psi.len();
    check_xi(xi, d)?;
    check_permutation(order, d)?;
    if !(lambda > 0.0) {
        return domain(format!("threshold must be positive, got {lambda}"));
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return domain(format!("state is not normalized (norm {norm})"));
    }
    let margin = tail_margin(|n| psi[n], xi, order);
    Ok((margin < lambda, margin))
}

/// Size of a greedily built subset of `candidates` whose eigenvalues are
/// pairwise further apart than `delta`.
pub fn distinct_eigenvalue_count(eigenvalues: &[c64], candidates: &[usize], delta: f64) -> usize {
    let mut idx: Vec<usize> = candidates.to_vec();
    idx.sort_by(|&a, &b| {
        eigenvalues[a]
            .re
            .total_cmp(&eigenvalues[b].re)
            .then(eigenvalues[a].im.total_cmp(&eigenvalues[b].im))
    });
    let mut chosen: Vec<c64> = Vec::new();
    for &m in &idx {
        let e = eigenvalues[m];
        let clash = chosen
            .iter()
            .rev()
            .take_while(|c| e.re - c.re <= delta)
            .any(|c| (e - c).norm() <= delta);
        if !clash {
            chosen.push(e);
        }
    }
    chosen.len()
}

/// `delta_E` for a spectrum.
pub fn distinct_tolerance(eigenvalues: &[c64]) -> f64 {
    DISTINCT_REL_TOL * eigenvalues.iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Localization counts of all columns of `vectors` for one `(xi, lambda)`.
#[derive(Debug, Clone)]
pub struct LocalizationCount {
    pub margins: Vec<f64>,
    pub passing: Vec<usize>,
    pub distinct_count: usize,
}

/// Tail margins of every column, then the passing set and its distinct
/// eigenvalue count. `vectors` holds one state per column in the
/// canonical basis; `order` maps display slots to rows.
pub fn count_localized(
    vectors: MatRef<'_, c64>,
    eigenvalues: &[c64],
    order: &[usize],
    xi: usize,
    lambda: f64,
    exec: Execution,
) -> Result<LocalizationCount> {
    let d = vectors.nrows();
    check_xi(xi, d)?;
    check_permutation(order, d)?;
    if eigenvalues.len() != vectors.ncols() {
        return domain("one eigenvalue per column required");
    }
    let margins = exec::map_range(exec, vectors.ncols(), |m| tail_margin(|n| vectors[(n, m)], xi, order));
    let passing: Vec<usize> = (0..margins.len()).filter(|&m| margins[m] < lambda).collect();
    let distinct_count = distinct_eigenvalue_count(eigenvalues, &passing, distinct_tolerance(eigenvalues));
    Ok(LocalizationCount {
        margins,
        passing,
        distinct_count,
    })
}

/// How to choose the localization length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XiChoice {
    Fixed(usize),
    /// Scan a grid, by default `ceil(D/8), ceil(D/4), ceil(D/2), ceil(7D/8)`.
    Auto(Option<Vec<usize>>),
}

/// How to order the basis before testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderChoice {
    /// Sort by the amplitudes of eigenstate `m` (eigenvalues ascending by
    /// real part, so `0` is the lowest-energy state).
    Reference(usize),
    /// Use the eigenstate with the largest single amplitude as reference.
    MostConcentrated,
    /// Use this display order (slot -> canonical index) as given.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct DetectOptions {
    pub xi: XiChoice,
    pub order: OrderChoice,
    /// Threshold to test; defaults to `Lambda_xi`.
    pub lambda: Option<f64>,
    pub exec: Execution,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            xi: XiChoice::Auto(None),
            order: OrderChoice::Reference(0),
            lambda: None,
            exec: Execution::Parallel,
        }
    }
}

impl DetectOptions {
    pub fn fixed(xi: usize) -> Self {
        Self {
            xi: XiChoice::Fixed(xi),
            ..Self::default()
        }
    }
}

/// Outcome of [`detect_skin_effect`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub dim: usize,
    pub xi: usize,
    pub lambda: f64,
    pub lambda_xi: f64,
    /// Reference eigenstate used for the ordering, if any.
    pub reference: Option<usize>,
    /// Display slot -> canonical basis index.
    pub order: Vec<usize>,
    /// Eigenstates that are Lambda-localized.
    pub passing: Vec<usize>,
    /// The `xi+1` eigenstates with the smallest tail weight.
    pub selected: Vec<usize>,
    pub distinct_count: usize,
    pub delta_e: f64,
    pub verdict: bool,
    /// Tail margin of every eigenstate.
    pub margins: Vec<f64>,
    pub method: MethodKind,
}

impl LocalizationReport {
    /// Largest margin among the selected states.
    pub fn selected_max_margin(&self) -> f64 {
        self.selected.iter().map(|&m| self.margins[m]).fold(0.0, f64::max)
    }
}

/// Eigenstate whose largest single amplitude is biggest.
pub fn most_concentrated_state(eig: &EigenSystem) -> usize {
    let d = eig.dim();
    let peak = |m: usize| (0..d).map(|n| eig.v[(n, m)].norm()).fold(0.0, f64::max);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for m in 0..d {
        let p = peak(m);
        if p > best_val {
            best_val = p;
            best = m;
        }
    }
    best
}

fn default_xi_grid(d: usize) -> Vec<usize> {
    let mut g: Vec<usize> = [(d, 8), (2 * d, 8), (4 * d, 8), (7 * d, 8)]
        .iter()
        .map(|&(num, den)| num.div_ceil(den).clamp(1, d - 1))
        .collect();
    g.dedup();
    g
}

/// Display order (slot -> canonical index) requested by `choice`, with the
/// reference eigenstate if one was used.
pub fn resolve_order(eig: &EigenSystem, choice: &OrderChoice) -> Result<(Vec<usize>, Option<usize>)> {
    let r = match choice {
        OrderChoice::Fixed(perm) => {
            check_permutation(perm, eig.dim())?;
            return Ok((perm.clone(), None));
        }
        OrderChoice::Reference(r) if *r >= eig.dim() => {
            return domain(format!("reference eigenstate {r} out of range"));
        }
        OrderChoice::Reference(r) => *r,
        OrderChoice::MostConcentrated => most_concentrated_state(eig),
    };
    Ok((descending_order(eig.v.col(r).iter().map(|a| a.norm())), Some(r)))
}

/// Reorders the basis, tests every eigenstate for Lambda-localization and
/// decides whether at least `xi+1` of them with distinct eigenvalues pass.
pub fn detect_skin_effect(eig: &EigenSystem, opts: &DetectOptions) -> Result<LocalizationReport> {
    let d = eig.dim();
    check_xi(1, d)?;
    let (order, reference) = resolve_order(eig, &opts.order)?;
    let grid = match &opts.xi {
        XiChoice::Fixed(xi) => vec![*xi],
        XiChoice::Auto(Some(g)) if !g.is_empty() => g.clone(),
        XiChoice::Auto(_) => default_xi_grid(d),
    };
    let mut best: Option<(i64, LocalizationReport)> = None;
    for xi in grid {
        let report = assess(eig, &order, reference, xi, opts)?;
        let score = report.distinct_count as i64 - (xi as i64 + 1);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, report));
        }
    }
    Ok(best.expect("grid is non-empty").1)
}

fn assess(
    eig: &EigenSystem,
    order: &[usize],
    reference: Option<usize>,
    xi: usize,
    opts: &DetectOptions,
) -> Result<LocalizationReport> {
    let d = eig.dim();
    let lambda_xi = lambda_threshold(xi, d)?;
    let lambda = opts.lambda.unwrap_or(lambda_xi);
    if !(lambda > 0.0) {
        return domain(format!("threshold must be positive, got {lambda}"));
    }
    let count = count_localized(eig.v.as_ref(), &eig.eigenvalues, order, xi, lambda, opts.exec)?;
    let weights = exec::map_range(opts.exec, d, |m| tail_weight(|n| eig.v[(n, m)], xi, order));
    let mut by_weight: Vec<usize> = (0..d).collect();
    by_weight.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    by_weight.truncate(xi + 1);
    let verdict = count.distinct_count > xi && lambda <= lambda_xi;
    Ok(LocalizationReport {
        dim: d,
        xi,
        lambda,
        lambda_xi,
        reference,
        order: order.to_vec(),
        passing: count.passing,
        selected: by_weight,
        distinct_count: count.distinct_count,
        delta_e: distinct_tolerance(&eig.eigenvalues),
        verdict,
        margins: count.margins,
        method: eig.method,
    })
}

/// `sqrt(1/((xi+1)(D-xi) Lambda^2) - 1/(xi+1))`, valid for
/// `Lambda <= 1/sqrt(D-xi)`.
pub fn kappa_lower_bound(lambda: f64, xi: usize, d: usize) -> Result<f64> {
    check_xi(xi, d)?;
    if !(lambda > 0.0) {
        return domain(format!("threshold must be positive, got {lambda}"));
    }
    let tail = (d - xi) as f64;
    if lambda > 1.0 / tail.sqrt() {
        return domain(format!(
            "threshold {lambda} exceeds 1/sqrt(D-xi) = {}",
            1.0 / tail.sqrt()
        ));
    }
    let k = (xi + 1) as f64;
    Ok((1.0 / (k * tail * lambda * lambda) - 1.0 / k).max(0.0).sqrt())
}

/// `(1/sqrt(D)) sqrt(1 / max_m |<D|Psi_m>|^2 - 1)`, where `|D>` is the last
/// basis state in the display order `order`.
pub fn kappa_zero(eig: &EigenSystem, order: &[usize]) -> Result<f64> {
    let d = eig.dim();
    if d < 2 {
        return domain("kappa_0 needs dimension D > 1");
    }
    check_permutation(order, d)?;
    let last = order[d - 1];
    let a = (0..d).map(|m| eig.v[(last, m)].norm_sqr()).fold(0.0, f64::max);
    Ok(kappa_zero_from_amplitude(a, d))
}

pub(crate) fn kappa_zero_from_amplitude(max_sq: f64, d: usize) -> f64 {
    if max_sq == 0.0 {
        return f64::INFINITY;
    }
    if max_sq >= 1.0 {
        return 0.0;
    }
    (1.0 / max_sq - 1.0).sqrt() / (d as f64).sqrt()
}

/// `exp(alpha N (L-N)) / sqrt(C(L, N))`.
pub fn kappa_zero_estimate(params: &ModelParams) -> Result<f64> {
    let (l, n) = (params.sites, params.particles);
    if !(params.alpha > 0.0) {
        return domain("the estimate assumes alpha > 0");
    }
    if n < 1 || n > l {
        return domain(format!("need 1 <= N <= L, got N={n}, L={l}"));
    }
    Ok(log_kappa_zero_estimate(params.alpha, l, n).exp())
}

/// Natural log of [`kappa_zero_estimate`], finite for large chains.
pub fn log_kappa_zero_estimate(alpha: f64, l: usize, n: usize) -> f64 {
    let log_dim = (binomial(l, n).unwrap_or(usize::MAX) as f64).ln();
    alpha * (n * (l - n)) as f64 - 0.5 * log_dim
}

/// One row of the condition-number sweep at half filling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub sites: usize,
    pub particles: usize,
    pub dim: usize,
    pub kappa: f64,
    pub kappa0: f64,
    pub kappa0_estimate: f64,
    pub log_kappa: f64,
    pub log_kappa0: f64,
    pub log_kappa0_estimate: f64,
    pub log_kappa_per_site: f64,
    pub log_kappa_per_site_sq: f64,
    pub log_kappa0_per_site: f64,
    pub log_kappa0_per_site_sq: f64,
}

/// `kappa(V)`, `kappa_0` (basis ordered by the lowest eigenstate) and the
/// estimate for open chains at half filling, one row per chain length.
pub fn kappa_sweep(sites: &[usize], alpha: f64, u: f64, exec: Execution) -> Result<Vec<KappaRow>> {
    let rows = exec::map(exec, sites, |&l| -> Result<KappaRow> {
        let n = l / 2;
        let p = ModelParams::interacting(l, n, alpha, u, Boundary::Open);
        let basis = enumerate_basis(l, n)?;
        let h = build_interacting_hn(&p, &basis)?;
        let r = build_similarity_transform(&p, &basis)?;
        let eig = diagonalize(&h, Method::Gauge(&r))?;
        let (order, _) = resolve_order(&eig, &OrderChoice::Reference(0))?;
        let kappa = eig.condition_number();
        let kappa0 = kappa_zero(&eig, &order)?;
        let log_est = log_kappa_zero_estimate(alpha, l, n);
        let lf = l as f64;
        Ok(KappaRow {
            sites: l,
            particles: n,
            dim: basis.dim(),
            kappa,
            kappa0,
            kappa0_estimate: log_est.exp(),
            log_kappa: kappa.ln(),
            log_kappa0: kappa0.ln(),
            log_kappa0_estimate: log_est,
            log_kappa_per_site: kappa.ln() / lf,
            log_kappa_per_site_sq: kappa.ln() / (lf * lf),
            log_kappa0_per_site: kappa0.ln() / lf,
            log_kappa0_per_site_sq: kappa0.ln() / (lf * lf),
        })
    });
    rows.into_iter().collect()
}

/// `P = P1 + P2` for a family of `xi+1` states.
#[derive(Debug, Clone)]
pub struct GramDiagnostics {
    pub p: Mat<c64>,
    /// Head contribution (display positions `1..=xi`).
    pub p1: Mat<c64>,
    /// Tail contribution (display positions `xi+1..=D`).
    pub p2: Mat<c64>,
    pub trace_p2: f64,
    pub rho_p2: f64,
    pub max_offdiag_p: f64,
}

pub fn gram_decomposition(states: &[Vec<c64>], xi: usize, order: &[usize]) -> Result<GramDiagnostics> {
    if states.len() != xi + 1 {
        return domain(format!("expected {} states, got {}", xi + 1, states.len()));
    }
    let d = states[0].len();
    if states.iter().any(|s| s.len() != d) {
        return domain("states have different dimensions");
    }
    check_xi(xi, d)?;
    check_permutation(order, d)?;
    let k = xi + 1;
    let head = Mat::<c64>::from_fn(xi, k, |r, j| states[j][order[r]]);
    let tail = Mat::<c64>::from_fn(d - xi, k, |r, j| states[j][order[xi + r]]);
    let p1 = head.adjoint() * &head;
    let p2 = tail.adjoint() * &tail;
    let p = &p1 + &p2;
    let trace_p2 = (0..k).map(|j| p2[(j, j)].re).sum();
    let rho_p2 = spectral_radius(p2.as_ref())?;
    let mut max_offdiag_p: f64 = 0.0;
    for j in 0..k {
        for i in 0..k {
            if i != j {
                max_offdiag_p = max_offdiag_p.max(p[(i, j)].norm());
            }
        }
    }
    Ok(GramDiagnostics {
        p,
        p1,
        p2,
        trace_p2,
        rho_p2,
        max_offdiag_p,
    })
}

/// `xi+1` orthonormal vectors that are Lambda-localized for every
/// `Lambda > Lambda_xi`: a discrete Fourier head on the first `xi`
/// positions and a flat tail of height `Lambda_xi`.
pub fn tightness_witness(xi: usize, d: usize) -> Result<Vec<Vec<c64>>> {
    let tail = lambda_threshold(xi, d)?;
    let k = xi + 1;
    let head_scale = 1.0 / (k as f64).sqrt();
    Ok((1..=k)
        .map(|j| {
            (1..=d)
                .map(|n| {
                    if n <= xi {
                        let phase = 2.0 * std::f64::consts::PI * ((j * n) % k) as f64 / k as f64;
                        c64::from_polar(head_scale, phase)
                    } else {
                        c64::new(tail, 0.0)
                    }
                })
                .collect()
        })
        .collect())
}

/// Smallest threshold at which some `xi+1` eigenstates are all localized,
/// together with those states.
pub fn tightest_family(vectors: MatRef<'_, c64>, order: &[usize], xi: usize) -> Result<(f64, Vec<usize>)> {
    let d = vectors.nrows();
    check_xi(xi, d)?;
    check_permutation(order, d)?;
    let margins: Vec<f64> = (0..vectors.ncols())
        .map(|m| tail_margin(|n| vectors[(n, m)], xi, order))
        .collect();
    let mut idx = descending_order(margins.iter().map(|m| -m));
    idx.truncate(xi + 1);
    let worst = idx.iter().map(|&m| margins[m]).fold(0.0, f64::max);
    Ok((worst.next_up(), idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::enumerate_basis;
    use crate::models::{build_interacting_hn, build_similarity_transform, Boundary};
    use crate::spectral::{condition_number, diagonalize, Method};

    fn identity_order(d: usize) -> Vec<usize> {
        (0..d).collect()
    }

    #[test]
    fn threshold_values() {
        assert!((lambda_threshold(800, 924).unwrap() - 0.003173).abs() < 5e-7);
        assert!((lambda_threshold(30, 100).unwrap() - 0.021467).abs() < 5e-7);
        assert!((lambda_threshold(30, 150).unwrap() - 0.016396).abs() < 5e-7);
        assert!(lambda_threshold(0, 10).is_err());
        assert!(lambda_threshold(10, 10).is_err());
        assert!(lambda_threshold(1, 1).is_err());
    }

    #[test]
    fn basis_vector_is_localized() {
        let mut psi = vec![c64::ZERO; 6];
        psi[0] = c64::ONE;
        let (ok, margin) = is_lambda_localized(&psi, 1, 1e-300, &identity_order(6)).unwrap();
        assert!(ok);
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn uniform_vector_is_not_localized() {
        for d in 2..30 {
            let psi = vec![c64::new(1.0 / (d as f64).sqrt(), 0.0); d];
            for xi in 1..d - 1 {
                let lam = lambda_threshold(xi, d).unwrap();
                assert!(!is_lambda_localized(&psi, xi, lam, &identity_order(d)).unwrap().0);
            }
        }
    }

    #[test]
    fn unnormalized_input_rejected() {
        let psi = vec![c64::ONE; 3];
        assert!(is_lambda_localized(&psi, 1, 0.1, &identity_order(3)).is_err());
    }

    #[test]
    fn distinct_counting() {
        let e = [
            c64::new(0.0, 0.0),
            c64::new(1e-12, 0.0),
            c64::new(1.0, 0.0),
            c64::new(1.0, 1e-3),
        ];
        assert_eq!(distinct_eigenvalue_count(&e, &[0, 1, 2, 3], 1e-8), 3);
        assert_eq!(distinct_eigenvalue_count(&e, &[0, 1], 1e-8), 1);
        assert_eq!(distinct_eigenvalue_count(&e, &[], 1e-8), 0);
    }

    #[test]
    fn bound_examples() {
        let (xi, d) = (800, 924);
        let lxi = lambda_threshold(xi, d).unwrap();
        let b = kappa_lower_bound(lxi, xi, d).unwrap();
        assert!((b - (1.0 - 1.0 / 801.0f64).sqrt()).abs() < 1e-12);
        assert!(b < 1.0);
        let b10 = kappa_lower_bound(lxi / 10.0, xi, d).unwrap();
        assert!((b10 - (100.0 - 1.0 / 801.0f64).sqrt()).abs() < 1e-9);
        assert!((b10 - 9.999_937_6).abs() < 1e-6);
        let edge = 1.0 / ((d - xi) as f64).sqrt();
        assert!(kappa_lower_bound(edge, xi, d).unwrap() < 1e-6);
        assert!(kappa_lower_bound(edge * 1.01, xi, d).is_err());
    }

    #[test]
    fn kappa_zero_uniform_last_row() {
        let d = 16;
        let a = 1.0 / d as f64;
        let k0 = kappa_zero_from_amplitude(a, d);
        assert!((k0 - ((d - 1) as f64).sqrt() / (d as f64).sqrt()).abs() < 1e-14);
        assert!(k0 < 1.0);
        assert_eq!(kappa_zero_from_amplitude(0.0, d), f64::INFINITY);
        assert_eq!(kappa_zero_from_amplitude(1.0, d), 0.0);
    }

    #[test]
    fn kappa_zero_rejects_one_dimensional_space() {
        let p = ModelParams::interacting(3, 3, 0.5, -1.0, Boundary::Open);
        let b = enumerate_basis(3, 3).unwrap();
        let h = build_interacting_hn(&p, &b).unwrap();
        let eig = diagonalize(&h, Method::Direct).unwrap();
        assert!(kappa_zero(&eig, b.order()).is_err());
    }

    #[test]
    fn estimate_values() {
        let full = ModelParams::interacting(6, 6, 0.5, -1.0, Boundary::Open);
        assert!((kappa_zero_estimate(&full).unwrap() - 1.0).abs() < 1e-15);
        let p = ModelParams::interacting(12, 6, 0.5, -1.0, Boundary::Open);
        let want = 18f64.exp() / 924f64.sqrt();
        assert!((kappa_zero_estimate(&p).unwrap() / want - 1.0).abs() < 1e-12);
        assert!((want - 2.16e6).abs() < 0.01e6);
        let one = ModelParams::interacting(20, 1, 0.3, 0.0, Boundary::Open);
        let want = (0.3f64 * 19.0).exp() / 20f64.sqrt();
        assert!((kappa_zero_estimate(&one).unwrap() / want - 1.0).abs() < 1e-12);
        let zero_alpha = ModelParams::interacting(6, 3, 0.0, 0.0, Boundary::Open);
        assert!(kappa_zero_estimate(&zero_alpha).is_err());
    }

    #[test]
    fn orthonormal_family_has_identity_gram() {
        let d = 7;
        let xi = 3;
        let states: Vec<Vec<c64>> = (0..=xi)
            .map(|j| (0..d).map(|n| if n == j + 2 { c64::ONE } else { c64::ZERO }).collect())
            .collect();
        let g = gram_decomposition(&states, xi, &identity_order(d)).unwrap();
        assert!((&g.p - Mat::<c64>::identity(xi + 1, xi + 1)).norm_max() < 1e-15);
        assert_eq!(g.max_offdiag_p, 0.0);
        assert!(g.rho_p2 <= g.trace_p2 + 1e-10);
        assert!(gram_decomposition(&states[..2], xi, &identity_order(d)).is_err());
    }

    #[test]
    fn witness_small_case() {
        let w = tightness_witness(1, 3).unwrap();
        assert_eq!(w.len(), 2);
        // (e^{i pi j}/sqrt2, 1/2, 1/2)
        assert!((w[0][0] - c64::new(-1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((w[1][0] - c64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(w[0][1], c64::new(0.5, 0.0));
        let overlap: c64 = w[0].iter().zip(&w[1]).map(|(a, b)| a.conj() * b).sum();
        assert!(overlap.norm() < 1e-15);
    }

    #[test]
    fn witness_sits_exactly_on_threshold() {
        let (xi, d) = (4, 11);
        let lxi = lambda_threshold(xi, d).unwrap();
        for psi in tightness_witness(xi, d).unwrap() {
            let order = identity_order(d);
            let (ok, margin) = is_lambda_localized(&psi, xi, lxi, &order).unwrap();
            assert!(!ok);
            assert_eq!(margin, lxi);
            assert!(is_lambda_localized(&psi, xi, lxi + 1e-9, &order).unwrap().0);
        }
    }

    #[test]
    fn hermitian_operator_never_triggers() {
        let p = ModelParams::interacting(8, 4, 0.0, -1.0, Boundary::Open);
        let b = enumerate_basis(8, 4).unwrap();
        let eig = diagonalize(&build_interacting_hn(&p, &b).unwrap(), Method::Direct).unwrap();
        for xi in [1, 10, 35, 60, 69] {
            for order in [
                OrderChoice::MostConcentrated,
                OrderChoice::Reference(0),
                OrderChoice::Reference(40),
            ] {
                let opts = DetectOptions {
                    xi: XiChoice::Fixed(xi),
                    order,
                    ..DetectOptions::default()
                };
                let rep = detect_skin_effect(&eig, &opts).unwrap();
                assert!(!rep.verdict);
                assert!(rep.distinct_count <= xi);
            }
        }
    }

    #[test]
    fn small_chain_detection_and_bounds() {
        let p = ModelParams::interacting(8, 4, 0.5, -1.0, Boundary::Open);
        let b = enumerate_basis(8, 4).unwrap();
        let h = build_interacting_hn(&p, &b).unwrap();
        let r = build_similarity_transform(&p, &b).unwrap();
        let eig = diagonalize(&h, Method::Gauge(&r)).unwrap();
        let rep = detect_skin_effect(&eig, &DetectOptions::default()).unwrap();
        assert!(rep.verdict, "auto scan should find a localization length");
        assert!(rep.distinct_count > rep.xi);
        assert_eq!(rep.selected.len(), rep.xi + 1);
        assert_eq!(rep.lambda_xi, lambda_threshold(rep.xi, 70).unwrap());

        let k0 = kappa_zero(&eig, &rep.order).unwrap();
        assert!(k0 <= condition_number(eig.v.as_ref()));
    }
}
