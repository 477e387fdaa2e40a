//! Randomized property suites for the localization theorems.
//!
//! Each suite is deterministic for a given seed: case `k` draws from its
//! own random stream, so results do not depend on the execution mode.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criterion::{
    count_localized, distinct_tolerance, gram_decomposition, is_lambda_localized, kappa_lower_bound, lambda_threshold,
    resolve_order, tightness_witness, OrderChoice,
};
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::fockspace::{binomial, descending_order, enumerate_basis};
use crate::models::{build_interacting_hn, build_similarity_transform, BasisTag, Boundary, ModelParams, Operator};
use crate::sampling::{case_rng, ginibre, random_hermitian, random_permutation, random_unitary};
use crate::spectral::{diagonalize, select_columns, submatrix_condition_number, EigenSystem, Method};
use crate::Error;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub cases: usize,
    /// Individual assertions evaluated.
    pub checks: usize,
    /// Cases that produced no checkable instance.
    pub skipped: usize,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn collect(name: &str, seed: u64, cases: usize, parts: Vec<Result<CaseOutcome>>) -> Result<Self> {
        let mut report = Self {
            name: name.to_string(),
            seed,
            cases,
            checks: 0,
            skipped: 0,
            violations: Vec::new(),
        };
        for part in parts {
            let part = part?;
            report.checks += part.checks;
            report.skipped += usize::from(part.checks == 0);
            report.violations.extend(part.violations);
        }
        Ok(report)
    }
}

#[derive(Default)]
struct CaseOutcome {
    checks: usize,
    violations: Vec<String>,
}

/// Unit-norm columns plus their eigenvalues, in some orthonormal basis.
struct Instance {
    vectors: Mat<c64>,
    eigenvalues: Vec<c64>,
    label: String,
}

fn hermitian_instance(rng: &mut impl Rng, case: usize) -> Result<Instance> {
    let d = rng.random_range(8..=64usize);
    match case % 3 {
        // Hermitian matrix diagonalized numerically, canonical basis.
        0 => {
            let h = random_hermitian(rng, d);
            let op = Operator::new(h, BasisTag::Sites { sites: d }, "gue")?;
            let eig = diagonalize(&op, Method::Direct)?;
            Ok(Instance {
                vectors: eig.v,
                eigenvalues: eig.eigenvalues,
                label: format!("case {case}: GUE D={d}"),
            })
        }
        // Random eigenbasis U written in a random orthonormal basis W.
        1 => {
            let u = random_unitary(rng, d);
            let w = random_unitary(rng, d);
            let eigenvalues = (0..d).map(|_| c64::new(rng.random_range(-5.0..5.0), 0.0)).collect();
            Ok(Instance {
                vectors: w.adjoint() * &u,
                eigenvalues,
                label: format!("case {case}: rotated basis D={d}"),
            })
        }
        // The eigenbasis itself, the most localized arrangement possible;
        // every other case has a two-fold degenerate spectrum.
        _ => {
            let degenerate = case % 2 == 1;
            let eigenvalues = (0..d)
                .map(|k| c64::new(if degenerate { (k / 2) as f64 } else { k as f64 }, 0.0))
                .collect();
            Ok(Instance {
                vectors: Mat::identity(d, d),
                eigenvalues,
                label: format!("case {case}: eigenbasis D={d} degenerate={degenerate}"),
            })
        }
    }
}

fn most_concentrated_column(v: MatRef<'_, c64>) -> usize {
    let peak = |m: usize| v.col(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..v.ncols()).fold(0, |best, m| if peak(m) > peak(best) { m } else { best })
}

fn reference_order(v: MatRef<'_, c64>, m: usize) -> Vec<usize> {
    descending_order(v.col(m).iter().map(|z| z.norm()))
}

/// No Hermitian matrix has more than `xi` eigenstates with distinct
/// eigenvalues that are `Lambda_xi`-localized, for any ordered orthonormal
/// basis and any `xi`. Checked on `cases` random instances with `8 <= D <= 64`,
/// each under a random ordering and the ordering induced by its most
/// concentrated eigenstate.
pub fn hermitian_bound_suite(seed: u64, cases: usize, exec: Execution) -> Result<SuiteReport> {
    let parts = exec::map_range(exec, cases, |case| -> Result<CaseOutcome> {
        let mut rng = case_rng(seed, case as u64);
        let inst = hermitian_instance(&mut rng, case)?;
        let d = inst.vectors.nrows();
        let orders = [
            random_permutation(&mut rng, d),
            reference_order(inst.vectors.as_ref(), most_concentrated_column(inst.vectors.as_ref())),
        ];
        let mut out = CaseOutcome::default();
        for order in &orders {
            for xi in 1..d {
                let lxi = lambda_threshold(xi, d)?;
                let count = count_localized(
                    inst.vectors.as_ref(),
                    &inst.eigenvalues,
                    order,
                    xi,
                    lxi,
                    Execution::Sequential,
                )?;
                out.checks += 1;
                if count.distinct_count > xi {
                    out.violations.push(format!(
                        "{}: xi={xi} has {} localized states with distinct eigenvalues",
                        inst.label, count.distinct_count
                    ));
                }
            }
        }
        Ok(out)
    });
    SuiteReport::collect("hermitian_bound", seed, cases, parts)
}

/// `xi+1` states with pairwise distinct eigenvalues and the smallest
/// threshold at which they are all localized.
fn distinct_family(eig: &EigenSystem, order: &[usize], xi: usize) -> Option<(Vec<usize>, f64)> {
    let d = eig.dim();
    let margins: Vec<f64> = (0..d)
        .map(|m| order[xi..].iter().map(|&n| eig.v[(n, m)].norm()).fold(0.0, f64::max))
        .collect();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| margins[a].total_cmp(&margins[b]));
    let delta = distinct_tolerance(&eig.eigenvalues);
    let mut chosen: Vec<usize> = Vec::with_capacity(xi + 1);
    for m in idx {
        if chosen
            .iter()
            .all(|&c| (eig.eigenvalues[c] - eig.eigenvalues[m]).norm() > delta)
        {
            chosen.push(m);
            if chosen.len() == xi + 1 {
                let worst = chosen.iter().map(|&c| margins[c]).fold(0.0, f64::max);
                return Some((chosen, worst.next_up()));
            }
        }
    }
    None
}

fn hatano_nelson_instance(rng: &mut impl Rng) -> Result<(EigenSystem, String)> {
    loop {
        let l = rng.random_range(4..=8usize);
        let n = rng.random_range(1..l);
        if binomial(l, n).unwrap_or(0) < 4 {
            continue;
        }
        let alpha = rng.random_range(0.1..1.0);
        let u = rng.random_range(-2.0..2.0);
        let p = ModelParams::interacting(l, n, alpha, u, Boundary::Open);
        let b = enumerate_basis(l, n)?;
        let h = build_interacting_hn(&p, &b)?;
        let r = build_similarity_transform(&p, &b)?;
        return Ok((
            diagonalize(&h, Method::Gauge(&r))?,
            format!("iHN L={l} N={n} alpha={alpha:.3} U={u:.3}"),
        ));
    }
}

/// Non-normal matrix `V diag(E) V^-1` whose eigenvectors carry a random head
/// on the first `head` rows and a tail of relative size `eps`.
fn constructed_instance(rng: &mut impl Rng) -> Result<Option<(EigenSystem, String)>> {
    let d = rng.random_range(8..=40usize);
    let head = rng.random_range(1..d);
    let eps = 10f64.powf(rng.random_range(-3.0..-1.0));
    let g = ginibre(rng, d, d);
    let v = Mat::from_fn(d, d, |i, j| if i < head { g[(i, j)] } else { g[(i, j)] * eps });
    let e = Mat::from_fn(d, d, |i, j| {
        if i == j {
            c64::new(i as f64 + rng.random_range(0.0..0.5), rng.random_range(-1.0..1.0))
        } else {
            c64::ZERO
        }
    });
    let h = &v * &e * v.partial_piv_lu().inverse();
    let op = Operator::new(h, BasisTag::Sites { sites: d }, "constructed")?;
    match diagonalize(&op, Method::Direct) {
        Ok(eig) => Ok(Some((eig, format!("constructed D={d} head={head} eps={eps:.2e}")))),
        Err(Error::Defective { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Whenever `xi+1` eigenstates with distinct eigenvalues are
/// `Lambda`-localized with `Lambda <= 1/sqrt(D-xi)`, both the condition
/// number of those columns and `kappa(V)` exceed `kappa_lower_bound`.
/// Even cases use interacting Hatano-Nelson chains (ordered by their lowest
/// eigenstate), odd cases matrices built from localized eigenvectors.
pub fn kappa_bound_suite(seed: u64, cases: usize, exec: Execution) -> Result<SuiteReport> {
    let parts = exec::map_range(exec, cases, |case| -> Result<CaseOutcome> {
        let mut rng = case_rng(seed, case as u64);
        let (eig, label) = if case % 2 == 0 {
            hatano_nelson_instance(&mut rng)?
        } else {
            match constructed_instance(&mut rng)? {
                Some(x) => x,
                None => return Ok(CaseOutcome::default()),
            }
        };
        let d = eig.dim();
        let (order, _) = resolve_order(&eig, &OrderChoice::Reference(0))?;
        let kappa = eig.condition_number();
        let mut out = CaseOutcome::default();
        for xi in 1..d {
            let Some((family, lambda)) = distinct_family(&eig, &order, xi) else {
                continue;
            };
            if lambda > 1.0 / ((d - xi) as f64).sqrt() {
                continue;
            }
            let bound = kappa_lower_bound(lambda, xi, d)?;
            let sub = submatrix_condition_number(select_columns(eig.v.as_ref(), &family).as_ref())?;
            out.checks += 1;
            if !(sub > bound && kappa > bound) {
                out.violations.push(format!(
                    "case {case} ({label}): xi={xi} Lambda={lambda:e} bound={bound} kappa_sub={sub} kappa={kappa}"
                ));
            }
        }
        Ok(out)
    });
    SuiteReport::collect("kappa_bound", seed, cases, parts)
}

/// The extremal family: orthonormal, tail margins exactly `Lambda_xi`,
/// rejected at `Lambda_xi` and accepted just above it.
pub fn tightness_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let parts = (0..cases)
        .map(|case| -> Result<CaseOutcome> {
            let mut rng = case_rng(seed, case as u64);
            let d = rng.random_range(2..=200usize);
            let xi = rng.random_range(1..d);
            let lxi = lambda_threshold(xi, d)?;
            let states = tightness_witness(xi, d)?;
            let order: Vec<usize> = (0..d).collect();
            let gram = gram_decomposition(&states, xi, &order)?;
            let mut out = CaseOutcome::default();
            let mut fail = |msg: String| out.violations.push(format!("case {case} (xi={xi}, D={d}): {msg}"));
            let mut gram_err: f64 = 0.0;
            for j in 0..=xi {
                for i in 0..=xi {
                    let want = if i == j { c64::ONE } else { c64::ZERO };
                    gram_err = gram_err.max((gram.p[(i, j)] - want).norm());
                }
            }
            if gram_err > 1e-12 {
                fail(format!("Gram matrix deviates from identity by {gram_err:e}"));
            }
            for (m, s) in states.iter().enumerate() {
                let (at, margin) = is_lambda_localized(s, xi, lxi, &order)?;
                let (above, _) = is_lambda_localized(s, xi, lxi * (1.0 + 1e-6), &order)?;
                if margin != lxi {
                    fail(format!("state {m} has margin {margin:e}, threshold {lxi:e}"));
                }
                if at {
                    fail(format!("state {m} passes at Lambda_xi"));
                }
                if !above {
                    fail(format!("state {m} fails just above Lambda_xi"));
                }
            }
            out.checks = 2 + 3 * states.len();
            Ok(out)
        })
        .collect();
    SuiteReport::collect("tightness", seed, cases, parts)
}
