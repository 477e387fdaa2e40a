//! Non-unitary evolution under `H_eff`, survival probabilities, relaxation
//! times and a brute-force Lindblad integrator used as an oracle.

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exec::{self, Execution};
use crate::fockspace::{enumerate_basis, SectorLayout};
use crate::models::{
    build_effective_hamiltonian, build_h0_and_jumps_union, build_h0_and_lindblad, build_similarity_transform,
    ModelParams, Operator,
};
use crate::spectral::{diagonalize, evolve_state, log_propagator_norm, EigenSystem, Method};

/// Relative slack allowed in `norm <= envelope`.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Tolerances checked on every density matrix returned by [`lindblad_evolve`].
pub const RHO_HERMITIAN_TOL: f64 = 1e-10;
pub const RHO_TRACE_TOL: f64 = 1e-8;
pub const RHO_PSD_TOL: f64 = 1e-8;

/// `steps + 1` equally spaced points on `[0, tmax]`.
pub fn time_grid(tmax: f64, steps: usize) -> Result<Vec<f64>> {
    if !(tmax > 0.0) || !tmax.is_finite() {
        return domain(format!("tmax must be positive and finite, got {tmax}"));
    }
    if steps == 0 {
        return domain("a time grid needs at least one step");
    }
    Ok((0..=steps).map(|k| tmax * k as f64 / steps as f64).collect())
}

fn check_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return domain("empty time grid"),
        Some(&t0) if t0 != 0.0 => return domain(format!("time grid must start at 0, starts at {t0}")),
        _ => {}
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return domain("time grid must be finite and strictly increasing");
    }
    Ok(())
}

/// Time series produced by the dynamics routines. Columns that were not
/// computed are left empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DynamicsTrace {
    pub times: Vec<f64>,
    /// `||exp(-i H_eff t)||_2`.
    pub norm: Vec<f64>,
    /// `ln` of `norm`; stays finite where `norm` underflows.
    pub log_norm: Vec<f64>,
    /// `kappa(V) exp(gamma t)` with `gamma = max Im E`.
    pub envelope: Vec<f64>,
    pub log_envelope: Vec<f64>,
    /// `||exp(-i H_eff t) psi0||^2`.
    pub survival: Vec<f64>,
    pub kappa: Option<f64>,
    /// `gamma = max Im E`, the decay rate of the envelope.
    pub gamma: Option<f64>,
    /// Least-squares slope of `log_norm` over `[tmax/10, tmax]`.
    pub slope: Option<f64>,
    pub tau0: Option<f64>,
    pub tau: Option<f64>,
}

impl DynamicsTrace {
    fn on_grid(times: &[f64]) -> Self {
        Self {
            times: times.to_vec(),
            ..Self::default()
        }
    }

    /// Fills `tau0` and `tau` from `kappa` for `n` particles.
    pub fn with_relaxation(mut self, n: usize, alpha: f64) -> Result<Self> {
        let kappa = self
            .kappa
            .ok_or_else(|| Error::Domain("relaxation time needs kappa(V)".into()))?;
        let (tau0, tau) = relaxation_time(kappa, n, alpha)?;
        self.tau0 = Some(tau0);
        self.tau = Some(tau);
        Ok(self)
    }

    /// Merges the columns of `other`, which must live on the same grid.
    pub fn merge(mut self, other: DynamicsTrace) -> Result<Self> {
        if self.times != other.times {
            return domain("traces live on different time grids");
        }
        macro_rules! take {
            ($($f:ident),*) => {$(
                if self.$f.is_empty() { self.$f = other.$f; }
            )*};
        }
        take!(norm, log_norm, envelope, log_envelope, survival);
        macro_rules! take_opt {
            ($($f:ident),*) => {$( self.$f = self.$f.or(other.$f); )*};
        }
        take_opt!(kappa, gamma, slope, tau0, tau);
        Ok(self)
    }
}

/// One CSV row of a [`DynamicsTrace`]; columns that were not computed are
/// left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub norm: Option<f64>,
    pub envelope: Option<f64>,
    pub survival: Option<f64>,
    pub log_norm: Option<f64>,
    pub log_envelope: Option<f64>,
}

/// Scalar companions of a trace, written next to the CSV as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub slope: Option<f64>,
    pub tau0: Option<f64>,
    pub tau: Option<f64>,
}

impl DynamicsTrace {
    pub fn rows(&self) -> Vec<TraceRow> {
        let col = |v: &[f64], k: usize| v.get(k).copied();
        (0..self.times.len())
            .map(|k| TraceRow {
                t: self.times[k],
                norm: col(&self.norm, k),
                envelope: col(&self.envelope, k),
                survival: col(&self.survival, k),
                log_norm: col(&self.log_norm, k),
                log_envelope: col(&self.log_envelope, k),
            })
            .collect()
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            kappa: self.kappa,
            gamma: self.gamma,
            slope: self.slope,
            tau0: self.tau0,
            tau: self.tau,
        }
    }

    /// Inverse of [`rows`](Self::rows) plus [`summary`](Self::summary). A
    /// column must be filled on every row or on none.
    pub fn from_parts(rows: &[TraceRow], summary: &TraceSummary) -> Result<Self> {
        fn column(rows: &[TraceRow], name: &str, get: impl Fn(&TraceRow) -> Option<f64>) -> Result<Vec<f64>> {
            let vals: Vec<Option<f64>> = rows.iter().map(get).collect();
            if vals.iter().all(Option::is_none) {
                return Ok(Vec::new());
            }
            vals.into_iter()
                .map(|v| v.ok_or_else(|| Error::Format(format!("column {name} is only partly filled"))))
                .collect()
        }
        Ok(Self {
            times: rows.iter().map(|r| r.t).collect(),
            norm: column(rows, "norm", |r| r.norm)?,
            log_norm: column(rows, "log_norm", |r| r.log_norm)?,
            envelope: column(rows, "envelope", |r| r.envelope)?,
            log_envelope: column(rows, "log_envelope", |r| r.log_envelope)?,
            survival: column(rows, "survival", |r| r.survival)?,
            kappa: summary.kappa,
            gamma: summary.gamma,
            slope: summary.slope,
            tau0: summary.tau0,
            tau: summary.tau,
        })
    }
}

/// `P(t_k) = ||exp(-i H_eff t_k) psi0||^2` for each grid point.
pub fn survival_probability_pure(
    h_eff: &Operator,
    method: Method<'_>,
    psi0: &[c64],
    times: &[f64],
) -> Result<DynamicsTrace> {
    let eig = diagonalize(h_eff, method)?;
    survival_from_eigensystem(&eig, psi0, times, Execution::Sequential)
}

pub fn survival_from_eigensystem(
    eig: &EigenSystem,
    psi0: &[c64],
    times: &[f64],
    exec: Execution,
) -> Result<DynamicsTrace> {
    check_grid(times)?;
    if psi0.len() != eig.dim() {
        return domain(format!(
            "state has length {}, operator dimension {}",
            psi0.len(),
            eig.dim()
        ));
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return domain(format!("initial state is not normalized (norm {norm})"));
    }
    let survival = exec::map(exec, times, |&t| {
        if t == 0.0 {
            1.0
        } else {
            evolve_state(eig, psi0, t).iter().map(|z| z.norm_sqr()).sum()
        }
    });
    Ok(DynamicsTrace {
        survival,
        ..DynamicsTrace::on_grid(times)
    })
}

/// Propagator norms and the envelope `kappa(V) exp(gamma t)`, with
/// `gamma = max_m Im E_m`.
pub fn propagator_norm_trace(
    h_eff: &Operator,
    method: Method<'_>,
    times: &[f64],
    exec: Execution,
) -> Result<DynamicsTrace> {
    let eig = diagonalize(h_eff, method)?;
    norm_trace_from_eigensystem(&eig, times, exec)
}

pub fn norm_trace_from_eigensystem(eig: &EigenSystem, times: &[f64], exec: Execution) -> Result<DynamicsTrace> {
    check_grid(times)?;
    let kappa = eig.condition_number();
    let gamma = eig.max_imag();
    let logs = exec::map(exec, times, |&t| {
        if t == 0.0 {
            Ok(0.0)
        } else {
            log_propagator_norm(eig, t)
        }
    });
    let log_norm = logs.into_iter().collect::<Result<Vec<f64>>>()?;
    let log_envelope: Vec<f64> = times.iter().map(|&t| kappa.ln() + gamma * t).collect();
    for (k, (&ln, &le)) in log_norm.iter().zip(&log_envelope).enumerate() {
        if ln > le + ENVELOPE_SLACK.ln_1p() {
            return Err(Error::Violation(format!(
                "propagator norm exceeds the envelope at t = {}: ln norm {ln} > ln envelope {le}",
                times[k]
            )));
        }
    }
    let slope = fit_tail_slope(times, &log_norm);
    Ok(DynamicsTrace {
        norm: log_norm.iter().map(|x| x.exp()).collect(),
        envelope: log_envelope.iter().map(|x| x.exp()).collect(),
        log_norm,
        log_envelope,
        kappa: Some(kappa),
        gamma: Some(gamma),
        slope,
        ..DynamicsTrace::on_grid(times)
    })
}

/// Least-squares slope of `y` against `t` over `t in [tmax/10, tmax]`.
/// `None` when fewer than two points fall in the window.
pub fn fit_tail_slope(times: &[f64], y: &[f64]) -> Option<f64> {
    let tmax = *times.last()?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(y)
        .filter(|(&t, _)| t >= tmax / 10.0)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, v)| (t - tm) * (v - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    Some(sxy / sxx)
}

/// `tau0 = 1/(2 N sinh alpha)` and `tau = (1 + ln kappa) tau0`.
pub fn relaxation_time(kappa: f64, n: usize, alpha: f64) -> Result<(f64, f64)> {
    if !(kappa >= 1.0) {
        return domain(format!("condition number must be >= 1, got {kappa}"));
    }
    if n == 0 {
        return domain("relaxation time needs at least one particle");
    }
    if !(alpha > 0.0) {
        return domain(format!("relaxation time needs alpha > 0, got {alpha}"));
    }
    let tau0 = 1.0 / (2.0 * n as f64 * alpha.sinh());
    Ok((tau0, (1.0 + kappa.ln()) * tau0))
}

/// Hermitian, unit trace and positive semidefinite within the given slack.
fn check_density(rho: MatRef<'_, c64>, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
    let d = rho.nrows();
    if rho.ncols() != d {
        return domain("density matrix must be square");
    }
    let mut herm: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    if herm > herm_tol {
        return domain(format!("density matrix is not Hermitian (defect {herm:e})"));
    }
    let tr: c64 = (0..d).map(|i| rho[(i, i)]).sum();
    if (tr - c64::ONE).norm() > trace_tol {
        return domain(format!("density matrix trace is {tr}, expected 1"));
    }
    let sym = Mat::<c64>::from_fn(d, d, |i, j| (rho[(i, j)] + rho[(j, i)].conj()) * 0.5);
    let lowest = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("{e:?}")))?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if lowest < -psd_tol {
        return domain(format!("density matrix has eigenvalue {lowest:e} < 0"));
    }
    Ok(())
}

/// Lindblad generator in the form `-i(K rho - rho K†) + sum_r L_r rho L_r†`
/// with `K = H0 - (i/2) sum_r L_r† L_r`.
struct Generator {
    k: Mat<c64>,
    k_adj: Mat<c64>,
    jumps: Vec<(Mat<c64>, Mat<c64>)>,
}

impl Generator {
    fn new(h0: &Operator, jumps: &[Operator]) -> Result<Self> {
        let d = h0.dim();
        let mut k = h0.mat.clone();
        for l in jumps {
            if l.dim() != d || l.basis != h0.basis {
                return domain(format!(
                    "jump {} on {} does not match H0 on {}",
                    l.label, l.basis, h0.basis
                ));
            }
            k -= faer::Scale(c64::new(0.0, 0.5)) * (l.mat.adjoint() * &l.mat);
        }
        Ok(Self {
            k_adj: k.adjoint().to_owned(),
            k,
            jumps: jumps
                .iter()
                .map(|l| (l.mat.clone(), l.mat.adjoint().to_owned()))
                .collect(),
        })
    }

    fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let minus_i = c64::new(0.0, -1.0);
        let mut out = faer::Scale(minus_i) * (&self.k * rho - rho * &self.k_adj);
        for (l, l_adj) in &self.jumps {
            out += l * rho * l_adj;
        }
        out
    }

    fn rk4_step(&self, rho: &Mat<c64>, h: f64) -> Mat<c64> {
        let half = faer::Scale(c64::new(h / 2.0, 0.0));
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + half * &k1));
        let k3 = self.apply(&(rho + half * &k2));
        let k4 = self.apply(&(rho + faer::Scale(c64::new(h, 0.0)) * &k3));
        let sum = &k1 + faer::Scale(c64::new(2.0, 0.0)) * (&k2 + &k3) + &k4;
        rho + faer::Scale(c64::new(h / 6.0, 0.0)) * sum
    }

    /// States at every grid time, taking steps no longer than `dt` that land
    /// exactly on the grid.
    fn integrate(&self, rho0: &Mat<c64>, times: &[f64], dt: f64) -> Vec<Mat<c64>> {
        let mut out = Vec::with_capacity(times.len());
        let mut rho = rho0.clone();
        out.push(rho.clone());
        for w in times.windows(2) {
            let span = w[1] - w[0];
            let n = (span / dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                rho = self.rk4_step(&rho, h);
            }
            out.push(rho.clone());
        }
        out
    }
}

fn trace(m: &Mat<c64>) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Integrates the Lindblad equation with a fixed-step classical RK4 scheme
/// and returns `rho(t_k)` for every grid time.
pub fn lindblad_evolve(
    h0: &Operator,
    jumps: &[Operator],
    rho0: &Mat<c64>,
    times: &[f64],
    dt: f64,
) -> Result<Vec<Mat<c64>>> {
    check_grid(times)?;
    if !(dt > 0.0) {
        return domain(format!("step must be positive, got {dt}"));
    }
    if rho0.nrows() != h0.dim() {
        return domain(format!(
            "density matrix has dimension {}, H0 {}",
            rho0.nrows(),
            h0.dim()
        ));
    }
    check_density(rho0.as_ref(), RHO_HERMITIAN_TOL, RHO_TRACE_TOL, RHO_PSD_TOL)?;
    let generator = Generator::new(h0, jumps)?;
    let states = generator.integrate(rho0, times, dt);
    for (rho, t) in states.iter().zip(times) {
        check_density(rho.as_ref(), RHO_HERMITIAN_TOL, RHO_TRACE_TOL, RHO_PSD_TOL)
            .map_err(|e| Error::Domain(format!("integration lost validity at t = {t}: {e}")))?;
    }
    Ok(states)
}

/// Halves `dt` (starting from `dt0`) until integrating to `horizon` drifts
/// the trace by less than `1e-8` per unit time and agrees with the run at
/// half the step within `tol` in max-norm.
pub fn select_step(
    h0: &Operator,
    jumps: &[Operator],
    rho0: &Mat<c64>,
    horizon: f64,
    dt0: f64,
    tol: f64,
) -> Result<f64> {
    if !(horizon > 0.0) || !(dt0 > 0.0) {
        return domain("horizon and initial step must be positive");
    }
    check_density(rho0.as_ref(), RHO_HERMITIAN_TOL, RHO_TRACE_TOL, RHO_PSD_TOL)?;
    let generator = Generator::new(h0, jumps)?;
    let grid = [0.0, horizon];
    let mut dt = dt0;
    let mut coarse = generator.integrate(rho0, &grid, dt).pop().expect("two grid points");
    for _ in 0..20 {
        let fine = generator
            .integrate(rho0, &grid, dt / 2.0)
            .pop()
            .expect("two grid points");
        let drift = (trace(&coarse) - c64::ONE).norm() / horizon;
        let diff = (&fine - &coarse).norm_max();
        if drift < 1e-8 && diff < tol {
            return Ok(dt);
        }
        dt /= 2.0;
        coarse = fine;
    }
    Err(Error::Domain(format!("no stable step found down to dt = {dt:e}")))
}

/// The `n`-particle diagonal block of `rho` and its trace.
pub fn sector_projection(rho: &Mat<c64>, layout: &SectorLayout, n: usize) -> Result<(Mat<c64>, f64)> {
    if rho.nrows() != layout.dim() || rho.ncols() != layout.dim() {
        return domain(format!(
            "density matrix is {}x{}, layout has dimension {}",
            rho.nrows(),
            rho.ncols(),
            layout.dim()
        ));
    }
    let (basis, off) = layout.sector(n)?;
    let d = basis.dim();
    let block = rho.as_ref().submatrix(off, off, d, d).to_owned();
    let weight = (0..d).map(|i| block[(i, i)].re).sum();
    Ok((block, weight))
}

/// Effective Hamiltonian of the lossy open chain on its `N`-particle
/// sector, with the gauge transform that diagonalizes it stably.
pub fn effective_hamiltonian(params: &ModelParams) -> Result<(Operator, Operator)> {
    let basis = enumerate_basis(params.sites, params.particles)?;
    let (h0, decay) = build_h0_and_lindblad(params, &basis)?;
    let heff = build_effective_hamiltonian(&h0, &decay)?;
    Ok((heff, build_similarity_transform(params, &basis)?))
}

/// Propagator norm, envelope and relaxation times for `params`, plus the
/// survival probability of `psi0` when given.
pub fn effective_dynamics(
    params: &ModelParams,
    times: &[f64],
    psi0: Option<&[c64]>,
    exec: Execution,
) -> Result<DynamicsTrace> {
    let (heff, r) = effective_hamiltonian(params)?;
    let eig = diagonalize(&heff, Method::Gauge(&r))?;
    let mut trace = norm_trace_from_eigensystem(&eig, times, exec)?;
    if let Some(psi) = psi0 {
        trace = trace.merge(survival_from_eigensystem(&eig, psi, times, exec)?)?;
    }
    trace.with_relaxation(params.particles, params.alpha)
}

/// `tr(P_N rho(t) P_N)` from the full Lindblad equation next to
/// `||exp(-i H_eff t) psi0||^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub times: Vec<f64>,
    pub projected: Vec<f64>,
    pub survival: Vec<f64>,
    pub max_deviation: f64,
    pub dt: f64,
}

/// Integrates the Lindblad equation on the sectors `N, N-1, ..., 0` from
/// the pure state `psi0` (given in the `N`-particle sector) and compares the
/// weight left in sector `N` with the no-jump survival probability.
pub fn survival_oracle(params: &ModelParams, psi0: &[c64], times: &[f64]) -> Result<OracleComparison> {
    check_grid(times)?;
    let layout = SectorLayout::descending_from(params.sites, params.particles)?;
    let (h0, jumps) = build_h0_and_jumps_union(params, &layout)?;
    let (heff, r) = effective_hamiltonian(params)?;
    let (sector, off) = layout.sector(params.particles)?;
    if psi0.len() != sector.dim() {
        return domain(format!(
            "initial state has length {}, sector dimension {}",
            psi0.len(),
            sector.dim()
        ));
    }
    let mut embedded = vec![c64::ZERO; layout.dim()];
    embedded[off..off + sector.dim()].copy_from_slice(psi0);
    let rho0 = pure_density(&embedded);
    let horizon = *times.last().expect("grid checked");
    let horizon = if horizon > 0.0 { horizon } else { 1.0 };
    let dt = select_step(&h0, &jumps, &rho0, horizon, 0.05, 1e-10)?;
    let states = lindblad_evolve(&h0, &jumps, &rho0, times, dt)?;
    let projected = states
        .iter()
        .map(|rho| sector_projection(rho, &layout, params.particles).map(|(_, w)| w))
        .collect::<Result<Vec<f64>>>()?;
    let survival = survival_probability_pure(&heff, Method::Gauge(&r), psi0, times)?.survival;
    let max_deviation = projected
        .iter()
        .zip(&survival)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(OracleComparison {
        times: times.to_vec(),
        projected,
        survival,
        max_deviation,
        dt,
    })
}

/// `|psi><psi|`.
pub fn pure_density(psi: &[c64]) -> Mat<c64> {
    let d = psi.len();
    Mat::from_fn(d, d, |i, j| psi[i] * psi[j].conj())
}
