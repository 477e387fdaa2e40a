//! Dense matrix realizations of the lattice models.
//!
//! * the single-particle Hatano-Nelson chain on the site basis,
//! * the interacting fermionic Hatano-Nelson chain on an `N`-particle sector,
//! * the Hermitian hopping Hamiltonian and the loss operators whose
//!   no-jump generator reproduces the interacting chain,
//! * the diagonal imaginary-gauge similarity transform.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fockspace::{hop_element, FockBasis, FockState, SectorLayout};

/// Boundary condition of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" | "obc" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            other => domain(format!("unknown boundary condition '{other}'")),
        }
    }
}

/// Which basis an [`Operator`] acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    /// Single-particle site basis `|1>, ..., |L>`.
    Sites { sites: usize },
    /// Fixed particle-number sector.
    Fock { sites: usize, particles: usize },
    /// Sectors `top, top-1, ..., 0` stacked.
    Union { sites: usize, top: usize },
}

impl BasisTag {
    pub fn of_basis(basis: &FockBasis) -> Self {
        BasisTag::Fock {
            sites: basis.num_sites(),
            particles: basis.particles(),
        }
    }

    pub fn of_layout(layout: &SectorLayout) -> Self {
        BasisTag::Union {
            sites: layout.num_sites(),
            top: layout.top(),
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Sites { sites } => write!(f, "sites:L={sites}"),
            BasisTag::Fock { sites, particles } => write!(f, "fock:L={sites},N={particles}"),
            BasisTag::Union { sites, top } => write!(f, "union:L={sites},top={top}"),
        }
    }
}

impl FromStr for BasisTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed basis tag '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let mut fields = std::collections::HashMap::new();
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: usize = v.parse().map_err(|_| bad())?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        match kind {
            "sites" => Ok(BasisTag::Sites { sites: get("L")? }),
            "fock" => Ok(BasisTag::Fock {
                sites: get("L")?,
                particles: get("N")?,
            }),
            "union" => Ok(BasisTag::Union {
                sites: get("L")?,
                top: get("top")?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A dense square matrix together with the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub mat: Mat<c64>,
    pub basis: BasisTag,
    pub label: String,
}

impl Operator {
    pub fn new(mat: Mat<c64>, basis: BasisTag, label: impl Into<String>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return domain(format!(
                "operator matrix is {}x{}, not square",
                mat.nrows(),
                mat.ncols()
            ));
        }
        Ok(Self {
            mat,
            basis,
            label: label.into(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `||A - A†||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm_l2()
    }

    /// `||A - A†||_F / ||A||_F`, zero for the zero matrix.
    pub fn relative_hermiticity_defect(&self) -> f64 {
        let n = self.mat.norm_l2();
        if n == 0.0 {
            0.0
        } else {
            self.hermiticity_defect() / n
        }
    }
}

/// Parameters of both chain models.
///
/// The interacting model uses `alpha` and `u`; the single-particle model
/// uses `t` and `g`. Energies are in units of the bare hopping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sites: usize,
    pub particles: usize,
    pub alpha: f64,
    pub u: f64,
    pub t: f64,
    pub g: f64,
    pub bc: Boundary,
    /// Include `U n_L n_1` on the periodic bond.
    pub boundary_interaction: bool,
}

impl ModelParams {
    pub fn interacting(sites: usize, particles: usize, alpha: f64, u: f64, bc: Boundary) -> Self {
        Self {
            sites,
            particles,
            alpha,
            u,
            t: 1.0,
            g: 0.0,
            bc,
            boundary_interaction: true,
        }
    }

    pub fn single_particle(sites: usize, t: f64, g: f64, bc: Boundary) -> Self {
        Self {
            sites,
            particles: 1,
            alpha: 0.0,
            u: 0.0,
            t,
            g,
            bc,
            boundary_interaction: true,
        }
    }

    pub fn with_bc(self, bc: Boundary) -> Self {
        Self { bc, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return domain(format!("need at least 2 sites, got {}", self.sites));
        }
        if self.particles > self.sites {
            return domain(format!(
                "particle number {} exceeds site count {}",
                self.particles, self.sites
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("U", self.u), ("t", self.t), ("g", self.g)] {
            if !v.is_finite() {
                return domain(format!("{name} must be finite"));
            }
        }
        if self.bc == Boundary::Periodic && self.sites < 3 {
            return domain("periodic chains need at least 3 sites");
        }
        Ok(())
    }

    fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        self.validate()?;
        if basis.num_sites() != self.sites || basis.particles() != self.particles {
            return domain(format!(
                "basis (L={}, N={}) does not match parameters (L={}, N={})",
                basis.num_sites(),
                basis.particles(),
                self.sites,
                self.particles
            ));
        }
        Ok(())
    }

    /// Bonds `(j, j+1)`, including `(L, 1)` for periodic chains.
    fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.sites;
        let mut b: Vec<(usize, usize)> = (1..l).map(|j| (j, j + 1)).collect();
        if self.bc == Boundary::Periodic {
            b.push((l, 1));
        }
        b
    }
}

/// Number-conserving two-body operator
/// `sum c_ij c†_i c_j + sum w_ij n_i n_j` in abstract form.
#[derive(Debug, Clone, Default)]
struct Terms {
    hops: Vec<(usize, usize, c64)>,
    densities: Vec<(usize, usize, f64)>,
}

/// Anything whose states can be enumerated and located.
trait StateSpace {
    fn dim(&self) -> usize;
    fn states(&self) -> Vec<FockState>;
    fn locate(&self, s: &FockState) -> Option<usize>;
}

impl StateSpace for FockBasis {
    fn dim(&self) -> usize {
        FockBasis::dim(self)
    }
    fn states(&self) -> Vec<FockState> {
        FockBasis::states(self).to_vec()
    }
    fn locate(&self, s: &FockState) -> Option<usize> {
        self.index_of(s)
    }
}

impl StateSpace for SectorLayout {
    fn dim(&self) -> usize {
        SectorLayout::dim(self)
    }
    fn states(&self) -> Vec<FockState> {
        self.iter().map(|(_, s)| *s).collect()
    }
    fn locate(&self, s: &FockState) -> Option<usize> {
        self.index_of(s)
    }
}

fn assemble(space: &impl StateSpace, terms: &Terms) -> Result<Mat<c64>> {
    let d = space.dim();
    let mut m = Mat::<c64>::zeros(d, d);
    for (col, s) in space.states().iter().enumerate() {
        for &(i, j, c) in &terms.hops {
            if let Some((t, sign)) = hop_element(s, i, j)? {
                let row = space
                    .locate(&t)
                    .ok_or_else(|| Error::Domain("hop left the state space".into()))?;
                m[(row, col)] += c * sign;
            }
        }
        let diag: f64 = terms
            .densities
            .iter()
            .filter(|&&(i, j, _)| s.is_occupied(i) && s.is_occupied(j))
            .map(|&(_, _, w)| w)
            .sum();
        if diag != 0.0 {
            m[(col, col)] += c64::new(diag, 0.0);
        }
    }
    Ok(m)
}

fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

fn interacting_terms(p: &ModelParams) -> Terms {
    let (fwd, bwd) = (p.alpha.exp(), (-p.alpha).exp());
    let mut terms = Terms::default();
    for (a, b) in p.bonds() {
        terms.hops.push((a, b, real(fwd)));
        terms.hops.push((b, a, real(bwd)));
        let periodic_bond = a == p.sites && b == 1;
        if p.u != 0.0 && (!periodic_bond || p.boundary_interaction) {
            terms.densities.push((a, b, p.u));
        }
    }
    terms
}

/// `sum_j (t+g)|j+1><j| + (t-g)|j><j+1|` on the site basis; periodic chains
/// add `(t+g)|1><L| + (t-g)|L><1|`.
pub fn build_hatano_nelson_single(params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    let l = params.sites;
    let mut m = Mat::<c64>::zeros(l, l);
    let (up, down) = (params.t + params.g, params.t - params.g);
    for j in 0..l - 1 {
        m[(j + 1, j)] += real(up);
        m[(j, j + 1)] += real(down);
    }
    if params.bc == Boundary::Periodic {
        m[(0, l - 1)] += real(up);
        m[(l - 1, 0)] += real(down);
    }
    Operator::new(
        m,
        BasisTag::Sites { sites: l },
        format!("HN1(L={l},t={},g={},{})", params.t, params.g, params.bc),
    )
}

/// Interacting Hatano-Nelson chain
/// `sum_j e^a c†_j c_{j+1} + e^-a c†_{j+1} c_j + U n_j n_{j+1}` on one sector.
pub fn build_interacting_hn(params: &ModelParams, basis: &FockBasis) -> Result<Operator> {
    params.check_basis(basis)?;
    let m = assemble(basis, &interacting_terms(params))?;
    Operator::new(m, BasisTag::of_basis(basis), ihn_label(params))
}

/// The same chain on a stack of sectors (used to check number conservation).
pub fn build_interacting_hn_union(params: &ModelParams, layout: &SectorLayout) -> Result<Operator> {
    params.validate()?;
    if layout.num_sites() != params.sites {
        return domain("layout and parameters disagree on the site count");
    }
    let m = assemble(layout, &interacting_terms(params))?;
    Operator::new(m, BasisTag::of_layout(layout), ihn_label(params))
}

fn ihn_label(p: &ModelParams) -> String {
    format!(
        "iHN(L={},N={},alpha={},U={},{})",
        p.sites, p.particles, p.alpha, p.u, p.bc
    )
}

/// Total particle number on a sector or layout.
pub fn number_operator(basis: &FockBasis) -> Operator {
    let d = basis.dim();
    let n = basis.particles() as f64;
    let m = Mat::<c64>::from_fn(d, d, |i, j| if i == j { real(n) } else { c64::ZERO });
    Operator {
        mat: m,
        basis: BasisTag::of_basis(basis),
        label: "N".into(),
    }
}

pub fn number_operator_union(layout: &SectorLayout) -> Operator {
    let d = layout.dim();
    let mut m = Mat::<c64>::zeros(d, d);
    for (g, s) in layout.iter() {
        m[(g, g)] = real(s.particles() as f64);
    }
    Operator {
        mat: m,
        basis: BasisTag::of_layout(layout),
        label: "N".into(),
    }
}

/// Loss rate prefactor `2 sinh(alpha)` shared by all jump operators.
fn loss_rate(params: &ModelParams) -> Result<f64> {
    if params.alpha < 0.0 {
        return domain("loss-only jump operators need alpha >= 0");
    }
    Ok(2.0 * params.alpha.sinh())
}

/// Site amplitudes `u_r` of the jump operators `L_r = sum_a u_a c_a`,
/// `r = 0..=L`.
fn jump_amplitudes(params: &ModelParams) -> Result<Vec<Vec<(usize, c64)>>> {
    let l = params.sites;
    let s = loss_rate(params)?.sqrt();
    let mut out = Vec::with_capacity(l + 1);
    out.push(vec![(1, real(s))]);
    for j in 1..l {
        out.push(vec![(j, real(s)), (j + 1, c64::new(0.0, s))]);
    }
    out.push(vec![(l, real(s))]);
    Ok(out)
}

fn h0_terms(params: &ModelParams) -> Terms {
    let hop = params.alpha.cosh();
    let mut terms = Terms::default();
    for (a, b) in params.bonds() {
        terms.hops.push((a, b, real(hop)));
        terms.hops.push((b, a, real(hop)));
        if params.u != 0.0 {
            terms.densities.push((a, b, params.u));
        }
    }
    terms
}

/// Hermitian hopping Hamiltonian `H0` and the decay terms `L_r† L_r`,
/// both restricted to the sector of `basis`.
///
/// `H0` hops with amplitude `cosh(alpha)`; the jump operators are
/// `sqrt(2 sinh alpha) (c_j + i c_{j+1})` for `j = 1..L-1` plus
/// `sqrt(2 sinh alpha) c_1` and `sqrt(2 sinh alpha) c_L`. A jump leaves the
/// sector, so only the sector-diagonal products are returned here; see
/// [`build_h0_and_jumps_union`] for the jump matrices themselves.
pub fn build_h0_and_lindblad(params: &ModelParams, basis: &FockBasis) -> Result<(Operator, Vec<Operator>)> {
    params.check_basis(basis)?;
    if params.bc != Boundary::Open {
        return domain("the dissipative construction is defined for open chains only");
    }
    let h0 = Operator::new(
        assemble(basis, &h0_terms(params))?,
        BasisTag::of_basis(basis),
        format!(
            "H0(L={},N={},alpha={},U={})",
            params.sites, params.particles, params.alpha, params.u
        ),
    )?;
    let mut decay = Vec::new();
    for (r, amps) in jump_amplitudes(params)?.into_iter().enumerate() {
        let mut terms = Terms::default();
        for &(a, ua) in &amps {
            for &(b, ub) in &amps {
                terms.hops.push((a, b, ua.conj() * ub));
            }
        }
        decay.push(Operator::new(
            assemble(basis, &terms)?,
            BasisTag::of_basis(basis),
            format!("L{r}^dag L{r}"),
        )?);
    }
    Ok((h0, decay))
}

/// `H0` and the sector-changing jump matrices `L_r` on a stack of sectors.
pub fn build_h0_and_jumps_union(params: &ModelParams, layout: &SectorLayout) -> Result<(Operator, Vec<Operator>)> {
    params.validate()?;
    if params.bc != Boundary::Open {
        return domain("the dissipative construction is defined for open chains only");
    }
    if layout.num_sites() != params.sites {
        return domain("layout and parameters disagree on the site count");
    }
    let tag = BasisTag::of_layout(layout);
    let h0 = Operator::new(assemble(layout, &h0_terms(params))?, tag, "H0")?;
    let d = layout.dim();
    let mut jumps = Vec::new();
    for (r, amps) in jump_amplitudes(params)?.into_iter().enumerate() {
        let mut m = Mat::<c64>::zeros(d, d);
        for (col, s) in layout.iter() {
            for &(a, ua) in &amps {
                if let Some((t, sign)) = s.annihilate(a)? {
                    // Lowest sector is part of the layout, so the image exists.
                    let row = layout
                        .index_of(&t)
                        .ok_or_else(|| Error::Domain("jump left the layout".into()))?;
                    m[(row, col)] += ua * sign;
                }
            }
        }
        jumps.push(Operator::new(m, tag, format!("L{r}"))?);
    }
    Ok((h0, jumps))
}

/// `L† L` for each jump operator.
pub fn jump_products(jumps: &[Operator]) -> Vec<Operator> {
    jumps
        .iter()
        .map(|l| Operator {
            mat: l.mat.adjoint() * &l.mat,
            basis: l.basis,
            label: format!("{}^dag {}", l.label, l.label),
        })
        .collect()
}

/// `H_eff = H0 - (i/2) sum_r L_r† L_r`, given the products `L_r† L_r`.
pub fn build_effective_hamiltonian(h0: &Operator, decay: &[Operator]) -> Result<Operator> {
    let mut m = h0.mat.clone();
    let half_i = c64::new(0.0, 0.5);
    for term in decay {
        if term.basis != h0.basis || term.dim() != h0.dim() {
            return domain(format!(
                "decay term on {} does not match H0 on {}",
                term.basis, h0.basis
            ));
        }
        m -= faer::Scale(half_i) * &term.mat;
    }
    Operator::new(m, h0.basis, format!("Heff[{}]", h0.label))
}

/// Diagonal imaginary-gauge transform with entries
/// `exp(-alpha * sum of occupied site labels)`.
pub fn build_similarity_transform(params: &ModelParams, basis: &FockBasis) -> Result<Operator> {
    params.check_basis(basis)?;
    let d = basis.dim();
    let mut m = Mat::<c64>::zeros(d, d);
    for (k, s) in basis.states().iter().enumerate() {
        m[(k, k)] = real((-params.alpha * s.site_sum() as f64).exp());
    }
    Operator::new(m, BasisTag::of_basis(basis), format!("R(alpha={})", params.alpha))
}

/// Diagonal gauge `diag(rho^(j - (L-1)/2))`, `rho = sqrt((t+g)/(t-g))`, that
/// makes the open single-particle chain Hermitian. Needs `|g| < |t|`.
pub fn build_single_particle_similarity(params: &ModelParams) -> Result<Operator> {
    params.validate()?;
    if params.bc != Boundary::Open {
        return domain("the imaginary gauge removes the asymmetry only for open chains");
    }
    let (up, down) = (params.t + params.g, params.t - params.g);
    if !(up / down > 0.0) {
        return domain(format!(
            "gauge needs (t+g)/(t-g) > 0, got t={}, g={}",
            params.t, params.g
        ));
    }
    let l = params.sites;
    let log_rho = 0.5 * (up / down).ln();
    let centre = (l as f64 - 1.0) / 2.0;
    let m = Mat::<c64>::from_fn(l, l, |i, j| {
        if i == j {
            real((log_rho * (j as f64 - centre)).exp())
        } else {
            c64::ZERO
        }
    });
    Operator::new(
        m,
        BasisTag::Sites { sites: l },
        format!("R(t={},g={})", params.t, params.g),
    )
}

/// Diagonal of `r`, failing if `r` has off-diagonal entries or zero pivots.
pub(crate) fn diagonal_entries(r: &Operator) -> Result<Vec<c64>> {
    let d = r.dim();
    for j in 0..d {
        for i in 0..d {
            if i != j && r.mat[(i, j)] != c64::ZERO {
                return domain("similarity transform must be diagonal");
            }
        }
    }
    let diag: Vec<c64> = (0..d).map(|k| r.mat[(k, k)]).collect();
    if diag
        .iter()
        .any(|z| *z == c64::ZERO || !z.re.is_finite() || !z.im.is_finite())
    {
        return domain("similarity transform is singular");
    }
    Ok(diag)
}

/// `R^-1 H R` for diagonal `R`.
pub fn gauge_transformed(h: &Operator, r: &Operator) -> Result<Operator> {
    if h.basis != r.basis || h.dim() != r.dim() {
        return domain("operator and transform live on different bases");
    }
    let diag = diagonal_entries(r)?;
    let d = h.dim();
    let m = Mat::<c64>::from_fn(d, d, |i, j| h.mat[(i, j)] * diag[j] / diag[i]);
    Operator::new(m, h.basis, format!("R^-1 {} R", h.label))
}
