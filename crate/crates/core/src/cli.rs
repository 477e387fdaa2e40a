//! Command line front end: one subcommand per experiment, tables as CSV or
//! JSON, reports as JSON.
//!
//! Exit status is 0 on success, 1 when a checked property is violated and 2
//! for usage, parameter or I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::criterion::{detect_skin_effect, kappa_sweep, DetectOptions, LocalizationReport, OrderChoice, XiChoice};
use crate::dynamics::{effective_dynamics, survival_oracle, time_grid, TraceSummary};
use crate::error::{Error, Result};
use crate::exec::{configure_threads, Execution};
use crate::fockspace::enumerate_basis;
use crate::io::{write_csv, write_json, write_matrix};
use crate::models::{
    build_hatano_nelson_single, build_interacting_hn, build_similarity_transform, build_single_particle_similarity,
    Boundary, ModelParams, Operator,
};
use crate::properties::{hermitian_bound_suite, SuiteReport};
use crate::sampling::{case_rng, random_unit_vector};
use crate::spectral::{diagonalize, eigenvalues, EigenSystem, Method};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "FOCKSKIN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fock-skin", version, about = "Fock-space skin effect experiments")]
pub struct Cli {
    /// Worker threads for sweeps and dense kernels (1 = fully sequential).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectra of the interacting chain under open and periodic boundaries.
    Spectrum(SpectrumArgs),
    /// Lambda-localization scan of the eigenstates.
    Criterion(CriterionArgs),
    /// Condition numbers at half filling over a range of chain lengths.
    Kappa(KappaArgs),
    /// Propagator norm, envelope and survival probability of the lossy chain.
    Dynamics(DynamicsArgs),
    /// Lindblad-versus-effective-Hamiltonian check and the Hermitian suite.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Number of sites.
    #[arg(long = "L", default_value_t = 12)]
    pub sites: usize,
    /// Particle number [default: L/2].
    #[arg(long = "N")]
    pub particles: Option<usize>,
    /// Hopping asymmetry.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Nearest-neighbour interaction.
    #[arg(long = "U", default_value_t = -1.0, allow_negative_numbers = true)]
    pub u: f64,
    /// Drop the interaction on the wrap-around bond of periodic chains.
    #[arg(long)]
    pub no_boundary_interaction: bool,
}

impl ModelArgs {
    fn params(&self, bc: Boundary) -> Result<ModelParams> {
        let p = ModelParams {
            boundary_interaction: !self.no_boundary_interaction,
            ..ModelParams::interacting(
                self.sites,
                self.particles.unwrap_or(self.sites / 2),
                self.alpha,
                self.u,
                bc,
            )
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; `-` or absent writes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write the open-chain Hamiltonian in the matrix file format.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

/// `auto` or a fixed localization length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XiArg {
    Auto,
    Fixed(usize),
}

impl FromStr for XiArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(XiArg::Auto),
            _ => s
                .parse()
                .map(XiArg::Fixed)
                .map_err(|_| format!("expected 'auto' or an integer, got '{s}'")),
        }
    }
}

/// Eigenstate index (ascending energy) or `max` for the most concentrated one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceArg {
    Index(usize),
    MostConcentrated,
}

impl FromStr for ReferenceArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max" => Ok(ReferenceArg::MostConcentrated),
            _ => s
                .parse()
                .map(ReferenceArg::Index)
                .map_err(|_| format!("expected 'max' or an eigenstate index, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Interacting fermionic chain on an N-particle sector.
    Interacting,
    /// Single-particle chain with hoppings t+g and t-g.
    Single,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ModelKind::Interacting)]
    pub model_kind: ModelKind,
    /// Symmetric hopping of the single-particle chain.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Asymmetric hopping of the single-particle chain.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub g: f64,
    /// Boundary condition: open or periodic.
    #[arg(long, default_value = "open")]
    pub bc: Boundary,
    /// Localization length, or `auto` to scan a grid.
    #[arg(long, default_value = "auto")]
    pub xi: XiArg,
    /// Reference eigenstate that orders the basis.
    #[arg(long, default_value = "0")]
    pub reference: ReferenceArg,
    /// Report file (JSON); `-` or absent writes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Amplitude profiles of the selected states.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Exit with status 1 unless the verdict equals this value.
    #[arg(long)]
    pub expect: Option<bool>,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Shortest chain.
    #[arg(long = "L-min", default_value_t = 4)]
    pub l_min: usize,
    /// Longest chain; only even lengths are used.
    #[arg(long = "L", default_value_t = 12)]
    pub l_max: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long = "U", default_value_t = -1.0, allow_negative_numbers = true)]
    pub u: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 50.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Seed of the random initial state used for the survival probability.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Summary file (JSON) with kappa, fitted slope and relaxation times.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long = "L", default_value_t = 4)]
    pub sites: usize,
    #[arg(long = "N")]
    pub particles: Option<usize>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long = "U", default_value_t = -1.0, allow_negative_numbers = true)]
    pub u: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random initial states for the Lindblad comparison.
    #[arg(long, default_value_t = 3)]
    pub states: usize,
    /// Random Hermitian matrices in the property suite.
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    /// Negative control: also demand a skin-effect verdict from the
    /// Hermitian (alpha = 0) chain, which must fail.
    #[arg(long)]
    pub inject_violation: bool,
    /// Report file (JSON); `-` or absent writes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Maximum deviation accepted by the Lindblad comparison.
pub const ORACLE_TOL: f64 = 1e-6;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(io::stdout().lock())),
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p)?))),
    }
}

fn write_table<T: Serialize>(path: Option<&Path>, format: Format, rows: &[T]) -> Result<()> {
    let w = sink(path)?;
    match format {
        Format::Csv => write_csv(w, rows),
        Format::Json => write_json(w, &rows),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub bc: Boundary,
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

fn interacting_operator(p: &ModelParams) -> Result<(Operator, Option<Operator>)> {
    let basis = enumerate_basis(p.sites, p.particles)?;
    let h = build_interacting_hn(p, &basis)?;
    let r = match p.bc {
        Boundary::Open => Some(build_similarity_transform(p, &basis)?),
        Boundary::Periodic => None,
    };
    Ok((h, r))
}

fn method(r: &Option<Operator>) -> Method<'_> {
    r.as_ref().map_or(Method::Direct, Method::Gauge)
}

/// Eigenvalues of the open (gauge path) and periodic (direct) chains.
pub fn spectrum_rows(model: &ModelArgs) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for bc in [Boundary::Open, Boundary::Periodic] {
        let p = model.params(bc)?;
        let (h, r) = interacting_operator(&p)?;
        for (index, e) in eigenvalues(&h, method(&r))?.into_iter().enumerate() {
            rows.push(SpectrumRow {
                bc,
                index,
                re: e.re,
                im: e.im,
            });
        }
    }
    Ok(rows)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<()> {
    if let Some(path) = &args.dump_matrix {
        let (h, _) = interacting_operator(&args.model.params(Boundary::Open)?)?;
        write_matrix(path, &h)?;
    }
    let rows = spectrum_rows(&args.model)?;
    write_table(args.output.out.as_deref(), args.output.format, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub state: usize,
    pub slot: usize,
    pub basis_index: usize,
    pub amplitude: f64,
}

fn criterion_eigensystem(args: &CriterionArgs) -> Result<EigenSystem> {
    match args.model_kind {
        ModelKind::Interacting => {
            let p = args.model.params(args.bc)?;
            let (h, r) = interacting_operator(&p)?;
            diagonalize(&h, method(&r))
        }
        ModelKind::Single => {
            let p = ModelParams::single_particle(args.model.sites, args.t, args.g, args.bc);
            let h = build_hatano_nelson_single(&p)?;
            let r = match args.bc {
                Boundary::Open if (args.t + args.g) / (args.t - args.g) > 0.0 => {
                    Some(build_single_particle_similarity(&p)?)
                }
                _ => None,
            };
            diagonalize(&h, method(&r))
        }
    }
}

/// Runs the localization scan described by `args`.
pub fn criterion_report(args: &CriterionArgs, exec: Execution) -> Result<(LocalizationReport, EigenSystem)> {
    let eig = criterion_eigensystem(args)?;
    let opts = DetectOptions {
        xi: match args.xi {
            XiArg::Auto => XiChoice::Auto(None),
            XiArg::Fixed(xi) => XiChoice::Fixed(xi),
        },
        order: match args.reference {
            ReferenceArg::Index(m) => OrderChoice::Reference(m),
            ReferenceArg::MostConcentrated => OrderChoice::MostConcentrated,
        },
        lambda: None,
        exec,
    };
    Ok((detect_skin_effect(&eig, &opts)?, eig))
}

fn cmd_criterion(args: &CriterionArgs, exec: Execution) -> Result<Status> {
    let (report, eig) = criterion_report(args, exec)?;
    if let Some(path) = &args.profiles {
        let mut selected = report.selected.clone();
        selected.sort_unstable();
        let rows: Vec<ProfileRow> = selected
            .iter()
            .flat_map(|&m| {
                let eig = &eig;
                report.order.iter().enumerate().map(move |(slot, &n)| ProfileRow {
                    state: m,
                    slot: slot + 1,
                    basis_index: n,
                    amplitude: eig.v[(n, m)].norm(),
                })
            })
            .collect();
        write_table(Some(path), args.format, &rows)?;
    }
    write_json(sink(args.out.as_deref())?, &report)?;
    eprintln!(
        "verdict={} xi={} D={} localized={} distinct={} Lambda_xi={:.6}",
        report.verdict,
        report.xi,
        report.dim,
        report.passing.len(),
        report.distinct_count,
        report.lambda_xi
    );
    match args.expect {
        Some(want) if want != report.verdict => {
            eprintln!("expected verdict {want}, got {}", report.verdict);
            Ok(Status::Violation)
        }
        _ => Ok(Status::Ok),
    }
}

fn cmd_kappa(args: &KappaArgs, exec: Execution) -> Result<()> {
    if args.l_min > args.l_max {
        return Err(Error::Domain(format!("empty range {}..={}", args.l_min, args.l_max)));
    }
    let ls: Vec<usize> = (args.l_min..=args.l_max).filter(|l| l % 2 == 0 && *l >= 2).collect();
    if ls.is_empty() {
        return Err(Error::Domain("no even chain length in range".into()));
    }
    let rows = kappa_sweep(&ls, args.alpha, args.u, exec)?;
    write_table(args.output.out.as_deref(), args.output.format, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub params: ModelParams,
    pub seed: u64,
    /// `-2 N sinh(alpha)`, the asymptotic decay rate of the norm.
    pub expected_rate: f64,
    #[serde(flatten)]
    pub trace: TraceSummary,
}

fn cmd_dynamics(args: &DynamicsArgs, exec: Execution) -> Result<()> {
    let p = args.model.params(Boundary::Open)?;
    let times = time_grid(args.tmax, args.steps)?;
    let dim = enumerate_basis(p.sites, p.particles)?.dim();
    let psi = random_unit_vector(&mut case_rng(args.seed, 0), dim);
    let trace = effective_dynamics(&p, &times, Some(&psi), exec)?;
    write_table(args.output.out.as_deref(), args.output.format, &trace.rows())?;
    let summary = DynamicsSummary {
        params: p,
        seed: args.seed,
        expected_rate: -2.0 * p.particles as f64 * p.alpha.sinh(),
        trace: trace.summary(),
    };
    if let Some(path) = &args.summary {
        write_json(sink(Some(path))?, &summary)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateComparison {
    pub state: usize,
    pub max_deviation: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub alpha: f64,
    pub expected_verdict: bool,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: ModelParams,
    pub seed: u64,
    pub tolerance: f64,
    pub states: Vec<StateComparison>,
    pub hermitian_bound: SuiteReport,
    pub negative_control: Option<NegativeControl>,
    pub violations: Vec<String>,
    pub passed: bool,
}

/// Runs the checks behind the `oracle` subcommand.
pub fn oracle_report(args: &OracleArgs, exec: Execution) -> Result<OracleReport> {
    if args.sites > 4 {
        return Err(Error::Domain(format!(
            "the Lindblad oracle is limited to L <= 4, got {}",
            args.sites
        )));
    }
    let p = ModelParams::interacting(
        args.sites,
        args.particles.unwrap_or(args.sites / 2),
        args.alpha,
        args.u,
        Boundary::Open,
    );
    p.validate()?;
    let times = time_grid(args.tmax, args.steps)?;
    let dim = enumerate_basis(p.sites, p.particles)?.dim();
    let mut violations = Vec::new();
    let mut states = Vec::new();
    for k in 0..args.states {
        let psi = random_unit_vector(&mut case_rng(args.seed, k as u64), dim);
        let cmp = survival_oracle(&p, &psi, &times)?;
        if !(cmp.max_deviation <= ORACLE_TOL) {
            violations.push(format!(
                "state {k}: projected Lindblad weight deviates from the survival probability by {:e}",
                cmp.max_deviation
            ));
        }
        states.push(StateComparison {
            state: k,
            max_deviation: cmp.max_deviation,
            dt: cmp.dt,
        });
    }
    let hermitian_bound = hermitian_bound_suite(args.seed, args.cases, exec)?;
    violations.extend(hermitian_bound.violations.iter().cloned());
    let negative_control = if args.inject_violation {
        let hp = ModelParams { alpha: 0.0, ..p };
        let (h, r) = interacting_operator(&hp)?;
        let eig = diagonalize(&h, method(&r))?;
        let verdict = detect_skin_effect(
            &eig,
            &DetectOptions {
                exec,
                ..DetectOptions::default()
            },
        )?
        .verdict;
        if !verdict {
            violations.push("negative control: Hermitian chain was expected to show the skin effect".into());
        }
        Some(NegativeControl {
            alpha: 0.0,
            expected_verdict: true,
            verdict,
        })
    } else {
        None
    };
    Ok(OracleReport {
        params: p,
        seed: args.seed,
        tolerance: ORACLE_TOL,
        states,
        hermitian_bound,
        negative_control,
        passed: violations.is_empty(),
        violations,
    })
}

fn cmd_oracle(args: &OracleArgs, exec: Execution) -> Result<Status> {
    let report = oracle_report(args, exec)?;
    write_json(sink(args.out.as_deref())?, &report)?;
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    Ok(if report.passed { Status::Ok } else { Status::Violation })
}

/// Result of a successfully executed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violation,
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Status> {
    configure_threads(cli.threads);
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    };
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a).map(|_| Status::Ok),
        Command::Criterion(a) => cmd_criterion(a, exec),
        Command::Kappa(a) => cmd_kappa(a, exec).map(|_| Status::Ok),
        Command::Dynamics(a) => cmd_dynamics(a, exec).map(|_| Status::Ok),
        Command::Oracle(a) => cmd_oracle(a, exec),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(Error::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
