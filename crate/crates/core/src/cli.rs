//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed or an I/O error occurred,
//! 2 invalid configuration or input, 3 numerical non-convergence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, DomainKind, RunConfig};
use crate::exhaustion::{run_exhaustion, split_experiment, ExhaustionError, ExhaustionRun};
use crate::geometry::Grid;
use crate::operator::{assemble, EllipticCoefficients, OperatorError};
use crate::potential::{halfplane_green, interval_green, GreenOperator, PotentialError};
use crate::solver::{solve_u, SolveError};
use crate::thinness::{
    criterion_integral, necessary_direction_probe, verify_certificate, CertificateVerdict,
    CriterionResult, GreenKernel, SetA, ThinnessError,
};
use crate::verify::{run_all, VerifyOptions};

pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "semilinear",
    version,
    about = "Solvers and checks for Lu = phi(x, u) on grids"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `verify.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    Interval,
    Halfplane,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve Lu = phi(x, u), u = f on the boundary.
    Solve {
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Run the exhaustion u_n = U_{D_n} s and report the triviality verdict.
    Exhaust,
    /// Verify a thinness certificate, or derive one from an exhaustion run.
    ThinCheck {
        #[arg(long)]
        probe: bool,
    },
    /// Criterion integral I_R over the configured truncation radii.
    Criterion,
    /// Discrete Green function of the Laplacian against a closed form.
    Green {
        #[arg(long, value_enum)]
        oracle: Option<OracleArg>,
        #[arg(long)]
        compare: bool,
    },
    /// Randomized invariant suites.
    Verify {
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    NotConverged(String),
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::NotConverged(_) => EXIT_NOT_CONVERGED,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::NotConverged(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        CliError::Invalid(format!("operator: {e}"))
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::Singular(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Potential(p) => p.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ExhaustionError> for CliError {
    fn from(e: ExhaustionError) -> Self {
        match e {
            ExhaustionError::StageNotConverged { .. } => CliError::NotConverged(e.to_string()),
            ExhaustionError::Monotonicity { .. } => CliError::Failed(e.to_string()),
            ExhaustionError::Potential(p) => p.into(),
            ExhaustionError::Solve(s) => s.into(),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ThinnessError> for CliError {
    fn from(e: ThinnessError) -> Self {
        match e {
            ThinnessError::Potential(p) => p.into(),
            ThinnessError::NoSplit(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

/// A CSV table with numeric fields printed to a fixed number of significant digits.
struct Table {
    header: &'static [&'static str],
    body: String,
    precision: usize,
}

enum Field {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Table {
    fn new(header: &'static [&'static str], precision: usize) -> Self {
        Self {
            header,
            body: String::new(),
            precision,
        }
    }

    fn row(&mut self, fields: &[Field]) {
        debug_assert_eq!(fields.len(), self.header.len());
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match f {
                Field::Num(v) => write!(self.body, "{:.*e}", self.precision - 1, v).unwrap(),
                Field::Int(v) => write!(self.body, "{v}").unwrap(),
                Field::Text(s) => self.body.push_str(s),
                Field::Empty => {}
            }
        }
        self.body.push('\n');
    }

    fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Failed(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        let text = format!("{}\n{}", self.header.join(","), self.body);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn bool_field(b: bool) -> Field {
    Field::Text(b.to_string())
}

fn node_table(grid: &Grid, values: &[f64], name: &'static str, precision: usize) -> Table {
    let header: &'static [&'static str] = match name {
        "u" => &["node", "x", "y", "u"],
        _ => &["node", "x", "y", "value"],
    };
    let mut t = Table::new(header, precision);
    for (k, &v) in values.iter().enumerate() {
        let p = grid.position(k);
        t.row(&[
            Field::Int(k),
            Field::Num(p[0]),
            Field::Num(p[1]),
            Field::Num(v),
        ]);
    }
    t
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
}

impl Context {
    fn precision(&self) -> usize {
        self.cfg.output.precision
    }

    fn save(&self, table: &Table, name: &str) -> Result<(), CliError> {
        let path = table.write(&self.out, name)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn green_operator(
        &self,
        grid: Arc<Grid>,
        coeffs: &EllipticCoefficients,
    ) -> Result<GreenOperator, CliError> {
        let op = assemble(grid, coeffs)?;
        if !op.m_matrix() {
            eprintln!(
                "warning: discretization is not an M-matrix; comparison results are not certified"
            );
        }
        Ok(GreenOperator::new(Arc::new(op))?)
    }
}

fn solve_cmd(
    ctx: &mut Context,
    scheme: Option<String>,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> Result<(), CliError> {
    let s = &mut ctx.cfg.solver;
    if let Some(v) = scheme {
        s.scheme = v;
    }
    if let Some(v) = tol {
        s.tol = v;
    }
    if let Some(v) = max_iter {
        s.max_iter = v;
    }
    let opts = ctx.cfg.solver.options()?;
    let grid = ctx.cfg.domain.grid()?;
    let coeffs = ctx.cfg.operator.coefficients()?;
    let gop = ctx.green_operator(grid.clone(), &coeffs)?;
    let phi = ctx.cfg.nonlinearity.phi(grid.dim())?;
    let f = ctx.cfg.nonlinearity.boundary_f(&grid)?;
    let (u, rep) = solve_u(&gop, &f, &phi, &opts)?;
    ctx.save(
        &node_table(&grid, u.values(), "u", ctx.precision()),
        "solution.csv",
    )?;
    let mut log = Table::new(
        &["iteration", "envelope_gap", "identity_residual"],
        ctx.precision(),
    );
    for (i, r) in rep.residual_history.iter().enumerate() {
        let gap = rep
            .sandwich_gap_history
            .get(i)
            .map_or(Field::Empty, |&g| Field::Num(g));
        log.row(&[Field::Int(i), gap, Field::Num(*r)]);
    }
    ctx.save(&log, "convergence.csv")?;
    if let Some((hi, lo)) = &rep.envelopes {
        ctx.save(
            &node_table(&grid, hi.values(), "value", ctx.precision()),
            "upper_envelope.csv",
        )?;
        ctx.save(
            &node_table(&grid, lo.values(), "value", ctx.precision()),
            "lower_envelope.csv",
        )?;
    }
    println!(
        "scheme: {}\nstatus: {:?}\niterations: {}\nidentity_residual: {:e}",
        rep.scheme, rep.status, rep.iterations, rep.final_identity_residual
    );
    if !rep.converged() {
        return Err(CliError::NotConverged(format!(
            "solve ended with status {:?}",
            rep.status
        )));
    }
    Ok(())
}

fn exhaustion_run(ctx: &Context) -> Result<ExhaustionRun, CliError> {
    let exh = ctx.cfg.domain.exhaustion()?;
    let coeffs = ctx.cfg.operator.coefficients()?;
    let phi = ctx.cfg.nonlinearity.phi(exh.stages()[0].dim())?;
    let s = ctx.cfg.nonlinearity.supersolution()?;
    let opts = ctx.cfg.solver.exhaustion_options()?;
    Ok(run_exhaustion(&exh, &coeffs, &phi, &s, &opts)?)
}

fn stage_table(run: &ExhaustionRun, precision: usize) -> Table {
    let mut t = Table::new(
        &[
            "stage",
            "radius",
            "interior_nodes",
            "anchor_value",
            "identity_residual",
            "min_u",
            "max_u",
            "monotone_excess",
            "iterations",
        ],
        precision,
    );
    for (n, st) in run.stages.iter().enumerate() {
        t.row(&[
            Field::Int(n),
            Field::Num(run.exhaustion.radii()[n]),
            Field::Int(st.op.grid().interior_count()),
            Field::Num(run.anchor_values[n]),
            Field::Num(st.report.final_identity_residual),
            Field::Num(st.u.min()),
            Field::Num(st.u.max()),
            Field::Num(st.monotone_excess),
            Field::Int(st.report.iterations),
        ]);
    }
    t
}

fn exhaust_cmd(ctx: &Context) -> Result<(), CliError> {
    let dim = ctx.cfg.domain.dim();
    if let (Some(phi2), Some(mode)) = (
        ctx.cfg.nonlinearity.phi2(dim)?,
        ctx.cfg.nonlinearity.split_mode(),
    ) {
        let exh = ctx.cfg.domain.exhaustion()?;
        let coeffs = ctx.cfg.operator.coefficients()?;
        let phi1 = ctx.cfg.nonlinearity.phi(dim)?;
        let s = ctx.cfg.nonlinearity.supersolution()?;
        let opts = ctx.cfg.solver.exhaustion_options()?;
        let rep = split_experiment(
            &exh,
            &coeffs,
            &phi1,
            &phi2,
            &s,
            mode,
            &opts,
            ctx.cfg.solver.execution(),
        )?;
        let mut t = Table::new(
            &["stage", "anchor_phi1", "anchor_phi2", "anchor_sum"],
            ctx.precision(),
        );
        for n in 0..rep.run1.anchor_values.len() {
            let sum = rep
                .sum_run
                .as_ref()
                .map_or(Field::Empty, |r| Field::Num(r.anchor_values[n]));
            t.row(&[
                Field::Int(n),
                Field::Num(rep.run1.anchor_values[n]),
                Field::Num(rep.run2.anchor_values[n]),
                sum,
            ]);
        }
        ctx.save(&t, "split.csv")?;
        println!(
            "split_mode: {}\nmax_violation: {:e}",
            rep.mode, rep.max_violation
        );
        println!(
            "verdict_phi1: {}\nverdict_phi2: {}",
            rep.run1.verdict, rep.run2.verdict
        );
        if let Some(r) = &rep.sum_run {
            println!("verdict_sum: {}", r.verdict);
        }
        println!("split: {}", if rep.passed { "pass" } else { "fail" });
        return if rep.passed {
            Ok(())
        } else {
            Err(CliError::Failed("split order violated".into()))
        };
    }
    let run = exhaustion_run(ctx)?;
    ctx.save(&stage_table(&run, ctx.precision()), "stages.csv")?;
    let last = run.final_stage();
    ctx.save(
        &node_table(last.op.grid(), last.u.values(), "u", ctx.precision()),
        "limit.csv",
    )?;
    println!(
        "decay_eps: {:e}\nnontrivial_eps: {:e}",
        run.decay_eps, run.nontrivial_eps
    );
    println!("verdict: {}", run.verdict);
    Ok(())
}

fn certificate_row(t: &mut Table, v: &CertificateVerdict) {
    t.row(&[
        Field::Int(v.nodes_in_a),
        Field::Num(v.superharmonic.max_ls),
        Field::Num(v.min_over_grid),
        Field::Num(v.min_on_a),
        bool_field(v.superharmonic.passed),
        bool_field(v.nonnegative),
        bool_field(v.dominates_on_a),
        bool_field(v.below_one),
        bool_field(v.passed),
    ]);
}

const CERTIFICATE_HEADER: &[&str] = &[
    "nodes_in_a",
    "max_ls",
    "min_s",
    "min_s_on_a",
    "superharmonic",
    "nonnegative",
    "dominates_on_a",
    "below_one",
    "passed",
];

fn criterion_table(r: &CriterionResult, precision: usize) -> Table {
    let mut t = Table::new(&["radius", "value", "increment", "ratio"], precision);
    for (i, (&radius, &value)) in r.radii.iter().zip(&r.values).enumerate() {
        let inc = if i == 0 {
            Field::Empty
        } else {
            Field::Num(r.increments[i - 1])
        };
        let ratio = if i < 2 {
            Field::Empty
        } else {
            Field::Num(r.ratios[i - 2])
        };
        t.row(&[Field::Num(radius), Field::Num(value), inc, ratio]);
    }
    t
}

fn thin_check_cmd(ctx: &Context, probe: bool) -> Result<(), CliError> {
    let th = &ctx.cfg.thinness;
    let mut table = Table::new(CERTIFICATE_HEADER, ctx.precision());
    let passed = if probe || th.probe {
        let run = exhaustion_run(ctx)?;
        let pr = necessary_direction_probe(&run, None, None, th.margin)?;
        certificate_row(&mut table, &pr.verdict);
        let phi = ctx.cfg.nonlinearity.phi(ctx.cfg.domain.dim())?;
        let opts = th.criterion_options(ctx.cfg.solver.execution())?;
        let crit = criterion_integral(th.kernel(), &phi, pr.c0, &pr.certificate.set_a, &opts)?;
        ctx.save(
            &criterion_table(&crit, ctx.precision()),
            "probe_criterion.csv",
        )?;
        let bounded = crit.values.iter().all(|&v| v <= pr.c);
        println!(
            "c: {}\nc0: {}\ncriterion_verdict: {}",
            pr.c, pr.c0, crit.verdict
        );
        println!(
            "criterion_below_c: {}",
            if bounded { "pass" } else { "fail" }
        );
        pr.verdict.passed && bounded
    } else {
        let grid = ctx.cfg.domain.grid()?;
        let coeffs = ctx.cfg.operator.coefficients()?;
        let op = assemble(grid, &coeffs)?;
        let v = verify_certificate(&op, &th.certificate()?, th.tol)?;
        certificate_row(&mut table, &v);
        v.passed
    };
    ctx.save(&table, "certificate.csv")?;
    println!("certificate: {}", if passed { "pass" } else { "fail" });
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed("certificate check failed".into()))
    }
}

fn criterion_cmd(ctx: &Context) -> Result<(), CliError> {
    let th = &ctx.cfg.thinness;
    let dim = match th.kernel() {
        GreenKernel::HalfPlane => 2,
        GreenKernel::Interval { .. } => 1,
    };
    let phi = ctx.cfg.nonlinearity.phi(dim)?;
    let set_a: SetA = th.set_a()?;
    let opts = th.criterion_options(ctx.cfg.solver.execution())?;
    let r = criterion_integral(th.kernel(), &phi, th.c0, &set_a, &opts)?;
    ctx.save(&criterion_table(&r, ctx.precision()), "criterion.csv")?;
    println!("verdict: {}", r.verdict);
    Ok(())
}

fn green_cmd(ctx: &Context, oracle: Option<OracleArg>, compare: bool) -> Result<(), CliError> {
    let oracle = oracle.unwrap_or(match ctx.cfg.green.oracle {
        crate::config::OracleSetting::Interval => OracleArg::Interval,
        crate::config::OracleSetting::Halfplane => OracleArg::Halfplane,
    });
    let grid = ctx.cfg.domain.grid()?;
    match oracle {
        OracleArg::Interval if grid.dim() != 1 => {
            return Err(CliError::Invalid(
                "`domain`: the interval oracle needs a 1D domain".into(),
            ))
        }
        OracleArg::Halfplane if ctx.cfg.domain.kind != DomainKind::HalfPlane => {
            return Err(CliError::Invalid(
                "`domain.kind`: the halfplane oracle needs a half_plane domain".into(),
            ))
        }
        _ => {}
    }
    let source = ctx.cfg.green.source()?;
    let node = grid
        .node_at_point(source)
        .filter(|&k| grid.is_interior(k))
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "`green.source`: {source:?} is not an interior node"
            ))
        })?;
    let gop = ctx.green_operator(grid.clone(), &EllipticCoefficients::laplacian())?;
    let col = gop.green_column(node)?;
    let [(a, b), (bottom, _)] = grid.bbox();
    let mut t = if compare {
        Table::new(
            &["node", "x", "y", "discrete", "analytic", "abs_error"],
            ctx.precision(),
        )
    } else {
        Table::new(&["node", "x", "y", "discrete"], ctx.precision())
    };
    let mut max_err = 0.0f64;
    for k in 0..grid.node_count() {
        let p = grid.position(k);
        let d = col.values()[k];
        if !compare {
            t.row(&[
                Field::Int(k),
                Field::Num(p[0]),
                Field::Num(p[1]),
                Field::Num(d),
            ]);
            continue;
        }
        let exact = match oracle {
            OracleArg::Interval => interval_green(p[0], source[0], (a, b)).ok(),
            OracleArg::Halfplane => {
                let shift = |q: [f64; 2]| [q[0], q[1] - bottom];
                if k == node || !grid.is_interior(k) {
                    None
                } else {
                    halfplane_green(shift(p), shift(source)).ok()
                }
            }
        };
        let (an, err) = match exact {
            Some(e) => {
                max_err = max_err.max((d - e).abs());
                (Field::Num(e), Field::Num((d - e).abs()))
            }
            None => (Field::Empty, Field::Empty),
        };
        t.row(&[
            Field::Int(k),
            Field::Num(p[0]),
            Field::Num(p[1]),
            Field::Num(d),
            an,
            err,
        ]);
    }
    ctx.save(&t, "green.csv")?;
    if compare {
        println!("max_abs_error: {max_err:e}");
    }
    Ok(())
}

fn verify_cmd(ctx: &Context, trials: Option<usize>) -> Result<(), CliError> {
    let v = &ctx.cfg.verify;
    let opts = VerifyOptions {
        trials: trials.unwrap_or(v.trials),
        seed: v.seed,
        tol: v.tol,
        exec: ctx.cfg.solver.execution(),
    };
    let results = run_all(&opts);
    let mut t = Table::new(&["suite", "trials", "failures", "worst"], ctx.precision());
    println!("{:<24} {:>7} {:>9}  result", "suite", "trials", "failures");
    for r in &results {
        t.row(&[
            Field::Text(r.name.into()),
            Field::Int(r.trials),
            Field::Int(r.failures),
            Field::Num(r.worst),
        ]);
        println!(
            "{:<24} {:>7} {:>9}  {}",
            r.name,
            r.trials,
            r.failures,
            if r.passed() { "pass" } else { "FAIL" }
        );
        if let Some(f) = &r.first_failure {
            println!("    {f}");
        }
    }
    ctx.save(&t, "verify.csv")?;
    if results.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(CliError::Failed("verification failures".into()))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
    }
    let out = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.output.dir.clone());
    let mut ctx = Context { cfg, out };
    match cli.command {
        Command::Solve {
            scheme,
            tol,
            max_iter,
        } => solve_cmd(&mut ctx, scheme, tol, max_iter),
        Command::Exhaust => exhaust_cmd(&ctx),
        Command::ThinCheck { probe } => thin_check_cmd(&ctx, probe),
        Command::Criterion => criterion_cmd(&ctx),
        Command::Green { oracle, compare } => green_cmd(&ctx, oracle, compare),
        Command::Verify { trials } => verify_cmd(&ctx, trials),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_uses_seventeen_significant_digits() {
        let mut t = Table::new(&["a", "b", "c"], 17);
        t.row(&[Field::Num(0.1), Field::Int(3), Field::Empty]);
        assert_eq!(t.body, "1.0000000000000001e-1,3,\n");
        let back: f64 = t.body.split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            CliError::from(ConfigError::Parse("x".into())).code(),
            EXIT_INVALID
        );
        let e = ExhaustionError::StageNotConverged {
            stage: 1,
            status: crate::solver::SolveStatus::MaxIter,
            residual: 1.0,
        };
        assert_eq!(CliError::from(e).code(), EXIT_NOT_CONVERGED);
        assert_eq!(
            CliError::from(PotentialError::Singular("x".into())).code(),
            EXIT_FAILED
        );
    }

    #[test]
    fn bad_arguments_exit_invalid() {
        assert_eq!(run(["semilinear", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run(["semilinear", "--help"]), 0);
    }
}
