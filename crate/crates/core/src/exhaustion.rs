//! Limits over nested truncations: `u = lim U_{D_n}^φ s` for a supersolution
//! `s`, harmonic majorants, the correspondence `h = u + G φ(·,u)`, and the
//! splitting experiments for `φ`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError};
use crate::field::{sup_norm, ScalarField};
use crate::geometry::{restrict, Exhaustion, GeometryError, Point};
use crate::nonlinearity::{Nonlinearity, NonlinearityError};
use crate::operator::{
    assemble, check_superharmonic, DiscreteOperator, EllipticCoefficients, OperatorError,
    SuperharmonicReport,
};
use crate::par::{map_indexed, Execution};
use crate::potential::{GreenOperator, PotentialError};
use crate::solver::{solve_u, Scheme, SolveError, SolveOptions, SolveReport, SolveStatus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExhaustionError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("supersolution: {0}")]
    Supersolution(String),
    #[error("stage {stage}: solve ended with status {status:?} (identity residual {residual:e})")]
    StageNotConverged {
        stage: usize,
        status: SolveStatus,
        residual: f64,
    },
    #[error("stage {stage}: u_n exceeds u_(n-1) by {excess:e} at node {node}")]
    Monotonicity {
        stage: usize,
        node: usize,
        excess: f64,
    },
    #[error("data is not harmonic: residual {residual:e} at node {node}")]
    NotHarmonic { node: usize, residual: f64 },
    #[error("data must be nonnegative, found {value} at node {node}")]
    NegativeData { node: usize, value: f64 },
}

/// Supersolution data `s`, used as boundary values on every stage.
#[derive(Clone)]
pub enum Supersolution {
    Constant(f64),
    Expr(Arc<Expr>),
    Func(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Supersolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Supersolution::Constant(c) => write!(f, "Constant({c})"),
            Supersolution::Expr(e) => write!(f, "Expr({e})"),
            Supersolution::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl Supersolution {
    pub fn func(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Supersolution::Func(Arc::new(f))
    }

    pub fn at(&self, p: Point) -> Result<f64, ExprError> {
        match self {
            Supersolution::Constant(c) => Ok(*c),
            Supersolution::Expr(e) => e.eval(&Bindings::xy(p[0], p[1])),
            Supersolution::Func(f) => Ok(f(p)),
        }
    }

    pub fn on(&self, grid: &crate::geometry::Grid) -> Result<ScalarField, ExhaustionError> {
        ScalarField::try_from_fn(grid, |p| self.at(p))
            .map_err(|e| ExhaustionError::Supersolution(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrivialityVerdict {
    Nontrivial,
    TrivialTrend,
    Undecided,
}

impl fmt::Display for TrivialityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrivialityVerdict::Nontrivial => "nontrivial",
            TrivialityVerdict::TrivialTrend => "trivial_trend",
            TrivialityVerdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustionOptions {
    pub solve: SolveOptions,
    /// Allowed growth `u_n - u_(n-1)` on shared nodes.
    pub monotone_tol: f64,
    /// Allowed `max L s` in the superharmonicity check.
    pub superharmonic_tol: f64,
    pub window: usize,
    /// `decay_eps = decay_factor * (first anchor value)`.
    pub decay_factor: f64,
    /// `nontrivial_eps = nontrivial_factor * sup s`.
    pub nontrivial_factor: f64,
    /// Largest ratio of successive anchor increments counted as stabilizing.
    pub stabilize_ratio: f64,
}

impl Default for ExhaustionOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default().with_scheme(Scheme::Newton),
            monotone_tol: 1e-9,
            superharmonic_tol: 1e-9,
            window: 3,
            decay_factor: 1e-3,
            nontrivial_factor: 0.05,
            stabilize_ratio: 0.6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub op: Arc<DiscreteOperator>,
    pub gop: GreenOperator,
    pub s: ScalarField,
    pub u: ScalarField,
    /// `H_{D_n} s`.
    pub h: ScalarField,
    pub report: SolveReport,
    pub superharmonic: SuperharmonicReport,
    /// `max (u_n - u_(n-1))` over the nodes of stage `n-1`; zero for stage 0.
    pub monotone_excess: f64,
}

#[derive(Debug, Clone)]
pub struct ExhaustionRun {
    pub exhaustion: Exhaustion,
    pub stages: Vec<StageResult>,
    pub anchor_values: Vec<f64>,
    pub verdict: TrivialityVerdict,
    pub decay_eps: f64,
    pub nontrivial_eps: f64,
    pub sup_s: f64,
}

impl ExhaustionRun {
    pub fn limit_estimate(&self) -> &ScalarField {
        &self.stages.last().expect("at least two stages").u
    }

    pub fn final_stage(&self) -> &StageResult {
        self.stages.last().expect("at least two stages")
    }

    pub fn identity_residuals(&self) -> Vec<f64> {
        self.stages
            .iter()
            .map(|s| s.report.final_identity_residual)
            .collect()
    }
}

fn verdict(
    values: &[f64],
    decay_eps: f64,
    nontrivial_eps: f64,
    opts: &ExhaustionOptions,
) -> TrivialityVerdict {
    let w = opts.window.max(3);
    if values.len() < w {
        return TrivialityVerdict::Undecided;
    }
    let tail = &values[values.len() - w..];
    let last = *tail.last().unwrap();
    if tail.windows(2).all(|p| p[1] < p[0]) && last < decay_eps {
        return TrivialityVerdict::TrivialTrend;
    }
    if tail.iter().all(|&v| v >= nontrivial_eps) {
        let d_last = (tail[w - 1] - tail[w - 2]).abs();
        let d_prev = (tail[w - 2] - tail[w - 3]).abs();
        if d_last <= opts.stabilize_ratio * d_prev || d_last <= 1e-9 * last.abs().max(1.0) {
            return TrivialityVerdict::Nontrivial;
        }
    }
    TrivialityVerdict::Undecided
}

/// Solves `Lu = φ(·,u)` on each stage with boundary data `s` and checks that
/// the stage solutions decrease.
pub fn run_exhaustion(
    exh: &Exhaustion,
    coeffs: &EllipticCoefficients,
    phi: &Nonlinearity,
    s: &Supersolution,
    opts: &ExhaustionOptions,
) -> Result<ExhaustionRun, ExhaustionError> {
    let mut stages: Vec<StageResult> = Vec::with_capacity(exh.stages().len());
    for (n, grid) in exh.stages().iter().enumerate() {
        let op = Arc::new(assemble(grid.clone(), coeffs)?);
        let s_field = s.on(grid)?;
        if let Some(k) = (0..grid.node_count()).find(|&k| !(s_field.values()[k] >= 0.0)) {
            return Err(ExhaustionError::NegativeData {
                node: k,
                value: s_field.values()[k],
            });
        }
        let sh = check_superharmonic(&op, &s_field, opts.superharmonic_tol)?;
        if !sh.passed {
            return Err(ExhaustionError::Supersolution(format!(
                "stage {n}: L s = {:e} > 0 at node {:?}",
                sh.max_ls, sh.worst_node
            )));
        }
        let gop = GreenOperator::new(op.clone())?;
        let (u, report) = solve_u(&gop, &s_field, phi, &opts.solve)?;
        if !report.converged() {
            return Err(ExhaustionError::StageNotConverged {
                stage: n,
                status: report.status,
                residual: report.final_identity_residual,
            });
        }
        let h = gop.harmonic_extension(&s_field)?;
        let mut monotone_excess = 0.0f64;
        if let Some(prev) = stages.last() {
            let prev_grid = prev.op.grid();
            let here = restrict(&u, grid, prev_grid)?;
            let mut worst = (0, f64::NEG_INFINITY);
            for (k, (a, b)) in here.values().iter().zip(prev.u.values()).enumerate() {
                if a - b > worst.1 {
                    worst = (k, a - b);
                }
            }
            monotone_excess = worst.1;
            if worst.1 > opts.monotone_tol {
                return Err(ExhaustionError::Monotonicity {
                    stage: n,
                    node: worst.0,
                    excess: worst.1,
                });
            }
        }
        stages.push(StageResult {
            op,
            gop,
            s: s_field,
            u,
            h,
            report,
            superharmonic: sh,
            monotone_excess,
        });
    }
    let anchor_values: Vec<f64> = stages
        .iter()
        .zip(exh.anchor_nodes())
        .map(|(st, &k)| st.u.values()[k])
        .collect();
    let sup_s = stages.last().map_or(0.0, |st| st.s.max());
    let decay_eps = opts.decay_factor * anchor_values[0];
    let nontrivial_eps = opts.nontrivial_factor * sup_s;
    let verdict = verdict(&anchor_values, decay_eps, nontrivial_eps, opts);
    Ok(ExhaustionRun {
        exhaustion: exh.clone(),
        stages,
        anchor_values,
        verdict,
        decay_eps,
        nontrivial_eps,
        sup_s,
    })
}

#[derive(Debug, Clone)]
pub struct MajorantReport {
    /// `h_n = H_{D_n}(w|∂D_n)` per stage.
    pub family: Vec<ScalarField>,
    /// `max (h_(n-1) - h_n)` over shared nodes and stages.
    pub max_decrease: f64,
    pub increasing: bool,
}

impl MajorantReport {
    pub fn majorant(&self) -> &ScalarField {
        self.family.last().expect("nonempty family")
    }
}

/// Harmonic extensions of `w` (given on the final stage) from each stage boundary.
pub fn harmonic_majorant(
    exh: &Exhaustion,
    coeffs: &EllipticCoefficients,
    w: &ScalarField,
    tol: f64,
) -> Result<MajorantReport, ExhaustionError> {
    let last = exh.stages().last().expect("stages");
    w.check_on(last)?;
    let mut family: Vec<ScalarField> = Vec::with_capacity(exh.stages().len());
    let mut max_decrease = f64::NEG_INFINITY;
    for (n, grid) in exh.stages().iter().enumerate() {
        let gop = GreenOperator::new(Arc::new(assemble(grid.clone(), coeffs)?))?;
        let hn = gop.harmonic_extension(&restrict(w, last, grid)?)?;
        if n > 0 {
            let down = restrict(&hn, grid, &exh.stages()[n - 1])?;
            let dec = family[n - 1].sub(&down).max();
            max_decrease = max_decrease.max(dec);
        }
        family.push(hn);
    }
    let max_decrease = max_decrease.max(0.0);
    Ok(MajorantReport {
        family,
        max_decrease,
        increasing: max_decrease <= tol,
    })
}

#[derive(Debug, Clone)]
pub struct CorrespondenceReport {
    pub u: ScalarField,
    pub u_bumped: ScalarField,
    /// `max |L h|` at interior nodes.
    pub harmonic_residual: f64,
    /// `‖u + G_D φ(·,u) - h‖_∞`.
    pub reconstruction_residual: f64,
    /// `u_bumped >= u - tol` everywhere.
    pub order_holds: bool,
    /// `u_bumped - u` at the anchor.
    pub anchor_gap: f64,
}

/// Maps nonnegative harmonic data `h` to `u = U_D^φ h`, checks that
/// `u + G_D φ(·,u)` reproduces `h`, and probes injectivity with `h + bump`.
/// The bump defaults to the constant 1, which is harmonic only when `c = 0`.
pub fn correspondence_roundtrip(
    gop: &GreenOperator,
    phi: &Nonlinearity,
    h: &ScalarField,
    bump: Option<&ScalarField>,
    anchor: usize,
    opts: &SolveOptions,
) -> Result<CorrespondenceReport, ExhaustionError> {
    let grid = gop.grid();
    h.check_on(grid)?;
    if let Some(k) = (0..grid.node_count()).find(|&k| !(h.values()[k] >= 0.0)) {
        return Err(ExhaustionError::NegativeData {
            node: k,
            value: h.values()[k],
        });
    }
    let lh = gop.operator().apply_interior(h.values());
    let scale = h.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (worst, harmonic_residual) =
        lh.iter().enumerate().fold(
            (0, 0.0f64),
            |(k, m), (s, v)| if v.abs() > m { (s, v.abs()) } else { (k, m) },
        );
    let a_norm = (0..grid.interior_count())
        .map(|i| {
            gop.operator()
                .matrix()
                .row(i)
                .map(|(_, w)| w.abs())
                .sum::<f64>()
                + gop
                    .operator()
                    .coupling()
                    .row(i)
                    .map(|(_, w)| w.abs())
                    .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    if harmonic_residual > 1e-9 * a_norm * scale {
        return Err(ExhaustionError::NotHarmonic {
            node: grid.interior_nodes()[worst],
            residual: harmonic_residual,
        });
    }
    let (u, _) = solve_u(gop, h, phi, opts)?;
    let pu = phi.eval_interior(grid, u.values(), opts.exec)?;
    let g = gop.green_interior(&pu)?;
    let recon: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .zip(&g)
        .map(|(&k, g)| u.values()[k] + g - h.values()[k])
        .collect();
    let reconstruction_residual = sup_norm(&recon);

    let one = ScalarField::constant(grid, 1.0);
    let bump = bump.unwrap_or(&one);
    let raised = ScalarField::from_values(
        grid,
        h.values()
            .iter()
            .zip(bump.values())
            .map(|(a, b)| a + b)
            .collect(),
    );
    let (u_bumped, _) = solve_u(gop, &raised, phi, opts)?;
    let order_holds = u_bumped
        .values()
        .iter()
        .zip(u.values())
        .all(|(b, a)| *b >= a - opts.tol);
    let anchor_gap = u_bumped.values()[anchor] - u.values()[anchor];
    Ok(CorrespondenceReport {
        u,
        u_bumped,
        harmonic_residual,
        reconstruction_residual,
        order_holds,
        anchor_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// `φ₁ <= φ₂`: the `φ₁` run dominates the `φ₂` run.
    Domination,
    /// `φ = φ₁ + φ₂`: the sum run lies below both.
    Sum,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Domination => "domination",
            SplitMode::Sum => "sum",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SplitReport {
    pub mode: SplitMode,
    pub run1: ExhaustionRun,
    pub run2: ExhaustionRun,
    pub sum_run: Option<ExhaustionRun>,
    /// Largest violation of the asserted order across stages.
    pub max_violation: f64,
    pub passed: bool,
}

/// Runs the exhaustion for `φ₁`, `φ₂` (and `φ₁ + φ₂` in sum mode) and
/// compares the stage solutions. Independent runs execute concurrently.
#[allow(clippy::too_many_arguments)]
pub fn split_experiment(
    exh: &Exhaustion,
    coeffs: &EllipticCoefficients,
    phi1: &Nonlinearity,
    phi2: &Nonlinearity,
    s: &Supersolution,
    mode: SplitMode,
    opts: &ExhaustionOptions,
    exec: Execution,
) -> Result<SplitReport, ExhaustionError> {
    let last = exh.stages().last().expect("stages");
    let t_max = s.on(last)?.max();
    match mode {
        SplitMode::Domination => phi1.dominated_by(phi2, last, t_max)?,
        SplitMode::Sum => {
            phi1.validate(last, t_max)?;
            phi2.validate(last, t_max)?;
        }
    }
    let sum = Nonlinearity::sum(phi1, phi2);
    let phis: Vec<&Nonlinearity> = match mode {
        SplitMode::Domination => vec![phi1, phi2],
        SplitMode::Sum => vec![phi1, phi2, &sum],
    };
    let mut runs = map_indexed(exec, phis.len(), |i| {
        run_exhaustion(exh, coeffs, phis[i], s, opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let sum_run = if mode == SplitMode::Sum {
        runs.pop()
    } else {
        None
    };
    let run2 = runs.pop().expect("two runs");
    let run1 = runs.pop().expect("two runs");

    let mut max_violation = f64::NEG_INFINITY;
    for n in 0..run1.stages.len() {
        let (a, b) = (&run1.stages[n].u, &run2.stages[n].u);
        let v = match (&sum_run, mode) {
            (_, SplitMode::Domination) => b.sub(a).max(),
            (Some(sr), SplitMode::Sum) => {
                let us = &sr.stages[n].u;
                us.values()
                    .iter()
                    .zip(a.values().iter().zip(b.values()))
                    .map(|(s, (x, y))| s - x.min(*y))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            (None, SplitMode::Sum) => unreachable!(),
        };
        max_violation = max_violation.max(v);
    }
    let passed = max_violation <= opts.solve.tol.max(opts.monotone_tol);
    Ok(SplitReport {
        mode,
        run1,
        run2,
        sum_run,
        max_violation,
        passed,
    })
}
