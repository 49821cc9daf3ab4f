//! The nonlinear solution operator `U_D^φ f`: the fixed point of
//! `T u = H_D f - G_D φ(·, u)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{sup_diff, sup_norm, ScalarField};
use crate::geometry::{GeometryError, Grid};
use crate::nonlinearity::{Nonlinearity, NonlinearityError};
use crate::par::Execution;
use crate::potential::{Factorization, GreenOperator, PotentialError};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_OMEGA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("boundary data must be nonnegative, found {value} at node {node}")]
    NegativeData { node: usize, value: f64 },
    #[error("newton requires a nonlinearity declared differentiable")]
    NotDifferentiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Sandwich,
    DampedPicard,
    Newton,
    /// `(-A + diag(φ(u_k)/u_k)) u_(k+1) = B f`: derivative-free, monotone
    /// when `t ↦ φ(x,t)/t` is nonincreasing.
    Secant,
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sandwich" => Ok(Scheme::Sandwich),
            "damped_picard" | "damped-picard" => Ok(Scheme::DampedPicard),
            "newton" => Ok(Scheme::Newton),
            "secant" => Ok(Scheme::Secant),
            other => Err(format!(
                "unknown scheme `{other}` (sandwich, damped_picard, newton, secant)"
            )),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Sandwich => "sandwich",
            Scheme::DampedPicard => "damped_picard",
            Scheme::Newton => "newton",
            Scheme::Secant => "secant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    /// Sample-check the nonlinearity hypotheses before iterating.
    pub validate: bool,
    pub exec: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Sandwich,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            omega: DEFAULT_OMEGA,
            validate: true,
            exec: Execution::default(),
        }
    }
}

impl SolveOptions {
    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub scheme: Scheme,
    pub iterations: usize,
    /// `‖u_k + G_D φ(·,u_k) - H_D f‖_∞` per iterate.
    pub residual_history: Vec<f64>,
    pub status: SolveStatus,
    pub final_identity_residual: f64,
    /// Envelope gaps `‖u^{k} - u^{k+1}‖_∞` (sandwich only).
    pub sandwich_gap_history: Vec<f64>,
    /// Last (upper, lower) envelope pair when the sandwich did not close.
    pub envelopes: Option<(ScalarField, ScalarField)>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

struct Problem<'a> {
    gop: &'a GreenOperator,
    f: &'a ScalarField,
    phi: &'a Nonlinearity,
    h: Vec<f64>,
    exec: Execution,
}

impl<'a> Problem<'a> {
    fn new(
        gop: &'a GreenOperator,
        f: &'a ScalarField,
        phi: &'a Nonlinearity,
        exec: Execution,
    ) -> Result<Self, SolveError> {
        f.check_on(gop.grid())?;
        let h = gop.harmonic_interior(f.values())?;
        Ok(Self {
            gop,
            f,
            phi,
            h,
            exec,
        })
    }

    fn grid(&self) -> &Grid {
        self.gop.grid()
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.f.values().to_vec();
        for (s, &k) in self.grid().interior_nodes().iter().enumerate() {
            v[k] = u[s];
        }
        v
    }

    fn field(&self, u: &[f64]) -> ScalarField {
        ScalarField::from_interior(self.grid(), u, self.f)
    }

    fn phi_of(&self, u: &[f64]) -> Result<Vec<f64>, SolveError> {
        Ok(self
            .phi
            .eval_interior(self.grid(), &self.full(u), self.exec)?)
    }

    /// `G_D φ(·, u)` on interior slots.
    fn absorbed(&self, u: &[f64]) -> Result<Vec<f64>, SolveError> {
        Ok(self.gop.green_interior(&self.phi_of(u)?)?)
    }

    fn t_map(&self, u: &[f64]) -> Result<Vec<f64>, SolveError> {
        let g = self.absorbed(u)?;
        Ok(self.h.iter().zip(&g).map(|(h, g)| h - g).collect())
    }

    /// `F(u) = u + G_D φ(·,u) - H_D f`.
    fn defect(&self, u: &[f64]) -> Result<Vec<f64>, SolveError> {
        let g = self.absorbed(u)?;
        Ok(u.iter()
            .zip(&g)
            .zip(&self.h)
            .map(|((u, g), h)| u + g - h)
            .collect())
    }
}

/// `T u = H_D f - G_D φ(·, u)`, with boundary values `f`.
pub fn apply_t(
    gop: &GreenOperator,
    f: &ScalarField,
    u: &ScalarField,
    phi: &Nonlinearity,
    exec: Execution,
) -> Result<ScalarField, SolveError> {
    u.check_on(gop.grid())?;
    let p = Problem::new(gop, f, phi, exec)?;
    let tu = p.t_map(&u.interior_values(gop.grid()))?;
    Ok(p.field(&tu))
}

/// The iterates `u^0 = H_D f, u^{k+1} = T u^k`, `count` of them.
pub fn sandwich_iterates(
    gop: &GreenOperator,
    f: &ScalarField,
    phi: &Nonlinearity,
    count: usize,
    exec: Execution,
) -> Result<Vec<ScalarField>, SolveError> {
    let p = Problem::new(gop, f, phi, exec)?;
    let mut u = p.h.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(p.field(&u));
        u = p.t_map(&u)?;
    }
    Ok(out)
}

/// `‖u + G_D φ(·,u) - H_D f‖_∞` over interior nodes.
pub fn identity_residual(
    gop: &GreenOperator,
    f: &ScalarField,
    u: &ScalarField,
    phi: &Nonlinearity,
    exec: Execution,
) -> Result<f64, SolveError> {
    u.check_on(gop.grid())?;
    let p = Problem::new(gop, f, phi, exec)?;
    Ok(sup_norm(&p.defect(&u.interior_values(gop.grid()))?))
}

fn diverging(history: &[f64]) -> bool {
    let last = *history.last().unwrap();
    if !last.is_finite() {
        return true;
    }
    let best = history.iter().copied().fold(f64::INFINITY, f64::min);
    history.len() > 5 && last > 1e3 * best.max(f64::MIN_POSITIVE)
}

/// Solves `u + G_D φ(·,u) = H_D f` for nonnegative boundary data `f`.
///
/// Non-convergence is not an error: the report carries the status and the
/// last iterate is returned.
pub fn solve_u(
    gop: &GreenOperator,
    f: &ScalarField,
    phi: &Nonlinearity,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport), SolveError> {
    f.check_on(gop.grid())?;
    let grid = gop.grid();
    for &k in grid.boundary_nodes() {
        let v = f.values()[k];
        if !(v >= 0.0) {
            return Err(SolveError::NegativeData { node: k, value: v });
        }
    }
    if opts.scheme == Scheme::Newton && !phi.differentiable() {
        return Err(SolveError::NotDifferentiable);
    }
    let mut report = SolveReport {
        scheme: opts.scheme,
        iterations: 0,
        residual_history: Vec::new(),
        status: SolveStatus::Converged,
        final_identity_residual: 0.0,
        sandwich_gap_history: Vec::new(),
        envelopes: None,
    };
    if grid.boundary_nodes().iter().all(|&k| f.values()[k] == 0.0) {
        return Ok((ScalarField::zeros(grid), report));
    }
    let p = Problem::new(gop, f, phi, opts.exec)?;
    if opts.validate {
        let t_max = 2.0 * p.h.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
        phi.validate(grid, t_max)?;
    }
    let u = match opts.scheme {
        Scheme::Sandwich => fixed_point(&p, opts, 1.0, &mut report)?,
        Scheme::DampedPicard => fixed_point(&p, opts, opts.omega, &mut report)?,
        Scheme::Newton => newton(&p, opts, &mut report)?,
        Scheme::Secant => secant(&p, opts, &mut report)?,
    };
    Ok((p.field(&u), report))
}

fn fixed_point(
    p: &Problem<'_>,
    opts: &SolveOptions,
    omega: f64,
    report: &mut SolveReport,
) -> Result<Vec<f64>, SolveError> {
    let sandwich = omega == 1.0;
    let mut u = p.h.clone();
    loop {
        let tu = p.t_map(&u)?;
        report.iterations += 1;
        let r = sup_diff(&u, &tu);
        report.residual_history.push(r);
        if sandwich {
            report.sandwich_gap_history.push(r);
        }
        report.final_identity_residual = r;
        if r <= opts.tol {
            report.status = SolveStatus::Converged;
            return Ok(u);
        }
        if diverging(&report.residual_history) {
            report.status = SolveStatus::Diverged;
            return Ok(u);
        }
        if report.iterations >= opts.max_iter {
            report.status = SolveStatus::MaxIter;
            if sandwich {
                // Even iterates sit above the solution, odd ones below.
                let (upper, lower) = if report.iterations % 2 == 1 {
                    (&u, &tu)
                } else {
                    (&tu, &u)
                };
                report.envelopes = Some((p.field(upper), p.field(lower)));
            }
            return Ok(u);
        }
        u = if sandwich {
            tu
        } else {
            u.iter()
                .zip(&tu)
                .map(|(a, b)| (1.0 - omega) * a + omega * b)
                .collect()
        };
    }
}

fn newton(
    p: &Problem<'_>,
    opts: &SolveOptions,
    report: &mut SolveReport,
) -> Result<Vec<f64>, SolveError> {
    let grid = p.grid();
    let a = p.gop.operator().matrix();
    let mut u = p.h.clone();
    let mut defect = p.defect(&u)?;
    let mut norm = sup_norm(&defect);
    loop {
        report.residual_history.push(norm);
        report.final_identity_residual = norm;
        if norm <= opts.tol {
            report.status = SolveStatus::Converged;
            return Ok(u);
        }
        if report.iterations >= opts.max_iter {
            report.status = SolveStatus::MaxIter;
            return Ok(u);
        }
        report.iterations += 1;
        // (I + G D) δ = -F  is  (-A + D) δ = A F.
        let d = p.phi.derivative_interior(grid, &p.full(&u), p.exec)?;
        let jac = Factorization::new(a, -1.0, Some(&d))?;
        let delta = jac.solve(&a.matvec(&defect))?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + lambda * d).collect();
            let f_trial = p.defect(&trial)?;
            let n_trial = sup_norm(&f_trial);
            if n_trial <= (1.0 - 1e-4 * lambda) * norm || n_trial <= opts.tol {
                accepted = Some((trial, f_trial, n_trial));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, f_trial, n_trial)) => {
                u = trial;
                defect = f_trial;
                norm = n_trial;
            }
            None => {
                report.status = SolveStatus::Diverged;
                return Ok(u);
            }
        }
    }
}

fn secant(
    p: &Problem<'_>,
    opts: &SolveOptions,
    report: &mut SolveReport,
) -> Result<Vec<f64>, SolveError> {
    let grid = p.grid();
    let a = p.gop.operator().matrix();
    let rhs = p.gop.operator().boundary_rhs(p.f.values());
    let mut u = p.h.clone();
    loop {
        let phi = p.phi_of(&u)?;
        let g = p.gop.green_interior(&phi)?;
        let norm = u
            .iter()
            .zip(&g)
            .zip(&p.h)
            .fold(0.0f64, |m, ((u, g), h)| m.max((u + g - h).abs()));
        report.residual_history.push(norm);
        report.final_identity_residual = norm;
        if norm <= opts.tol {
            report.status = SolveStatus::Converged;
            return Ok(u);
        }
        if diverging(&report.residual_history) {
            report.status = SolveStatus::Diverged;
            return Ok(u);
        }
        if report.iterations >= opts.max_iter {
            report.status = SolveStatus::MaxIter;
            return Ok(u);
        }
        report.iterations += 1;
        let d: Vec<f64> = u
            .iter()
            .zip(&phi)
            .map(|(&t, &v)| if t > 0.0 { v / t } else { 0.0 })
            .collect();
        debug_assert_eq!(d.len(), grid.interior_count());
        u = Factorization::new(a, -1.0, Some(&d))?.solve(&rhs)?;
    }
}

/// Outcome of the discrete comparison check.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    /// `Lu - φ(u) <= Lv - φ(v) + tol ‖A‖` inside and `u >= v - tol` on the boundary.
    pub hypotheses_hold: bool,
    /// `u >= v - κ tol` at every interior node.
    pub conclusion_holds: bool,
    /// `hypotheses_hold => conclusion_holds`.
    pub implication_holds: bool,
    pub passed: bool,
    pub kappa: f64,
    /// Node with the smallest `u - v` and that value.
    pub worst_node: Option<usize>,
    pub worst_gap: f64,
    pub failing_nodes: usize,
}

/// Checks the comparison principle for the pair `(u, v)`.
///
/// Residuals live in the range of `L`, so the hypothesis tolerance is
/// `tol ‖A‖_∞`; the conclusion is then `u >= v - κ tol` with
/// `κ = 1 + ‖A‖_∞ ‖G_D 1‖_∞`.
pub fn check_comparison(
    gop: &GreenOperator,
    u: &ScalarField,
    v: &ScalarField,
    phi: &Nonlinearity,
    tol: f64,
    exec: Execution,
) -> Result<ComparisonVerdict, SolveError> {
    let grid = gop.grid();
    u.check_on(grid)?;
    v.check_on(grid)?;
    let op = gop.operator();
    let a_norm = (0..grid.interior_count())
        .map(|i| {
            op.matrix().row(i).map(|(_, w)| w.abs()).sum::<f64>()
                + op.coupling().row(i).map(|(_, w)| w.abs()).sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let g1 = gop.green_interior(&vec![1.0; grid.interior_count()])?;
    let kappa = 1.0 + a_norm * sup_norm(&g1);

    let lu = op.apply_interior(u.values());
    let lv = op.apply_interior(v.values());
    let pu = phi.eval_interior(grid, u.values(), exec)?;
    let pv = phi.eval_interior(grid, v.values(), exec)?;
    let interior_ok = (0..lu.len()).all(|s| lu[s] - pu[s] <= lv[s] - pv[s] + tol * a_norm);
    let boundary_ok = grid
        .boundary_nodes()
        .iter()
        .all(|&k| u.values()[k] >= v.values()[k] - tol);
    let hypotheses_hold = interior_ok && boundary_ok;

    let mut worst_node = None;
    let mut worst_gap = f64::INFINITY;
    let mut failing_nodes = 0;
    for &k in grid.interior_nodes() {
        let gap = u.values()[k] - v.values()[k];
        if gap < worst_gap {
            worst_gap = gap;
            worst_node = Some(k);
        }
        if gap < -kappa * tol {
            failing_nodes += 1;
        }
    }
    let conclusion_holds = failing_nodes == 0;
    Ok(ComparisonVerdict {
        hypotheses_hold,
        conclusion_holds,
        implication_holds: !hypotheses_hold || conclusion_holds,
        passed: hypotheses_hold && conclusion_holds,
        kappa,
        worst_node,
        worst_gap,
        failing_nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneVerdict {
    pub passed: bool,
    /// `max (U f - U g)` over all nodes.
    pub max_excess: f64,
    pub worst_node: Option<usize>,
}

/// Checks `U f <= U g + tol` for boundary data `f <= g`.
pub fn check_monotone_in_data(
    gop: &GreenOperator,
    f: &ScalarField,
    g: &ScalarField,
    phi: &Nonlinearity,
    opts: &SolveOptions,
) -> Result<MonotoneVerdict, SolveError> {
    let (uf, _) = solve_u(gop, f, phi, opts)?;
    let (ug, _) = solve_u(gop, g, phi, opts)?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_node = None;
    for (k, (a, b)) in uf.values().iter().zip(ug.values()).enumerate() {
        if a - b > max_excess {
            max_excess = a - b;
            worst_node = Some(k);
        }
    }
    Ok(MonotoneVerdict {
        passed: max_excess <= opts.tol,
        max_excess,
        worst_node,
    })
}
