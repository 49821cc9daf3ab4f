//! Thin-set certificates and the existence-criterion integral
//! `I_R(x₀) = ∫_{(Ω \ A) ∩ Ω_R} G_Ω(x₀, y) φ(y, c₀) dy`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exhaustion::ExhaustionRun;
use crate::expr::{Bindings, Expr, ExprError};
use crate::field::ScalarField;
use crate::geometry::{GeometryError, Grid, Point};
use crate::nonlinearity::{Nonlinearity, NonlinearityError};
use crate::operator::{check_superharmonic, DiscreteOperator, OperatorError, SuperharmonicReport};
use crate::par::{map_indexed, ordered_sum, Execution};
use crate::potential::{halfplane_green, interval_green, PotentialError};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThinnessError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error("set A: {0}")]
    SetA(ExprError),
    #[error("witness: {0}")]
    Witness(ExprError),
    #[error("criterion: {0}")]
    Criterion(String),
    #[error("no split 0 < v(x0) <= c0 < v(x1) <= c: {0}")]
    NoSplit(String),
}

/// The set `A`, as a point predicate or a node mask on a grid.
#[derive(Clone)]
pub enum SetA {
    Predicate(Arc<Expr>),
    Func(Arc<dyn Fn(Point) -> bool + Send + Sync>),
    /// Nodes of `grid` flagged `true`. A point belongs to `A` when its
    /// nearest node does; points outside the grid box are not in `A`.
    Mask {
        grid: Arc<Grid>,
        mask: Vec<bool>,
    },
}

impl fmt::Debug for SetA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetA::Predicate(e) => write!(f, "Predicate({e})"),
            SetA::Func(_) => f.write_str("Func(..)"),
            SetA::Mask { mask, .. } => {
                write!(
                    f,
                    "Mask({} of {})",
                    mask.iter().filter(|&&m| m).count(),
                    mask.len()
                )
            }
        }
    }
}

impl SetA {
    pub fn empty() -> Self {
        SetA::Func(Arc::new(|_| false))
    }

    pub fn func(f: impl Fn(Point) -> bool + Send + Sync + 'static) -> Self {
        SetA::Func(Arc::new(f))
    }

    pub fn contains(&self, p: Point) -> Result<bool, ThinnessError> {
        match self {
            SetA::Predicate(e) => Ok(e
                .eval(&Bindings::xy(p[0], p[1]))
                .map_err(ThinnessError::SetA)?
                != 0.0),
            SetA::Func(f) => Ok(f(p)),
            SetA::Mask { grid, mask } => Ok(grid.nearest_node(p).is_some_and(|k| mask[k])),
        }
    }

    /// Membership of every node of `grid`.
    pub fn on(&self, grid: &Grid) -> Result<Vec<bool>, ThinnessError> {
        (0..grid.node_count())
            .map(|k| self.contains(grid.position(k)))
            .collect()
    }
}

/// Witness `s` of a certificate.
#[derive(Debug, Clone)]
pub enum Witness {
    Expr(Arc<Expr>),
    Field(ScalarField),
}

impl Witness {
    pub fn on(&self, grid: &Grid) -> Result<ScalarField, ThinnessError> {
        match self {
            Witness::Expr(e) => {
                ScalarField::try_from_fn(grid, |p| e.eval(&Bindings::xy(p[0], p[1])))
                    .map_err(ThinnessError::Witness)
            }
            Witness::Field(f) => {
                f.check_on(grid)?;
                Ok(f.clone())
            }
        }
    }
}

/// `A` together with a superharmonic `s >= 0`, `s >= 1` on `A`, `inf s <= 1 - margin`.
#[derive(Debug, Clone)]
pub struct ThinnessCertificate {
    pub set_a: SetA,
    pub witness: Witness,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateVerdict {
    pub superharmonic: SuperharmonicReport,
    pub min_over_grid: f64,
    /// Smallest `s` over nodes of `A` (`+inf` when `A` has no nodes).
    pub min_on_a: f64,
    pub nodes_in_a: usize,
    pub nonnegative: bool,
    pub dominates_on_a: bool,
    pub below_one: bool,
    pub passed: bool,
}

/// Checks the three certificate inequalities at the nodes of `op`'s grid.
pub fn verify_certificate(
    op: &DiscreteOperator,
    cert: &ThinnessCertificate,
    tol: f64,
) -> Result<CertificateVerdict, ThinnessError> {
    let grid = op.grid();
    let s = cert.witness.on(grid)?;
    let in_a = cert.set_a.on(grid)?;
    let superharmonic = check_superharmonic(op, &s, tol)?;
    let min_over_grid = s.min();
    let min_on_a = s
        .values()
        .iter()
        .zip(&in_a)
        .filter(|(_, &a)| a)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let nodes_in_a = in_a.iter().filter(|&&a| a).count();
    let nonnegative = min_over_grid >= 0.0;
    let dominates_on_a = min_on_a >= 1.0 - tol;
    let below_one = min_over_grid <= 1.0 - cert.margin;
    Ok(CertificateVerdict {
        passed: superharmonic.passed && nonnegative && dominates_on_a && below_one,
        superharmonic,
        min_over_grid,
        min_on_a,
        nodes_in_a,
        nonnegative,
        dominates_on_a,
        below_one,
    })
}

/// Closed-form Green function used by the criterion integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenKernel {
    /// Upper half-plane; truncation `R` is `[-R, R] x (0, R]`.
    HalfPlane,
    /// `d²/dx²` on `(a, b)`; truncation `R` is `(a, b) ∩ [-R, R]`.
    Interval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionVerdict {
    BoundedTrend,
    DivergingTrend,
    Undecided,
}

impl fmt::Display for CriterionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionVerdict::BoundedTrend => "bounded_trend",
            CriterionVerdict::DivergingTrend => "diverging_trend",
            CriterionVerdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOptions {
    pub anchor: Point,
    /// Increasing truncation radii, each a multiple of `cell`.
    pub radii: Vec<f64>,
    /// Side of the square quadrature cells.
    pub cell: f64,
    /// Gauss–Legendre points per axis in ordinary cells.
    pub order: usize,
    /// Cells within this many cell widths of the anchor are subdivided.
    pub near_cells: f64,
    pub near_subdivisions: usize,
    pub bounded_ratio: f64,
    pub diverging_ratio: f64,
    pub exec: Execution,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            anchor: [0.0, 0.5],
            radii: vec![4.0, 8.0, 16.0, 32.0],
            cell: 0.25,
            order: 4,
            near_cells: 2.0,
            near_subdivisions: 4,
            bounded_ratio: 0.6,
            diverging_ratio: 0.9,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    pub verdict: CriterionVerdict,
}

fn trend(values: &[f64], opts: &CriterionOptions) -> (Vec<f64>, Vec<f64>, CriterionVerdict) {
    let increments: Vec<f64> = values.windows(2).map(|p| p[1] - p[0]).collect();
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|p| match (p[0] > 0.0, p[1] > 0.0) {
            (_, false) => 0.0,
            (false, true) => f64::INFINITY,
            (true, true) => p[1] / p[0],
        })
        .collect();
    let verdict = if values.len() < 4 {
        CriterionVerdict::Undecided
    } else {
        let r = *ratios.last().unwrap();
        if r <= opts.bounded_ratio {
            CriterionVerdict::BoundedTrend
        } else if r >= opts.diverging_ratio {
            CriterionVerdict::DivergingTrend
        } else {
            CriterionVerdict::Undecided
        }
    };
    (increments, ratios, verdict)
}

struct Cell {
    x: (f64, f64),
    y: (f64, f64),
    shell: usize,
}

fn shell_of(extent: f64, radii: &[f64]) -> usize {
    radii
        .iter()
        .position(|&r| extent <= r + 1e-12 * r)
        .unwrap_or(radii.len())
}

fn cells(kernel: GreenKernel, opts: &CriterionOptions) -> Result<Vec<Cell>, ThinnessError> {
    let r_max = *opts.radii.last().unwrap();
    let h = opts.cell;
    let n = (r_max / h).round() as i64;
    let mut out = Vec::new();
    match kernel {
        GreenKernel::HalfPlane => {
            for j in 0..n {
                for i in -n..n {
                    let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
                    let (y0, y1) = (j as f64 * h, (j + 1) as f64 * h);
                    let extent = x0.abs().max(x1.abs()).max(y1);
                    out.push(Cell {
                        x: (x0, x1),
                        y: (y0, y1),
                        shell: shell_of(extent, &opts.radii),
                    });
                }
            }
        }
        GreenKernel::Interval { a, b } => {
            for i in -n..n {
                let (x0, x1) = ((i as f64 * h).max(a), ((i + 1) as f64 * h).min(b));
                if x1 <= x0 {
                    continue;
                }
                let extent = x0.abs().max(x1.abs());
                out.push(Cell {
                    x: (x0, x1),
                    y: (0.0, 0.0),
                    shell: shell_of(extent, &opts.radii),
                });
            }
        }
    }
    Ok(out)
}

/// `I_R(x₀)` for each truncation radius, accumulated shell by shell.
///
/// Cells whose closure contains the anchor are split at the anchor and
/// integrated with Duffy triangles; cells near it are subdivided.
pub fn criterion_integral(
    kernel: GreenKernel,
    phi: &Nonlinearity,
    c0: f64,
    set_a: &SetA,
    opts: &CriterionOptions,
) -> Result<CriterionResult, ThinnessError> {
    if opts.radii.is_empty() || opts.radii.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(ThinnessError::Criterion(
            "radii must be nonempty and increasing".into(),
        ));
    }
    if !(opts.cell > 0.0) {
        return Err(ThinnessError::Criterion(format!(
            "cell size {} must be positive",
            opts.cell
        )));
    }
    for &r in &opts.radii {
        let k = r / opts.cell;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(ThinnessError::Criterion(format!(
                "radius {r} is not a multiple of cell {}",
                opts.cell
            )));
        }
    }
    let x0 = opts.anchor;
    match kernel {
        GreenKernel::HalfPlane if !(x0[1] > 0.0) => {
            return Err(ThinnessError::Criterion(format!(
                "anchor {x0:?} is not in the upper half-plane"
            )))
        }
        GreenKernel::Interval { a, b } if !(x0[0] > a && x0[0] < b) => {
            return Err(ThinnessError::Criterion(format!(
                "anchor {} is outside ({a}, {b})",
                x0[0]
            )))
        }
        _ => {}
    }
    let cells = cells(kernel, opts)?;
    let gl = GaussLegendre::new(opts.order);
    let gl_fine = GaussLegendre::new(opts.order.max(8));
    let integrand = |p: Point| -> Result<f64, ThinnessError> {
        if set_a.contains(p)? {
            return Ok(0.0);
        }
        let v = phi.value(p, c0)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let g = match kernel {
            GreenKernel::HalfPlane => halfplane_green(x0, p)?,
            GreenKernel::Interval { a, b } => interval_green(x0[0], p[0], (a, b))?,
        };
        Ok(g * v)
    };
    // The quadrature closures are infallible; the first error is kept aside.
    let per_cell = map_indexed(opts.exec, cells.len(), |ci| -> Result<f64, ThinnessError> {
        let c = &cells[ci];
        if c.shell >= opts.radii.len() {
            return Ok(0.0);
        }
        let err = std::sync::Mutex::new(None);
        let f = |p: Point| match integrand(p) {
            Ok(v) => v,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                0.0
            }
        };
        let value = match kernel {
            GreenKernel::Interval { .. } => {
                if x0[0] > c.x.0 && x0[0] < c.x.1 {
                    gl.integrate(c.x.0, x0[0], |t| f([t, 0.0]))
                        + gl.integrate(x0[0], c.x.1, |t| f([t, 0.0]))
                } else {
                    gl.integrate(c.x.0, c.x.1, |t| f([t, 0.0]))
                }
            }
            GreenKernel::HalfPlane => {
                let inside = x0[0] >= c.x.0 && x0[0] <= c.x.1 && x0[1] >= c.y.0 && x0[1] <= c.y.1;
                let dx = (c.x.0 - x0[0]).max(x0[0] - c.x.1).max(0.0);
                let dy = (c.y.0 - x0[1]).max(x0[1] - c.y.1).max(0.0);
                if inside {
                    gl_fine.integrate_rect_singular(c.x, c.y, x0, f)
                } else if dx.max(dy) <= opts.near_cells * opts.cell {
                    let m = opts.near_subdivisions.max(1);
                    let (wx, wy) = ((c.x.1 - c.x.0) / m as f64, (c.y.1 - c.y.0) / m as f64);
                    let mut acc = 0.0;
                    for j in 0..m {
                        for i in 0..m {
                            let xs = (c.x.0 + i as f64 * wx, c.x.0 + (i + 1) as f64 * wx);
                            let ys = (c.y.0 + j as f64 * wy, c.y.0 + (j + 1) as f64 * wy);
                            acc += gl_fine.integrate_rect(xs, ys, f);
                        }
                    }
                    acc
                } else {
                    gl.integrate_rect(c.x, c.y, f)
                }
            }
        };
        match err.into_inner().unwrap() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    });
    let mut shell_parts: Vec<Vec<f64>> = vec![Vec::new(); opts.radii.len()];
    for (c, v) in cells.iter().zip(per_cell) {
        if c.shell < opts.radii.len() {
            shell_parts[c.shell].push(v?);
        }
    }
    let mut values = Vec::with_capacity(opts.radii.len());
    let mut running = 0.0;
    for part in &shell_parts {
        running += ordered_sum(part);
        values.push(running);
    }
    let (increments, ratios, verdict) = trend(&values, opts);
    Ok(CriterionResult {
        radii: opts.radii.clone(),
        values,
        increments,
        ratios,
        verdict,
    })
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub certificate: ThinnessCertificate,
    pub verdict: CertificateVerdict,
    pub c: f64,
    pub c0: f64,
    /// Node with `0 < v <= c0` (the anchor when it qualifies).
    pub x0: usize,
    /// Node with `c0 < v <= c`.
    pub x1: usize,
}

/// Builds `A = {v <= c0}` and `s = (c - v) / (c - c0)` from the limit `v` of
/// a run and verifies the certificate on the final stage.
///
/// `c` defaults to `sup s` of the run and `c0` to the midpoint of the range of `v`.
/// The superharmonicity tolerance is the run's identity tolerance mapped
/// through `‖A‖_∞ / (c - c0)`.
pub fn necessary_direction_probe(
    run: &ExhaustionRun,
    c: Option<f64>,
    c0: Option<f64>,
    margin: f64,
) -> Result<ProbeResult, ThinnessError> {
    let stage = run.final_stage();
    let grid = stage.op.grid().clone();
    let v = &stage.u;
    let c = c.unwrap_or(run.sup_s);
    let spread = v.max() - v.min();
    if spread <= 1e-9 * v.max().abs().max(1.0) {
        return Err(ThinnessError::NoSplit(format!(
            "solution is flat (range {spread:e})"
        )));
    }
    let c0 = c0.unwrap_or(0.5 * (v.min() + v.max()));
    if !(c > c0) {
        return Err(ThinnessError::NoSplit(format!(
            "c = {c} is not above c0 = {c0}"
        )));
    }
    let anchor = *run.exhaustion.anchor_nodes().last().unwrap();
    let qualifies = |k: usize| v.values()[k] > 0.0 && v.values()[k] <= c0;
    let x0 = if qualifies(anchor) {
        anchor
    } else {
        grid.interior_nodes()
            .iter()
            .copied()
            .find(|&k| qualifies(k))
            .ok_or_else(|| ThinnessError::NoSplit(format!("no node with 0 < v <= c0 = {c0}")))?
    };
    let x1 = (0..grid.node_count())
        .find(|&k| v.values()[k] > c0 && v.values()[k] <= c)
        .ok_or_else(|| ThinnessError::NoSplit(format!("no node with {c0} < v <= {c}")))?;
    let mask: Vec<bool> = v.values().iter().map(|&x| x <= c0).collect();
    let s = v.map(|x| (c - x) / (c - c0));
    let certificate = ThinnessCertificate {
        set_a: SetA::Mask {
            grid: grid.clone(),
            mask,
        },
        witness: Witness::Field(s),
        margin,
    };
    let op = &stage.op;
    let a_norm = (0..grid.interior_count())
        .map(|i| {
            op.matrix().row(i).map(|(_, w)| w.abs()).sum::<f64>()
                + op.coupling().row(i).map(|(_, w)| w.abs()).sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let tol = stage.report.final_identity_residual.max(f64::EPSILON) * a_norm / (c - c0);
    let verdict = verify_certificate(op, &certificate, tol.max(1e-12))?;
    Ok(ProbeResult {
        certificate,
        verdict,
        c,
        c0,
        x0,
        x1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustion::{run_exhaustion, ExhaustionOptions, Supersolution};
    use crate::geometry::{build_half_plane_exhaustion, SpacingRule};
    use crate::operator::{assemble, EllipticCoefficients};

    fn expr(s: &str) -> Arc<Expr> {
        Arc::new(Expr::parse(s).unwrap())
    }

    fn half_plane_op() -> DiscreteOperator {
        let exh =
            build_half_plane_exhaustion(4.0, 2.0, 2, SpacingRule::Fixed(0.125), None).unwrap();
        assemble(exh.stages()[1].clone(), &EllipticCoefficients::laplacian()).unwrap()
    }

    #[test]
    fn sqrt_witness_certifies_upper_region() {
        let op = half_plane_op();
        let cert = ThinnessCertificate {
            set_a: SetA::Predicate(expr("y >= 1")),
            witness: Witness::Expr(expr("sqrt(y)")),
            margin: 0.05,
        };
        let v = verify_certificate(&op, &cert, 1e-12).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.superharmonic.max_ls < 0.0);
    }

    #[test]
    fn failing_certificates() {
        let op = half_plane_op();
        let everywhere = ThinnessCertificate {
            set_a: SetA::func(|_| true),
            witness: Witness::Expr(expr("1")),
            margin: 0.05,
        };
        let v = verify_certificate(&op, &everywhere, 1e-12).unwrap();
        assert!(!v.passed && !v.below_one && v.superharmonic.passed);
        let convex = ThinnessCertificate {
            set_a: SetA::empty(),
            witness: Witness::Expr(expr("x^2")),
            margin: 0.05,
        };
        let v = verify_certificate(&op, &convex, 1e-12).unwrap();
        assert!(!v.passed && !v.superharmonic.passed);
        assert!((v.superharmonic.max_ls - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_phi_gives_zero_integral() {
        let r = criterion_integral(
            GreenKernel::HalfPlane,
            &Nonlinearity::zero(),
            0.5,
            &SetA::empty(),
            &CriterionOptions::default(),
        )
        .unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        assert_eq!(r.verdict, CriterionVerdict::BoundedTrend);
    }

    #[test]
    fn singular_cell_matches_fine_reference() {
        // Constant φ on a small box around the anchor: compare two resolutions.
        let phi = Nonlinearity::from_fn("1", |p, t| if t > 0.0 && p[1] < 2.0 { 1.0 } else { 0.0 });
        let mut o = CriterionOptions {
            radii: vec![1.0, 2.0],
            ..Default::default()
        };
        let coarse =
            criterion_integral(GreenKernel::HalfPlane, &phi, 1.0, &SetA::empty(), &o).unwrap();
        o.cell = 0.0625;
        o.order = 8;
        let fine =
            criterion_integral(GreenKernel::HalfPlane, &phi, 1.0, &SetA::empty(), &o).unwrap();
        for (a, b) in coarse.values.iter().zip(&fine.values) {
            assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn interval_kernel_integral() {
        // ∫_0^1 G(x0, y) dy = x0 (1 - x0) / 2.
        let phi = Nonlinearity::from_fn("1", |_, t| if t > 0.0 { 1.0 } else { 0.0 });
        let o = CriterionOptions {
            anchor: [0.3, 0.0],
            radii: vec![0.25, 0.5, 1.0],
            ..Default::default()
        };
        let r = criterion_integral(
            GreenKernel::Interval { a: 0.0, b: 1.0 },
            &phi,
            1.0,
            &SetA::empty(),
            &o,
        )
        .unwrap();
        assert!((r.values[2] - 0.5 * 0.3 * 0.7).abs() < 1e-14);
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn step(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (left + right - whole).abs() <= 15.0 * tol || b - a < 1e-9 {
                return left + right + (left + right - whole) / 15.0;
            }
            step(f, a, m, fa, flm, fm, left, 0.5 * tol)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        step(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            (b - a) / 6.0 * (fa + 4.0 * fm + fb),
            tol,
        )
    }

    /// `∫_{-R}^{R} ∫_0^1 G((0, y0), w) dw` with the `x` integral in closed form.
    fn strip_reference(radius: f64, y0: f64) -> f64 {
        let j = |a: f64| {
            let a = a.abs();
            let tail = if a == 0.0 {
                0.0
            } else {
                4.0 * a * (radius / a).atan()
            };
            2.0 * radius * (radius * radius + a * a).ln() + tail
        };
        let f = |y: f64| (j(y + y0) - j(y - y0)) / (4.0 * std::f64::consts::PI);
        adaptive_simpson(&f, 0.0, y0, 1e-14) + adaptive_simpson(&f, y0, 1.0, 1e-14)
    }

    #[test]
    fn strip_integral_matches_semi_analytic_reference() {
        let phi = Nonlinearity::from_fn(
            "strip",
            |p, t| if t > 0.0 && p[1] < 1.0 { 1.0 } else { 0.0 },
        );
        let o = CriterionOptions {
            radii: vec![2.0, 4.0, 8.0, 16.0],
            ..Default::default()
        };
        let r = criterion_integral(
            GreenKernel::HalfPlane,
            &phi,
            1.0,
            &SetA::Predicate(expr("y > 1")),
            &o,
        )
        .unwrap();
        for (&radius, &v) in o.radii.iter().zip(&r.values) {
            let want = strip_reference(radius, 0.5);
            assert!((v - want).abs() < 1e-6, "R = {radius}: {v} vs {want}");
        }
        assert_eq!(r.verdict, CriterionVerdict::BoundedTrend);
    }

    #[test]
    fn trend_rules() {
        let o = CriterionOptions::default();
        assert_eq!(
            trend(&[1.0, 1.5, 1.75, 1.875], &o).2,
            CriterionVerdict::BoundedTrend
        );
        assert_eq!(
            trend(&[1.0, 2.0, 4.0, 8.0], &o).2,
            CriterionVerdict::DivergingTrend
        );
        assert_eq!(
            trend(&[1.0, 2.0, 2.8, 3.4], &o).2,
            CriterionVerdict::Undecided
        );
        assert_eq!(trend(&[1.0, 2.0, 3.0], &o).2, CriterionVerdict::Undecided);
    }

    #[test]
    fn probe_examples() {
        let exh = build_half_plane_exhaustion(2.0, 2.0, 3, SpacingRule::Fixed(0.25), None).unwrap();
        let coeffs = EllipticCoefficients::laplacian();
        let phi = Nonlinearity::from_expr(Expr::parse("(y > 1) * max(t, 0)").unwrap(), 2)
            .unwrap()
            .with_differentiable(true);
        let run = run_exhaustion(
            &exh,
            &coeffs,
            &phi,
            &Supersolution::Constant(1.0),
            &ExhaustionOptions::default(),
        )
        .unwrap();
        let probe = necessary_direction_probe(&run, None, None, 0.05).unwrap();
        assert!(probe.verdict.passed, "{:?}", probe.verdict);

        let flat = run_exhaustion(
            &exh,
            &coeffs,
            &Nonlinearity::zero(),
            &Supersolution::Constant(1.0),
            &Default::default(),
        )
        .unwrap();
        assert!(matches!(
            necessary_direction_probe(&flat, None, None, 0.05),
            Err(ThinnessError::NoSplit(_))
        ));
    }
}
