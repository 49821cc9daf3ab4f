//! Finite-difference assembly of `L = Σ a_ij ∂_i∂_j + Σ b_i ∂_i + c` on a
//! [`Grid`], with the sign checks that carry the discrete maximum principle.
//!
//! Second-order terms use central differences. Drift terms are upwinded by
//! the sign of `b_i`. The mixed term uses the sign-adapted seven-point
//! stencil (corners along the diagonal selected by `sign(a_12)`), so the
//! assembled rows keep nonnegative off-diagonal weights whenever
//! `a_ii / h_i^2 >= |a_12| / (h_x h_y)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, Var};
use crate::field::ScalarField;
use crate::geometry::{GeometryError, Grid, Point};
use crate::sparse::CsrMatrix;

pub const DEFAULT_ELLIPTICITY_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("coefficient `{name}` at node {node}: {source}")]
    Coefficient {
        name: &'static str,
        node: usize,
        source: ExprError,
    },
    #[error("ellipticity violated: smallest eigenvalue {eigenvalue:e} at node {node} ({x}, {y})")]
    Ellipticity {
        node: usize,
        x: f64,
        y: f64,
        eigenvalue: f64,
    },
    #[error("zero-order coefficient c = {value:e} > 0 at node {node} ({x}, {y})")]
    PositiveC {
        node: usize,
        x: f64,
        y: f64,
        value: f64,
    },
    #[error("zero-order mode is c = 0 but c = {value:e} at node {node}")]
    NonZeroC { node: usize, value: f64 },
    #[error("coefficient `{0}` must not depend on t")]
    DependsOnT(&'static str),
    #[error("coefficient `{0}` uses y on a one-dimensional grid")]
    UsesY(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A coefficient function of position.
#[derive(Clone)]
pub enum Coefficient {
    Const(f64),
    Expr(Arc<Expr>),
    Func(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Const(v) => write!(f, "Const({v})"),
            Coefficient::Expr(e) => write!(f, "Expr({e})"),
            Coefficient::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Const(v)
    }
}

impl From<Expr> for Coefficient {
    fn from(e: Expr) -> Self {
        match e {
            Expr::Num(v) => Coefficient::Const(v),
            e => Coefficient::Expr(Arc::new(e)),
        }
    }
}

impl Coefficient {
    pub fn func(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Func(Arc::new(f))
    }

    pub fn at(&self, p: Point, dim: usize) -> Result<f64, ExprError> {
        match self {
            Coefficient::Const(v) => Ok(*v),
            Coefficient::Func(f) => {
                let v = f(p);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(ExprError::NonFinite)
                }
            }
            Coefficient::Expr(e) => {
                let y = if dim == 2 { Some(p[1]) } else { None };
                e.eval(&Bindings {
                    x: Some(p[0]),
                    y,
                    t: None,
                })
            }
        }
    }

    fn check_vars(&self, name: &'static str, dim: usize) -> Result<(), OperatorError> {
        if let Coefficient::Expr(e) = self {
            if e.uses(Var::T) {
                return Err(OperatorError::DependsOnT(name));
            }
            if dim == 1 && e.uses(Var::Y) {
                return Err(OperatorError::UsesY(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroOrderMode {
    /// `c <= 0` (the standing assumption `L1 <= 0`).
    #[default]
    NonPositive,
    /// `c = 0` identically (`L1 = 0`; constants are harmonic).
    Zero,
}

/// Coefficients of `L`; `a_21` is `a_12`.
#[derive(Debug, Clone)]
pub struct EllipticCoefficients {
    pub a11: Coefficient,
    pub a12: Coefficient,
    pub a22: Coefficient,
    pub b1: Coefficient,
    pub b2: Coefficient,
    pub c: Coefficient,
    pub mode: ZeroOrderMode,
    pub ellipticity_eps: f64,
}

impl Default for EllipticCoefficients {
    fn default() -> Self {
        Self::laplacian()
    }
}

impl EllipticCoefficients {
    /// `L = Δ` with `c ≡ 0`.
    pub fn laplacian() -> Self {
        Self {
            a11: 1.0.into(),
            a12: 0.0.into(),
            a22: 1.0.into(),
            b1: 0.0.into(),
            b2: 0.0.into(),
            c: 0.0.into(),
            mode: ZeroOrderMode::Zero,
            ellipticity_eps: DEFAULT_ELLIPTICITY_EPS,
        }
    }

    pub fn with_drift(mut self, b1: impl Into<Coefficient>, b2: impl Into<Coefficient>) -> Self {
        self.b1 = b1.into();
        self.b2 = b2.into();
        self
    }

    /// Sets `c` and switches to the `c <= 0` mode.
    pub fn with_c(mut self, c: impl Into<Coefficient>) -> Self {
        self.c = c.into();
        self.mode = ZeroOrderMode::NonPositive;
        self
    }

    pub fn with_diffusion(
        mut self,
        a11: impl Into<Coefficient>,
        a12: impl Into<Coefficient>,
        a22: impl Into<Coefficient>,
    ) -> Self {
        self.a11 = a11.into();
        self.a12 = a12.into();
        self.a22 = a22.into();
        self
    }

    pub fn with_mode(mut self, mode: ZeroOrderMode) -> Self {
        self.mode = mode;
        self
    }

    fn named(&self) -> [(&'static str, &Coefficient); 6] {
        [
            ("a11", &self.a11),
            ("a12", &self.a12),
            ("a22", &self.a22),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("c", &self.c),
        ]
    }

    /// Rejects expressions that reference `t`, or `y` in one dimension.
    pub fn check_variables(&self, dim: usize) -> Result<(), OperatorError> {
        for (name, coef) in self.named() {
            if dim == 1 && matches!(name, "a12" | "a22" | "b2") {
                continue;
            }
            coef.check_vars(name, dim)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeCoefficients {
    a11: f64,
    a12: f64,
    a22: f64,
    b1: f64,
    b2: f64,
    c: f64,
}

fn sample(
    coeffs: &EllipticCoefficients,
    grid: &Grid,
    node: usize,
) -> Result<NodeCoefficients, OperatorError> {
    let p = grid.position(node);
    let dim = grid.dim();
    let get = |name: &'static str, c: &Coefficient| {
        c.at(p, dim)
            .map_err(|source| OperatorError::Coefficient { name, node, source })
    };
    let two_d = dim == 2;
    Ok(NodeCoefficients {
        a11: get("a11", &coeffs.a11)?,
        a12: if two_d { get("a12", &coeffs.a12)? } else { 0.0 },
        a22: if two_d { get("a22", &coeffs.a22)? } else { 0.0 },
        b1: get("b1", &coeffs.b1)?,
        b2: if two_d { get("b2", &coeffs.b2)? } else { 0.0 },
        c: get("c", &coeffs.c)?,
    })
}

/// Outcome of the row-sign certificate on `-L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignReport {
    pub m_matrix: bool,
    /// First offending interior slot and a description, when not certified.
    pub violation: Option<(usize, String)>,
}

/// `L` restricted to interior unknowns plus its coupling to boundary values.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    /// Interior-to-interior block, indexed by interior slots.
    matrix: CsrMatrix,
    /// Interior rows, columns indexed by node; only boundary columns appear.
    coupling: CsrMatrix,
    mode: ZeroOrderMode,
    signs: SignReport,
}

/// Assembles the discrete operator on `grid`.
///
/// Fails on non-elliptic `a`, on `c > 0`, and on `c != 0` in [`ZeroOrderMode::Zero`].
/// A mixed term strong enough to break the sign structure does not fail;
/// it is reported through [`DiscreteOperator::m_matrix`].
pub fn assemble(
    grid: Arc<Grid>,
    coeffs: &EllipticCoefficients,
) -> Result<DiscreteOperator, OperatorError> {
    let dim = grid.dim();
    coeffs.check_variables(dim)?;
    let [hx, hy] = grid.spacing();
    let n = grid.interior_count();
    let mut a_rows = Vec::with_capacity(n);
    let mut b_rows = Vec::with_capacity(n);
    let mut worst_ellipticity: Option<(usize, f64)> = None;

    for &node in grid.interior_nodes() {
        let k = sample(coeffs, &grid, node)?;
        let p = grid.position(node);
        let eig = if dim == 1 {
            k.a11
        } else {
            let tr = k.a11 + k.a22;
            0.5 * (tr - ((k.a11 - k.a22).powi(2) + 4.0 * k.a12 * k.a12).sqrt())
        };
        if worst_ellipticity.is_none_or(|(_, e)| eig < e) {
            worst_ellipticity = Some((node, eig));
        }
        if k.c > 0.0 {
            return Err(OperatorError::PositiveC {
                node,
                x: p[0],
                y: p[1],
                value: k.c,
            });
        }
        if coeffs.mode == ZeroOrderMode::Zero && k.c != 0.0 {
            return Err(OperatorError::NonZeroC { node, value: k.c });
        }

        let mut stencil: Vec<((i64, i64), f64)> = Vec::with_capacity(9);
        let mut center = k.c;
        // a11 u_xx with upwinded b1 u_x
        let wx = k.a11 / (hx * hx);
        stencil.push(((1, 0), wx + k.b1.max(0.0) / hx));
        stencil.push(((-1, 0), wx + (-k.b1).max(0.0) / hx));
        center -= 2.0 * wx + k.b1.abs() / hx;
        if dim == 2 {
            let wy = k.a22 / (hy * hy);
            stencil.push(((0, 1), wy + k.b2.max(0.0) / hy));
            stencil.push(((0, -1), wy + (-k.b2).max(0.0) / hy));
            center -= 2.0 * wy + k.b2.abs() / hy;
            if k.a12 != 0.0 {
                let w = k.a12.abs() / (hx * hy);
                let s = if k.a12 > 0.0 { 1 } else { -1 };
                stencil.push(((1, s), w));
                stencil.push(((-1, -s), w));
                for off in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    stencil.push((off, -w));
                }
                center += 2.0 * w;
            }
        }

        let slot = grid.interior_slot(node).expect("interior");
        let mut a_row = vec![(slot, center)];
        let mut b_row = Vec::new();
        for ((di, dj), w) in stencil {
            let nb = grid
                .neighbor(node, di, dj)
                .expect("interior nodes have all neighbors");
            match grid.interior_slot(nb) {
                Some(s) => a_row.push((s, w)),
                None => b_row.push((nb, w)),
            }
        }
        a_rows.push(a_row);
        b_rows.push(b_row);
    }

    if let Some((node, eig)) = worst_ellipticity {
        if !(eig > coeffs.ellipticity_eps) {
            let p = grid.position(node);
            return Err(OperatorError::Ellipticity {
                node,
                x: p[0],
                y: p[1],
                eigenvalue: eig,
            });
        }
    }

    let matrix = CsrMatrix::from_rows(n, a_rows);
    let coupling = CsrMatrix::from_rows(grid.node_count(), b_rows);
    let signs = certify(&matrix, &coupling);
    Ok(DiscreteOperator {
        grid,
        matrix,
        coupling,
        mode: coeffs.mode,
        signs,
    })
}

fn certify(matrix: &CsrMatrix, coupling: &CsrMatrix) -> SignReport {
    for i in 0..matrix.nrows() {
        let diag = matrix.get(i, i);
        if !(diag < 0.0) {
            return SignReport {
                m_matrix: false,
                violation: Some((i, format!("diagonal of -L is {:e}", -diag))),
            };
        }
        let mut row_sum = 0.0;
        let mut scale = 0.0f64;
        let interior = matrix.row(i).filter(|&(c, _)| c != i);
        for (_, v) in interior.chain(coupling.row(i)) {
            row_sum += v;
            scale = scale.max(v.abs());
            if v < 0.0 {
                return SignReport {
                    m_matrix: false,
                    violation: Some((i, format!("off-diagonal of -L is {:e} > 0", -v))),
                };
            }
        }
        row_sum += diag;
        scale = scale.max(diag.abs());
        if row_sum > 1e-12 * scale {
            return SignReport {
                m_matrix: false,
                violation: Some((i, format!("row sum of -L is {:e} < 0", -row_sum))),
            };
        }
    }
    SignReport {
        m_matrix: true,
        violation: None,
    }
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn coupling(&self) -> &CsrMatrix {
        &self.coupling
    }

    /// True when `-L` passed the M-matrix row-sign certificate.
    pub fn m_matrix(&self) -> bool {
        self.signs.m_matrix
    }

    pub fn sign_report(&self) -> &SignReport {
        &self.signs
    }

    pub fn mode(&self) -> ZeroOrderMode {
        self.mode
    }

    /// `(Lu)` at interior slots, using the boundary values carried by `u`.
    pub fn apply_interior(&self, u: &[f64]) -> Vec<f64> {
        let interior: Vec<f64> = self.grid.interior_nodes().iter().map(|&k| u[k]).collect();
        let mut out = self.matrix.matvec(&interior);
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.coupling.row(i).map(|(c, w)| w * u[c]).sum::<f64>();
        }
        out
    }

    /// `Lu` at interior nodes; boundary entries of the result are zero.
    pub fn apply(&self, u: &ScalarField) -> Result<ScalarField, OperatorError> {
        u.check_on(&self.grid)?;
        let out = self.apply_interior(u.values());
        Ok(ScalarField::from_interior_zero_boundary(&self.grid, &out))
    }

    /// `B f`: the boundary contribution to interior rows.
    pub fn boundary_rhs(&self, f: &[f64]) -> Vec<f64> {
        self.coupling.matvec(f)
    }
}

/// Result of checking `Ls <= tol` at every interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperharmonicReport {
    pub max_ls: f64,
    pub worst_node: Option<usize>,
    pub min_s: f64,
    pub nonnegative: bool,
    pub passed: bool,
}

pub fn check_superharmonic(
    op: &DiscreteOperator,
    s: &ScalarField,
    tol: f64,
) -> Result<SuperharmonicReport, OperatorError> {
    s.check_on(op.grid())?;
    let ls = op.apply_interior(s.values());
    let mut max_ls = f64::NEG_INFINITY;
    let mut worst = None;
    for (slot, &v) in ls.iter().enumerate() {
        if v > max_ls {
            max_ls = v;
            worst = Some(op.grid().interior_nodes()[slot]);
        }
    }
    let min_s = s.min();
    Ok(SuperharmonicReport {
        max_ls,
        worst_node: worst,
        min_s,
        nonnegative: min_s >= 0.0,
        passed: max_ls <= tol,
    })
}
