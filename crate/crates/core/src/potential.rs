//! Discrete Dirichlet solution operator `H_D`, discrete Green potential `G_D`
//! and closed-form kernels used as oracles.
//!
//! Sign convention: `G_D psi` is the solution `g` of `L g = -psi` with zero
//! boundary values, so `G_D psi >= 0` for `psi >= 0` when the assembled
//! operator is an M-matrix.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::ColMut;
use thiserror::Error;

use crate::field::ScalarField;
use crate::geometry::{GeometryError, Grid, Point};
use crate::operator::DiscreteOperator;
use crate::par::{map_slice, Execution};
use crate::quadrature::simpson_weights;
use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("interior system is singular: {0}")]
    Singular(String),
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("source and target coincide at {0:?}")]
    Coincident(Vec<f64>),
    #[error("height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("sampled line: {0}")]
    Sampling(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Sparse LU factorization of `scale * M + diag(shift)` for a square CSR matrix.
#[derive(Clone)]
pub struct Factorization {
    lu: Arc<Lu<usize, f64>>,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    pub fn new(m: &CsrMatrix, scale: f64, shift: Option<&[f64]>) -> Result<Self, PotentialError> {
        let n = m.nrows();
        if n == 0 {
            return Err(PotentialError::Singular("empty system".into()));
        }
        let lu = m
            .to_faer_shifted(scale, shift)
            .sp_lu()
            .map_err(|e| PotentialError::Singular(format!("{e:?}")))?;
        Ok(Self {
            lu: Arc::new(lu),
            n,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, PotentialError> {
        assert_eq!(rhs.len(), self.n);
        let mut x = rhs.to_vec();
        self.lu
            .solve_in_place(ColMut::from_slice_mut(&mut x).as_mat_mut());
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(PotentialError::Singular("non-finite solution".into()))
        }
    }
}

/// Factorized `-A` for an assembled operator, shared by `G_D` and `H_D`.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    op: Arc<DiscreteOperator>,
    fact: Factorization,
}

impl GreenOperator {
    pub fn new(op: Arc<DiscreteOperator>) -> Result<Self, PotentialError> {
        let fact = Factorization::new(op.matrix(), -1.0, None)?;
        Ok(Self { op, fact })
    }

    pub fn operator(&self) -> &Arc<DiscreteOperator> {
        &self.op
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.op.grid()
    }

    /// Solves `(-A) g = psi` on interior slots.
    pub fn green_interior(&self, psi: &[f64]) -> Result<Vec<f64>, PotentialError> {
        self.fact.solve(psi)
    }

    /// `G_D psi`; only the interior values of `psi` are read.
    pub fn green_potential(&self, psi: &ScalarField) -> Result<ScalarField, PotentialError> {
        psi.check_on(self.grid())?;
        let g = self.green_interior(&psi.interior_values(self.grid()))?;
        Ok(ScalarField::from_interior_zero_boundary(self.grid(), &g))
    }

    /// Interior values of `H_D f` from a full field whose boundary entries are the data.
    pub fn harmonic_interior(&self, f: &[f64]) -> Result<Vec<f64>, PotentialError> {
        self.fact.solve(&self.op.boundary_rhs(f))
    }

    /// `H_D f`: equal to `f` on the boundary, `L h = 0` inside.
    pub fn harmonic_extension(&self, f: &ScalarField) -> Result<ScalarField, PotentialError> {
        f.check_on(self.grid())?;
        let h = self.harmonic_interior(f.values())?;
        Ok(ScalarField::from_interior(self.grid(), &h, f))
    }

    /// Discrete Green function with pole at `source`: `G_D` applied to the
    /// delta of mass one (value `1/h^d` at the node).
    pub fn green_column(&self, source: usize) -> Result<ScalarField, PotentialError> {
        let grid = self.grid();
        let slot = grid.interior_slot(source).ok_or_else(|| {
            PotentialError::OutsideDomain(grid.position(source)[..grid.dim()].to_vec())
        })?;
        let mut psi = vec![0.0; grid.interior_count()];
        psi[slot] = 1.0 / grid.cell_volume();
        let g = self.green_interior(&psi)?;
        Ok(ScalarField::from_interior_zero_boundary(grid, &g))
    }
}

/// Green function of `d²/dx²` on `(a, b)` with `G'' = -δ_y`.
pub fn interval_green(x: f64, y: f64, (a, b): (f64, f64)) -> Result<f64, PotentialError> {
    for p in [x, y] {
        if !(p > a && p < b) {
            return Err(PotentialError::OutsideDomain(vec![p]));
        }
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    Ok((lo - a) * (b - hi) / (b - a))
}

/// Green function of the Laplacian on the upper half-plane.
pub fn halfplane_green(z: Point, w: Point) -> Result<f64, PotentialError> {
    for p in [z, w] {
        if !(p[1] > 0.0) {
            return Err(PotentialError::OutsideDomain(p.to_vec()));
        }
    }
    let dx = z[0] - w[0];
    let near = dx * dx + (z[1] - w[1]).powi(2);
    if near == 0.0 {
        return Err(PotentialError::Coincident(z.to_vec()));
    }
    let far = dx * dx + (z[1] + w[1]).powi(2);
    Ok((far / near).ln() / (4.0 * PI))
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: usize) -> f64 {
    let (mut g, mut z) = if m.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while z < 0.5 * m as f64 {
        g *= z;
        z += 1.0;
    }
    g
}

/// Normalizing constant `c_n` of the Poisson kernel of the half-space `ℝⁿ x (0, ∞)`.
pub fn poisson_constant(n: usize) -> f64 {
    gamma_half(n + 1) / PI.powf(0.5 * (n + 1) as f64)
}

/// `P(x, y) = c_n y / (|x|² + y²)^{(n+1)/2}` with `n = x.len()`.
pub fn poisson_kernel_halfspace(x: &[f64], y: f64) -> Result<f64, PotentialError> {
    if !(y > 0.0) {
        return Err(PotentialError::NonPositiveHeight(y));
    }
    assert!(!x.is_empty(), "tangential dimension must be at least one");
    let n = x.len();
    let r2: f64 = x.iter().map(|v| v * v).sum::<f64>() + y * y;
    Ok(poisson_constant(n) * y / r2.powf(0.5 * (n + 1) as f64))
}

/// Boundary data sampled at `start + k * step`, `k = 0..values.len()`.
///
/// Values beyond the sampled window are taken to be the end values. At a jump
/// located on a sample node, store the mean of the one-sided limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLine {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

pub const DEFAULT_TRUNCATION: f64 = 100.0;

impl SampledLine {
    /// Samples `f` on `[-radius, radius]` with `intervals` (even) panels.
    pub fn from_fn(radius: f64, intervals: usize, f: impl Fn(f64) -> f64) -> Self {
        let step = 2.0 * radius / intervals as f64;
        let values = (0..=intervals)
            .map(|k| f(-radius + k as f64 * step))
            .collect();
        Self {
            start: -radius,
            step,
            values,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    fn validate(&self) -> Result<(), PotentialError> {
        let n = self.values.len();
        if n < 3 || n.is_multiple_of(2) {
            return Err(PotentialError::Sampling(format!(
                "need an odd number of at least 3 samples, got {n}"
            )));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(PotentialError::Sampling(format!("bad step {}", self.step)));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(PotentialError::Sampling(format!("non-finite sample {v}")));
        }
        Ok(())
    }
}

/// Poisson integral `∫ P(x - t, y) f(t) dt` at each point `(x, y)`, `y > 0`.
///
/// Composite Simpson over the sampled window; the two tails carry the end
/// values and are integrated in closed form.
pub fn poisson_extension(
    f: &SampledLine,
    points: &[Point],
    exec: Execution,
) -> Result<Vec<f64>, PotentialError> {
    f.validate()?;
    if let Some(p) = points.iter().find(|p| !(p[1] > 0.0)) {
        return Err(PotentialError::NonPositiveHeight(p[1]));
    }
    let weights = simpson_weights(f.values.len() - 1, f.step);
    let (lo, hi) = (f.start, f.end());
    let first = f.values[0];
    let last = *f.values.last().unwrap();
    Ok(map_slice(exec, points, |&[x, y]| {
        let body: f64 = weights
            .iter()
            .zip(&f.values)
            .enumerate()
            .map(|(k, (w, v))| {
                let dx = x - (f.start + k as f64 * f.step);
                w * v * y / (PI * (dx * dx + y * y))
            })
            .sum();
        let right = 0.5 - ((hi - x) / y).atan() / PI;
        let left = 0.5 - ((x - lo) / y).atan() / PI;
        body + first * left + last * right
    }))
}

/// [`poisson_extension`] evaluated at every node of `grid`.
pub fn poisson_extension_on_grid(
    f: &SampledLine,
    grid: &Grid,
    exec: Execution,
) -> Result<ScalarField, PotentialError> {
    let points: Vec<Point> = (0..grid.node_count()).map(|k| grid.position(k)).collect();
    Ok(ScalarField::from_values(
        grid,
        poisson_extension(f, &points, exec)?,
    ))
}
