//! The absorption term `φ(x, t)`: nonnegative, nondecreasing in `t` and zero
//! for `t <= 0`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{Bindings, Expr, ExprError, Var};
use crate::geometry::{Grid, Point};
use crate::par::{try_map_indexed, Execution};

pub const DEFAULT_MONOTONE_SAMPLES: usize = 64;
const T_PROBES: usize = 33;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("phi at ({x}, {y}), t = {t}: {source}")]
    Eval {
        x: f64,
        y: f64,
        t: f64,
        source: ExprError,
    },
    #[error("phi({x}, {y}, {t}) = {value} is not finite")]
    NonFinite { x: f64, y: f64, t: f64, value: f64 },
    #[error("phi({x}, {y}, {t}) = {value} is negative")]
    Negative { x: f64, y: f64, t: f64, value: f64 },
    #[error("phi({x}, {y}, t) decreases between t = {t1} and t = {t2}: {v1} > {v2}")]
    NotMonotone {
        x: f64,
        y: f64,
        t1: f64,
        t2: f64,
        v1: f64,
        v2: f64,
    },
    #[error("phi({x}, {y}, {t}) = {value} but t <= 0")]
    NonZeroBelowZero { x: f64, y: f64, t: f64, value: f64 },
    #[error("domination fails at ({x}, {y}), t = {t}: {lhs} > {rhs}")]
    NotDominated {
        x: f64,
        y: f64,
        t: f64,
        lhs: f64,
        rhs: f64,
    },
    #[error("phi uses y on a one-dimensional grid")]
    UsesY,
}

type PhiFn = dyn Fn(Point, f64) -> Result<f64, ExprError> + Send + Sync;

#[derive(Clone)]
pub struct Nonlinearity {
    f: Arc<PhiFn>,
    label: String,
    differentiable: bool,
    pub monotone_check_samples: usize,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("differentiable", &self.differentiable)
            .finish()
    }
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self::from_fn("0", |_, _| 0.0).with_differentiable(true)
    }

    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(move |p, t| Ok(f(p, t))),
            label: label.into(),
            differentiable: false,
            monotone_check_samples: DEFAULT_MONOTONE_SAMPLES,
        }
    }

    /// `φ` from an expression in `x`, `y` and `t`.
    pub fn from_expr(expr: Expr, dim: usize) -> Result<Self, NonlinearityError> {
        if dim == 1 && expr.uses(Var::Y) {
            return Err(NonlinearityError::UsesY);
        }
        let label = expr.to_string();
        let expr = Arc::new(expr);
        Ok(Self {
            f: Arc::new(move |p, t| expr.eval(&Bindings::xyt(p[0], p[1], t))),
            label,
            differentiable: false,
            monotone_check_samples: DEFAULT_MONOTONE_SAMPLES,
        })
    }

    /// Declares that `t ↦ φ(x, t)` may be differentiated numerically (enables Newton).
    pub fn with_differentiable(mut self, yes: bool) -> Self {
        self.differentiable = yes;
        self
    }

    pub fn differentiable(&self) -> bool {
        self.differentiable
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `φ(p, t)`, checked finite and nonnegative.
    pub fn value(&self, p: Point, t: f64) -> Result<f64, NonlinearityError> {
        let v = (self.f)(p, t).map_err(|source| NonlinearityError::Eval {
            x: p[0],
            y: p[1],
            t,
            source,
        })?;
        if !v.is_finite() {
            return Err(NonlinearityError::NonFinite {
                x: p[0],
                y: p[1],
                t,
                value: v,
            });
        }
        if v < 0.0 {
            return Err(NonlinearityError::Negative {
                x: p[0],
                y: p[1],
                t,
                value: v,
            });
        }
        Ok(v)
    }

    /// Forward difference `∂_t φ(p, t)` with step `1e-6 (1 + |t|)`.
    pub fn derivative(&self, p: Point, t: f64) -> Result<f64, NonlinearityError> {
        let eps = 1e-6 * (1.0 + t.abs());
        Ok((self.value(p, t + eps)? - self.value(p, t)?) / eps)
    }

    pub fn sum(a: &Nonlinearity, b: &Nonlinearity) -> Nonlinearity {
        let (fa, fb) = (a.f.clone(), b.f.clone());
        Self {
            f: Arc::new(move |p, t| Ok(fa(p, t)? + fb(p, t)?)),
            label: format!("({}) + ({})", a.label, b.label),
            differentiable: a.differentiable && b.differentiable,
            monotone_check_samples: a.monotone_check_samples.max(b.monotone_check_samples),
        }
    }

    pub fn scaled(&self, k: f64) -> Nonlinearity {
        assert!(k >= 0.0, "scale must be nonnegative");
        let f = self.f.clone();
        Self {
            f: Arc::new(move |p, t| Ok(k * f(p, t)?)),
            label: format!("{k} * ({})", self.label),
            ..self.clone()
        }
    }

    /// `φ · 1_M` for a point predicate `M`.
    pub fn restricted(
        &self,
        label: &str,
        mask: impl Fn(Point) -> bool + Send + Sync + 'static,
    ) -> Nonlinearity {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |p, t| if mask(p) { f(p, t) } else { Ok(0.0) }),
            label: format!("({}) on {label}", self.label),
            ..self.clone()
        }
    }

    /// `φ(·, u)` at the interior nodes of `grid`, for a full nodal vector `u`.
    pub fn eval_interior(
        &self,
        grid: &Grid,
        u: &[f64],
        exec: Execution,
    ) -> Result<Vec<f64>, NonlinearityError> {
        let nodes = grid.interior_nodes();
        try_map_indexed(exec, nodes.len(), |s| {
            let k = nodes[s];
            self.value(grid.position(k), u[k])
        })
    }

    /// `∂_t φ(·, u)` at the interior nodes.
    pub fn derivative_interior(
        &self,
        grid: &Grid,
        u: &[f64],
        exec: Execution,
    ) -> Result<Vec<f64>, NonlinearityError> {
        let nodes = grid.interior_nodes();
        try_map_indexed(exec, nodes.len(), |s| {
            let k = nodes[s];
            self.derivative(grid.position(k), u[k])
        })
    }

    fn sample_nodes(&self, grid: &Grid) -> Vec<usize> {
        let n = grid.node_count();
        let m = self.monotone_check_samples.clamp(1, n);
        (0..m).map(|i| i * (n - 1) / (m - 1).max(1)).collect()
    }

    fn probes(t_max: f64) -> Vec<f64> {
        let half = (T_PROBES / 2) as f64;
        (0..T_PROBES)
            .map(|i| t_max * (i as f64 - half) / half)
            .collect()
    }

    /// Sampled check of nonnegativity, monotonicity in `t` on `[-t_max, t_max]`
    /// and vanishing for `t <= 0`.
    pub fn validate(&self, grid: &Grid, t_max: f64) -> Result<(), NonlinearityError> {
        let ts = Self::probes(t_max.max(1.0));
        for k in self.sample_nodes(grid) {
            let p = grid.position(k);
            let mut prev: Option<(f64, f64)> = None;
            for &t in &ts {
                let v = self.value(p, t)?;
                if t <= 0.0 && v != 0.0 {
                    return Err(NonlinearityError::NonZeroBelowZero {
                        x: p[0],
                        y: p[1],
                        t,
                        value: v,
                    });
                }
                if let Some((t1, v1)) = prev {
                    if v < v1 {
                        return Err(NonlinearityError::NotMonotone {
                            x: p[0],
                            y: p[1],
                            t1,
                            t2: t,
                            v1,
                            v2: v,
                        });
                    }
                }
                prev = Some((t, v));
            }
        }
        Ok(())
    }

    /// Sampled check of `self(x, t) <= other(x, t)` for `t` in `[0, t_max]`.
    pub fn dominated_by(
        &self,
        other: &Nonlinearity,
        grid: &Grid,
        t_max: f64,
    ) -> Result<(), NonlinearityError> {
        let ts = Self::probes(t_max.max(1.0));
        for k in self.sample_nodes(grid) {
            let p = grid.position(k);
            for &t in ts.iter().filter(|&&t| t >= 0.0) {
                let (lhs, rhs) = (self.value(p, t)?, other.value(p, t)?);
                if lhs > rhs {
                    return Err(NonlinearityError::NotDominated {
                        x: p[0],
                        y: p[1],
                        t,
                        lhs,
                        rhs,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new_box(&[(0.0, 1.0), (0.0, 2.0)], &[0.25, 0.25]).unwrap()
    }

    fn parsed(s: &str) -> Nonlinearity {
        Nonlinearity::from_expr(Expr::parse(s).unwrap(), 2).unwrap()
    }

    #[test]
    fn accepts_hypotheses() {
        let g = grid();
        for s in [
            "max(t, 0)",
            "(y > 1) * max(t, 0)",
            "sqrt(max(t, 0))",
            "max(t,0)^3 * (1 + x*x)",
        ] {
            parsed(s).validate(&g, 4.0).unwrap();
        }
        Nonlinearity::zero().validate(&g, 4.0).unwrap();
    }

    #[test]
    fn rejects_violations() {
        let g = grid();
        assert!(matches!(
            parsed("exp(t)").validate(&g, 1.0),
            Err(NonlinearityError::NonZeroBelowZero { .. })
        ));
        assert!(matches!(
            parsed("t").validate(&g, 1.0),
            Err(NonlinearityError::Negative { .. })
        ));
        assert!(matches!(
            parsed("max(t, 0) * max(1 - t, 0)").validate(&g, 2.0),
            Err(NonlinearityError::NotMonotone { .. })
        ));
        assert!(matches!(
            parsed("log(t)").value([0.0, 0.0], -1.0),
            Err(NonlinearityError::Eval { .. })
        ));
        assert!(matches!(
            Nonlinearity::from_expr(Expr::parse("y*t").unwrap(), 1),
            Err(NonlinearityError::UsesY)
        ));
    }

    #[test]
    fn combinators() {
        let g = grid();
        let a = parsed("max(t, 0)");
        let half = a.scaled(0.5);
        half.dominated_by(&a, &g, 3.0).unwrap();
        assert!(a.dominated_by(&half, &g, 3.0).is_err());
        let s = Nonlinearity::sum(&a, &half);
        assert_eq!(s.value([0.0, 0.0], 2.0).unwrap(), 3.0);
        let r = a.restricted("y > 1", |p| p[1] > 1.0);
        assert_eq!(r.value([0.0, 0.5], 2.0).unwrap(), 0.0);
        assert_eq!(r.value([0.0, 1.5], 2.0).unwrap(), 2.0);
        assert!((a.derivative([0.0, 0.0], 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn interior_evaluation_policies_agree() {
        let g = grid();
        let u: Vec<f64> = (0..g.node_count()).map(|k| k as f64 * 0.1 - 1.0).collect();
        let a = parsed("(y > 1) * max(t, 0)^2");
        let s = a.eval_interior(&g, &u, Execution::Sequential).unwrap();
        let p = a.eval_interior(&g, &u, Execution::Parallel).unwrap();
        assert_eq!(s, p);
        assert_eq!(s.len(), g.interior_count());
    }
}
