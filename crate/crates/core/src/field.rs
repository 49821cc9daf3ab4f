//! Node-indexed scalar fields.

use crate::geometry::{GeometryError, Grid, Point};

/// Real values attached to every node (interior and boundary) of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    counts: [usize; 2],
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            grid.node_count(),
            "field length must match grid"
        );
        Self {
            counts: grid.counts(),
            values,
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            counts: grid.counts(),
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|k| f(grid.position(k)))
            .collect();
        Self {
            counts: grid.counts(),
            values,
        }
    }

    pub fn try_from_fn<E>(grid: &Grid, f: impl Fn(Point) -> Result<f64, E>) -> Result<Self, E> {
        let values = (0..grid.node_count())
            .map(|k| f(grid.position(k)))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Self {
            counts: grid.counts(),
            values,
        })
    }

    /// Builds a field from interior-slot values, taking boundary values from
    /// `boundary`.
    pub fn from_interior(grid: &Grid, interior: &[f64], boundary: &ScalarField) -> Self {
        assert_eq!(interior.len(), grid.interior_count());
        let mut values = boundary.values.clone();
        for (slot, &node) in grid.interior_nodes().iter().enumerate() {
            values[node] = interior[slot];
        }
        Self {
            counts: grid.counts(),
            values,
        }
    }

    /// Interior-slot values with zero boundary values.
    pub fn from_interior_zero_boundary(grid: &Grid, interior: &[f64]) -> Self {
        Self::from_interior(grid, interior, &Self::zeros(grid))
    }

    pub fn check_on(&self, grid: &Grid) -> Result<(), GeometryError> {
        if self.counts != grid.counts() {
            return Err(GeometryError::FieldMismatch {
                expected: grid.node_count(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn interior_values(&self, grid: &Grid) -> Vec<f64> {
        grid.interior_nodes()
            .iter()
            .map(|&k| self.values[k])
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.counts, other.counts);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self - other` componentwise.
    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.counts, other.counts);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            counts: self.counts,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self {
            counts: self.counts,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
