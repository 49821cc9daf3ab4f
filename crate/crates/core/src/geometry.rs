//! Rectilinear grids, nested exhaustions and exact restriction between them.
//!
//! Node positions are always computed as `origin + k * spacing` from a global
//! integer lattice coordinate `k`. Grids that share `origin` and `spacing`
//! therefore agree bit-for-bit on the coordinates of shared nodes, which is
//! what makes restriction along an exhaustion exact.

use std::sync::Arc;

use thiserror::Error;

use crate::field::ScalarField;

/// A point in the plane; one-dimensional grids use `y = 0`.
pub type Point = [f64; 2];

const COMMENSURATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("degenerate box on axis {axis}: [{lo}, {hi}]")]
    DegenerateBox { axis: usize, lo: f64, hi: f64 },
    #[error("spacing {spacing} on axis {axis} must be positive")]
    NonPositiveSpacing { axis: usize, spacing: f64 },
    #[error("spacing {spacing} does not divide the length {length} of axis {axis}")]
    NotCommensurate {
        axis: usize,
        length: f64,
        spacing: f64,
    },
    #[error("axis {axis} has {count} nodes, at least 3 are required")]
    TooFewNodes { axis: usize, count: usize },
    #[error("growth factor {0} must exceed 1")]
    GrowthFactor(f64),
    #[error("an exhaustion needs at least 2 stages, got {0}")]
    TooFewStages(usize),
    #[error("stage {stage} does not nest on the common lattice: {reason}")]
    NonNesting { stage: usize, reason: String },
    #[error("anchor ({x}, {y}) is not an interior lattice node of stage 0")]
    BadAnchor { x: f64, y: f64 },
    #[error("grids are not nested: {0}")]
    NotNested(String),
    #[error("field has {found} nodes, grid has {expected}")]
    FieldMismatch { expected: usize, found: usize },
}

/// A rectilinear lattice grid over an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 2],
    spacing: [f64; 2],
    lattice_lo: [i64; 2],
    counts: [usize; 2],
    slot_of: Vec<Option<usize>>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

fn intervals(length: f64, spacing: f64, axis: usize) -> Result<usize, GeometryError> {
    let n = length / spacing;
    let rounded = n.round();
    if (n - rounded).abs() > COMMENSURATE_TOL * rounded.max(1.0) {
        return Err(GeometryError::NotCommensurate {
            axis,
            length,
            spacing,
        });
    }
    Ok(rounded as usize)
}

impl Grid {
    /// Builds a grid whose boundary nodes lie on the faces of `bbox`.
    ///
    /// `spacing` holds either one value (used on every axis) or one per axis.
    pub fn new_box(bbox: &[(f64, f64)], spacing: &[f64]) -> Result<Self, GeometryError> {
        let dim = bbox.len();
        if !(1..=2).contains(&dim) {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        let mut origin = [0.0; 2];
        let mut h = [1.0; 2];
        let mut counts = [1usize; 2];
        for axis in 0..dim {
            let (lo, hi) = bbox[axis];
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(GeometryError::DegenerateBox { axis, lo, hi });
            }
            let step = *spacing
                .get(axis)
                .or_else(|| spacing.first())
                .unwrap_or(&0.0);
            if !(step > 0.0) || !step.is_finite() {
                return Err(GeometryError::NonPositiveSpacing {
                    axis,
                    spacing: step,
                });
            }
            let n = intervals(hi - lo, step, axis)?;
            origin[axis] = lo;
            h[axis] = step;
            counts[axis] = n + 1;
        }
        Self::from_lattice(dim, origin, h, [0, 0], counts)
    }

    pub(crate) fn from_lattice(
        dim: usize,
        origin: [f64; 2],
        spacing: [f64; 2],
        lattice_lo: [i64; 2],
        counts: [usize; 2],
    ) -> Result<Self, GeometryError> {
        for (axis, &count) in counts.iter().enumerate().take(dim) {
            if count < 3 {
                return Err(GeometryError::TooFewNodes { axis, count });
            }
        }
        let [nx, ny] = counts;
        let total = nx * ny;
        let mut slot_of = vec![None; total];
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let inside_x = i > 0 && i + 1 < nx;
                let inside_y = dim == 1 || (j > 0 && j + 1 < ny);
                if inside_x && inside_y {
                    slot_of[k] = Some(interior.len());
                    interior.push(k);
                } else {
                    boundary.push(k);
                }
            }
        }
        Ok(Self {
            dim,
            origin,
            spacing,
            lattice_lo,
            counts,
            slot_of,
            interior,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn node_count(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Node indices of interior nodes, in slot order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.slot_of[node].is_some()
    }

    /// Position of `node` in the interior unknown vector, if it is interior.
    pub fn interior_slot(&self, node: usize) -> Option<usize> {
        self.slot_of[node]
    }

    /// Cell measure `h^d` used to normalize discrete point masses.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            self.spacing[0] * self.spacing[1]
        }
    }

    fn local(&self, node: usize) -> [usize; 2] {
        [node % self.counts[0], node / self.counts[0]]
    }

    /// Global lattice coordinate of `node`.
    pub fn lattice(&self, node: usize) -> [i64; 2] {
        let [i, j] = self.local(node);
        [self.lattice_lo[0] + i as i64, self.lattice_lo[1] + j as i64]
    }

    pub fn position(&self, node: usize) -> Point {
        let [kx, ky] = self.lattice(node);
        let x = self.origin[0] + kx as f64 * self.spacing[0];
        let y = if self.dim == 1 {
            0.0
        } else {
            self.origin[1] + ky as f64 * self.spacing[1]
        };
        [x, y]
    }

    pub fn node_at_lattice(&self, k: [i64; 2]) -> Option<usize> {
        let i = k[0] - self.lattice_lo[0];
        let j = k[1] - self.lattice_lo[1];
        if i < 0 || j < 0 || i as usize >= self.counts[0] || j as usize >= self.counts[1] {
            return None;
        }
        Some(j as usize * self.counts[0] + i as usize)
    }

    /// Neighbor of `node` at lattice offset `(di, dj)`.
    pub fn neighbor(&self, node: usize, di: i64, dj: i64) -> Option<usize> {
        let [kx, ky] = self.lattice(node);
        self.node_at_lattice([kx + di, ky + dj])
    }

    /// Closed bounding box per axis.
    pub fn bbox(&self) -> [(f64, f64); 2] {
        let mut out = [(0.0, 0.0); 2];
        for (axis, slot) in out.iter_mut().enumerate().take(self.dim) {
            let lo = self.origin[axis] + self.lattice_lo[axis] as f64 * self.spacing[axis];
            let hi = lo + (self.counts[axis] - 1) as f64 * self.spacing[axis];
            *slot = (lo, hi);
        }
        out
    }

    /// The node whose lattice point is exactly `p` (within 1e-9 spacings).
    pub fn node_at_point(&self, p: Point) -> Option<usize> {
        let mut k = [0i64; 2];
        for axis in 0..self.dim {
            let r = (p[axis] - self.origin[axis]) / self.spacing[axis];
            if (r - r.round()).abs() > COMMENSURATE_TOL * r.abs().max(1.0) {
                return None;
            }
            k[axis] = r.round() as i64;
        }
        if self.dim == 1 {
            k[1] = self.lattice_lo[1];
        }
        self.node_at_lattice(k)
    }

    /// Nearest node to `p`, or `None` when `p` lies outside the closed box.
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        let bbox = self.bbox();
        let mut k = [self.lattice_lo[0], self.lattice_lo[1]];
        for axis in 0..self.dim {
            let (lo, hi) = bbox[axis];
            if p[axis] < lo || p[axis] > hi {
                return None;
            }
            k[axis] = ((p[axis] - self.origin[axis]) / self.spacing[axis]).round() as i64;
        }
        self.node_at_lattice(k)
    }

    fn shares_lattice(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && (0..self.dim)
                .all(|a| self.spacing[a] == other.spacing[a] && self.origin[a] == other.origin[a])
    }

    /// True when every node of `self` is a node of `other` on the same lattice.
    pub fn nests_in(&self, other: &Grid) -> bool {
        if !self.shares_lattice(other) {
            return false;
        }
        (0..self.dim).all(|a| {
            let lo = self.lattice_lo[a];
            let hi = lo + self.counts[a] as i64 - 1;
            let olo = other.lattice_lo[a];
            let ohi = olo + other.counts[a] as i64 - 1;
            lo >= olo && hi <= ohi
        })
    }
}

/// Restricts a field on `from` to the nodes of the nested grid `to`.
/// Values are copied, never interpolated.
pub fn restrict(field: &ScalarField, from: &Grid, to: &Grid) -> Result<ScalarField, GeometryError> {
    field.check_on(from)?;
    if !to.shares_lattice(from) {
        return Err(GeometryError::NotNested(
            "grids differ in spacing or lattice origin".into(),
        ));
    }
    if !to.nests_in(from) {
        return Err(GeometryError::NotNested(
            "target box is not contained in source box".into(),
        ));
    }
    let values = (0..to.node_count())
        .map(|k| {
            let src = from.node_at_lattice(to.lattice(k)).expect("nested lattice");
            field.values()[src]
        })
        .collect();
    Ok(ScalarField::from_values(to, values))
}

/// How the common lattice spacing of an exhaustion is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacingRule {
    Fixed(f64),
    /// Spacing such that the finest stage has this many nodes along axis 0.
    FinestNodes(usize),
}

/// Nested grids `D_0 ⊂ D_1 ⊂ ...` on one lattice, with an anchor node shared
/// by every stage.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    stages: Vec<Arc<Grid>>,
    anchor: Point,
    anchor_nodes: Vec<usize>,
    radii: Vec<f64>,
}

impl Exhaustion {
    pub fn stages(&self) -> &[Arc<Grid>] {
        &self.stages
    }

    pub fn anchor(&self) -> Point {
        self.anchor
    }

    /// Node index of the anchor in each stage.
    pub fn anchor_nodes(&self) -> &[usize] {
        &self.anchor_nodes
    }

    /// Half-width (box mode) or radius (half-plane mode) of each stage.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Moves the anchor. It must be an interior lattice node of stage 0.
    pub fn with_anchor(mut self, anchor: Point) -> Result<Self, GeometryError> {
        self.anchor_nodes = locate_anchor(&self.stages, anchor)?;
        self.anchor = anchor;
        Ok(self)
    }

    fn validate(stages: &[Arc<Grid>]) -> Result<(), GeometryError> {
        for (n, pair) in stages.windows(2).enumerate() {
            let (inner, outer) = (&pair[0], &pair[1]);
            if !inner.nests_in(outer) {
                return Err(GeometryError::NonNesting {
                    stage: n + 1,
                    reason: "stage nodes are not a subset of the next stage".into(),
                });
            }
            for &node in inner.interior_nodes() {
                let k = inner.lattice(node);
                let outer_node = outer.node_at_lattice(k).expect("nested");
                if !outer.is_interior(outer_node) {
                    return Err(GeometryError::NonNesting {
                        stage: n + 1,
                        reason: format!("interior node {node} of stage {n} is on the boundary"),
                    });
                }
            }
            if outer.interior_count() <= inner.interior_count() {
                return Err(GeometryError::NonNesting {
                    stage: n + 1,
                    reason: "interior node count does not grow".into(),
                });
            }
        }
        Ok(())
    }
}

fn locate_anchor(stages: &[Arc<Grid>], anchor: Point) -> Result<Vec<usize>, GeometryError> {
    let bad = || GeometryError::BadAnchor {
        x: anchor[0],
        y: anchor[1],
    };
    let first = stages.first().ok_or_else(bad)?;
    let node = first.node_at_point(anchor).ok_or_else(bad)?;
    if !first.is_interior(node) {
        return Err(bad());
    }
    let k = first.lattice(node);
    Ok(stages
        .iter()
        .map(|g| g.node_at_lattice(k).expect("nested"))
        .collect())
}

fn lattice_index(value: f64, origin: f64, h: f64, stage: usize) -> Result<i64, GeometryError> {
    let r = (value - origin) / h;
    if (r - r.round()).abs() > COMMENSURATE_TOL * r.abs().max(1.0) {
        return Err(GeometryError::NonNesting {
            stage,
            reason: format!("face {value} is not on the lattice of spacing {h}"),
        });
    }
    Ok(r.round() as i64)
}

fn check_growth(growth_factor: f64, n_stages: usize) -> Result<(), GeometryError> {
    if !(growth_factor > 1.0) {
        return Err(GeometryError::GrowthFactor(growth_factor));
    }
    if n_stages < 2 {
        return Err(GeometryError::TooFewStages(n_stages));
    }
    Ok(())
}

fn resolve_spacing(rule: SpacingRule, finest_width: f64) -> Result<f64, GeometryError> {
    let h = match rule {
        SpacingRule::Fixed(h) => h,
        SpacingRule::FinestNodes(n) => {
            if n < 3 {
                return Err(GeometryError::TooFewNodes { axis: 0, count: n });
            }
            finest_width / (n - 1) as f64
        }
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::NonPositiveSpacing {
            axis: 0,
            spacing: h,
        });
    }
    Ok(h)
}

/// Boxes scaled about the center of `base_bbox` by `growth_factor^n`.
/// The anchor defaults to the center.
pub fn build_exhaustion(
    base_bbox: &[(f64, f64)],
    growth_factor: f64,
    n_stages: usize,
    spacing_rule: SpacingRule,
) -> Result<Exhaustion, GeometryError> {
    check_growth(growth_factor, n_stages)?;
    let dim = base_bbox.len();
    if !(1..=2).contains(&dim) {
        return Err(GeometryError::UnsupportedDimension(dim));
    }
    let mut center = [0.0; 2];
    let mut half = [0.0; 2];
    for (axis, &(lo, hi)) in base_bbox.iter().enumerate() {
        if !(hi > lo) {
            return Err(GeometryError::DegenerateBox { axis, lo, hi });
        }
        center[axis] = 0.5 * (lo + hi);
        half[axis] = 0.5 * (hi - lo);
    }
    let top = growth_factor.powi(n_stages as i32 - 1);
    let h = resolve_spacing(spacing_rule, 2.0 * half[0] * top)?;
    let mut stages = Vec::with_capacity(n_stages);
    let mut radii = Vec::with_capacity(n_stages);
    for n in 0..n_stages {
        let scale = growth_factor.powi(n as i32);
        let mut lattice_lo = [0i64; 2];
        let mut counts = [1usize; 2];
        for axis in 0..dim {
            let lo = lattice_index(-half[axis] * scale, 0.0, h, n)?;
            let hi = lattice_index(half[axis] * scale, 0.0, h, n)?;
            lattice_lo[axis] = lo;
            counts[axis] = (hi - lo + 1) as usize;
        }
        stages.push(Arc::new(Grid::from_lattice(
            dim,
            center,
            [h, h],
            lattice_lo,
            counts,
        )?));
        radii.push(half[0] * scale);
    }
    Exhaustion::validate(&stages)?;
    let anchor = if dim == 1 { [center[0], 0.0] } else { center };
    let anchor_nodes = locate_anchor(&stages, anchor)?;
    Ok(Exhaustion {
        stages,
        anchor,
        anchor_nodes,
        radii,
    })
}

/// Truncations `[-R, R] x [delta, R]` of the upper half-plane with `R`
/// growing geometrically from `base_radius`. `delta` defaults to one lattice
/// spacing. The anchor defaults to the lattice node on `x = 0` nearest to
/// `y = 1/2`.
pub fn build_half_plane_exhaustion(
    base_radius: f64,
    growth_factor: f64,
    n_stages: usize,
    spacing_rule: SpacingRule,
    delta: Option<f64>,
) -> Result<Exhaustion, GeometryError> {
    check_growth(growth_factor, n_stages)?;
    let top = base_radius * growth_factor.powi(n_stages as i32 - 1);
    let h = resolve_spacing(spacing_rule, 2.0 * top)?;
    let delta = delta.unwrap_or(h);
    if !(delta > 0.0) || delta >= base_radius {
        return Err(GeometryError::DegenerateBox {
            axis: 1,
            lo: delta,
            hi: base_radius,
        });
    }
    let origin = [0.0, delta];
    let mut stages = Vec::with_capacity(n_stages);
    let mut radii = Vec::with_capacity(n_stages);
    for n in 0..n_stages {
        let r = base_radius * growth_factor.powi(n as i32);
        let xlo = lattice_index(-r, 0.0, h, n)?;
        let xhi = lattice_index(r, 0.0, h, n)?;
        let yhi = lattice_index(r, delta, h, n)?;
        let counts = [(xhi - xlo + 1) as usize, (yhi + 1) as usize];
        stages.push(Arc::new(Grid::from_lattice(
            2,
            origin,
            [h, h],
            [xlo, 0],
            counts,
        )?));
        radii.push(r);
    }
    Exhaustion::validate(&stages)?;
    let steps = ((0.5 - delta) / h).round().max(1.0);
    let anchor = [0.0, delta + steps * h];
    let anchor_nodes = locate_anchor(&stages, anchor)?;
    Ok(Exhaustion {
        stages,
        anchor,
        anchor_nodes,
        radii,
    })
}
