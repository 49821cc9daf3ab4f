//! Fixed-order quadrature rules: Gauss–Legendre on intervals and rectangles,
//! Duffy-transformed triangles for integrands with a point singularity at a
//! vertex, and composite Simpson.

use crate::geometry::Point;

const DUFFY_PANELS: usize = 10;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess, then Newton on P_n.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { z } else { p1 };
                let pnm1 = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
                let dz = pn / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                nodes[0] = 0.0;
                weights[0] = 2.0;
                break;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Tensor-product rule over `[x0, x1] x [y0, y1]`.
    pub fn integrate_rect(&self, x: (f64, f64), y: (f64, f64), f: impl Fn(Point) -> f64) -> f64 {
        self.integrate(y.0, y.1, |yy| self.integrate(x.0, x.1, |xx| f([xx, yy])))
    }

    /// Integral over the triangle `(apex, b, c)` with the Duffy map
    /// `p = apex + u (b - apex) + u v (c - b)`, whose Jacobian vanishes at the
    /// apex and absorbs logarithmic or `1/r` singularities located there.
    pub fn integrate_triangle_from_apex(
        &self,
        apex: Point,
        b: Point,
        c: Point,
        f: impl Fn(Point) -> f64,
    ) -> f64 {
        let e1 = [b[0] - apex[0], b[1] - apex[1]];
        let e2 = [c[0] - b[0], c[1] - b[1]];
        let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        if det == 0.0 {
            return 0.0;
        }
        let radial = |u: f64| {
            u * self.integrate(0.0, 1.0, |v| {
                f([
                    apex[0] + u * e1[0] + u * v * e2[0],
                    apex[1] + u * e1[1] + u * v * e2[1],
                ])
            })
        };
        // Geometric panels toward the apex resolve the remaining `u ln u` behaviour.
        let mut total = 0.0;
        let mut hi = 1.0;
        for _ in 0..DUFFY_PANELS {
            total += self.integrate(0.5 * hi, hi, radial);
            hi *= 0.5;
        }
        det * (total + self.integrate(0.0, hi, radial))
    }

    /// Integral over a rectangle containing `singular` (interior, edge or
    /// corner). The rectangle is cut at the singular point into up to four
    /// sub-rectangles, each split into two Duffy triangles with the singular
    /// point as apex.
    pub fn integrate_rect_singular(
        &self,
        x: (f64, f64),
        y: (f64, f64),
        singular: Point,
        f: impl Fn(Point) -> f64,
    ) -> f64 {
        let [sx, sy] = singular;
        let mut total = 0.0;
        for &(xa, xb) in &[(x.0, sx), (sx, x.1)] {
            for &(ya, yb) in &[(y.0, sy), (sy, y.1)] {
                if xb <= xa || yb <= ya {
                    continue;
                }
                // Corner of the sub-rectangle at the singular point and the opposite corner.
                let ox = if xa == sx { xb } else { xa };
                let oy = if ya == sy { yb } else { ya };
                let far = [ox, oy];
                total += self.integrate_triangle_from_apex(singular, [ox, sy], far, &f);
                total += self.integrate_triangle_from_apex(singular, far, [sx, oy], &f);
            }
        }
        total
    }
}

/// Composite Simpson weights for `n_intervals` (even) panels of width `step`.
pub fn simpson_weights(n_intervals: usize, step: f64) -> Vec<f64> {
    assert!(
        n_intervals >= 2 && n_intervals.is_multiple_of(2),
        "Simpson needs an even interval count"
    );
    (0..=n_intervals)
        .map(|i| {
            let c = if i == 0 || i == n_intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * step / 3.0
        })
        .collect()
}

pub fn composite_simpson(a: f64, b: f64, n_intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let step = (b - a) / n_intervals as f64;
    simpson_weights(n_intervals, step)
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(a + i as f64 * step))
        .sum()
}
