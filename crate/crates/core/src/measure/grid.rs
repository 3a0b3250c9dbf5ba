//! Densities sampled on uniform grids.
//!
//! Between nodes the density is modelled as piecewise linear. An edge marked
//! [`Edge::SquareRoot`] instead models the first [`GridMeasure::edge_cells`]
//! cells as `sqrt(u) * g(u)` with `g` piecewise linear, where `u` is the
//! distance to the endpoint. Every quadrature in the crate (mass, moments,
//! CDF, Cauchy and log kernels) integrates this same model.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default number of grid nodes.
pub const DEFAULT_N_GRID: usize = 4096;

/// Smallest admissible grid.
pub const MIN_N_GRID: usize = 16;

/// Upper bound on the number of cells given square-root treatment per edge.
pub const MAX_EDGE_CELLS: usize = 256;

/// Behaviour of the density at one end of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    /// Piecewise linear up to the endpoint; a nonzero endpoint value is a jump.
    Linear,
    /// Density vanishes like the square root of the distance to the endpoint.
    SquareRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeProfile {
    pub left: Edge,
    pub right: Edge,
}

impl EdgeProfile {
    pub const LINEAR: EdgeProfile = EdgeProfile {
        left: Edge::Linear,
        right: Edge::Linear,
    };
    pub const SQUARE_ROOT: EdgeProfile = EdgeProfile {
        left: Edge::SquareRoot,
        right: Edge::SquareRoot,
    };

    pub fn mirrored(self) -> Self {
        EdgeProfile {
            left: self.right,
            right: self.left,
        }
    }
}

/// A probability density on `[support_lo, support_hi]` sampled at `n_grid`
/// uniform nodes.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    lo: f64,
    hi: f64,
    density: Vec<f64>,
    edges: EdgeProfile,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    total_mass_tolerance: f64,
}

impl GridMeasure {
    /// Builds a measure from node values, rescaling them to unit mass.
    /// Returns the measure together with the mass of the input values.
    pub fn normalized(
        lo: f64,
        hi: f64,
        mut density: Vec<f64>,
        edges: EdgeProfile,
    ) -> Result<(Self, f64)> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("support", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let n = density.len();
        if n < MIN_N_GRID {
            return Err(invalid("n_grid", format!("need at least {MIN_N_GRID} nodes, got {n}")));
        }
        if let Some(bad) = density.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "density values must be finite and nonnegative, found {bad}"
            )));
        }
        if edges.left == Edge::SquareRoot {
            density[0] = 0.0;
        }
        if edges.right == Edge::SquareRoot {
            density[n - 1] = 0.0;
        }
        let h = (hi - lo) / (n - 1) as f64;
        let weights = nodal_weights(n, h, edges);
        let mass: f64 = weights.iter().zip(&density).map(|(w, p)| w * p).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!("density has mass {mass}")));
        }
        density.iter_mut().for_each(|p| *p /= mass);
        let cumulative = cumulative_table(&density, h, edges);
        let m = GridMeasure {
            lo,
            hi,
            density,
            edges,
            weights,
            cumulative,
            total_mass_tolerance: 1e-12,
        };
        Ok((m, mass))
    }

    pub fn new(lo: f64, hi: f64, density: Vec<f64>, edges: EdgeProfile) -> Result<Self> {
        Self::normalized(lo, hi, density, edges).map(|(m, _)| m)
    }

    pub fn support_lo(&self) -> f64 {
        self.lo
    }

    pub fn support_hi(&self) -> f64 {
        self.hi
    }

    pub fn n_grid(&self) -> usize {
        self.density.len()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn edges(&self) -> EdgeProfile {
        self.edges
    }

    pub fn total_mass_tolerance(&self) -> f64 {
        self.total_mass_tolerance
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_grid() - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        // Computed from the nearer endpoint so both ends are exact.
        let n = self.n_grid();
        if 2 * j < n {
            self.lo + j as f64 * self.spacing()
        } else {
            self.hi - (n - 1 - j) as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_grid()).map(|j| self.node(j)).collect()
    }

    /// Number of cells modelled with the square-root profile at each
    /// square-root edge.
    pub fn edge_cells(&self) -> usize {
        edge_cells(self.n_grid())
    }

    /// Quadrature weights: `integral of f = sum_j weights[j] * f(x_j)` for
    /// any nodal function sharing the density's edge behaviour.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f(x) p(x)` under the grid model.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate_nodal(|j, x| f(x) * self.density[j])
    }

    /// Integral of a nodal function `f(j, x_j)` with the density's edge
    /// behaviour (the caller includes the density factor).
    pub fn integrate_nodal<F: Fn(usize, f64) -> f64>(&self, f: F) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(j, w)| w * f(j, self.node(j)))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.density).map(|(w, p)| w * p).sum()
    }

    /// Cumulative mass at each node.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn cdf(&self, a: f64) -> f64 {
        if a <= self.lo {
            return 0.0;
        }
        if a >= self.hi {
            return 1.0;
        }
        let h = self.spacing();
        let s = (a - self.lo) / h;
        let j = (s.floor() as usize).min(self.n_grid() - 2);
        let frac = s - j as f64;
        let c = &self.cumulative;
        (c[j] + frac * (c[j + 1] - c[j])).clamp(0.0, 1.0)
    }

    /// Generalised inverse of [`GridMeasure::cdf`]: `inf { x : F(x) >= u }`.
    pub fn quantile(&self, u: f64) -> f64 {
        let c = &self.cumulative;
        if u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            // Leftmost point carrying the full mass.
            let k = c.partition_point(|v| *v < 1.0);
            return self.node(k.min(self.n_grid() - 1));
        }
        // First node with cumulative >= u; the answer lies in the cell ending there.
        let k = c.partition_point(|v| *v < u);
        if k == 0 {
            return self.lo;
        }
        let k = k.min(self.n_grid() - 1);
        let (c0, c1) = (c[k - 1], c[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 1.0 };
        self.node(k - 1) + frac.clamp(0.0, 1.0) * self.spacing()
    }

    /// Exact inverse of the model CDF, which is quadratic on linear cells.
    /// Agrees with [`GridMeasure::quantile`] at the nodes and is smooth in
    /// the node values, so quantiles of nearby measures differ smoothly.
    pub fn model_quantile(&self, u: f64) -> f64 {
        let c = &self.cumulative;
        let n = self.n_grid();
        if u <= 0.0 || u >= 1.0 {
            return self.quantile(u);
        }
        let k = c.partition_point(|v| *v < u);
        if k == 0 {
            return self.lo;
        }
        let j = k.min(n - 1) - 1;
        let (c0, c1) = (c[j], c[j + 1]);
        if c1 <= c0 {
            return self.node(j + 1);
        }
        let r = ((u - c0) / (c1 - c0)).clamp(0.0, 1.0);
        let h = self.spacing();
        let kc = self.edge_cells();
        let p = &self.density;
        if self.edges.left == Edge::SquareRoot && j < kc {
            let s = invert_sqrt_cell(p, h, j, r, |i| i);
            return self.lo + s;
        }
        if self.edges.right == Edge::SquareRoot && j >= n - 1 - kc {
            // Mirrored cell index, measured from the right endpoint.
            let jm = n - 2 - j;
            let s = invert_sqrt_cell(p, h, jm, 1.0 - r, |i| n - 1 - i);
            return self.hi - s;
        }
        let (p0, p1) = (p[j], p[j + 1]);
        let m = r * 0.5 * (p0 + p1) * h;
        let disc = p0 * p0 + 2.0 * (p1 - p0) * m / h;
        let denom = p0 + disc.max(0.0).sqrt();
        let s = if denom > 0.0 { 2.0 * m / denom } else { r * h };
        self.node(j) + s.clamp(0.0, h)
    }

    /// Density at an arbitrary point under the grid model.
    pub fn density_at(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let n = self.n_grid();
        let h = self.spacing();
        let k = self.edge_cells();
        let s = (x - self.lo) / h;
        let j = (s.floor() as usize).min(n - 2);
        if self.edges.left == Edge::SquareRoot && j < k {
            return sqrt_model_at(&self.density, h, x - self.lo, |i| i);
        }
        if self.edges.right == Edge::SquareRoot && j >= n - 1 - k {
            return sqrt_model_at(&self.density, h, self.hi - x, |i| n - 1 - i);
        }
        let frac = s - j as f64;
        self.density[j] * (1.0 - frac) + self.density[j + 1] * frac
    }

}

pub(crate) fn edge_cells(n: usize) -> usize {
    MAX_EDGE_CELLS.min((n - 1) / 16).max(1)
}

/// `sqrt(u) * g(u)` with `g = p / sqrt(u)` linear per cell, `g(0)` extrapolated.
fn sqrt_model_at(p: &[f64], h: f64, u: f64, idx: impl Fn(usize) -> usize) -> f64 {
    let g = |i: usize| -> f64 {
        if i == 0 {
            2.0 * p[idx(1)] / h.sqrt() - p[idx(2)] / (2.0 * h).sqrt()
        } else {
            p[idx(i)] / (i as f64 * h).sqrt()
        }
    };
    let s = u / h;
    let j = s.floor() as usize;
    let frac = s - j as f64;
    let gv = g(j) * (1.0 - frac) + g(j + 1) * frac;
    (u.max(0.0)).sqrt() * gv
}

/// Distance `u` from the endpoint, inside square-root cell `j`, at which the
/// cell has accumulated the fraction `r` of its mass (counted from `j h`).
fn invert_sqrt_cell(p: &[f64], h: f64, j: usize, r: f64, idx: impl Fn(usize) -> usize) -> f64 {
    let g = |i: usize| -> f64 {
        if i == 0 {
            2.0 * p[idx(1)] / h.sqrt() - p[idx(2)] / (2.0 * h).sqrt()
        } else {
            p[idx(i)] / (i as f64 * h).sqrt()
        }
    };
    let (u0, u1) = (j as f64 * h, (j + 1) as f64 * h);
    let slope = (g(j + 1) - g(j)) / h;
    let base = g(j) - slope * u0;
    let prim = |u: f64| base * 2.0 / 3.0 * u.powf(1.5) + slope * 2.0 / 5.0 * u.powf(2.5);
    let total = prim(u1) - prim(u0);
    if !(total > 0.0) {
        return u0 + r * h;
    }
    let target = r * total;
    let (mut a, mut b) = (u0, u1);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if prim(mid) - prim(u0) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Square-root cell integrals: for the cell `[j h, (j+1) h]`,
/// `a_j = int sqrt(u) (u_{j+1} - u) / h du` and `b_j = int sqrt(u) (u - u_j) / h du`.
pub(crate) fn sqrt_cell_moments(j: usize, h: f64) -> (f64, f64) {
    let (u0, u1) = (j as f64 * h, (j + 1) as f64 * h);
    let p32 = |u: f64| 2.0 / 3.0 * u.powf(1.5);
    let p52 = |u: f64| 2.0 / 5.0 * u.powf(2.5);
    let a = (u1 * (p32(u1) - p32(u0)) - (p52(u1) - p52(u0))) / h;
    let b = ((p52(u1) - p52(u0)) - u0 * (p32(u1) - p32(u0))) / h;
    (a, b)
}

fn nodal_weights(n: usize, h: f64, edges: EdgeProfile) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    let k = edge_cells(n);
    let mut apply = |idx: &dyn Fn(usize) -> usize| {
        // Remove the trapezoid contribution of cells 0..k.
        for j in 0..k {
            w[idx(j)] -= 0.5 * h;
            w[idx(j + 1)] -= 0.5 * h;
        }
        let rs = |i: usize| 1.0 / (i as f64 * h).sqrt();
        for j in 0..k {
            let (a, b) = sqrt_cell_moments(j, h);
            if j == 0 {
                // g_0 = 2 g_1 - g_2
                w[idx(1)] += a * 2.0 * rs(1);
                w[idx(2)] -= a * rs(2);
            } else {
                w[idx(j)] += a * rs(j);
            }
            w[idx(j + 1)] += b * rs(j + 1);
        }
    };
    if edges.left == Edge::SquareRoot {
        apply(&|i| i);
    }
    if edges.right == Edge::SquareRoot {
        apply(&|i| n - 1 - i);
    }
    w
}

fn cumulative_table(p: &[f64], h: f64, edges: EdgeProfile) -> Vec<f64> {
    let n = p.len();
    let k = edge_cells(n);
    let mut cell: Vec<f64> = (0..n - 1).map(|j| 0.5 * h * (p[j] + p[j + 1])).collect();
    let mut sqrt_cells = |idx: &dyn Fn(usize) -> usize, cell_of: &dyn Fn(usize) -> usize| {
        let g = |i: usize| -> f64 {
            if i == 0 {
                2.0 * p[idx(1)] / h.sqrt() - p[idx(2)] / (2.0 * h).sqrt()
            } else {
                p[idx(i)] / (i as f64 * h).sqrt()
            }
        };
        for j in 0..k {
            let (a, b) = sqrt_cell_moments(j, h);
            cell[cell_of(j)] = (a * g(j) + b * g(j + 1)).max(0.0);
        }
    };
    if edges.left == Edge::SquareRoot {
        sqrt_cells(&|i| i, &|j| j);
    }
    if edges.right == Edge::SquareRoot {
        sqrt_cells(&|i| n - 1 - i, &|j| n - 2 - j);
    }
    let mut c = Vec::with_capacity(n);
    c.push(0.0);
    let mut acc = 0.0;
    for m in &cell {
        acc += m;
        c.push(acc);
    }
    let total = acc;
    c.iter_mut().for_each(|v| *v /= total);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_weights_integrate_sqrt_profile_exactly() {
        // sqrt(x) (1 + x) on [0, 1] with a square-root left edge: exact in the
        // edge region, trapezoid O(h^2) beyond it.
        let n = 2001;
        let h = 1.0 / (n - 1) as f64;
        let w = nodal_weights(n, h, EdgeProfile { left: Edge::SquareRoot, right: Edge::Linear });
        let f = |x: f64| x.sqrt() * (1.0 + x);
        let integral: f64 = w.iter().enumerate().map(|(j, a)| a * f(j as f64 * h)).sum();
        let exact = 2.0 / 3.0 + 2.0 / 5.0;
        let k = edge_cells(n) as f64;
        // curvature of sqrt(x) beyond the edge region: sum h^3 |f''| / 12
        let bound = h * h * (k * h).powf(-0.5) / 24.0;
        assert!((integral - exact).abs() < bound, "{integral} {bound}");
        let edge_only: f64 = (0..edge_cells(n))
            .map(|j| {
                let (a, b) = sqrt_cell_moments(j, h);
                a * (1.0 + j as f64 * h) + b * (1.0 + (j + 1) as f64 * h)
            })
            .sum();
        let exact_edge = {
            let u = k * h;
            2.0 / 3.0 * u.powf(1.5) + 2.0 / 5.0 * u.powf(2.5)
        };
        assert!((edge_only - exact_edge).abs() < 1e-15);
        // the semicircle-type profile beats the trapezoid rule by far
        let p = |x: f64| (x * (1.0 - x)).max(0.0).sqrt();
        let w2 = nodal_weights(n, h, EdgeProfile::SQUARE_ROOT);
        let trap = nodal_weights(n, h, EdgeProfile::LINEAR);
        let quad = |w: &[f64]| -> f64 {
            w.iter().enumerate().map(|(j, a)| a * p(j as f64 * h)).sum::<f64>() - std::f64::consts::PI / 8.0
        };
        assert!(quad(&w2).abs() < 1e-7, "{}", quad(&w2));
        assert!(quad(&trap).abs() > 20.0 * quad(&w2).abs(), "{} {}", quad(&trap), quad(&w2));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GridMeasure::new(1.0, 0.0, vec![1.0; 32], EdgeProfile::LINEAR).is_err());
        assert!(GridMeasure::new(0.0, 1.0, vec![1.0; 8], EdgeProfile::LINEAR).is_err());
        let mut d = vec![1.0; 32];
        d[3] = -1.0;
        assert!(GridMeasure::new(0.0, 1.0, d, EdgeProfile::LINEAR).is_err());
        assert!(GridMeasure::new(0.0, 1.0, vec![0.0; 32], EdgeProfile::LINEAR).is_err());
    }

    #[test]
    fn uniform_cdf_and_quantile() {
        let m = GridMeasure::new(0.0, 2.0, vec![1.0; 64], EdgeProfile::LINEAR).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-14);
        assert!((m.cdf(0.5) - 0.25).abs() < 1e-14);
        assert!((m.quantile(0.75) - 1.5).abs() < 1e-13);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.cdf(3.0), 1.0);
    }
}
