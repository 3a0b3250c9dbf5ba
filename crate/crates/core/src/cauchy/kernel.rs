//! Closed-form Cauchy and logarithmic kernels of grid and atomic measures.
//!
//! For a piecewise-linear density with nodes `y_k`, values `p_k` and cell
//! slopes `beta_j`, summing the exact cell integrals and regrouping by node
//! gives
//!
//! ```text
//! G(z) = p_0 log(z - y_0) - p_last log(z - y_last)
//!        + sum_k (beta_k - beta_{k-1}) (z - y_k) log(z - y_k) - (p_last - p_0)
//! V(z) = p_0 K1(z - y_0) - p_last K1(z - y_last) + sum_k (beta_k - beta_{k-1}) K2(z - y_k)
//! ```
//!
//! with `V(z) = int p(y) log(z - y) dy`, `K1(s) = s log s - s` and
//! `K2(s) = s^2 log(s) / 2 - 3 s^2 / 4`. Square-root edge cells are added
//! as corrections (square-root cell minus linear cell) in local coordinates.

use num_complex::Complex64 as C;

use crate::measure::{edge_cells, AtomicMeasure, Edge, GridMeasure, Measure};

/// Imaginary offset, in grid spacings, used when a correction term is
/// evaluated on the real axis.
pub(crate) const AXIS_OFFSET_CELLS: f64 = 1e-9;

/// Square-root edge region in local coordinates `u` (distance to the
/// endpoint), stored per node after regrouping the cell integrals.
///
/// On cell `j` the square-root model is `sqrt(u) (a_j + b_j u)` and the
/// linear model `c_j + d_j u`. With primitives `A0, A1` of
/// `sqrt(u) / (w - u)` and `u sqrt(u) / (w - u)` the cell sums telescope to
/// `sum_k (a_{k-1} - a_k) A0(s_k) + (b_{k-1} - b_k) A1(s_k)`, `s_k = sqrt(u_k)`,
/// and the linear cells to the same form as the interior kernel.
#[derive(Debug, Clone)]
struct EdgeCorrection {
    /// endpoint location
    at: f64,
    /// +1 for the left edge (u = y - at), -1 for the right edge (u = at - y)
    orientation: f64,
    /// u_k for k = 0..=K
    u: Vec<f64>,
    /// a_{k-1} - a_k and b_{k-1} - b_k
    da: Vec<f64>,
    db: Vec<f64>,
    /// d_k - d_{k-1}
    dd: Vec<f64>,
    /// density at u_K (the endpoint value is 0)
    p_inner: f64,
}

impl EdgeCorrection {
    fn local(&self, z: C) -> C {
        if self.orientation > 0.0 {
            z - self.at
        } else {
            self.at - z
        }
    }

    /// Cauchy contribution and its z-derivative.
    fn cauchy(&self, z: C) -> (C, C) {
        let w = self.local(z);
        let rw = w.sqrt();
        let mut val = C::new(0.0, 0.0);
        let mut der = C::new(0.0, 0.0);
        let last = self.u.len() - 1;
        for k in 0..=last {
            let u = self.u[k];
            let s = u.sqrt();
            let v = w - u;
            let lv = v.ln();
            if k > 0 {
                let l = lg(rw, s);
                let a0 = -2.0 * s + rw * l;
                let a1 = -2.0 * s * u / 3.0 - 2.0 * w * s + w * rw * l;
                let da0 = l / (2.0 * rw) - s / v;
                let da1 = -2.0 * s + 1.5 * rw * l - w * s / v;
                val += self.da[k] * a0 + self.db[k] * a1;
                der += self.da[k] * da0 + self.db[k] * da1;
            }
            // linear model, subtracted
            val -= self.dd[k] * v * lv;
            der -= self.dd[k] * lv;
            if k == last {
                val += self.p_inner * lv;
                der += self.p_inner / v;
            }
        }
        val += self.p_inner;
        // y - z = orientation * (u - w)
        (val * self.orientation, der)
    }

    /// Real part of the logarithmic potential contribution.
    fn potential(&self, z: C) -> f64 {
        let w = self.local(z);
        let rw = w.sqrt();
        let mut acc = C::new(0.0, 0.0);
        let last = self.u.len() - 1;
        for k in 0..=last {
            let u = self.u[k];
            let s = u.sqrt();
            let v = w - u;
            let lv = v.ln();
            if k > 0 {
                let l = lg(rw, s);
                let s3 = s * u;
                let s5 = s3 * u;
                let a1 = -2.0 * s3 / 3.0 - 2.0 * w * s + w * rw * l;
                let b0 = 2.0 * s3 / 3.0 * lv + 2.0 / 3.0 * a1;
                let q = -s5 / 5.0 - w * s3 / 3.0 - w * w * s + 0.5 * w * w * rw * l;
                let b1 = 2.0 * s5 / 5.0 * lv + 0.8 * q;
                acc += self.da[k] * b0 + self.db[k] * b1;
            }
            acc -= self.dd[k] * v * v * (0.5 * lv - 0.75);
            if k == last {
                acc += self.p_inner * (v * lv - v);
            }
        }
        acc.re
    }
}

fn lg(rw: C, s: f64) -> C {
    (rw + s).ln() - (rw - s).ln()
}

/// Precomputed kernel data for one grid measure.
#[derive(Debug, Clone)]
pub(crate) struct GridKernel {
    nodes: Vec<f64>,
    dbeta: Vec<f64>,
    p_first: f64,
    p_last: f64,
    h: f64,
    corrections: Vec<EdgeCorrection>,
    /// nodal masses `w_j p_j`, used far from the support where the
    /// regrouped closed form cancels badly
    masses: Vec<f64>,
}

/// Distance from the support, in support widths, beyond which nodal
/// quadrature replaces the closed form.
const FAR_FIELD_WIDTHS: f64 = 4.0;

impl GridKernel {
    pub(crate) fn new(m: &GridMeasure) -> Self {
        let p = m.density();
        let n = p.len();
        let h = m.spacing();
        let mut dbeta = vec![0.0; n];
        let mut prev = 0.0;
        for k in 0..n {
            let beta = if k + 1 < n { (p[k + 1] - p[k]) / h } else { 0.0 };
            dbeta[k] = beta - prev;
            prev = beta;
        }
        let kcells = edge_cells(n);
        let mut corrections = Vec::new();
        let mut build = |at: f64, orientation: f64, idx: &dyn Fn(usize) -> usize| {
            let pv = |i: usize| p[idx(i)];
            let g = |i: usize| -> f64 {
                if i == 0 {
                    2.0 * pv(1) / h.sqrt() - pv(2) / (2.0 * h).sqrt()
                } else {
                    pv(i) / (i as f64 * h).sqrt()
                }
            };
            let u: Vec<f64> = (0..=kcells).map(|k| k as f64 * h).collect();
            let cell = |j: usize| -> (f64, f64, f64) {
                let b = (g(j + 1) - g(j)) / h;
                let a = g(j) - b * u[j];
                let d = (pv(j + 1) - pv(j)) / h;
                (a, b, d)
            };
            let cells: Vec<(f64, f64, f64)> = (0..kcells).map(cell).collect();
            let at_k = |k: usize| -> (f64, f64, f64) {
                if k < kcells {
                    cells[k]
                } else {
                    (0.0, 0.0, 0.0)
                }
            };
            let mut da = Vec::with_capacity(kcells + 1);
            let mut db = Vec::with_capacity(kcells + 1);
            let mut dd = Vec::with_capacity(kcells + 1);
            for k in 0..=kcells {
                let (a1, b1, d1) = at_k(k);
                let (a0, b0, d0) = if k == 0 { (0.0, 0.0, 0.0) } else { at_k(k - 1) };
                da.push(a0 - a1);
                db.push(b0 - b1);
                dd.push(d1 - d0);
            }
            corrections.push(EdgeCorrection {
                at,
                orientation,
                u,
                da,
                db,
                dd,
                p_inner: pv(kcells),
            });
        };
        if m.edges().left == Edge::SquareRoot {
            build(m.support_lo(), 1.0, &|i| i);
        }
        if m.edges().right == Edge::SquareRoot {
            build(m.support_hi(), -1.0, &|i| n - 1 - i);
        }
        GridKernel {
            nodes: m.nodes(),
            dbeta,
            p_first: p[0],
            p_last: p[n - 1],
            h,
            corrections,
            masses: m.weights().iter().zip(p).map(|(w, q)| w * q).collect(),
        }
    }

    fn far_field(&self, z: C) -> Option<(C, C)> {
        let (lo, hi) = (self.nodes[0], self.nodes[self.nodes.len() - 1]);
        let dx = if z.re < lo { lo - z.re } else if z.re > hi { z.re - hi } else { 0.0 };
        if dx.hypot(z.im) <= FAR_FIELD_WIDTHS * (hi - lo) {
            return None;
        }
        let mut g = C::new(0.0, 0.0);
        let mut dg = C::new(0.0, 0.0);
        for (&y, &q) in self.nodes.iter().zip(&self.masses) {
            let inv = 1.0 / (z - y);
            g += q * inv;
            dg -= q * inv * inv;
        }
        Some((g, dg))
    }

    fn axis_safe(&self, z: C) -> C {
        let floor = AXIS_OFFSET_CELLS * self.h;
        if z.im < floor {
            C::new(z.re, floor)
        } else {
            z
        }
    }

    /// Cauchy transform `G(z) = int p(y) / (z - y) dy` and its derivative.
    pub(crate) fn transform_and_derivative(&self, z: C) -> (C, C) {
        if let Some(far) = self.far_field(z) {
            return far;
        }
        let n = self.nodes.len();
        let mut sum = C::new(0.0, 0.0);
        let mut dsum = C::new(0.0, 0.0);
        for k in 0..n {
            let db = self.dbeta[k];
            if db == 0.0 {
                continue;
            }
            let s = z - self.nodes[k];
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            let l = C::new(0.5 * s.norm_sqr().ln(), s.im.atan2(s.re));
            sum += db * s * l;
            dsum += db * l;
        }
        let s0 = z - self.nodes[0];
        let s1 = z - self.nodes[n - 1];
        if self.p_first != 0.0 {
            sum += self.p_first * s0.ln();
            dsum += self.p_first / s0;
        }
        if self.p_last != 0.0 {
            sum -= self.p_last * s1.ln();
            dsum -= self.p_last / s1;
        }
        sum -= self.p_last - self.p_first;
        if !self.corrections.is_empty() {
            let zc = self.axis_safe(z);
            for c in &self.corrections {
                let (v, d) = c.cauchy(zc);
                sum += v;
                dsum += d;
            }
        }
        (sum, dsum)
    }

    pub(crate) fn transform(&self, z: C) -> C {
        self.transform_and_derivative(z).0
    }

    /// Boundary values `G(x_j + i0)` at the grid's own nodes.
    ///
    /// The real part is a discrete convolution on the uniform grid; the
    /// imaginary part is `-pi p(x_j)` exactly under the grid model. At a jump
    /// endpoint the logarithmic singularity is replaced by its half-cell mean.
    pub(crate) fn boundary_at_nodes(&self, density: &[f64]) -> Vec<C> {
        let n = self.nodes.len();
        let h = self.h;
        let table: Vec<f64> = (0..n)
            .map(|m| {
                let s = m as f64 * h;
                if m == 0 {
                    0.0
                } else {
                    s * s.ln()
                }
            })
            .collect();
        let ln_dist = |m: usize| -> f64 {
            if m == 0 {
                (0.5 * h).ln() - 1.0
            } else {
                (m as f64 * h).ln()
            }
        };
        let active: Vec<(usize, f64)> = self
            .dbeta
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, d)| *d != 0.0)
            .collect();
        (0..n)
            .map(|j| {
                let mut re = 0.0;
                for &(k, db) in &active {
                    // (x_j - y_k) ln|x_j - y_k| is odd in j - k
                    re += if j >= k { db * table[j - k] } else { -db * table[k - j] };
                }
                if self.p_first != 0.0 {
                    re += self.p_first * ln_dist(j);
                }
                if self.p_last != 0.0 {
                    re -= self.p_last * ln_dist(n - 1 - j);
                }
                re -= self.p_last - self.p_first;
                if !self.corrections.is_empty() {
                    let z = self.axis_safe(C::new(self.nodes[j], 0.0));
                    for c in &self.corrections {
                        re += c.cauchy(z).0.re;
                    }
                }
                C::new(re, -std::f64::consts::PI * density[j])
            })
            .collect()
    }

    /// Logarithmic potential `U(x_j) = int log|x_j - y| p(y) dy` at the nodes.
    pub(crate) fn potential_at_nodes(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let h = self.h;
        let k2: Vec<f64> = (0..n)
            .map(|m| {
                let s = m as f64 * h;
                if m == 0 {
                    0.0
                } else {
                    s * s * (0.5 * s.ln() - 0.75)
                }
            })
            .collect();
        let k1 = |m: usize| -> f64 {
            let s = m as f64 * h;
            if m == 0 {
                0.0
            } else {
                s * s.ln() - s
            }
        };
        let active: Vec<(usize, f64)> = self
            .dbeta
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, d)| *d != 0.0)
            .collect();
        (0..n)
            .map(|j| {
                let mut u = 0.0;
                for &(k, db) in &active {
                    // K2 is even in the sign of x_j - y_k (real part)
                    u += db * k2[j.abs_diff(k)];
                }
                if self.p_first != 0.0 {
                    u += self.p_first * k1(j);
                }
                if self.p_last != 0.0 {
                    // K1(-s) has real part -(s ln s - s)
                    u += self.p_last * k1(n - 1 - j);
                }
                if !self.corrections.is_empty() {
                    let z = self.axis_safe(C::new(self.nodes[j], 0.0));
                    for c in &self.corrections {
                        u += c.potential(z);
                    }
                }
                u
            })
            .collect()
    }
}

pub(crate) fn atomic_transform_and_derivative(m: &AtomicMeasure, z: C) -> (C, C) {
    let mut g = C::new(0.0, 0.0);
    let mut dg = C::new(0.0, 0.0);
    for &(x, w) in m.atoms() {
        let inv = 1.0 / (z - x);
        g += w * inv;
        dg -= w * inv * inv;
    }
    (g, dg)
}

/// Cauchy transform evaluator shared by the solvers.
#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    Grid(GridKernel),
    Atoms(AtomicMeasure),
}

impl Kernel {
    pub(crate) fn new(m: &Measure) -> Self {
        match m {
            Measure::Grid(g) => Kernel::Grid(GridKernel::new(g)),
            Measure::Atoms(a) => Kernel::Atoms(a.clone()),
        }
    }

    pub(crate) fn g(&self, z: C) -> C {
        match self {
            Kernel::Grid(k) => k.transform(z),
            Kernel::Atoms(a) => atomic_transform_and_derivative(a, z).0,
        }
    }

    pub(crate) fn g_dg(&self, z: C) -> (C, C) {
        match self {
            Kernel::Grid(k) => k.transform_and_derivative(z),
            Kernel::Atoms(a) => atomic_transform_and_derivative(a, z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{semicircle, uniform, EdgeProfile};
    use std::f64::consts::PI;

    fn closed_semicircle(z: C) -> C {
        // principal branch continued from large z: (z - sqrt(z-2) sqrt(z+2)) / 2
        (z - (z - 2.0).sqrt() * (z + 2.0).sqrt()) / 2.0
    }

    #[test]
    fn semicircle_transform_matches_closed_form() {
        let k = GridKernel::new(&semicircle(0.0, 1.0).unwrap());
        for z in [C::new(0.0, 1.0), C::new(1.3, 0.2), C::new(-2.5, 0.01), C::new(10.0, 3.0)] {
            let (g, dg) = k.transform_and_derivative(z);
            let exact = closed_semicircle(z);
            assert!((g - exact).norm() < 1e-6, "z={z} g={g} exact={exact}");
            let eta = 1e-5;
            let fd = (closed_semicircle(z + eta) - closed_semicircle(z - eta)) / (2.0 * eta);
            assert!((dg - fd).norm() < 1e-5, "z={z}");
        }
    }

    #[test]
    fn uniform_boundary_and_potential() {
        let m = uniform(0.0, 1.0).unwrap();
        let k = GridKernel::new(&m);
        let b = k.boundary_at_nodes(m.density());
        let u = k.potential_at_nodes();
        let nodes = m.nodes();
        for j in [100, 1000, 2047, 3000] {
            let x = nodes[j];
            let re = (x / (1.0 - x)).ln();
            assert!((b[j].re - re).abs() < 1e-10);
            let pot = x * x.ln() + (1.0 - x) * (1.0 - x).ln() - 1.0;
            assert!((u[j] - pot).abs() < 1e-10);
        }
    }

    #[test]
    fn edge_correction_is_continuous_across_the_axis_offset() {
        // A linear-edged copy of the semicircle differs from the square-root
        // model only in the edge cells.
        let s = semicircle(0.0, 1.0).unwrap();
        let lin = GridMeasure::new(-2.0, 2.0, s.density().to_vec(), EdgeProfile::LINEAR).unwrap();
        let ks = GridKernel::new(&s);
        let kl = GridKernel::new(&lin);
        let z = C::new(0.0, 1.0);
        let diff = (ks.transform(z) - kl.transform(z)).norm();
        assert!(diff > 0.0 && diff < 1e-5);
        let xs = s.nodes();
        let bs = ks.boundary_at_nodes(s.density());
        let max_err = xs
            .iter()
            .zip(&bs)
            .map(|(x, g)| (g.re / PI - x / (2.0 * PI)).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-4, "{max_err}");
    }
}
