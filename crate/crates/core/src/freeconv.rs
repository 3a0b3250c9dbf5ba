//! Free convolution with the semicircle family and the free
//! Ornstein-Uhlenbeck flow `X(t) = e^{-t/2} X + (1 - e^{-t})^{1/2} S`.
//!
//! `G_{mu [+] sigma_r}(z) = G_mu(omega)` where the subordination point
//! `omega` solves `omega + r G_mu(omega) = z` with `Im omega >= Im z`. On the
//! real axis the same equation is solved directly (no Poisson level), which
//! gives density and Hilbert transform of the convolution exactly up to the
//! accuracy of `G_mu`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use crate::cauchy::kernel::Kernel;
use crate::cauchy::BoundaryTransform;
use crate::error::{invalid, Error, Result};
use crate::measure::{dilate, EdgeProfile, GridMeasure, Measure, DEFAULT_N_GRID};

/// Height of the first continuation level, in units of `max(1, radius)`.
pub const LADDER_START: f64 = 8.0;
/// Damping of the fixed-point iteration `w <- G(z - r w)`.
pub const DAMPING: f64 = 0.5;
/// Relative mass deviation of an inverted flow density treated as failure.
pub const FLOW_MASS_TOLERANCE: f64 = 0.01;

const MAX_FIXED_POINT: usize = 500;
const MAX_NEWTON: usize = 60;
const MAX_LADDER_LEVELS: usize = 400;
const SWEEP_CHUNK: usize = 512;

struct Subordination {
    kernel: Kernel,
    r: f64,
    lo: f64,
    hi: f64,
}

impl Subordination {
    fn new(m: &Measure, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", format!("must be positive, got {r}")));
        }
        let (lo, hi) = m.support();
        Ok(Subordination {
            kernel: Kernel::new(m),
            r,
            lo,
            hi,
        })
    }

    fn scale(&self) -> f64 {
        self.lo.abs().max(self.hi.abs()).max(1.0)
    }

    /// `F(omega) = omega + r G(omega) - z`, `F'` and `G(omega)`.
    fn residual(&self, om: C, z: C) -> (C, C, C) {
        let (g, dg) = self.kernel.g_dg(om);
        (om + self.r * g - z, 1.0 + self.r * dg, g)
    }

    /// Damped Newton from `om`, kept in the closed upper half-plane.
    fn newton(&self, z: C, mut om: C) -> Option<C> {
        let tol = 1e-13 * (self.scale() + z.norm());
        let (mut f, mut df, _) = self.residual(om, z);
        let mut polished = false;
        for _ in 0..MAX_NEWTON {
            if !(f.re.is_finite() && f.im.is_finite()) || df.norm() == 0.0 {
                return None;
            }
            if f.norm() <= tol {
                if polished {
                    return Some(om);
                }
                polished = true;
            }
            let step = f / df;
            let mut lam = 1.0;
            loop {
                let mut cand = om - lam * step;
                if cand.im < 0.0 {
                    cand.im = 0.5 * om.im;
                }
                let (fc, dfc, _) = self.residual(cand, z);
                if fc.norm() < f.norm() || (polished && fc.norm() <= tol) {
                    om = cand;
                    f = fc;
                    df = dfc;
                    break;
                }
                lam *= 0.5;
                if lam < 1e-4 {
                    return if f.norm() <= tol { Some(om) } else { None };
                }
            }
        }
        (f.norm() <= tol).then_some(om)
    }

    /// Accepts only the subordination branch: `Im omega >= Im z`, and on
    /// the real axis a root with `F'(omega) >= 0`.
    fn admissible(&self, z: C, om: C) -> bool {
        let slack = 1e-10 * (self.scale() + z.norm());
        if om.im < z.im - slack {
            return false;
        }
        if om.im <= slack {
            let (_, df, _) = self.residual(C::new(om.re, 0.0), z);
            return df.re >= -1e-6;
        }
        true
    }

    /// Continuation from `Im z = 8 max(1, radius)` down to the target.
    fn ladder(&self, z: C) -> Result<C> {
        let top = LADDER_START * self.scale() + self.r.sqrt();
        let y_top = top.max(z.im);
        let zt = C::new(z.re, y_top);
        let mut w = 1.0 / zt;
        let mut converged = false;
        for _ in 0..MAX_FIXED_POINT {
            let next = (1.0 - DAMPING) * w + DAMPING * self.kernel.g(zt - self.r * w);
            let done = (next - w).norm() <= 1e-15 * (1.0 + w.norm());
            w = next;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "fixed point at Im z = {y_top} did not settle"
            )));
        }
        let mut om = self
            .newton(zt, zt - self.r * w)
            .ok_or_else(|| Error::NonConvergence(format!("Newton polish failed at {zt}")))?;
        let floor = 1e-9 * self.scale();
        let mut y = y_top;
        let mut ratio = 0.5;
        let mut levels = 0;
        while y > z.im {
            levels += 1;
            if levels > MAX_LADDER_LEVELS {
                return Err(Error::NonConvergence(format!("continuation stalled at Im z = {y}")));
            }
            let mut y_next = y * ratio;
            if y_next < floor.max(z.im) {
                y_next = z.im;
            }
            let target = C::new(z.re, y_next);
            let (_, df, _) = self.residual(om, C::new(z.re, y));
            let mut guess = om + (target - C::new(z.re, y)) / df;
            if !(guess.im >= 0.0 && guess.re.is_finite()) {
                guess = om;
            }
            let next = self
                .newton(target, guess)
                .or_else(|| self.newton(target, om))
                .filter(|o| self.admissible(target, *o));
            match next {
                Some(o) => {
                    om = o;
                    y = y_next;
                    ratio = (ratio * 0.5).max(0.5);
                }
                None => {
                    ratio = ratio.sqrt();
                    if ratio > 1.0 - 1e-6 {
                        return Err(Error::NonConvergence(format!(
                            "subordination lost at Im z = {y} for Re z = {}",
                            z.re
                        )));
                    }
                }
            }
        }
        Ok(om)
    }

    /// Subordination point for a real `x`, continuing from `prev` if given.
    fn at_axis(&self, x: f64, prev: Option<C>) -> Result<C> {
        let z = C::new(x, 0.0);
        if let Some(p) = prev {
            if let Some(o) = self.newton(z, p).filter(|o| self.admissible(z, *o)) {
                return Ok(o);
            }
        }
        self.ladder(z)
    }

    /// `r int dmu / (u - y)^2 = 1` just outside the support on one side.
    /// Returns `u` and whether a square-root edge forms there.
    fn support_edge(&self, side: f64) -> (f64, bool) {
        let base = if side > 0.0 { self.hi } else { self.lo };
        let rd = |gap: f64| -> f64 {
            let (_, dg) = self.kernel.g_dg(C::new(base + side * gap, 0.0));
            -self.r * dg.re
        };
        let mut outer = 1.01 * self.r.sqrt();
        let mut inner = outer;
        let tiny = 1e-14 * self.scale();
        loop {
            inner *= 0.5;
            if inner < tiny {
                return (base, false);
            }
            if rd(inner) > 1.0 {
                break;
            }
            outer = inner;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if mid <= inner || mid >= outer {
                break;
            }
            if rd(mid) > 1.0 {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        (base + side * outer, true)
    }
}

/// `G_{mu [+] sigma_r}(z)` for `Im z > 0` by subordination: a damped
/// fixed point `w = G_mu(z - r w)` high above the axis, then Newton
/// continuation down to `z`.
pub fn free_convolve_semicircle(m: &Measure, r: f64, z: C) -> Result<C> {
    if !(z.im > 0.0) {
        return Err(invalid("z", format!("Im z must be positive, got {z}")));
    }
    let s = Subordination::new(m, r)?;
    let om = s.ladder(z)?;
    Ok((z - om) / r)
}

/// Solution of the complex Burgers equation by characteristics.
#[derive(Debug, Clone, Copy)]
pub struct Characteristic {
    /// `G(r, z) = G_mu(z0)`
    pub value: C,
    /// foot point `z0` with `z = z0 + r G_mu(z0)`
    pub foot: C,
    /// smallest `|1 + rho G_mu'(z0)|` met along the path; values near 0
    /// mean characteristics nearly cross
    pub min_jacobian: f64,
}

/// Follows the characteristic through `z` from `rho = 0` (where `z0 = z`)
/// up to `rho = r`, Newton-correcting `z0 + rho G_mu(z0) = z` at each step.
pub fn burgers_characteristics(m: &Measure, r: f64, z: C) -> Result<Characteristic> {
    if !(z.im > 0.0) {
        return Err(invalid("z", format!("Im z must be positive, got {z}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    let kernel = Kernel::new(m);
    let tol = 1e-14 * (1.0 + z.norm());
    let solve = |rho: f64, mut z0: C| -> Option<(C, f64)> {
        for _ in 0..MAX_NEWTON {
            let (g, dg) = kernel.g_dg(z0);
            let f = z0 + rho * g - z;
            let jac = 1.0 + rho * dg;
            let step = f / jac;
            z0 -= step;
            if z0.im <= 0.0 {
                return None;
            }
            if step.norm() <= tol {
                return Some((z0, jac.norm()));
            }
        }
        None
    };
    let mut rho = 0.0;
    let mut z0 = z;
    let mut d_rho = r / 16.0;
    let mut min_jac = 1.0f64;
    let mut steps = 0;
    while rho < r {
        steps += 1;
        if steps > 10_000 || d_rho < 1e-12 * r {
            return Err(Error::NonConvergence(format!(
                "characteristics through {z} cross near rho = {rho}"
            )));
        }
        let next = (rho + d_rho).min(r);
        let (g, dg) = kernel.g_dg(z0);
        // d z0 / d rho = -G / (1 + rho G')
        let guess = z0 - (next - rho) * g / (1.0 + rho * dg);
        match solve(next, guess) {
            Some((zn, jac)) if zn.im >= z.im * (1.0 - 1e-12) => {
                z0 = zn;
                rho = next;
                min_jac = min_jac.min(jac);
                d_rho *= 1.5;
            }
            _ => d_rho *= 0.25,
        }
    }
    Ok(Characteristic {
        value: kernel.g(z0),
        foot: z0,
        min_jacobian: min_jac,
    })
}

/// Result of convolving a measure with `sigma_r` on a real grid.
#[derive(Debug, Clone)]
pub struct Convolution {
    pub measure: GridMeasure,
    /// exact boundary values `G(x_j + i0)` at the grid nodes
    pub boundary: BoundaryTransform,
    /// mass of the raw inverted density before renormalization
    pub renormalization: f64,
}

/// `mu [+] sigma_r` on `n_grid` nodes spanning its support `[x-, x+]`.
///
/// Support edges come from `r int dmu/(u - y)^2 = 1` outside the support of
/// `mu`; interior nodes are swept in fixed chunks, each continuing Newton
/// from its left neighbour, with the continuation ladder as fallback.
pub fn convolve_on_grid(m: &Measure, r: f64, n_grid: usize) -> Result<Convolution> {
    if n_grid < crate::measure::MIN_N_GRID {
        return Err(invalid("n_grid", format!("too small: {n_grid}")));
    }
    let s = Subordination::new(m, r)?;
    let (u_lo, sqrt_lo) = s.support_edge(-1.0);
    let (u_hi, sqrt_hi) = s.support_edge(1.0);
    let x_lo = u_lo + r * s.kernel.g(C::new(u_lo, 0.0)).re;
    let x_hi = u_hi + r * s.kernel.g(C::new(u_hi, 0.0)).re;
    if !(x_lo < x_hi) {
        return Err(Error::NonConvergence(format!(
            "degenerate convolution support [{x_lo}, {x_hi}]"
        )));
    }
    let h = (x_hi - x_lo) / (n_grid - 1) as f64;
    let node = |j: usize| {
        if 2 * j < n_grid {
            x_lo + j as f64 * h
        } else {
            x_hi - (n_grid - 1 - j) as f64 * h
        }
    };
    let chunks: Vec<(usize, usize)> = (1..n_grid - 1)
        .step_by(SWEEP_CHUNK)
        .map(|a| (a, (a + SWEEP_CHUNK).min(n_grid - 1)))
        .collect();
    let solved: Vec<Vec<C>> = chunks
        .par_iter()
        .map(|&(a, b)| -> Result<Vec<C>> {
            let mut out = Vec::with_capacity(b - a);
            let mut prev: Option<C> = None;
            let mut prev2: Option<C> = None;
            for j in a..b {
                let guess = match (prev, prev2) {
                    (Some(p), Some(q)) => {
                        let g = 2.0 * p - q;
                        Some(if g.im < 0.0 { C::new(g.re, 0.5 * p.im) } else { g })
                    }
                    (p, _) => p,
                };
                let om = s.at_axis(node(j), guess)?;
                prev2 = prev;
                prev = Some(om);
                out.push(om);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut omega = Vec::with_capacity(n_grid);
    omega.push(C::new(u_lo, 0.0));
    omega.extend(solved.into_iter().flatten());
    omega.push(C::new(u_hi, 0.0));
    let grid: Vec<f64> = (0..n_grid).map(node).collect();
    let g_values: Vec<C> = grid.iter().zip(&omega).map(|(x, o)| (x - o) / r).collect();
    let density: Vec<f64> = omega.iter().map(|o| (o.im / (PI * r)).max(0.0)).collect();
    let edges = EdgeProfile {
        left: edge_kind(sqrt_lo),
        right: edge_kind(sqrt_hi),
    };
    let (measure, mass) = GridMeasure::normalized(x_lo, x_hi, density, edges)?;
    if (mass - 1.0).abs() > FLOW_MASS_TOLERANCE {
        return Err(Error::MassCheck {
            mass,
            tolerance: FLOW_MASS_TOLERANCE,
        });
    }
    let boundary = BoundaryTransform {
        grid,
        epsilon: 0.0,
        g_values,
        g_half: None,
        extrapolated: false,
        edges,
    };
    Ok(Convolution {
        measure,
        boundary,
        renormalization: mass,
    })
}

fn edge_kind(sqrt: bool) -> crate::measure::Edge {
    if sqrt {
        crate::measure::Edge::SquareRoot
    } else {
        crate::measure::Edge::Linear
    }
}

/// Law of `X(t)` with its boundary transform.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub measure: GridMeasure,
    pub boundary: BoundaryTransform,
    /// `1 - e^{-t}`, the semicircular variance added after rescaling
    pub r_effective: f64,
    pub renormalization: f64,
}

impl FlowState {
    pub fn density(&self) -> &[f64] {
        self.measure.density()
    }

    /// `Hp(x_j, t) = Re G(x_j + i0) / pi`.
    pub fn hilbert(&self) -> Vec<f64> {
        self.boundary.hilbert()
    }

    /// `Hp(x, t)` by linear interpolation, 0 outside the support.
    pub fn hilbert_at(&self, x: f64) -> f64 {
        let grid = &self.boundary.grid;
        let n = grid.len();
        if x < grid[0] || x > grid[n - 1] {
            // outside the support Re G is not 0, but this path only serves
            // points carried by the flow, which stay inside
            return self.exterior_hilbert(x);
        }
        let h = self.measure.spacing();
        let pos = ((x - grid[0]) / h).min((n - 1) as f64);
        let j = (pos.floor() as usize).min(n - 2);
        let f = pos - j as f64;
        let a = self.boundary.g_values[j].re;
        let b = self.boundary.g_values[j + 1].re;
        ((1.0 - f) * a + f * b) / PI
    }

    fn exterior_hilbert(&self, x: f64) -> f64 {
        let grid = &self.boundary.grid;
        let j = if x < grid[0] { 0 } else { grid.len() - 1 };
        self.boundary.g_values[j].re / PI
    }
}

/// Grid resolution of flow states.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    pub n_grid: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            n_grid: DEFAULT_N_GRID,
        }
    }
}

/// Law of `X(t)`: dilate by `e^{-t/2}`, then convolve with `sigma_{1-e^{-t}}`.
pub fn ou_flow(m0: &Measure, t: f64) -> Result<FlowState> {
    ou_flow_with(m0, t, FlowOptions::default())
}

pub fn ou_flow_with(m0: &Measure, t: f64, opts: FlowOptions) -> Result<FlowState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        let g = m0
            .as_grid()
            .ok_or(Error::AtomicInput("the law of X(0) has atoms and no grid density"))?;
        return Ok(FlowState {
            t,
            measure: g.clone(),
            boundary: BoundaryTransform::exact_limit(g),
            r_effective: 0.0,
            renormalization: 1.0,
        });
    }
    let r = -(-t).exp_m1();
    let mu = dilate(m0, (-0.5 * t).exp())?;
    let c = convolve_on_grid(&mu, r, opts.n_grid)?;
    Ok(FlowState {
        t,
        measure: c.measure,
        boundary: c.boundary,
        r_effective: r,
        renormalization: c.renormalization,
    })
}

/// `G(t, z)`, the Cauchy transform of `X(t)` off the axis.
pub fn ou_transform(m0: &Measure, t: f64, z: C) -> Result<C> {
    if !(t >= 0.0) {
        return Err(invalid("t", "must be nonnegative"));
    }
    let alpha = (-0.5 * t).exp();
    let mu = dilate(m0, alpha)?;
    if t == 0.0 {
        return crate::cauchy::cauchy_transform(&mu, z);
    }
    free_convolve_semicircle(&mu, -(-t).exp_m1(), z)
}

/// Residual of `dG/dt + (G - z/2) dG/dz - G/2 = 0` by central differences
/// with step `step` in both `t` and `z`.
pub fn burgers_residual(m0: &Measure, t: f64, zs: &[C], step: f64) -> Result<Vec<C>> {
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    if !(step > 0.0 && step < t) {
        return Err(invalid("step", format!("need 0 < step < t, got {step}")));
    }
    let (alpha_m, alpha_0, alpha_p) = (
        (-0.5 * (t - step)).exp(),
        (-0.5 * t).exp(),
        (-0.5 * (t + step)).exp(),
    );
    let solvers = [
        Subordination::new(&dilate(m0, alpha_m)?, -(-(t - step)).exp_m1())?,
        Subordination::new(&dilate(m0, alpha_0)?, -(-t).exp_m1())?,
        Subordination::new(&dilate(m0, alpha_p)?, -(-(t + step)).exp_m1())?,
    ];
    let g = |s: &Subordination, z: C| -> Result<C> { Ok((z - s.ladder(z)?) / s.r) };
    zs.par_iter()
        .map(|&z| {
            if !(z.im > step) {
                return Err(invalid("z", format!("Im z must exceed the step, got {z}")));
            }
            let g0 = g(&solvers[1], z)?;
            let gt = (g(&solvers[2], z)? - g(&solvers[0], z)?) / (2.0 * step);
            let gz = (g(&solvers[1], z + step)? - g(&solvers[1], z - step)?) / (2.0 * step);
            Ok(gt + (g0 - 0.5 * z) * gz - 0.5 * g0)
        })
        .collect()
}

/// Flow dump with columns `t, x, p, hp`, one block per state.
pub fn write_flow_csv<W: Write>(states: &[FlowState], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        t: String,
        x: String,
        p: String,
        hp: String,
    }
    use crate::report::fmt_f64;
    let mut w = csv::Writer::from_writer(out);
    for s in states {
        let hp = s.hilbert();
        for ((x, p), q) in s.boundary.grid.iter().zip(s.density()).zip(&hp) {
            w.serialize(Row {
                t: fmt_f64(s.t),
                x: fmt_f64(*x),
                p: fmt_f64(*p),
                hp: fmt_f64(*q),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{bernoulli, semicircle, semicircle_with, AtomicMeasure};

    fn closed_semicircle(v: f64, z: C) -> C {
        (z - (z - 2.0 * v.sqrt()).sqrt() * (z + 2.0 * v.sqrt()).sqrt()) / (2.0 * v)
    }

    #[test]
    fn dirac_gives_semicircle() {
        let d: Measure = AtomicMeasure::dirac(0.0).into();
        for z in [C::new(0.0, 1.0), C::new(1.9, 0.01), C::new(-3.0, 0.5), C::new(0.5, 1e-8)] {
            let g = free_convolve_semicircle(&d, 1.0, z).unwrap();
            assert!((g - closed_semicircle(1.0, z)).norm() < 1e-12, "{z} {g}");
            let c = burgers_characteristics(&d, 1.0, z).unwrap();
            assert!((c.value - g).norm() < 1e-12);
        }
        let g = free_convolve_semicircle(&d, 1.0, C::i()).unwrap();
        assert!((g.im - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn semicircle_variances_add() {
        let m: Measure = semicircle(0.0, 0.5).unwrap().into();
        for z in [C::new(0.0, 1.0), C::new(1.0, 0.1), C::new(2.5, 0.3)] {
            let g = free_convolve_semicircle(&m, 1.5, z).unwrap();
            assert!((g - closed_semicircle(2.0, z)).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn small_r_approaches_the_input() {
        let m: Measure = bernoulli(1.0).unwrap().into();
        let z = C::new(0.3, 0.8);
        let g0 = crate::cauchy::cauchy_transform(&m, z).unwrap();
        let d1 = (free_convolve_semicircle(&m, 1e-3, z).unwrap() - g0).norm();
        let d2 = (free_convolve_semicircle(&m, 5e-4, z).unwrap() - g0).norm();
        assert!(d1 < 1e-2 && (d1 / d2 - 2.0).abs() < 0.05, "{d1} {d2}");
    }

    #[test]
    fn grid_convolution_of_semicircles() {
        let m: Measure = semicircle(0.0, 1.0).unwrap().into();
        let c = convolve_on_grid(&m, 3.0, 2048).unwrap();
        let exact = semicircle_with(0.0, 4.0, 2048).unwrap();
        assert!((c.measure.support_lo() + 4.0).abs() < 1e-6);
        assert!((c.measure.support_hi() - 4.0).abs() < 1e-6);
        let sup = c
            .measure
            .density()
            .iter()
            .zip(exact.density())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "{sup}");
        assert!((c.renormalization - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bernoulli_flow_has_mean_and_variance() {
        let m: Measure = bernoulli(1.0).unwrap().into();
        for t in [0.05, 0.5, 2.0] {
            let s = ou_flow(&m, t).unwrap();
            let f: Measure = s.measure.clone().into();
            let v = (-t).exp() + (1.0 - (-t).exp());
            assert!(f.mean().abs() < 1e-6);
            assert!((f.variance() - v).abs() < 1e-5, "t={t} var={}", f.variance());
        }
    }

    #[test]
    fn scaled_semicircle_flow_stays_in_family() {
        let m0: Measure = semicircle(0.0, 4.0).unwrap().into();
        let t = 0.5;
        let s = ou_flow(&m0, t).unwrap();
        let v = 1.0 + 3.0 * (-t).exp();
        let exact = semicircle(0.0, v).unwrap();
        let sup = s
            .density()
            .iter()
            .zip(exact.density())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-5, "{sup}");
        let hp_err = s
            .boundary
            .grid
            .iter()
            .zip(s.hilbert())
            .map(|(x, hp)| (hp - x / (2.0 * PI * v)).abs())
            .fold(0.0, f64::max);
        assert!(hp_err < 1e-5, "{hp_err}");
    }

    #[test]
    fn flow_at_zero_is_identity() {
        let m = semicircle(0.0, 2.0).unwrap();
        let s = ou_flow(&m.clone().into(), 0.0).unwrap();
        assert_eq!(s.measure.density(), m.density());
        assert!(ou_flow(&bernoulli(1.0).unwrap().into(), 0.0).is_err());
    }
}
