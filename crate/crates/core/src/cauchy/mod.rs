//! Cauchy transforms, Stieltjes inversion, Hilbert transforms of densities
//! and Cauchy smoothing.
//!
//! Sign conventions: `G(z) = int dmu(x) / (z - x)`, so `Im G < 0` on the
//! upper half-plane, `p(x) = -Im G(x + i0) / pi` and
//! `Hp(x) = Re G(x + i0) / pi`.

pub(crate) mod kernel;

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measure::{EdgeProfile, GridMeasure, Measure, DEFAULT_N_GRID};
use kernel::{GridKernel, Kernel};

/// Default Poisson level for off-axis boundary transforms, in grid spacings.
///
/// The cell integrals are exact for the grid model at any height, so a small
/// level costs nothing in quadrature accuracy and keeps the square-root edge
/// error of the extrapolated limit small.
pub const DEFAULT_EPSILON_CELLS: f64 = 1.0 / 16.0;

/// Relative mass deviation beyond which an inversion is declared failed.
pub const INVERSION_MASS_TOLERANCE: f64 = 0.01;

/// Relative sup-norm gap between the two Poisson levels beyond which no
/// density limit is deemed to exist.
pub const INVERSION_LEVEL_TOLERANCE: f64 = 0.05;

/// Default truncation window of smoothed measures, in multiples of lambda
/// beyond the hull of the unsmoothed support.
pub const DEFAULT_SMOOTHING_HALFWIDTHS: f64 = 50.0;

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(invalid("z", format!("Im z must be positive, got {z}")));
    }
    Ok(())
}

/// `G(z) = int dmu(x) / (z - x)` for `Im z > 0`.
pub fn cauchy_transform(m: &Measure, z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    Ok(Kernel::new(m).g(z))
}

/// Transform values along a horizontal line `x_j + i epsilon`, optionally
/// paired with the half level `epsilon / 2` for Richardson extrapolation.
#[derive(Debug, Clone)]
pub struct BoundaryTransform {
    pub grid: Vec<f64>,
    pub epsilon: f64,
    pub g_values: Vec<Complex64>,
    /// Values at `epsilon / 2`, present until extrapolation consumes them.
    pub g_half: Option<Vec<Complex64>>,
    pub extrapolated: bool,
    pub edges: EdgeProfile,
}

impl BoundaryTransform {
    /// Evaluates `G(x + i epsilon)` and `G(x + i epsilon / 2)` on `grid`.
    pub fn compute(m: &Measure, grid: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if grid.len() < 2 {
            return Err(invalid("grid", "need at least 2 nodes"));
        }
        let kernel = Kernel::new(m);
        let eval = |eps: f64| -> Vec<Complex64> {
            use rayon::prelude::*;
            grid.par_iter()
                .map(|&x| kernel.g(Complex64::new(x, eps)))
                .collect()
        };
        let edges = match m {
            Measure::Grid(g) if g.support_lo() == grid[0] && g.support_hi() == grid[grid.len() - 1] => {
                g.edges()
            }
            _ => EdgeProfile::LINEAR,
        };
        Ok(BoundaryTransform {
            g_values: eval(epsilon),
            g_half: Some(eval(0.5 * epsilon)),
            grid,
            epsilon,
            extrapolated: false,
            edges,
        })
    }

    /// On the measure's own grid at the default Poisson level.
    pub fn of_grid(m: &GridMeasure) -> Result<Self> {
        let eps = DEFAULT_EPSILON_CELLS * m.spacing();
        Self::compute(&Measure::Grid(m.clone()), m.nodes(), eps)
    }

    /// Exact boundary limit `G(x_j + i0)` of the grid model at its nodes.
    pub fn exact_limit(m: &GridMeasure) -> Self {
        let k = GridKernel::new(m);
        BoundaryTransform {
            grid: m.nodes(),
            epsilon: 0.0,
            g_values: k.boundary_at_nodes(m.density()),
            g_half: None,
            extrapolated: false,
            edges: m.edges(),
        }
    }

    /// Linear Richardson step `2 G(eps/2) - G(eps)`, cancelling the O(eps)
    /// Poisson smoothing term.
    pub fn extrapolate(&mut self) -> Result<()> {
        let half = self
            .g_half
            .take()
            .ok_or_else(|| invalid("bt", "no half-level values to extrapolate with"))?;
        let gap = level_gap(&self.g_values, &half);
        if gap > INVERSION_LEVEL_TOLERANCE {
            self.g_half = Some(half);
            return Err(Error::NonConvergence(format!(
                "Poisson levels disagree by {gap:.3e} (relative); no density limit as epsilon -> 0"
            )));
        }
        for (g, gh) in self.g_values.iter_mut().zip(&half) {
            *g = 2.0 * gh - *g;
        }
        self.extrapolated = true;
        self.epsilon = 0.0;
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.g_values.iter().map(|g| -g.im / PI).collect()
    }

    pub fn hilbert(&self) -> Vec<f64> {
        self.g_values.iter().map(|g| g.re / PI).collect()
    }

    /// CSV dump with columns `x, re_g, im_g, epsilon`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            x: &'a str,
            re_g: &'a str,
            im_g: &'a str,
            epsilon: &'a str,
        }
        let mut w = csv::Writer::from_writer(out);
        let eps = crate::report::fmt_f64(self.epsilon);
        for (x, g) in self.grid.iter().zip(&self.g_values) {
            let (xs, re, im) = (
                crate::report::fmt_f64(*x),
                crate::report::fmt_f64(g.re),
                crate::report::fmt_f64(g.im),
            );
            w.serialize(Row {
                x: &xs,
                re_g: &re,
                im_g: &im,
                epsilon: &eps,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relative sup-norm gap between the densities of two Poisson levels.
fn level_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|g| g.im.abs()).fold(0.0, f64::max).max(1e-300);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.im - y.im).abs())
        .fold(0.0, f64::max)
        / scale
}

/// A measure recovered from boundary values.
#[derive(Debug, Clone)]
pub struct Inversion {
    pub measure: GridMeasure,
    /// Mass of the clipped density before renormalization.
    pub renormalization: f64,
}

/// Recovers the density `-Im G(x + i0) / pi`, extrapolating in epsilon when
/// the transform carries two Poisson levels.
pub fn stieltjes_invert(bt: &BoundaryTransform) -> Result<Inversion> {
    let mut bt = bt.clone();
    if bt.g_half.is_some() {
        bt.extrapolate()?;
    }
    let density: Vec<f64> = bt.density().into_iter().map(|p| p.max(0.0)).collect();
    let n = bt.grid.len();
    let (measure, mass) =
        GridMeasure::normalized(bt.grid[0], bt.grid[n - 1], density, bt.edges)?;
    if (mass - 1.0).abs() > INVERSION_MASS_TOLERANCE {
        return Err(Error::MassCheck {
            mass,
            tolerance: INVERSION_MASS_TOLERANCE,
        });
    }
    Ok(Inversion {
        measure,
        renormalization: mass,
    })
}

/// Hilbert transform `Hp(x_j) = Re G(x_j + i0) / pi` at the grid nodes.
pub fn hilbert_density(m: &GridMeasure) -> Vec<f64> {
    BoundaryTransform::exact_limit(m).hilbert()
}

/// Logarithmic potential `int log|x_j - y| dmu(y)` at the grid nodes.
pub fn log_potential(m: &GridMeasure) -> Vec<f64> {
    GridKernel::new(m).potential_at_nodes()
}

/// Result of [`cauchy_smooth`].
#[derive(Debug, Clone)]
pub struct Smoothed {
    pub measure: GridMeasure,
    /// Mass of `P_lambda * mu` lying outside the truncation window.
    pub truncated_mass: f64,
    /// Unnormalized density at the nodes, i.e. `P_lambda * mu` itself.
    pub raw_density: Vec<f64>,
}

/// Density of `P_lambda * mu` from `-Im G(x + i lambda) / pi`, truncated to
/// `[lo - 50 lambda, hi + 50 lambda]` and renormalized.
pub fn cauchy_smooth(m: &Measure, lambda: f64) -> Result<Smoothed> {
    cauchy_smooth_with(m, lambda, DEFAULT_SMOOTHING_HALFWIDTHS, DEFAULT_N_GRID)
}

pub fn cauchy_smooth_with(
    m: &Measure,
    lambda: f64,
    halfwidths: f64,
    n_grid: usize,
) -> Result<Smoothed> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(halfwidths > 0.0) {
        return Err(invalid("halfwidths", "must be positive"));
    }
    let (lo, hi) = m.support();
    let (a, b) = (lo - halfwidths * lambda, hi + halfwidths * lambda);
    let h = (b - a) / (n_grid - 1) as f64;
    let kernel = Kernel::new(m);
    let raw: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_grid)
            .into_par_iter()
            .map(|j| {
                let x = a + j as f64 * h;
                (-kernel.g(Complex64::new(x, lambda)).im / PI).max(0.0)
            })
            .collect()
    };
    let (measure, mass) = GridMeasure::normalized(a, b, raw.clone(), EdgeProfile::LINEAR)?;
    Ok(Smoothed {
        measure,
        truncated_mass: 1.0 - mass,
        raw_density: raw,
    })
}
