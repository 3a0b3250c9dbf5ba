//! Compactly supported probability measures on the real line.

mod atomic;
mod grid;
pub mod spec;

pub use atomic::AtomicMeasure;
pub use grid::{Edge, EdgeProfile, GridMeasure, DEFAULT_N_GRID, MIN_N_GRID};
pub(crate) use grid::edge_cells;

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Either a grid density or a finite set of weighted atoms.
#[derive(Debug, Clone)]
pub enum Measure {
    Grid(GridMeasure),
    Atoms(AtomicMeasure),
}

impl From<GridMeasure> for Measure {
    fn from(m: GridMeasure) -> Self {
        Measure::Grid(m)
    }
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atoms(m)
    }
}

impl Measure {
    pub fn as_grid(&self) -> Option<&GridMeasure> {
        match self {
            Measure::Grid(g) => Some(g),
            Measure::Atoms(_) => None,
        }
    }

    pub fn as_atoms(&self) -> Option<&AtomicMeasure> {
        match self {
            Measure::Atoms(a) => Some(a),
            Measure::Grid(_) => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Measure::Atoms(_))
    }

    /// Closed hull of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Measure::Grid(g) => (g.support_lo(), g.support_hi()),
            Measure::Atoms(a) => (a.atoms()[0].0, a.atoms()[a.len() - 1].0),
        }
    }

    pub fn cdf(&self, a: f64) -> f64 {
        match self {
            Measure::Grid(g) => g.cdf(a),
            Measure::Atoms(m) => m.cdf(a),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Measure::Grid(g) => g.quantile(u),
            Measure::Atoms(m) => m.quantile(u),
        }
    }

    pub fn moment(&self, k: u32) -> f64 {
        match self {
            Measure::Grid(g) => g.integrate(|x| x.powi(k as i32)),
            Measure::Atoms(m) => m.atoms().iter().map(|(x, w)| w * x.powi(k as i32)).sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let m1 = self.moment(1);
        match self {
            Measure::Grid(g) => g.integrate(|x| (x - m1) * (x - m1)),
            Measure::Atoms(a) => a.atoms().iter().map(|(x, w)| w * (x - m1) * (x - m1)).sum(),
        }
    }
}

pub fn cdf(m: &Measure, a: f64) -> f64 {
    m.cdf(a)
}

pub fn moment(m: &Measure, k: u32) -> f64 {
    m.moment(k)
}

/// Semicircle law with the given center and variance on a default grid.
pub fn semicircle(center: f64, variance: f64) -> Result<GridMeasure> {
    semicircle_with(center, variance, DEFAULT_N_GRID)
}

pub fn semicircle_with(center: f64, variance: f64, n_grid: usize) -> Result<GridMeasure> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(invalid("variance", format!("must be positive, got {variance}")));
    }
    if !center.is_finite() {
        return Err(invalid("center", format!("must be finite, got {center}")));
    }
    let radius = 2.0 * variance.sqrt();
    let (lo, hi) = (center - radius, center + radius);
    let h = (hi - lo) / (n_grid.max(2) - 1) as f64;
    let density = (0..n_grid)
        .map(|j| {
            // Distance to the nearer edge, exact at both ends.
            let u = j.min(n_grid - 1 - j) as f64 * h;
            (u * (2.0 * radius - u)).max(0.0).sqrt() / (2.0 * PI * variance)
        })
        .collect();
    GridMeasure::new(lo, hi, density, EdgeProfile::SQUARE_ROOT)
}

/// Uniform law on `[lo, hi]`.
pub fn uniform(lo: f64, hi: f64) -> Result<GridMeasure> {
    uniform_with(lo, hi, DEFAULT_N_GRID)
}

pub fn uniform_with(lo: f64, hi: f64, n_grid: usize) -> Result<GridMeasure> {
    GridMeasure::new(lo, hi, vec![1.0; n_grid], EdgeProfile::LINEAR)
}

/// Two atoms of mass one half at `-a` and `a`.
pub fn bernoulli(a: f64) -> Result<AtomicMeasure> {
    AtomicMeasure::new(vec![(-a, 0.5), (a, 0.5)])
}

/// Law of `alpha X`.
pub fn dilate(m: &Measure, alpha: f64) -> Result<Measure> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(invalid(
            "alpha",
            "dilation by zero gives a single atom; build an AtomicMeasure instead",
        ));
    }
    Ok(match m {
        Measure::Grid(g) => Measure::Grid(dilate_grid(g, alpha)?),
        Measure::Atoms(a) => Measure::Atoms(a.map_locations(|x| alpha * x)?),
    })
}

pub fn dilate_grid(g: &GridMeasure, alpha: f64) -> Result<GridMeasure> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(invalid("alpha", "must be finite and nonzero"));
    }
    let scale = 1.0 / alpha.abs();
    let mut density: Vec<f64> = g.density().iter().map(|p| p * scale).collect();
    if alpha > 0.0 {
        GridMeasure::new(alpha * g.support_lo(), alpha * g.support_hi(), density, g.edges())
    } else {
        density.reverse();
        GridMeasure::new(
            alpha * g.support_hi(),
            alpha * g.support_lo(),
            density,
            g.edges().mirrored(),
        )
    }
}

/// Law of `X + c`.
pub fn translate(m: &Measure, c: f64) -> Result<Measure> {
    Ok(match m {
        Measure::Grid(g) => Measure::Grid(GridMeasure::new(
            g.support_lo() + c,
            g.support_hi() + c,
            g.density().to_vec(),
            g.edges(),
        )?),
        Measure::Atoms(a) => Measure::Atoms(a.map_locations(|x| x + c)?),
    })
}

/// Convex combination of measures. All-atomic inputs give an atomic measure;
/// all-grid inputs are resampled onto one grid over the union of supports.
pub fn mix(components: &[(f64, Measure)], n_grid: usize) -> Result<Measure> {
    if components.is_empty() {
        return Err(invalid("components", "empty mixture"));
    }
    let total: f64 = components.iter().map(|c| c.0).sum();
    if components.iter().any(|c| !(c.0 > 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(invalid("components", "weights must be positive and sum to 1"));
    }
    if components.iter().all(|c| c.1.is_atomic()) {
        let atoms = components
            .iter()
            .flat_map(|(w, m)| {
                m.as_atoms()
                    .expect("checked atomic")
                    .atoms()
                    .iter()
                    .map(move |(x, a)| (*x, w * a))
            })
            .collect();
        return Ok(Measure::Atoms(AtomicMeasure::new(atoms)?));
    }
    let grids: Vec<(f64, &GridMeasure)> = components
        .iter()
        .map(|(w, m)| {
            m.as_grid()
                .map(|g| (*w, g))
                .ok_or_else(|| Error::InvalidMeasure("cannot mix atoms with densities".into()))
        })
        .collect::<Result<_>>()?;
    let lo = grids.iter().map(|g| g.1.support_lo()).fold(f64::INFINITY, f64::min);
    let hi = grids.iter().map(|g| g.1.support_hi()).fold(f64::NEG_INFINITY, f64::max);
    let h = (hi - lo) / (n_grid - 1) as f64;
    let density = (0..n_grid)
        .map(|j| {
            let x = if 2 * j < n_grid {
                lo + j as f64 * h
            } else {
                hi - (n_grid - 1 - j) as f64 * h
            };
            grids.iter().map(|(w, g)| w * g.density_at(x)).sum()
        })
        .collect();
    let edge_at = |pick_left: bool| -> Edge {
        let extreme = if pick_left { lo } else { hi };
        let all_sqrt = grids
            .iter()
            .filter(|(_, g)| {
                if pick_left {
                    g.support_lo() == extreme
                } else {
                    g.support_hi() == extreme
                }
            })
            .all(|(_, g)| {
                if pick_left {
                    g.edges().left == Edge::SquareRoot
                } else {
                    g.edges().right == Edge::SquareRoot
                }
            });
        if all_sqrt {
            Edge::SquareRoot
        } else {
            Edge::Linear
        }
    };
    let edges = EdgeProfile {
        left: edge_at(true),
        right: edge_at(false),
    };
    Ok(Measure::Grid(GridMeasure::new(lo, hi, density, edges)?))
}

/// Quantile function sampled at the midpoints `u_k = (k + 1/2) / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("n_quantile", "need at least 2 nodes"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidMeasure("quantile values must be nondecreasing".into()));
        }
        Ok(QuantileTable { values })
    }

    pub fn n_quantile(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(k: usize, n: usize) -> f64 {
        (k as f64 + 0.5) / n as f64
    }

    /// Linear interpolation between midpoint nodes, constant beyond them.
    pub fn at(&self, u: f64) -> f64 {
        let n = self.values.len();
        let s = u * n as f64 - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let j = s.floor() as usize;
        let frac = s - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    /// Sup-norm distance between two tables of equal size.
    pub fn sup_distance(&self, other: &QuantileTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn quantile_table(m: &Measure, n_quantile: usize) -> Result<QuantileTable> {
    if n_quantile < 2 {
        return Err(invalid("n_quantile", format!("need at least 2, got {n_quantile}")));
    }
    let values = (0..n_quantile)
        .map(|k| m.quantile(QuantileTable::node(k, n_quantile)))
        .collect();
    QuantileTable::from_values(values)
}
