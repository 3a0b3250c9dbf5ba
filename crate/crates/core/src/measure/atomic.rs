use crate::error::{Error, Result};

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl AtomicMeasure {
    /// Canonicalizes `(location, weight)` pairs: sorted, coincident locations
    /// merged. Weights must be positive and sum to one.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom location {x}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidMeasure(format!("atom weight {w} must be positive")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("atom weights sum to {total}, not 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(AtomicMeasure { atoms: merged })
    }

    pub fn dirac(x: f64) -> Self {
        AtomicMeasure {
            atoms: vec![(x, 1.0)],
        }
    }

    /// `n` atoms of weight `1/n`; repeated locations merge.
    pub fn uniform_atoms(locations: &[f64]) -> Result<Self> {
        let w = 1.0 / locations.len() as f64;
        Self::new(locations.iter().map(|&x| (x, w)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn cdf(&self, a: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|(x, _)| *x <= a)
            .map(|(_, w)| w)
            .sum::<f64>()
            .min(1.0)
    }

    /// `inf { x : F(x) >= u }`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            acc += w;
            if acc >= u {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn map_locations(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.atoms.iter().map(|&(x, w)| (f(x), w)).collect())
    }
}
