//! JSON descriptions of measures.
//!
//! ```json
//! {"type": "dilate", "alpha": 2.0, "of": {"type": "semicircle", "center": 0.0, "variance": 1.0}}
//! ```

use serde::{Deserialize, Serialize};

use super::{
    dilate, mix, semicircle_with, translate, uniform_with, AtomicMeasure, EdgeProfile,
    GridMeasure, Measure,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Semicircle {
        center: f64,
        variance: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `[location, weight]` pairs
    Atoms {
        atoms: Vec<[f64; 2]>,
    },
    Grid {
        lo: f64,
        hi: f64,
        density: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<EdgeProfile>,
    },
    Dilate {
        alpha: f64,
        of: Box<MeasureSpec>,
    },
    Translate {
        shift: f64,
        of: Box<MeasureSpec>,
    },
    /// `[weight, spec]` pairs
    Mix {
        components: Vec<(f64, MeasureSpec)>,
    },
    /// `P_lambda * mu`, truncated and renormalized
    CauchySmooth {
        lambda: f64,
        of: Box<MeasureSpec>,
    },
}

impl MeasureSpec {
    /// Builds the measure; `path` names this spec in error messages and
    /// `n_grid` is the resolution of constructed densities.
    pub fn build(&self, path: &str, n_grid: usize) -> Result<Measure> {
        let fail = |field: &str, e: Error| Error::Config {
            path: if field.is_empty() {
                path.to_string()
            } else {
                format!("{path}.{field}")
            },
            message: e.to_string(),
        };
        match self {
            MeasureSpec::Semicircle { center, variance } => semicircle_with(*center, *variance, n_grid)
                .map(Into::into)
                .map_err(|e| fail("variance", e)),
            MeasureSpec::Uniform { lo, hi } => uniform_with(*lo, *hi, n_grid)
                .map(Into::into)
                .map_err(|e| fail("", e)),
            MeasureSpec::Atoms { atoms } => {
                AtomicMeasure::new(atoms.iter().map(|a| (a[0], a[1])).collect())
                    .map(Into::into)
                    .map_err(|e| fail("atoms", e))
            }
            MeasureSpec::Grid {
                lo,
                hi,
                density,
                edges,
            } => GridMeasure::new(*lo, *hi, density.clone(), edges.unwrap_or(EdgeProfile::LINEAR))
                .map(Into::into)
                .map_err(|e| fail("density", e)),
            MeasureSpec::Dilate { alpha, of } => {
                let inner = of.build(&format!("{path}.of"), n_grid)?;
                dilate(&inner, *alpha).map_err(|e| fail("alpha", e))
            }
            MeasureSpec::Translate { shift, of } => {
                let inner = of.build(&format!("{path}.of"), n_grid)?;
                translate(&inner, *shift).map_err(|e| fail("shift", e))
            }
            MeasureSpec::Mix { components } => {
                let built = components
                    .iter()
                    .enumerate()
                    .map(|(i, (w, s))| Ok((*w, s.build(&format!("{path}.components[{i}]"), n_grid)?)))
                    .collect::<Result<Vec<_>>>()?;
                mix(&built, n_grid).map_err(|e| fail("components", e))
            }
            MeasureSpec::CauchySmooth { lambda, of } => {
                let inner = of.build(&format!("{path}.of"), n_grid)?;
                crate::cauchy::cauchy_smooth_with(
                    &inner,
                    *lambda,
                    crate::cauchy::DEFAULT_SMOOTHING_HALFWIDTHS,
                    n_grid,
                )
                .map(|s| s.measure.into())
                .map_err(|e| fail("lambda", e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_specs() {
        let s: MeasureSpec = serde_json::from_str(
            r#"{"type": "mix", "components": [
                [0.5, {"type": "semicircle", "center": -2, "variance": 0.5}],
                [0.5, {"type": "dilate", "alpha": 1, "of": {"type": "semicircle", "center": 2, "variance": 0.5}}]
            ]}"#,
        )
        .unwrap();
        let m = s.build("measures.bimodal", 1024).unwrap();
        assert!(m.mean().abs() < 1e-9);
        let a: MeasureSpec = serde_json::from_str(r#"{"type": "atoms", "atoms": [[-1, 0.5], [1, 0.5]]}"#).unwrap();
        assert_eq!(a.build("a", 16).unwrap().moment(2), 1.0);
    }

    #[test]
    fn errors_name_the_field() {
        let s: MeasureSpec = serde_json::from_str(
            r#"{"type": "dilate", "alpha": 2, "of": {"type": "semicircle", "center": 0, "variance": -1}}"#,
        )
        .unwrap();
        let err = s.build("measures.bad", 64).unwrap_err().to_string();
        assert!(err.contains("measures.bad.of.variance"), "{err}");
        let unknown = serde_json::from_str::<MeasureSpec>(r#"{"type": "semicircle", "centre": 0, "variance": 1}"#);
        assert!(unknown.unwrap_err().to_string().contains("centre"));
    }
}
