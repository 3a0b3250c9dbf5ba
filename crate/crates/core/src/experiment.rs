//! JSON experiment configs and the batch runner behind the command line.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "output_dir": "out",
//!   "measures": {"sc": {"type": "semicircle", "center": 0, "variance": 1}},
//!   "checks": [{"check": "check_lsi", "measures": ["sc"]}]
//! }
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::freeconv::{convolve_on_grid, ou_flow_with, write_flow_csv, FlowOptions};
use crate::functionals::{write_functional_csv, FunctionalReport};
use crate::measure::spec::MeasureSpec;
use crate::measure::{AtomicMeasure, Measure, MIN_N_GRID};
use crate::rmt::{compare_spectrum, sample_deformed_gue, MIN_N_DIM};
use crate::verify::*;
use crate::Complex64 as C;

pub const SCHEMA_VERSION: u32 = 1;
/// Overrides the worker count of the job scheduler.
pub const WORKERS_ENV: &str = "SEMIFLOW_WORKERS";
pub const MAX_N_GRID: usize = 1 << 16;
pub const MAX_N_QUANTILE: usize = 1 << 22;
pub const MAX_N_DIM: usize = 2000;

pub const REPORT_FILE: &str = "report.csv";
pub const FUNCTIONALS_FILE: &str = "functionals.csv";
pub const EIGENVALUES_FILE: &str = "eigenvalues.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// seeds the random families of the transport checks
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub measures: BTreeMap<String, MeasureSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub flow: Vec<FlowDump>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// grid of constructed measures and flow states
    pub n_grid: usize,
    pub n_quantile: usize,
    /// grid of the flow states sampled for a supremum over time
    pub sup_n_grid: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            n_grid: crate::measure::DEFAULT_N_GRID,
            n_quantile: crate::transport::DEFAULT_N_QUANTILE,
            sup_n_grid: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDump {
    pub measure: String,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub measure: String,
    pub r: f64,
    pub n_dim: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// comparison target; `measure [+] sigma_r` from the solver if absent
    #[serde(default)]
    pub target: Option<String>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_nodes() -> usize {
    MIN_SUP_NODES
}

fn default_step() -> f64 {
    1e-3
}

fn default_max_atoms() -> usize {
    crate::transport::BRUTE_FORCE_MAX_ATOMS
}

fn default_exponents() -> Vec<f64> {
    vec![1.0, 2.0]
}

/// One entry of `checks`. `tolerance` overrides the `tolerances` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", deny_unknown_fields)]
pub enum CheckSpec {
    #[serde(rename = "check_lsi")]
    Lsi {
        measures: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_entropy_derivative")]
    EntropyDerivative {
        measures: Vec<String>,
        t: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_distance_speed")]
    DistanceSpeed {
        measures: Vec<String>,
        /// `[s, t]` pairs
        windows: Vec<[f64; 2]>,
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_talagrand")]
    Talagrand { measures: Vec<String> },
    #[serde(rename = "check_monotone_functional")]
    MonotoneFunctional { measures: Vec<String>, t_grid: Vec<f64> },
    #[serde(rename = "check_density_system")]
    DensitySystem {
        measures: Vec<String>,
        t: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_fisher_identity")]
    FisherIdentity {
        measures: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_hilbert_pairing")]
    HilbertPairing {
        measures: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_phi_forms")]
    PhiForms {
        measures: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_sigma_nonnegative")]
    SigmaNonnegative {
        measures: Vec<String>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_scaling")]
    Scaling {
        measures: Vec<String>,
        alphas: Vec<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_subordination")]
    Subordination {
        measures: Vec<String>,
        r: f64,
        /// `[re, im]` pairs
        points: Vec<[f64; 2]>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_burgers_residual")]
    BurgersResidual {
        measures: Vec<String>,
        t: f64,
        points: Vec<[f64; 2]>,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_transport_equation")]
    TransportEquation {
        measures: Vec<String>,
        s: f64,
        t: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    #[serde(rename = "check_semicircle_convolution")]
    SemicircleConvolution {
        a: f64,
        b: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// random atomic pairs drawn from the config seed
    #[serde(rename = "check_wasserstein_oracle")]
    WassersteinOracle {
        pairs: usize,
        #[serde(default = "default_max_atoms")]
        max_atoms: usize,
        #[serde(default = "default_exponents")]
        p: Vec<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// symmetry, identity and triangle checks over the named measures plus
    /// `random_triples` seeded atomic triples
    #[serde(rename = "check_metric_axioms")]
    MetricAxioms {
        #[serde(default)]
        measures: Vec<String>,
        #[serde(default)]
        random_triples: usize,
        #[serde(default = "default_exponents")]
        p: Vec<f64>,
        #[serde(default)]
        tolerance: Option<f64>,
    },
}

impl CheckSpec {
    fn measures(&self) -> &[String] {
        match self {
            CheckSpec::Lsi { measures, .. }
            | CheckSpec::EntropyDerivative { measures, .. }
            | CheckSpec::DistanceSpeed { measures, .. }
            | CheckSpec::Talagrand { measures }
            | CheckSpec::MonotoneFunctional { measures, .. }
            | CheckSpec::DensitySystem { measures, .. }
            | CheckSpec::FisherIdentity { measures, .. }
            | CheckSpec::HilbertPairing { measures, .. }
            | CheckSpec::PhiForms { measures, .. }
            | CheckSpec::SigmaNonnegative { measures, .. }
            | CheckSpec::Scaling { measures, .. }
            | CheckSpec::Subordination { measures, .. }
            | CheckSpec::BurgersResidual { measures, .. }
            | CheckSpec::TransportEquation { measures, .. }
            | CheckSpec::MetricAxioms { measures, .. } => measures,
            CheckSpec::SemicircleConvolution { .. } | CheckSpec::WassersteinOracle { .. } => &[],
        }
    }

    fn tolerance_override(&self) -> Option<f64> {
        match self {
            CheckSpec::Talagrand { .. } | CheckSpec::MonotoneFunctional { .. } => None,
            CheckSpec::Lsi { tolerance, .. }
            | CheckSpec::EntropyDerivative { tolerance, .. }
            | CheckSpec::DistanceSpeed { tolerance, .. }
            | CheckSpec::DensitySystem { tolerance, .. }
            | CheckSpec::FisherIdentity { tolerance, .. }
            | CheckSpec::HilbertPairing { tolerance, .. }
            | CheckSpec::PhiForms { tolerance, .. }
            | CheckSpec::SigmaNonnegative { tolerance, .. }
            | CheckSpec::Scaling { tolerance, .. }
            | CheckSpec::Subordination { tolerance, .. }
            | CheckSpec::BurgersResidual { tolerance, .. }
            | CheckSpec::TransportEquation { tolerance, .. }
            | CheckSpec::SemicircleConvolution { tolerance, .. }
            | CheckSpec::WassersteinOracle { tolerance, .. }
            | CheckSpec::MetricAxioms { tolerance, .. } => *tolerance,
        }
    }

    fn kind(&self) -> CheckKind {
        match self {
            CheckSpec::Lsi { .. } => CheckKind::Lsi,
            CheckSpec::EntropyDerivative { .. } => CheckKind::EntropyDerivative,
            CheckSpec::DistanceSpeed { .. } => CheckKind::DistanceSpeed,
            CheckSpec::Talagrand { .. } => CheckKind::Talagrand,
            CheckSpec::MonotoneFunctional { .. } => CheckKind::MonotoneFunctional,
            CheckSpec::DensitySystem { .. } => CheckKind::DensitySystem,
            CheckSpec::FisherIdentity { .. } => CheckKind::FisherIdentity,
            CheckSpec::HilbertPairing { .. } => CheckKind::HilbertPairing,
            CheckSpec::PhiForms { .. } => CheckKind::PhiForms,
            CheckSpec::SigmaNonnegative { .. } => CheckKind::SigmaNonnegative,
            CheckSpec::Scaling { .. } => CheckKind::Scaling,
            CheckSpec::Subordination { .. } => CheckKind::Subordination,
            CheckSpec::BurgersResidual { .. } => CheckKind::BurgersResidual,
            CheckSpec::TransportEquation { .. } => CheckKind::TransportEquation,
            CheckSpec::SemicircleConvolution { .. } => CheckKind::SemicircleConvolution,
            CheckSpec::WassersteinOracle { .. } => CheckKind::WassersteinOracle,
            CheckSpec::MetricAxioms { .. } => CheckKind::MetricTriangle,
        }
    }
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting the field path of the first error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(if path == "." { "(root)".to_string() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_error(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let r = &self.resolution;
        if !(MIN_N_GRID..=MAX_N_GRID).contains(&r.n_grid) {
            return Err(config_error("resolution.n_grid", format!("must lie in [{MIN_N_GRID}, {MAX_N_GRID}]")));
        }
        if !(MIN_N_GRID..=MAX_N_GRID).contains(&r.sup_n_grid) {
            return Err(config_error("resolution.sup_n_grid", format!("must lie in [{MIN_N_GRID}, {MAX_N_GRID}]")));
        }
        if !(2..=MAX_N_QUANTILE).contains(&r.n_quantile) {
            return Err(config_error("resolution.n_quantile", format!("must lie in [2, {MAX_N_QUANTILE}]")));
        }
        self.tolerances.validate()?;
        let known = |name: &str, path: String| -> Result<()> {
            if self.measures.contains_key(name) {
                Ok(())
            } else {
                Err(config_error(path, format!("unknown measure `{name}`")))
            }
        };
        for (i, c) in self.checks.iter().enumerate() {
            for (j, m) in c.measures().iter().enumerate() {
                known(m, format!("checks[{i}].measures[{j}]"))?;
            }
            if let Some(t) = c.tolerance_override() {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(config_error(format!("checks[{i}].tolerance"), "must be positive and finite"));
                }
            }
            if let CheckSpec::MetricAxioms {
                measures,
                random_triples,
                ..
            } = c
            {
                if measures.len() < 3 && *random_triples == 0 {
                    return Err(config_error(
                        format!("checks[{i}].measures"),
                        "need at least 3 measures or some random triples",
                    ));
                }
            }
            if let CheckSpec::WassersteinOracle { max_atoms, .. } = c {
                if !(1..=crate::transport::BRUTE_FORCE_MAX_ATOMS).contains(max_atoms) {
                    return Err(config_error(format!("checks[{i}].max_atoms"), "must lie in [1, 8]"));
                }
            }
        }
        for (i, f) in self.flow.iter().enumerate() {
            known(&f.measure, format!("flow[{i}].measure"))?;
            if f.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                return Err(config_error(format!("flow[{i}].times"), "times must be finite and nonnegative"));
            }
        }
        if let Some(o) = &self.oracle {
            known(&o.measure, "oracle.measure".into())?;
            if let Some(t) = &o.target {
                known(t, "oracle.target".into())?;
            }
            if !(MIN_N_DIM..=MAX_N_DIM).contains(&o.n_dim) {
                return Err(config_error("oracle.n_dim", format!("must lie in [{MIN_N_DIM}, {MAX_N_DIM}]")));
            }
            if o.n_trials == 0 {
                return Err(config_error("oracle.n_trials", "must be positive"));
            }
            if !(o.r > 0.0 && o.r.is_finite()) {
                return Err(config_error("oracle.r", "must be positive"));
            }
        }
        Ok(())
    }

    fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            n_grid: self.resolution.n_grid,
        }
    }
}

/// Which parts of a config to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// checks, functionals, flow dumps and the oracle
    All,
    FlowOnly,
    OracleOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub schema_version: u32,
    pub mode: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub oracle_seed: Option<u64>,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub failures: usize,
    /// the config as parsed, enough to repeat the run
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<VerificationRecord>,
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunSummary {
    /// Number of records with pass/fail semantics that failed.
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.passed()).count()
    }
}

/// Worker count: [`WORKERS_ENV`] if set, else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| config_error(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = fs::read_to_string(path).map_err(|e| config_error(path.display().to_string(), e.to_string()))?;
    Ok((ExperimentConfig::from_json(&text)?, text))
}

fn build_measures(cfg: &ExperimentConfig) -> Result<BTreeMap<String, Measure>> {
    cfg.measures
        .iter()
        .map(|(name, spec)| Ok((name.clone(), spec.build(&format!("measures.{name}"), cfg.resolution.n_grid)?)))
        .collect()
}

/// `n` equal atoms; a coarse lattice makes repeated locations, hence
/// unequal weights.
fn draw_atoms(rng: &mut ChaCha8Rng, n: usize) -> Result<AtomicMeasure> {
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                f64::from(rng.random_range(-4i32..=4)) * 0.5
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    AtomicMeasure::uniform_atoms(&xs)
}

fn random_atomic(rng: &mut ChaCha8Rng, max_atoms: usize) -> Result<AtomicMeasure> {
    let n = rng.random_range(1..=max_atoms);
    draw_atoms(rng, n)
}

/// Both atomic measures in a pair share one atom count, so their weights
/// expand with a common denominator of at most `max_atoms`.
fn random_pair(rng: &mut ChaCha8Rng, max_atoms: usize) -> Result<(AtomicMeasure, AtomicMeasure)> {
    let n = rng.random_range(1..=max_atoms);
    Ok((draw_atoms(rng, n)?, draw_atoms(rng, n)?))
}

fn points(ps: &[[f64; 2]]) -> Vec<C> {
    ps.iter().map(|p| C::new(p[0], p[1])).collect()
}

/// Runs every check of `spec` and returns its records in a fixed order.
fn run_check(
    cfg: &ExperimentConfig,
    index: usize,
    spec: &CheckSpec,
    measures: &BTreeMap<String, Measure>,
) -> Vec<VerificationRecord> {
    let tol = |k: CheckKind| spec.tolerance_override().unwrap_or_else(|| k.tolerance(&cfg.tolerances));
    let opts = cfg.flow_options();
    let sup_opts = FlowOptions {
        n_grid: cfg.resolution.sup_n_grid,
    };
    let per_measure = |f: &(dyn Fn(&str, &Measure) -> Result<Vec<VerificationRecord>> + Sync)| {
        let k = spec.kind();
        spec.measures()
            .par_iter()
            .map(|name| guarded(k, name, "", tol(k), || f(name, &measures[name])))
            .collect::<Vec<_>>()
            .concat()
    };
    let single = |k: CheckKind, name: &str, m: &Measure| -> Vec<VerificationRecord> {
        check_functional_identities(m, name, &cfg.tolerances)
            .into_iter()
            .filter(|r| r.check_id == k.id())
            .map(|r| match spec.tolerance_override() {
                Some(t) => rejudge(r, k, t),
                None => r,
            })
            .collect()
    };
    match spec {
        CheckSpec::Lsi { .. } => per_measure(&|id, m| Ok(vec![check_lsi(m, id, tol(CheckKind::Lsi))])),
        CheckSpec::EntropyDerivative { t, dt, .. } => per_measure(&|id, m| {
            Ok(vec![check_entropy_derivative(m, id, *t, *dt, opts, tol(CheckKind::EntropyDerivative))?])
        }),
        CheckSpec::DistanceSpeed { windows, nodes, .. } => per_measure(&|id, m| {
            windows
                .iter()
                .map(|w| {
                    let params = format!("s={};t={}", w[0], w[1]);
                    let k = CheckKind::DistanceSpeed;
                    Ok(guarded(k, id, &params, tol(k), || {
                        Ok(vec![check_distance_speed(m, id, w[0], w[1], *nodes, opts, sup_opts, tol(k))?])
                    }))
                })
                .collect::<Result<Vec<_>>>()
                .map(|v| v.concat())
        }),
        CheckSpec::Talagrand { .. } => per_measure(&|id, m| check_talagrand(m, id)),
        CheckSpec::MonotoneFunctional { t_grid, .. } => {
            per_measure(&|id, m| check_monotone_functional(m, id, t_grid, opts))
        }
        CheckSpec::DensitySystem { t, dt, .. } => per_measure(&|id, m| {
            Ok(vec![check_density_system(m, id, *t, *dt, opts, tol(CheckKind::DensitySystem))?])
        }),
        CheckSpec::FisherIdentity { .. }
        | CheckSpec::HilbertPairing { .. }
        | CheckSpec::PhiForms { .. }
        | CheckSpec::SigmaNonnegative { .. } => per_measure(&|id, m| {
            if m.is_atomic() && matches!(spec.kind(), CheckKind::HilbertPairing | CheckKind::PhiForms) {
                return Err(Error::AtomicInput("the Hilbert transform of the density"));
            }
            Ok(single(spec.kind(), id, m))
        }),
        CheckSpec::Scaling { alphas, .. } => per_measure(&|id, m| {
            Ok(alphas
                .iter()
                .map(|a| check_scaling(m, id, *a, tol(CheckKind::Scaling)))
                .collect::<Result<Vec<_>>>()?
                .concat())
        }),
        CheckSpec::Subordination { r, points: ps, .. } => per_measure(&|id, m| {
            Ok(vec![check_subordination(m, id, *r, &points(ps), tol(CheckKind::Subordination))?])
        }),
        CheckSpec::BurgersResidual { t, points: ps, step, .. } => per_measure(&|id, m| {
            Ok(vec![check_burgers_residual(m, id, *t, &points(ps), *step, tol(CheckKind::BurgersResidual))?])
        }),
        CheckSpec::TransportEquation { s, t, dt, .. } => per_measure(&|id, m| {
            Ok(vec![check_transport_equation(m, id, *s, *t, *dt, opts, tol(CheckKind::TransportEquation))?])
        }),
        CheckSpec::SemicircleConvolution { a, b, .. } => {
            let k = CheckKind::SemicircleConvolution;
            guarded(k, "semicircle", &format!("a={a};b={b}"), tol(k), || {
                Ok(vec![check_semicircle_convolution(*a, *b, cfg.resolution.n_grid, tol(k))?])
            })
        }
        CheckSpec::WassersteinOracle { pairs, max_atoms, p, .. } => {
            let k = CheckKind::WassersteinOracle;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            let drawn: Result<Vec<_>> = (0..*pairs).map(|_| random_pair(&mut rng, *max_atoms)).collect();
            guarded(k, "random_pairs", &format!("seed={}", cfg.seed), tol(k), || {
                let drawn = drawn?;
                let mut out = Vec::new();
                for (i, (a, b)) in drawn.iter().enumerate() {
                    for &pp in p {
                        out.push(check_wasserstein_oracle(a, b, &format!("pair{i}"), pp, tol(k))?);
                    }
                }
                Ok(out)
            })
        }
        CheckSpec::MetricAxioms {
            measures: names,
            random_triples,
            p,
            ..
        } => {
            let k = CheckKind::MetricTriangle;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            let mut families: Vec<Vec<(String, Measure)>> = Vec::new();
            if names.len() >= 3 {
                families.push(names.iter().map(|n| (n.clone(), measures[n].clone())).collect());
            }
            let mut draws = Vec::new();
            for i in 0..*random_triples {
                let triple: Result<Vec<(String, Measure)>> = (0..3)
                    .map(|j| Ok((format!("triple{i}.{j}"), random_atomic(&mut rng, 8)?.into())))
                    .collect();
                draws.push(triple);
            }
            let mut out = Vec::new();
            for fam in families {
                for &pp in p {
                    out.extend(guarded(k, "declared", &format!("p={pp}"), tol(k), || {
                        crate::transport::metric_axiom_suite(&fam, pp, cfg.resolution.n_quantile, tol(k))
                    }));
                }
            }
            for (i, d) in draws.into_iter().enumerate() {
                for &pp in p {
                    out.extend(guarded(k, &format!("triple{i}"), &format!("p={pp}"), tol(k), || {
                        crate::transport::metric_axiom_suite(d.as_ref().map_err(clone_err)?, pp, 2, tol(k))
                    }));
                }
            }
            out
        }
    }
}

fn clone_err(e: &Error) -> Error {
    Error::NonConvergence(e.to_string())
}

fn rejudge(r: VerificationRecord, k: CheckKind, tol: f64) -> VerificationRecord {
    match k.semantics() {
        Semantics::Inequality => VerificationRecord::inequality(
            &r.check_id,
            &r.paper_anchor,
            &r.measure_id,
            r.params,
            r.lhs,
            r.rhs,
            tol,
        ),
        Semantics::Identity => {
            let scale = if r.margin == 0.0 || !r.margin.is_finite() {
                1.0
            } else {
                (r.lhs - r.rhs).abs() / r.margin
            };
            VerificationRecord::identity(
                &r.check_id,
                &r.paper_anchor,
                &r.measure_id,
                r.params,
                r.lhs,
                r.rhs,
                scale,
                tol,
            )
        }
        Semantics::Reported => r,
    }
}

fn oracle_records(
    cfg: &ExperimentConfig,
    o: &OracleConfig,
    measures: &BTreeMap<String, Measure>,
    out_dir: &Path,
    outputs: &mut Vec<String>,
) -> Vec<VerificationRecord> {
    let k = CheckKind::SpectrumKs;
    let params = format!("r={};n_dim={};n_trials={};seed={}", o.r, o.n_dim, o.n_trials, o.seed);
    guarded(k, &o.measure, &params, cfg.tolerances.spectrum_ks, || {
        let m = &measures[&o.measure];
        let sample = sample_deformed_gue(m, o.r, o.n_dim, o.n_trials, o.seed)?;
        let path = out_dir.join(EIGENVALUES_FILE);
        sample.write_csv(BufWriter::new(fs::File::create(&path)?))?;
        outputs.push(EIGENVALUES_FILE.to_string());
        let (target, id) = match &o.target {
            Some(t) => (measures[t].clone(), format!("{}|{}", o.measure, t)),
            None => (
                convolve_on_grid(m, o.r, cfg.resolution.n_grid)?.measure.into(),
                format!("{}[+]sigma_{}", o.measure, o.r),
            ),
        };
        compare_spectrum(&sample, &target, &id, cfg.tolerances.spectrum_ks, cfg.tolerances.spectrum_w2)
    })
}

/// Executes a config file and writes its outputs; see [`Mode`].
pub fn run(config_path: &Path, mode: Mode) -> Result<RunSummary> {
    let started = Instant::now();
    let (cfg, text) = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let out_dir = base.join(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;
    let workers = worker_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config_error(WORKERS_ENV, e.to_string()))?;
    let measures = build_measures(&cfg)?;
    let mut outputs = Vec::new();
    let mut records = Vec::new();
    pool.install(|| -> Result<()> {
        if mode == Mode::All {
            let per_check: Vec<Vec<VerificationRecord>> = cfg
                .checks
                .par_iter()
                .enumerate()
                .map(|(i, c)| run_check(&cfg, i, c, &measures))
                .collect();
            records = per_check.concat();
            let reports: Vec<FunctionalReport> = measures
                .par_iter()
                .map(|(name, m)| FunctionalReport::compute(name, m))
                .collect();
            write_functional_csv(&reports, BufWriter::new(fs::File::create(out_dir.join(FUNCTIONALS_FILE))?))?;
            outputs.push(FUNCTIONALS_FILE.to_string());
        }
        if mode != Mode::OracleOnly {
            for f in &cfg.flow {
                let states = f
                    .times
                    .par_iter()
                    .map(|&t| ou_flow_with(&measures[&f.measure], t, cfg.flow_options()))
                    .collect::<Result<Vec<_>>>()?;
                let name = format!("flow_{}.csv", f.measure);
                write_flow_csv(&states, BufWriter::new(fs::File::create(out_dir.join(&name))?))?;
                outputs.push(name);
            }
        }
        if mode != Mode::FlowOnly {
            if let Some(o) = &cfg.oracle {
                records.extend(oracle_records(&cfg, o, &measures, &out_dir, &mut outputs));
            }
        }
        Ok(())
    })?;
    if mode != Mode::FlowOnly {
        write_report_csv(&records, BufWriter::new(fs::File::create(out_dir.join(REPORT_FILE))?))?;
        outputs.push(REPORT_FILE.to_string());
    }
    let failures = records.iter().filter(|r| !r.passed()).count();
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        schema_version: SCHEMA_VERSION,
        mode: format!("{mode:?}"),
        config_path: config_path.display().to_string(),
        config_sha256: Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        seed: cfg.seed,
        oracle_seed: cfg.oracle.as_ref().map(|o| o.seed),
        workers,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs,
        failures,
        config: cfg,
    };
    fs::write(out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary {
        records,
        output_dir: out_dir,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn errors_carry_field_paths() {
        let e = parse(r#"{"schema_version": 1, "measures": {"a": {"type": "semicircle", "center": 0, "varaince": 1}}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("measures.a"), "{e}");
        let e = parse(r#"{"schema_version": 1, "measures": {}, "checks": [{"check": "check_lsi", "measures": ["nope"]}]}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("checks[0].measures[0]") && e.contains("nope"), "{e}");
        let e = parse(r#"{"schema_version": 2, "measures": {}}"#).unwrap_err().to_string();
        assert!(e.contains("schema_version"), "{e}");
        let e = parse(r#"{"schema_version": 1, "measures": {}, "tolerances": {"lsi": -1}}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("tolerances.lsi"), "{e}");
        let e = parse(r#"{"schema_version": 1, "measures": {}, "checks": [{"check": "check_lsi", "measures": [], "t": 1}]}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("checks[0]"), "{e}");
    }

    #[test]
    fn random_pairs_expand_to_common_denominators() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (a, b) = random_pair(&mut rng, 8).unwrap();
            assert!(crate::transport::brute_force_w(&a, &b, 2.0).is_ok());
        }
    }

    #[test]
    fn rejudge_keeps_the_scale() {
        let r = VerificationRecord::identity("check_fisher_identity", "a", "m", String::new(), 3.0, 2.0, 2.0, 0.1);
        let s = rejudge(r, CheckKind::FisherIdentity, 0.6);
        assert_eq!(s.margin, 0.5);
        assert!(s.passed());
    }
}
