//! One-dimensional Wasserstein distances through quantile functions,
//! monotone transport maps and a brute-force coupling oracle.

use std::io::Write;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::freeconv::{ou_flow_with, FlowOptions, FlowState};
use crate::measure::{quantile_table, AtomicMeasure, Measure, QuantileTable};
use crate::report::fmt_f64;
use crate::verify::VerificationRecord;

/// Midpoint nodes of the quantile integral.
pub const DEFAULT_N_QUANTILE: usize = 16384;
/// Largest equal-weight expansion the permutation oracle accepts.
pub const BRUTE_FORCE_MAX_ATOMS: usize = 8;

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("need finite p >= 1, got {p}")));
    }
    Ok(())
}

/// `W_p(mu, nu) = (int_0^1 |q_mu(u) - q_nu(u)|^p du)^{1/p}`.
///
/// Exact for two atomic measures; otherwise the midpoint rule on
/// [`DEFAULT_N_QUANTILE`] nodes.
pub fn wasserstein(m: &Measure, v: &Measure, p: f64) -> Result<f64> {
    wasserstein_with(m, v, p, DEFAULT_N_QUANTILE)
}

pub fn wasserstein_with(m: &Measure, v: &Measure, p: f64, n_quantile: usize) -> Result<f64> {
    check_p(p)?;
    if let (Measure::Atoms(a), Measure::Atoms(b)) = (m, v) {
        return Ok(atomic_wasserstein(a, b, p));
    }
    let qa = quantile_table(m, n_quantile)?;
    let qb = quantile_table(v, n_quantile)?;
    Ok(table_wasserstein(&qa, &qb, p))
}

/// Midpoint-rule distance between two quantile tables of equal size.
pub fn table_wasserstein(qa: &QuantileTable, qb: &QuantileTable, p: f64) -> f64 {
    let n = qa.n_quantile() as f64;
    let s: f64 = qa
        .values()
        .iter()
        .zip(qb.values())
        .map(|(x, y)| (x - y).abs().powf(p))
        .sum();
    (s / n).powf(1.0 / p)
}

/// Walks the merged CDF breakpoints of two atomic measures.
fn merged_cells(a: &AtomicMeasure, b: &AtomicMeasure) -> Vec<(f64, f64, f64)> {
    let (xa, xb) = (a.atoms(), b.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (xa[0].1, xb[0].1);
    let mut out = Vec::with_capacity(xa.len() + xb.len());
    loop {
        let mass = ra.min(rb);
        if mass > 0.0 {
            out.push((xa[i].0, xb[j].0, mass));
        }
        ra -= mass;
        rb -= mass;
        let next_a = ra <= 0.0 && i + 1 < xa.len();
        let next_b = rb <= 0.0 && j + 1 < xb.len();
        if !next_a && !next_b {
            // at most rounding residue remains
            if i + 1 < xa.len() || j + 1 < xb.len() {
                if i + 1 < xa.len() {
                    i += 1;
                    ra = xa[i].1;
                } else {
                    j += 1;
                    rb = xb[j].1;
                }
                continue;
            }
            break;
        }
        if next_a {
            i += 1;
            ra += xa[i].1;
        }
        if next_b {
            j += 1;
            rb += xb[j].1;
        }
    }
    out
}

fn atomic_wasserstein(a: &AtomicMeasure, b: &AtomicMeasure, p: f64) -> f64 {
    merged_cells(a, b)
        .iter()
        .map(|(x, y, w)| w * (x - y).abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Expands weights into `L <= 8` equal atoms, `L` shared by both measures.
fn equal_weight_expansion(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<(Vec<f64>, Vec<f64>)> {
    for l in 1..=BRUTE_FORCE_MAX_ATOMS {
        let expand = |m: &AtomicMeasure| -> Option<Vec<f64>> {
            let mut out = Vec::new();
            for &(x, w) in m.atoms() {
                let c = w * l as f64;
                let k = c.round();
                if k < 1.0 || (c - k).abs() > 1e-9 {
                    return None;
                }
                out.extend(std::iter::repeat_n(x, k as usize));
            }
            Some(out)
        };
        if let (Some(xa), Some(xb)) = (expand(a), expand(b)) {
            return Ok((xa, xb));
        }
    }
    Err(invalid(
        "atoms",
        format!("weights do not expand into at most {BRUTE_FORCE_MAX_ATOMS} equal atoms"),
    ))
}

/// Minimum over all permutation couplings of the equal-weight expansions.
pub fn brute_force_w(a: &AtomicMeasure, b: &AtomicMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    let (xa, xb) = equal_weight_expansion(a, b)?;
    let l = xa.len();
    let best = (0..l)
        .permutations(l)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| (xa[i] - xb[j]).abs().powf(p))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok((best / l as f64).powf(1.0 / p))
}

/// A transport plan between two measures.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// the comonotone coupling `(q_mu(U), q_nu(U))`, left implicit
    Quantile,
    /// `(x, y, mass)` triples
    Explicit(Vec<(f64, f64, f64)>),
}

impl Coupling {
    /// Comonotone plan between atomic measures, made explicit.
    pub fn quantile_plan(a: &AtomicMeasure, b: &AtomicMeasure) -> Self {
        Coupling::Explicit(merged_cells(a, b))
    }

    /// Largest deviation of the plan's marginals from the given measures.
    pub fn marginal_error(&self, a: &AtomicMeasure, b: &AtomicMeasure) -> f64 {
        let Coupling::Explicit(plan) = self else {
            return 0.0;
        };
        let side = |m: &AtomicMeasure, pick: fn(&(f64, f64, f64)) -> f64| -> f64 {
            m.atoms()
                .iter()
                .map(|&(x, w)| {
                    let got: f64 = plan.iter().filter(|c| pick(c) == x).map(|c| c.2).sum();
                    (got - w).abs()
                })
                .fold(0.0, f64::max)
        };
        side(a, |c| c.0).max(side(b, |c| c.1))
    }

    pub fn cost(&self, p: f64) -> Option<f64> {
        match self {
            Coupling::Quantile => None,
            Coupling::Explicit(plan) => Some(
                plan.iter()
                    .map(|(x, y, w)| w * (x - y).abs().powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p),
            ),
        }
    }

    /// CSV with columns `x, y, mass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let Coupling::Explicit(plan) = self else {
            return Err(invalid("coupling", "the quantile coupling has no explicit plan"));
        };
        #[derive(Serialize)]
        struct Row {
            x: String,
            y: String,
            mass: String,
        }
        let mut w = csv::Writer::from_writer(out);
        for (x, y, m) in plan {
            w.serialize(Row {
                x: fmt_f64(*x),
                y: fmt_f64(*y),
                mass: fmt_f64(*m),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `phi = q_nu o F_mu`, both sides held as quantile tables.
#[derive(Debug, Clone)]
pub struct TransportMap {
    pub source: QuantileTable,
    pub target: QuantileTable,
}

impl TransportMap {
    /// `F_mu(x)` by inverting the source table's interpolant.
    pub fn source_cdf(&self, x: f64) -> f64 {
        let v = self.source.values();
        let n = v.len();
        if x <= v[0] {
            return QuantileTable::node(0, n);
        }
        if x >= v[n - 1] {
            return QuantileTable::node(n - 1, n);
        }
        let k = v.partition_point(|y| *y <= x);
        let (a, b) = (v[k - 1], v[k]);
        let frac = if b > a { (x - a) / (b - a) } else { 0.0 };
        (k as f64 - 0.5 + frac) / n as f64
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.target.at(self.source_cdf(x))
    }

    /// Sup over quantile nodes of `|F_nu(phi(q_mu(u_k))) - u_k|`.
    pub fn pushforward_gap(&self, target: &Measure) -> f64 {
        let n = self.source.n_quantile();
        self.source
            .values()
            .iter()
            .enumerate()
            .map(|(k, &x)| (target.cdf(self.apply(x)) - QuantileTable::node(k, n)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn monotone_map(m: &Measure, v: &Measure) -> Result<TransportMap> {
    monotone_map_with(m, v, DEFAULT_N_QUANTILE)
}

pub fn monotone_map_with(m: &Measure, v: &Measure, n_quantile: usize) -> Result<TransportMap> {
    if m.is_atomic() {
        return Err(Error::AtomicInput("a monotone transport map from the source"));
    }
    Ok(TransportMap {
        source: quantile_table(m, n_quantile)?,
        target: quantile_table(v, n_quantile)?,
    })
}

/// Residual of `d/dt phi_{s,t}(x) = pi Hp(phi_{s,t}(x), t) - phi_{s,t}(x) / 2`.
#[derive(Debug, Clone)]
pub struct TransportResidual {
    /// quantile levels `u_k` carrying the nodes `x_k = q_s(u_k)`
    pub levels: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl TransportResidual {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn mean_abs(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).sum::<f64>() / self.residuals.len() as f64
    }
}

/// Quantile nodes of the transport residual.
pub const TRANSPORT_RESIDUAL_NODES: usize = 512;

/// At `x_k = q_s(u_k)` the map is `phi_{s,t}(x_k) = q_t(u_k)`, so its time
/// derivative is a central difference of quantiles at fixed level.
pub fn transport_equation_residual(
    m0: &Measure,
    s: f64,
    t: f64,
    dt: f64,
    opts: FlowOptions,
) -> Result<TransportResidual> {
    if !(0.0 < s && s < t) {
        return Err(invalid("s, t", format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    if !(dt > 0.0 && dt < t - s) {
        return Err(invalid("dt", format!("need 0 < dt < t - s, got {dt}")));
    }
    let states: Vec<FlowState> = [t - dt, t, t + dt]
        .par_iter()
        .map(|&tau| ou_flow_with(m0, tau, opts))
        .collect::<Result<_>>()?;
    let n = TRANSPORT_RESIDUAL_NODES;
    let levels: Vec<f64> = (0..n).map(|k| QuantileTable::node(k, n)).collect();
    let q = |st: &FlowState, u: f64| st.measure.model_quantile(u);
    let residuals = levels
        .iter()
        .map(|&u| {
            let x = q(&states[1], u);
            let dphi = (q(&states[2], u) - q(&states[0], u)) / (2.0 * dt);
            dphi - (std::f64::consts::PI * states[1].hilbert_at(x) - 0.5 * x)
        })
        .collect();
    Ok(TransportResidual { levels, residuals })
}

/// Symmetry, identity of indiscernibles and the triangle inequality over
/// every triple of `measures` at exponent `p`.
pub fn metric_axiom_suite(
    measures: &[(String, Measure)],
    p: f64,
    n_quantile: usize,
    tolerance: f64,
) -> Result<Vec<VerificationRecord>> {
    if measures.len() < 3 {
        return Err(invalid("measures", "need at least 3"));
    }
    check_p(p)?;
    let k = measures.len();
    let tables: Vec<Option<QuantileTable>> = measures
        .par_iter()
        .map(|(_, m)| -> Result<Option<QuantileTable>> {
            match m {
                Measure::Atoms(_) => Ok(None),
                Measure::Grid(_) => quantile_table(m, n_quantile).map(Some),
            }
        })
        .collect::<Result<_>>()?;
    let dist = |i: usize, j: usize| -> Result<f64> {
        match (&tables[i], &tables[j]) {
            (Some(a), Some(b)) => Ok(table_wasserstein(a, b, p)),
            _ => wasserstein_with(&measures[i].1, &measures[j].1, p, n_quantile),
        }
    };
    let d: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dist(i, j)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let params = |extra: String| format!("p={p};{extra}");
    for i in 0..k {
        for j in i + 1..k {
            let id = format!("{}|{}", measures[i].0, measures[j].0);
            records.push(VerificationRecord::identity(
                "check_metric_symmetry",
                ANCHOR_METRIC,
                &id,
                params(String::new()),
                d[i][j],
                d[j][i],
                1.0,
                tolerance,
            ));
            // W = 0 iff the quantile functions agree
            let same = match (&measures[i].1, &measures[j].1, &tables[i], &tables[j]) {
                (Measure::Atoms(a), Measure::Atoms(b), _, _) => a == b,
                (_, _, Some(a), Some(b)) => a.sup_distance(b) < IDENTITY_TABLE_TOLERANCE,
                _ => false,
            };
            let zero = d[i][j] <= tolerance;
            records.push(VerificationRecord::identity(
                "check_metric_identity",
                ANCHOR_METRIC,
                &id,
                params(format!("equal={same}")),
                if zero { 1.0 } else { 0.0 },
                if same { 1.0 } else { 0.0 },
                1.0,
                0.0,
            ));
        }
    }
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                if i == j || j == l || i == l {
                    continue;
                }
                records.push(VerificationRecord::inequality(
                    "check_metric_triangle",
                    ANCHOR_METRIC,
                    &format!("{}|{}|{}", measures[i].0, measures[j].0, measures[l].0),
                    params(String::new()),
                    d[i][l],
                    d[i][j] + d[j][l],
                    tolerance,
                ));
            }
        }
    }
    Ok(records)
}

/// Quantile-table sup distance below which two measures count as equal.
pub const IDENTITY_TABLE_TOLERANCE: f64 = 1e-9;

pub const ANCHOR_METRIC: &str = "W_p is a metric";
