use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{Semantics, VerificationRecord};
use crate::error::{invalid, Error, Result};
use crate::freeconv::{
    burgers_characteristics, burgers_residual, convolve_on_grid, free_convolve_semicircle, ou_flow_with,
    FlowOptions, FlowState,
};
use crate::functionals::{chi, log_energy, phi_value, FunctionalReport};
use crate::measure::{dilate, semicircle, semicircle_with, AtomicMeasure, Measure};
use crate::transport::{brute_force_w, transport_equation_residual, wasserstein, wasserstein_with};
use crate::Complex64 as C;

/// Tolerance of every registered check; the only source of pass/fail
/// thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lsi: f64,
    /// relative
    pub entropy_derivative: f64,
    pub distance_speed: f64,
    pub density_system: f64,
    /// relative to `max(|I|, 1)`
    pub fisher_identity: f64,
    pub hilbert_pairing: f64,
    /// relative
    pub phi_forms: f64,
    pub scaling: f64,
    pub sigma_nonnegative: f64,
    pub subordination: f64,
    pub burgers_residual: f64,
    pub transport_equation: f64,
    pub semicircle_convolution: f64,
    pub wasserstein_oracle: f64,
    pub metric: f64,
    pub spectrum_ks: f64,
    pub spectrum_w2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lsi: 1e-6,
            entropy_derivative: 0.01,
            distance_speed: 1e-6,
            density_system: 5e-3,
            fisher_identity: 1e-3,
            hilbert_pairing: 1e-4,
            phi_forms: 0.01,
            scaling: 1e-6,
            sigma_nonnegative: 1e-6,
            subordination: 1e-8,
            burgers_residual: 1e-4,
            transport_equation: 5e-3,
            semicircle_convolution: 1e-3,
            wasserstein_oracle: 1e-12,
            metric: 1e-12,
            spectrum_ks: 0.03,
            spectrum_w2: 0.05,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for kind in CheckKind::ALL {
            if kind.semantics() == Semantics::Reported {
                continue;
            }
            let tol = kind.tolerance(self);
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config {
                    path: format!("tolerances.{}", kind.tolerance_key()),
                    message: format!("must be positive and finite, got {tol}"),
                });
            }
        }
        Ok(())
    }
}

/// Every check the harness knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Lsi,
    EntropyDerivative,
    DistanceSpeed,
    Talagrand,
    MonotoneFunctional,
    DensitySystem,
    FisherIdentity,
    HilbertPairing,
    PhiForms,
    Scaling,
    SigmaNonnegative,
    Subordination,
    BurgersResidual,
    TransportEquation,
    SemicircleConvolution,
    WassersteinOracle,
    MetricSymmetry,
    MetricIdentity,
    MetricTriangle,
    SpectrumKs,
    SpectrumW2,
}

impl CheckKind {
    pub const ALL: [CheckKind; 21] = [
        CheckKind::Lsi,
        CheckKind::EntropyDerivative,
        CheckKind::DistanceSpeed,
        CheckKind::Talagrand,
        CheckKind::MonotoneFunctional,
        CheckKind::DensitySystem,
        CheckKind::FisherIdentity,
        CheckKind::HilbertPairing,
        CheckKind::PhiForms,
        CheckKind::Scaling,
        CheckKind::SigmaNonnegative,
        CheckKind::Subordination,
        CheckKind::BurgersResidual,
        CheckKind::TransportEquation,
        CheckKind::SemicircleConvolution,
        CheckKind::WassersteinOracle,
        CheckKind::MetricSymmetry,
        CheckKind::MetricIdentity,
        CheckKind::MetricTriangle,
        CheckKind::SpectrumKs,
        CheckKind::SpectrumW2,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CheckKind::Lsi => "check_lsi",
            CheckKind::EntropyDerivative => "check_entropy_derivative",
            CheckKind::DistanceSpeed => "check_distance_speed",
            CheckKind::Talagrand => "check_talagrand",
            CheckKind::MonotoneFunctional => "check_monotone_functional",
            CheckKind::DensitySystem => "check_density_system",
            CheckKind::FisherIdentity => "check_fisher_identity",
            CheckKind::HilbertPairing => "check_hilbert_pairing",
            CheckKind::PhiForms => "check_phi_forms",
            CheckKind::Scaling => "check_scaling",
            CheckKind::SigmaNonnegative => "check_sigma_nonnegative",
            CheckKind::Subordination => "check_subordination",
            CheckKind::BurgersResidual => "check_burgers_residual",
            CheckKind::TransportEquation => "check_transport_equation",
            CheckKind::SemicircleConvolution => "check_semicircle_convolution",
            CheckKind::WassersteinOracle => "check_wasserstein_oracle",
            CheckKind::MetricSymmetry => "check_metric_symmetry",
            CheckKind::MetricIdentity => "check_metric_identity",
            CheckKind::MetricTriangle => "check_metric_triangle",
            CheckKind::SpectrumKs => "check_spectrum_ks",
            CheckKind::SpectrumW2 => "check_spectrum_w2",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn anchor(self) -> &'static str {
        match self {
            CheckKind::Lsi => "log-Sobolev inequality Sigma~(X) <= I(X)/2",
            CheckKind::EntropyDerivative => "d/dt Sigma~(X(t)) = -I(X(t))/2",
            CheckKind::DistanceSpeed => "4 W(X(s),X(t))^2 / (t-s)^2 <= sup_{s<=h<=t} I(X(h))",
            CheckKind::Talagrand => "transportation inequality W(X,S)^2 <= c Sigma~(X)",
            CheckKind::MonotoneFunctional => "W(X(t),S) - (c Sigma~(X(t)))^(1/2) increases in t",
            CheckKind::DensitySystem => "evolution of p and q = -Hp along the free OU flow",
            CheckKind::FisherIdentity => "I(X) = Phi(X) - 2 + tau(X^2)",
            CheckKind::HilbertPairing => "int x Hp(x) p(x) dx = 1/(2 pi)",
            CheckKind::PhiForms => "Phi = (4/3) pi^2 int p^3 = 4 pi^2 int (Hp)^2 p",
            CheckKind::Scaling => "chi(aX) = chi(X) + log|a|",
            CheckKind::SigmaNonnegative => "Sigma~(X) >= 0",
            CheckKind::Subordination => "subordination and Burgers characteristics give one G",
            CheckKind::BurgersResidual => "complex Burgers equation for G(t, z)",
            CheckKind::TransportEquation => "transport equation for phi_{s,t}",
            CheckKind::SemicircleConvolution => "sigma_a [+] sigma_b = sigma_{a+b}",
            CheckKind::WassersteinOracle => "the quantile coupling is optimal on the line",
            CheckKind::MetricSymmetry | CheckKind::MetricIdentity | CheckKind::MetricTriangle => {
                crate::transport::ANCHOR_METRIC
            }
            CheckKind::SpectrumKs | CheckKind::SpectrumW2 => crate::rmt::ANCHOR_SPECTRUM,
        }
    }

    pub fn semantics(self) -> Semantics {
        match self {
            CheckKind::Talagrand | CheckKind::MonotoneFunctional => Semantics::Reported,
            CheckKind::Lsi | CheckKind::DistanceSpeed | CheckKind::SigmaNonnegative | CheckKind::MetricTriangle => {
                Semantics::Inequality
            }
            _ => Semantics::Identity,
        }
    }

    /// Field of [`Tolerances`] that governs this check.
    pub fn tolerance_key(self) -> &'static str {
        match self {
            CheckKind::Lsi => "lsi",
            CheckKind::EntropyDerivative => "entropy_derivative",
            CheckKind::DistanceSpeed => "distance_speed",
            CheckKind::Talagrand | CheckKind::MonotoneFunctional => "",
            CheckKind::DensitySystem => "density_system",
            CheckKind::FisherIdentity => "fisher_identity",
            CheckKind::HilbertPairing => "hilbert_pairing",
            CheckKind::PhiForms => "phi_forms",
            CheckKind::Scaling => "scaling",
            CheckKind::SigmaNonnegative => "sigma_nonnegative",
            CheckKind::Subordination => "subordination",
            CheckKind::BurgersResidual => "burgers_residual",
            CheckKind::TransportEquation => "transport_equation",
            CheckKind::SemicircleConvolution => "semicircle_convolution",
            CheckKind::WassersteinOracle => "wasserstein_oracle",
            CheckKind::MetricSymmetry | CheckKind::MetricIdentity | CheckKind::MetricTriangle => "metric",
            CheckKind::SpectrumKs => "spectrum_ks",
            CheckKind::SpectrumW2 => "spectrum_w2",
        }
    }

    /// NaN for reported-only checks.
    pub fn tolerance(self, t: &Tolerances) -> f64 {
        match self {
            CheckKind::Lsi => t.lsi,
            CheckKind::EntropyDerivative => t.entropy_derivative,
            CheckKind::DistanceSpeed => t.distance_speed,
            CheckKind::Talagrand | CheckKind::MonotoneFunctional => f64::NAN,
            CheckKind::DensitySystem => t.density_system,
            CheckKind::FisherIdentity => t.fisher_identity,
            CheckKind::HilbertPairing => t.hilbert_pairing,
            CheckKind::PhiForms => t.phi_forms,
            CheckKind::Scaling => t.scaling,
            CheckKind::SigmaNonnegative => t.sigma_nonnegative,
            CheckKind::Subordination => t.subordination,
            CheckKind::BurgersResidual => t.burgers_residual,
            CheckKind::TransportEquation => t.transport_equation,
            CheckKind::SemicircleConvolution => t.semicircle_convolution,
            CheckKind::WassersteinOracle => t.wasserstein_oracle,
            CheckKind::MetricSymmetry | CheckKind::MetricIdentity | CheckKind::MetricTriangle => t.metric,
            CheckKind::SpectrumKs => t.spectrum_ks,
            CheckKind::SpectrumW2 => t.spectrum_w2,
        }
    }

    pub fn reported_only(self) -> bool {
        self.semantics() == Semantics::Reported
    }
}

/// One line per check: id, anchor, default tolerance or `reported-only`.
pub fn list_checks() -> String {
    let tol = Tolerances::default();
    let mut out = String::new();
    for k in CheckKind::ALL {
        let t = if k.reported_only() {
            "reported-only".to_string()
        } else {
            format!("tolerance={:e}", k.tolerance(&tol))
        };
        out.push_str(&format!("{}\t{}\t{}\n", k.id(), k.anchor(), t));
    }
    out
}

/// Runs `f`, turning an error into a single failed record.
pub fn guarded(
    kind: CheckKind,
    measure_id: &str,
    params: &str,
    tolerance: f64,
    f: impl FnOnce() -> Result<Vec<VerificationRecord>>,
) -> Vec<VerificationRecord> {
    match f() {
        Ok(r) => r,
        Err(e) => vec![VerificationRecord::failed(
            kind.id(),
            kind.anchor(),
            measure_id,
            format!("{params};error={e}"),
            tolerance,
        )],
    }
}

fn record_identity(kind: CheckKind, id: &str, params: String, lhs: f64, rhs: f64, scale: f64, tol: f64) -> VerificationRecord {
    VerificationRecord::identity(kind.id(), kind.anchor(), id, params, lhs, rhs, scale, tol)
}

fn record_inequality(kind: CheckKind, id: &str, params: String, lhs: f64, rhs: f64, tol: f64) -> VerificationRecord {
    VerificationRecord::inequality(kind.id(), kind.anchor(), id, params, lhs, rhs, tol)
}

fn record_reported(kind: CheckKind, id: &str, params: String, lhs: f64, rhs: f64, margin: f64) -> VerificationRecord {
    VerificationRecord::reported(kind.id(), kind.anchor(), id, params, lhs, rhs, margin)
}

fn flow_report(state: &FlowState) -> FunctionalReport {
    FunctionalReport::of_grid("", &state.measure, &state.hilbert())
}

fn flows(m0: &Measure, times: &[f64], opts: FlowOptions) -> Result<Vec<FlowState>> {
    times.par_iter().map(|&t| ou_flow_with(m0, t, opts)).collect()
}

/// `Sigma~ <= I/2`.
pub fn check_lsi(m: &Measure, measure_id: &str, tol: f64) -> VerificationRecord {
    let r = FunctionalReport::compute(measure_id, m);
    record_inequality(CheckKind::Lsi, measure_id, String::new(), r.sigma_tilde, 0.5 * r.i_ou, tol)
}

/// Smallest denominator of the relative entropy-derivative gap.
pub const ENTROPY_DERIVATIVE_SCALE_FLOOR: f64 = 1e-2;

/// Central difference of `Sigma~(X(t))` against `-I(X(t))/2`, relative to
/// `max(|I|/2, ENTROPY_DERIVATIVE_SCALE_FLOOR)`.
pub fn check_entropy_derivative(
    m0: &Measure,
    measure_id: &str,
    t: f64,
    dt: f64,
    opts: FlowOptions,
    tol: f64,
) -> Result<VerificationRecord> {
    if !(dt > 0.0 && t > dt) {
        return Err(invalid("dt", format!("need 0 < dt < t, got t = {t}, dt = {dt}")));
    }
    let s = flows(m0, &[t - dt, t, t + dt], opts)?;
    let r: Vec<FunctionalReport> = s.iter().map(flow_report).collect();
    let lhs = (r[2].sigma_tilde - r[0].sigma_tilde) / (2.0 * dt);
    let rhs = -0.5 * r[1].i_ou;
    Ok(record_identity(
        CheckKind::EntropyDerivative,
        measure_id,
        format!("t={t};dt={dt}"),
        lhs,
        rhs,
        rhs.abs().max(ENTROPY_DERIVATIVE_SCALE_FLOOR),
        tol,
    ))
}

/// Minimum number of sampling nodes of the supremum.
pub const MIN_SUP_NODES: usize = 17;
const GOLDEN_STEPS: usize = 12;

/// `sup_{s <= h <= t} I(X(h))` over Chebyshev-Lobatto nodes, refined by a
/// golden-section search around the best node.
pub fn sup_i_ou(m0: &Measure, s: f64, t: f64, n_nodes: usize, opts: FlowOptions) -> Result<(f64, f64)> {
    if n_nodes < MIN_SUP_NODES {
        return Err(invalid("n_nodes", format!("need at least {MIN_SUP_NODES}, got {n_nodes}")));
    }
    let (mid, half) = (0.5 * (s + t), 0.5 * (t - s));
    let hs: Vec<f64> = (0..n_nodes)
        .map(|k| mid - half * (k as f64 * PI / (n_nodes - 1) as f64).cos())
        .collect();
    let i_at = |h: f64| -> Result<f64> { Ok(flow_report(&ou_flow_with(m0, h, opts)?).i_ou) };
    let values: Vec<f64> = hs.par_iter().map(|&h| i_at(h)).collect::<Result<_>>()?;
    let k = (0..n_nodes)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let (mut best_h, mut best) = (hs[k], values[k]);
    let (mut a, mut b) = (hs[k.saturating_sub(1)], hs[(k + 1).min(n_nodes - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (i_at(c)?, i_at(d)?);
    for _ in 0..GOLDEN_STEPS {
        for (h, f) in [(c, fc), (d, fd)] {
            if f > best {
                best = f;
                best_h = h;
            }
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = i_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = i_at(d)?;
        }
    }
    for (h, f) in [(c, fc), (d, fd)] {
        if f > best {
            best = f;
            best_h = h;
        }
    }
    Ok((best, best_h))
}

/// `4 W(X(s), X(t))^2 / (t - s)^2 <= sup I(X(h))`. The distance uses flow
/// states at `opts`, the supremum at `sup_opts`.
#[allow(clippy::too_many_arguments)]
pub fn check_distance_speed(
    m0: &Measure,
    measure_id: &str,
    s: f64,
    t: f64,
    n_nodes: usize,
    opts: FlowOptions,
    sup_opts: FlowOptions,
    tol: f64,
) -> Result<VerificationRecord> {
    if !(0.0 < s && s < t) {
        return Err(invalid("s, t", format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let st = flows(m0, &[s, t], opts)?;
    let w = wasserstein(&st[0].measure.clone().into(), &st[1].measure.clone().into(), 2.0)?;
    let lhs = 4.0 * w * w / ((t - s) * (t - s));
    let (rhs, h) = sup_i_ou(m0, s, t, n_nodes, sup_opts)?;
    Ok(record_inequality(
        CheckKind::DistanceSpeed,
        measure_id,
        format!("s={s};t={t};argmax_h={h}"),
        lhs,
        rhs,
        tol,
    ))
}

fn standard_semicircle(n_grid: usize) -> Result<Measure> {
    Ok(semicircle_with(0.0, 1.0, n_grid)?.into())
}

fn grid_size(m: &Measure) -> usize {
    m.as_grid().map_or(crate::measure::DEFAULT_N_GRID, |g| g.n_grid())
}

/// `c Sigma~(mu) - W(mu, sigma)^2` for `c = 1` and `c = 2`, both reported.
pub fn check_talagrand(m: &Measure, measure_id: &str) -> Result<Vec<VerificationRecord>> {
    let sc = standard_semicircle(grid_size(m))?;
    let w = wasserstein(m, &sc, 2.0)?;
    let sigma = crate::functionals::sigma_tilde(m);
    Ok([1.0, 2.0]
        .iter()
        .map(|&c| {
            let rhs = c * sigma;
            let lhs = w * w;
            record_reported(
                CheckKind::Talagrand,
                measure_id,
                format!("constant={c}"),
                lhs,
                rhs,
                rhs - lhs,
            )
        })
        .collect())
}

/// Tabulates `W(X(t), S) - (c Sigma~(X(t)))^(1/2)` for `c = 1, 2` along
/// `t_grid`, then one summary row per constant whose margin is the
/// smallest increment (nonnegative iff the sequence is nondecreasing).
pub fn check_monotone_functional(
    m0: &Measure,
    measure_id: &str,
    t_grid: &[f64],
    opts: FlowOptions,
) -> Result<Vec<VerificationRecord>> {
    if t_grid.len() < 4 {
        return Err(invalid("t_grid", "need at least 4 nodes"));
    }
    if !(t_grid[0] > 0.0) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("t_grid", "must be positive and increasing"));
    }
    let states = flows(m0, t_grid, opts)?;
    let sc = standard_semicircle(opts.n_grid)?;
    let rows: Vec<(f64, f64)> = states
        .par_iter()
        .map(|st| {
            let m: Measure = st.measure.clone().into();
            Ok((wasserstein(&m, &sc, 2.0)?, flow_report(st).sigma_tilde))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for c in [1.0, 2.0] {
        let seq: Vec<f64> = rows.iter().map(|(w, s)| w - (c * s.max(0.0)).sqrt()).collect();
        for ((t, (w, s)), v) in t_grid.iter().zip(&rows).zip(&seq) {
            out.push(record_reported(
                CheckKind::MonotoneFunctional,
                measure_id,
                format!("constant={c};t={t}"),
                *w,
                (c * s.max(0.0)).sqrt(),
                *v,
            ));
        }
        let min_step = seq.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        out.push(record_reported(
            CheckKind::MonotoneFunctional,
            measure_id,
            format!("constant={c};summary=min_increment"),
            min_step,
            0.0,
            min_step,
        ));
    }
    Ok(out)
}

/// Interior nodes used by the density-system residual: all three stencil
/// densities at least this fraction of the peak.
pub const DENSITY_WINDOW: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct DensitySystemResidual {
    pub x: Vec<f64>,
    /// residual of the `p_t` equation
    pub p: Vec<f64>,
    /// residual of the `q_t` equation
    pub q: Vec<f64>,
}

impl DensitySystemResidual {
    pub fn max_p(&self) -> f64 {
        self.p.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn max_q(&self) -> f64 {
        self.q.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

/// Residuals of
/// `p_t = pi (p q_x + q p_x) + (x p_x + p)/2` and
/// `q_t = pi (q q_x - p p_x) + (x q_x + q)/2`, `q = -Hp`, on the grid of
/// `X(t)`. Time derivatives are central differences of the neighbouring
/// states interpolated onto that grid.
pub fn density_system_residual(
    m0: &Measure,
    t: f64,
    dt: f64,
    window: f64,
    opts: FlowOptions,
) -> Result<DensitySystemResidual> {
    if !(dt > 0.0 && t > dt) {
        return Err(invalid("dt", format!("need 0 < dt < t, got t = {t}, dt = {dt}")));
    }
    let s = flows(m0, &[t - dt, t, t + dt], opts)?;
    let g = &s[1].measure;
    let p = g.density();
    let q: Vec<f64> = s[1].hilbert().iter().map(|v| -v).collect();
    let h = g.spacing();
    let floor = window * p.iter().copied().fold(0.0, f64::max);
    let mut out = DensitySystemResidual {
        x: Vec::new(),
        p: Vec::new(),
        q: Vec::new(),
    };
    for j in 1..p.len() - 1 {
        if p[j - 1] < floor || p[j] < floor || p[j + 1] < floor {
            continue;
        }
        let x = g.node(j);
        let (pb, pa) = (s[0].measure.density_at(x), s[2].measure.density_at(x));
        if pb < floor || pa < floor {
            continue;
        }
        let px = (p[j + 1] - p[j - 1]) / (2.0 * h);
        let qx = (q[j + 1] - q[j - 1]) / (2.0 * h);
        let pt = (pa - pb) / (2.0 * dt);
        let qt = -(s[2].hilbert_at(x) - s[0].hilbert_at(x)) / (2.0 * dt);
        out.x.push(x);
        out.p.push(pt - (PI * (p[j] * qx + q[j] * px) + 0.5 * (x * px + p[j])));
        out.q.push(qt - (PI * (q[j] * qx - p[j] * px) + 0.5 * (x * qx + q[j])));
    }
    if out.x.is_empty() {
        return Err(invalid("window", "no grid node has density above the window floor"));
    }
    Ok(out)
}

/// Largest residual of either density-system equation.
pub fn check_density_system(
    m0: &Measure,
    measure_id: &str,
    t: f64,
    dt: f64,
    opts: FlowOptions,
    tol: f64,
) -> Result<VerificationRecord> {
    let r = density_system_residual(m0, t, dt, DENSITY_WINDOW, opts)?;
    Ok(record_identity(
        CheckKind::DensitySystem,
        measure_id,
        format!(
            "t={t};dt={dt};n_grid={};max_p={:e};max_q={:e};nodes={}",
            opts.n_grid,
            r.max_p(),
            r.max_q(),
            r.x.len()
        ),
        r.max_p().max(r.max_q()),
        0.0,
        1.0,
        tol,
    ))
}

/// `I`, `Phi` consistency, pairing and nonnegativity checks of one measure,
/// from a single functional report.
pub fn check_functional_identities(m: &Measure, measure_id: &str, tol: &Tolerances) -> Vec<VerificationRecord> {
    let r = FunctionalReport::compute(measure_id, m);
    let grid = m.as_grid();
    let mut out = vec![
        record_identity(
            CheckKind::FisherIdentity,
            measure_id,
            String::new(),
            r.i_ou,
            r.phi - 2.0 + r.tau_x2,
            r.i_ou.abs().max(1.0),
            tol.fisher_identity,
        ),
        record_inequality(
            CheckKind::SigmaNonnegative,
            measure_id,
            String::new(),
            0.0,
            r.sigma_tilde,
            tol.sigma_nonnegative,
        ),
    ];
    if let Some(g) = grid {
        let hp = crate::cauchy::hilbert_density(g);
        let phi = crate::functionals::phi_with(g, &hp);
        out.push(record_identity(
            CheckKind::HilbertPairing,
            measure_id,
            String::new(),
            crate::functionals::hilbert_pairing(g, &hp),
            0.5 / PI,
            1.0,
            tol.hilbert_pairing,
        ));
        out.push(record_identity(
            CheckKind::PhiForms,
            measure_id,
            String::new(),
            phi.cubic,
            phi.hilbert,
            phi.cubic,
            tol.phi_forms,
        ));
    }
    out
}

/// `chi(aX) - chi(X) = log|a|`, `E(aX) - E(X) = log|a|` and
/// `Phi(aX) = Phi(X) / a^2`.
pub fn check_scaling(m: &Measure, measure_id: &str, alpha: f64, tol: f64) -> Result<Vec<VerificationRecord>> {
    let s = dilate(m, alpha)?;
    let la = alpha.abs().ln();
    let k = CheckKind::Scaling;
    let p = |f: &str| format!("functional={f};alpha={alpha}");
    Ok(vec![
        record_identity(k, measure_id, p("chi"), chi(&s), chi(m) + la, 1.0, tol),
        record_identity(k, measure_id, p("log_energy"), log_energy(&s), log_energy(m) + la, 1.0, tol),
        record_identity(k, measure_id, p("phi"), phi_value(&s), phi_value(m) / (alpha * alpha), 1.0, tol),
    ])
}

/// Largest `|G_sub(z) - G_char(z)|` over `zs` for `mu [+] sigma_r`.
pub fn check_subordination(m: &Measure, measure_id: &str, r: f64, zs: &[C], tol: f64) -> Result<VerificationRecord> {
    let diffs: Vec<f64> = zs
        .par_iter()
        .map(|&z| Ok((free_convolve_semicircle(m, r, z)? - burgers_characteristics(m, r, z)?.value).norm()))
        .collect::<Result<_>>()?;
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    let min_im = zs.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
    Ok(record_identity(
        CheckKind::Subordination,
        measure_id,
        format!("r={r};points={};min_im={min_im}", zs.len()),
        worst,
        0.0,
        1.0,
        tol,
    ))
}

/// Largest Burgers residual over `zs`.
pub fn check_burgers_residual(
    m0: &Measure,
    measure_id: &str,
    t: f64,
    zs: &[C],
    step: f64,
    tol: f64,
) -> Result<VerificationRecord> {
    let res = burgers_residual(m0, t, zs, step)?;
    let worst = res.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(record_identity(
        CheckKind::BurgersResidual,
        measure_id,
        format!("t={t};step={step};points={}", zs.len()),
        worst,
        0.0,
        1.0,
        tol,
    ))
}

#[allow(clippy::too_many_arguments)]
pub fn check_transport_equation(
    m0: &Measure,
    measure_id: &str,
    s: f64,
    t: f64,
    dt: f64,
    opts: FlowOptions,
    tol: f64,
) -> Result<VerificationRecord> {
    let r = transport_equation_residual(m0, s, t, dt, opts)?;
    Ok(record_identity(
        CheckKind::TransportEquation,
        measure_id,
        format!("s={s};t={t};dt={dt};mean={:e}", r.mean_abs()),
        r.max_abs(),
        0.0,
        1.0,
        tol,
    ))
}

/// Sup-norm density error of `sigma_a [+] sigma_b` against `sigma_{a+b}`.
pub fn check_semicircle_convolution(a: f64, b: f64, n_grid: usize, tol: f64) -> Result<VerificationRecord> {
    let sa: Measure = semicircle_with(0.0, a, n_grid)?.into();
    let conv = convolve_on_grid(&sa, b, n_grid)?;
    let exact = semicircle(0.0, a + b)?;
    let g = &conv.measure;
    let err = g
        .nodes()
        .iter()
        .zip(g.density())
        .map(|(x, p)| (p - exact.density_at(*x)).abs())
        .fold(0.0, f64::max);
    Ok(record_identity(
        CheckKind::SemicircleConvolution,
        &format!("semicircle(0,{a})"),
        format!("a={a};b={b};n_grid={n_grid}"),
        err,
        0.0,
        1.0,
        tol,
    ))
}

/// Quantile-coupling `W_p` against permutation enumeration.
pub fn check_wasserstein_oracle(
    a: &AtomicMeasure,
    b: &AtomicMeasure,
    pair_id: &str,
    p: f64,
    tol: f64,
) -> Result<VerificationRecord> {
    let w = wasserstein_with(&a.clone().into(), &b.clone().into(), p, 2)?;
    let bf = brute_force_w(a, b, p)?;
    Ok(record_identity(
        CheckKind::WassersteinOracle,
        pair_id,
        format!("p={p}"),
        w,
        bf,
        1.0 + bf,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Status;

    fn sc() -> Measure {
        semicircle(0.0, 1.0).unwrap().into()
    }

    fn sc2() -> Measure {
        dilate(&sc(), 2.0).unwrap()
    }

    #[test]
    fn registry_is_consistent() {
        let listing = list_checks();
        assert_eq!(listing.lines().count(), CheckKind::ALL.len());
        assert!(listing.lines().any(|l| l.starts_with("check_talagrand\t") && l.ends_with("reported-only")));
        for k in CheckKind::ALL {
            assert_eq!(CheckKind::from_id(k.id()), Some(k));
            assert!(!k.anchor().is_empty());
        }
        Tolerances::default().validate().unwrap();
        let bad = Tolerances { lsi: 0.0, ..Tolerances::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("tolerances.lsi"));
    }

    #[test]
    fn lsi_on_semicircles() {
        let r = check_lsi(&sc(), "sc", 1e-6);
        assert_eq!(r.status, Status::Pass);
        assert!(r.lhs.abs() < 1e-4 && r.rhs.abs() < 1e-4);
        let r = check_lsi(&sc2(), "sc2", 1e-6);
        assert!((r.lhs - (2.0 - 2f64.ln() - 0.5)).abs() < 1e-4);
        assert!((r.rhs - 1.125).abs() < 1e-3);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn talagrand_probe() {
        let r = check_talagrand(&sc2(), "sc2").unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|x| x.status == Status::Reported));
        assert!((r[0].margin + 0.1931).abs() < 2e-3, "{}", r[0].margin);
        assert!((r[1].margin - 0.6137).abs() < 2e-3, "{}", r[1].margin);
        let a = check_talagrand(&AtomicMeasure::dirac(0.0).into(), "d").unwrap();
        assert!(a.iter().all(|x| x.margin == f64::INFINITY));
    }

    #[test]
    fn errors_become_failed_records() {
        let r = guarded(CheckKind::EntropyDerivative, "m", "t=0", 0.01, || {
            Ok(vec![check_entropy_derivative(&sc(), "m", 0.0, 1e-3, FlowOptions::default(), 0.01)?])
        });
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].status, Status::Fail);
        assert!(r[0].params.contains("error="));
    }

    #[test]
    fn scaling_is_exact() {
        for a in [0.5, 2.0, 3.0] {
            for r in check_scaling(&sc(), "sc", a, 1e-6).unwrap() {
                assert_eq!(r.status, Status::Pass, "{r:?}");
            }
        }
    }

    #[test]
    fn functional_identities_on_semicircle() {
        let rs = check_functional_identities(&sc2(), "sc2", &Tolerances::default());
        assert_eq!(rs.len(), 4);
        assert!(rs.iter().all(|r| r.status == Status::Pass), "{rs:?}");
    }
}
