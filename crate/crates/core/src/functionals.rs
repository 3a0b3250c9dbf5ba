//! Logarithmic energy, free entropy `chi`, free Fisher information `Phi`,
//! its Ornstein-Uhlenbeck variant `I` and the modified entropy `Sigma~`.
//!
//! Atomic measures are legal inputs: their log-energy is `-inf`, so
//! `chi = -inf` and `Sigma~ = Phi = I = +inf`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::cauchy::{hilbert_density, log_potential};
use crate::error::{invalid, Error, Result};
use crate::freeconv::convolve_on_grid;
use crate::measure::{GridMeasure, Measure};
use crate::report::fmt_f64;

/// Relative gap between the two expressions of `Phi` that flags an
/// inaccurate Hilbert transform.
pub const PHI_CONSISTENCY_TOLERANCE: f64 = 0.01;
/// Mismatch between `I` and `Phi - 2 + tau(X^2)` that flags a numerical
/// fault, relative to `max(|I|, 1)`.
pub const IDENTITY_TOLERANCE: f64 = 1e-3;
/// `Sigma~` below this is reported as a quadrature failure.
pub const SIGMA_NEGATIVITY_TOLERANCE: f64 = 1e-6;

/// `int int log|s - t| dmu(s) dmu(t)`.
///
/// The inner integral is the exact logarithmic potential of the piecewise
/// grid model at each node, so no diagonal cell needs special treatment;
/// the outer integral uses the measure's nodal weights.
pub fn log_energy(m: &Measure) -> f64 {
    match m {
        Measure::Atoms(_) => f64::NEG_INFINITY,
        Measure::Grid(g) => log_energy_grid(g),
    }
}

pub fn log_energy_grid(m: &GridMeasure) -> f64 {
    let u = log_potential(m);
    m.integrate_nodal(|j, _| u[j] * m.density()[j])
}

/// `chi = log_energy + 3/4 + log(2 pi) / 2`.
pub fn chi(m: &Measure) -> f64 {
    log_energy(m) + 0.75 + 0.5 * (2.0 * PI).ln()
}

/// Both expressions of the free Fisher information.
#[derive(Debug, Clone, Copy)]
pub struct Phi {
    /// `(4/3) pi^2 int p^3`, the primary value
    pub cubic: f64,
    /// `4 pi^2 int (Hp)^2 p`
    pub hilbert: f64,
}

impl Phi {
    /// `|hilbert - cubic| / cubic`
    pub fn gap(&self) -> f64 {
        (self.hilbert - self.cubic).abs() / self.cubic
    }
}

pub fn phi(m: &GridMeasure) -> Phi {
    phi_with(m, &hilbert_density(m))
}

/// As [`phi`] with `Hp` supplied at the nodes.
pub fn phi_with(m: &GridMeasure, hp: &[f64]) -> Phi {
    let p = m.density();
    let cubic = 4.0 / 3.0 * PI * PI * m.integrate_nodal(|j, _| p[j] * p[j] * p[j]);
    let hilbert = 4.0 * PI * PI * m.integrate_nodal(|j, _| hp[j] * hp[j] * p[j]);
    Phi { cubic, hilbert }
}

/// `Phi` of any measure; `+inf` for atoms.
pub fn phi_value(m: &Measure) -> f64 {
    match m {
        Measure::Atoms(_) => f64::INFINITY,
        Measure::Grid(g) => phi(g).cubic,
    }
}

/// `I = 4 int (pi Hp(x) - x/2)^2 p(x) dx`.
pub fn i_ou(m: &GridMeasure) -> f64 {
    i_ou_with(m, &hilbert_density(m))
}

pub fn i_ou_with(m: &GridMeasure, hp: &[f64]) -> f64 {
    let p = m.density();
    4.0 * m.integrate_nodal(|j, x| {
        let d = PI * hp[j] - 0.5 * x;
        d * d * p[j]
    })
}

/// `I` of any measure; `+inf` for atoms.
pub fn i_ou_value(m: &Measure) -> f64 {
    match m {
        Measure::Atoms(_) => f64::INFINITY,
        Measure::Grid(g) => i_ou(g),
    }
}

/// `int x Hp(x) p(x) dx`, equal to `1 / (2 pi)` for every density.
pub fn hilbert_pairing(m: &GridMeasure, hp: &[f64]) -> f64 {
    let p = m.density();
    m.integrate_nodal(|j, x| x * hp[j] * p[j])
}

/// `Sigma~ = tau(X^2)/2 - log_energy - 3/4`.
pub fn sigma_tilde(m: &Measure) -> f64 {
    match m {
        Measure::Atoms(_) => f64::INFINITY,
        Measure::Grid(_) => 0.5 * m.moment(2) - log_energy(m) - 0.75,
    }
}

/// `2 (chi(mu [+] sigma_eps) - chi(mu)) / eps`, which tends to `Phi(mu)`.
pub fn phi_from_entropy_derivative(m: &Measure, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let g = m
        .as_grid()
        .ok_or(Error::AtomicInput("the entropy derivative"))?;
    let conv = convolve_on_grid(m, eps, g.n_grid())?;
    let chi_eps = chi(&conv.measure.into());
    Ok(2.0 * (chi_eps - chi(m)) / eps)
}

/// Every functional of one measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub measure_id: String,
    pub tau_x2: f64,
    pub log_energy: f64,
    pub chi: f64,
    pub phi: f64,
    pub i_ou: f64,
    pub sigma_tilde: f64,
    /// relative gap between the two expressions of `Phi`
    pub phi_consistency_gap: f64,
    /// `|I - (Phi - 2 + tau(X^2))| / max(|I|, 1)`
    pub identity_gap: f64,
    /// `int x Hp p - 1/(2 pi)`
    pub pairing_error: f64,
}

impl FunctionalReport {
    pub fn compute(measure_id: &str, m: &Measure) -> Self {
        match m {
            Measure::Atoms(_) => FunctionalReport {
                measure_id: measure_id.to_string(),
                tau_x2: m.moment(2),
                log_energy: f64::NEG_INFINITY,
                chi: f64::NEG_INFINITY,
                phi: f64::INFINITY,
                i_ou: f64::INFINITY,
                sigma_tilde: f64::INFINITY,
                phi_consistency_gap: f64::NAN,
                identity_gap: f64::NAN,
                pairing_error: f64::NAN,
            },
            Measure::Grid(g) => Self::of_grid(measure_id, g, &hilbert_density(g)),
        }
    }

    /// With `Hp` supplied at the nodes, e.g. from a flow state.
    pub fn of_grid(measure_id: &str, g: &GridMeasure, hp: &[f64]) -> Self {
        let tau_x2 = g.integrate(|x| x * x);
        let le = log_energy_grid(g);
        let ph = phi_with(g, hp);
        let i = i_ou_with(g, hp);
        FunctionalReport {
            measure_id: measure_id.to_string(),
            tau_x2,
            log_energy: le,
            chi: le + 0.75 + 0.5 * (2.0 * PI).ln(),
            phi: ph.cubic,
            i_ou: i,
            sigma_tilde: 0.5 * tau_x2 - le - 0.75,
            phi_consistency_gap: ph.gap(),
            identity_gap: (i - (ph.cubic - 2.0 + tau_x2)).abs() / i.abs().max(1.0),
            pairing_error: hilbert_pairing(g, hp) - 0.5 / PI,
        }
    }

    /// Problems that indicate a numerical fault rather than a property of
    /// the measure.
    pub fn faults(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.phi_consistency_gap > PHI_CONSISTENCY_TOLERANCE {
            out.push(format!("Phi expressions differ by {:.3e}", self.phi_consistency_gap));
        }
        if self.identity_gap > IDENTITY_TOLERANCE {
            out.push(format!("I identity off by {:.3e}", self.identity_gap));
        }
        if self.sigma_tilde < -SIGMA_NEGATIVITY_TOLERANCE {
            out.push(format!("Sigma~ negative: {:.3e}", self.sigma_tilde));
        }
        out
    }
}

/// CSV with columns `measure_id, tau_x2, log_energy, chi, phi, i_ou,
/// sigma_tilde, phi_consistency_gap`.
pub fn write_functional_csv<W: Write>(rows: &[FunctionalReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "measure_id",
        "tau_x2",
        "log_energy",
        "chi",
        "phi",
        "i_ou",
        "sigma_tilde",
        "phi_consistency_gap",
    ])?;
    for r in rows {
        w.write_record([
            r.measure_id.clone(),
            fmt_f64(r.tau_x2),
            fmt_f64(r.log_energy),
            fmt_f64(r.chi),
            fmt_f64(r.phi),
            fmt_f64(r.i_ou),
            fmt_f64(r.sigma_tilde),
            fmt_f64(r.phi_consistency_gap),
        ])?;
    }
    w.flush()?;
    Ok(())
}
