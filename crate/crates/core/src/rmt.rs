//! Monte Carlo spectra of `A + sqrt(r) H` with `H` drawn from the GUE.
//!
//! Trial `k` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `k`, so trials are independent of scheduling and of each other.

use std::io::Write;

use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measure::{quantile_table, AtomicMeasure, Measure};
use crate::report::fmt_f64;
use crate::transport::wasserstein_with;
use crate::verify::VerificationRecord;

pub const MIN_N_DIM: usize = 32;
/// QL sweeps allowed per matrix dimension.
pub const QL_ITERATIONS_PER_DIM: usize = 30;

/// Reduces a Hermitian matrix (row-major, `n x n`) to a real symmetric
/// tridiagonal `(diagonal, offdiagonal)` with the same spectrum.
///
/// Householder steps leave complex off-diagonals `e_k`; a diagonal unitary
/// similarity turns them into `|e_k|`.
pub fn householder_tridiagonalize(mut a: Vec<C>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![C::new(0.0, 0.0); n];
    let mut p = vec![C::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let norm = (lo..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[lo * n + k];
        if (lo + 1..n).all(|i| a[i * n + k] == C::new(0.0, 0.0)) {
            off[k] = x0.norm();
            continue;
        }
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        v[lo] -= alpha;
        let vn = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v[lo..n] {
            *vi /= vn;
        }
        // p = A v on the trailing block, K = v* A v
        for i in lo..n {
            let row = &a[i * n + lo..i * n + n];
            p[i] = row.iter().zip(&v[lo..n]).map(|(x, y)| x * y).sum();
        }
        let kk: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in lo..n {
            p[i] -= v[i] * kk;
        }
        // A <- A - 2 v q* - 2 q v*
        for i in lo..n {
            let (vi, qi) = (v[i] * 2.0, p[i] * 2.0);
            let row = &mut a[i * n + lo..i * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                let j = j + lo;
                *x -= vi * p[j].conj() + qi * v[j].conj();
            }
        }
        off[k] = alpha.norm();
        for i in lo + 1..n {
            a[i * n + k] = C::new(0.0, 0.0);
        }
    }
    let diag = (0..n).map(|i| a[i * n + i].re).collect();
    (diag, off)
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit-shift QL,
/// sorted ascending.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = off.to_vec();
    e.push(0.0);
    let max_iter = QL_ITERATIONS_PER_DIM * n;
    let mut iterations = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NonConvergence(format!(
                    "QL did not converge in {max_iter} iterations"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: Vec<C>, n: usize) -> Result<Vec<f64>> {
    let (d, e) = householder_tridiagonalize(a, n);
    tridiagonal_eigenvalues(d, &e)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSample {
    pub n_dim: usize,
    pub n_trials: usize,
    /// trial-major, ascending within each trial
    pub eigenvalues: Vec<f64>,
    pub seed: u64,
}

impl SpectralSample {
    pub fn trial(&self, k: usize) -> &[f64] {
        &self.eigenvalues[k * self.n_dim..(k + 1) * self.n_dim]
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.eigenvalues.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.eigenvalues.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.eigenvalues.len() as f64
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// CSV with columns `trial, index, eigenvalue`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "index", "eigenvalue"])?;
        for k in 0..self.n_trials {
            for (i, x) in self.trial(k).iter().enumerate() {
                w.write_record([k.to_string(), i.to_string(), fmt_f64(*x)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Eigenvalues of `diag(q_m(u_k)) + sqrt(r) H` over `n_trials` draws of `H`,
/// `H` Hermitian with independent entries of variance `1/n_dim`.
pub fn sample_deformed_gue(m: &Measure, r: f64, n_dim: usize, n_trials: usize, seed: u64) -> Result<SpectralSample> {
    if n_dim < MIN_N_DIM {
        return Err(invalid("n_dim", format!("must be at least {MIN_N_DIM}, got {n_dim}")));
    }
    if n_trials == 0 {
        return Err(invalid("n_trials", "must be positive"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("must be positive, got {r}")));
    }
    let diag = quantile_table(m, n_dim)?;
    let n = n_dim;
    let sd_diag = (r / n as f64).sqrt();
    let sd_off = (r / (2 * n) as f64).sqrt();
    let per_trial: Vec<Vec<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut a = vec![C::new(0.0, 0.0); n * n];
            for i in 0..n {
                let g: f64 = StandardNormal.sample(&mut rng);
                a[i * n + i] = C::new(diag.values()[i] + sd_diag * g, 0.0);
                for j in 0..i {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let h = C::new(re, im) * sd_off;
                    a[i * n + j] = h;
                    a[j * n + i] = h.conj();
                }
            }
            hermitian_eigenvalues(a, n)
        })
        .collect::<Result<_>>()?;
    Ok(SpectralSample {
        n_dim,
        n_trials,
        eigenvalues: per_trial.concat(),
        seed,
    })
}

/// `sup_x |F_emp(x) - F_m(x)|` for the pooled sample.
pub fn ks_distance(sorted: &[f64], m: &Measure) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = m.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Quantile nodes per sample point in the W2 comparison.
const W2_NODES_PER_POINT: usize = 4;

pub const ANCHOR_SPECTRUM: &str = "empirical spectrum of A + sqrt(r) GUE approximates mu [+] sigma_r";

/// KS and W2 distances between the pooled sample and `m`, each passing when
/// at most its tolerance.
pub fn compare_spectrum(
    sample: &SpectralSample,
    m: &Measure,
    measure_id: &str,
    ks_tolerance: f64,
    w2_tolerance: f64,
) -> Result<Vec<VerificationRecord>> {
    let sorted = sample.sorted();
    let ks = ks_distance(&sorted, m);
    let empirical: Measure = AtomicMeasure::uniform_atoms(&sorted)?.into();
    let n_q = (W2_NODES_PER_POINT * sorted.len()).max(crate::transport::DEFAULT_N_QUANTILE);
    let w2 = wasserstein_with(&empirical, m, 2.0, n_q)?;
    let params = format!("n_dim={};n_trials={};seed={}", sample.n_dim, sample.n_trials, sample.seed);
    Ok(vec![
        VerificationRecord::identity(
            "check_spectrum_ks",
            ANCHOR_SPECTRUM,
            measure_id,
            params.clone(),
            ks,
            0.0,
            1.0,
            ks_tolerance,
        ),
        VerificationRecord::identity(
            "check_spectrum_w2",
            ANCHOR_SPECTRUM,
            measure_id,
            params,
            w2,
            0.0,
            1.0,
            w2_tolerance,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::semicircle;
    use std::f64::consts::PI;

    #[test]
    fn toeplitz_spectrum() {
        let n = 60;
        let mut t = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n - 1 {
            t[i * n + i + 1] = C::new(1.0, 0.0);
            t[(i + 1) * n + i] = C::new(1.0, 0.0);
        }
        // conjugate by the reflection I - 2uu* so the input is dense
        let u: Vec<C> = (0..n).map(|i| C::new((i as f64).sin(), (1.5 * i as f64).cos())).collect();
        let un = u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let u: Vec<C> = u.iter().map(|x| x / un).collect();
        let refl = |i: usize, j: usize| -> C {
            let d = if i == j { 1.0 } else { 0.0 };
            C::new(d, 0.0) - u[i] * u[j].conj() * 2.0
        };
        let mut ut = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                ut[i * n + j] = (0..n).map(|k| refl(i, k) * t[k * n + j]).sum();
            }
        }
        let mut a = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| ut[i * n + k] * refl(k, j)).sum();
            }
        }
        let ev = hermitian_eigenvalues(a, n).unwrap();
        let mut exact: Vec<f64> = (1..=n).map(|k| 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos()).collect();
        exact.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-10, "{x} {y}");
        }
    }

    #[test]
    fn dense_matrix_keeps_trace_and_frobenius_norm() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C::new(StandardNormal.sample(&mut rng), 0.0);
            for j in 0..i {
                let h = C::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                a[i * n + j] = h;
                a[j * n + i] = h.conj();
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i].re).sum();
        let frob: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        let ev = hermitian_eigenvalues(a, n).unwrap();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10);
        assert!((ev.iter().map(|x| x * x).sum::<f64>() - frob).abs() < 1e-9 * frob);
    }

    #[test]
    fn seeded_samples_repeat() {
        let d: Measure = AtomicMeasure::dirac(0.0).into();
        let a = sample_deformed_gue(&d, 1.0, 48, 3, 11).unwrap();
        let b = sample_deformed_gue(&d, 1.0, 48, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eigenvalues.len(), 48 * 3);
        let c = sample_deformed_gue(&d, 1.0, 48, 3, 12).unwrap();
        assert_ne!(a.eigenvalues, c.eigenvalues);
        assert!(sample_deformed_gue(&d, 1.0, 16, 3, 11).is_err());
    }

    #[test]
    fn wigner_law_at_small_size() {
        let d: Measure = AtomicMeasure::dirac(0.0).into();
        let s = sample_deformed_gue(&d, 1.0, 100, 10, 1).unwrap();
        let n = s.eigenvalues.len() as f64;
        assert!((s.variance() - 1.0).abs() < 5.0 * (2.0 / n).sqrt() + 0.02);
        let sc: Measure = semicircle(0.0, 1.0).unwrap().into();
        assert!(ks_distance(&s.sorted(), &sc) < 0.05);
    }

    #[test]
    fn eigenvalue_csv() {
        let d: Measure = AtomicMeasure::dirac(0.0).into();
        let s = sample_deformed_gue(&d, 1.0, 32, 2, 0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 65);
    }
}
