mod common;

use proptest::prelude::*;
use semiflow::cauchy::{cauchy_transform, hilbert_density, stieltjes_invert, BoundaryTransform};
use semiflow::freeconv::{convolve_on_grid, ou_flow_with, FlowOptions};
use semiflow::functionals::{chi, hilbert_pairing, log_energy, phi, sigma_tilde, FunctionalReport};
use semiflow::measure::{
    dilate, mix, quantile_table, semicircle_with, translate, AtomicMeasure, EdgeProfile, GridMeasure, Measure,
};
use semiflow::rmt::sample_deformed_gue;
use semiflow::transport::{brute_force_w, monotone_map_with, wasserstein, wasserstein_with, Coupling};
use semiflow::verify::{Status, VerificationRecord};
use semiflow::Complex64;
use std::f64::consts::PI;

fn atoms_strategy(max_len: usize) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64), 1..=max_len)
        .prop_map(|a| {
            let total: f64 = a.iter().map(|x| x.1).sum();
            AtomicMeasure::new(a.into_iter().map(|(x, w)| (x, w / total)).collect()).unwrap()
        })
}

/// Equal-weight atoms, `n` of them.
fn equal_atoms(n: usize) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec(-3.0..3.0f64, n).prop_map(|x| AtomicMeasure::uniform_atoms(&x).unwrap())
}

/// Piecewise-linear density, strictly positive on the interior.
fn grid_strategy(n_grid: usize) -> impl Strategy<Value = GridMeasure> {
    (-2.0..0.0f64, 0.5..3.0f64, prop::collection::vec(0.1..1.0f64, 4..12)).prop_map(move |(lo, w, knots)| {
        let k = knots.len() - 1;
        let vals = (0..n_grid)
            .map(|j| {
                let s = j as f64 / (n_grid - 1) as f64 * k as f64;
                let i = (s.floor() as usize).min(k - 1);
                knots[i] * (1.0 - (s - i as f64)) + knots[i + 1] * (s - i as f64)
            })
            .collect();
        GridMeasure::new(lo, lo + w, vals, EdgeProfile::LINEAR).unwrap()
    })
}

/// Two-component semicircle mixture with square-root edges.
fn mixture_strategy(n_grid: usize) -> impl Strategy<Value = Measure> {
    (-1.5..1.5f64, 0.3..1.5f64, -1.5..1.5f64, 0.3..1.5f64, 0.2..0.8f64).prop_map(move |(c1, v1, c2, v2, w)| {
        let a: Measure = semicircle_with(c1, v1, n_grid).unwrap().into();
        let b: Measure = semicircle_with(c2, v2, n_grid).unwrap().into();
        mix(&[(w, a), (1.0 - w, b)], n_grid).unwrap()
    })
}

fn sup_cdf_gap(a: &Measure, b: &Measure) -> f64 {
    let (lo, hi) = (a.support().0.min(b.support().0), a.support().1.max(b.support().1));
    (0..=2000)
        .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
        .map(|x| (a.cdf(x) - b.cdf(x)).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_measures_have_unit_mass(g in grid_strategy(257)) {
        prop_assert!((g.mass() - 1.0).abs() < 1e-12);
        prop_assert!((g.cumulative().last().unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(g.density().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn atomic_weights_sum_to_one(a in atoms_strategy(10)) {
        let total: f64 = a.atoms().iter().map(|x| x.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(a.atoms().windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn dilation_scales_moments(g in grid_strategy(257), a in atoms_strategy(6), alpha in 0.2..4.0f64) {
        for m in [Measure::Grid(g), Measure::Atoms(a)] {
            let d = dilate(&m, alpha).unwrap();
            for k in 1..=4u32 {
                let want = alpha.powi(k as i32) * m.moment(k);
                prop_assert!((d.moment(k) - want).abs() <= 1e-8 * want.abs().max(1e-8), "k = {}", k);
            }
        }
    }

    #[test]
    fn cdf_inverts_quantile(g in grid_strategy(257), u in 0.001..0.999f64) {
        let n = g.n_grid() as f64;
        prop_assert!((g.cdf(g.quantile(u)) - u).abs() <= 1.0 / n);
        let x = g.support_lo() + u * (g.support_hi() - g.support_lo());
        prop_assert!((g.quantile(g.cdf(x)) - x).abs() <= g.spacing());
    }

    #[test]
    fn quantile_tables_are_monotone(a in atoms_strategy(6), g in grid_strategy(129)) {
        for m in [Measure::Atoms(a), Measure::Grid(g)] {
            let q = quantile_table(&m, 200).unwrap();
            prop_assert!(q.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn quantile_coupling_is_optimal(
        (a, b) in (1usize..=6).prop_flat_map(|n| (equal_atoms(n), equal_atoms(n))),
        p in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let w = wasserstein(&a.clone().into(), &b.clone().into(), p).unwrap();
        let brute = brute_force_w(&a, &b, p).unwrap();
        prop_assert!((w - brute).abs() <= 1e-12 * brute.max(1.0), "{} vs {}", w, brute);
        let plan = Coupling::quantile_plan(&a, &b);
        prop_assert!(plan.marginal_error(&a, &b) < 1e-10);
    }

    #[test]
    fn wasserstein_is_a_metric(a in atoms_strategy(5), b in atoms_strategy(5), c in atoms_strategy(5)) {
        let (a, b, c): (Measure, Measure, Measure) = (a.into(), b.into(), c.into());
        for p in [1.0, 2.0, 3.0] {
            let ab = wasserstein(&a, &b, p).unwrap();
            let ba = wasserstein(&b, &a, p).unwrap();
            let bc = wasserstein(&b, &c, p).unwrap();
            let ac = wasserstein(&a, &c, p).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(wasserstein(&a, &a, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn herglotz(a in atoms_strategy(6), g in grid_strategy(129), x in -5.0..5.0f64, y in 0.01..5.0f64) {
        let z = Complex64::new(x, y);
        for m in [Measure::Atoms(a), Measure::Grid(g)] {
            let v = cauchy_transform(&m, z).unwrap();
            prop_assert!(v.im < 0.0);
            prop_assert!(v.norm() <= 1.0 / y + 1e-12);
        }
    }

    #[test]
    fn record_status_follows_margin(lhs in -2.0..2.0f64, rhs in -2.0..2.0f64, tol in 1e-6..0.5f64, scale in 0.1..10.0f64) {
        let ineq = VerificationRecord::inequality("c", "a", "m", String::new(), lhs, rhs, tol);
        prop_assert_eq!(ineq.status == Status::Pass, rhs - lhs >= -tol);
        let id = VerificationRecord::identity("c", "a", "m", String::new(), lhs, rhs, scale, tol);
        prop_assert_eq!(id.status == Status::Pass, (lhs - rhs).abs() / scale <= tol);
        let rep = VerificationRecord::reported("c", "a", "m", String::new(), lhs, rhs, rhs - lhs);
        prop_assert!(rep.passed() && rep.status == Status::Reported);
        prop_assert_eq!(ineq.paper_anchor.as_str(), "a");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monotone_map_pushes_forward(g in grid_strategy(513), m in mixture_strategy(513)) {
        let n_q = 4096;
        let map = monotone_map_with(&Measure::Grid(g), &m, n_q).unwrap();
        prop_assert!(map.pushforward_gap(&m) <= 2.0 / n_q as f64);
    }

    #[test]
    fn functional_identities_hold(m in mixture_strategy(2048)) {
        let r = FunctionalReport::compute("mix", &m);
        prop_assert!(r.identity_gap <= 1e-3, "{}", r.identity_gap);
        let g = m.as_grid().unwrap();
        let hp = hilbert_density(g);
        prop_assert!((hilbert_pairing(g, &hp) - 1.0 / (2.0 * PI)).abs() < 1e-4);
        prop_assert!(r.sigma_tilde >= -1e-6);
    }

    #[test]
    fn scaling_laws(m in mixture_strategy(1024), alpha in 0.3..3.0f64) {
        let d = dilate(&m, alpha).unwrap();
        prop_assert!((chi(&d) - chi(&m) - alpha.ln()).abs() < 1e-6);
        prop_assert!((log_energy(&d) - log_energy(&m) - alpha.ln()).abs() < 1e-6);
        let (pd, pm) = (phi(d.as_grid().unwrap()).cubic, phi(m.as_grid().unwrap()).cubic);
        prop_assert!((pd - pm / (alpha * alpha)).abs() < 1e-6 * pm.max(1.0));
    }

    #[test]
    fn log_energy_is_translation_invariant(m in mixture_strategy(1024), c in -5.0..5.0f64) {
        let t = translate(&m, c).unwrap();
        prop_assert!((log_energy(&t) - log_energy(&m)).abs() < 1e-9);
    }

    #[test]
    fn non_semicircle_unit_variance_has_positive_sigma(sep in 0.5..1.5f64, w in 0.2..0.8f64) {
        // Two semicircles placed so the mixture is centred with unit variance.
        let (c1, c2) = (-sep * (1.0 - w).sqrt() / w.sqrt(), sep * w.sqrt() / (1.0 - w).sqrt());
        let mean_sq = w * c1 * c1 + (1.0 - w) * c2 * c2;
        let v = 1.0 - mean_sq;
        prop_assume!(v > 0.05);
        let a: Measure = semicircle_with(c1, v, 2048).unwrap().into();
        let b: Measure = semicircle_with(c2, v, 2048).unwrap().into();
        let m = mix(&[(w, a), (1.0 - w, b)], 2048).unwrap();
        prop_assert!((m.moment(2) - 1.0).abs() < 1e-3, "{}", m.moment(2));
        prop_assert!(sigma_tilde(&m) > 1e-4, "{}", sigma_tilde(&m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn stieltjes_round_trip(m in mixture_strategy(2048)) {
        let g = m.as_grid().unwrap();
        let inv = stieltjes_invert(&BoundaryTransform::of_grid(g).unwrap()).unwrap();
        let gap = g
            .density()
            .iter()
            .zip(inv.measure.density())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prop_assert!(gap < 2e-3, "{}", gap);
    }

    #[test]
    fn flow_semigroup(m in mixture_strategy(1024), s in 0.05..0.5f64, t in 0.05..0.5f64) {
        let opts = FlowOptions { n_grid: 1024 };
        let direct: Measure = ou_flow_with(&m, s + t, opts).unwrap().measure.into();
        let mid: Measure = ou_flow_with(&m, s, opts).unwrap().measure.into();
        let chained: Measure = ou_flow_with(&mid, t, opts).unwrap().measure.into();
        prop_assert!(sup_cdf_gap(&direct, &chained) < 2e-3);
    }

    #[test]
    fn flow_moments(
        (c1, v1, c2, v2, w) in (-0.5..0.5f64, 0.5..1.5f64, -0.5..0.5f64, 0.5..1.5f64, 0.2..0.8f64),
        t in 0.01..1.0f64,
    ) {
        // overlapping components: the flowed support is a single interval
        let a: Measure = semicircle_with(c1, v1, 4096).unwrap().into();
        let b: Measure = semicircle_with(c2, v2, 4096).unwrap().into();
        let m = mix(&[(w, a), (1.0 - w, b)], 4096).unwrap();
        let x: Measure = ou_flow_with(&m, t, FlowOptions::default()).unwrap().measure.into();
        prop_assert!((x.mean() - (-t / 2.0).exp() * m.mean()).abs() < 1e-6);
        let var = (-t).exp() * m.variance() + 1.0 - (-t).exp();
        prop_assert!((x.variance() - var).abs() < 1e-5, "{} vs {}", x.variance(), var);
    }

    #[test]
    fn convolution_vanishes_at_edges(a in atoms_strategy(4), r in 0.1..2.0f64) {
        let c = convolve_on_grid(&a.into(), r, 1024).unwrap();
        let p = c.measure.density();
        let peak = p.iter().copied().fold(0.0, f64::max);
        prop_assert!(p[0] == 0.0 && p[p.len() - 1] == 0.0);
        // next to the edge the density is of order sqrt(h)
        prop_assert!(p[1].max(p[p.len() - 2]) < 10.0 * peak * (1.0 / p.len() as f64).sqrt());
    }
}

#[test]
fn flow_moments_from_atoms() {
    let opts = FlowOptions::default();
    let bern: Measure = AtomicMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap().into();
    for t in [0.05, 0.2, 1.0] {
        let x: Measure = ou_flow_with(&bern, t, opts).unwrap().measure.into();
        assert!(x.mean().abs() < 1e-6);
        assert!((x.variance() - 1.0).abs() < 1e-5, "t = {t}");
    }
    // Separated bumps have square-root edges inside the grid, where the
    // piecewise-linear model converges like h^1.5.
    let gapped: Measure = AtomicMeasure::new(vec![(-2.5, 0.3), (0.3, 0.2), (2.9, 0.5)]).unwrap().into();
    let t = 0.05;
    let err = |n: usize| {
        let x: Measure = ou_flow_with(&gapped, t, FlowOptions { n_grid: n }).unwrap().measure.into();
        (x.mean() - (-t / 2.0).exp() * gapped.mean()).abs()
    };
    let (coarse, fine) = (err(1024), err(16384));
    assert!(fine < 1e-5 && fine < coarse / 20.0, "{coarse} {fine}");
}

#[test]
fn wasserstein_along_dilations_is_lower_semicontinuous() {
    let a: Measure = semicircle_with(0.3, 0.8, 1024).unwrap().into();
    let b: Measure = AtomicMeasure::new(vec![(-1.0, 0.4), (0.5, 0.6)]).unwrap().into();
    for p in [1.0, 2.0] {
        for alpha in [0.5, 1.0, 2.5] {
            let limit = wasserstein_with(&dilate(&a, alpha).unwrap(), &dilate(&b, alpha).unwrap(), p, 16384).unwrap();
            let tail: Vec<f64> = (100..140)
                .map(|k| {
                    let ak = alpha * (1.0 + if k % 2 == 0 { 1.0 } else { -1.0 } / k as f64);
                    wasserstein_with(&dilate(&a, ak).unwrap(), &dilate(&b, ak).unwrap(), p, 16384).unwrap()
                })
                .collect();
            let liminf = tail.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(liminf >= limit * (1.0 - 1.0 / 99.0) - 1e-9, "p = {p}, alpha = {alpha}");
            assert!((tail[tail.len() - 1] - limit).abs() <= limit / 100.0);
        }
    }
}

#[test]
fn spectra_are_seeded_and_sized() {
    let m: Measure = AtomicMeasure::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap().into();
    let (n, trials, r) = (64, 6, 0.5);
    let s = sample_deformed_gue(&m, r, n, trials, 17).unwrap();
    assert_eq!(s.eigenvalues.len(), n * trials);
    assert_eq!(s, sample_deformed_gue(&m, r, n, trials, 17).unwrap());
    assert_ne!(s.eigenvalues, sample_deformed_gue(&m, r, n, trials, 18).unwrap().eigenvalues);
    let band = 5.0 / ((n * trials) as f64).sqrt();
    assert!((s.mean() - m.mean()).abs() < band);
    assert!((s.variance() - (m.variance() + r)).abs() < band * (m.variance() + r));
}
