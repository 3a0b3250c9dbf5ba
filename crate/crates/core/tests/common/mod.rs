#![allow(dead_code)]

use semiflow::cauchy::cauchy_smooth;
use semiflow::measure::{bernoulli, dilate, mix, semicircle, translate, uniform, Measure, DEFAULT_N_GRID};

pub fn sc() -> Measure {
    semicircle(0.0, 1.0).unwrap().into()
}

pub fn scaled(alpha: f64) -> Measure {
    dilate(&sc(), alpha).unwrap()
}

pub fn smoothed_bernoulli(lambda: f64) -> Measure {
    cauchy_smooth(&bernoulli(1.0).unwrap().into(), lambda).unwrap().measure.into()
}

/// Scaled and shifted semicircles, mixtures, Cauchy-smoothed Bernoulli and
/// uniform laws.
pub fn smooth_family() -> Vec<(&'static str, Measure)> {
    let sc_at = |c: f64, v: f64| -> Measure { semicircle(c, v).unwrap().into() };
    vec![
        ("semicircle", sc()),
        ("semicircle_x0.5", scaled(0.5)),
        ("semicircle_x2", scaled(2.0)),
        ("semicircle_shifted", translate(&sc_at(0.0, 0.7), 1.5).unwrap()),
        ("bimodal", mix(&[(0.5, sc_at(-2.0, 0.5)), (0.5, sc_at(2.0, 0.5))], DEFAULT_N_GRID).unwrap()),
        ("skewed_mix", mix(&[(0.3, sc_at(-1.0, 0.3)), (0.7, sc_at(1.0, 1.0))], DEFAULT_N_GRID).unwrap()),
        ("bernoulli_p0.05", smoothed_bernoulli(0.05)),
        ("bernoulli_p0.2", smoothed_bernoulli(0.2)),
        ("uniform_p0.1", cauchy_smooth(&uniform(-1.0, 1.0).unwrap().into(), 0.1).unwrap().measure.into()),
        ("uniform_p0.05", cauchy_smooth(&uniform(0.0, 2.0).unwrap().into(), 0.05).unwrap().measure.into()),
    ]
}
