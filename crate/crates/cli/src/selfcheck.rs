//! Identity suite run by `sinlaw selfcheck`.

use num_complex::Complex;
use sinlaw::bessel::{jacobi_anger_partial, parseval_partial};
use sinlaw::{fourier1, hankel0, DecayClass, QuadConfig64, RealFunction};

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckLine {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

/// Running maximum in which a failed evaluation (NaN) counts as infinite.
fn worse(a: f64, b: f64) -> f64 {
    if b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

const W: [f64; 6] = [0.5, 1.0, 2.0, 5.0, 8.0, 10.0];

fn terms(w: f64) -> u32 {
    w.ceil() as u32 + 40
}

/// Relative error of the truncated Parseval sum against `w^2 / 2`.
pub fn parseval() -> CheckLine {
    let worst = W
        .iter()
        .map(|&w| {
            let s = parseval_partial(w, terms(w)).unwrap_or(f64::NAN);
            ((s - 0.5 * w * w) / (0.5 * w * w)).abs()
        })
        .fold(0.0, worse);
    CheckLine::new("bessel parseval sum", worst, 1e-8)
}

/// Sup-norm error of the truncated Jacobi-Anger series on 100 points.
pub fn jacobi_anger() -> CheckLine {
    let pi = std::f64::consts::PI;
    let mut worst = 0.0f64;
    for &w in &W {
        for i in 0..100 {
            let x = -pi + 2.0 * pi * i as f64 / 99.0;
            let s = jacobi_anger_partial(w, x, terms(w)).unwrap_or(Complex::new(f64::NAN, 0.0));
            let exact = Complex::new(0.0, w * x.sin()).exp();
            worst = worse(worst, (s - exact).norm());
        }
    }
    CheckLine::new("jacobi-anger expansion", worst, 1e-8)
}

/// Fourier transform of `1/(t^2 + a^2)` against `sqrt(pi)/(a sqrt 2) e^{-a|t|}`.
pub fn lorentzian_pair(cfg: &QuadConfig64) -> CheckLine {
    let a = std::f64::consts::FRAC_PI_2.sqrt();
    let theta = RealFunction::new(move |x: f64| 1.0 / (x * x + a * a), DecayClass::Algebraic { power: 2.0 });
    let worst = [0.0, 0.5, 2.0]
        .iter()
        .map(|&t| {
            let exact = std::f64::consts::PI.sqrt() / (a * 2f64.sqrt()) * (-a * t).exp();
            fourier1(&theta, t, cfg).map_or(f64::NAN, |e| (e.value - exact).abs())
        })
        .fold(0.0, worse);
    CheckLine::new("lorentzian fourier pair", worst, 1e-7)
}

/// Hankel transforms of the Gaussian (self-reciprocal) and the exponential.
pub fn hankel_pairs(cfg: &QuadConfig64) -> CheckLine {
    let a = std::f64::consts::FRAC_PI_2.sqrt();
    let gauss = RealFunction::new(|r: f64| (-0.5 * r * r).exp(), DecayClass::Gaussian { scale: 1.0 });
    let expo = RealFunction::new(move |r: f64| (-a * r).exp(), DecayClass::Exponential { rate: a });
    let mut worst = 0.0f64;
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let g = hankel0(&gauss, t, cfg).map_or(f64::NAN, |e| (e.value - (-0.5 * t * t).exp()).abs());
        let e = hankel0(&expo, t, cfg).map_or(f64::NAN, |e| (e.value - a / (t * t + a * a).powf(1.5)).abs());
        worst = worse(worse(worst, g), e);
    }
    CheckLine::new("hankel self-reciprocity", worst, 1e-7)
}

pub fn run_all(cfg: &QuadConfig64) -> Vec<CheckLine> {
    vec![parseval(), jacobi_anger(), lorentzian_pair(cfg), hankel_pairs(cfg)]
}
