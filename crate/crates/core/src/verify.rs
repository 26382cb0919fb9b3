//! Distance between a sampled batch and its predicted limit: exact
//! Kolmogorov-Smirnov statistic and empirical characteristic function.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampler::SampleBatch;
use crate::Real;

type Fn64 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A reference distribution on the real line.
#[derive(Clone)]
pub struct TargetDistribution {
    pub name: String,
    cdf: Fn64,
    density: Option<Fn64>,
    char_fn: Arc<dyn Fn(f64) -> Complex<f64> + Send + Sync>,
    /// `cdf(-x) <= 1e-9` and `cdf(x) >= 1 - 1e-9` for `x` beyond this.
    pub tail_proxy: f64,
}

impl fmt::Debug for TargetDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDistribution")
            .field("name", &self.name)
            .field("tail_proxy", &self.tail_proxy)
            .finish()
    }
}

impl TargetDistribution {
    pub fn new(
        name: impl Into<String>,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        char_fn: impl Fn(f64) -> Complex<f64> + Send + Sync + 'static,
        tail_proxy: f64,
    ) -> Self {
        Self {
            name: name.into(),
            cdf: Arc::new(cdf),
            density: None,
            char_fn: Arc::new(char_fn),
            tail_proxy,
        }
    }

    pub fn with_density(mut self, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    pub fn std_normal() -> Self {
        Self::new("std_normal", normal_cdf, |t| Complex::new((-0.5 * t * t).exp(), 0.0), 6.2)
            .with_density(|x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Cauchy(0, gamma).
    pub fn cauchy(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Usage(format!("Cauchy scale must be positive, got {gamma}")));
        }
        let pi = std::f64::consts::PI;
        Ok(Self::new(
            format!("cauchy_gamma:{gamma}"),
            move |x| 0.5 + (x / gamma).atan() / pi,
            move |t| Complex::new((-gamma * t.abs()).exp(), 0.0),
            gamma / (pi * 1e-9),
        )
        .with_density(move |x| gamma / (pi * (x * x + gamma * gamma))))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        self.density.as_ref().map(|d| d(x))
    }

    pub fn char_fn(&self, t: f64) -> Complex<f64> {
        (self.char_fn)(t)
    }

    /// The `p`-quantile, by bisection on the cdf.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        let (mut lo, mut hi) = (-self.tail_proxy, self.tail_proxy);
        while self.cdf(lo) > p {
            lo *= 2.0;
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        let (lo, hi) = crate::roots::bisect(|x| Ok(self.cdf(x) - p), lo, hi, 0.0)?;
        Ok(0.5 * (lo + hi))
    }
}

/// `std_normal`, `cauchy_gamma:<gamma>`, or `cauchy` for the scale
/// `sqrt(pi/2)`.
pub fn target_library(name: &str) -> Result<TargetDistribution> {
    match name {
        "std_normal" => Ok(TargetDistribution::std_normal()),
        "cauchy" => TargetDistribution::cauchy(std::f64::consts::FRAC_PI_2.sqrt()),
        other => {
            let g = other
                .strip_prefix("cauchy_gamma:")
                .ok_or_else(|| Error::Usage(format!("unknown target distribution '{other}'")))?;
            let gamma: f64 = g
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("bad Cauchy scale in '{other}'")))?;
            TargetDistribution::cauchy(gamma)
        }
    }
}

/// `sup_x |F_N(x) - F(x)|`, evaluated at the order statistics.
pub fn ks_statistic<T: Real>(batch: &SampleBatch<T>, target: &TargetDistribution) -> f64 {
    ks_values(&batch.values, target)
}

pub fn ks_values<T: Real>(values: &[T], target: &TargetDistribution) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut xs: Vec<f64> = values.iter().map(|v| v.to_f64_lossy()).collect();
    xs.par_sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = target.cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .reduce(|| 0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov distance between empirical distributions.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let sorted = |v: &[T]| {
        let mut s: Vec<f64> = v.iter().map(|x| x.to_f64_lossy()).collect();
        s.par_sort_unstable_by(f64::total_cmp);
        s
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `(1/N) sum_k exp(i t V_k)` for each `t`.
pub fn ecf<T: Real>(batch: &SampleBatch<T>, t_grid: &[f64]) -> Vec<Complex<f64>> {
    ecf_values(&batch.values, t_grid)
}

pub fn ecf_values<T: Real>(values: &[T], t_grid: &[f64]) -> Vec<Complex<f64>> {
    let n = values.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            if t == 0.0 || values.is_empty() {
                return Complex::new(1.0, 0.0);
            }
            let (re, im) = values
                .par_iter()
                .fold(
                    || (crate::real::CompensatedSum::new(), crate::real::CompensatedSum::new()),
                    |(mut re, mut im), v| {
                        let (s, c) = (t * v.to_f64_lossy()).sin_cos();
                        re.add(c);
                        im.add(s);
                        (re, im)
                    },
                )
                .map(|(re, im)| (re.value(), im.value()))
                .collect::<Vec<_>>()
                .into_iter()
                .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let z = Complex::new(re / n, im / n);
            let m = z.norm();
            if m > 1.0 {
                z / m
            } else {
                z
            }
        })
        .collect()
}

/// One row of an empirical characteristic function comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcfPoint {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub target: f64,
}

/// KS distance and characteristic-function comparison of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub ks: f64,
    pub ks_threshold: f64,
    pub pass: bool,
    pub ecf: Vec<EcfPoint>,
    pub n: u64,
    pub count: usize,
    pub seed: u64,
}

impl VerificationReport {
    pub fn ecf_sup_error(&self) -> f64 {
        self.ecf
            .iter()
            .map(|p| Complex::new(p.re - p.target, p.im).norm())
            .fold(0.0, f64::max)
    }
}

pub fn verify_batch<T: Real>(
    batch: &SampleBatch<T>,
    target: &TargetDistribution,
    t_grid: &[f64],
    ks_threshold: f64,
) -> VerificationReport {
    let ks = ks_statistic(batch, target);
    let ecf = ecf(batch, t_grid)
        .into_iter()
        .zip(t_grid)
        .map(|(z, &t)| EcfPoint {
            t,
            re: z.re,
            im: z.im,
            target: target.char_fn(t).re,
        })
        .collect();
    VerificationReport {
        ks,
        ks_threshold,
        pass: ks <= ks_threshold,
        ecf,
        n: batch.n,
        count: batch.count,
        seed: batch.seed,
    }
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Error function.
///
/// Uses `(2/sqrt(pi)) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!` for `|x| < 3`,
/// whose terms are all positive, and the continued fraction of `erfc`
/// beyond.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let r = if a < 3.0 { erf_series(a) } else { 1.0 - erfc_fraction(a) };
    r.copysign(x)
}

/// Complementary error function, accurate in relative terms for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 3.0 {
        erfc_fraction(x)
    } else if x > -3.0 {
        1.0 - erf(x)
    } else {
        2.0 - erfc_fraction(-x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz method.
fn erfc_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x * std::f64::consts::FRAC_1_SQRT_2;
    if x < 0.0 {
        0.5 * erfc(-z)
    } else {
        1.0 - 0.5 * erfc(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn erf_matches_quadrature() {
        for x in [0.1, 0.5, 1.0, 2.0, 2.9, 3.1, 4.0, 5.5] {
            let oracle = FRAC_2_SQRT_PI * simpson(|t| (-t * t).exp(), 0.0, x, 20_000);
            assert!((erf(x) - oracle).abs() < 1e-13, "x={x}");
            assert!((erf(-x) + oracle).abs() < 1e-13);
        }
        // far tail against the integral of e^{-t^2} from x to x + 10
        for x in [3.5f64, 6.0, 10.0] {
            let oracle = FRAC_2_SQRT_PI * simpson(|t| (-t * t).exp(), x, x + 10.0, 200_000);
            assert!(((erfc(x) - oracle) / oracle).abs() < 1e-10, "x={x}");
        }
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn target_library_examples() {
        let n = target_library("std_normal").unwrap();
        assert_eq!(n.cdf(0.0), 0.5);
        let c = target_library("cauchy").unwrap();
        let pi = std::f64::consts::PI;
        assert!((c.density(0.0).unwrap() - (2.0 / pi).sqrt() / pi).abs() < 1e-15);
        let x = 1.3;
        let closed_form = 1.0 / ((2.0 * pi).sqrt() * (x * x + pi / 2.0));
        assert!((c.density(x).unwrap() - closed_form).abs() < 1e-15);
        for t in [0.0, 0.7, -2.0] {
            assert!((c.char_fn(t).re - (-(pi / 2.0).sqrt() * f64::abs(t)).exp()).abs() < 1e-15);
        }
        assert!(matches!(target_library("laplace"), Err(Error::Usage(_))));
        assert!(matches!(target_library("cauchy_gamma:-1"), Err(Error::Usage(_))));
    }

    #[test]
    fn cdfs_are_monotone_with_settled_tails() {
        for t in [target_library("std_normal").unwrap(), target_library("cauchy_gamma:2.5").unwrap()] {
            let p = t.tail_proxy;
            assert!(t.cdf(-p) <= 1e-9 && t.cdf(p) >= 1.0 - 1e-9, "{}", t.name);
            let grid: Vec<f64> = (0..=2000).map(|i| -p + 2.0 * p * i as f64 / 2000.0).collect();
            assert!(grid.windows(2).all(|w| t.cdf(w[1]) >= t.cdf(w[0])));
        }
    }

    #[test]
    fn single_sample_at_median() {
        let t = target_library("cauchy").unwrap();
        let b = SampleBatch::from_values(vec![0.0f64], 1, 0, "median");
        assert_eq!(ks_statistic(&b, &t), 0.5);
    }

    #[test]
    fn exact_draws_stay_below_kolmogorov_quantile() {
        let t = target_library("cauchy").unwrap();
        let n = 10_000;
        // stratified quantiles: the best possible sample has KS = 1/(2N)
        let xs: Vec<f64> = (0..n).map(|i| t.quantile((i as f64 + 0.5) / n as f64).unwrap()).collect();
        let d = ks_values(&xs, &t);
        assert!((d - 0.5 / n as f64).abs() < 1e-9);
        assert!(d <= 1.63 / (n as f64).sqrt());
    }

    #[test]
    fn ecf_basics() {
        let zeros = SampleBatch::from_values(vec![0.0f64; 50], 1, 0, "zero");
        for z in ecf(&zeros, &[0.0, 1.0, 7.5]) {
            assert_eq!(z, Complex::new(1.0, 0.0));
        }
        let b = SampleBatch::from_values(vec![0.3, -1.2, 4.0], 1, 0, "x");
        let z = ecf(&b, &[0.0, 2.0]);
        assert_eq!(z[0], Complex::new(1.0, 0.0));
        let direct: Complex<f64> = b.values.iter().map(|&v| Complex::new(0.0, 2.0 * v).exp()).sum::<Complex<f64>>() / 3.0;
        assert!((z[1] - direct).norm() < 1e-15);
        assert!(z[1].norm() <= 1.0);
    }

    #[test]
    fn pooled_ecf_is_weighted_mean() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let b: Vec<f64> = (0..91).map(|i| (i as f64 * 1.1).cos() / 0.4).collect();
        let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let (za, zb, zp) = (ecf_values(&a, &grid), ecf_values(&b, &grid), ecf_values(&pooled, &grid));
        for k in 0..grid.len() {
            let mix = (za[k] * 37.0 + zb[k] * 91.0) / 128.0;
            assert!((mix - zp[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn two_sample_distance() {
        let a = [1.0f64, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&[0.0f64], &[1.0f64]), 1.0);
        assert!((ks_two_sample(&[1.0f64, 2.0], &[1.5f64, 2.5]) - 0.5).abs() < 1e-15);
    }
}
