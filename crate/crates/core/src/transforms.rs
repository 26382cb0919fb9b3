//! Order-0 Hankel transform, even 1-D Fourier transform and the radial 2-D
//! Fourier cross-check.
//!
//! Oscillatory integrals over `(0, inf)` are split at the zeros of the
//! kernel. Panel contributions alternate in sign and are summed through an
//! [`EulerAccelerator`]; a panel walk also stops once the decay envelope of
//! the integrand guarantees that the remaining tail is below
//! `truncation_tail_tol`.

use std::fmt;
use std::sync::Arc;

use crate::bessel::{j0_unchecked, j0_zeros, j1_unchecked, j1_zeros};
use crate::error::{require_finite, Error, Result};
use crate::quad::{adaptive, adaptive_semi_infinite, EulerAccelerator, Estimate, QuadConfig};
use crate::Real;

/// Envelope the caller guarantees for `|g(r)|` as `r -> inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass<T> {
    /// `|g(r)| <= exp(-rate * r)`.
    Exponential { rate: T },
    /// `|g(r)| <= exp(-r^2 / (2 scale^2))`.
    Gaussian { scale: T },
    /// `|g(r)| <= r^-power` for `r >= 1`.
    Algebraic { power: T },
}

impl<T: Real> DecayClass<T> {
    /// Whether `r^weight * g(r)` is integrable on `(1, inf)`.
    pub fn integrable_with_weight(&self, weight: T) -> bool {
        match *self {
            DecayClass::Algebraic { power } => power - weight > T::one(),
            _ => true,
        }
    }

    /// Bound on `int_R^inf r^weight env(r) dr`, `weight` in {0, 1/2, 1}.
    pub fn tail_bound(&self, radius: T, weight: T) -> T {
        let r = radius.max(T::one());
        match *self {
            DecayClass::Exponential { rate } => {
                // int_R^inf r^w e^{-ar} <= e^{-aR} (R^w / a + w R^{w-1} / a^2 + 1/a^3)
                let e = (-rate * r).exp();
                e * (r.powf(weight) / rate + weight / (rate * rate) + T::one() / (rate * rate * rate))
            }
            DecayClass::Gaussian { scale } => {
                let s2 = scale * scale;
                let e = (-(r * r) / (T::lit(2.0) * s2)).exp();
                // int_R^inf r^w e^{-r^2/2s^2} <= s^2 R^{w-1} e^{-R^2/2s^2} (1 + s^2/R^2)
                e * s2 * r.powf(weight - T::one()) * (T::one() + s2 / (r * r))
            }
            DecayClass::Algebraic { power } => {
                let q = power - weight - T::one();
                if q <= T::zero() {
                    T::infinity()
                } else {
                    r.powf(-q) / q
                }
            }
        }
    }

    /// Smallest radius (to within a factor of 1.01) where the weighted tail
    /// bound drops below `tol`, or `None` when the decay is too slow for a
    /// tolerance-driven cutoff to be practical.
    pub fn truncation_radius(&self, weight: T, tol: T) -> Option<T> {
        if let DecayClass::Algebraic { .. } = self {
            return None;
        }
        let mut hi = T::one();
        let limit = T::lit(1e12);
        while self.tail_bound(hi, weight) > tol {
            hi = hi * T::lit(2.0);
            if hi > limit {
                return None;
            }
        }
        let mut lo = hi * T::lit(0.5);
        if self.tail_bound(lo, weight) <= tol {
            return Some(lo.max(T::one()));
        }
        while hi / lo > T::lit(1.01) {
            let mid = T::lit(0.5) * (lo + hi);
            if self.tail_bound(mid, weight) <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Where the function lives on the half line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support<T> {
    /// Identically zero beyond `r_max`.
    Bounded(T),
    Unbounded,
}

/// A real function on `(0, inf)` together with the decay metadata used to
/// truncate integrals.
#[derive(Clone)]
pub struct RealFunction<T> {
    eval: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub support: Support<T>,
    pub decay: DecayClass<T>,
}

impl<T> fmt::Debug for RealFunction<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("support", &self.support)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl<T: Real> RealFunction<T> {
    pub fn new(eval: impl Fn(T) -> T + Send + Sync + 'static, decay: DecayClass<T>) -> Self {
        Self {
            eval: Arc::new(eval),
            support: Support::Unbounded,
            decay,
        }
    }

    pub fn with_support(mut self, support: Support<T>) -> Self {
        self.support = support;
        self
    }

    #[inline]
    pub fn eval(&self, r: T) -> T {
        (self.eval)(r)
    }

    /// `alpha * self + beta * other`, keeping the slower of the two decays.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let decay = slower_decay(self.decay, other.decay);
        let support = match (self.support, other.support) {
            (Support::Bounded(x), Support::Bounded(y)) => Support::Bounded(x.max(y)),
            _ => Support::Unbounded,
        };
        RealFunction {
            eval: Arc::new(move |r| alpha * a.eval(r) + beta * b.eval(r)),
            support,
            decay,
        }
    }

    fn cutoff(&self, weight: T, tol: T) -> Option<T> {
        let from_decay = self.decay.truncation_radius(weight, tol);
        match (self.support, from_decay) {
            (Support::Bounded(r), Some(d)) => Some(r.min(d)),
            (Support::Bounded(r), None) => Some(r),
            (Support::Unbounded, d) => d,
        }
    }
}

fn slower_decay<T: Real>(a: DecayClass<T>, b: DecayClass<T>) -> DecayClass<T> {
    use DecayClass::*;
    match (a, b) {
        (Algebraic { power: p }, Algebraic { power: q }) => Algebraic { power: p.min(q) },
        (Algebraic { power }, _) | (_, Algebraic { power }) => Algebraic { power },
        (Exponential { rate: p }, Exponential { rate: q }) => Exponential { rate: p.min(q) },
        (Exponential { rate }, _) | (_, Exponential { rate }) => Exponential { rate },
        (Gaussian { scale: s }, Gaussian { scale: u }) => Gaussian { scale: s.max(u) },
    }
}

/// Oscillatory kernel used to split the half line into panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    J0,
    J1,
    Cos,
}

impl Kernel {
    fn boundary<T: Real>(self, m: usize, t: T) -> T {
        match self {
            Kernel::J0 => T::lit(j0_zeros().get(m)) / t,
            Kernel::J1 => T::lit(j1_zeros().get(m)) / t,
            Kernel::Cos => (T::count(m) - T::lit(0.5)) * T::PI() / t,
        }
    }

    fn eval<T: Real>(self, x: T) -> T {
        match self {
            Kernel::J0 => j0_unchecked(x),
            Kernel::J1 => j1_unchecked(x),
            Kernel::Cos => x.cos(),
        }
    }
}

const MIN_PANELS: usize = 4;

/// `int_0^inf g(r) K(t r) dr` for `t > 0`, walking the zeros of `K`.
///
/// `radius` is a cutoff beyond which the caller's envelope bounds the tail
/// by `cfg.truncation_tail_tol`.
pub(crate) fn oscillatory_half_line<T, G>(
    kernel: Kernel,
    g: &G,
    t: T,
    radius: Option<T>,
    cfg: &QuadConfig<T>,
) -> Result<Estimate<T>>
where
    T: Real,
    G: Fn(T) -> T + ?Sized,
{
    let integrand = |r: T| g(r) * kernel.eval(t * r);
    let panel_tol = cfg.abs_tol * T::lit(1.0 / 64.0);
    let mut acc = EulerAccelerator::new(12);
    let mut panel_error = T::zero();
    let mut evals = 0;
    let mut scale = T::zero();
    let mut settled = 0;
    let mut lo = T::zero();
    for m in 1..=cfg.max_panels {
        let mut hi = kernel.boundary(m, t);
        let last = matches!(radius, Some(r) if hi >= r);
        if let (true, Some(r)) = (last, radius) {
            hi = r.max(lo);
        }
        let piece = adaptive(&integrand, lo, hi, panel_tol, cfg.rel_tol, 200)
            .or_else(|e| match e {
                // keep walking; the final error check below decides
                Error::Convergence { .. } => Ok(crate::quad::adaptive_best_effort(
                    &integrand, lo, hi, panel_tol, cfg.rel_tol, 200,
                )),
                other => Err(other),
            })?;
        evals += piece.evals;
        panel_error = panel_error + piece.error;
        scale = scale.max(piece.value.abs());
        let estimate = acc.push(piece.value);
        if last {
            let value = acc.plain_sum();
            return finish(value, panel_error + cfg.truncation_tail_tol, evals, cfg);
        }
        let floor = T::lit(16.0) * T::epsilon() * scale;
        if m >= MIN_PANELS && acc.increment() <= cfg.truncation_tail_tol.max(floor) {
            settled += 1;
            if settled >= 2 {
                let error = panel_error + T::lit(2.0) * acc.increment() + floor;
                return finish(estimate, error, evals, cfg);
            }
        } else {
            settled = 0;
        }
        lo = hi;
    }
    Err(Estimate {
        value: acc.estimate(),
        error: panel_error + acc.increment(),
        evals,
    }
    .into_error("oscillatory panel budget exhausted"))
}

fn finish<T: Real>(value: T, error: T, evals: usize, cfg: &QuadConfig<T>) -> Result<Estimate<T>> {
    let est = Estimate { value, error, evals };
    if !value.is_finite() {
        return Err(Error::Domain("integrand produced non-finite values".into()));
    }
    if error <= T::lit(4.0) * cfg.abs_tol.max(cfg.rel_tol * value.abs()) {
        Ok(est)
    } else {
        Err(est.into_error("oscillatory quadrature"))
    }
}

/// Non-oscillatory `int_0^inf g`, truncated at `radius` or mapped to `(0, 1]`.
pub(crate) fn half_line<T, G>(g: &G, radius: Option<T>, cfg: &QuadConfig<T>) -> Result<Estimate<T>>
where
    T: Real,
    G: Fn(T) -> T + ?Sized,
{
    let mut est = match radius {
        Some(r) => adaptive(g, T::zero(), r, cfg.abs_tol, cfg.rel_tol, cfg.max_panels)?,
        None => adaptive_semi_infinite(g, T::zero(), cfg.abs_tol, cfg.rel_tol, cfg.max_panels)?,
    };
    if radius.is_some() {
        est.error = est.error + cfg.truncation_tail_tol;
    }
    if !est.value.is_finite() {
        return Err(Error::Domain("integrand produced non-finite values".into()));
    }
    Ok(est)
}

/// `H_0(g)(t) = int_0^inf g(r) J_0(r t) r dr`.
pub fn hankel0<T: Real>(g: &RealFunction<T>, t: T, cfg: &QuadConfig<T>) -> Result<Estimate<T>> {
    cfg.validate()?;
    require_finite(t, "transform variable")?;
    if !g.decay.integrable_with_weight(T::one()) {
        return Err(Error::Domain(format!(
            "r g(r) is not integrable for decay {:?}",
            g.decay
        )));
    }
    let t = t.abs();
    let radius = g.cutoff(T::one(), cfg.truncation_tail_tol);
    let weighted = |r: T| g.eval(r) * r;
    if t == T::zero() {
        half_line(&weighted, radius, cfg)
    } else {
        oscillatory_half_line(Kernel::J0, &weighted, t, radius, cfg)
    }
}

/// `sqrt(2/pi) int_0^inf g(x) cos(t x) dx`, the 1-D Fourier transform of an
/// even integrable function.
pub fn fourier1<T: Real>(g: &RealFunction<T>, t: T, cfg: &QuadConfig<T>) -> Result<Estimate<T>> {
    cfg.validate()?;
    require_finite(t, "transform variable")?;
    if !g.decay.integrable_with_weight(T::zero()) {
        return Err(Error::Domain(format!(
            "g is not integrable for decay {:?}",
            g.decay
        )));
    }
    let t = t.abs();
    let norm = (T::lit(2.0) / T::PI()).sqrt();
    let radius = g.cutoff(T::zero(), cfg.truncation_tail_tol);
    let f = |x: T| g.eval(x);
    let mut est = if t == T::zero() {
        half_line(&f, radius, cfg)?
    } else {
        oscillatory_half_line(Kernel::Cos, &f, t, radius, cfg)?
    };
    est.value = est.value * norm;
    est.error = est.error * norm;
    Ok(est)
}

/// The 2-D Fourier transform of `x -> G(|x|)` at `(|t|, 0)` by direct
/// double quadrature over a truncated disc, paired with `hankel0(G, t)`.
///
/// The angular integral uses the periodic trapezoidal rule and never
/// touches a Bessel function, so the first component is an independent
/// check on the second.
pub fn fourier2_radial_crosscheck<T: Real>(
    g: &RealFunction<T>,
    t: T,
    cfg: &QuadConfig<T>,
) -> Result<(T, T)> {
    let hankel = hankel0(g, t, cfg)?;
    let t = t.abs();
    let radius = match g.cutoff(T::one(), cfg.truncation_tail_tol) {
        Some(r) => r,
        None => {
            let DecayClass::Algebraic { power } = g.decay else {
                unreachable!("only algebraic decay lacks a cutoff")
            };
            // r^{1-p} tail: R^{2-p} / (p - 2) <= tol
            let q = power - T::lit(2.0);
            (cfg.truncation_tail_tol * q).powf(-T::one() / q)
        }
    };
    let radial = |r: T| {
        let n = angular_nodes((r * t).to_f64_lossy());
        let h = T::lit(2.0) * T::PI() / T::count(n);
        let mut acc = T::zero();
        for k in 0..n {
            let theta = T::count(k) * h;
            acc = acc + (r * t * theta.cos()).cos();
        }
        g.eval(r) * r * acc / T::count(n)
    };
    let direct = adaptive(
        &radial,
        T::zero(),
        radius,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_panels,
    )?;
    Ok((direct.value, hankel.value))
}

fn angular_nodes(rt: f64) -> usize {
    let needed = (2.0 * rt.abs() + 64.0).ceil() as usize;
    needed.next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> RealFunction<f64> {
        RealFunction::new(|r: f64| (-0.5 * r * r).exp(), DecayClass::Gaussian { scale: 1.0 })
    }

    fn exponential() -> RealFunction<f64> {
        let a = std::f64::consts::FRAC_PI_2.sqrt();
        RealFunction::new(move |r: f64| (-a * r).exp(), DecayClass::Exponential { rate: a })
    }

    fn exp_pair(t: f64) -> f64 {
        let a2 = std::f64::consts::FRAC_PI_2;
        a2.sqrt() / (t * t + a2).powf(1.5)
    }

    #[test]
    fn hankel_gaussian_is_self_reciprocal() {
        let cfg = QuadConfig::default();
        for t in [0.0, 1.0, 2.0, 4.0] {
            let est = hankel0(&gaussian(), t, &cfg).unwrap();
            let exact = (-0.5 * t * t).exp();
            assert!((est.value - exact).abs() < 1e-8, "t={t} got {}", est.value);
            assert!(est.error >= (est.value - exact).abs());
        }
    }

    #[test]
    fn hankel_exponential_pair() {
        let cfg = QuadConfig::default();
        for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let est = hankel0(&exponential(), t, &cfg).unwrap();
            assert!((est.value - exp_pair(t)).abs() < 1e-8, "t={t}");
            assert!(est.error >= (est.value - exp_pair(t)).abs());
        }
    }

    #[test]
    fn hankel_is_even_in_t() {
        let cfg = QuadConfig::default();
        let a = hankel0(&exponential(), 1.7, &cfg).unwrap();
        let b = hankel0(&exponential(), -1.7, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hankel_at_zero_is_first_moment() {
        let g = RealFunction::new(|r: f64| 1.0 / (1.0 + r * r).powi(3), DecayClass::Algebraic { power: 6.0 });
        let est = hankel0(&g, 0.0, &QuadConfig::default()).unwrap();
        // int_0^inf r / (1 + r^2)^3 dr = 1/4
        assert!((est.value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn hankel_algebraic_tail_uses_acceleration() {
        // H0(1/(1+r^2)^{3/2})(t) = e^{-t} / 1
        let g = RealFunction::new(
            |r: f64| (1.0 + r * r).powf(-1.5),
            DecayClass::Algebraic { power: 3.0 },
        );
        for t in [0.5, 1.0, 3.0] {
            let est = hankel0(&g, t, &QuadConfig::default()).unwrap();
            assert!((est.value - (-t as f64).exp()).abs() < 1e-8, "t={t} {}", est.value);
        }
    }

    #[test]
    fn hankel_rejects_slow_decay() {
        let g = RealFunction::new(|r: f64| 1.0 / (1.0 + r * r), DecayClass::Algebraic { power: 2.0 });
        assert!(matches!(hankel0(&g, 1.0, &QuadConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn hankel_reports_exhausted_budget() {
        let cfg = QuadConfig {
            max_panels: 3,
            ..QuadConfig::default()
        };
        let g = RealFunction::new(
            |r: f64| (1.0 + r * r).powf(-1.5),
            DecayClass::Algebraic { power: 3.0 },
        );
        assert!(matches!(hankel0(&g, 5.0, &cfg), Err(Error::Convergence { .. })));
    }

    #[test]
    fn lemma_pair_and_gaussian_fourier() {
        let a = std::f64::consts::FRAC_PI_2.sqrt();
        let theta = RealFunction::new(move |x: f64| 1.0 / (x * x + a * a), DecayClass::Algebraic { power: 2.0 });
        let cfg = QuadConfig::default();
        for t in [0.0, 0.5, 2.0] {
            let est = fourier1(&theta, t, &cfg).unwrap();
            let exact = std::f64::consts::PI.sqrt() / (a * 2f64.sqrt()) * (-a * t).exp();
            assert!((est.value - exact).abs() < 1e-8, "t={t}: {} vs {exact}", est.value);
        }
        for t in [0.0, 1.0, 3.0] {
            let est = fourier1(&gaussian(), t, &cfg).unwrap();
            assert!((est.value - (-0.5 * t * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_at_zero_is_scaled_integral() {
        let est = fourier1(&exponential(), 0.0, &QuadConfig::default()).unwrap();
        let a = std::f64::consts::FRAC_PI_2.sqrt();
        assert!((est.value - (2.0 / std::f64::consts::PI).sqrt() / a).abs() < 1e-10);
    }

    #[test]
    fn radial_crosscheck_examples() {
        let cfg = QuadConfig::default();
        let (d, h) = fourier2_radial_crosscheck(&gaussian(), 1.0, &cfg).unwrap();
        assert!((d - (-0.5f64).exp()).abs() < 1e-5 && (h - (-0.5f64).exp()).abs() < 1e-5);
        let (d, h) = fourier2_radial_crosscheck(&gaussian(), 0.0, &cfg).unwrap();
        assert!((d - 1.0).abs() < 1e-6 && (h - 1.0).abs() < 1e-6);
        let (d, h) = fourier2_radial_crosscheck(&exponential(), 2.0, &cfg).unwrap();
        assert!((d - exp_pair(2.0)).abs() < 1e-5 && (h - exp_pair(2.0)).abs() < 1e-5);
    }

    #[test]
    fn linearity() {
        let cfg = QuadConfig::default();
        let mix = gaussian().combine(2.0, &exponential(), -0.5);
        for t in [0.3, 1.5] {
            let lhs = hankel0(&mix, t, &cfg).unwrap().value;
            let rhs = 2.0 * hankel0(&gaussian(), t, &cfg).unwrap().value
                - 0.5 * hankel0(&exponential(), t, &cfg).unwrap().value;
            assert!((lhs - rhs).abs() < 2.0 * cfg.abs_tol);
        }
    }

    #[test]
    fn single_precision_gaussian() {
        let g = RealFunction::new(|r: f32| (-0.5 * r * r).exp(), DecayClass::Gaussian { scale: 1.0 });
        let est = hankel0(&g, 1.0f32, &QuadConfig::default()).unwrap();
        assert!((est.value - (-0.5f32).exp()).abs() < 1e-4);
    }
}
