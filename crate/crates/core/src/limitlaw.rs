//! The direct problem: from a sampler function `f` on `(0, 1)` to the limit
//! law of `f(U) sin(nU)`, whose characteristic function is
//! `phi(t) = int_0^1 J_0(t f(u)) du`.

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::bessel::{j0_unchecked, j0_zeros};
use crate::error::{require_finite, Error, Result};
use crate::quad::{adaptive, adaptive_best_effort, EulerAccelerator, Estimate, QuadConfig};
use crate::roots::bisect;
use crate::transforms::{fourier1, DecayClass, RealFunction};
use crate::Real;

/// Direction of a strictly monotone `f`: the sign `epsilon_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

impl Monotonicity {
    pub fn sign(self) -> i32 {
        match self {
            Monotonicity::Increasing => 1,
            Monotonicity::Decreasing => -1,
        }
    }
}

/// Integrability of `f` on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrability {
    L1,
    L1Loc,
}

type Scalar<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// The sampler function `f` of `V_n[f] = f(U) sin(nU)`.
#[derive(Clone)]
pub struct ParamFunction<T> {
    id: String,
    eval: Scalar<T>,
    inverse: Option<Scalar<T>>,
    monotonicity: Option<Monotonicity>,
    range: (T, T),
    integrability: Integrability,
    char_decay: Option<DecayClass<T>>,
}

impl<T: fmt::Debug> fmt::Debug for ParamFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFunction")
            .field("id", &self.id)
            .field("monotonicity", &self.monotonicity)
            .field("range", &self.range)
            .field("has_inverse", &self.inverse.is_some())
            .field("integrability", &self.integrability)
            .field("char_decay", &self.char_decay)
            .finish()
    }
}

impl<T: Real> ParamFunction<T> {
    /// A function with unknown monotonicity and range `(-inf, inf)`.
    pub fn new(id: impl Into<String>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            id: id.into(),
            eval: Arc::new(eval),
            inverse: None,
            monotonicity: None,
            range: (T::neg_infinity(), T::infinity()),
            integrability: Integrability::L1Loc,
            char_decay: None,
        }
    }

    pub fn monotone(mut self, direction: Monotonicity) -> Self {
        self.monotonicity = Some(direction);
        self
    }

    pub fn with_inverse(mut self, inverse: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Image `(a, b)` of `(0, 1)`; `b` may be infinite.
    pub fn with_range(mut self, a: T, b: T) -> Self {
        self.range = (a, b);
        self
    }

    pub fn with_integrability(mut self, class: Integrability) -> Self {
        self.integrability = class;
        self
    }

    /// Decay envelope of the limit characteristic function, needed to
    /// truncate the Fourier integral behind [`limit_density`].
    pub fn with_char_decay(mut self, decay: DecayClass<T>) -> Self {
        self.char_decay = Some(decay);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        (self.eval)(u)
    }

    pub fn monotonicity(&self) -> Option<Monotonicity> {
        self.monotonicity
    }

    /// `epsilon_f`, when `f` is declared strictly monotone.
    pub fn epsilon(&self) -> Option<i32> {
        self.monotonicity.map(Monotonicity::sign)
    }

    pub fn range(&self) -> (T, T) {
        self.range
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    pub fn char_decay(&self) -> Option<DecayClass<T>> {
        self.char_decay
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// `f^{-1}(w)`, from the closed form when present and by bisection on
    /// `f` otherwise.
    pub fn inverse(&self, w: T) -> Result<T> {
        require_finite(w, "inverse argument")?;
        let (a, b) = self.range;
        if !(w > a && w < b) {
            return Err(Error::Domain(format!("{w} outside the range ({a}, {b})")));
        }
        if let Some(inv) = &self.inverse {
            return Ok(inv(w));
        }
        let direction = self.monotonicity.ok_or_else(|| {
            Error::Precondition(format!("{} is not declared monotone", self.id))
        })?;
        let edge = T::lit(2f64.powi(-53)).max(T::epsilon());
        let (lo, hi) = (edge, T::one() - edge);
        let g = |u: T| {
            let v = self.eval(u) - w;
            Ok(match direction {
                Monotonicity::Increasing => v,
                Monotonicity::Decreasing => -v,
            })
        };
        let (l, h) = bisect(g, lo, hi, T::epsilon() * T::lit(2.0))
            .map_err(|_| Error::Domain(format!("{w} not attained by {} on (0, 1)", self.id)))?;
        Ok(T::lit(0.5) * (l + h))
    }

    /// Spot-checks the declared monotonicity, and the inverse when present,
    /// on `points` interior nodes. Returns the first violation found.
    pub fn check_invariants(&self, points: usize) -> Result<()> {
        let n = points.max(3);
        let nodes: Vec<T> = (1..=n)
            .map(|i| T::lit(0.01) + T::lit(0.98) * T::count(i - 1) / T::count(n - 1))
            .collect();
        if let Some(direction) = self.monotonicity {
            for pair in nodes.windows(2) {
                let (f0, f1) = (self.eval(pair[0]), self.eval(pair[1]));
                let ok = match direction {
                    Monotonicity::Increasing => f0 < f1,
                    Monotonicity::Decreasing => f0 > f1,
                };
                if !ok {
                    return Err(Error::Precondition(format!(
                        "{} is not {:?} between u = {} and {}",
                        self.id, direction, pair[0], pair[1]
                    )));
                }
            }
        }
        if let Some(inv) = &self.inverse {
            for &u in &nodes {
                let back = inv(self.eval(u));
                if (back - u).abs() > T::lit(1e-10).max(T::lit(64.0) * T::epsilon()) {
                    return Err(Error::Precondition(format!(
                        "inverse of {} fails at u = {u} (got {back})",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A limit law described by its characteristic function and, when known,
/// its density and distribution function.
#[derive(Clone)]
pub struct LimitLaw<T> {
    char_fn: Arc<dyn Fn(T) -> Result<T> + Send + Sync>,
    density: Option<Arc<dyn Fn(T) -> Result<T> + Send + Sync>>,
    cdf: Option<Arc<dyn Fn(T) -> Result<T> + Send + Sync>>,
}

impl<T: Real> LimitLaw<T> {
    /// The law predicted for `V_n[f]`; the density is attached when `f` has
    /// a closed-form inverse and a decay hint for its characteristic function.
    pub fn of(f: &ParamFunction<T>, cfg: QuadConfig<T>) -> Self {
        let fc = f.clone();
        let char_fn = Arc::new(move |t: T| limit_char_fn(&fc, t, &cfg).map(|e| e.value));
        let density = (f.has_closed_inverse() && f.char_decay.is_some()).then(|| {
            let fd = f.clone();
            Arc::new(move |x: T| limit_density(&fd, x, &cfg).map(|e| e.value))
                as Arc<dyn Fn(T) -> Result<T> + Send + Sync>
        });
        Self {
            char_fn,
            density,
            cdf: None,
        }
    }

    pub fn from_parts(
        char_fn: impl Fn(T) -> Result<T> + Send + Sync + 'static,
        density: Option<Arc<dyn Fn(T) -> Result<T> + Send + Sync>>,
        cdf: Option<Arc<dyn Fn(T) -> Result<T> + Send + Sync>>,
    ) -> Self {
        Self {
            char_fn: Arc::new(char_fn),
            density,
            cdf,
        }
    }

    pub fn char_fn(&self, t: T) -> Result<T> {
        (self.char_fn)(t)
    }

    pub fn density(&self, x: T) -> Option<Result<T>> {
        self.density.as_ref().map(|d| d(x))
    }

    pub fn cdf(&self, x: T) -> Option<Result<T>> {
        self.cdf.as_ref().map(|c| c(x))
    }
}

const MIN_PANELS: usize = 4;

/// `phi(t) = int_0^1 J_0(t f(u)) du`.
///
/// For monotone `f` the unit interval is split where `t f(u)` crosses a
/// zero of `J_0`; the alternating panel sums are accelerated and the walk
/// stops once the untouched part of `(0, 1)` is shorter than the tail
/// tolerance (`|J_0| <= 1`). Otherwise `(delta, 1 - delta)` with
/// `delta = abs_tol / 4` is integrated adaptively and `2 delta` is charged to
/// the error.
pub fn limit_char_fn<T: Real>(f: &ParamFunction<T>, t: T, cfg: &QuadConfig<T>) -> Result<Estimate<T>> {
    cfg.validate()?;
    require_finite(t, "t")?;
    let t = t.abs();
    if t == T::zero() {
        return Ok(Estimate {
            value: T::one(),
            error: T::zero(),
            evals: 0,
        });
    }
    let est = match f.monotonicity {
        Some(direction) => split_at_zeros(f, direction, t, cfg)?,
        None => {
            let delta = cfg.abs_tol * T::lit(0.25);
            let integrand = |u: T| j0_unchecked(t * f.eval(u));
            let mut est = adaptive(
                &integrand,
                delta,
                T::one() - delta,
                cfg.abs_tol * T::lit(0.5),
                cfg.rel_tol,
                cfg.max_panels,
            )?;
            est.error = est.error + T::lit(2.0) * delta;
            est
        }
    };
    if !est.value.is_finite() {
        return Err(Error::Domain(format!(
            "{} produced non-finite values on (0, 1)",
            f.id
        )));
    }
    Ok(Estimate {
        value: est.value.max(-T::one()).min(T::one()),
        ..est
    })
}

fn split_at_zeros<T: Real>(
    f: &ParamFunction<T>,
    direction: Monotonicity,
    t: T,
    cfg: &QuadConfig<T>,
) -> Result<Estimate<T>> {
    let (a, b) = f.range;
    let integrand = |u: T| j0_unchecked(t * f.eval(u));
    let panel_tol = cfg.abs_tol * T::lit(1.0 / 64.0);
    // `edge` is the end of (0, 1) where f is smallest; panels walk away from it
    let (edge, far) = match direction {
        Monotonicity::Increasing => (T::zero(), T::one()),
        Monotonicity::Decreasing => (T::one(), T::zero()),
    };
    let mut acc = EulerAccelerator::new(12);
    let mut error = T::zero();
    let mut evals = 0;
    let mut scale = T::zero();
    let mut settled = 0;
    let mut near = edge;
    let mut m = 1usize;
    let zeros = j0_zeros();
    // skip zeros below t * inf f
    while T::lit(zeros.get(m)) / t <= a {
        m += 1;
    }
    for _ in 0..cfg.max_panels {
        let w = T::lit(zeros.get(m)) / t;
        let (boundary, last) = if w >= b {
            (far, true)
        } else {
            (f.inverse(w)?, false)
        };
        let (lo, hi) = if near < boundary {
            (near, boundary)
        } else {
            (boundary, near)
        };
        let piece = adaptive(&integrand, lo, hi, panel_tol, cfg.rel_tol, 200).or_else(|e| match e {
            Error::Convergence { .. } => Ok(adaptive_best_effort(&integrand, lo, hi, panel_tol, cfg.rel_tol, 200)),
            other => Err(other),
        })?;
        evals += piece.evals;
        error = error + piece.error;
        scale = scale.max(piece.value.abs());
        let estimate = acc.push(piece.value);
        if last {
            return Ok(Estimate {
                value: acc.plain_sum(),
                error,
                evals,
            });
        }
        let remaining = (far - boundary).abs();
        if remaining <= cfg.truncation_tail_tol {
            return Ok(Estimate {
                value: acc.plain_sum(),
                error: error + remaining,
                evals,
            });
        }
        let floor = T::lit(16.0) * T::epsilon() * scale;
        if acc.terms() >= MIN_PANELS && acc.increment() <= cfg.truncation_tail_tol.max(floor) {
            settled += 1;
            if settled >= 2 {
                return Ok(Estimate {
                    value: estimate,
                    error: error + T::lit(2.0) * acc.increment() + floor,
                    evals,
                });
            }
        } else {
            settled = 0;
        }
        near = boundary;
        m += 1;
    }
    Err(Estimate {
        value: acc.estimate(),
        error: error + acc.increment(),
        evals,
    }
    .into_error("limit characteristic function"))
}

/// `(f^{-1})'(w) = 1 / f'(f^{-1}(w))` by a Richardson-extrapolated central
/// difference on `f`, step `max(1e-6, 1e-6 |x|)`.
pub fn numeric_inverse_derivative<T: Real>(f: &ParamFunction<T>, w: T) -> Result<T> {
    let x = f.inverse(w)?;
    let base = T::lit(1e-6);
    let mut h = base.max(base * x.abs());
    let room = x.min(T::one() - x) * T::lit(0.5);
    if room <= T::zero() {
        return Err(Error::Domain(format!("f^-1({w}) = {x} sits on the boundary")));
    }
    h = h.min(room);
    let central = |h: T| (f.eval(x + h) - f.eval(x - h)) / (T::lit(2.0) * h);
    let coarse = central(h);
    let fine = central(h * T::lit(0.5));
    let slope = (T::lit(4.0) * fine - coarse) / T::lit(3.0);
    if slope == T::zero() || !slope.is_finite() {
        return Err(Error::Domain(format!("f' vanishes or is undefined at {x}")));
    }
    Ok(T::one() / slope)
}

/// The radial weight `h(w) = epsilon_f 1_{(a,b)}(w) (f^{-1})'(w) / w`, whose
/// Hankel transform is the limit characteristic function.
pub fn radial_weight<T: Real>(f: &ParamFunction<T>, decay: DecayClass<T>) -> Result<RealFunction<T>> {
    let eps = f
        .epsilon()
        .ok_or_else(|| Error::Precondition(format!("{} is not declared monotone", f.id)))?;
    let (a, b) = f.range;
    if a < T::zero() {
        return Err(Error::Precondition(format!(
            "range of {} must lie in (0, inf)",
            f.id
        )));
    }
    let fc = f.clone();
    let sign = T::lit(eps as f64);
    Ok(RealFunction::new(
        move |w: T| {
            if !(w > a && w < b) {
                return T::zero();
            }
            numeric_inverse_derivative(&fc, w)
                .map(|d| sign * d / w)
                .unwrap_or(T::zero())
        },
        decay,
    ))
}

/// Density of the limit law at `x`: `(1/sqrt(2 pi)) F_1(phi)(x)`.
///
/// Requires a closed-form inverse (the sampler must be a `C^1` monotone
/// bijection onto a subset of `(0, inf)`) and a decay hint for `phi`.
/// Integrability of `phi` is the caller's assertion.
pub fn limit_density<T: Real>(f: &ParamFunction<T>, x: T, cfg: &QuadConfig<T>) -> Result<Estimate<T>> {
    require_finite(x, "x")?;
    if !f.has_closed_inverse() {
        return Err(Error::Precondition(format!(
            "{} has no closed-form inverse",
            f.id
        )));
    }
    if f.monotonicity.is_none() || f.range.0 < T::zero() {
        return Err(Error::Precondition(format!(
            "{} must be a monotone bijection onto a subset of (0, inf)",
            f.id
        )));
    }
    let decay = f.char_decay.ok_or_else(|| {
        Error::Precondition(format!(
            "no decay hint for the characteristic function of {}",
            f.id
        ))
    })?;
    let failure: Arc<Mutex<Option<Error>>> = Arc::new(Mutex::new(None));
    let sink = Arc::clone(&failure);
    let fc = f.clone();
    let inner = *cfg;
    let phi = RealFunction::new(
        move |t: T| match limit_char_fn(&fc, t, &inner) {
            Ok(e) => e.value,
            Err(e) => {
                let mut slot = sink.lock().expect("error slot poisoned");
                slot.get_or_insert(e);
                T::zero()
            }
        },
        decay,
    );
    let est = fourier1(&phi, x, cfg);
    if let Some(e) = failure.lock().expect("error slot poisoned").take() {
        return Err(e);
    }
    let est = est?;
    let norm = T::one() / (T::lit(2.0) * T::PI()).sqrt();
    Ok(Estimate {
        value: est.value * norm,
        error: est.error * norm,
        evals: est.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_f() -> ParamFunction<f64> {
        ParamFunction::new("gaussian", |u: f64| (-2.0 * u.ln()).sqrt())
            .monotone(Monotonicity::Decreasing)
            .with_inverse(|w: f64| (-0.5 * w * w).exp())
            .with_range(0.0, f64::INFINITY)
            .with_char_decay(DecayClass::Gaussian { scale: 1.0 })
    }

    fn cauchy_f() -> ParamFunction<f64> {
        let c = std::f64::consts::FRAC_PI_2.sqrt();
        ParamFunction::new("cauchy", move |u: f64| c * (1.0 - u * u).sqrt() / u)
            .monotone(Monotonicity::Decreasing)
            .with_inverse(move |w: f64| c / (w * w + c * c).sqrt())
            .with_range(0.0, f64::INFINITY)
            .with_char_decay(DecayClass::Exponential { rate: c })
    }

    #[test]
    fn gaussian_direct_problem() {
        let cfg = QuadConfig::default();
        for t in [0.5, 1.0, 2.0, 3.0] {
            let est = limit_char_fn(&gaussian_f(), t, &cfg).unwrap();
            assert!((est.value - (-0.5 * t * t).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn zero_frequency_is_exactly_one() {
        let cfg = QuadConfig::default();
        assert_eq!(limit_char_fn(&cauchy_f(), 0.0, &cfg).unwrap().value, 1.0);
        let wild = ParamFunction::new("wild", |u: f64| 1.0 / u.sin());
        assert_eq!(limit_char_fn(&wild, 0.0, &cfg).unwrap().value, 1.0);
    }

    #[test]
    fn constant_function_gives_j0() {
        let cfg = QuadConfig::default();
        let f = ParamFunction::new("const:1.5", |_u: f64| 1.5);
        for t in [0.3, 1.0, 4.0] {
            let est = limit_char_fn(&f, t, &cfg).unwrap();
            let diff = (est.value - j0_unchecked(1.5 * t)).abs();
            assert!(diff <= est.error && diff < 1e-10);
        }
    }

    #[test]
    fn monotone_and_fallback_paths_agree() {
        let cfg = QuadConfig::default();
        // a bounded increasing f, so the fallback has no endpoint trouble
        let f = ParamFunction::new("lin", |u: f64| 1.0 + 4.0 * u);
        let g = f
            .clone()
            .monotone(Monotonicity::Increasing)
            .with_range(1.0, 5.0);
        for t in [0.7, 3.0, 9.0] {
            let a = limit_char_fn(&f, t, &cfg).unwrap().value;
            let b = limit_char_fn(&g, t, &cfg).unwrap().value;
            // exact: (1/4) int_t^{5t} J0(s) ds / t
            assert!((a - b).abs() < 1e-9, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn char_fn_is_even_and_bounded() {
        let cfg = QuadConfig::default();
        for t in [0.25, 1.5, 6.0] {
            let p = limit_char_fn(&cauchy_f(), t, &cfg).unwrap().value;
            let m = limit_char_fn(&cauchy_f(), -t, &cfg).unwrap().value;
            assert_eq!(p, m);
            assert!(p.abs() <= 1.0);
        }
    }

    #[test]
    fn inverse_derivative_examples() {
        let f = gaussian_f();
        for w in [0.5, 1.0, 2.0] {
            let h = -numeric_inverse_derivative(&f, w).unwrap() / w;
            assert!((h - (-0.5 * w * w).exp()).abs() < 1e-7);
        }
        let lin = ParamFunction::new("double", |u: f64| 2.0 * u)
            .monotone(Monotonicity::Increasing)
            .with_range(0.0, 2.0);
        for w in [0.1, 1.0, 1.9] {
            assert!((numeric_inverse_derivative(&lin, w).unwrap() - 0.5).abs() < 1e-9);
        }
        // d/dw sqrt(pi) / sqrt(2 w^2 + pi) = -2 sqrt(pi) w / (2 w^2 + pi)^{3/2}
        let pi = std::f64::consts::PI;
        let exact = -2.0 * pi.sqrt() / (2.0 + pi).powf(1.5);
        assert!((numeric_inverse_derivative(&cauchy_f(), 1.0).unwrap() - exact).abs() < 1e-7);
        assert!(matches!(numeric_inverse_derivative(&lin, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn density_requires_inverse_and_decay() {
        let cfg = QuadConfig::default();
        let no_inv = ParamFunction::new("g", |u: f64| (-2.0 * u.ln()).sqrt())
            .monotone(Monotonicity::Decreasing)
            .with_range(0.0, f64::INFINITY)
            .with_char_decay(DecayClass::Gaussian { scale: 1.0 });
        assert!(matches!(limit_density(&no_inv, 0.0, &cfg), Err(Error::Precondition(_))));
        let no_decay = ParamFunction::new("g", |u: f64| (-2.0 * u.ln()).sqrt())
            .monotone(Monotonicity::Decreasing)
            .with_inverse(|w: f64| (-0.5 * w * w).exp())
            .with_range(0.0, f64::INFINITY);
        assert!(matches!(limit_density(&no_decay, 0.0, &cfg), Err(Error::Precondition(_))));
    }

    #[test]
    fn density_examples() {
        let cfg = QuadConfig::default();
        let d0 = limit_density(&gaussian_f(), 0.0, &cfg).unwrap().value;
        assert!((d0 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-5);
        let half_pi = std::f64::consts::FRAC_PI_2;
        for x in [0.0, 1.0, 3.0] {
            let d = limit_density(&cauchy_f(), x, &cfg).unwrap().value;
            let exact = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * (x * x + half_pi));
            assert!((d - exact).abs() < 1e-5, "x={x}: {d} vs {exact}");
        }
    }

    #[test]
    fn numeric_inverse_matches_closed_form() {
        let closed = cauchy_f();
        let c = std::f64::consts::FRAC_PI_2.sqrt();
        let numeric = ParamFunction::new("cauchy", move |u: f64| c * (1.0 - u * u).sqrt() / u)
            .monotone(Monotonicity::Decreasing)
            .with_range(0.0, f64::INFINITY);
        for w in [0.01, 0.7, 3.0, 100.0] {
            let a = closed.inverse(w).unwrap();
            let b = numeric.inverse(w).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!(closed.check_invariants(50).is_ok());
        let bad = closed.clone().monotone(Monotonicity::Increasing);
        assert!(bad.check_invariants(50).is_err());
    }
}
