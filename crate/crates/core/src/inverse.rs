//! The inverse problem: given a target characteristic function `psi`, build
//! `k_psi(t) = 1 - int_0^t u H_0(psi)(u) du` and the sampler `f = k_psi^{-1}`.
//!
//! `k_psi` is evaluated through the order-1 form
//! `k_psi(t) = 1 - t int_0^inf psi(r) J_1(t r) dr`, which follows from
//! `int_0^t u J_0(r u) du = t J_1(r t) / r` and needs one oscillatory
//! integral per call instead of a nested one. Its derivative
//! `k_psi'(t) = -t H_0(psi)(t)` uses the order-0 transform directly.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{require_finite, Error, Result};
use crate::interp::TabulatedMonotone;
use crate::limitlaw::{Monotonicity, ParamFunction};
use crate::quad::{adaptive, QuadConfig};
use crate::roots::bisect;
use crate::transforms::{half_line, hankel0, oscillatory_half_line, DecayClass, Kernel, RealFunction};
use crate::Real;

type Scalar<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A candidate limit characteristic function.
#[derive(Clone)]
pub struct CharFn<T> {
    id: String,
    eval: Scalar<T>,
    pub decay: DecayClass<T>,
    closed_form_hankel: Option<Scalar<T>>,
}

impl<T: fmt::Debug> fmt::Debug for CharFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharFn")
            .field("id", &self.id)
            .field("decay", &self.decay)
            .field("closed_form_hankel", &self.closed_form_hankel.is_some())
            .finish()
    }
}

impl<T: Real> CharFn<T> {
    pub fn new(
        id: impl Into<String>,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
        decay: DecayClass<T>,
    ) -> Self {
        Self {
            id: id.into(),
            eval: Arc::new(eval),
            decay,
            closed_form_hankel: None,
        }
    }

    pub fn with_closed_form_hankel(mut self, h: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.closed_form_hankel = Some(Arc::new(h));
        self
    }

    /// `psi(t) = exp(-t^2 / 2)`; its Hankel transform is itself.
    pub fn gaussian() -> Self {
        Self::new("gaussian", |t: T| (-T::lit(0.5) * t * t).exp(), DecayClass::Gaussian { scale: T::one() })
            .with_closed_form_hankel(|t: T| (-T::lit(0.5) * t * t).exp())
    }

    /// `psi(t) = exp(-sqrt(pi/2) |t|)`, the characteristic function of
    /// Cauchy(0, sqrt(pi/2)); `H_0(psi)(t) = a / (t^2 + a^2)^{3/2}`.
    pub fn cauchy() -> Self {
        let a = T::FRAC_PI_2().sqrt();
        Self::new("cauchy", move |t: T| (-a * t.abs()).exp(), DecayClass::Exponential { rate: a })
            .with_closed_form_hankel(move |t: T| a / (t * t + a * a).powf(T::lit(1.5)))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        (self.eval)(t)
    }

    pub fn closed_form_hankel(&self, t: T) -> Option<T> {
        self.closed_form_hankel.as_ref().map(|h| h(t))
    }

    pub fn as_real_function(&self) -> RealFunction<T> {
        let eval = Arc::clone(&self.eval);
        RealFunction::new(move |t| eval(t), self.decay)
    }

    /// Grid on `[0, T_max]`, `T_max` being where the decay envelope of
    /// `t psi(t)` falls below `1e-12` (capped at 1000 for algebraic decay).
    pub fn default_grid(&self) -> Vec<T> {
        let t_max = self
            .decay
            .truncation_radius(T::one(), T::lit(1e-12).max(T::epsilon()))
            .unwrap_or(T::lit(1000.0))
            .min(T::lit(1000.0));
        let n = 400;
        (0..=n).map(|i| t_max * T::count(i) / T::count(n)).collect()
    }
}

/// Outcome of one admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Sampled rather than established.
    pub heuristic: bool,
    pub detail: String,
}

/// Admissibility of a target `psi` (smoothness, integrability, evenness,
/// nonnegativity, normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub checks: Vec<ConditionCheck>,
}

impl AdmissibilityReport {
    /// All non-heuristic conditions pass.
    pub fn admissible(&self) -> bool {
        self.checks.iter().filter(|c| !c.heuristic).all(|c| c.passed)
    }

    /// Failed heuristic conditions, reported as warnings.
    pub fn warnings(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| c.heuristic && !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const NORMALIZED: &str = "psi(0) = 1";
pub const EVEN: &str = "even";
pub const NONNEGATIVE: &str = "nonnegative";
pub const INTEGRABLE: &str = "psi, sqrt(t) psi, t psi integrable";
pub const SMOOTH: &str = "C1 (sampled)";

/// Checks the admissibility conditions of `psi` on `grid`.
pub fn check_l<T: Real>(psi: &CharFn<T>, grid: &[T]) -> AdmissibilityReport {
    let mut checks = Vec::new();

    let at_zero = psi.eval(T::zero());
    checks.push(ConditionCheck {
        name: NORMALIZED,
        passed: (at_zero - T::one()).abs() <= T::lit(1e-12).max(T::epsilon()),
        heuristic: false,
        detail: format!("psi(0) = {at_zero}"),
    });

    let worst_odd = grid
        .iter()
        .map(|&t| ((psi.eval(t) - psi.eval(-t)).abs(), t))
        .fold((T::zero(), T::zero()), |a, b| if b.0 > a.0 { b } else { a });
    checks.push(ConditionCheck {
        name: EVEN,
        passed: worst_odd.0 <= T::lit(1e-12).max(T::lit(4.0) * T::epsilon()),
        heuristic: false,
        detail: format!("max |psi(t) - psi(-t)| = {} at t = {}", worst_odd.0, worst_odd.1),
    });

    let most_negative = grid
        .iter()
        .map(|&t| (psi.eval(t), t))
        .fold((T::infinity(), T::zero()), |a, b| if b.0 < a.0 { b } else { a });
    checks.push(ConditionCheck {
        name: NONNEGATIVE,
        passed: most_negative.0 >= T::zero() && grid.iter().all(|&t| psi.eval(t).is_finite()),
        heuristic: false,
        detail: format!("min psi = {} at t = {}", most_negative.0, most_negative.1),
    });

    checks.push(integrability(psi));
    checks.push(smoothness(psi, grid));
    AdmissibilityReport { checks }
}

fn integrability<T: Real>(psi: &CharFn<T>) -> ConditionCheck {
    let cfg = QuadConfig::<T>::default();
    let radius = psi.decay.truncation_radius(T::one(), cfg.truncation_tail_tol);
    let mut parts = Vec::new();
    let mut passed = true;
    for (label, weight) in [("psi", T::zero()), ("sqrt(t) psi", T::lit(0.5)), ("t psi", T::one())] {
        if !psi.decay.integrable_with_weight(weight) {
            passed = false;
            parts.push(format!("{label}: decay too slow"));
            continue;
        }
        let g = |t: T| t.powf(weight) * psi.eval(t).abs();
        match half_line(&g, radius, &cfg) {
            Ok(est) if est.value.is_finite() => parts.push(format!("int {label} = {}", est.value)),
            Ok(_) | Err(_) => {
                passed = false;
                parts.push(format!("{label}: integral did not converge"));
            }
        }
    }
    ConditionCheck {
        name: INTEGRABLE,
        passed,
        heuristic: false,
        detail: parts.join("; "),
    }
}

/// Compares one-sided difference quotients at each grid point for two step
/// sizes; a jump that does not shrink with the step marks a kink.
fn smoothness<T: Real>(psi: &CharFn<T>, grid: &[T]) -> ConditionCheck {
    let jump = |t: T, h: T| {
        let c = psi.eval(t);
        let right = (psi.eval(t + h) - c) / h;
        let left = (c - psi.eval(t - h)) / h;
        (right - left).abs()
    };
    let (coarse, fine) = (T::lit(1e-3), T::lit(1e-4));
    let mut worst = (T::zero(), T::zero());
    for &t in grid {
        let (j1, j2) = (jump(t, coarse), jump(t, fine));
        if !j2.is_finite() {
            worst = (T::infinity(), t);
            break;
        }
        if j2 > T::lit(1e-3) && j2 > T::lit(0.5) * j1 && j2 > worst.0 {
            worst = (j2, t);
        }
    }
    ConditionCheck {
        name: SMOOTH,
        passed: worst.0 == T::zero(),
        heuristic: true,
        detail: if worst.0 == T::zero() {
            "no derivative jump detected".into()
        } else {
            format!("derivative jump {} at t = {}", worst.0, worst.1)
        },
    }
}

/// Where `H_0(psi)` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelSource {
    Numeric,
    ClosedForm,
}

/// Evaluator of `k_psi`, its derivative and its inverse for one target.
///
/// The sign scan of `u H_0(psi)(u)` used to detect non-monotone `k_psi` is
/// computed once on first use and shared by later calls.
pub struct KPsi<T> {
    psi: CharFn<T>,
    cfg: QuadConfig<T>,
    source: HankelSource,
    scan: OnceLock<std::result::Result<(), Error>>,
}

impl<T: Real> KPsi<T> {
    pub fn new(psi: CharFn<T>, cfg: QuadConfig<T>) -> Self {
        Self {
            psi,
            cfg,
            source: HankelSource::Numeric,
            scan: OnceLock::new(),
        }
    }

    /// Uses the closed-form Hankel transform of `psi` and the defining
    /// integral of `k_psi`.
    pub fn with_closed_form(psi: CharFn<T>, cfg: QuadConfig<T>) -> Result<Self> {
        if psi.closed_form_hankel.is_none() {
            return Err(Error::Precondition(format!(
                "{} has no closed-form Hankel transform",
                psi.id
            )));
        }
        Ok(Self {
            source: HankelSource::ClosedForm,
            ..Self::new(psi, cfg)
        })
    }

    pub fn psi(&self) -> &CharFn<T> {
        &self.psi
    }

    pub fn source(&self) -> HankelSource {
        self.source
    }

    /// `H_0(psi)(u)`. For `u > 1` the tolerances are scaled by `1/u^2` so the
    /// value keeps relative accuracy where it becomes small.
    pub fn hankel(&self, u: T) -> Result<T> {
        require_finite(u, "u")?;
        let u = u.abs();
        if let (HankelSource::ClosedForm, Some(h)) = (self.source, &self.psi.closed_form_hankel) {
            return Ok(h(u));
        }
        let cfg = if u > T::one() {
            self.cfg.scaled(T::one() / (u * u))
        } else {
            self.cfg
        };
        Ok(hankel0(&self.psi.as_real_function(), u, &cfg)?.value)
    }

    /// `k_psi'(t) = -t H_0(psi)(t)`.
    pub fn derivative(&self, t: T) -> Result<T> {
        Ok(-t * self.hankel(t)?)
    }

    /// `k_psi(t)` and its error bound, without the monotonicity scan. Deep in
    /// the tail the value may be below its error bound, or even negative.
    pub fn estimate(&self, t: T) -> Result<(T, T)> {
        require_finite(t, "t")?;
        if t < T::zero() {
            return Err(Error::Domain(format!("k_psi is defined for t >= 0, got {t}")));
        }
        if t == T::zero() {
            return Ok((T::one(), T::zero()));
        }
        match self.source {
            HankelSource::ClosedForm => {
                let h = self.psi.closed_form_hankel.as_ref().expect("checked in constructor");
                let m = |u: T| u * h(u);
                let est = adaptive(&m, T::zero(), t, self.cfg.abs_tol, self.cfg.rel_tol, self.cfg.max_panels)?;
                Ok((T::one() - est.value, est.error))
            }
            HankelSource::Numeric => {
                let cfg = if t > T::one() {
                    self.cfg.scaled(T::one() / t)
                } else {
                    self.cfg
                };
                let radius = self.psi.decay.truncation_radius(T::zero(), cfg.truncation_tail_tol);
                let psi = |r: T| self.psi.eval(r);
                let est = oscillatory_half_line(Kernel::J1, &psi, t, radius, &cfg)?;
                Ok((T::one() - t * est.value, t * est.error))
            }
        }
    }

    /// `k_psi(t)` without the monotonicity scan; a range error when the value
    /// is not resolved above its error bound.
    pub fn value_unchecked(&self, t: T) -> Result<T> {
        let (k, err) = self.estimate(t)?;
        if k <= err {
            return Err(Error::Range(format!(
                "k_psi({t}) = {k} is below its error bound {err}"
            )));
        }
        Ok(k.min(T::one()))
    }

    /// `k_psi(t)`; fails with a model violation when `H_0(psi)` is negative
    /// somewhere, since `k_psi` is then not a decreasing bijection.
    pub fn value(&self, t: T) -> Result<T> {
        self.ensure_monotone()?;
        self.value_unchecked(t)
    }

    /// Scans `u H_0(psi)(u)` for sign changes once.
    pub fn ensure_monotone(&self) -> Result<()> {
        self.scan
            .get_or_init(|| self.scan_for_negative_hankel())
            .clone()
    }

    fn scan_for_negative_hankel(&self) -> std::result::Result<(), Error> {
        let mut nodes: Vec<T> = (1..=100).map(|i| T::lit(0.1) * T::count(i)).collect();
        nodes.extend((1..=40).map(|i| T::lit(10.0) * T::lit(20.0).powf(T::count(i) / T::lit(40.0))));
        let values: Vec<T> = nodes
            .par_iter()
            .map(|&u| self.hankel(u).map(|h| u * h))
            .collect::<Result<_>>()?;
        let peak = values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let threshold = (T::lit(100.0) * self.cfg.abs_tol).max(T::lit(1e-8) * peak);
        let bad: Vec<usize> = (0..nodes.len()).filter(|&i| values[i] < -threshold).collect();
        if let (Some(&first), Some(&last)) = (bad.first(), bad.last()) {
            let from = if first == 0 { T::zero() } else { nodes[first - 1] };
            let to = nodes.get(last + 1).copied().unwrap_or(nodes[last]);
            return Err(Error::ModelViolation {
                from: from.to_f64_lossy(),
                to: to.to_f64_lossy(),
                detail: format!(
                    "H_0({})(u) < 0, min u H_0 = {}",
                    self.psi.id,
                    values[first..=last].iter().fold(T::zero(), |a, v| a.min(*v))
                ),
            });
        }
        Ok(())
    }

    /// The unique `t` with `k_psi(t) = u`.
    ///
    /// Doubles `T` from 1 until `k_psi(T) < u` (capped at `1e8`), bisects to a
    /// width of `1e-12` (relative beyond `t = 1`), then polishes with up to
    /// three Newton steps that must stay in the final bracket.
    pub fn invert(&self, u: T) -> Result<T> {
        require_finite(u, "u")?;
        if !(u > T::zero() && u < T::one()) {
            return Err(Error::Domain(format!("k_psi^-1 is defined on (0, 1), got {u}")));
        }
        self.ensure_monotone()?;
        let raw = |t: T| self.estimate(t).map(|(k, _)| k);
        let mut hi = T::one();
        let cap = T::lit(1e8);
        while raw(hi)? >= u {
            hi = hi * T::lit(2.0);
            if hi > cap {
                return Err(Error::Range(format!(
                    "k_psi stays above {u} up to t = 1e8 ({})",
                    self.psi.id
                )));
            }
        }
        let lo = if hi > T::one() { hi * T::lit(0.5) } else { T::zero() };
        let width = T::lit(1e-12).max(T::lit(4.0) * T::epsilon()) * hi.max(T::one());
        let (mut lo, mut hi) = bisect(|t| Ok(raw(t)? - u), lo, hi, width)?;
        let mut t = T::lit(0.5) * (lo + hi);
        let mut residual = raw(t)? - u;
        for _ in 0..3 {
            if residual == T::zero() {
                break;
            }
            let slope = self.derivative(t)?;
            if slope >= T::zero() {
                break;
            }
            let next = t - residual / slope;
            if !(next > lo && next < hi) {
                break;
            }
            let r = raw(next)? - u;
            if r.abs() >= residual.abs() {
                break;
            }
            if r > T::zero() {
                lo = next;
            } else {
                hi = next;
            }
            t = next;
            residual = r;
        }
        let (_, err) = self.estimate(t)?;
        if err >= u {
            return Err(Error::Range(format!(
                "level {u} is below the resolution {err} of k_psi near t = {t}"
            )));
        }
        Ok(t)
    }
}

/// `k_psi(t)` for a target `psi`.
pub fn k_psi<T: Real>(psi: &CharFn<T>, t: T, cfg: &QuadConfig<T>) -> Result<T> {
    KPsi::new(psi.clone(), *cfg).value(t)
}

/// `k_psi^{-1}(u)` for a target `psi`.
pub fn invert_k<T: Real>(psi: &CharFn<T>, u: T, cfg: &QuadConfig<T>) -> Result<T> {
    KPsi::new(psi.clone(), *cfg).invert(u)
}

/// Endpoints beyond which the tabulated sampler evaluates `k_psi^{-1}`
/// directly.
pub const TABLE_U_MIN: f64 = 1e-4;
pub const TABLE_U_MAX: f64 = 1.0 - 1e-4;

/// Options for [`solve_inverse_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Proceed even when the admissibility report fails.
    pub allow_inadmissible: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            allow_inadmissible: false,
        }
    }
}

/// A solved inverse problem: the sampler and the table behind it.
#[derive(Clone)]
pub struct InverseSolution<T> {
    pub f: ParamFunction<T>,
    /// `k_psi` tabulated on increasing `t` (values decreasing from 1).
    pub table: Arc<TabulatedMonotone<T>>,
    pub report: AdmissibilityReport,
}

impl<T: Real> InverseSolution<T> {
    /// Tabulation nodes as `(u, f(u))`, `u` increasing, without the `t = 0`
    /// anchor.
    pub fn nodes(&self) -> Vec<(T, T)> {
        let t = self.table.grid();
        let u = self.table.values();
        (1..t.len()).rev().map(|i| (u[i], t[i])).collect()
    }
}

/// Builds `f = k_psi^{-1}` as a tabulated sampler.
pub fn solve_inverse<T: Real>(psi: &CharFn<T>, grid_size: usize, cfg: &QuadConfig<T>) -> Result<ParamFunction<T>> {
    Ok(solve_inverse_with(psi, grid_size, cfg, SolveOptions::default())?.f)
}

/// u-nodes in `[TABLE_U_MIN, TABLE_U_MAX]`, geometric toward both ends.
pub fn table_nodes<T: Real>(grid_size: usize) -> Vec<T> {
    let half = grid_size / 2;
    let lo = TABLE_U_MIN;
    let mut nodes: Vec<f64> = Vec::with_capacity(grid_size);
    for i in 0..half {
        let s = i as f64 / half as f64;
        nodes.push(lo * (0.5 / lo).powf(s));
    }
    let rest = grid_size - half;
    for i in 0..rest {
        let s = i as f64 / (rest - 1).max(1) as f64;
        nodes.push(1.0 - 0.5 * (lo / 0.5).powf(s));
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    nodes.dedup();
    nodes.into_iter().map(T::lit).collect()
}

pub fn solve_inverse_with<T: Real>(
    psi: &CharFn<T>,
    grid_size: usize,
    cfg: &QuadConfig<T>,
    options: SolveOptions,
) -> Result<InverseSolution<T>> {
    if grid_size < 16 {
        return Err(Error::Precondition(format!("grid_size must be at least 16, got {grid_size}")));
    }
    let report = check_l(psi, &psi.default_grid());
    if !report.admissible() && !options.allow_inadmissible {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.heuristic && !c.passed)
            .map(|c| c.name)
            .collect();
        return Err(Error::Precondition(format!(
            "{} is not admissible: {}",
            psi.id,
            failed.join(", ")
        )));
    }
    let kpsi = Arc::new(KPsi::new(psi.clone(), *cfg));
    kpsi.ensure_monotone()?;
    let us = table_nodes::<T>(grid_size);
    let solved: Vec<(T, T, T)> = us
        .par_iter()
        .map(|&u| {
            let t = kpsi.invert(u)?;
            Ok((u, t, kpsi.derivative(t)?))
        })
        .collect::<Result<_>>()?;
    let mut grid = vec![T::zero()];
    let mut values = vec![T::one()];
    let mut slopes = vec![T::zero()];
    for &(u, t, d) in solved.iter().rev() {
        if d > T::zero() {
            return Err(Error::ModelViolation {
                from: grid.last().copied().unwrap_or_else(T::zero).to_f64_lossy(),
                to: t.to_f64_lossy(),
                detail: format!("k_psi'({t}) = {d} > 0"),
            });
        }
        grid.push(t);
        values.push(u);
        slopes.push(d);
    }
    let table = TabulatedMonotone::new(grid, values, Some(slopes)).map_err(|e| Error::ModelViolation {
        from: 0.0,
        to: f64::INFINITY,
        detail: format!("tabulated k_psi is not strictly decreasing: {e}"),
    })?;
    let table = Arc::new(table);
    let (u_lo, u_hi) = (T::lit(TABLE_U_MIN), T::lit(TABLE_U_MAX));
    let (t_hi, t_lo) = (
        table.invert(u_lo).expect("u_min is a node"),
        table.invert(u_hi).expect("u_max is a node"),
    );

    let tail = TailExtrapolation::find(&kpsi, u_lo)?;

    let (tab_f, k_f) = (Arc::clone(&table), Arc::clone(&kpsi));
    let eval = move |u: T| {
        if u >= u_lo && u <= u_hi {
            tab_f.invert(u).unwrap_or(T::nan())
        } else if u < tail.u0 {
            tail.t_of(u)
        } else {
            k_f.invert(u).unwrap_or(T::nan())
        }
    };
    let (tab_i, k_i) = (Arc::clone(&table), Arc::clone(&kpsi));
    let inverse = move |w: T| {
        if w >= t_lo && w <= t_hi {
            tab_i.eval(w).unwrap_or(T::nan())
        } else if w > tail.t0 {
            tail.u_of(w)
        } else {
            k_i.estimate(w).map(|(k, _)| k.max(T::zero()).min(T::one())).unwrap_or(T::nan())
        }
    };
    let f = ParamFunction::new(format!("inverse:{}", psi.id), eval)
        .monotone(Monotonicity::Decreasing)
        .with_inverse(inverse)
        .with_range(T::zero(), T::infinity())
        .with_char_decay(psi.decay);
    Ok(InverseSolution { f, table, report })
}

/// Power-law continuation `t = t0 (u/u0)^s` of `k_psi^{-1}` below the
/// smallest level `u0` that `k_psi` resolves, with `s = u0 / (t0 k_psi'(t0))`
/// matching the slope at the junction.
#[derive(Debug, Clone, Copy)]
struct TailExtrapolation<T> {
    u0: T,
    t0: T,
    s: T,
}

impl<T: Real> TailExtrapolation<T> {
    fn find(kpsi: &KPsi<T>, start: T) -> Result<Self> {
        let mut best = None;
        let mut u = start;
        let floor = T::min_positive_value().sqrt();
        while u > floor {
            match kpsi.invert(u) {
                Ok(t) => best = Some((u, t)),
                Err(Error::Range(_)) => break,
                Err(e) => return Err(e),
            }
            u = u * T::lit(0.1);
        }
        let (u0, t0) = best.ok_or_else(|| Error::Range(format!("k_psi is not resolved at {start}")))?;
        let d = kpsi.derivative(t0)?;
        let s = if d < T::zero() { u0 / (t0 * d) } else { -T::one() };
        Ok(Self { u0, t0, s: s.min(-T::epsilon()) })
    }

    fn t_of(&self, u: T) -> T {
        self.t0 * (u / self.u0).powf(self.s)
    }

    fn u_of(&self, t: T) -> T {
        self.u0 * (t / self.t0).powf(T::one() / self.s)
    }
}

/// `int_delta^{1-delta} f` for shrinking `delta`: a numeric proxy for
/// local integrability of the constructed sampler on `(0, 1)`.
pub fn local_integrability_profile<T: Real>(
    f: &ParamFunction<T>,
    deltas: &[T],
    cfg: &QuadConfig<T>,
) -> Vec<(T, Result<T>)> {
    deltas
        .iter()
        .map(|&d| {
            let g = |u: T| f.eval(u);
            let r = adaptive(&g, d, T::one() - d, cfg.abs_tol, T::lit(1e-8), cfg.max_panels).map(|e| e.value);
            (d, r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cauchy_k(t: f64) -> f64 {
        let pi = std::f64::consts::PI;
        pi.sqrt() / (2.0 * t * t + pi).sqrt()
    }

    fn cauchy_f(u: f64) -> f64 {
        std::f64::consts::FRAC_PI_2.sqrt() * (1.0 - u * u).sqrt() / u
    }

    #[test]
    fn k_psi_examples() {
        let cfg = QuadConfig::<f64>::default();
        let g = CharFn::gaussian();
        let c = CharFn::cauchy();
        assert_eq!(k_psi(&g, 0.0, &cfg).unwrap(), 1.0);
        for t in [0.5f64, 1.0, 2.0] {
            assert!((k_psi(&g, t, &cfg).unwrap() - (-0.5 * t * t).exp()).abs() < 1e-8);
            assert!((k_psi(&c, t, &cfg).unwrap() - cauchy_k(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_and_numeric_routes_agree() {
        let cfg = QuadConfig::<f64>::default();
        for psi in [CharFn::gaussian(), CharFn::cauchy()] {
            let numeric = KPsi::new(psi.clone(), cfg);
            let closed = KPsi::with_closed_form(psi.clone(), cfg).unwrap();
            for t in [0.3f64, 1.0, 2.5, 6.0] {
                let d = (numeric.value(t).unwrap() - closed.value(t).unwrap()).abs();
                assert!(d <= 1e-7, "{} t={t} diff={d}", psi.id());
            }
        }
    }

    #[test]
    fn invert_examples() {
        let cfg = QuadConfig::<f64>::default();
        let g = CharFn::gaussian();
        let c = CharFn::cauchy();
        for u in [0.1f64, 0.5, 0.9] {
            let tg = invert_k(&g, u, &cfg).unwrap();
            assert!((tg - (-2.0 * u.ln()).sqrt()).abs() < 1e-6);
            let tc = invert_k(&c, u, &cfg).unwrap();
            assert!((tc - cauchy_f(u)).abs() < 1e-6);
        }
        let k = k_psi(&c, 1.7, &cfg).unwrap();
        assert!((invert_k(&c, k, &cfg).unwrap() - 1.7).abs() < 1e-8);
        assert!(matches!(invert_k(&c, 1.0, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn invert_reports_unreachable_levels() {
        // k_psi(t) = exp(-s^2 t^2 / 2) with s = 1e-8 is still above 0.6 at t = 1e8
        let s = 1e-8f64;
        let narrow = CharFn::new("narrow", move |t: f64| (-0.5 * (t / s).powi(2)).exp(), DecayClass::Gaussian { scale: s })
            .with_closed_form_hankel(move |u: f64| s * s * (-0.5 * (s * u).powi(2)).exp());
        let kp = KPsi::with_closed_form(narrow, QuadConfig::default()).unwrap();
        assert!((kp.value(2e8).unwrap() - (-2f64).exp()).abs() < 1e-9);
        assert!(matches!(kp.invert(1e-3), Err(Error::Range(_))));
    }

    #[test]
    fn round_trip_on_log_grid() {
        let cfg = QuadConfig::<f64>::default();
        let kp = KPsi::new(CharFn::cauchy(), cfg);
        for i in 0..=8 {
            let u = 1e-4f64 * (0.9999f64 / 1e-4).powf(i as f64 / 8.0);
            let t = kp.invert(u).unwrap();
            assert!((kp.value(t).unwrap() - u).abs() <= 1e-9, "u={u}");
        }
    }

    #[test]
    fn admissibility_reports() {
        let g = CharFn::<f64>::gaussian();
        let r = check_l(&g, &g.default_grid());
        assert!(r.admissible());
        assert!(r.warnings().is_empty());

        let c = CharFn::<f64>::cauchy();
        let r = check_l(&c, &c.default_grid());
        assert!(r.admissible());
        assert!(r.get(INTEGRABLE).unwrap().passed);
        let smooth = r.get(SMOOTH).unwrap();
        assert!(!smooth.passed && smooth.heuristic);
        assert!(smooth.detail.contains("at t = 0"), "{}", smooth.detail);

        let doubled = CharFn::new("double", |t: f64| 2.0 * (-t * t).exp(), DecayClass::Gaussian { scale: 1.0 });
        let r = check_l(&doubled, &doubled.default_grid());
        assert!(!r.get(NORMALIZED).unwrap().passed);
        assert!(!r.admissible());
        assert!(matches!(solve_inverse(&doubled, 32, &QuadConfig::default()), Err(Error::Precondition(_))));

        let heavy = CharFn::new("heavy", |t: f64| 1.0 / (1.0 + t * t), DecayClass::Algebraic { power: 2.0 });
        let r = check_l(&heavy, &heavy.default_grid());
        assert!(!r.get(INTEGRABLE).unwrap().passed);
    }

    #[test]
    fn negative_hankel_region_is_a_model_violation() {
        // H_0((1 + r^2) e^{-r^2/2})(t) = (3 - t^2) e^{-t^2/2}
        let psi = CharFn::new(
            "bumpy",
            |t: f64| (1.0 + t * t) * (-0.5 * t * t).exp(),
            DecayClass::Gaussian { scale: 2.0 },
        );
        let kp = KPsi::new(psi.clone(), QuadConfig::default());
        assert!((kp.hankel(1.0).unwrap() - 2.0 * (-0.5f64).exp()).abs() < 1e-8);
        match k_psi(&psi, 1.0, &QuadConfig::default()) {
            Err(Error::ModelViolation { from, to, .. }) => {
                assert!(from <= 3f64.sqrt() + 0.1 && from >= 3f64.sqrt() - 0.2, "from={from}");
                assert!(to > from);
            }
            other => panic!("expected model violation, got {other:?}"),
        }
    }

    #[test]
    fn solved_sampler_tracks_direct_inversion() {
        let cfg = QuadConfig::<f64>::default();
        let sol = solve_inverse_with(&CharFn::cauchy(), 256, &cfg, SolveOptions::default()).unwrap();
        let nodes = sol.nodes();
        for w in nodes.windows(2) {
            assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1);
        }
        for u in [3e-4, 0.0123, 0.2345, 0.5, 0.777, 0.9991] {
            let f = sol.f.eval(u);
            assert!((f - cauchy_f(u)).abs() <= 1e-5 * cauchy_f(u).max(1.0), "u={u}: {f}");
        }
        // outside the table the exact inverse is used
        for u in [5e-5, 0.99995] {
            assert!((sol.f.eval(u) - cauchy_f(u)).abs() <= 1e-6 * cauchy_f(u).max(1.0));
        }
        let w = sol.f.eval(0.3);
        assert!((sol.f.inverse(w).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn deep_tail_stays_finite_and_decreasing() {
        let sol = solve_inverse_with(&CharFn::gaussian(), 64, &QuadConfig::default(), SolveOptions::default()).unwrap();
        let us = [1e-300, 1e-100, 1e-30, 1e-15, 1e-9, 1e-6, 1e-5];
        let ts: Vec<f64> = us.iter().map(|&u| sol.f.eval(u)).collect();
        assert!(ts.iter().all(|t| t.is_finite()));
        assert!(ts.windows(2).all(|w| w[1] < w[0]), "{ts:?}");
        for (&u, &t) in us.iter().zip(&ts) {
            assert!((sol.f.inverse(t).unwrap() - u).abs() <= 1e-6 * u + 1e-10, "u={u}");
        }
    }
}
