//! Adaptive Gauss-Kronrod quadrature and alternating-series acceleration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::Real;

/// Quadrature policy shared by every transform in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Budget of subintervals (adaptive rules) or oscillation panels.
    pub max_panels: usize,
    /// Threshold on neglected tails and on accelerated-series increments.
    pub truncation_tail_tol: T,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(T::DEFAULT_TOL),
            rel_tol: T::lit(T::DEFAULT_TOL),
            max_panels: 10_000,
            truncation_tail_tol: T::lit(T::DEFAULT_TAIL_TOL),
        }
    }
}

impl<T: Real> QuadConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.truncation_tail_tol)
        {
            return Err(Error::Precondition(
                "quadrature tolerances must be strictly positive".into(),
            ));
        }
        if self.max_panels == 0 {
            return Err(Error::Precondition("max_panels must be at least 1".into()));
        }
        Ok(())
    }

    /// Same policy with the absolute tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            truncation_tail_tol: self.truncation_tail_tol * factor,
            ..*self
        }
    }
}

/// Integral estimate with its error bound and cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

impl<T: Real> Estimate<T> {
    pub fn zero() -> Self {
        Self {
            value: T::zero(),
            error: T::zero(),
            evals: 0,
        }
    }

    pub(crate) fn into_error(self, context: &str) -> Error {
        Error::Convergence {
            context: context.to_string(),
            estimate: self.value.to_f64_lossy(),
            error: self.error.to_f64_lossy(),
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452818,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657109,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One application of the 21-point Gauss-Kronrod rule on `[a, b]`.
pub fn gk21<T, F>(f: &F, a: T, b: T) -> Estimate<T>
where
    T: Real,
    F: Fn(T) -> T + ?Sized,
{
    let center = T::lit(0.5) * (a + b);
    let half = T::lit(0.5) * (b - a);
    let abs_half = half.abs();
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * T::lit(0.5);
    let mut res_asc = T::lit(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs = res_abs * abs_half;
    res_asc = res_asc * abs_half;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = if scale < T::one() { res_asc * scale } else { res_asc };
    }
    let floor = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) && floor > err {
        err = floor;
    }
    Estimate {
        value: result,
        error: err,
        evals: 21,
    }
}

struct Piece<T> {
    a: T,
    b: T,
    est: Estimate<T>,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .partial_cmp(&other.est.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive bisection driven by the 21-point rule.
///
/// Converges when the summed error estimate is at most
/// `max(abs_tol, rel_tol * |I|)`. At most `max_pieces` subintervals are used.
pub fn adaptive<T, F>(f: &F, a: T, b: T, abs_tol: T, rel_tol: T, max_pieces: usize) -> Result<Estimate<T>>
where
    T: Real,
    F: Fn(T) -> T + ?Sized,
{
    let est = adaptive_best_effort(f, a, b, abs_tol, rel_tol, max_pieces);
    if est.error <= abs_tol.max(rel_tol * est.value.abs()) {
        Ok(est)
    } else {
        Err(est.into_error("adaptive quadrature"))
    }
}

/// As [`adaptive`] but returns the best estimate instead of failing.
pub fn adaptive_best_effort<T, F>(
    f: &F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_pieces: usize,
) -> Estimate<T>
where
    T: Real,
    F: Fn(T) -> T + ?Sized,
{
    if a == b {
        return Estimate::zero();
    }
    let first = gk21(f, a, b);
    let mut evals = first.evals;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, est: first });
    let half = T::lit(0.5);
    while total_err > abs_tol.max(rel_tol * total.abs()) && heap.len() < max_pieces.max(1) {
        let Some(worst) = heap.pop() else { break };
        let mid = worst.a + half * (worst.b - worst.a);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            heap.push(worst);
            break;
        }
        let left = gk21(f, worst.a, mid);
        let right = gk21(f, mid, worst.b);
        evals += left.evals + right.evals;
        total = total - worst.est.value + left.value + right.value;
        total_err = total_err - worst.est.error + left.error + right.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            est: right,
        });
    }
    // recompute sums to shed accumulated cancellation from the running totals
    let mut value = T::zero();
    let mut error = T::zero();
    for p in heap.iter() {
        value = value + p.est.value;
        error = error + p.est.error;
    }
    Estimate { value, error, evals }
}

/// `int_a^inf f(x) dx` through the map `x = a + (1 - s) / s`, `s in (0, 1]`.
pub fn adaptive_semi_infinite<T, F>(
    f: &F,
    a: T,
    abs_tol: T,
    rel_tol: T,
    max_pieces: usize,
) -> Result<Estimate<T>>
where
    T: Real,
    F: Fn(T) -> T + ?Sized,
{
    let mapped = |s: T| {
        if s <= T::zero() {
            return T::zero();
        }
        let x = a + (T::one() - s) / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    adaptive(&mapped, T::zero(), T::one(), abs_tol, rel_tol, max_pieces)
}

/// Running estimate of an alternating series through repeated averaging of
/// its partial sums (Euler's transformation applied to the tail).
#[derive(Debug, Clone)]
pub struct EulerAccelerator<T> {
    partial_sums: Vec<T>,
    depth: usize,
    last: Option<T>,
    increment: T,
}

impl<T: Real> EulerAccelerator<T> {
    pub fn new(depth: usize) -> Self {
        Self {
            partial_sums: Vec::new(),
            depth: depth.max(1),
            last: None,
            increment: T::infinity(),
        }
    }

    /// Adds the next term and returns the updated accelerated estimate.
    pub fn push(&mut self, term: T) -> T {
        let s = self.partial_sums.last().copied().unwrap_or_else(T::zero) + term;
        self.partial_sums.push(s);
        let est = self.estimate();
        if let Some(prev) = self.last {
            self.increment = (est - prev).abs();
        }
        self.last = Some(est);
        est
    }

    /// Averages the last `depth + 1` partial sums `depth` times.
    pub fn estimate(&self) -> T {
        let n = self.partial_sums.len();
        if n == 0 {
            return T::zero();
        }
        let k = self.depth.min(n - 1);
        let mut row: Vec<T> = self.partial_sums[n - 1 - k..].to_vec();
        let half = T::lit(0.5);
        while row.len() > 1 {
            for i in 0..row.len() - 1 {
                row[i] = half * (row[i] + row[i + 1]);
            }
            row.pop();
        }
        row[0]
    }

    /// Change of the accelerated estimate caused by the latest term.
    pub fn increment(&self) -> T {
        self.increment
    }

    pub fn terms(&self) -> usize {
        self.partial_sums.len()
    }

    pub fn plain_sum(&self) -> T {
        self.partial_sums.last().copied().unwrap_or_else(T::zero)
    }
}
