//! Bessel functions of the first kind and integer order.
//!
//! `J_0` and `J_1` come from the ascending series with compensated summation
//! for `|x| <= 12` and from the Hankel asymptotic expansion beyond. Higher
//! orders use forward recurrence when `n < |x|` and Miller's normalized
//! downward recurrence otherwise. Negative orders and negative arguments are
//! handled through sign rules only, so the reflection
//! `J_{-n}(x) = (-1)^n J_n(x)` holds bit for bit.

use std::sync::{OnceLock, RwLock};

use num_complex::Complex;

use crate::error::{require_finite, Result};
use crate::real::CompensatedSum;
use crate::roots::safeguarded_newton;
use crate::Real;

/// Series/asymptotic crossover.
const SERIES_LIMIT: f64 = 12.0;

/// Integer order of a Bessel function; may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BesselOrder(pub i32);

impl BesselOrder {
    /// `J_n(x)` at this order.
    pub fn eval<T: Real>(self, x: T) -> Result<T> {
        jn(self.0, x)
    }

    /// `(-1)^n`, the factor relating orders `n` and `-n`.
    pub fn reflection_sign(self) -> i32 {
        if self.0 % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// `J_0(x)`.
pub fn j0<T: Real>(x: T) -> Result<T> {
    require_finite(x, "j0 argument")?;
    Ok(j0_unchecked(x))
}

/// `J_1(x)`.
pub fn j1<T: Real>(x: T) -> Result<T> {
    require_finite(x, "j1 argument")?;
    Ok(j1_unchecked(x))
}

/// `J_n(x)` for any integer order.
pub fn jn<T: Real>(n: i32, x: T) -> Result<T> {
    require_finite(x, "jn argument")?;
    Ok(jn_unchecked(n, x))
}

pub(crate) fn j0_unchecked<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= T::lit(SERIES_LIMIT) {
        series(0, ax)
    } else {
        asymptotic(0, ax)
    }
}

pub(crate) fn j1_unchecked<T: Real>(x: T) -> T {
    let ax = x.abs();
    let v = if ax <= T::lit(SERIES_LIMIT) {
        series(1, ax)
    } else {
        asymptotic(1, ax)
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

pub(crate) fn jn_unchecked<T: Real>(n: i32, x: T) -> T {
    let order = n.unsigned_abs();
    let ax = x.abs();
    let v = match order {
        0 => j0_unchecked(ax),
        1 => j1_unchecked(ax),
        _ if ax == T::zero() => T::zero(),
        _ if ax <= T::lit(SERIES_LIMIT) => series(order, ax),
        _ if T::count(order as usize) < ax => forward_recurrence(order, ax),
        _ => miller(order, ax),
    };
    // J_n(-x) = (-1)^n J_n(x) and J_{-n}(x) = (-1)^n J_n(x)
    let odd = order % 2 == 1;
    let flip = odd && ((x < T::zero()) != (n < 0));
    if flip {
        -v
    } else {
        v
    }
}

/// Ascending series for `x >= 0`.
fn series<T: Real>(n: u32, x: T) -> T {
    let half = x * T::lit(0.5);
    // (x/2)^n / n!, built as a product so large n cannot overflow early
    let mut term = T::one();
    for j in 1..=n {
        term = term * half / T::count(j as usize);
    }
    if term == T::zero() {
        return T::zero();
    }
    let q = -(half * half);
    let nn = T::count(n as usize);
    let mut acc = CompensatedSum::new();
    acc.add(term);
    let mut peak = term.abs();
    let eps = T::epsilon();
    for k in 1..200usize {
        let kk = T::count(k);
        term = term * q / (kk * (kk + nn));
        acc.add(term);
        peak = peak.max(term.abs());
        if term.abs() <= eps * eps * peak && T::count(k) > half {
            break;
        }
    }
    acc.value()
}

/// Hankel asymptotic expansion for orders 0 and 1, `x > 12`.
fn asymptotic<T: Real>(nu: u32, x: T) -> T {
    let mu = T::count((4 * nu * nu) as usize);
    let eight_x = T::lit(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut prev = T::infinity();
    for k in 1..60usize {
        let odd = T::count(2 * k - 1);
        term = term * (mu - odd * odd) / (T::count(k) * eight_x);
        let mag = term.abs();
        if mag >= prev {
            break;
        }
        // a_k / x^k enters P with sign (-1)^{k/2} (k even), Q with (-1)^{(k-1)/2}
        match k % 4 {
            0 => p = p + term,
            1 => q = q + term,
            2 => p = p - term,
            _ => q = q - term,
        }
        prev = mag;
        if mag <= T::epsilon() * T::lit(1e-2) {
            break;
        }
    }
    let (s, c) = x.sin_cos();
    let r2 = T::FRAC_1_SQRT_2();
    let (cos_chi, sin_chi) = if nu == 0 {
        ((c + s) * r2, (s - c) * r2)
    } else {
        ((s - c) * r2, -(s + c) * r2)
    };
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn forward_recurrence<T: Real>(n: u32, x: T) -> T {
    let mut prev = j0_unchecked(x);
    let mut cur = j1_unchecked(x);
    let two_over_x = T::lit(2.0) / x;
    for k in 1..n {
        let next = T::count(k as usize) * two_over_x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Miller's algorithm: downward recurrence from a large even index,
/// normalized through `J_0 + 2 sum_k J_{2k} = 1`.
fn miller<T: Real>(n: u32, x: T) -> T {
    let nf = n as f64;
    let xf = x.to_f64_lossy();
    let start = (nf.max(xf) + 30.0 + (60.0 * nf.max(xf)).sqrt()) as u32;
    let start = start + start % 2;
    let two_over_x = T::lit(2.0) / x;
    let big = T::lit(1e100);
    let small = T::lit(1e-100);
    let (big, small) = if big.is_finite() {
        (big, small)
    } else {
        (T::lit(1e15), T::lit(1e-15))
    };
    let mut upper = T::zero();
    let mut cur = T::one();
    let mut result = T::zero();
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        let lower = T::count(k as usize) * two_over_x * cur - upper;
        upper = cur;
        cur = lower;
        // `cur` now holds the unnormalized J_{k-1}
        if cur.abs() > big {
            cur = cur * small;
            upper = upper * small;
            result = result * small;
            norm = norm * small;
        }
        let idx = k - 1;
        if idx == n {
            result = cur;
        }
        if idx != 0 && idx % 2 == 0 {
            norm = norm + T::lit(2.0) * cur;
        }
    }
    norm = norm + cur;
    result / norm
}

/// Right-hand side of the classical bound
/// `|J_n(x)| <= |x|^n / (2^n Gamma(n + 1/2) Gamma(1/2))`,
/// with `Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!)`.
///
/// This inequality only holds for `n >= 3`; at `n = 0, 1, 2` it is violated
/// near the origin (`J_0(0) = 1 > 1/pi`).
pub fn watson_bound<T: Real>(n: u32, x: T) -> T {
    let two_ax = T::lit(2.0) * x.abs();
    let nn = T::count(n as usize);
    let mut ratio = T::one();
    for j in 1..=n {
        ratio = ratio * two_ax / (nn + T::count(j as usize));
    }
    ratio / T::PI()
}

/// Partial Jacobi-Anger sum `sum_{k=-K..K} J_k(w) e^{ikx}`.
pub fn jacobi_anger_partial<T: Real>(w: T, x: T, k_max: u32) -> Result<Complex<T>> {
    require_finite(w, "w")?;
    require_finite(x, "x")?;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    re.add(j0_unchecked(w));
    for k in 1..=k_max as i32 {
        let jk = jn_unchecked(k, w);
        let jmk = jn_unchecked(-k, w);
        let (s, c) = (T::count(k as usize) * x).sin_cos();
        // J_k e^{ikx} + J_{-k} e^{-ikx}
        re.add((jk + jmk) * c);
        im.add((jk - jmk) * s);
    }
    Ok(Complex::new(re.value(), im.value()))
}

/// Partial sum `sum_{k=-K..K} k^2 J_k(w)^2`, which tends to `w^2 / 2`.
pub fn parseval_partial<T: Real>(w: T, k_max: u32) -> Result<T> {
    require_finite(w, "w")?;
    let mut acc = CompensatedSum::new();
    for k in 1..=k_max as i32 {
        let jk = jn_unchecked(k, w);
        let kk = T::count(k as usize);
        acc.add(T::lit(2.0) * kk * kk * jk * jk);
    }
    Ok(acc.value())
}

/// Lazily grown table of positive zeros of `J_0` or `J_1`.
///
/// Entries are computed once in `f64` and shared by all callers; reads take
/// a shared lock, growth takes the write lock and is idempotent.
pub struct ZeroTable {
    order: u32,
    zeros: RwLock<Vec<f64>>,
}

impl ZeroTable {
    fn new(order: u32) -> Self {
        Self {
            order,
            zeros: RwLock::new(Vec::new()),
        }
    }

    /// The `m`-th positive zero, `m >= 1`.
    pub fn get(&self, m: usize) -> f64 {
        assert!(m >= 1, "zeros are numbered from 1");
        {
            let zeros = self.zeros.read().expect("zero table poisoned");
            if let Some(z) = zeros.get(m - 1) {
                return *z;
            }
        }
        let mut zeros = self.zeros.write().expect("zero table poisoned");
        let target = m.max(zeros.len() * 2).max(64);
        while zeros.len() < target {
            let next = zeros.len() + 1;
            zeros.push(locate_zero(self.order, next));
        }
        zeros[m - 1]
    }
}

/// Zeros of `J_0`, shared process-wide.
pub fn j0_zeros() -> &'static ZeroTable {
    static TABLE: OnceLock<ZeroTable> = OnceLock::new();
    TABLE.get_or_init(|| ZeroTable::new(0))
}

/// Zeros of `J_1`, shared process-wide.
pub fn j1_zeros() -> &'static ZeroTable {
    static TABLE: OnceLock<ZeroTable> = OnceLock::new();
    TABLE.get_or_init(|| ZeroTable::new(1))
}

/// McMahon's estimate refined by safeguarded Newton inside a bracket.
fn locate_zero(order: u32, m: usize) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let beta = (m as f64 + 0.5 * order as f64 - 0.25) * std::f64::consts::PI;
    let eb = 8.0 * beta;
    let guess = beta - (mu - 1.0) / eb - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eb.powi(3));
    let (lo, hi) = (guess - 0.3, guess + 0.3);
    let fdf = |x: f64| match order {
        0 => (j0_unchecked(x), -j1_unchecked(x)),
        _ => {
            let j1 = j1_unchecked(x);
            (j1, j0_unchecked(x) - j1 / x)
        }
    };
    safeguarded_newton(fdf, lo, hi, 1e-15 * guess).expect("McMahon bracket contains the zero")
}
