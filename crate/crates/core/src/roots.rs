//! Bracketed root finding for monotone or sign-changing scalar functions.

use crate::error::{Error, Result};
use crate::Real;

/// Bisection on `[lo, hi]`, which must bracket a sign change of `f`.
///
/// Stops when the bracket is narrower than `xtol` or cannot shrink any
/// further in floating point. Returns the final bracket.
pub fn bisect<T, F>(mut f: F, mut lo: T, mut hi: T, xtol: T) -> Result<(T, T)>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == T::zero() {
        return Ok((lo, lo));
    }
    if f_hi == T::zero() {
        return Ok((hi, hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Precondition(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})"
        )));
    }
    let half = T::lit(0.5);
    for _ in 0..2000 {
        if hi - lo <= xtol {
            break;
        }
        let mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == T::zero() {
            return Ok((mid, mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Newton iteration that never leaves `[lo, hi]`; falls back to bisection
/// whenever a step would escape the bracket or the derivative vanishes.
///
/// `fdf` returns the function value and derivative at a point.
pub fn safeguarded_newton<T, F>(mut fdf: F, mut lo: T, mut hi: T, xtol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> (T, T),
{
    let (f_lo, _) = fdf(lo);
    let (f_hi, _) = fdf(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Precondition(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let lo_sign = f_lo.signum();
    let half = T::lit(0.5);
    let mut x = lo + half * (hi - lo);
    for _ in 0..200 {
        let (fx, dfx) = fdf(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != T::zero() && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            lo + half * (hi - lo)
        };
        if (next - x).abs() <= xtol || hi - lo <= xtol {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let (lo, hi) = bisect(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!(hi - lo <= 1e-14);
        assert!((lo - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_missing_bracket() {
        assert!(matches!(
            bisect(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, 1e-10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn newton_stays_in_bracket() {
        // atan has a derivative that sends raw Newton far away from x0 = 1.5
        let root = safeguarded_newton(|x: f64| (x.atan(), 1.0 / (1.0 + x * x)), -1.0, 3.0, 1e-15)
            .unwrap();
        assert!(root.abs() < 1e-14);
    }
}
