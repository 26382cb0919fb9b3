//! Monotone piecewise-cubic interpolation of strictly decreasing data.

use crate::error::{Error, Result};
use crate::roots::safeguarded_newton;
use crate::Real;

/// A strictly decreasing function known at increasing nodes, interpolated by
/// cubic Hermite pieces whose slopes are limited (Fritsch-Carlson) so every
/// piece stays inside `[values[i+1], values[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMonotone<T> {
    grid: Vec<T>,
    values: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> TabulatedMonotone<T> {
    /// Builds the interpolant. `slopes`, when given, are exact derivatives at
    /// the nodes; otherwise three-point estimates are used. Either way they
    /// are limited to keep each piece monotone.
    pub fn new(grid: Vec<T>, values: Vec<T>, slopes: Option<Vec<T>>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Precondition(
                "need at least two nodes with one value each".into(),
            ));
        }
        if grid.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("table contains non-finite entries".into()));
        }
        for i in 0..grid.len() - 1 {
            if grid[i + 1] <= grid[i] {
                return Err(Error::Precondition(format!(
                    "grid not strictly increasing at index {i}"
                )));
            }
            if values[i + 1] >= values[i] {
                return Err(Error::Precondition(format!(
                    "values not strictly decreasing at index {i} ({} then {})",
                    values[i],
                    values[i + 1]
                )));
            }
        }
        let mut slopes = match slopes {
            Some(s) if s.len() == grid.len() => s,
            Some(_) => {
                return Err(Error::Precondition("one slope per node required".into()));
            }
            None => estimate_slopes(&grid, &values),
        };
        limit_slopes(&grid, &values, &mut slopes);
        Ok(Self {
            grid,
            values,
            slopes,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    pub fn domain(&self) -> (T, T) {
        (self.grid[0], *self.grid.last().expect("non-empty"))
    }

    /// Range of values as `(min, max)`.
    pub fn range(&self) -> (T, T) {
        (*self.values.last().expect("non-empty"), self.values[0])
    }

    /// Cell index `i` with `grid[i] <= x <= grid[i+1]`.
    fn cell_of(&self, x: T) -> usize {
        let idx = self.grid.partition_point(|g| *g <= x);
        idx.saturating_sub(1).min(self.grid.len() - 2)
    }

    fn hermite(&self, i: usize, x: T) -> (T, T) {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let six = T::lit(6.0);
        let d00 = six * s2 - six * s;
        let d10 = three * s2 - T::lit(4.0) * s + T::one();
        let d01 = -d00;
        let d11 = three * s2 - two * s;
        let deriv = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (value, deriv)
    }

    /// Interpolated value; `None` outside the tabulated domain.
    pub fn eval(&self, x: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.cell_of(x);
        let (v, _) = self.hermite(i, x);
        Some(v.min(self.values[i]).max(self.values[i + 1]))
    }

    /// Interpolated derivative; `None` outside the tabulated domain.
    pub fn derivative(&self, x: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        Some(self.hermite(self.cell_of(x), x).1)
    }

    /// The unique `x` with `eval(x) = y`; `None` when `y` is outside the
    /// tabulated range.
    pub fn invert(&self, y: T) -> Option<T> {
        let (vmin, vmax) = self.range();
        if !(y >= vmin && y <= vmax) {
            return None;
        }
        // values decrease, so search on the reversed predicate
        let idx = self.values.partition_point(|v| *v > y);
        if idx == 0 {
            return Some(self.grid[0]);
        }
        let i = idx - 1;
        if self.values[i + 1] == y {
            return Some(self.grid[i + 1]);
        }
        let (lo, hi) = (self.grid[i], self.grid[i + 1]);
        let tol = T::epsilon() * T::lit(4.0) * hi.abs().max(T::one());
        let root = safeguarded_newton(
            |x| {
                let (v, d) = self.hermite(i, x);
                (v - y, d)
            },
            lo,
            hi,
            tol,
        )
        .ok()?;
        Some(root)
    }
}

fn estimate_slopes<T: Real>(grid: &[T], values: &[T]) -> Vec<T> {
    let n = grid.len();
    let secant = |i: usize| (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
    let mut slopes = vec![T::zero(); n];
    slopes[0] = secant(0);
    slopes[n - 1] = secant(n - 2);
    for i in 1..n - 1 {
        let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let (d0, d1) = (secant(i - 1), secant(i));
        // weighted harmonic mean (Fritsch-Butland), zero across extrema
        if d0 * d1 <= T::zero() {
            slopes[i] = T::zero();
        } else {
            let w1 = T::lit(2.0) * h1 + h0;
            let w2 = h1 + T::lit(2.0) * h0;
            slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    slopes
}

fn limit_slopes<T: Real>(grid: &[T], values: &[T], slopes: &mut [T]) {
    for s in slopes.iter_mut() {
        if *s > T::zero() || !s.is_finite() {
            *s = T::zero();
        }
    }
    for i in 0..grid.len() - 1 {
        let delta = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        let a = slopes[i] / delta;
        let b = slopes[i + 1] / delta;
        let r2 = a * a + b * b;
        if r2 > T::lit(9.0) {
            let tau = T::lit(3.0) / r2.sqrt();
            slopes[i] = tau * a * delta;
            slopes[i + 1] = tau * b * delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(f: impl Fn(f64) -> f64, df: Option<&dyn Fn(f64) -> f64>, n: usize) -> TabulatedMonotone<f64> {
        let grid: Vec<f64> = (0..n).map(|i| 4.0 * i as f64 / (n - 1) as f64).collect();
        let values = grid.iter().map(|&x| f(x)).collect();
        let slopes = df.map(|d| grid.iter().map(|&x| d(x)).collect());
        TabulatedMonotone::new(grid, values, slopes).unwrap()
    }

    #[test]
    fn exact_slopes_give_fourth_order_accuracy() {
        let t = table(|x| (-0.5 * x * x).exp(), Some(&|x: f64| -x * (-0.5 * x * x).exp()), 201);
        for i in 0..400 {
            let x = 0.005 + i as f64 * 0.00997;
            assert!((t.eval(x).unwrap() - (-0.5 * x * x).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn inversion_round_trip() {
        let t = table(|x| 1.0 / (1.0 + x), None, 50);
        for y in [0.95, 0.5, 0.3, 0.21] {
            let x = t.invert(y).unwrap();
            assert!((t.eval(x).unwrap() - y).abs() < 1e-14);
        }
        assert!(t.invert(1.5).is_none());
        assert!(t.invert(0.1).is_none());
        assert!(t.eval(-0.1).is_none());
    }

    #[test]
    fn rejects_non_monotone_values() {
        let r = TabulatedMonotone::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.7], None);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let r = TabulatedMonotone::new(vec![0.0, 1.0, 1.0], vec![1.0, 0.5, 0.4], None);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn pieces_stay_within_cell_bounds(
            steps in proptest::collection::vec((0.01f64..2.0, 1e-6f64..1.0), 2..30),
            probe in 0.0f64..1.0,
        ) {
            let mut grid = vec![0.0];
            let mut values = vec![1.0];
            for (dx, dy) in &steps {
                grid.push(grid.last().unwrap() + dx);
                values.push(values.last().unwrap() - dy);
            }
            let t = TabulatedMonotone::new(grid.clone(), values.clone(), None).unwrap();
            for i in 0..grid.len() - 1 {
                let x = grid[i] + probe * (grid[i + 1] - grid[i]);
                let v = t.eval(x).unwrap();
                prop_assert!(v <= values[i] && v >= values[i + 1]);
                let d = t.derivative(x).unwrap();
                prop_assert!(d <= 1e-9 * (values[i] - values[i + 1]).abs() / (grid[i + 1] - grid[i]));
            }
        }
    }
}
