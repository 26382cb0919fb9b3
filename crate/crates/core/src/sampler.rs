//! Reproducible draws of `V_n[f] = f(U) sin(nU)`.
//!
//! Draw `i` reads the `i`-th 64-bit word pair of a ChaCha8 stream keyed by
//! the seed, so any split of the index range into chunks reproduces the
//! sequential batch bit for bit. A draw whose `f(u)` is not finite is
//! redrawn from stream `1, 2, ...` at the same position.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limitlaw::{Integrability, Monotonicity, ParamFunction};
use crate::transforms::DecayClass;
use crate::Real;

/// Default oscillation index.
pub const DEFAULT_N: u64 = 1000;

const CHUNK: usize = 4096;
const MAX_ATTEMPTS: u64 = 64;
/// Resample fraction above which a batch carries a warning.
pub const RESAMPLE_WARNING_FRACTION: f64 = 1e-3;

/// One batch of draws together with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<T> {
    pub values: Vec<T>,
    pub n: u64,
    pub count: usize,
    pub seed: u64,
    pub f_id: String,
    /// Draws replaced because `f(u)` was not finite.
    pub resamples: u64,
}

impl<T: Real> SampleBatch<T> {
    /// A batch built from existing values, e.g. read back from disk.
    pub fn from_values(values: Vec<T>, n: u64, seed: u64, f_id: impl Into<String>) -> Self {
        Self {
            count: values.len(),
            values,
            n,
            seed,
            f_id: f_id.into(),
            resamples: 0,
        }
    }

    pub fn resample_fraction(&self) -> f64 {
        self.resamples as f64 / self.count.max(1) as f64
    }

    pub fn warning(&self) -> Option<String> {
        (self.resample_fraction() > RESAMPLE_WARNING_FRACTION).then(|| {
            format!(
                "{} of {} draws of {} were resampled (f not finite)",
                self.resamples, self.count, self.f_id
            )
        })
    }
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    let lo = f64::EPSILON * 0.5;
    rng.gen::<f64>().clamp(lo, 1.0 - lo)
}

/// Draws `count` values of `f(U) sin(nU)`.
pub fn sample_vn<T: Real>(f: &ParamFunction<T>, n: u64, count: usize, seed: u64) -> Result<SampleBatch<T>> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let draw = |u: f64| f.eval(T::lit(u)) * T::lit((nf * u).sin());

    let chunks: Vec<(Vec<T>, u64)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut rng = base.clone();
            rng.set_word_pos(2 * start as u128);
            let mut out = Vec::with_capacity(end - start);
            let mut resamples = 0;
            for i in start..end {
                let mut v = draw(uniform(&mut rng));
                let mut attempt = 0;
                while !v.is_finite() {
                    attempt += 1;
                    if attempt > MAX_ATTEMPTS {
                        return Err(Error::Domain(format!(
                            "{} is not finite at {MAX_ATTEMPTS} consecutive draws (index {i})",
                            f.id()
                        )));
                    }
                    let mut alt = base.clone();
                    alt.set_stream(attempt);
                    alt.set_word_pos(2 * i as u128);
                    v = draw(uniform(&mut alt));
                    resamples += 1;
                }
                out.push(v);
            }
            Ok((out, resamples))
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(count);
    let mut resamples = 0;
    for (chunk, r) in chunks {
        values.extend(chunk);
        resamples += r;
    }
    Ok(SampleBatch {
        values,
        n,
        count,
        seed,
        f_id: f.id().to_string(),
        resamples,
    })
}

/// Closed-form sampler functions: `gaussian`, `cauchy` and `const:<c>`.
pub fn builtin_f<T: Real>(name: &str) -> Result<ParamFunction<T>> {
    match name {
        "gaussian" => Ok(ParamFunction::new("gaussian", |u: T| (T::lit(-2.0) * u.ln()).sqrt())
            .monotone(Monotonicity::Decreasing)
            .with_inverse(|w: T| (T::lit(-0.5) * w * w).exp())
            .with_range(T::zero(), T::infinity())
            .with_integrability(Integrability::L1)
            .with_char_decay(DecayClass::Gaussian { scale: T::one() })),
        "cauchy" => {
            let a = T::FRAC_PI_2().sqrt();
            Ok(ParamFunction::new("cauchy", move |u: T| a * (T::one() - u * u).sqrt() / u)
                .monotone(Monotonicity::Decreasing)
                .with_inverse(move |w: T| a / (w * w + a * a).sqrt())
                .with_range(T::zero(), T::infinity())
                .with_integrability(Integrability::L1Loc)
                .with_char_decay(DecayClass::Exponential { rate: a }))
        }
        other => {
            let c = other
                .strip_prefix("const:")
                .ok_or_else(|| Error::Usage(format!("unknown sampler function '{other}'")))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("bad constant in '{other}'")))?;
            if !c.is_finite() {
                return Err(Error::Usage(format!("constant must be finite in '{other}'")));
            }
            let value = T::lit(c);
            Ok(ParamFunction::new(format!("const:{c}"), move |_| value)
                .with_range(value, value)
                .with_integrability(Integrability::L1))
        }
    }
}
