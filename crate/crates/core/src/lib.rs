//! Limit laws of `V_n[f] = f(U) sin(nU)` with `U` uniform on `(0, 1)`.
//!
//! The direct problem maps a sampler function `f` to the characteristic
//! function `phi(t) = int_0^1 J_0(t f(u)) du` of the limit. The inverse
//! problem builds `f = k_psi^{-1}` for a prescribed characteristic function
//! `psi` through the order-0 Hankel transform. The sampler draws `V_n[f]`
//! reproducibly and `verify` measures how close a batch is to its limit.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

pub mod bessel;
pub mod error;
pub mod interp;
pub mod inverse;
pub mod limitlaw;
pub mod quad;
pub mod real;
pub mod roots;
pub mod sampler;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use interp::TabulatedMonotone;
pub use inverse::{check_l, invert_k, k_psi, solve_inverse, AdmissibilityReport, CharFn, KPsi};
pub use limitlaw::{limit_char_fn, limit_density, LimitLaw, Monotonicity, ParamFunction};
pub use quad::{Estimate, QuadConfig};
pub use real::Real;
pub use sampler::{builtin_f, sample_vn, SampleBatch};
pub use transforms::{fourier1, fourier2_radial_crosscheck, hankel0, DecayClass, RealFunction, Support};
pub use verify::{ecf, ks_statistic, target_library, TargetDistribution, VerificationReport};

pub type QuadConfig64 = QuadConfig<f64>;
pub type RealFunction64 = RealFunction<f64>;
pub type ParamFunction64 = ParamFunction<f64>;
pub type CharFn64 = CharFn<f64>;
pub type SampleBatch64 = SampleBatch<f64>;
pub type Estimate64 = Estimate<f64>;
pub type TabulatedMonotone64 = TabulatedMonotone<f64>;

pub type QuadConfig32 = QuadConfig<f32>;
pub type ParamFunction32 = ParamFunction<f32>;
pub type CharFn32 = CharFn<f32>;
pub type SampleBatch32 = SampleBatch<f32>;

/// Version of this crate, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
