//! Entropy modeling with the generalized Gaussian family.
//!
//! The generalized Gaussian density `f(y) = β/(2αΓ(1/β)) · exp(−(|y−μ|/α)^β)`
//! extends the Gaussian (β=2) and Laplace (β=1) families with a learnable
//! shape parameter, which makes it a good prior for the sharp-peaked,
//! heavy-tailed latent distributions produced by region-adaptive compression.
//! This crate provides the numerical machinery needed to use it as an entropy
//! model end to end:
//!
//! - [`specfun`] — log-gamma, digamma, and the regularized lower incomplete
//!   gamma function `P(a,b)` (with inverse), the building blocks of the CDF;
//! - [`ggm`] — the distribution itself: parameter activations with a dynamic
//!   lower bound on the scale, PDF/CDF, unit-bin probabilities, zero-center
//!   quantization, and inverse-CDF sampling;
//! - [`grad`] — CDF derivatives with respect to input, shape, scale, and
//!   mean; the shape gradient bridges the non-differentiable `∂γ/∂a` with a
//!   central finite-difference scheme;
//! - [`models`] — a uniform interface over GGM and the classic baseline
//!   families (Gaussian, Laplace, Logistic, Gaussian mixture);
//! - [`fit`] — maximum-likelihood fitting of any family to samples, plus
//!   KL-divergence scoring against histograms;
//! - [`codec`] — a lossless range coder driven by model-derived frequency
//!   tables, with a self-describing bitstream format;
//! - [`bench`](mod@bench) — synthetic ROI-latent generation, weighted-distortion and
//!   RDO objectives, train/test rate-mismatch analysis, and BD-rate.
//!
//! The math modules are generic over the floating-point scalar via [`Real`];
//! the fitting, coding, and analysis layers work in `f64`.

#![forbid(unsafe_code)]
// Reference constants are written with every digit of the source value.
#![allow(clippy::excessive_precision)]
// Validation guards use `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use core::fmt::{Debug, Display};

pub mod bench;
pub mod codec;
pub mod fit;
pub mod ggm;
pub mod grad;
pub mod models;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod specfun;

/// Floating-point scalar the math modules are generic over (f32 or f64).
pub trait Real:
    num_traits::Float + num_traits::FloatConst + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from(x).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Double-precision parameter set used by the fitting, coding, and CLI layers.
pub type GgmParams64 = ggm::GgmParams<f64>;
/// Single-precision parameter set, matching the latent-file element type.
pub type GgmParams32 = ggm::GgmParams<f32>;
/// Double-precision entropy model.
pub type EntropyModel64 = models::EntropyModel<f64>;
/// Single-precision entropy model.
pub type EntropyModel32 = models::EntropyModel<f32>;
