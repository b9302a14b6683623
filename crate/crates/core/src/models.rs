//! Uniform interface over entropy-model families.
//!
//! The comparison baselines (Gaussian, Laplace, Logistic, Gaussian mixture)
//! and the generalized Gaussian behind one enum, each with a closed-form
//! CDF so that unit-bin masses come from the same CDF-difference
//! construction for every family. The error function is implemented here
//! (FreeBSD-derived rational approximations, sub-ulp accuracy) so the crate
//! carries no external math dependencies.

use crate::ggm::{self, GgmParams, PROB_FLOOR};
use crate::Real;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    InvalidParam(&'static str),
    #[error("unknown family tag {0}")]
    UnknownFamily(u8),
}

/// One Gaussian mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent<T> {
    pub weight: T,
    pub mu: T,
    pub sigma: T,
}

/// An entropy model: a probability family with concrete parameters.
///
/// Serializes with a `family` discriminator field, e.g.
/// `{"family":"ggm","mu":0.0,"alpha":1.0,"beta":2.0}`.
///
/// ```
/// use ggm_core::models::EntropyModel;
///
/// let m: EntropyModel<f64> = EntropyModel::Laplace { mu: 0.0, b: 1.0 };
/// assert_eq!(m.cdf(0.0), 0.5);
/// // Central unit bin of a unit Laplace: 1 − e^{−1/2}.
/// let mass = m.bin_probability(0.0);
/// assert!((mass - (1.0 - (-0.5_f64).exp())).abs() < 1e-15);
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum EntropyModel<T> {
    Ggm(GgmParams<T>),
    Gaussian { mu: T, sigma: T },
    Laplace { mu: T, b: T },
    Logistic { mu: T, s: T },
    Gmm { components: Vec<GmmComponent<T>> },
}

impl<T: Real> EntropyModel<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            EntropyModel::Ggm(p) => p
                .validate()
                .map_err(|_| ModelError::InvalidParam("ggm parameters")),
            EntropyModel::Gaussian { mu, sigma } => {
                check_loc_scale(*mu, *sigma, "gaussian sigma must be positive")
            }
            EntropyModel::Laplace { mu, b } => {
                check_loc_scale(*mu, *b, "laplace b must be positive")
            }
            EntropyModel::Logistic { mu, s } => {
                check_loc_scale(*mu, *s, "logistic s must be positive")
            }
            EntropyModel::Gmm { components } => {
                if components.is_empty() {
                    return Err(ModelError::InvalidParam("gmm needs at least one component"));
                }
                let mut total = T::zero();
                for c in components {
                    if !(c.weight >= T::zero()) {
                        return Err(ModelError::InvalidParam("gmm weights must be nonnegative"));
                    }
                    check_loc_scale(c.mu, c.sigma, "gmm sigma must be positive")?;
                    total = total + c.weight;
                }
                if (total - T::one()).abs() > T::of(1e-9) {
                    return Err(ModelError::InvalidParam("gmm weights must sum to 1"));
                }
                Ok(())
            }
        }
    }

    /// Probability density at `y`.
    pub fn pdf(&self, y: T) -> T {
        match self {
            EntropyModel::Ggm(p) => ggm::pdf(y, p),
            EntropyModel::Gaussian { mu, sigma } => gaussian_pdf(y, *mu, *sigma),
            EntropyModel::Laplace { mu, b } => {
                let z = (y - *mu).abs() / *b;
                (-z).exp() / (T::of(2.0) * *b)
            }
            EntropyModel::Logistic { mu, s } => {
                let z = (y - *mu) / *s;
                let e = (-z.abs()).exp();
                let denom = T::one() + e;
                e / (*s * denom * denom)
            }
            EntropyModel::Gmm { components } => components
                .iter()
                .map(|c| c.weight * gaussian_pdf(y, c.mu, c.sigma))
                .fold(T::zero(), |acc, v| acc + v),
        }
    }

    /// Cumulative distribution at `y`.
    pub fn cdf(&self, y: T) -> T {
        match self {
            EntropyModel::Ggm(p) => ggm::cdf(y, p),
            EntropyModel::Gaussian { mu, sigma } => gaussian_cdf(y, *mu, *sigma),
            EntropyModel::Laplace { mu, b } => {
                let z = (y - *mu) / *b;
                let half = T::of(0.5);
                if z < T::zero() {
                    half * z.exp()
                } else {
                    T::one() - half * (-z).exp()
                }
            }
            EntropyModel::Logistic { mu, s } => {
                let z = (y - *mu) / *s;
                (T::one() + (-z).exp()).recip()
            }
            EntropyModel::Gmm { components } => components
                .iter()
                .map(|c| c.weight * gaussian_cdf(y, c.mu, c.sigma))
                .fold(T::zero(), |acc, v| acc + v),
        }
    }

    /// Raw mass of the unit bin centered at `center` (no floor).
    pub fn bin_mass(&self, center: T) -> T {
        let half = T::of(0.5);
        (self.cdf(center + half) - self.cdf(center - half)).max(T::zero())
    }

    /// Unit-bin probability floored at [`PROB_FLOOR`].
    pub fn bin_probability(&self, center: T) -> T {
        self.bin_mass(center).max(T::of(PROB_FLOOR))
    }

    /// Offset subtracted before rounding when this model drives zero-center
    /// quantization. Mixtures have no single mode and quantize plainly.
    pub fn quantization_offset(&self) -> T {
        match self {
            EntropyModel::Ggm(p) => p.mu,
            EntropyModel::Gaussian { mu, .. } => *mu,
            EntropyModel::Laplace { mu, .. } => *mu,
            EntropyModel::Logistic { mu, .. } => *mu,
            EntropyModel::Gmm { .. } => T::zero(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            EntropyModel::Ggm(_) => "ggm",
            EntropyModel::Gaussian { .. } => "gaussian",
            EntropyModel::Laplace { .. } => "laplace",
            EntropyModel::Logistic { .. } => "logistic",
            EntropyModel::Gmm { .. } => "gmm",
        }
    }

    /// Stable one-byte tag used in bitstream headers.
    pub fn family_tag(&self) -> u8 {
        match self {
            EntropyModel::Ggm(_) => 0,
            EntropyModel::Gaussian { .. } => 1,
            EntropyModel::Laplace { .. } => 2,
            EntropyModel::Logistic { .. } => 3,
            EntropyModel::Gmm { .. } => 4,
        }
    }
}

fn check_loc_scale<T: Real>(mu: T, scale: T, msg: &'static str) -> Result<(), ModelError> {
    if !mu.is_finite() {
        return Err(ModelError::InvalidParam("location must be finite"));
    }
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(ModelError::InvalidParam(msg));
    }
    Ok(())
}

fn gaussian_pdf<T: Real>(y: T, mu: T, sigma: T) -> T {
    let z = (y - mu) / sigma;
    let inv_sqrt_2pi = T::of(0.3989422804014326779399461);
    inv_sqrt_2pi / sigma * (-T::of(0.5) * z * z).exp()
}

fn gaussian_cdf<T: Real>(y: T, mu: T, sigma: T) -> T {
    let z = (y - mu) / (sigma * T::of(core::f64::consts::SQRT_2));
    // Complementary form keeps the tails accurate.
    T::of(0.5) * T::of(erfc_f64(-z.to_f64().unwrap()))
}

/// Error function, |error| below 1e-15 everywhere.
pub fn erf<T: Real>(x: T) -> T {
    T::of(erf_f64(x.to_f64().unwrap()))
}

/// Complementary error function `1 − erf(x)`, accurate in the far tail.
pub fn erfc<T: Real>(x: T) -> T {
    T::of(erfc_f64(x.to_f64().unwrap()))
}

// FreeBSD msun-derived rational approximations (the same construction used
// by Go's math.Erf). Each branch is a minimax P/Q fit; the pseudo-single
// split in the exp() argument keeps the tail branches at full precision.

const ERX: f64 = 8.45062911510467529297e-01;

const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

fn poly(z: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// erfc(x)·x·e^{x²+0.5625} for |x| ≥ 1.25, via the asymptotic rational fits.
fn erfc_tail(x: f64) -> f64 {
    let s = 1.0 / (x * x);
    let (r, sd) = if x < 1.0 / 0.35 {
        (poly(s, &RA), 1.0 + s * poly(s, &SA))
    } else {
        (poly(s, &RB), 1.0 + s * poly(s, &SB))
    };
    // Split x into a 20-bit head so −x² is computed without rounding.
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / sd).exp()
}

fn erf_f64(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let sign = x < 0.0;
    let x_abs = x.abs();
    let result = if x_abs < 0.84375 {
        if x_abs < 3.725290298461914e-9 {
            // Below 2^-28 the series is x·(1 + 2/√π − 1) to full precision.
            if x_abs < 2.848094538889218e-306 {
                0.125 * (8.0 * x_abs + EFX8 * x_abs)
            } else {
                x_abs + EFX * x_abs
            }
        } else {
            let z = x_abs * x_abs;
            let r = poly(z, &PP);
            let s = 1.0 + z * poly(z, &QQ);
            x_abs + x_abs * (r / s)
        }
    } else if x_abs < 1.25 {
        let s = x_abs - 1.0;
        ERX + poly(s, &PA) / (1.0 + s * poly(s, &QA))
    } else if x_abs >= 6.0 {
        1.0
    } else {
        1.0 - erfc_tail(x_abs) / x_abs
    };
    if sign {
        -result
    } else {
        result
    }
}

fn erfc_f64(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 0.0 } else { 2.0 };
    }
    let sign = x < 0.0;
    let x_abs = x.abs();
    if x_abs < 0.84375 {
        1.0 - erf_f64(x)
    } else if x_abs < 1.25 {
        let s = x_abs - 1.0;
        let p = poly(s, &PA) / (1.0 + s * poly(s, &QA));
        if sign {
            1.0 + (ERX + p)
        } else {
            1.0 - ERX - p
        }
    } else if x_abs < 28.0 {
        let tail = erfc_tail(x_abs) / x_abs;
        if sign {
            2.0 - tail
        } else {
            tail
        }
    } else if sign {
        2.0
    } else {
        0.0
    }
}
