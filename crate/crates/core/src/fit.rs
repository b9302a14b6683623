//! Maximum-likelihood fitting of entropy models to samples.
//!
//! Parameters are optimized as raw variables mapped through the same
//! activations the compression setting uses — clamped Softplus for the
//! shape, Huber-like for scales, dynamic lower bound on the generalized
//! Gaussian scale — so fitted parameters always land in the representable
//! range. The optimizer is plain gradient descent with backtracking
//! halving; accepted steps never increase the objective.
//!
//! The generalized Gaussian fit is multi-start: besides the moment
//! estimate it starts from the fitted Gaussian (β=2 slice) and fitted
//! Laplace (β=1 slice), which makes the nested-family dominance
//! `NLL(GGM) ≤ min(NLL(Gaussian), NLL(Laplace))` structural rather than
//! hoped-for, as long as the slice scales clear the dynamic lower bound.

use crate::ggm::{dynamic_lower_bound, huber_like, softplus_clamped, ActivationConfig, GgmParams};
use crate::grad::{dcdf_dalpha_dmu, dcdf_dbeta, FdConfig};
use crate::models::{EntropyModel, GmmComponent};
use crate::specfun::{digamma, log_gamma};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

const LN_2: f64 = core::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Model family selector for [`fit_mle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ggm,
    Gaussian,
    Laplace,
    Logistic,
    /// Gaussian mixture with `k` components.
    Gmm {
        k: usize,
    },
}

/// How the location parameter is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    /// Sample median, fixed during descent (robust under heavy tails).
    Median,
    /// Sample mean, fixed during descent.
    Mean,
    /// Free variable optimized by descent (subgradient 0 at coincident
    /// points). Ignored by the mixture family, whose component means are
    /// always free.
    Gradient,
}

/// Fitting objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Continuous density NLL (the default; density-fit reading).
    Continuous,
    /// NLL of zero-centered unit-bin masses, for coding-oriented fits.
    /// The shape gradient runs through the finite-difference CDF chain.
    /// Applies to the generalized Gaussian; the closed-form baselines
    /// always fit the continuous density.
    Discrete,
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub max_steps: usize,
    pub learning_rate: f64,
    /// Stop when an accepted step improves mean NLL by less than this,
    /// relatively.
    pub tol_rel_nll: f64,
    pub mu_mode: MuMode,
    pub objective: Objective,
    /// Drives the deterministic jitter of mixture initialization.
    pub seed: u64,
    pub activation: ActivationConfig<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            learning_rate: 1e-2,
            tol_rel_nll: 1e-9,
            mu_mode: MuMode::Median,
            objective: Objective::Continuous,
            seed: 0,
            activation: ActivationConfig::default(),
        }
    }
}

/// Outcome of a fit. Non-convergence is reported, not raised: `model`
/// then holds the best parameters reached.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: EntropyModel<f64>,
    /// Mean per-sample negative log-likelihood, in bits.
    pub nll_bits: f64,
    pub converged: bool,
    pub steps: usize,
    /// Accepted objective values (mean NLL, nats); non-increasing.
    pub nll_trace: Vec<f64>,
}

/// Empirical histogram over explicit bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self, FitError> {
        if bin_edges.len() != counts.len() + 1 {
            return Err(FitError::InvalidConfig("need len(edges) = len(counts) + 1"));
        }
        if !bin_edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(FitError::InvalidConfig(
                "bin edges must be strictly increasing",
            ));
        }
        Ok(Self { bin_edges, counts })
    }

    /// Equal-width histogram whose extent covers 99.99% of the sample mass
    /// (quantiles 5e-5 and 1−5e-5); samples outside are clamped into the
    /// edge bins.
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Result<Self, FitError> {
        if samples.is_empty() || n_bins == 0 {
            return Err(FitError::DegenerateSample("empty sample or zero bins"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let idx = (p * (sorted.len() - 1) as f64).round() as usize;
            sorted[idx.min(sorted.len() - 1)]
        };
        let (mut lo, mut hi) = (q(5e-5), q(1.0 - 5e-5));
        if lo >= hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; n_bins];
        for &y in samples {
            let idx = ((y - lo) / width).floor() as i64;
            counts[idx.clamp(0, n_bins as i64 - 1) as usize] += 1;
        }
        Self::new(edges, counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Moment-matching initializer for the generalized Gaussian: median
/// location, shape from the ratio `(E|y−μ|)² / E(y−μ)²` solved by
/// bisection of `Γ(2/β)² / (Γ(1/β)Γ(3/β))`, scale from the first absolute
/// moment.
pub fn moment_init(samples: &[f64]) -> Result<GgmParams<f64>, FitError> {
    if samples.len() < 30 {
        return Err(FitError::DegenerateSample("need at least 30 samples"));
    }
    let mu = median(samples);
    let n = samples.len() as f64;
    let m1 = samples.iter().map(|y| (y - mu).abs()).sum::<f64>() / n;
    let m2 = samples.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / n;
    if !(m1 > 0.0) || !(m2 > 0.0) {
        return Err(FitError::DegenerateSample("zero spread"));
    }
    let ratio = m1 * m1 / m2;

    let g = |beta: f64| -> f64 {
        let lg = |x: f64| log_gamma(x).unwrap();
        (2.0 * lg(2.0 / beta) - lg(1.0 / beta) - lg(3.0 / beta)).exp()
    };
    // g is increasing in β; clamp outside the representable band.
    let beta = if ratio <= g(0.1) {
        0.1
    } else if ratio >= g(4.0) {
        4.0
    } else {
        let (mut lo, mut hi) = (0.1_f64, 4.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let alpha = m1 * (log_gamma(1.0 / beta).unwrap() - log_gamma(2.0 / beta).unwrap()).exp();
    GgmParams::new(mu, alpha.max(1e-300), beta)
        .map_err(|_| FitError::DegenerateSample("moment estimate out of range"))
}

/// KL divergence in bits between a histogram and a model:
/// `Σ p̂ᵢ log₂(p̂ᵢ/qᵢ)` with `qᵢ` the model's mass on bin i (floored at
/// 1e-12), skipping empty bins.
pub fn kl_divergence(h: &Histogram, m: &EntropyModel<f64>) -> f64 {
    let total = h.total() as f64;
    let mut kl = 0.0;
    for (i, &c) in h.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let p_hat = c as f64 / total;
        let q = (m.cdf(h.bin_edges[i + 1]) - m.cdf(h.bin_edges[i])).max(1e-12);
        kl += p_hat * (p_hat / q).log2();
    }
    kl
}

/// Fit `family` to `samples` by maximum likelihood.
pub fn fit_mle(samples: &[f64], family: Family, cfg: &FitConfig) -> Result<FitResult, FitError> {
    if samples.len() < 30 {
        return Err(FitError::DegenerateSample("need at least 30 samples"));
    }
    if !(cfg.learning_rate > 0.0) || cfg.max_steps == 0 {
        return Err(FitError::InvalidConfig(
            "learning_rate > 0 and max_steps >= 1",
        ));
    }
    cfg.activation
        .validate()
        .map_err(|_| FitError::InvalidConfig("invalid activation configuration"))?;
    let spread = {
        let mu = mean(samples);
        samples.iter().map(|y| (y - mu).abs()).sum::<f64>()
    };
    if !(spread > 0.0) {
        return Err(FitError::DegenerateSample("zero spread"));
    }

    match family {
        Family::Ggm => fit_ggm(samples, cfg),
        Family::Gaussian => fit_location_scale(samples, cfg, ScaleFamily::Gaussian),
        Family::Laplace => fit_location_scale(samples, cfg, ScaleFamily::Laplace),
        Family::Logistic => fit_location_scale(samples, cfg, ScaleFamily::Logistic),
        Family::Gmm { k } => fit_gmm(samples, cfg, k),
    }
}

// ---------------------------------------------------------------------
// Shared descent machinery
// ---------------------------------------------------------------------

struct Descent {
    best: Vec<f64>,
    value: f64,
    trace: Vec<f64>,
    steps: usize,
    converged: bool,
}

/// Gradient descent with backtracking halving. `obj` returns the mean NLL
/// in nats and its gradient with respect to the raw parameters.
fn descend<F>(start: Vec<f64>, cfg: &FitConfig, obj: F) -> Descent
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut theta = start;
    let (mut value, mut grad) = obj(&theta);
    let mut trace = vec![value];
    let mut lr = cfg.learning_rate;
    let mut converged = false;
    let mut steps = 0;

    for _ in 0..cfg.max_steps {
        steps += 1;
        let proposal: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - lr * g).collect();
        let (new_value, new_grad) = obj(&proposal);
        if new_value.is_finite() && new_value <= value {
            let improvement = value - new_value;
            theta = proposal;
            value = new_value;
            grad = new_grad;
            trace.push(value);
            lr = (lr * 1.3).min(1.0);
            if improvement < cfg.tol_rel_nll * (value.abs() + 1.0) {
                converged = true;
                break;
            }
        } else {
            lr *= 0.5;
            if lr < 1e-18 {
                converged = true;
                break;
            }
        }
    }
    Descent {
        best: theta,
        value,
        trace,
        steps,
        converged,
    }
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

fn std_dev(samples: &[f64], mu: f64) -> f64 {
    (samples.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / samples.len() as f64).sqrt()
}

fn location(samples: &[f64], mode: MuMode) -> f64 {
    match mode {
        MuMode::Median => median(samples),
        MuMode::Mean => mean(samples),
        MuMode::Gradient => median(samples), // starting point; refined by descent
    }
}

/// Raw value mapping through [`huber_like`] to `target` (target ≥ δ/2).
fn huber_inverse(target: f64, act: &ActivationConfig<f64>) -> f64 {
    let d = act.delta;
    if target >= d {
        target
    } else if target > 0.5 * d {
        (d * (2.0 * target - d)).sqrt()
    } else {
        0.0
    }
}

/// Raw value mapping through the clamped Softplus to `target`
/// (target within the clamp band).
fn softplus_inverse(target: f64) -> f64 {
    (target.exp() - 1.0).ln()
}

fn huber_derivative(raw: f64, act: &ActivationConfig<f64>) -> f64 {
    if raw.abs() <= act.delta {
        raw / act.delta
    } else {
        raw.signum()
    }
}

fn softplus_clamped_derivative(raw: f64, value: f64, act: &ActivationConfig<f64>) -> f64 {
    if value <= act.beta_min || value >= act.beta_max {
        0.0
    } else {
        1.0 / (1.0 + (-raw).exp())
    }
}

// ---------------------------------------------------------------------
// Generalized Gaussian
// ---------------------------------------------------------------------

fn fit_ggm(samples: &[f64], cfg: &FitConfig) -> Result<FitResult, FitError> {
    let act = cfg.activation;
    // Zero-center bin masses are piecewise constant in μ (the offset
    // cancels except through re-quantization), so the discrete objective
    // always holds μ at its location estimate.
    let free_mu =
        matches!(cfg.mu_mode, MuMode::Gradient) && matches!(cfg.objective, Objective::Continuous);
    let mu0 = location(samples, cfg.mu_mode);

    // Starts: moment estimate, fitted-Gaussian slice (β=2, α=σ√2),
    // fitted-Laplace slice (β=1, α=b). The slices make nested dominance
    // hold by construction under monotone descent.
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let push_start = |alpha: f64, beta: f64, starts: &mut Vec<Vec<f64>>| {
        let beta = beta.clamp(act.beta_min, act.beta_max);
        let mut raw = vec![
            huber_inverse(alpha.max(0.5 * act.delta), &act),
            softplus_inverse(beta),
        ];
        if free_mu {
            raw.push(mu0);
        }
        starts.push(raw);
    };
    if let Ok(p) = moment_init(samples) {
        push_start(p.alpha, p.beta, &mut starts);
    }
    let gauss = fit_location_scale(samples, cfg, ScaleFamily::Gaussian)?;
    if let EntropyModel::Gaussian { sigma, .. } = gauss.model {
        push_start(sigma * core::f64::consts::SQRT_2, 2.0, &mut starts);
    }
    let lap = fit_location_scale(samples, cfg, ScaleFamily::Laplace)?;
    if let EntropyModel::Laplace { b, .. } = lap.model {
        push_start(b, 1.0, &mut starts);
    }

    // Group samples by quantized symbol once for the discrete objective.
    let symbol_groups: Vec<(f64, f64)> = match cfg.objective {
        Objective::Discrete => {
            let mut groups: BTreeMap<i64, u64> = BTreeMap::new();
            for &y in samples {
                *groups.entry((y - mu0).round() as i64).or_insert(0) += 1;
            }
            let n = samples.len() as f64;
            groups
                .into_iter()
                .map(|(k, c)| (k as f64, c as f64 / n))
                .collect()
        }
        Objective::Continuous => Vec::new(),
    };

    let objective = |raw: &[f64]| -> (f64, Vec<f64>) {
        let mu = if free_mu { raw[2] } else { mu0 };
        match cfg.objective {
            Objective::Continuous => ggm_continuous_nll(samples, raw, mu, free_mu, &act),
            Objective::Discrete => ggm_discrete_nll(&symbol_groups, raw, mu, &act),
        }
    };

    let mut best: Option<Descent> = None;
    for start in starts {
        let d = descend(start, cfg, objective);
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let d = best.expect("at least the slice starts exist");

    let raw = &d.best;
    let beta = softplus_clamped(raw[1], &act);
    let alpha = dynamic_lower_bound(huber_like(raw[0], &act), beta, &act);
    let mu = if free_mu { raw[2] } else { mu0 };
    let params = GgmParams::new(mu, alpha, beta)
        .map_err(|_| FitError::DegenerateSample("descent left the parameter domain"))?;

    // Report the continuous NLL regardless of objective so families stay
    // comparable on one scale.
    let nll_bits = ggm_continuous_nll(samples, raw, mu, free_mu, &act).0 / LN_2;
    Ok(FitResult {
        model: EntropyModel::Ggm(params),
        nll_bits,
        converged: d.converged,
        steps: d.steps,
        nll_trace: d.trace,
    })
}

/// Mean continuous NLL (nats) of the GGM and its raw-parameter gradient.
fn ggm_continuous_nll(
    samples: &[f64],
    raw: &[f64],
    mu: f64,
    free_mu: bool,
    act: &ActivationConfig<f64>,
) -> (f64, Vec<f64>) {
    let beta = softplus_clamped(raw[1], act);
    let alpha_pre = huber_like(raw[0], act);
    let alpha = dynamic_lower_bound(alpha_pre, beta, act);
    let bound_active = alpha_pre < act.zeta * beta;

    let n = samples.len() as f64;
    let mut sum_pow = 0.0; // Σ |t|^β
    let mut sum_pow_ln = 0.0; // Σ |t|^β ln|t|
    let mut sum_sign_pow = 0.0; // Σ sign(t) |t|^{β−1}
    for &y in samples {
        let t = (y - mu) / alpha;
        let t_abs = t.abs();
        if t_abs == 0.0 {
            continue;
        }
        let ln_t = t_abs.ln();
        let pow = (beta * ln_t).exp();
        sum_pow += pow;
        sum_pow_ln += pow * ln_t;
        if free_mu {
            sum_sign_pow += t.signum() * (pow / t_abs);
        }
    }
    sum_pow /= n;
    sum_pow_ln /= n;
    sum_sign_pow /= n;

    let inv_beta = 1.0 / beta;
    let nll = LN_2 + alpha.ln() + log_gamma(inv_beta).unwrap() - beta.ln() + sum_pow;

    let d_alpha = (1.0 - beta * sum_pow) / alpha;
    let d_beta_direct = -digamma(inv_beta).unwrap() * inv_beta * inv_beta - inv_beta + sum_pow_ln;
    // When the dynamic bound pins α = ζβ, β also moves α.
    let d_beta = d_beta_direct
        + if bound_active {
            d_alpha * act.zeta
        } else {
            0.0
        };
    let d_raw_alpha = if bound_active {
        0.0
    } else {
        d_alpha * huber_derivative(raw[0], act)
    };
    let d_raw_beta = d_beta * softplus_clamped_derivative(raw[1], beta, act);

    let mut grad = vec![d_raw_alpha, d_raw_beta];
    if free_mu {
        // −(β/α)·mean[sign(t)|t|^{β−1}], subgradient 0 at coincident points.
        grad.push(-(beta / alpha) * sum_sign_pow);
    }
    (nll, grad)
}

/// Mean discrete-bin NLL (nats) over grouped symbols and its gradient,
/// with CDF derivatives from the finite-difference chain.
fn ggm_discrete_nll(
    groups: &[(f64, f64)],
    raw: &[f64],
    mu: f64,
    act: &ActivationConfig<f64>,
) -> (f64, Vec<f64>) {
    let beta = softplus_clamped(raw[1], act);
    let alpha_pre = huber_like(raw[0], act);
    let alpha = dynamic_lower_bound(alpha_pre, beta, act);
    let bound_active = alpha_pre < act.zeta * beta;
    let p = GgmParams { mu, alpha, beta };
    let fd = FdConfig::default();

    let mut nll = 0.0;
    let mut d_alpha = 0.0;
    let mut d_beta = 0.0;
    for &(k, weight) in groups {
        let hi = mu + k + 0.5;
        let lo = mu + k - 0.5;
        let mass = (crate::ggm::cdf(hi, &p) - crate::ggm::cdf(lo, &p)).max(1e-300);
        nll -= weight * mass.ln();
        let (da_hi, _) = dcdf_dalpha_dmu(hi, &p);
        let (da_lo, _) = dcdf_dalpha_dmu(lo, &p);
        let db_hi = dcdf_dbeta(hi, &p, &fd);
        let db_lo = dcdf_dbeta(lo, &p, &fd);
        d_alpha -= weight * (da_hi - da_lo) / mass;
        d_beta -= weight * (db_hi - db_lo) / mass;
    }
    let d_beta = d_beta
        + if bound_active {
            d_alpha * act.zeta
        } else {
            0.0
        };
    let d_raw_alpha = if bound_active {
        0.0
    } else {
        d_alpha * huber_derivative(raw[0], act)
    };
    let d_raw_beta = d_beta * softplus_clamped_derivative(raw[1], beta, act);
    (nll, vec![d_raw_alpha, d_raw_beta])
}

// ---------------------------------------------------------------------
// Location-scale baselines
// ---------------------------------------------------------------------

#[derive(Clone, Copy)]
enum ScaleFamily {
    Gaussian,
    Laplace,
    Logistic,
}

fn fit_location_scale(
    samples: &[f64],
    cfg: &FitConfig,
    family: ScaleFamily,
) -> Result<FitResult, FitError> {
    let act = cfg.activation;
    let free_mu = matches!(cfg.mu_mode, MuMode::Gradient);
    let mu0 = location(samples, cfg.mu_mode);

    let sigma0 = std_dev(samples, mu0).max(1e-12);
    let scale0 = match family {
        ScaleFamily::Gaussian => sigma0,
        ScaleFamily::Laplace => {
            samples.iter().map(|y| (y - mu0).abs()).sum::<f64>() / samples.len() as f64
        }
        ScaleFamily::Logistic => sigma0 * 3.0_f64.sqrt() / core::f64::consts::PI,
    };
    let mut start = vec![huber_inverse(scale0.max(0.5 * act.delta), &act)];
    if free_mu {
        start.push(mu0);
    }

    let objective = |raw: &[f64]| -> (f64, Vec<f64>) {
        let mu = if free_mu { raw[1] } else { mu0 };
        let scale = huber_like(raw[0], &act);
        let (nll, d_scale, d_mu) = scale_family_nll(samples, mu, scale, family);
        let mut grad = vec![d_scale * huber_derivative(raw[0], &act)];
        if free_mu {
            grad.push(d_mu);
        }
        (nll, grad)
    };

    let d = descend(start, cfg, objective);
    let scale = huber_like(d.best[0], &act);
    let mu = if free_mu { d.best[1] } else { mu0 };
    let model = match family {
        ScaleFamily::Gaussian => EntropyModel::Gaussian { mu, sigma: scale },
        ScaleFamily::Laplace => EntropyModel::Laplace { mu, b: scale },
        ScaleFamily::Logistic => EntropyModel::Logistic { mu, s: scale },
    };
    Ok(FitResult {
        model,
        nll_bits: d.value / LN_2,
        converged: d.converged,
        steps: d.steps,
        nll_trace: d.trace,
    })
}

/// Mean NLL (nats) and gradients for one location-scale family.
fn scale_family_nll(samples: &[f64], mu: f64, scale: f64, family: ScaleFamily) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    match family {
        ScaleFamily::Gaussian => {
            let mut sum_z2 = 0.0;
            let mut sum_z = 0.0;
            for &y in samples {
                let z = (y - mu) / scale;
                sum_z2 += z * z;
                sum_z += z;
            }
            sum_z2 /= n;
            sum_z /= n;
            let nll = 0.5 * sum_z2 + scale.ln() + 0.5 * (2.0 * core::f64::consts::PI).ln();
            ((nll), (1.0 - sum_z2) / scale, -sum_z / scale)
        }
        ScaleFamily::Laplace => {
            let mut sum_abs = 0.0;
            let mut sum_sign = 0.0;
            for &y in samples {
                sum_abs += (y - mu).abs();
                sum_sign += (y - mu).signum();
            }
            sum_abs /= n;
            sum_sign /= n;
            let nll = sum_abs / scale + (2.0 * scale).ln();
            (nll, (1.0 - sum_abs / scale) / scale, -sum_sign / scale)
        }
        ScaleFamily::Logistic => {
            let mut nll = 0.0;
            let mut d_scale = 0.0;
            let mut d_mu = 0.0;
            for &y in samples {
                let z = (y - mu) / scale;
                // −ln f = z + 2·softplus(−z) + ln s, in an overflow-safe form.
                nll += z.abs() + 2.0 * (-z.abs()).exp().ln_1p();
                let w = 2.0 / (1.0 + (-z).exp()) - 1.0; // = 2σ(z) − 1
                d_scale += -w * z;
                d_mu += -w;
            }
            (
                (nll / n + scale.ln()),
                (d_scale / n + 1.0) / scale,
                d_mu / n / scale,
            )
        }
    }
}

// ---------------------------------------------------------------------
// Gaussian mixture
// ---------------------------------------------------------------------

fn fit_gmm(samples: &[f64], cfg: &FitConfig, k: usize) -> Result<FitResult, FitError> {
    if k == 0 || k > 16 {
        return Err(FitError::InvalidConfig(
            "gmm component count must be in 1..=16",
        ));
    }
    let act = cfg.activation;
    let n = samples.len() as f64;
    let mu_all = mean(samples);
    let sigma_all = std_dev(samples, mu_all).max(1e-12);

    // Quantile-spread means with a tiny seeded jitter to break symmetric
    // ties; uniform weights; common initial spread.
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut raw = Vec::with_capacity(3 * k);
    raw.extend(std::iter::repeat_n(0.0, k)); // softmax logits
    for j in 0..k {
        let q = (j + 1) as f64 / (k + 1) as f64;
        let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
        let jitter = splitmix(cfg.seed.wrapping_add(j as u64)) * 1e-3 * sigma_all;
        raw.push(sorted[idx] + jitter);
    }
    raw.extend(std::iter::repeat_n(huber_inverse(sigma_all, &act), k));

    let objective = |raw: &[f64]| -> (f64, Vec<f64>) {
        let (weights, means, sigmas) = unpack_gmm(raw, k, &act);
        let mut nll = 0.0;
        let mut d_logit = vec![0.0; k];
        let mut d_mu = vec![0.0; k];
        let mut d_sigma = vec![0.0; k];
        let inv_sqrt_2pi = 0.3989422804014327;
        for &y in samples {
            let mut dens = 0.0;
            let mut comp = vec![0.0; k];
            for j in 0..k {
                let z = (y - means[j]) / sigmas[j];
                let f = weights[j] * inv_sqrt_2pi / sigmas[j] * (-0.5 * z * z).exp();
                comp[j] = f;
                dens += f;
            }
            let dens = dens.max(1e-300);
            nll -= dens.ln();
            for j in 0..k {
                let r = comp[j] / dens; // responsibility
                let z = (y - means[j]) / sigmas[j];
                d_logit[j] -= r;
                d_mu[j] -= r * z / sigmas[j];
                d_sigma[j] -= r * (z * z - 1.0) / sigmas[j];
            }
        }
        nll /= n;
        // Softmax chain: ∂NLL/∂logit_j = (Σᵢ rᵢⱼ)·(−1/n) + w_j.
        let mut grad = Vec::with_capacity(3 * k);
        for j in 0..k {
            grad.push(d_logit[j] / n + weights[j]);
        }
        for item in d_mu.iter().take(k) {
            grad.push(item / n);
        }
        for j in 0..k {
            grad.push(d_sigma[j] / n * huber_derivative(raw[2 * k + j], &act));
        }
        (nll, grad)
    };

    let d = descend(raw, cfg, objective);
    let (weights, means, sigmas) = unpack_gmm(&d.best, k, &act);
    let components = (0..k)
        .map(|j| GmmComponent {
            weight: weights[j],
            mu: means[j],
            sigma: sigmas[j],
        })
        .collect();
    Ok(FitResult {
        model: EntropyModel::Gmm { components },
        nll_bits: d.value / LN_2,
        converged: d.converged,
        steps: d.steps,
        nll_trace: d.trace,
    })
}

fn unpack_gmm(
    raw: &[f64],
    k: usize,
    act: &ActivationConfig<f64>,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let max_logit = raw[..k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw[..k].iter().map(|l| (l - max_logit).exp()).collect();
    let total: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let means = raw[k..2 * k].to_vec();
    let sigmas: Vec<f64> = raw[2 * k..3 * k]
        .iter()
        .map(|r| huber_like(*r, act))
        .collect();
    (weights, means, sigmas)
}

fn splitmix(seed: u64) -> f64 {
    let mut z = seed.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z = z ^ (z >> 31);
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}
