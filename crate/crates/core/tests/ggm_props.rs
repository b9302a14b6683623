//! Distribution-level properties of the generalized Gaussian: quadrature
//! normalization, bin-mass completeness, CDF/PDF consistency, family
//! embeddings, and the coding-rate/entropy agreement.

use ggm_core::ggm::{bin_mass, cdf, pdf, quantize_zero_center, rate_bits, sample, GgmParams};
use ggm_core::models::EntropyModel;
use ggm_core::oracle;
use proptest::prelude::*;

fn params(mu: f64, alpha: f64, beta: f64) -> GgmParams<f64> {
    GgmParams::new(mu, alpha, beta).unwrap()
}

/// ∫ pdf = 1 within 1e-6 for every clamp-range shape. The quadrature runs
/// over [μ−40α, μ+40α]; for β < 1 the tails beyond carry real mass, which
/// is added from the oracle's own integrals so the identity stays exact.
#[test]
fn pdf_normalizes_with_oracle_tail() {
    for &beta in &[0.1, 0.5, 1.0, 2.0, 4.0] {
        let p = params(0.3, 0.9, beta);
        let body = oracle::tanh_sinh(
            |u| pdf(p.mu + u, &p) + pdf(p.mu - u, &p),
            40.0 * p.alpha,
            1e-12,
        );
        let a = 1.0 / beta;
        let tail_mass =
            1.0 - oracle::gamma_lower_quad(a, 40.0f64.powf(beta)) / oracle::gamma_total_quad(a);
        let total = body + tail_mass;
        assert!(
            (total - 1.0).abs() < 1e-6,
            "beta {beta}: body {body} + tail {tail_mass} = {total}"
        );
    }
}

/// Unit-bin masses over integer symbols plus the CDF tails account for all
/// probability.
#[test]
fn bin_masses_sum_to_one() {
    for &beta in &[0.1, 0.5, 1.0, 2.0, 4.0] {
        for &alpha in &[0.2, 1.0, 3.0] {
            let p = params(0.15, alpha, beta);
            let reach = (40.0 * alpha).ceil() as i64;
            let mut total: f64 = ((reach + 1) as f64).mul_add(0.0, 0.0);
            for k in -reach..=reach {
                total += bin_mass(p.mu + k as f64, &p);
            }
            total += cdf(p.mu - reach as f64 - 0.5, &p);
            total += 1.0 - cdf(p.mu + reach as f64 + 0.5, &p);
            assert!(
                (total - 1.0).abs() < 1e-6,
                "alpha {alpha} beta {beta}: total {total}"
            );
        }
    }
}

/// (cdf(y+h) − cdf(y−h)) / 2h tracks pdf(y) across a parameter grid.
#[test]
fn cdf_is_antiderivative_of_pdf() {
    let h = 1e-4;
    for &beta in &[0.35, 0.8, 1.0, 1.7, 2.0, 3.2] {
        for &alpha in &[0.3, 1.0, 2.5] {
            let p = params(-0.4, alpha, beta);
            for i in -12..=12 {
                let y = p.mu + 0.45 * i as f64 * alpha;
                if (y - p.mu).abs() < 1e-3 && beta <= 1.0 {
                    continue; // density kink at the mean for β ≤ 1
                }
                let fd = (cdf(y + h, &p) - cdf(y - h, &p)) / (2.0 * h);
                assert!(
                    (fd - pdf(y, &p)).abs() < 1e-5,
                    "y {y} alpha {alpha} beta {beta}: fd {fd} pdf {}",
                    pdf(y, &p)
                );
            }
        }
    }
}

/// Sampled streams code at the model's discrete entropy: rate/symbol from
/// `rate_bits` within 1% of `Σ −mass·log₂ mass` by direct summation.
#[test]
fn self_coded_rate_matches_entropy() {
    let p = params(0.0, 1.3, 1.5);
    let n = 100_000usize;
    let ys = sample(&p, n, 99);
    let symbols: Vec<i64> = ys
        .iter()
        .map(|&y| quantize_zero_center(y, p.mu).0)
        .collect();
    let per_element: Vec<GgmParams<f64>> = vec![p; n];
    let measured = rate_bits(&symbols, &per_element).unwrap() / n as f64;

    let mut entropy = 0.0;
    let reach = (40.0 * p.alpha).ceil() as i64;
    for k in -reach..=reach {
        let mass = bin_mass(p.mu + k as f64, &p);
        if mass > 0.0 {
            entropy -= mass * mass.log2();
        }
    }
    let rel = (measured - entropy).abs() / entropy;
    assert!(
        rel < 0.01,
        "measured {measured} vs entropy {entropy} (rel {rel})"
    );
}

/// β=2 and β=1 slices agree with Gaussian(σ=α/√2) and Laplace(b=α) to
/// 1e-9 across symbols and scales.
#[test]
fn family_embedding() {
    for &alpha in &[0.11, 0.5, 1.0, 3.0] {
        let ggm2 = params(0.0, alpha, 2.0);
        let gauss = EntropyModel::Gaussian {
            mu: 0.0,
            sigma: alpha / 2.0f64.sqrt(),
        };
        let ggm1 = params(0.0, alpha, 1.0);
        let lap = EntropyModel::Laplace { mu: 0.0, b: alpha };
        for k in -20..=20 {
            let c = k as f64;
            assert!((bin_mass(c, &ggm2) - gauss.bin_mass(c)).abs() < 1e-9);
            assert!((bin_mass(c, &ggm1) - lap.bin_mass(c)).abs() < 1e-9);
        }
    }
}

/// Sampling reproduces the second moment implied by the density, with the
/// moment itself cross-checked against quadrature of y²·pdf.
#[test]
fn sample_variance_matches_quadrature_moment() {
    for &(alpha, beta, n, seed) in &[(1.0, 2.0, 1_000_000usize, 5u64), (1.0, 1.0, 1_000_000, 6)] {
        let p = params(0.0, alpha, beta);
        // Closed form α²Γ(3/β)/Γ(1/β) against direct quadrature.
        let lg = |x: f64| ggm_core::specfun::log_gamma(x).unwrap();
        let closed = alpha * alpha * (lg(3.0 / beta) - lg(1.0 / beta)).exp();
        let quad = 2.0 * oracle::tanh_sinh(|y| y * y * pdf(y, &p), 60.0 * alpha, 1e-12);
        assert!(
            (closed - quad).abs() < 1e-8 * closed,
            "beta {beta}: closed {closed} vs quadrature {quad}"
        );

        // β=2 gives variance α²/2 (σ = α/√2); β=1 gives the Laplace 2α².
        let ys = sample(&p, n, seed);
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        assert!(
            (var - closed).abs() < 0.01 * closed,
            "beta {beta}: sample var {var} vs {closed}"
        );
    }
}

proptest! {
    #[test]
    fn activation_floors_hold(
        raw in -50.0f64..50.0,
        beta in 0.1f64..4.0,
    ) {
        let act = ggm_core::ggm::ActivationConfig::<f64>::default();
        let scale = ggm_core::ggm::huber_like(raw, &act);
        prop_assert!(scale >= act.delta / 2.0 - 1e-15);
        let bounded = ggm_core::ggm::dynamic_lower_bound(scale, beta, &act);
        prop_assert!(bounded >= act.zeta * beta - 1e-15);
        let shape = ggm_core::ggm::softplus_clamped(raw, &act);
        prop_assert!((0.1..=4.0).contains(&shape));
    }

    #[test]
    fn cdf_monotone_and_bounded(
        mu in -3.0f64..3.0,
        alpha in 0.05f64..4.0,
        beta in 0.1f64..4.0,
        y1 in -30.0f64..30.0,
        y2 in -30.0f64..30.0,
    ) {
        let p = params(mu, alpha, beta);
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        let c_lo = cdf(lo, &p);
        let c_hi = cdf(hi, &p);
        prop_assert!((0.0..=1.0).contains(&c_lo));
        prop_assert!((0.0..=1.0).contains(&c_hi));
        prop_assert!(c_hi >= c_lo - 1e-12);
        prop_assert!(pdf(lo, &p) >= 0.0);
    }

    #[test]
    fn bin_symmetry_about_mean(
        alpha in 0.05f64..4.0,
        beta in 0.1f64..4.0,
        k in 0i64..30,
    ) {
        let p = params(0.0, alpha, beta);
        let a = bin_mass(k as f64, &p);
        let b = bin_mass(-k as f64, &p);
        prop_assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn quantize_round_trip(y in -1e5f64..1e5, mu in -10.0f64..10.0) {
        let (k, recon) = quantize_zero_center(y, mu);
        prop_assert!((recon - (k as f64 + mu)).abs() < 1e-9);
        prop_assert!((y - recon).abs() <= 0.5 + 1e-9);
    }
}
