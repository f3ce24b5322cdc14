use rand::Rng;

use samp_core::checks::quadrature::bg_posterior_moments;
use samp_core::denoiser::{denoise, denoise_deriv, denoise_mean, BgPrior};
use samp_core::stream::{stream, Purpose};
use samp_core::C64;

/// Sparse, dense, heavily shrunk and barely shrunk regimes against 2-D
/// quadrature.
#[test]
fn matches_quadrature_across_regimes() {
    let mut rng = stream(23, 0, Purpose::Oracle);
    for _ in 0..200 {
        let pi = 10f64.powf(rng.random_range(-6.0..-0.001));
        let xi = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let psi = 10f64.powf(rng.random_range(-2.0..2.0));
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let phi = C64::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let prior = BgPrior::new(pi, xi, psi).unwrap();
        let d = denoise(phi, c, &prior);
        let q = bg_posterior_moments(phi, c, pi, xi, psi);
        assert!((d.mean - q.mean).norm() <= 1e-5 * q.mean.norm(), "{phi} {c} {prior:?}");
        assert!((d.var - q.var).abs() <= 1e-5 * q.var, "{phi} {c} {prior:?}");
    }
}

/// F′ = G/c equals the Wirtinger derivative ∂F/∂φ = ½(∂F/∂x − i ∂F/∂y),
/// checked by central differences.
#[test]
fn derivative_is_the_wirtinger_derivative() {
    let mut rng = stream(29, 0, Purpose::Oracle);
    for _ in 0..100 {
        let prior = BgPrior::new(
            rng.random_range(0.02..0.98),
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            rng.random_range(0.1..3.0),
        )
        .unwrap();
        let c = rng.random_range(0.1..3.0);
        let phi = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let h = 1e-5;
        let dx = (denoise_mean(phi + h, c, &prior) - denoise_mean(phi - h, c, &prior)) / (2.0 * h);
        let dy = (denoise_mean(phi + C64::new(0.0, h), c, &prior) - denoise_mean(phi - C64::new(0.0, h), c, &prior)) / (2.0 * h);
        let wirtinger = (dx - C64::i() * dy) * 0.5;
        let f1 = denoise_deriv(phi, c, &prior);
        assert!((wirtinger - C64::new(f1, 0.0)).norm() <= 1e-6 * f1.max(1e-3), "{wirtinger} vs {f1}");
    }
}
