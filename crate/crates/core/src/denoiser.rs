//! Scalar Bernoulli-Gaussian MMSE denoiser.
//!
//! The prior on one entry is `(1 − π̂) δ(x) + π̂ CN(x; ξ̂, ψ̂)` and the
//! observation is `φ = x + √c v` with `v ~ CN(0, 1)`. Everything that depends
//! on the spike/slab ratio γ goes through `ln γ` and a stable logistic, since
//! the exponent grows like |φ|²/c and overflows at high SNR.

use crate::{Error, Result, C64};

/// Exponent clamp applied before `exp` in [`gamma`].
const EXP_CLAMP: f64 = 700.0;

/// Historical-knowledge-aided spike-and-slab prior of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgPrior {
    pub pi_hat: f64,
    pub xi_hat: C64,
    pub psi_hat: f64,
}

impl BgPrior {
    pub fn new(pi_hat: f64, xi_hat: C64, psi_hat: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_hat) || psi_hat.is_nan() || psi_hat <= 0.0 || !xi_hat.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "invalid prior (π̂ = {pi_hat}, ξ̂ = {xi_hat}, ψ̂ = {psi_hat})"
            )));
        }
        Ok(BgPrior {
            pi_hat,
            xi_hat,
            psi_hat,
        })
    }

    /// Zero-mean prior `(1 − π) δ + π CN(0, ψ)`.
    pub fn zero_mean(pi_hat: f64, psi_hat: f64) -> Self {
        BgPrior {
            pi_hat,
            xi_hat: C64::new(0.0, 0.0),
            psi_hat,
        }
    }
}

/// Posterior mean and variance of one entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Denoised {
    pub mean: C64,
    pub var: f64,
}

/// `ln` of the slab-only likelihood ratio `CN(φ; 0, c) / CN(φ; ξ̂, ψ̂ + c)`,
/// i.e. `ln γ` without the prior odds.
pub(crate) fn log_likelihood_ratio(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    let (xi, psi) = (prior.xi_hat, prior.psi_hat);
    let cross = (xi.conj() * phi).re * c;
    let expo = (psi * phi.norm_sqr() + 2.0 * cross - c * xi.norm_sqr()) / (c * (psi + c));
    ((psi + c) / c).ln() - expo
}

/// `ln γ` for an interior prior (0 < π̂ < 1).
pub fn log_gamma(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    let pi = prior.pi_hat;
    ((1.0 - pi) / pi).ln() + log_likelihood_ratio(phi, c, prior)
}

/// γ = ((1 − π̂)/π̂) · ((ψ̂ + c)/c) · exp(−[ψ̂|φ|² + 2Re(ξ̂* c φ) − c|ξ̂|²] / (c(ψ̂ + c))).
///
/// Exact boundary priors are rejected: callers short-circuit π̂ = 0 (γ = ∞)
/// and π̂ = 1 (γ = 0).
pub fn gamma(phi: C64, c: f64, prior: &BgPrior) -> Result<f64> {
    let pi = prior.pi_hat;
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::BoundaryPrior(pi));
    }
    Ok(log_gamma(phi, c, prior).clamp(-EXP_CLAMP, EXP_CLAMP).exp())
}

/// Returns `(1/(1 + e^s), e^s/(1 + e^s))` without overflow.
pub(crate) fn logistic_pair(s: f64) -> (f64, f64) {
    if s > 0.0 {
        let e = (-s).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = s.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    }
}

/// `((1 + γ)⁻¹, γ (1 + γ)⁻¹)`, with the boundary priors handled explicitly.
pub fn slab_weight(phi: C64, c: f64, prior: &BgPrior) -> (f64, f64) {
    let pi = prior.pi_hat;
    if pi >= 1.0 {
        (1.0, 0.0)
    } else if pi <= 0.0 {
        (0.0, 1.0)
    } else {
        logistic_pair(log_gamma(phi, c, prior))
    }
}

/// Posterior mean F and variance G in one pass.
pub fn denoise(phi: C64, c: f64, prior: &BgPrior) -> Denoised {
    if prior.pi_hat <= 0.0 {
        return Denoised {
            mean: C64::new(0.0, 0.0),
            var: 0.0,
        };
    }
    let (psi, xi) = (prior.psi_hat, prior.xi_hat);
    let (w, w_off) = slab_weight(phi, c, prior);
    let lin = (phi * psi + xi * c) / (psi + c);
    let kappa = psi * c / (psi + c);
    // γ|F|² = w (1 − w) |lin|².
    Denoised {
        mean: lin * w,
        var: w * kappa + w * w_off * lin.norm_sqr(),
    }
}

/// F(φ, c): posterior mean.
pub fn denoise_mean(phi: C64, c: f64, prior: &BgPrior) -> C64 {
    denoise(phi, c, prior).mean
}

/// G(φ, c): posterior variance.
pub fn denoise_var(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    denoise(phi, c, prior).var
}

/// F′(φ, c) = G(φ, c) / c.
pub fn denoise_deriv(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    denoise_var(phi, c, prior) / c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::quadrature::bg_posterior_moments;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gamma_examples() {
        let p = BgPrior::zero_mean(0.5, 1.0);
        assert!((gamma(c(0.0, 0.0), 1.0, &p).unwrap() - 2.0).abs() < 1e-15);
        let p = BgPrior::zero_mean(0.05, 1.0);
        let g = gamma(c(1.0, 0.0), 0.5, &p).unwrap();
        assert!((g - 19.0 * 3.0 * (-4.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!((g - 15.025).abs() < 1e-3);
        let near_one = BgPrior::zero_mean(1.0 - 1e-12, 1.0);
        assert!(gamma(c(0.3, 0.1), 1.0, &near_one).unwrap() < 1e-10);
        assert!(matches!(gamma(c(0.0, 0.0), 1.0, &BgPrior::zero_mean(0.0, 1.0)), Err(Error::BoundaryPrior(_))));
        assert!(gamma(c(0.0, 0.0), 1.0, &BgPrior::zero_mean(1.0, 1.0)).is_err());
    }

    #[test]
    fn gamma_matches_likelihood_ratio() {
        // ((1 − π) CN(φ; 0, c)) / (π CN(φ; ξ, ψ + c)) evaluated directly.
        let cn = |z: C64, m: C64, v: f64| (-(z - m).norm_sqr() / v).exp() / (std::f64::consts::PI * v);
        let prior = BgPrior::new(0.2, c(0.4, -0.3), 0.7).unwrap();
        for phi in [c(0.1, 0.2), c(-1.0, 0.5), c(0.0, 0.0), c(2.0, -1.0)] {
            let c_ = 0.3;
            let want = 0.8 * cn(phi, c(0.0, 0.0), c_) / (0.2 * cn(phi, prior.xi_hat, 0.7 + c_));
            let got = gamma(phi, c_, &prior).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_examples() {
        assert!((denoise_mean(c(2.0, 0.0), 1.0, &BgPrior::zero_mean(1.0, 1.0)) - c(1.0, 0.0)).norm() < 1e-15);
        for (pi, psi, c_) in [(0.1, 1.0, 0.3), (0.9, 5.0, 2.0), (0.5, 0.01, 1e-3)] {
            assert_eq!(denoise_mean(c(0.0, 0.0), c_, &BgPrior::zero_mean(pi, psi)), c(0.0, 0.0));
        }
        let f = denoise_mean(c(1.0, 0.0), 0.5, &BgPrior::zero_mean(0.05, 1.0));
        assert!((f.re - 0.04160).abs() < 1e-4, "{f}");
        assert_eq!(denoise_mean(c(3.0, 1.0), 0.5, &BgPrior::zero_mean(0.0, 1.0)), c(0.0, 0.0));
    }

    #[test]
    fn var_and_deriv_examples() {
        let full = BgPrior::zero_mean(1.0, 1.0);
        for phi in [c(0.0, 0.0), c(5.0, -2.0)] {
            assert!((denoise_var(phi, 1.0, &full) - 0.5).abs() < 1e-15);
            assert!((denoise_deriv(phi, 1.0, &full) - 0.5).abs() < 1e-15);
        }
        let half = BgPrior::zero_mean(0.5, 1.0);
        assert!((denoise_var(c(0.0, 0.0), 1.0, &half) - 1.0 / 6.0).abs() < 1e-15);
        assert!((denoise_deriv(c(0.0, 0.0), 1.0, &half) - 1.0 / 6.0).abs() < 1e-15);
        let g = denoise_var(c(1.0, 0.0), 0.5, &BgPrior::zero_mean(0.05, 1.0));
        assert!((g - 0.04681).abs() < 1e-4, "{g}");
        assert_eq!(denoise_deriv(c(1.0, 1.0), 0.5, &BgPrior::zero_mean(0.0, 1.0)), 0.0);
    }

    #[test]
    fn worked_example_matches_quadrature() {
        let q = bg_posterior_moments(c(1.0, 0.0), 0.5, 0.05, c(0.0, 0.0), 1.0);
        let d = denoise(c(1.0, 0.0), 0.5, &BgPrior::zero_mean(0.05, 1.0));
        assert!((d.mean - q.mean).norm() < 1e-9);
        assert!((d.var - q.var).abs() < 1e-9);
        let q = bg_posterior_moments(c(0.0, 0.0), 1.0, 0.5, c(0.0, 0.0), 1.0);
        assert!((q.var - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn extreme_exponents_stay_finite() {
        let p = BgPrior::new(0.3, c(1e3, -2e3), 1.0).unwrap();
        for phi in [c(1e4, 0.0), c(-1e4, 1e4), c(0.0, 0.0)] {
            for c_ in [1e-4, 1.0, 1e4] {
                let d = denoise(phi, c_, &p);
                assert!(d.mean.is_finite() && d.var.is_finite());
                let (w, wo) = slab_weight(phi, c_, &p);
                assert!((0.0..=1.0).contains(&w) && (0.0..=1.0).contains(&wo));
                assert!(gamma(phi, c_, &p).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn variance_bounded_by_prior_second_moment_on_average() {
        use crate::stream::{complex_normal, stream, Purpose};
        use rand::Rng;
        // Pointwise G can exceed ψ̂ + |ξ̂|² for small π̂ (e.g. π̂ = 1e-10 near
        // the decision boundary); its average over Φ cannot.
        let p = BgPrior::zero_mean(1e-10, 1.0);
        let phi_edge = c((2.0 * (2.0 * (1.0 - 1e-10) / 1e-10f64).ln()).sqrt(), 0.0);
        assert!(denoise_var(phi_edge, 1.0, &p) > 1.0);

        let mut rng = stream(9, 0, Purpose::Oracle);
        for prior in [BgPrior::zero_mean(0.05, 1.0), BgPrior::new(0.3, c(0.5, 0.5), 0.2).unwrap()] {
            let n = 100_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let active = rng.random::<f64>() < prior.pi_hat;
                let x = if active { prior.xi_hat + complex_normal(&mut rng, prior.psi_hat) } else { c(0.0, 0.0) };
                acc += denoise_var(x + complex_normal(&mut rng, 0.5), 0.5, &prior);
            }
            assert!(acc / n as f64 <= prior.psi_hat + prior.xi_hat.norm_sqr());
        }
    }

    proptest! {
        #[test]
        fn posterior_bounds(
            pi in 0.0f64..=1.0,
            xr in -2.0f64..2.0, xi in -2.0f64..2.0,
            psi in 1e-3f64..10.0,
            pr in -5.0f64..5.0, pim in -5.0f64..5.0,
            c_ in 1e-3f64..10.0,
        ) {
            let prior = BgPrior::new(pi, c(xr, xi), psi).unwrap();
            let phi = c(pr, pim);
            let d = denoise(phi, c_, &prior);
            prop_assert!(d.var >= 0.0);
            let lin = (phi * psi + prior.xi_hat * c_) / (psi + c_);
            // Mixture of a spike and CN(lin, κ): variance ≤ κ + |lin|²/4.
            let kappa = psi * c_ / (psi + c_);
            prop_assert!(d.var <= (kappa + 0.25 * lin.norm_sqr()) * (1.0 + 1e-12));
            prop_assert!(d.mean.norm() <= lin.norm() * (1.0 + 1e-12));
            prop_assert!((denoise_deriv(phi, c_, &prior) * c_ - d.var).abs() <= 1e-12 * d.var.max(1e-300));
        }
    }
}
