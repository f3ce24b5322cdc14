//! Brute-force numerical oracles, independent of the closed forms they check.
//!
//! Continuous posterior components are integrated with the trapezoid rule on
//! a square grid over the complex plane, evaluating the unnormalised density
//! `prior(x) · likelihood(φ | x)` pointwise. Point masses are added exactly.

use crate::C64;

/// Grid half-width in units of the component's posterior standard deviation.
const HALF_WIDTH: f64 = 12.0;
/// Grid points per standard deviation.
const PER_SIGMA: f64 = 4.0;

fn ln_cn(z: C64, mean: C64, var: f64) -> f64 {
    -(z - mean).norm_sqr() / var - (std::f64::consts::PI * var).ln()
}

/// Moments of a positive measure on ℂ: log total mass, mean, and E|x − mean|²
/// normalised by the mass.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Component {
    log_mass: f64,
    mean: C64,
    var: f64,
}

/// Trapezoid integration of `exp(log_density)` over a square grid centred at
/// `center` with spacing `sigma / PER_SIGMA`.
fn integrate<F: Fn(C64) -> f64>(log_density: F, center: C64, sigma: f64) -> Component {
    let h = sigma / PER_SIGMA;
    let k = (HALF_WIDTH * PER_SIGMA).ceil() as i64;
    let pts: Vec<C64> = (-k..=k)
        .flat_map(|i| (-k..=k).map(move |j| center + C64::new(i as f64 * h, j as f64 * h)))
        .collect();
    let logs: Vec<f64> = pts.iter().map(|&x| log_density(x)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    // The integrand is negligible at the boundary, so interior weights suffice.
    let mass: f64 = w.iter().sum();
    let mean = pts.iter().zip(&w).map(|(x, wi)| x * wi).sum::<C64>() / mass;
    let var = pts.iter().zip(&w).map(|(x, wi)| (x - mean).norm_sqr() * wi).sum::<f64>() / mass;
    Component {
        log_mass: peak + mass.ln() + 2.0 * h.ln(),
        mean,
        var,
    }
}

/// Mean and variance of a finite mixture by the law of total variance.
fn combine(parts: &[Component]) -> (Vec<f64>, C64, f64) {
    let peak = parts.iter().map(|p| p.log_mass).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = parts.iter().map(|p| (p.log_mass - peak).exp()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let mean = parts.iter().zip(&w).map(|(p, wi)| p.mean * wi).sum::<C64>();
    let var = parts
        .iter()
        .zip(&w)
        .map(|(p, wi)| wi * (p.var + (p.mean - mean).norm_sqr()))
        .sum();
    (w, mean, var)
}

/// Posterior summary returned by the oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMoments {
    pub mean: C64,
    pub var: f64,
    pub p_active: f64,
}

/// Scale of the slab posterior: √(ψc/(ψ + c)), used only to size the grid.
fn slab_sigma(c: f64, psi: f64) -> f64 {
    (psi * c / (psi + c)).sqrt()
}

/// Centre of the slab posterior, used only to place the grid.
fn slab_center(phi: C64, c: f64, xi: C64, psi: f64) -> C64 {
    (phi * psi + xi * c) / (psi + c)
}

/// Posterior mean / variance of X under the prior (1−π)δ(x) + π CN(x; ξ, ψ)
/// and observation φ = x + CN(0, c).
pub fn bg_posterior_moments(phi: C64, c: f64, pi: f64, xi: C64, psi: f64) -> QuadMoments {
    let zero = C64::new(0.0, 0.0);
    let mut parts = Vec::new();
    if pi < 1.0 {
        parts.push(Component {
            log_mass: (1.0 - pi).ln() + ln_cn(phi, zero, c),
            mean: zero,
            var: 0.0,
        });
    }
    if pi > 0.0 {
        let mut slab = integrate(
            |x| ln_cn(x, xi, psi) + ln_cn(phi, x, c),
            slab_center(phi, c, xi, psi),
            slab_sigma(c, psi),
        );
        slab.log_mass += pi.ln();
        parts.push(slab);
    }
    let (w, mean, var) = combine(&parts);
    QuadMoments {
        mean,
        var,
        p_active: if pi >= 1.0 { 1.0 } else if pi > 0.0 { w[1] } else { 0.0 },
    }
}

/// Posterior of (a, h) under the product prior Bern(a; π) · CN(h; ξ, ψ) and
/// observation φ = a·h + CN(0, c). Returns P(a = 1 | φ), E[h | φ] and
/// Var[h | φ].
pub fn two_component_moments(phi: C64, c: f64, pi: f64, xi: C64, psi: f64) -> QuadMoments {
    let zero = C64::new(0.0, 0.0);
    let mut parts = Vec::new();
    if pi < 1.0 {
        // Idle: h keeps its prior, φ is pure noise.
        let mut idle = integrate(|h| ln_cn(h, xi, psi), xi, psi.sqrt());
        idle.log_mass += (1.0 - pi).ln() + ln_cn(phi, zero, c);
        parts.push(idle);
    }
    if pi > 0.0 {
        let mut busy = integrate(
            |h| ln_cn(h, xi, psi) + ln_cn(phi, h, c),
            slab_center(phi, c, xi, psi),
            slab_sigma(c, psi),
        );
        busy.log_mass += pi.ln();
        parts.push(busy);
    }
    let (w, mean, var) = combine(&parts);
    QuadMoments {
        mean,
        var,
        p_active: if pi >= 1.0 { 1.0 } else if pi > 0.0 { w[1] } else { 0.0 },
    }
}

/// MMSE of the zero-mean Bernoulli-Gaussian scalar channel,
/// E|E[X | Φ] − X|² = λρ − E|E[X | Φ]|², by radial quadrature. Φ is a
/// mixture of CN(0, c) and CN(0, ρ + c); the posterior mean is radial, so
/// with u = |φ|² ~ Exp(s) the expectation is a 1-D integral in u.
pub fn bg_mmse_radial(lambda: f64, rho: f64, c: f64) -> f64 {
    let post_mean_sq = |u: f64| {
        let phi = C64::new(u.sqrt(), 0.0);
        let zero = C64::new(0.0, 0.0);
        let l0 = (1.0 - lambda).ln() + ln_cn(phi, zero, c);
        let l1 = lambda.ln() + ln_cn(phi, zero, rho + c);
        let w1 = 1.0 / (1.0 + (l0 - l1).exp());
        let shrink = rho / (rho + c);
        (w1 * shrink).powi(2) * u
    };
    let expect = |s: f64| {
        // Composite Simpson on [0, 60 s].
        let n = 20_000;
        let b = 60.0 * s;
        let h = b / n as f64;
        let f = |u: f64| post_mean_sq(u) * (-u / s).exp() / s;
        let mut acc = f(0.0) + f(b);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let e_f2 = (1.0 - lambda) * expect(c) + lambda * expect(rho + c);
    lambda * rho - e_f2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_prior_recovers_lmmse() {
        let q = bg_posterior_moments(C64::new(2.0, -1.0), 1.0, 1.0, C64::new(0.0, 0.0), 1.0);
        assert!((q.mean - C64::new(1.0, -0.5)).norm() < 1e-12);
        assert!((q.var - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mmse_limits() {
        // Always-active Gaussian: MMSE = ρc/(ρ + c).
        assert!((bg_mmse_radial(1.0 - 1e-15, 1.0, 1.0) - 0.5).abs() < 1e-9);
        // Enormous noise: nothing learned, MMSE ≈ λρ.
        assert!((bg_mmse_radial(0.1, 1.0, 1e8) - 0.1).abs() < 1e-6);
    }
}
