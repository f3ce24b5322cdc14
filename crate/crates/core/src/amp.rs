//! The per-ADT AMP loop.
//!
//! One sweep:
//!
//! ```text
//! φ  = Sᴴ z + μ
//! μ⁺ = F(φ, c),  v⁺ = G(φ, c)
//! z⁺ = y − S μ⁺ + (z / L) Σₙ F′(φₙ, c)
//! c⁺ = ‖z⁺‖² / L            (empirical)   or   σ_w² + (1/L) Σₙ v⁺ₙ  (theoretical)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::denoiser::{denoise, BgPrior};
use crate::scenario::SystemConfig;
use crate::{Error, Result, C64};

/// Floor on the relative-change denominator.
const REL_EPS: f64 = 1e-30;

/// How the effective noise level c is refreshed after each sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CUpdate {
    /// Residual energy per measurement, ‖z‖² / L.
    #[default]
    Empirical,
    /// σ_w² + (1/L) Σ v.
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Early exit once ‖μ⁺ − μ‖ / max(‖μ⁺‖, ε) drops below this.
    pub tol: f64,
    pub c0_factor: f64,
    pub noise_var: f64,
    pub c_update: CUpdate,
}

impl AmpConfig {
    pub fn from_system(cfg: &SystemConfig) -> Self {
        AmpConfig {
            max_iters: cfg.amp_iters,
            tol: 1e-6,
            c0_factor: cfg.c0_factor,
            noise_var: cfg.noise_var(),
            c_update: CUpdate::Empirical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    /// Posterior means μ (length N).
    pub mu: DVector<C64>,
    /// Posterior variances v (length N).
    pub v: DVector<f64>,
    /// Onsager-corrected residual z (length L).
    pub z: DVector<C64>,
    /// Effective noise level c.
    pub c: f64,
    /// Pseudo-observations φ (length N).
    pub phi: DVector<C64>,
    pub iter: usize,
    pub converged: bool,
}

pub fn amp_init(y: &DVector<C64>, n_users: usize, cfg: &AmpConfig) -> AmpState {
    AmpState {
        mu: DVector::zeros(n_users),
        v: DVector::zeros(n_users),
        z: y.clone(),
        c: cfg.c0_factor * cfg.noise_var,
        phi: DVector::zeros(n_users),
        iter: 0,
        converged: false,
    }
}

fn check_dims(s: &DMatrix<C64>, y: &DVector<C64>, priors: &[BgPrior]) -> Result<()> {
    if s.nrows() != y.len() || s.ncols() != priors.len() {
        return Err(Error::Dimension(format!(
            "S is {}×{}, y has {} entries, {} priors",
            s.nrows(),
            s.ncols(),
            y.len(),
            priors.len()
        )));
    }
    Ok(())
}

/// One AMP sweep. Returns the updated state; `phi` holds the pseudo-observations
/// the sweep denoised.
pub fn amp_iterate(
    state: &AmpState,
    s: &DMatrix<C64>,
    y: &DVector<C64>,
    priors: &[BgPrior],
    cfg: &AmpConfig,
) -> Result<AmpState> {
    check_dims(s, y, priors)?;
    let l = y.len() as f64;
    let iter = state.iter + 1;
    let c = state.c;
    let phi = s.ad_mul(&state.z) + &state.mu;

    let mut mu = DVector::zeros(priors.len());
    let mut v = DVector::zeros(priors.len());
    let mut deriv_sum = 0.0;
    for (n, prior) in priors.iter().enumerate() {
        let d = denoise(phi[n], c, prior);
        mu[n] = d.mean;
        v[n] = d.var;
        deriv_sum += d.var / c;
    }
    if !deriv_sum.is_finite() {
        return Err(Error::Divergence { iter, what: "Onsager term" });
    }
    if mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::Divergence { iter, what: "posterior mean" });
    }

    let z = y - s * &mu + &state.z * C64::new(deriv_sum / l, 0.0);
    let c_next = match cfg.c_update {
        CUpdate::Empirical => z.norm_squared() / l,
        CUpdate::Theoretical => cfg.noise_var + v.sum() / l,
    };
    if !c_next.is_finite() {
        return Err(Error::Divergence { iter, what: "noise level c" });
    }
    Ok(AmpState {
        mu,
        v,
        z,
        c: c_next.max(f64::MIN_POSITIVE),
        phi,
        iter,
        converged: false,
    })
}

/// Runs AMP to convergence or the iteration cap. On return `phi = Sᴴ z + μ`
/// for the final iterate, so `(phi, c)` is the Gaussian pseudo-likelihood of
/// every user.
pub fn amp_run(y: &DVector<C64>, s: &DMatrix<C64>, priors: &[BgPrior], cfg: &AmpConfig) -> Result<AmpState> {
    check_dims(s, y, priors)?;
    let mut state = amp_init(y, priors.len(), cfg);
    if cfg.max_iters == 0 {
        return Ok(state);
    }
    for _ in 0..cfg.max_iters {
        let next = amp_iterate(&state, s, y, priors, cfg)?;
        let change = (&next.mu - &state.mu).norm() / next.mu.norm().max(REL_EPS);
        state = next;
        if change < cfg.tol {
            state.converged = true;
            break;
        }
    }
    state.phi = s.ad_mul(&state.z) + &state.mu;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(noise_var: f64) -> AmpConfig {
        AmpConfig {
            max_iters: 50,
            tol: 1e-6,
            c0_factor: 100.0,
            noise_var,
            c_update: CUpdate::Empirical,
        }
    }

    #[test]
    fn init_state() {
        let y = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)]);
        let st = amp_init(&y, 3, &cfg(1e-13));
        assert!((st.c - 1e-11).abs() < 1e-25);
        assert_eq!(st.z, y);
        assert!(st.mu.iter().all(|m| m.norm() == 0.0));
        assert_eq!(st.iter, 0);
    }

    #[test]
    fn zero_budget_returns_init() {
        let y = DVector::from_element(2, C64::new(1.0, 0.0));
        let s = DMatrix::from_element(2, 3, C64::new(0.5, 0.0));
        let priors = vec![BgPrior::zero_mean(0.1, 1.0); 3];
        let c = AmpConfig { max_iters: 0, ..cfg(0.1) };
        let st = amp_run(&y, &s, &priors, &c).unwrap();
        assert_eq!(st, amp_init(&y, 3, &c));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let y = DVector::from_element(2, C64::new(1.0, 0.0));
        let s = DMatrix::from_element(3, 3, C64::new(0.5, 0.0));
        let priors = vec![BgPrior::zero_mean(0.1, 1.0); 3];
        assert!(matches!(amp_run(&y, &s, &priors, &cfg(0.1)), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_observation_keeps_zero_state() {
        let y = DVector::zeros(4);
        let s = DMatrix::from_fn(4, 6, |i, j| C64::new((i + 2 * j) as f64 * 0.1, 0.3));
        let priors = vec![BgPrior::zero_mean(0.2, 1.0); 6];
        let mut st = amp_init(&y, 6, &cfg(0.01));
        for _ in 0..5 {
            st = amp_iterate(&st, &s, &y, &priors, &cfg(0.01)).unwrap();
            assert!(st.mu.iter().all(|m| m.norm() == 0.0));
        }
    }
}
