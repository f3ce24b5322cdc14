//! The S-AMP outer loop.
//!
//! After the AMP loop of ADT t converges, every user is summarised by the
//! Gaussian pseudo-likelihood CN(x; φₙ, c). Combined with the prior
//! (π̂, ξ̂, ψ̂) this gives a two-component posterior over (a, h), which is
//! projected onto a product Bernoulli × Gaussian by moment matching and then
//! pushed through the Markov activity chain and the AR-1 channel to form the
//! prior of ADT t + 1.

use nalgebra::{DMatrix, DVector};

use crate::amp::{amp_run, AmpConfig, AmpState};
use crate::denoiser::{log_likelihood_ratio, logistic_pair, BgPrior};
use crate::scenario::{Scenario, SystemConfig, UserProfile};
use crate::{Error, Result, C64};

/// Activity priors are clipped to [PI_CLIP, 1 − PI_CLIP] before the denoiser
/// sees them.
pub const PI_CLIP: f64 = 1e-12;

/// Relative floor on ψ̄ (the variance formula is a difference of near-equal terms).
const PSI_FLOOR: f64 = 1e-18;

/// Largest horizon accepted by [`exact_sssm_filter`].
pub const EXACT_FILTER_MAX_ADTS: usize = 12;

/// Per-user priors of the current ADT.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalPriorState {
    pub priors: Vec<BgPrior>,
}

impl TemporalPriorState {
    /// First-ADT prior (λ, 0, ρₙ).
    pub fn initial(profiles: &[UserProfile], cfg: &SystemConfig) -> Self {
        TemporalPriorState {
            priors: profiles
                .iter()
                .map(|p| BgPrior::zero_mean(cfg.lambda, p.channel_var))
                .collect(),
        }
    }

    /// Priors handed to the denoiser, with interior π̂ clipped.
    pub fn denoiser_priors(&self) -> Vec<BgPrior> {
        self.priors
            .iter()
            .map(|p| {
                let pi = p.pi_hat;
                let pi = if pi > 0.0 && pi < 1.0 { pi.clamp(PI_CLIP, 1.0 - PI_CLIP) } else { pi };
                BgPrior { pi_hat: pi, ..*p }
            })
            .collect()
    }
}

/// π̃, κ̃, τ̃ of one user: the active-branch posterior is CN(h; τ̃, κ̃) and π̃
/// is the activity posterior under a flat activity prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTerms {
    pub pi_tilde: f64,
    pub kappa_tilde: f64,
    pub tau_tilde: C64,
}

/// Moment-matched (π̄, ξ̄, ψ̄) of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedMoments {
    pub pi_bar: f64,
    pub xi_bar: C64,
    pub psi_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentIntermediate {
    pub pi_tilde: Vec<f64>,
    pub kappa_tilde: Vec<f64>,
    pub tau_tilde: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorSummary {
    pub pi_bar: Vec<f64>,
    pub xi_bar: Vec<C64>,
    pub psi_bar: Vec<f64>,
    pub intermediate: MomentIntermediate,
}

impl PosteriorSummary {
    pub fn moments(&self, n: usize) -> MatchedMoments {
        MatchedMoments {
            pi_bar: self.pi_bar[n],
            xi_bar: self.xi_bar[n],
            psi_bar: self.psi_bar[n],
        }
    }

    fn push(&mut self, t: MomentTerms, m: MatchedMoments) {
        self.intermediate.pi_tilde.push(t.pi_tilde);
        self.intermediate.kappa_tilde.push(t.kappa_tilde);
        self.intermediate.tau_tilde.push(t.tau_tilde);
        self.pi_bar.push(m.pi_bar);
        self.xi_bar.push(m.xi_bar);
        self.psi_bar.push(m.psi_bar);
    }
}

/// Moment matching of one user given the pseudo-likelihood CN(x; φ, c).
pub fn moment_match(phi: C64, c: f64, prior: &BgPrior) -> (MomentTerms, MatchedMoments) {
    let (pi, xi, psi) = (prior.pi_hat, prior.xi_hat, prior.psi_hat);
    let kappa = c * psi / (c + psi);
    let tau = (phi / c + xi / psi) * kappa;
    let llr = log_likelihood_ratio(phi, c, prior);
    // π̃ = (1 + (π̂/(1−π̂)) γ)⁻¹ = (1 + e^llr)⁻¹.
    let pi_tilde = logistic_pair(llr).0;
    let terms = MomentTerms {
        pi_tilde,
        kappa_tilde: kappa,
        tau_tilde: tau,
    };

    let pi_bar = if pi <= 0.0 {
        0.0
    } else if pi >= 1.0 {
        1.0
    } else {
        // π̂π̃ / (π̂π̃ + (1−π̂)(1−π̃)) in log-odds form: logit π̄ = logit π̂ − llr.
        let pi = pi.clamp(PI_CLIP, 1.0 - PI_CLIP);
        logistic_pair(llr - (pi / (1.0 - pi)).ln()).0
    };
    let xi_bar = tau * pi_bar + xi * (1.0 - pi_bar);
    // Law of total variance in centred form, free of cancellation.
    let spread = pi_bar * (1.0 - pi_bar) * (tau - xi).norm_sqr();
    let psi_bar = (pi_bar * kappa + (1.0 - pi_bar) * psi + spread).max(PSI_FLOOR * (xi.norm_sqr() + psi));
    (
        terms,
        MatchedMoments {
            pi_bar,
            xi_bar,
            psi_bar,
        },
    )
}

/// Moment matching for every user from the converged AMP state.
pub fn posterior_update(amp_out: &AmpState, prior: &TemporalPriorState) -> Result<PosteriorSummary> {
    if amp_out.phi.len() != prior.priors.len() {
        return Err(Error::Dimension(format!(
            "{} pseudo-observations for {} priors",
            amp_out.phi.len(),
            prior.priors.len()
        )));
    }
    let mut out = PosteriorSummary::default();
    for (phi, p) in amp_out.phi.iter().zip(&prior.priors) {
        let (t, m) = moment_match(*phi, amp_out.c, p);
        out.push(t, m);
    }
    Ok(out)
}

/// Pushes one user's matched posterior through the activity chain and the
/// AR-1 channel.
pub fn propagate_one(m: &MatchedMoments, profile: &UserProfile, cfg: &SystemConfig) -> BgPrior {
    let eta = profile.ar_coeff;
    // p10 (1 − π̄) + (1 − p01) π̄ = p10 + (1 − r) π̄.
    let pi_hat = cfg.p10() + cfg.activity_memory() * m.pi_bar;
    BgPrior {
        pi_hat,
        xi_hat: m.xi_bar * eta,
        psi_hat: eta * eta * m.psi_bar + (1.0 - eta * eta) * profile.channel_var,
    }
}

pub fn prior_propagate(
    post: &PosteriorSummary,
    profiles: &[UserProfile],
    cfg: &SystemConfig,
) -> TemporalPriorState {
    TemporalPriorState {
        priors: profiles
            .iter()
            .enumerate()
            .map(|(n, p)| propagate_one(&post.moments(n), p, cfg))
            .collect(),
    }
}

/// Where each ADT's prior comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// Moment-matched history (S-AMP).
    Sequential,
    /// (λ, 0, ρₙ) at every ADT (AMP-MMSE).
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdtOutput {
    pub prior: TemporalPriorState,
    pub amp: AmpState,
    pub posterior: PosteriorSummary,
}

/// Per-ADT trajectory of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRun {
    pub adts: Vec<AdtOutput>,
}

impl SequenceRun {
    /// N × T matrix of x̂ = μ.
    pub fn estimates(&self) -> DMatrix<C64> {
        let cols: Vec<_> = self.adts.iter().map(|a| a.amp.mu.clone()).collect();
        DMatrix::from_columns(&cols)
    }

    /// N × T matrix of π̄.
    pub fn pi_bar(&self) -> DMatrix<f64> {
        let cols: Vec<_> = self
            .adts
            .iter()
            .map(|a| DVector::from_column_slice(&a.posterior.pi_bar))
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// The shared ADT loop behind S-AMP and AMP-MMSE.
pub fn run_adts(scenario: &Scenario, cfg: &SystemConfig, mode: PriorMode) -> Result<SequenceRun> {
    let amp_cfg = AmpConfig {
        noise_var: scenario.noise_var,
        ..AmpConfig::from_system(cfg)
    };
    let initial = TemporalPriorState::initial(&scenario.profiles, cfg);
    let mut prior = initial.clone();
    let mut adts = Vec::with_capacity(scenario.n_adts());
    for t in 0..scenario.n_adts() {
        let y = scenario.received.column(t).into_owned();
        let amp = amp_run(&y, &scenario.pilots, &prior.denoiser_priors(), &amp_cfg).map_err(|e| e.at_adt(t + 1))?;
        let posterior = posterior_update(&amp, &prior).map_err(|e| e.at_adt(t + 1))?;
        let next = match mode {
            PriorMode::Sequential => prior_propagate(&posterior, &scenario.profiles, cfg),
            PriorMode::Static => initial.clone(),
        };
        adts.push(AdtOutput {
            prior: std::mem::replace(&mut prior, next),
            amp,
            posterior,
        });
    }
    Ok(SequenceRun { adts })
}

pub fn s_amp_run(scenario: &Scenario, cfg: &SystemConfig) -> Result<SequenceRun> {
    run_adts(scenario, cfg, PriorMode::Sequential)
}

/// One Gaussian component of the exact filter density, indexed by an
/// activity path; `active` is the path's current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub active: bool,
    pub mean: C64,
    pub var: f64,
}

/// Exact posterior of (a, h) at one ADT.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub p_active: f64,
    pub mean_h: C64,
    pub second_moment_h: f64,
    pub components: Vec<MixtureComponent>,
}

impl ExactPosterior {
    pub fn var_h(&self) -> f64 {
        self.second_moment_h - self.mean_h.norm_sqr()
    }
}

fn ln_cn(z: C64, var: f64) -> f64 {
    -z.norm_sqr() / var - (std::f64::consts::PI * var).ln()
}

/// Exact filter for one user observed through φₜ = aₜhₜ + √cₜ v. The filter
/// density is a 2ᵗ-component Gaussian mixture (one Kalman filter per
/// activity path), so the horizon is capped.
pub fn exact_sssm_filter(
    observations: &[C64],
    noise: &[f64],
    profile: &UserProfile,
    cfg: &SystemConfig,
) -> Result<Vec<ExactPosterior>> {
    let t_len = observations.len();
    if t_len > EXACT_FILTER_MAX_ADTS {
        return Err(Error::HorizonTooLong {
            max: EXACT_FILTER_MAX_ADTS,
            got: t_len,
        });
    }
    if noise.len() != t_len {
        return Err(Error::Dimension(format!("{} observations, {} noise levels", t_len, noise.len())));
    }
    let rho = profile.channel_var;
    let eta = profile.ar_coeff;
    let (p01, p10, lam) = (cfg.p01(), cfg.p10(), cfg.lambda);
    // (log-weight, active, mean, var)
    let mut comps: Vec<(f64, bool, C64, f64)> = vec![
        ((1.0 - lam).ln(), false, C64::new(0.0, 0.0), rho),
        (lam.ln(), true, C64::new(0.0, 0.0), rho),
    ];
    let mut out = Vec::with_capacity(t_len);
    for (t, (&phi, &c)) in observations.iter().zip(noise).enumerate() {
        if t > 0 {
            let mut next = Vec::with_capacity(2 * comps.len());
            for &(lw, a, m, p) in &comps {
                let (m, p) = (m * eta, eta * eta * p + (1.0 - eta * eta) * rho);
                let (to_off, to_on) = if a { (p01, 1.0 - p01) } else { (1.0 - p10, p10) };
                next.push((lw + to_off.ln(), false, m, p));
                next.push((lw + to_on.ln(), true, m, p));
            }
            comps = next;
        }
        for comp in comps.iter_mut() {
            let (lw, a, m, p) = *comp;
            *comp = if a {
                let gain = p / (p + c);
                (lw + ln_cn(phi - m, p + c), a, m + (phi - m) * gain, p * c / (p + c))
            } else {
                (lw + ln_cn(phi, c), a, m, p)
            };
        }
        let max = comps.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = comps.iter().map(|c| (c.0 - max).exp()).sum();
        let norm = max + total.ln();
        for comp in comps.iter_mut() {
            comp.0 -= norm;
        }
        let components: Vec<MixtureComponent> = comps
            .iter()
            .map(|&(lw, active, mean, var)| MixtureComponent {
                weight: lw.exp(),
                active,
                mean,
                var,
            })
            .collect();
        let p_active = components.iter().filter(|c| c.active).map(|c| c.weight).sum();
        let mean_h = components.iter().map(|c| c.mean * c.weight).sum();
        let second_moment_h = components.iter().map(|c| c.weight * (c.mean.norm_sqr() + c.var)).sum();
        out.push(ExactPosterior {
            p_active,
            mean_h,
            second_moment_h,
            components,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::quadrature::two_component_moments;
    use crate::denoiser::gamma;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn profile(rho: f64, eta: f64) -> UserProfile {
        UserProfile {
            distance_km: 1.0,
            speed_mps: 0.0,
            pathloss_db: 0.0,
            channel_var: rho,
            doppler_hz: 0.0,
            ar_coeff: eta,
        }
    }

    #[test]
    fn worked_example() {
        let (t, m) = moment_match(c(0.0, 0.0), 1.0, &BgPrior::zero_mean(0.5, 1.0));
        assert!((t.pi_tilde - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.kappa_tilde - 0.5).abs() < 1e-15);
        assert_eq!(t.tau_tilde, c(0.0, 0.0));
        assert!((m.pi_bar - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.xi_bar, c(0.0, 0.0));
        assert!((m.psi_bar - 5.0 / 6.0).abs() < 1e-15);
        let q = two_component_moments(c(0.0, 0.0), 1.0, 0.5, c(0.0, 0.0), 1.0);
        assert!((q.p_active - 1.0 / 3.0).abs() < 1e-9);
        assert!((q.var - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn branch_limits() {
        let prior = BgPrior::new(0.3, c(0.2, -0.4), 0.8).unwrap();
        let phi = c(0.7, 0.1);
        let (t, _) = moment_match(phi, 0.4, &prior);
        let (_, off) = moment_match(phi, 0.4, &BgPrior { pi_hat: 0.0, ..prior });
        assert_eq!((off.pi_bar, off.xi_bar, off.psi_bar), (0.0, prior.xi_hat, prior.psi_hat));
        let (_, on) = moment_match(phi, 0.4, &BgPrior { pi_hat: 1.0, ..prior });
        assert_eq!(on.pi_bar, 1.0);
        assert!((on.xi_bar - t.tau_tilde).norm() < 1e-15);
        assert!((on.psi_bar - t.kappa_tilde).abs() < 1e-15);
        assert!(t.kappa_tilde < 0.4f64.min(0.8));
    }

    #[test]
    fn pi_bar_is_one_over_one_plus_gamma() {
        let prior = BgPrior::new(0.07, c(0.3, 0.3), 1.3).unwrap();
        for phi in [c(0.0, 0.0), c(1.0, -2.0), c(-0.3, 0.2)] {
            let (_, m) = moment_match(phi, 0.2, &prior);
            let g = gamma(phi, 0.2, &prior).unwrap();
            assert!((m.pi_bar - 1.0 / (1.0 + g)).abs() < 1e-12);
        }
    }

    #[test]
    fn propagation_examples() {
        let cfg = SystemConfig {
            lambda: 0.05,
            r_scale: 0.1,
            ..SystemConfig::default()
        };
        let stat = propagate_one(
            &MatchedMoments { pi_bar: 0.05, xi_bar: c(0.0, 0.0), psi_bar: 1.0 },
            &profile(1.0, 0.5),
            &cfg,
        );
        assert!((stat.pi_hat - 0.05).abs() < 1e-15);

        let p = propagate_one(
            &MatchedMoments { pi_bar: 0.3, xi_bar: c(1.0, 0.0), psi_bar: 0.2 },
            &profile(1.0, 0.9974),
            &cfg,
        );
        assert!((p.pi_hat - 0.275).abs() < 1e-12);
        assert!((p.xi_hat - c(0.9974, 0.0)).norm() < 1e-15);
        assert!((p.psi_hat - 0.20416).abs() < 1e-5);

        let m = MatchedMoments { pi_bar: 0.4, xi_bar: c(0.3, -0.2), psi_bar: 0.6 };
        let frozen = propagate_one(&m, &profile(2.0, 1.0), &cfg);
        assert_eq!((frozen.xi_hat, frozen.psi_hat), (m.xi_bar, m.psi_bar));
        let reset = propagate_one(&m, &profile(2.0, 0.0), &cfg);
        assert_eq!(reset.xi_hat.norm(), 0.0);
        assert_eq!(reset.psi_hat, 2.0);
    }

    #[test]
    fn psi_hat_relaxes_to_rho() {
        let cfg = SystemConfig::default();
        let prof = profile(3.0, 0.9);
        let mut prior = BgPrior::zero_mean(cfg.lambda, 3.0);
        let mut max_psi_bar: f64 = 0.0;
        for k in 0..400 {
            // A strong observation first, then uninformative ones.
            let (phi, c_) = if k == 0 { (c(2.0, 1.0), 0.01) } else { (c(0.0, 0.0), 1e12) };
            let (_, m) = moment_match(phi, c_, &prior);
            max_psi_bar = max_psi_bar.max(m.psi_bar);
            prior = propagate_one(&MatchedMoments { pi_bar: cfg.lambda, ..m }, &prof, &cfg);
            assert!(prior.psi_hat > 0.0 && prior.psi_hat <= 3.0 + max_psi_bar);
        }
        assert!((prior.psi_hat - 3.0).abs() < 1e-9);
    }

    #[test]
    fn exact_filter_first_step_is_the_matched_posterior() {
        let cfg = SystemConfig::default();
        let prof = profile(1.5, 0.8);
        let phi = c(0.9, -0.4);
        let ex = exact_sssm_filter(&[phi], &[0.3], &prof, &cfg).unwrap();
        let (_, m) = moment_match(phi, 0.3, &BgPrior::zero_mean(cfg.lambda, 1.5));
        assert!((ex[0].p_active - m.pi_bar).abs() < 1e-12);
        assert!((ex[0].mean_h - m.xi_bar).norm() < 1e-12);
        assert!((ex[0].var_h() - m.psi_bar).abs() < 1e-12);
    }

    #[test]
    fn exact_filter_rejects_long_horizons() {
        let cfg = SystemConfig::default();
        let obs = vec![c(0.0, 0.0); 13];
        let err = exact_sssm_filter(&obs, &[1.0; 13], &profile(1.0, 0.5), &cfg).unwrap_err();
        assert!(matches!(err, Error::HorizonTooLong { max: 12, got: 13 }));
    }
}
