//! Bayes activity detection, channel estimation and the NMSE / DEP metrics.

use nalgebra::{DMatrix, DVector};

use crate::amp::AmpState;
use crate::denoiser::BgPrior;
use crate::sequential::{PosteriorSummary, SequenceRun};
use crate::{Error, Result, C64};

/// Value reported by [`metric_nmse`] for an exact estimate.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// Sufficient statistic T(φ) = |φ + (c/ψ̂) ξ̂|².
pub fn llr_statistic(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    (phi + prior.xi_hat * (c / prior.psi_hat)).norm_sqr()
}

/// ln p(φ | active) / p(φ | idle) as a function of the sufficient statistic:
/// ln(c/(ψ̂+c)) + ψ̂ T / (c(ψ̂+c)) − |ξ̂|²/ψ̂.
pub fn llr_from_statistic(stat: f64, c: f64, prior: &BgPrior) -> f64 {
    let psi = prior.psi_hat;
    (c / (psi + c)).ln() + psi * stat / (c * (psi + c)) - prior.xi_hat.norm_sqr() / psi
}

pub fn llr(phi: C64, c: f64, prior: &BgPrior) -> f64 {
    llr_from_statistic(llr_statistic(phi, c, prior), c, prior)
}

/// Bayes threshold on the LLR: the prior log-odds ln((1 − π̂)/π̂).
pub fn bayes_threshold(prior: &BgPrior) -> f64 {
    ((1.0 - prior.pi_hat) / prior.pi_hat).ln()
}

/// LLR test; `threshold` defaults to [`bayes_threshold`].
pub fn llr_detect(phi: C64, c: f64, prior: &BgPrior, threshold: Option<f64>) -> bool {
    llr(phi, c, prior) >= threshold.unwrap_or_else(|| bayes_threshold(prior))
}

/// Active iff π̄ ≥ 1/2 (ties go to active).
pub fn bayes_detect(post: &PosteriorSummary) -> Vec<bool> {
    post.pi_bar.iter().map(|&p| p >= 0.5).collect()
}

/// For ξ̂ = 0 the Bayes rule is |φ|² ≥ threshold; this is the cut point where
/// γ(φ) = 1 (zero if the prior alone already favours activity).
pub fn energy_threshold(c: f64, prior: &BgPrior) -> f64 {
    let psi = prior.psi_hat;
    let log_odds = bayes_threshold(prior) + ((psi + c) / c).ln();
    (c * (psi + c) / psi * log_odds).max(0.0)
}

/// x̂ = μ of the converged AMP state.
pub fn channel_estimate(amp_out: &AmpState) -> DVector<C64> {
    amp_out.mu.clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub decisions: DMatrix<bool>,
    pub channel_est: DMatrix<C64>,
    pub sufficient_stats: DMatrix<f64>,
}

pub fn detect(run: &SequenceRun) -> DetectionResult {
    let n = run.adts.first().map_or(0, |a| a.amp.mu.len());
    let t_len = run.adts.len();
    let mut decisions = DMatrix::from_element(n, t_len, false);
    let mut stats = DMatrix::zeros(n, t_len);
    for (t, adt) in run.adts.iter().enumerate() {
        for (i, d) in bayes_detect(&adt.posterior).into_iter().enumerate() {
            decisions[(i, t)] = d;
        }
        for (i, p) in adt.prior.priors.iter().enumerate() {
            stats[(i, t)] = llr_statistic(adt.amp.phi[i], adt.amp.c, p);
        }
    }
    DetectionResult {
        decisions,
        channel_est: run.estimates(),
        sufficient_stats: stats,
    }
}

/// Error and reference energies, kept separate so trials can be pooled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NmseAccumulator {
    pub error: f64,
    pub energy: f64,
}

impl NmseAccumulator {
    pub fn add(
        &mut self,
        est: &DMatrix<C64>,
        truth: &DMatrix<C64>,
        mask: Option<&DMatrix<bool>>,
    ) -> Result<()> {
        if est.shape() != truth.shape() || mask.is_some_and(|m| m.shape() != truth.shape()) {
            return Err(Error::Dimension(format!(
                "estimate {:?} vs truth {:?}",
                est.shape(),
                truth.shape()
            )));
        }
        for (k, (e, x)) in est.iter().zip(truth.iter()).enumerate() {
            if mask.is_none_or(|m| m[k]) {
                self.push(*e, *x);
            }
        }
        Ok(())
    }

    pub fn push(&mut self, est: C64, truth: C64) {
        self.error += (est - truth).norm_sqr();
        self.energy += truth.norm_sqr();
    }

    pub fn db(&self) -> Result<f64> {
        if self.energy.is_nan() || self.energy <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        let ratio = self.error / self.energy;
        Ok(if ratio > 0.0 { (10.0 * ratio.log10()).max(NMSE_FLOOR_DB) } else { NMSE_FLOOR_DB })
    }
}

/// 10 log10(Σ|est − truth|² / Σ|truth|²) over the masked entries.
pub fn metric_nmse(est: &DMatrix<C64>, truth: &DMatrix<C64>, mask: Option<&DMatrix<bool>>) -> Result<f64> {
    let mut acc = NmseAccumulator::default();
    acc.add(est, truth, mask)?;
    acc.db()
}

/// Detection error counts, poolable across ADTs and trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepCounts {
    pub false_alarms: u64,
    pub inactive: u64,
    pub misses: u64,
    pub active: u64,
}

impl DepCounts {
    pub fn tally(decisions: &DMatrix<bool>, truth: &DMatrix<bool>) -> Result<Self> {
        if decisions.shape() != truth.shape() {
            return Err(Error::Dimension(format!(
                "decisions {:?} vs activity {:?}",
                decisions.shape(),
                truth.shape()
            )));
        }
        let mut c = DepCounts::default();
        for (&d, &a) in decisions.iter().zip(truth.iter()) {
            c.push(d, a);
        }
        Ok(c)
    }

    pub fn push(&mut self, decision: bool, active: bool) {
        if active {
            self.active += 1;
            self.misses += u64::from(!decision);
        } else {
            self.inactive += 1;
            self.false_alarms += u64::from(decision);
        }
    }

    pub fn merge(&mut self, other: &DepCounts) {
        self.false_alarms += other.false_alarms;
        self.inactive += other.inactive;
        self.misses += other.misses;
        self.active += other.active;
    }

    pub fn p_fa(&self) -> f64 {
        rate(self.false_alarms, self.inactive)
    }

    pub fn p_md(&self) -> f64 {
        rate(self.misses, self.active)
    }

    /// P_FA + P_MD; an empty class contributes zero.
    pub fn dep(&self) -> f64 {
        self.p_fa() + self.p_md()
    }
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metric_dep(decisions: &DMatrix<bool>, truth_activity: &DMatrix<bool>) -> Result<f64> {
    Ok(DepCounts::tally(decisions, truth_activity)?.dep())
}
