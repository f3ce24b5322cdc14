//! Acceptance suite shared by `samp check` and the `acceptance` test target.
//!
//! Each criterion returns a [`CheckOutcome`]; the numeric thresholds are
//! fixed here and never relaxed at run time.

pub mod kl;
pub mod quadrature;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use crate::amp::{amp_run, AmpConfig};
use crate::baselines::amp_mmse;
use crate::denoiser::{denoise, gamma, BgPrior};
use crate::experiments::{run_experiment, Algorithm, ExperimentSpec, SweepAxis, TrialMetrics};
use crate::scenario::{simulate_activity, simulate_channels, Scenario, SystemConfig, UserProfile};
use crate::sequential::{exact_sssm_filter, moment_match, propagate_one, s_amp_run, SequenceRun};
use crate::state_evolution::{se_fixpoint, se_sequential_trace, static_samples, SeParams, DEFAULT_SAMPLES};
use crate::stream::{complex_normal, stream, Purpose};
use crate::{Result, C64};

use kl::{kl_divergence, Grid, GridDensity, TransitionKernel};
use quadrature::{bg_posterior_moments, two_component_moments};

/// Seed used by every check.
pub const CHECK_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} {:>7.1}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "denoiser-oracle"),
    (2, "moment-matching-oracle"),
    (3, "degenerate-collapse"),
    (4, "temporal-gain"),
    (5, "state-evolution"),
    (6, "kl-contraction"),
    (7, "stationarity"),
    (8, "r0-monotonicity"),
    (9, "baseline-ordering"),
    (10, "determinism"),
];

/// Runs one criterion by number.
pub fn run_check(id: u8) -> Option<CheckOutcome> {
    let (_, name) = *CRITERIA.iter().find(|(i, _)| *i == id)?;
    let start = Instant::now();
    let res: Result<(bool, String)> = match id {
        1 => denoiser_oracle(),
        2 => moment_matching_oracle(),
        3 => degenerate_collapse(),
        4 => temporal_gain(),
        5 => state_evolution_consistency(),
        6 => kl_contraction(),
        7 => stationarity(),
        8 => r0_monotonicity(),
        9 => baseline_ordering(),
        10 => determinism(),
        _ => unreachable!(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = time_limit(id) {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; exceeded {limit} s budget"));
        }
    }
    Some(CheckOutcome {
        id,
        name,
        passed,
        detail,
        seconds,
    })
}

pub fn run_all() -> Vec<CheckOutcome> {
    CRITERIA.iter().filter_map(|(id, _)| run_check(*id)).collect()
}

fn time_limit(id: u8) -> Option<f64> {
    match id {
        1 => Some(30.0),
        4 => Some(300.0),
        5 => Some(180.0),
        _ => None,
    }
}

/// Random prior / observation draw shared by criteria 1 and 2.
struct Draw {
    phi: C64,
    c: f64,
    prior: BgPrior,
}

fn random_draws(n: usize, tag: u64) -> Vec<Draw> {
    let mut rng = stream(CHECK_SEED, tag, Purpose::Oracle);
    let log_uniform = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
        (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
    };
    (0..n)
        .map(|_| {
            let pi = rng.random_range(0.01..0.99);
            let xi = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let psi = log_uniform(&mut rng, 0.05, 5.0);
            let c = log_uniform(&mut rng, 0.05, 5.0);
            let active = rng.random::<f64>() < pi;
            let x = if active { xi + complex_normal(&mut rng, psi) } else { C64::new(0.0, 0.0) };
            Draw {
                phi: x + complex_normal(&mut rng, c),
                c,
                prior: BgPrior::new(pi, xi, psi).expect("valid draw"),
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn crel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

/// F and G against 2-D quadrature, relative error ≤ 1e-5.
pub fn denoiser_oracle() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for d in random_draws(200, 1) {
        let got = denoise(d.phi, d.c, &d.prior);
        let p = d.prior;
        let q = bg_posterior_moments(d.phi, d.c, p.pi_hat, p.xi_hat, p.psi_hat);
        worst = worst.max(crel(got.mean, q.mean)).max(rel(got.var, q.var));
    }
    Ok((worst <= 1e-5, format!("max relative error {worst:.2e} (limit 1e-5) over 200 draws")))
}

/// (π̄, ξ̄, ψ̄) against quadrature of the two-component posterior (relative
/// 1e-6) and π̄ = 1/(1 + γ) (absolute 1e-12).
pub fn moment_matching_oracle() -> Result<(bool, String)> {
    let (mut worst, mut ident): (f64, f64) = (0.0, 0.0);
    for d in random_draws(200, 2) {
        let p = d.prior;
        let (_, m) = moment_match(d.phi, d.c, &p);
        let q = two_component_moments(d.phi, d.c, p.pi_hat, p.xi_hat, p.psi_hat);
        worst = worst
            .max(rel(m.pi_bar, q.p_active))
            .max(crel(m.xi_bar, q.mean))
            .max(rel(m.psi_bar, q.var));
        ident = ident.max((m.pi_bar - 1.0 / (1.0 + gamma(d.phi, d.c, &p)?)).abs());
    }
    Ok((
        worst <= 1e-6 && ident <= 1e-12,
        format!("max relative error {worst:.2e} (limit 1e-6); |π̄ − 1/(1+γ)| ≤ {ident:.1e} (limit 1e-12)"),
    ))
}

fn bitwise_equal(a: &SequenceRun, b: &SequenceRun) -> bool {
    let f = |x: f64| x.to_bits();
    let cv = |x: &C64| (x.re.to_bits(), x.im.to_bits());
    a.adts.len() == b.adts.len()
        && a.adts.iter().zip(&b.adts).all(|(x, y)| {
            x.amp.mu.iter().map(cv).eq(y.amp.mu.iter().map(cv))
                && x.amp.z.iter().map(cv).eq(y.amp.z.iter().map(cv))
                && x.amp.phi.iter().map(cv).eq(y.amp.phi.iter().map(cv))
                && x.amp.v.iter().map(|&v| f(v)).eq(y.amp.v.iter().map(|&v| f(v)))
                && f(x.amp.c) == f(y.amp.c)
                && x.amp.iter == y.amp.iter
                && x.posterior.pi_bar.iter().map(|&v| f(v)).eq(y.posterior.pi_bar.iter().map(|&v| f(v)))
                && x.posterior.xi_bar.iter().map(cv).eq(y.posterior.xi_bar.iter().map(cv))
                && x.posterior.psi_bar.iter().map(|&v| f(v)).eq(y.posterior.psi_bar.iter().map(|&v| f(v)))
        })
}

/// p01 = 1 − λ, p10 = λ, η = 0: S-AMP and AMP-MMSE are bit-identical.
pub fn degenerate_collapse() -> Result<(bool, String)> {
    let cfg = SystemConfig {
        r_scale: 1.0,
        ar_coeff_override: Some(0.0),
        seed: CHECK_SEED,
        ..SystemConfig::desk()
    };
    let mut identical = 0;
    for trial in 0..10 {
        let sc = Scenario::generate(&cfg, trial)?;
        if bitwise_equal(&s_amp_run(&sc, &cfg)?, &amp_mmse(&sc, &cfg)?) {
            identical += 1;
        }
    }
    Ok((identical == 10, format!("{identical}/10 desk instances bit-identical")))
}

fn pooled_metrics(out: &crate::experiments::ExperimentOutput, algo: Algorithm) -> Option<(f64, f64)> {
    out.records
        .iter()
        .find(|r| r.algorithm == algo.name() && r.adt.is_none())
        .map(|r| (r.nmse_h_db, r.dep))
}

/// Desk profile at 33 dBm: S-AMP channel NMSE ≥ 1.5 dB below AMP-MMSE and
/// DEP ≤ 0.6 × AMP-MMSE DEP.
pub fn temporal_gain() -> Result<(bool, String)> {
    let base = SystemConfig {
        seed: CHECK_SEED,
        ..SystemConfig::desk()
    };
    let spec = ExperimentSpec {
        algorithms: vec![Algorithm::SAmp, Algorithm::AmpMmse],
        trials: 20,
        ..ExperimentSpec::from_base(base)
    };
    let out = run_experiment(&spec)?;
    let (Some((hs, ds)), Some((hm, dm))) = (pooled_metrics(&out, Algorithm::SAmp), pooled_metrics(&out, Algorithm::AmpMmse))
    else {
        return Ok((false, "missing rows".into()));
    };
    let gain = hm - hs;
    let ratio = ds / dm;
    Ok((
        gain >= 1.5 && ratio <= 0.6,
        format!(
            "NMSE_h S-AMP {hs:.2} dB vs AMP-MMSE {hm:.2} dB (gain {gain:.2} dB, need ≥ 1.5); \
             DEP {ds:.4} vs {dm:.4} (ratio {ratio:.3}, need ≤ 0.6)"
        ),
    ))
}

/// SE fixpoint vs AMP's empirical c (N = 1000, L = 250, 20 trials) and the
/// trace properties of the sequential predictor.
pub fn state_evolution_consistency() -> Result<(bool, String)> {
    let cfg = SystemConfig {
        n_users: 1000,
        pilot_len: 250,
        n_adts: 1,
        seed: CHECK_SEED,
        ..SystemConfig::default()
    };
    let amp_cfg = AmpConfig::from_system(&cfg);
    let mut c_sum = 0.0;
    for trial in 0..20 {
        let sc = Scenario::generate(&cfg, trial)?;
        let priors: Vec<BgPrior> = sc
            .profiles
            .iter()
            .map(|p| BgPrior::zero_mean(cfg.lambda, p.channel_var))
            .collect();
        let y = sc.received.column(0).into_owned();
        c_sum += amp_run(&y, &sc.pilots, &priors, &amp_cfg)?.c;
    }
    let c_amp = c_sum / 20.0;
    let fp = se_fixpoint(&static_samples(&cfg, DEFAULT_SAMPLES, CHECK_SEED), &SeParams::from_system(&cfg));
    let dev = rel(c_amp, fp.c);

    let trace_cfg = SystemConfig {
        n_adts: 10,
        ..cfg.clone()
    };
    let trace = se_sequential_trace(&trace_cfg, 20_000, CHECK_SEED)?;
    let first = rel(trace.c_sequential[0], trace.c_static[0]);
    let dominated = (1..trace_cfg.n_adts).all(|t| trace.c_sequential[t] <= trace.c_static[t]);
    let last = trace_cfg.n_adts - 1;
    Ok((
        dev <= 0.15 && fp.converged && first <= 0.01 && dominated,
        format!(
            "AMP c {c_amp:.3e} vs SE fixpoint {:.3e} ({:.1}%, limit 15%); t=1 gap {:.2}%; \
             S-AMP ≤ static for t ≥ 2: {dominated} (t={}: {:.3e} vs {:.3e})",
            fp.c,
            100.0 * dev,
            100.0 * first,
            last + 1,
            trace.c_sequential[last],
            trace.c_static[last]
        ),
    ))
}

/// KL(exact ‖ matched) and KL(p̃ ‖ matched) never increase through a
/// transition, on 100 grid-discretised single-user instances.
pub fn kl_contraction() -> Result<(bool, String)> {
    let grid = Grid::new(201, 6.0);
    let mut rng = stream(CHECK_SEED, 6, Purpose::Oracle);
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for _ in 0..100 {
        let lambda = rng.random_range(0.05..0.5);
        let r = rng.random_range(0.05..1.0);
        let eta: f64 = rng.random_range(0.3..0.95);
        let t_len = rng.random_range(2..=8usize);
        let cfg = SystemConfig {
            lambda,
            r_scale: r,
            ..SystemConfig::default()
        };
        let profile = UserProfile {
            distance_km: 1.0,
            speed_mps: 0.0,
            pathloss_db: 0.0,
            channel_var: 1.0,
            doppler_hz: 0.0,
            ar_coeff: eta,
        };
        let mut a = rng.random::<f64>() < lambda;
        let mut h = complex_normal(&mut rng, 1.0);
        let (mut phis, mut cs) = (Vec::new(), Vec::new());
        for t in 0..t_len {
            if t > 0 {
                let u: f64 = rng.random();
                a = if a { u >= cfg.p01() } else { u < cfg.p10() };
                h = h * eta + complex_normal(&mut rng, 1.0 - eta * eta);
            }
            let c = rng.random_range(0.05..1.0);
            let x = if a { h } else { C64::new(0.0, 0.0) };
            phis.push(x + complex_normal(&mut rng, c));
            cs.push(c);
        }
        let exact = exact_sssm_filter(&phis, &cs, &profile, &cfg)?;
        let kernel = TransitionKernel::new(&grid, eta, 1.0, cfg.p01(), cfg.p10());
        let mut prior = BgPrior::zero_mean(lambda, 1.0);
        for t in 0..t_len - 1 {
            let (_, m) = moment_match(phis[t], cs[t], &prior);
            let q = GridDensity::product(&grid, m.pi_bar, m.xi_bar, m.psi_bar).floored();
            let p_exact = GridDensity::from_mixture(&grid, &exact[t].components);
            let p_tilde = GridDensity::product(&grid, prior.pi_hat, prior.xi_hat, prior.psi_hat).observe(
                &grid,
                phis[t],
                cs[t],
            );
            let kq = kernel.apply(&q);
            for p in [&p_exact, &p_tilde] {
                let before = kl_divergence(p, &q);
                let after = kl_divergence(&kernel.apply(p), &kq);
                worst = worst.max(after - before);
                steps += 1;
            }
            prior = propagate_one(&m, &profile, &cfg);
        }
    }
    Ok((
        worst <= 1e-6,
        format!("max KL increase {worst:.2e} nats over {steps} transitions (limit 1e-6)"),
    ))
}

/// Activity fraction, AR-1 variance and lag-1 correlation.
pub fn stationarity() -> Result<(bool, String)> {
    let cfg = SystemConfig {
        n_users: 2000,
        n_adts: 500,
        lambda: 0.05,
        r_scale: 0.1,
        ..SystemConfig::default()
    };
    let act = simulate_activity(&cfg, &mut stream(CHECK_SEED, 0, Purpose::Activity));
    let frac = act.iter().filter(|&&a| a).count() as f64 / act.len() as f64;

    let (rho, eta) = (1.0, 0.9974);
    let ch_cfg = SystemConfig {
        n_users: 20_000,
        n_adts: 200,
        ..SystemConfig::default()
    };
    let profile = UserProfile {
        distance_km: 1.0,
        speed_mps: 0.0,
        pathloss_db: 0.0,
        channel_var: rho,
        doppler_hz: 0.0,
        ar_coeff: eta,
    };
    let profiles = vec![profile; ch_cfg.n_users];
    let h: DMatrix<C64> = simulate_channels(&profiles, &ch_cfg, &mut stream(CHECK_SEED, 0, Purpose::Channels));
    let var = h.iter().map(|x| x.norm_sqr()).sum::<f64>() / h.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for t in 1..ch_cfg.n_adts {
        for n in 0..ch_cfg.n_users {
            num += (h[(n, t)] * h[(n, t - 1)].conj()).re;
            den += h[(n, t - 1)].norm_sqr();
        }
    }
    let lag1 = num / den;
    let ok = (frac - cfg.lambda).abs() <= 0.005 && rel(var, rho) <= 0.02 && (lag1 - eta).abs() <= 0.005;
    Ok((
        ok,
        format!(
            "activity {frac:.5} (λ = 0.05 ± 0.005, {} samples); channel variance {var:.4} (1 ± 2%); lag-1 {lag1:.5} ({eta} ± 0.005)",
            act.len()
        ),
    ))
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Trial mean of one metric at one sweep value.
fn trial_mean(trials: &[TrialMetrics], algo: Algorithm, value: f64, f: impl Fn(&TrialMetrics) -> f64) -> f64 {
    let xs: Vec<f64> = trials
        .iter()
        .filter(|t| t.algorithm == algo && t.sweep_value == value)
        .map(f)
        .collect();
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Flat: every point within 3 standard errors of the grand mean.
fn flat(points: &[(f64, f64)]) -> bool {
    let grand = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    points.iter().all(|&(m, se)| (m - grand).abs() <= 3.0 * se)
}

/// Ratio estimator Σa/Σb over trials with its delta-method standard error.
fn ratio_with_se(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let (sa, sb) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let r = sa / sb;
    let mean_b = sb / n;
    let resid: f64 = pairs.iter().map(|(a, b)| (a - r * b).powi(2)).sum::<f64>() / (n - 1.0);
    (r, (resid / n).sqrt() / mean_b)
}

/// Point estimate and its standard error.
type Estimate = (f64, f64);

/// Pooled channel NMSE (dB) and DEP per sweep value, each with a standard
/// error across trials.
fn pooled_per_point(trials: &[TrialMetrics], algo: Algorithm, values: &[f64]) -> (Vec<Estimate>, Vec<Estimate>) {
    values
        .iter()
        .map(|&v| {
            let ts: Vec<&TrialMetrics> = trials.iter().filter(|t| t.algorithm == algo && t.sweep_value == v).collect();
            let (r, se) = ratio_with_se(&ts.iter().map(|t| (t.h_sums.error, t.h_sums.energy)).collect::<Vec<_>>());
            let db = 10.0 * r.log10();
            let db_se = 10.0 / std::f64::consts::LN_10 * se / r;
            let count = |f: fn(&TrialMetrics) -> (u64, u64)| {
                ratio_with_se(&ts.iter().map(|t| f(t)).map(|(a, b)| (a as f64, b as f64)).collect::<Vec<_>>())
            };
            let (pfa, pfa_se) = count(|t| (t.dep_counts.false_alarms, t.dep_counts.inactive));
            let (pmd, pmd_se) = count(|t| (t.dep_counts.misses, t.dep_counts.active));
            // The two rates come from disjoint user classes; treat them as independent.
            ((db, db_se), (pfa + pmd, pfa_se.hypot(pmd_se)))
        })
        .unzip()
}

/// Trials per r0 point; pooled NMSE is dominated by the strongest active
/// users, so the trend needs more than the desk default.
pub const R0_TRIALS: usize = 100;

/// r = 1/2^r0, r0 ∈ {0..5}: pooled S-AMP DEP and channel NMSE decrease with
/// r0 (Spearman ≤ −0.8), pooled AMP-MMSE metrics stay flat.
pub fn r0_monotonicity() -> Result<(bool, String)> {
    let values: Vec<f64> = (0..=5).map(f64::from).collect();
    let spec = ExperimentSpec {
        axis: SweepAxis::R0,
        values: values.clone(),
        algorithms: vec![Algorithm::SAmp, Algorithm::AmpMmse],
        trials: R0_TRIALS,
        ..ExperimentSpec::from_base(SystemConfig {
            seed: CHECK_SEED,
            ..SystemConfig::desk()
        })
    };
    let out = run_experiment(&spec)?;
    let (s_nmse, s_dep) = pooled_per_point(&out.trials, Algorithm::SAmp, &values);
    let (m_nmse, m_dep) = pooled_per_point(&out.trials, Algorithm::AmpMmse, &values);
    let means = |v: &[(f64, f64)]| v.iter().map(|p| p.0).collect::<Vec<_>>();
    let rho_dep = spearman(&values, &means(&s_dep));
    let rho_nmse = spearman(&values, &means(&s_nmse));
    let flat_ok = flat(&m_dep) && flat(&m_nmse);
    let fmt = |v: &[(f64, f64)], digits: usize| {
        v.iter().map(|p| format!("{:.*}", digits, p.0)).collect::<Vec<_>>().join(" ")
    };
    Ok((
        rho_dep <= -0.8 && rho_nmse <= -0.8 && flat_ok,
        format!(
            "S-AMP DEP [{}] ρ={rho_dep:.2}; NMSE_h [{}] ρ={rho_nmse:.2}; AMP-MMSE flat: {flat_ok} (DEP [{}], NMSE_h [{}])",
            fmt(&s_dep, 4),
            fmt(&s_nmse, 2),
            fmt(&m_dep, 4),
            fmt(&m_nmse, 2)
        ),
    ))
}

/// Trial-mean channel NMSE: oracle LS ≤ OMP and soft AMP; S-AMP < oracle LS
/// with η = 0.997, r0 = 3.
pub fn baseline_ordering() -> Result<(bool, String)> {
    let spec = ExperimentSpec {
        axis: SweepAxis::R0,
        values: vec![3.0],
        algorithms: vec![Algorithm::SAmp, Algorithm::AmpSoft, Algorithm::Omp, Algorithm::OracleLs],
        trials: 20,
        ..ExperimentSpec::from_base(SystemConfig {
            seed: CHECK_SEED,
            ar_coeff_override: Some(0.997),
            ..SystemConfig::desk()
        })
    };
    let out = run_experiment(&spec)?;
    let mean = |a: Algorithm| trial_mean(&out.trials, a, 3.0, |t| t.nmse_h_db);
    let (s, soft, omp, ls) = (
        mean(Algorithm::SAmp),
        mean(Algorithm::AmpSoft),
        mean(Algorithm::Omp),
        mean(Algorithm::OracleLs),
    );
    Ok((
        ls <= omp && ls <= soft && s < ls,
        format!("trial-mean NMSE_h: s_amp {s:.2}, oracle_ls {ls:.2}, omp {omp:.2}, amp_soft {soft:.2} dB"),
    ))
}

/// Two identical runs give byte-identical CSV.
pub fn determinism() -> Result<(bool, String)> {
    let spec = ExperimentSpec {
        axis: SweepAxis::TxPowerDbm,
        values: vec![23.0, 33.0],
        algorithms: Algorithm::ALL.to_vec(),
        trials: 2,
        se_trajectories: 2000,
        ..ExperimentSpec::from_base(SystemConfig {
            n_users: 200,
            pilot_len: 50,
            n_adts: 4,
            seed: CHECK_SEED,
            ..SystemConfig::default()
        })
    };
    let a = run_experiment(&spec)?.to_csv();
    let b = run_experiment(&spec)?.to_csv();
    Ok((a == b, format!("{} CSV bytes, identical: {}", a.len(), a == b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 5.0, 9.0, 20.0]) - 1.0).abs() < 1e-15);
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_nan());
    }
}
