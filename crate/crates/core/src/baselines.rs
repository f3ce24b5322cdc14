//! Comparison algorithms: AMP-MMSE, soft-threshold AMP, OMP and oracle
//! least squares.

use nalgebra::{DMatrix, DVector};

use crate::amp::AmpConfig;
use crate::detection::NmseAccumulator;
use crate::scenario::{Scenario, SystemConfig};
use crate::sequential::{run_adts, PriorMode, SequenceRun};
use crate::stream::CALIBRATION_TRIAL;
use crate::{Error, Result, C64};

/// Threshold multipliers tried by [`calibrate_soft_alpha`].
pub const SOFT_ALPHA_GRID: [f64; 11] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0];

/// OMP stops once ‖r‖ ≤ OMP_RESIDUAL_SLACK · √L · σ_w.
pub const OMP_RESIDUAL_SLACK: f64 = 1.1;

/// Relative singular-value cutoff of the oracle pseudo-inverse.
pub const PINV_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub estimate: DVector<C64>,
    pub support: Vec<bool>,
    pub iterations: usize,
    pub residual_norm: f64,
    /// Set when the algorithm hit a structural limit (OMP support reaching L,
    /// numerically dependent columns).
    pub flagged: bool,
}

impl BaselineResult {
    fn from_estimate(estimate: DVector<C64>, iterations: usize, residual_norm: f64) -> Self {
        let support = estimate.iter().map(|x| x.norm_sqr() > 0.0).collect();
        BaselineResult {
            estimate,
            support,
            iterations,
            residual_norm,
            flagged: false,
        }
    }
}

/// Stacks per-ADT results into N × T estimate and support matrices.
pub fn stack(results: &[BaselineResult]) -> (DMatrix<C64>, DMatrix<bool>) {
    let n = results.first().map_or(0, |r| r.estimate.len());
    let est = DMatrix::from_fn(n, results.len(), |i, t| results[t].estimate[i]);
    let sup = DMatrix::from_fn(n, results.len(), |i, t| results[t].support[i]);
    (est, sup)
}

/// AMP with the static prior (λ, 0, ρₙ) at every ADT; the same loop as S-AMP
/// with propagation switched off.
pub fn amp_mmse(scenario: &Scenario, cfg: &SystemConfig) -> Result<SequenceRun> {
    run_adts(scenario, cfg, PriorMode::Static)
}

/// Complex soft threshold φ · max(1 − θ/|φ|, 0).
pub fn soft_threshold(phi: C64, theta: f64) -> C64 {
    let r = phi.norm();
    if r > theta {
        phi * (1.0 - theta / r)
    } else {
        C64::new(0.0, 0.0)
    }
}

/// Half the trace of the soft-threshold Jacobian, 1 − θ/(2|φ|) outside the
/// dead zone.
fn soft_threshold_deriv(phi: C64, theta: f64) -> f64 {
    let r = phi.norm();
    if r > theta {
        1.0 - theta / (2.0 * r)
    } else {
        0.0
    }
}

/// AMP with the soft-threshold denoiser at θ = α√c.
pub fn amp_soft(y: &DVector<C64>, s: &DMatrix<C64>, alpha: f64, cfg: &AmpConfig) -> Result<BaselineResult> {
    if s.nrows() != y.len() {
        return Err(Error::Dimension(format!("S has {} rows, y has {}", s.nrows(), y.len())));
    }
    let l = y.len() as f64;
    let n = s.ncols();
    let mut mu = DVector::zeros(n);
    let mut z = y.clone();
    let mut c = cfg.c0_factor * cfg.noise_var;
    let mut iters = 0;
    for it in 1..=cfg.max_iters {
        iters = it;
        let phi = s.ad_mul(&z) + &mu;
        let theta = alpha * c.sqrt();
        let next = phi.map(|p| soft_threshold(p, theta));
        let onsager: f64 = phi.iter().map(|&p| soft_threshold_deriv(p, theta)).sum();
        z = y - s * &next + &z * C64::new(onsager / l, 0.0);
        c = (z.norm_squared() / l).max(f64::MIN_POSITIVE);
        if !c.is_finite() || next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { iter: it, what: "soft-threshold estimate" });
        }
        let change = (&next - &mu).norm() / next.norm().max(1e-30);
        mu = next;
        if change < cfg.tol {
            break;
        }
    }
    let residual = (y - s * &mu).norm();
    Ok(BaselineResult::from_estimate(mu, iters, residual))
}

pub fn amp_soft_run(scenario: &Scenario, cfg: &SystemConfig, alpha: f64) -> Result<Vec<BaselineResult>> {
    let amp_cfg = AmpConfig {
        noise_var: scenario.noise_var,
        ..AmpConfig::from_system(cfg)
    };
    (0..scenario.n_adts())
        .map(|t| {
            let y = scenario.received.column(t).into_owned();
            amp_soft(&y, &scenario.pilots, alpha, &amp_cfg).map_err(|e| e.at_adt(t + 1))
        })
        .collect()
}

/// Picks α from [`SOFT_ALPHA_GRID`] by sparse-signal NMSE on the held-out
/// calibration trial of `cfg`.
pub fn calibrate_soft_alpha(cfg: &SystemConfig) -> Result<f64> {
    let scenario = Scenario::generate(cfg, CALIBRATION_TRIAL)?;
    let mut best = (f64::INFINITY, SOFT_ALPHA_GRID[0]);
    for &alpha in &SOFT_ALPHA_GRID {
        let Ok(results) = amp_soft_run(&scenario, cfg, alpha) else {
            continue;
        };
        let (est, _) = stack(&results);
        let mut acc = NmseAccumulator::default();
        acc.add(&est, &scenario.sparse_signal, None)?;
        let score = acc.error / acc.energy.max(f64::MIN_POSITIVE);
        if score < best.0 {
            best = (score, alpha);
        }
    }
    Ok(best.1)
}

/// Orthogonal matching pursuit with an incrementally orthogonalised basis.
/// Stops when ‖r‖ ≤ 1.1 √L σ_w, after `max_iters` selections, or when the
/// support reaches L (flagged).
pub fn omp(y: &DVector<C64>, s: &DMatrix<C64>, noise_var: f64, max_iters: usize) -> Result<BaselineResult> {
    let (l, n) = s.shape();
    if y.len() != l {
        return Err(Error::Dimension(format!("S has {l} rows, y has {}", y.len())));
    }
    let stop = OMP_RESIDUAL_SLACK * (l as f64 * noise_var).sqrt();
    let cap = max_iters.min(l);
    let mut selected: Vec<usize> = Vec::new();
    let mut in_set = vec![false; n];
    // Orthonormal basis of the selected columns and S_sel = Q R.
    let mut q: Vec<DVector<C64>> = Vec::new();
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut resid = y.clone();
    let mut flagged = false;

    while resid.norm() > stop && selected.len() < cap {
        let corr = s.ad_mul(&resid);
        let pick = (0..n)
            .filter(|&j| !in_set[j])
            .max_by(|&a, &b| corr[a].norm_sqr().total_cmp(&corr[b].norm_sqr()));
        let Some(j) = pick else { break };
        let col = s.column(j).into_owned();
        let mut w = col.clone();
        let mut coeffs = vec![C64::new(0.0, 0.0); q.len()];
        // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = qk.dotc(&w);
                coeffs[k] += proj;
                w -= qk * proj;
            }
        }
        let norm = w.norm();
        if norm <= 1e-12 * col.norm() {
            flagged = true;
            break;
        }
        coeffs.push(C64::new(norm, 0.0));
        let qn = w / C64::new(norm, 0.0);
        resid -= &qn * qn.dotc(&resid);
        q.push(qn);
        r_cols.push(coeffs);
        selected.push(j);
        in_set[j] = true;
    }
    if selected.len() == l {
        flagged = true;
    }

    // Back substitution R b = Qᴴ y.
    let k = selected.len();
    let rhs: Vec<C64> = q.iter().map(|qi| qi.dotc(y)).collect();
    let mut b = vec![C64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for jj in i + 1..k {
            acc -= r_cols[jj][i] * b[jj];
        }
        b[i] = acc / r_cols[i][i];
    }
    let mut estimate = DVector::zeros(n);
    let mut support = vec![false; n];
    for (&j, &v) in selected.iter().zip(&b) {
        estimate[j] = v;
        support[j] = true;
    }
    let residual_norm = (y - s * &estimate).norm();
    Ok(BaselineResult {
        estimate,
        support,
        iterations: k,
        residual_norm,
        flagged,
    })
}

/// ⌈3λN⌉.
pub fn omp_max_iters(cfg: &SystemConfig) -> usize {
    (3.0 * cfg.lambda * cfg.n_users as f64).ceil() as usize
}

pub fn omp_run(scenario: &Scenario, cfg: &SystemConfig) -> Result<Vec<BaselineResult>> {
    let cap = omp_max_iters(cfg);
    (0..scenario.n_adts())
        .map(|t| {
            let y = scenario.received.column(t).into_owned();
            omp(&y, &scenario.pilots, scenario.noise_var, cap).map_err(|e| e.at_adt(t + 1))
        })
        .collect()
}

/// Minimum-norm least squares on the given support, zeros elsewhere.
pub fn oracle_ls(y: &DVector<C64>, s: &DMatrix<C64>, true_support: &[bool]) -> Result<BaselineResult> {
    let (l, n) = s.shape();
    if y.len() != l || true_support.len() != n {
        return Err(Error::Dimension(format!(
            "S is {l}×{n}, y has {}, support has {}",
            y.len(),
            true_support.len()
        )));
    }
    let idx: Vec<usize> = (0..n).filter(|&j| true_support[j]).collect();
    if idx.len() > l {
        return Err(Error::Dimension(format!("support of {} exceeds L = {l}", idx.len())));
    }
    let mut estimate = DVector::zeros(n);
    if !idx.is_empty() {
        let sub = s.select_columns(&idx);
        let svd = sub.svd(true, true);
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(PINV_RTOL * smax)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let coef = pinv * y;
        for (k, &j) in idx.iter().enumerate() {
            estimate[j] = coef[k];
        }
    }
    let residual_norm = (y - s * &estimate).norm();
    Ok(BaselineResult {
        estimate,
        support: true_support.to_vec(),
        iterations: 1,
        residual_norm,
        flagged: false,
    })
}

pub fn oracle_ls_run(scenario: &Scenario) -> Result<Vec<BaselineResult>> {
    (0..scenario.n_adts())
        .map(|t| {
            let y = scenario.received.column(t).into_owned();
            let support: Vec<bool> = scenario.activity.column(t).iter().copied().collect();
            oracle_ls(&y, &scenario.pilots, &support).map_err(|e| e.at_adt(t + 1))
        })
        .collect()
}
