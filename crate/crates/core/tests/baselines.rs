use nalgebra::{DMatrix, DVector};

use samp_core::baselines::{amp_soft_run, calibrate_soft_alpha, omp, omp_max_iters, omp_run, oracle_ls, oracle_ls_run, stack};
use samp_core::detection::metric_nmse;
use samp_core::scenario::{Scenario, SystemConfig};
use samp_core::C64;

fn desk(seed: u64) -> SystemConfig {
    SystemConfig {
        seed,
        ..SystemConfig::desk()
    }
}

fn columns(s: &DMatrix<C64>, support: &[bool]) -> DMatrix<C64> {
    let cols: Vec<_> = (0..s.ncols()).filter(|&j| support[j]).map(|j| s.column(j).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

#[test]
fn omp_residual_is_orthogonal_to_its_support() {
    let cfg = desk(3);
    for trial in 0..3 {
        let sc = Scenario::generate(&cfg, trial).unwrap();
        for t in [0, sc.n_adts() - 1] {
            let y = sc.received.column(t).into_owned();
            let res = omp(&y, &sc.pilots, sc.noise_var, omp_max_iters(&cfg)).unwrap();
            let sa = columns(&sc.pilots, &res.support);
            let x: DVector<C64> = DVector::from_iterator(
                sa.ncols(),
                res.estimate.iter().zip(&res.support).filter(|(_, &s)| s).map(|(x, _)| *x),
            );
            let r = &y - &sa * &x;
            let worst = sa.ad_mul(&r).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(worst <= 1e-10 * y.norm(), "trial {trial}, ADT {t}: |S_Aᴴ r| = {worst:e}");
            assert!((r.norm() - res.residual_norm).abs() <= 1e-10 * y.norm());
        }
    }
}

#[test]
fn oracle_ls_solves_the_normal_equations() {
    let sc = Scenario::generate(&desk(4), 0).unwrap();
    for t in 0..sc.n_adts() {
        let y = sc.received.column(t).into_owned();
        let support: Vec<bool> = sc.activity.column(t).iter().copied().collect();
        let res = oracle_ls(&y, &sc.pilots, &support).unwrap();
        let sa = columns(&sc.pilots, &support);
        let normal = sa.adjoint() * &sa;
        let x = normal.cholesky().expect("full column rank").solve(&sa.ad_mul(&y));
        let mut k = 0;
        for (n, &active) in support.iter().enumerate() {
            if active {
                assert!((res.estimate[n] - x[k]).norm() <= 1e-9 * x.norm());
                k += 1;
            } else {
                assert_eq!(res.estimate[n], C64::new(0.0, 0.0));
            }
        }
    }
}

/// Knowing the support, least squares beats the support-blind methods in
/// expectation.
#[test]
fn oracle_ls_lower_bounds_omp_and_soft_amp() {
    let cfg = desk(8);
    let alpha = calibrate_soft_alpha(&cfg).unwrap();
    let (mut ls, mut om, mut soft) = (0.0, 0.0, 0.0);
    let trials = 50;
    for trial in 0..trials {
        let sc = Scenario::generate(&cfg, trial).unwrap();
        let nmse = |runs: Vec<_>| {
            let (est, _) = stack(&runs);
            metric_nmse(&est, &sc.channels, Some(&sc.activity)).unwrap()
        };
        ls += nmse(oracle_ls_run(&sc).unwrap());
        om += nmse(omp_run(&sc, &cfg).unwrap());
        soft += nmse(amp_soft_run(&sc, &cfg, alpha).unwrap());
    }
    let n = trials as f64;
    let (ls, om, soft) = (ls / n, om / n, soft / n);
    assert!(ls <= om && ls <= soft, "oracle {ls:.2} dB, omp {om:.2} dB, soft {soft:.2} dB");
}
