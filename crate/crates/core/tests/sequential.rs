use samp_core::baselines::amp_mmse;
use samp_core::checks::kl::{Grid, GridDensity, TransitionKernel};
use samp_core::detection::metric_nmse;
use samp_core::scenario::{Scenario, SystemConfig, UserProfile};
use samp_core::sequential::{exact_sssm_filter, s_amp_run};
use samp_core::stream::{complex_normal, stream, Purpose};
use samp_core::C64;

use rand::Rng;

fn small(seed: u64) -> SystemConfig {
    SystemConfig {
        n_users: 300,
        pilot_len: 75,
        n_adts: 8,
        seed,
        ..SystemConfig::default()
    }
}

#[test]
fn memoryless_model_reduces_to_static_amp() {
    let cfg = SystemConfig {
        r_scale: 1.0,
        ar_coeff_override: Some(0.0),
        ..small(1)
    };
    let sc = Scenario::generate(&cfg, 0).unwrap();
    let (a, b) = (s_amp_run(&sc, &cfg).unwrap(), amp_mmse(&sc, &cfg).unwrap());
    // Bitwise, NaN-safe.
    let bits = |m: &nalgebra::DMatrix<C64>| m.iter().map(|x| (x.re.to_bits(), x.im.to_bits())).collect::<Vec<_>>();
    assert_eq!(bits(&a.estimates()), bits(&b.estimates()));
    assert_eq!(a.pi_bar(), b.pi_bar());
}

#[test]
fn history_improves_channel_estimates() {
    let cfg = small(2);
    let (mut s_amp, mut mmse) = (0.0, 0.0);
    for trial in 0..5 {
        let sc = Scenario::generate(&cfg, trial).unwrap();
        s_amp += metric_nmse(&s_amp_run(&sc, &cfg).unwrap().estimates(), &sc.channels, Some(&sc.activity)).unwrap();
        mmse += metric_nmse(&amp_mmse(&sc, &cfg).unwrap().estimates(), &sc.channels, Some(&sc.activity)).unwrap();
    }
    assert!(s_amp < mmse - 0.5, "S-AMP {:.2} dB vs AMP-MMSE {:.2} dB", s_amp / 5.0, mmse / 5.0);
}

/// The closed-form mixture filter against a brute-force Bayes filter on a
/// 2-D grid (predict with the transition kernel, correct with the
/// likelihood).
#[test]
fn exact_filter_matches_grid_filter() {
    let grid = Grid::new(161, 6.0);
    let mut rng = stream(3, 0, Purpose::Oracle);
    for _ in 0..5 {
        let (lambda, r, eta) = (rng.random_range(0.1..0.5), rng.random_range(0.1..1.0), rng.random_range(0.3..0.9));
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
        let t_len = 6;
        let phis: Vec<C64> = (0..t_len).map(|_| complex_normal(&mut rng, 1.5)).collect();
        let cs: Vec<f64> = (0..t_len).map(|_| rng.random_range(0.3..1.0)).collect();
        let exact = exact_sssm_filter(&phis, &cs, &profile, &cfg).unwrap();

        let kernel = TransitionKernel::new(&grid, eta, 1.0, cfg.p01(), cfg.p10());
        let mut belief = GridDensity::product(&grid, lambda, C64::new(0.0, 0.0), 1.0);
        for t in 0..t_len {
            if t > 0 {
                belief = kernel.apply(&belief);
            }
            belief = belief.observe(&grid, phis[t], cs[t]);
            let p_active = belief.active.sum();
            assert!(
                (p_active - exact[t].p_active).abs() < 2e-3,
                "t = {t}: grid {p_active:.5} vs exact {:.5}",
                exact[t].p_active
            );
            let total: f64 = exact[t].components.iter().map(|c| c.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
