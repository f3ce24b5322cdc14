//! Ground-truth generation for the uplink mMTC model.
//!
//! A scenario holds one realisation of the pilot matrix, per-user geometry,
//! the Markov activity matrix, the AR-1 channel matrix and the noisy received
//! pilots `Y = S X + W` with `X = A ⊙ H`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::stream::{complex_normal, stream, Purpose};
use crate::{Error, Result, C64};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Every scalar parameter of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of potential users (N).
    pub n_users: usize,
    /// Pilot length (L).
    pub pilot_len: usize,
    /// Number of ADTs (T).
    pub n_adts: usize,
    /// Stationary activity probability.
    pub lambda: f64,
    /// Transition scale r: p01 = r(1-λ), p10 = rλ.
    pub r_scale: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    /// Duration of one ADP in seconds.
    pub adp_duration_s: f64,
    pub carrier_hz: f64,
    pub dist_range_km: (f64, f64),
    pub speed_range_kmh: (f64, f64),
    /// Path loss in dB is `pathloss_intercept_db + pathloss_slope * log10(d_km)`.
    pub pathloss_intercept_db: f64,
    pub pathloss_slope: f64,
    /// AMP iteration cap per ADT.
    pub amp_iters: usize,
    /// Initial AMP noise level as a multiple of the noise variance.
    pub c0_factor: f64,
    /// Reference power for normalised state-evolution values.
    pub ref_power_dbm: f64,
    /// Forces every user's AR coefficient to this value when set.
    pub ar_coeff_override: Option<f64>,
    pub seed: u64,
    pub n_trials: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_users: 2000,
            pilot_len: 400,
            n_adts: 20,
            lambda: 0.05,
            r_scale: 0.1,
            tx_power_dbm: 33.0,
            noise_psd_dbm_hz: -169.0,
            bandwidth_hz: 1e7,
            adp_duration_s: 100e-6,
            carrier_hz: 3.5e9,
            dist_range_km: (0.05, 1.0),
            speed_range_kmh: (0.0, 50.0),
            pathloss_intercept_db: -128.1,
            pathloss_slope: -36.7,
            amp_iters: 50,
            c0_factor: 100.0,
            ref_power_dbm: 13.0,
            ar_coeff_override: None,
            seed: 1,
            n_trials: 20,
        }
    }
}

impl SystemConfig {
    /// Desk-scale profile: N = 500, L = 125, T = 10, 20 trials. Keeps the
    /// load N/L and the expected number of active users per pilot of the
    /// full-size setup.
    pub fn desk() -> Self {
        SystemConfig {
            n_users: 500,
            pilot_len: 125,
            n_adts: 10,
            n_trials: 20,
            ..Self::default()
        }
    }

    /// Probability of an active user going idle.
    pub fn p01(&self) -> f64 {
        self.r_scale * (1.0 - self.lambda)
    }

    /// Probability of an idle user becoming active.
    pub fn p10(&self) -> f64 {
        self.r_scale * self.lambda
    }

    /// `1 - p01 - p10`, written as `1 - r` so the memoryless chain (r = 1)
    /// yields an exact zero.
    pub fn activity_memory(&self) -> f64 {
        1.0 - self.r_scale
    }

    pub fn noise_var(&self) -> f64 {
        derive_noise_var(self)
    }

    /// Ratio P / P0 used to normalise state-evolution fixpoints.
    pub fn power_ratio(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - self.ref_power_dbm) / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_users == 0 || self.pilot_len == 0 || self.n_adts == 0 {
            return bad("n_users, pilot_len and n_adts must be positive".into());
        }
        if self.pilot_len > self.n_users {
            return bad(format!(
                "pilot_len {} exceeds n_users {}",
                self.pilot_len, self.n_users
            ));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda {} must lie in (0, 1)", self.lambda));
        }
        if !(self.r_scale > 0.0 && self.r_scale <= 1.0) {
            return bad(format!("r_scale {} must lie in (0, 1]", self.r_scale));
        }
        for (name, p) in [("p01", self.p01()), ("p10", self.p10())] {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("{name} = {p} must lie in (0, 1)"));
            }
        }
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("adp_duration_s", self.adp_duration_s),
            ("carrier_hz", self.carrier_hz),
            ("c0_factor", self.c0_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let (d0, d1) = self.dist_range_km;
        if !(d0 > 0.0 && d1 >= d0 && d1.is_finite()) {
            return bad(format!("dist_range_km [{d0}, {d1}] must be positive and ordered"));
        }
        let (v0, v1) = self.speed_range_kmh;
        if !(v0 >= 0.0 && v1 >= v0 && v1.is_finite()) {
            return bad(format!("speed_range_kmh [{v0}, {v1}] must be non-negative and ordered"));
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("pathloss_intercept_db", self.pathloss_intercept_db),
            ("pathloss_slope", self.pathloss_slope),
            ("ref_power_dbm", self.ref_power_dbm),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if let Some(eta) = self.ar_coeff_override {
            if !(-1.0..=1.0).contains(&eta) {
                return bad(format!("ar_coeff {eta} must lie in [-1, 1]"));
            }
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-user large-scale and mobility parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile {
    pub distance_km: f64,
    pub speed_mps: f64,
    /// Large-scale fading β in dB.
    pub pathloss_db: f64,
    /// Channel variance ρ (transmit power absorbed), linear watts.
    pub channel_var: f64,
    pub doppler_hz: f64,
    /// AR-1 coefficient η = J0(2π D T_b).
    pub ar_coeff: f64,
}

impl UserProfile {
    /// Builds a profile from geometry; `channel_var` absorbs the transmit power.
    pub fn from_geometry(cfg: &SystemConfig, distance_km: f64, speed_mps: f64) -> Self {
        let pathloss_db = cfg.pathloss_intercept_db + cfg.pathloss_slope * distance_km.log10();
        let channel_var = 10f64.powf((cfg.tx_power_dbm + pathloss_db - 30.0) / 10.0);
        let doppler_hz = speed_mps * cfg.carrier_hz / SPEED_OF_LIGHT;
        let ar_coeff = cfg.ar_coeff_override.unwrap_or_else(|| {
            bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * cfg.adp_duration_s)
        });
        UserProfile {
            distance_km,
            speed_mps,
            pathloss_db,
            channel_var,
            doppler_hz,
            ar_coeff,
        }
    }
}

/// One generated ground-truth instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// L × N pilot matrix S.
    pub pilots: DMatrix<C64>,
    pub profiles: Vec<UserProfile>,
    /// N × T activity indicators A.
    pub activity: DMatrix<bool>,
    /// N × T channel coefficients H.
    pub channels: DMatrix<C64>,
    /// N × T access-state sparse signal X = A ⊙ H.
    pub sparse_signal: DMatrix<C64>,
    /// L × T received pilots Y.
    pub received: DMatrix<C64>,
    /// Noise variance σ_w² in watts.
    pub noise_var: f64,
}

impl Scenario {
    /// Generates trial `trial` of `cfg`. Each ingredient has its own stream,
    /// so changing, e.g., the activity parameters leaves pilots, geometry,
    /// channels and noise untouched.
    pub fn generate(cfg: &SystemConfig, trial: u64) -> Result<Scenario> {
        cfg.validate()?;
        let seed = cfg.seed;
        let pilots = gen_pilots(cfg, &mut stream(seed, trial, Purpose::Pilots));
        let profiles = gen_user_profiles(cfg, &mut stream(seed, trial, Purpose::Profiles));
        let activity = simulate_activity(cfg, &mut stream(seed, trial, Purpose::Activity));
        let channels = simulate_channels(&profiles, cfg, &mut stream(seed, trial, Purpose::Channels));
        Scenario::assemble(
            pilots,
            profiles,
            activity,
            channels,
            cfg.noise_var(),
            &mut stream(seed, trial, Purpose::Noise),
        )
    }

    /// Forms X = A ⊙ H and synthesizes Y from explicit ingredients.
    pub fn assemble<R: Rng + ?Sized>(
        pilots: DMatrix<C64>,
        profiles: Vec<UserProfile>,
        activity: DMatrix<bool>,
        channels: DMatrix<C64>,
        noise_var: f64,
        rng: &mut R,
    ) -> Result<Scenario> {
        if activity.shape() != channels.shape() {
            return Err(Error::Dimension(format!(
                "activity {:?} vs channels {:?}",
                activity.shape(),
                channels.shape()
            )));
        }
        if profiles.len() != channels.nrows() {
            return Err(Error::Dimension(format!(
                "{} profiles for {} users",
                profiles.len(),
                channels.nrows()
            )));
        }
        let sparse_signal = channels.zip_map(&activity, |h, a| if a { h } else { C64::new(0.0, 0.0) });
        let received = synthesize_received(&pilots, &sparse_signal, noise_var, rng)?;
        Ok(Scenario {
            pilots,
            profiles,
            activity,
            channels,
            sparse_signal,
            received,
            noise_var,
        })
    }

    pub fn n_users(&self) -> usize {
        self.pilots.ncols()
    }

    pub fn pilot_len(&self) -> usize {
        self.pilots.nrows()
    }

    pub fn n_adts(&self) -> usize {
        self.received.ncols()
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Total noise power σ_w² = 10^((psd − 30)/10) · bandwidth, in watts.
pub fn derive_noise_var(cfg: &SystemConfig) -> f64 {
    10f64.powf((cfg.noise_psd_dbm_hz - 30.0) / 10.0) * cfg.bandwidth_hz
}

/// L × N i.i.d. CN(0, 1/L) pilots (unit expected column power).
pub fn gen_pilots<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> DMatrix<C64> {
    let var = 1.0 / cfg.pilot_len as f64;
    // Column-major fill: column n is user n's pilot.
    DMatrix::from_fn(cfg.pilot_len, cfg.n_users, |_, _| complex_normal(rng, var))
}

/// Distances and speeds uniform on their configured ranges.
pub fn gen_user_profiles<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<UserProfile> {
    (0..cfg.n_users)
        .map(|_| {
            let d = uniform(rng, cfg.dist_range_km);
            let v_kmh = uniform(rng, cfg.speed_range_kmh);
            UserProfile::from_geometry(cfg, d, v_kmh / 3.6)
        })
        .collect()
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// N × T activity matrix: first column i.i.d. Bernoulli(λ), then the per-user
/// two-state chain with p10 (idle → active) and p01 (active → idle).
pub fn simulate_activity<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> DMatrix<bool> {
    let (n, t_len) = (cfg.n_users, cfg.n_adts);
    let (p01, p10) = (cfg.p01(), cfg.p10());
    let mut a = DMatrix::from_element(n, t_len, false);
    for i in 0..n {
        a[(i, 0)] = rng.random::<f64>() < cfg.lambda;
    }
    for t in 1..t_len {
        for i in 0..n {
            let u: f64 = rng.random();
            a[(i, t)] = if a[(i, t - 1)] { u >= p01 } else { u < p10 };
        }
    }
    a
}

/// N × T AR-1 channels: h¹ ~ CN(0, ρ), hᵗ = η hᵗ⁻¹ + CN(0, (1 − η²) ρ).
pub fn simulate_channels<R: Rng + ?Sized>(
    profiles: &[UserProfile],
    cfg: &SystemConfig,
    rng: &mut R,
) -> DMatrix<C64> {
    let n = profiles.len();
    let mut h = DMatrix::from_element(n, cfg.n_adts, C64::new(0.0, 0.0));
    for (i, p) in profiles.iter().enumerate() {
        h[(i, 0)] = complex_normal(rng, p.channel_var);
    }
    for t in 1..cfg.n_adts {
        for (i, p) in profiles.iter().enumerate() {
            let eta = p.ar_coeff;
            let innov = complex_normal(rng, (1.0 - eta * eta).max(0.0) * p.channel_var);
            h[(i, t)] = h[(i, t - 1)] * eta + innov;
        }
    }
    h
}

/// Y = S X + W with W i.i.d. CN(0, σ_w²).
pub fn synthesize_received<R: Rng + ?Sized>(
    pilots: &DMatrix<C64>,
    sparse_signal: &DMatrix<C64>,
    noise_var: f64,
    rng: &mut R,
) -> Result<DMatrix<C64>> {
    if pilots.ncols() != sparse_signal.nrows() {
        return Err(Error::Dimension(format!(
            "pilots {:?} cannot multiply signal {:?}",
            pilots.shape(),
            sparse_signal.shape()
        )));
    }
    let mut y = pilots * sparse_signal;
    for t in 0..y.ncols() {
        for l in 0..y.nrows() {
            y[(l, t)] += complex_normal(rng, noise_var);
        }
    }
    Ok(y)
}
