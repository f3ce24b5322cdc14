//! Seeded Monte-Carlo campaigns and CSV output.
//!
//! Config files are line-oriented `key = value` text with `#` comments;
//! list values are comma separated. Keys mirror [`SystemConfig`] fields plus
//! a few experiment-level keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `n_users`, `pilot_len`, `n_adts` | N, L, T |
//! | `lambda`, `r_scale` | stationary activity and transition scale r |
//! | `r0` | sets r = 1/2^r0 |
//! | `tx_power_dbm`, `noise_psd_dbm_hz`, `bandwidth_hz`, `carrier_hz` | radio constants |
//! | `adp_duration_s` | ADP duration in seconds |
//! | `dist_range_km`, `speed_range_kmh` | `lo, hi` intervals |
//! | `pathloss_intercept_db`, `pathloss_slope` | path-loss law |
//! | `amp_iters`, `c0_factor`, `ref_power_dbm`, `ar_coeff` | algorithm and SE knobs |
//! | `seed`, `trials` (or `n_trials`) | randomness and trials per point |
//! | `algorithms` | subset of `s_amp, amp_mmse, amp_soft, omp, oracle_ls, se_trace` |
//! | `se_trajectories` | trajectories for state-evolution traces |
//! | `out` | CSV output path |
//!
//! Exactly one of `tx_power_dbm`, `pilot_len`, `r0`, `lambda`,
//! `adp_duration_s` may hold more than one value; that key is the sweep axis.
//! Without a list the sweep is the single `tx_power_dbm` point.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{amp_mmse, amp_soft_run, calibrate_soft_alpha, omp_run, oracle_ls_run, stack};
use crate::detection::{detect, DepCounts, NmseAccumulator};
use crate::scenario::{Scenario, SystemConfig};
use crate::sequential::s_amp_run;
use crate::state_evolution::{se_sequential_trace, DEFAULT_TRAJECTORIES};
use crate::{Error, Result, C64};

pub const CSV_HEADER: &str = "sweep_axis,sweep_value,algorithm,adt,nmse_x_db,nmse_h_db,dep,trials,seed";
pub const SE_CSV_HEADER: &str = "t,algorithm,nor_ct,pilot_len,tx_power_dbm";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepAxis {
    TxPowerDbm,
    PilotLen,
    R0,
    Lambda,
    AdpDurationS,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::TxPowerDbm,
        SweepAxis::PilotLen,
        SweepAxis::R0,
        SweepAxis::Lambda,
        SweepAxis::AdpDurationS,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::TxPowerDbm => "tx_power_dbm",
            SweepAxis::PilotLen => "pilot_len",
            SweepAxis::R0 => "r0",
            SweepAxis::Lambda => "lambda",
            SweepAxis::AdpDurationS => "adp_duration_s",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.key() == key)
    }

    /// Writes one sweep value into `cfg`.
    pub fn apply(self, cfg: &mut SystemConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::TxPowerDbm => cfg.tx_power_dbm = value,
            SweepAxis::PilotLen => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!("pilot_len {value} is not a positive integer")));
                }
                cfg.pilot_len = value as usize;
            }
            SweepAxis::R0 => cfg.r_scale = 0.5f64.powf(value),
            SweepAxis::Lambda => cfg.lambda = value,
            SweepAxis::AdpDurationS => cfg.adp_duration_s = value,
        }
        Ok(())
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    SAmp,
    AmpMmse,
    AmpSoft,
    Omp,
    OracleLs,
    SeTrace,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::SAmp,
        Algorithm::AmpMmse,
        Algorithm::AmpSoft,
        Algorithm::Omp,
        Algorithm::OracleLs,
        Algorithm::SeTrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SAmp => "s_amp",
            Algorithm::AmpMmse => "amp_mmse",
            Algorithm::AmpSoft => "amp_soft",
            Algorithm::Omp => "omp",
            Algorithm::OracleLs => "oracle_ls",
            Algorithm::SeTrace => "se_trace",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub out: Option<PathBuf>,
    pub trials: usize,
    pub se_trajectories: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::from_base(SystemConfig::default())
    }
}

impl ExperimentSpec {
    pub fn from_base(base: SystemConfig) -> Self {
        ExperimentSpec {
            axis: SweepAxis::TxPowerDbm,
            values: vec![base.tx_power_dbm],
            algorithms: vec![Algorithm::SAmp, Algorithm::AmpMmse],
            out: None,
            trials: base.n_trials,
            se_trajectories: DEFAULT_TRAJECTORIES,
            base,
        }
    }

    /// The configuration of one sweep point.
    pub fn point(&self, value: f64) -> Result<SystemConfig> {
        let mut cfg = self.base.clone();
        self.axis.apply(&mut cfg, value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("empty sweep".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        for &v in &self.values {
            self.point(v)?;
        }
        Ok(())
    }
}

/// One `key = value` assignment; `line` is `None` for command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    pub value: String,
    pub line: Option<usize>,
}

/// Splits config text into assignments, reporting malformed lines.
pub fn parse_config_text(text: &str) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(Error::ConfigParse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (k.trim(), v.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::ConfigParse {
                line,
                msg: "empty key or value".into(),
            });
        }
        out.push(Assignment {
            key: key.to_string(),
            value: value.to_string(),
            line: Some(line),
        });
    }
    Ok(out)
}

fn fail(line: Option<usize>, msg: String) -> Error {
    match line {
        Some(line) => Error::ConfigParse { line, msg },
        None => Error::InvalidConfig(msg),
    }
}

fn parse_list<T: FromStr>(a: &Assignment) -> Result<Vec<T>> {
    a.value
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<T>()
                .map_err(|_| fail(a.line, format!("`{}`: cannot parse `{s}`", a.key)))
        })
        .collect()
}

fn parse_one<T: FromStr>(a: &Assignment) -> Result<T> {
    let mut v = parse_list::<T>(a)?;
    if v.len() != 1 {
        return Err(fail(a.line, format!("`{}` takes a single value", a.key)));
    }
    Ok(v.remove(0))
}

fn parse_range(a: &Assignment) -> Result<(f64, f64)> {
    match parse_list::<f64>(a)?.as_slice() {
        &[lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err(fail(a.line, format!("`{}` expects `lo, hi`", a.key))),
    }
}

/// Applies assignments in order on top of `base` (later ones win).
pub fn build_spec(base: SystemConfig, assignments: &[Assignment]) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::from_base(base);
    let mut trials_set = false;
    // Latest value list and source line of every sweepable key.
    let mut sweeps: BTreeMap<SweepAxis, (Vec<f64>, Option<usize>)> = BTreeMap::new();
    for a in assignments {
        let cfg = &mut spec.base;
        if let Some(axis) = SweepAxis::from_key(&a.key) {
            sweeps.insert(axis, (parse_list(a)?, a.line));
            continue;
        }
        match a.key.as_str() {
            "n_users" => cfg.n_users = parse_one(a)?,
            "n_adts" => cfg.n_adts = parse_one(a)?,
            "r_scale" => {
                cfg.r_scale = parse_one(a)?;
                sweeps.remove(&SweepAxis::R0);
            }
            "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = parse_one(a)?,
            "bandwidth_hz" => cfg.bandwidth_hz = parse_one(a)?,
            "carrier_hz" => cfg.carrier_hz = parse_one(a)?,
            "dist_range_km" => cfg.dist_range_km = parse_range(a)?,
            "speed_range_kmh" => cfg.speed_range_kmh = parse_range(a)?,
            "pathloss_intercept_db" => cfg.pathloss_intercept_db = parse_one(a)?,
            "pathloss_slope" => cfg.pathloss_slope = parse_one(a)?,
            "amp_iters" => cfg.amp_iters = parse_one(a)?,
            "c0_factor" => cfg.c0_factor = parse_one(a)?,
            "ref_power_dbm" => cfg.ref_power_dbm = parse_one(a)?,
            "ar_coeff" => cfg.ar_coeff_override = Some(parse_one(a)?),
            "seed" => cfg.seed = parse_one(a)?,
            "trials" | "n_trials" => {
                spec.trials = parse_one(a)?;
                trials_set = true;
            }
            "se_trajectories" => spec.se_trajectories = parse_one(a)?,
            "algorithms" => {
                let mut algos: Vec<Algorithm> = parse_list(a)?;
                algos.sort();
                algos.dedup();
                spec.algorithms = algos;
            }
            "out" => spec.out = Some(PathBuf::from(&a.value)),
            other => return Err(fail(a.line, format!("unknown key `{other}`"))),
        }
    }
    if !trials_set {
        spec.trials = spec.base.n_trials;
    }
    spec.base.n_trials = spec.trials;

    // In source order, so a conflict is reported at the later line.
    let mut ordered: Vec<_> = sweeps.iter().collect();
    ordered.sort_by_key(|(_, (_, line))| (line.is_none(), *line));
    let mut axis = None;
    for (&ax, (vals, line)) in ordered {
        if vals.len() > 1 {
            if let Some((prev, _)) = axis {
                return Err(fail(*line, format!("two sweep axes: `{prev}` and `{ax}`")));
            }
            axis = Some((ax, vals.clone()));
        } else {
            let v = vals[0];
            ax.apply(&mut spec.base, v).map_err(|e| fail(*line, e.to_string()))?;
        }
    }
    let (axis, values) = axis.unwrap_or((SweepAxis::TxPowerDbm, vec![spec.base.tx_power_dbm]));
    spec.axis = axis;
    spec.values = values;
    spec.validate()?;
    Ok(spec)
}

/// One output row. `adt = None` is the aggregate over all ADTs.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub sweep_axis: SweepAxis,
    pub sweep_value: f64,
    pub algorithm: String,
    pub adt: Option<usize>,
    pub nmse_x_db: f64,
    pub nmse_h_db: f64,
    pub dep: f64,
    pub trials: usize,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        let adt = self.adt.map_or_else(|| "all".to_string(), |t| t.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sweep_axis,
            self.sweep_value,
            self.algorithm,
            adt,
            self.nmse_x_db,
            self.nmse_h_db,
            self.dep,
            self.trials,
            self.seed
        )
    }

    fn is_error(&self) -> bool {
        self.nmse_x_db.is_nan() && self.nmse_h_db.is_nan() && self.dep.is_nan()
    }
}

/// Metrics of one algorithm on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub sweep_value: f64,
    pub trial: u64,
    pub algorithm: Algorithm,
    pub nmse_x_db: f64,
    pub nmse_h_db: f64,
    pub dep: f64,
    /// Linear channel-error sums and detection counts behind the figures
    /// above, so trials can be re-pooled.
    pub h_sums: NmseAccumulator,
    pub dep_counts: DepCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<MetricsRecord>,
    pub trials: Vec<TrialMetrics>,
    /// (sweep value, algorithm, message) of every failed run.
    pub failures: Vec<(f64, String, String)>,
}

impl ExperimentOutput {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty() || self.records.iter().any(MetricsRecord::is_error)
    }
}

/// Per-ADT accumulators of one algorithm.
#[derive(Debug, Clone, Default)]
struct Tally {
    x: Vec<NmseAccumulator>,
    h: Vec<NmseAccumulator>,
    dep: Vec<DepCounts>,
}

impl Tally {
    fn new(t_len: usize) -> Self {
        Tally {
            x: vec![NmseAccumulator::default(); t_len],
            h: vec![NmseAccumulator::default(); t_len],
            dep: vec![DepCounts::default(); t_len],
        }
    }

    fn add_trial(
        &mut self,
        est: &nalgebra::DMatrix<C64>,
        decisions: &nalgebra::DMatrix<bool>,
        scenario: &Scenario,
    ) -> Result<()> {
        let shape = scenario.sparse_signal.shape();
        if est.shape() != shape || decisions.shape() != shape {
            return Err(Error::Dimension(format!("estimate {:?} vs truth {:?}", est.shape(), shape)));
        }
        for t in 0..shape.1 {
            for i in 0..shape.0 {
                let (e, x, a) = (est[(i, t)], scenario.sparse_signal[(i, t)], scenario.activity[(i, t)]);
                self.x[t].push(e, x);
                if a {
                    self.h[t].push(e, x);
                }
                self.dep[t].push(decisions[(i, t)], a);
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: &Tally) {
        for t in 0..self.x.len() {
            self.x[t].error += other.x[t].error;
            self.x[t].energy += other.x[t].energy;
            self.h[t].error += other.h[t].error;
            self.h[t].energy += other.h[t].energy;
            self.dep[t].merge(&other.dep[t]);
        }
    }

    fn total(&self) -> (NmseAccumulator, NmseAccumulator, DepCounts) {
        let mut x = NmseAccumulator::default();
        let mut h = NmseAccumulator::default();
        let mut d = DepCounts::default();
        for t in 0..self.x.len() {
            x.error += self.x[t].error;
            x.energy += self.x[t].energy;
            h.error += self.h[t].error;
            h.energy += self.h[t].energy;
            d.merge(&self.dep[t]);
        }
        (x, h, d)
    }
}

fn db_or_nan(acc: &NmseAccumulator) -> f64 {
    acc.db().unwrap_or(f64::NAN)
}

/// Runs one scenario-based algorithm; returns (N × T estimates, decisions).
fn run_algorithm(
    algo: Algorithm,
    scenario: &Scenario,
    cfg: &SystemConfig,
    soft_alpha: f64,
) -> Result<(nalgebra::DMatrix<C64>, nalgebra::DMatrix<bool>)> {
    match algo {
        Algorithm::SAmp => {
            let d = detect(&s_amp_run(scenario, cfg)?);
            Ok((d.channel_est, d.decisions))
        }
        Algorithm::AmpMmse => {
            let d = detect(&amp_mmse(scenario, cfg)?);
            Ok((d.channel_est, d.decisions))
        }
        Algorithm::AmpSoft => Ok(stack(&amp_soft_run(scenario, cfg, soft_alpha)?)),
        Algorithm::Omp => Ok(stack(&omp_run(scenario, cfg)?)),
        Algorithm::OracleLs => Ok(stack(&oracle_ls_run(scenario)?)),
        Algorithm::SeTrace => unreachable!("state-evolution rows are not scenario-based"),
    }
}

struct TrialOutcome {
    point: usize,
    trial: u64,
    per_algo: Vec<(Algorithm, Result<Tally>, f64)>,
}

fn run_trial(spec: &ExperimentSpec, point: usize, cfg: &SystemConfig, trial: u64, soft_alpha: Option<f64>) -> TrialOutcome {
    let algos: Vec<Algorithm> = spec
        .algorithms
        .iter()
        .copied()
        .filter(|a| *a != Algorithm::SeTrace)
        .collect();
    let scenario = Scenario::generate(cfg, trial);
    let per_algo = algos
        .into_iter()
        .map(|algo| {
            let start = Instant::now();
            let res = scenario.as_ref().map_err(|e| Error::InvalidConfig(e.to_string())).and_then(|sc| {
                let alpha = soft_alpha.unwrap_or(1.0);
                let (est, dec) = run_algorithm(algo, sc, cfg, alpha)?;
                let mut tally = Tally::new(sc.n_adts());
                tally.add_trial(&est, &dec, sc)?;
                Ok(tally)
            });
            (algo, res, start.elapsed().as_secs_f64())
        })
        .collect();
    TrialOutcome { point, trial, per_algo }
}

/// Runs every (sweep point × trial) pair, all algorithms on the same
/// scenario, and aggregates pooled metrics per ADT and overall.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let cfgs: Vec<SystemConfig> = spec.values.iter().map(|&v| spec.point(v)).collect::<Result<_>>()?;
    let mut failures = Vec::new();

    let soft_alpha: Vec<Option<std::result::Result<f64, String>>> = cfgs
        .par_iter()
        .map(|cfg| {
            spec.algorithms
                .contains(&Algorithm::AmpSoft)
                .then(|| calibrate_soft_alpha(cfg).map_err(|e| e.to_string()))
        })
        .collect();

    let tasks: Vec<(usize, u64)> = (0..cfgs.len())
        .flat_map(|p| (0..spec.trials as u64).map(move |k| (p, k)))
        .collect();
    let outcomes: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|&(p, k)| {
            let alpha = soft_alpha[p].as_ref().and_then(|a| a.as_ref().ok().copied());
            run_trial(spec, p, &cfgs[p], k, alpha)
        })
        .collect();

    let mut records = Vec::new();
    let mut trials = Vec::new();
    for (p, cfg) in cfgs.iter().enumerate() {
        let value = spec.values[p];
        let t_len = cfg.n_adts;
        for &algo in &spec.algorithms {
            if algo == Algorithm::SeTrace {
                continue;
            }
            let mut tally = Tally::new(t_len);
            let mut wall = 0.0;
            let mut error = None;
            if algo == Algorithm::AmpSoft {
                if let Some(Err(e)) = &soft_alpha[p] {
                    error = Some(format!("calibration: {e}"));
                }
            }
            for o in outcomes.iter().filter(|o| o.point == p) {
                let Some((_, res, secs)) = o.per_algo.iter().find(|(a, _, _)| *a == algo) else {
                    continue;
                };
                wall += secs;
                match res {
                    Ok(t) => {
                        tally.merge(t);
                        let (x, h, d) = t.total();
                        trials.push(TrialMetrics {
                            sweep_value: value,
                            trial: o.trial,
                            algorithm: algo,
                            nmse_x_db: db_or_nan(&x),
                            nmse_h_db: db_or_nan(&h),
                            dep: d.dep(),
                            h_sums: h,
                            dep_counts: d,
                        });
                    }
                    Err(e) if error.is_none() => error = Some(format!("trial {}: {e}", o.trial)),
                    Err(_) => {}
                }
            }
            let base = MetricsRecord {
                sweep_axis: spec.axis,
                sweep_value: value,
                algorithm: algo.name().to_string(),
                adt: None,
                nmse_x_db: f64::NAN,
                nmse_h_db: f64::NAN,
                dep: f64::NAN,
                trials: spec.trials,
                wall_time_s: wall,
                seed: cfg.seed,
            };
            if let Some(msg) = error {
                failures.push((value, algo.name().to_string(), msg));
                records.push(base);
                continue;
            }
            for t in 0..t_len {
                records.push(MetricsRecord {
                    adt: Some(t + 1),
                    nmse_x_db: db_or_nan(&tally.x[t]),
                    nmse_h_db: db_or_nan(&tally.h[t]),
                    dep: tally.dep[t].dep(),
                    ..base.clone()
                });
            }
            let (x, h, d) = tally.total();
            records.push(MetricsRecord {
                nmse_x_db: db_or_nan(&x),
                nmse_h_db: db_or_nan(&h),
                dep: d.dep(),
                ..base
            });
        }
        if spec.algorithms.contains(&Algorithm::SeTrace) {
            match se_records(spec, cfg, value) {
                Ok(mut rows) => records.append(&mut rows),
                Err(e) => {
                    failures.push((value, "se_trace".into(), e.to_string()));
                    records.push(MetricsRecord {
                        sweep_axis: spec.axis,
                        sweep_value: value,
                        algorithm: "se_trace".into(),
                        adt: None,
                        nmse_x_db: f64::NAN,
                        nmse_h_db: f64::NAN,
                        dep: f64::NAN,
                        trials: spec.se_trajectories,
                        wall_time_s: 0.0,
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    records.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then_with(|| algo_rank(&a.algorithm).cmp(&algo_rank(&b.algorithm)))
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.adt.unwrap_or(usize::MAX).cmp(&b.adt.unwrap_or(usize::MAX)))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    Ok(ExperimentOutput {
        records,
        trials,
        failures,
    })
}

fn algo_rank(name: &str) -> usize {
    Algorithm::ALL
        .iter()
        .position(|a| name.starts_with(a.name()) || (name.starts_with("se_") && *a == Algorithm::SeTrace))
        .unwrap_or(usize::MAX)
}

/// State-evolution predictions as metric rows (`se_s_amp`, `se_amp_mmse`).
fn se_records(spec: &ExperimentSpec, cfg: &SystemConfig, value: f64) -> Result<Vec<MetricsRecord>> {
    let start = Instant::now();
    let trace = se_sequential_trace(cfg, spec.se_trajectories, cfg.seed)?;
    let wall = start.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    for (name, preds) in [("se_s_amp", &trace.predicted_sequential), ("se_amp_mmse", &trace.predicted_static)] {
        for (t, p) in preds.iter().enumerate() {
            rows.push(MetricsRecord {
                sweep_axis: spec.axis,
                sweep_value: value,
                algorithm: name.into(),
                adt: Some(t + 1),
                nmse_x_db: p.nmse_x_db,
                nmse_h_db: p.nmse_h_db,
                dep: p.dep,
                trials: spec.se_trajectories,
                wall_time_s: wall,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// One row of a state-evolution trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct SeRow {
    pub t: usize,
    pub algorithm: &'static str,
    pub nor_ct: f64,
    pub pilot_len: usize,
    pub tx_power_dbm: f64,
}

pub fn run_se(spec: &ExperimentSpec) -> Result<Vec<SeRow>> {
    spec.validate()?;
    let cfgs: Vec<SystemConfig> = spec.values.iter().map(|&v| spec.point(v)).collect::<Result<_>>()?;
    let traces = cfgs
        .iter()
        .map(|cfg| se_sequential_trace(cfg, spec.se_trajectories, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (cfg, trace) in cfgs.iter().zip(&traces) {
        for (name, nor) in [("s_amp", trace.nor_sequential()), ("amp_mmse", trace.nor_static())] {
            for (t, v) in nor.into_iter().enumerate() {
                rows.push(SeRow {
                    t: t + 1,
                    algorithm: name,
                    nor_ct: v,
                    pilot_len: cfg.pilot_len,
                    tx_power_dbm: cfg.tx_power_dbm,
                });
            }
        }
    }
    Ok(rows)
}

pub fn se_csv(rows: &[SeRow]) -> String {
    let mut s = String::from(SE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.t, r.algorithm, r.nor_ct, r.pilot_len, r.tx_power_dbm);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<ExperimentSpec> {
        build_spec(SystemConfig::default(), &parse_config_text(text)?)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let s = spec("").unwrap();
        assert_eq!(s.base, SystemConfig::default());
        assert_eq!(s.axis, SweepAxis::TxPowerDbm);
        assert_eq!(s.values, vec![33.0]);
    }

    #[test]
    fn later_assignments_win() {
        let mut a = parse_config_text("lambda = 0.05\n").unwrap();
        a.push(Assignment {
            key: "lambda".into(),
            value: "0.1".into(),
            line: None,
        });
        let s = build_spec(SystemConfig::default(), &a).unwrap();
        assert_eq!(s.base.lambda, 0.1);
    }

    #[test]
    fn two_axes_rejected_with_line() {
        let err = spec("# sweep\npilot_len = 100,200,300\ntx_power_dbm = 20,30\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 3, .. }), "{err}");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        assert!(matches!(spec("n_users = 10\nbogus\n"), Err(Error::ConfigParse { line: 2, .. })));
        assert!(matches!(spec("\n\nfoo = 1"), Err(Error::ConfigParse { line: 3, .. })));
        assert!(matches!(spec("lambda = abc"), Err(Error::ConfigParse { line: 1, .. })));
    }

    #[test]
    fn r0_axis_and_ranges() {
        let s = spec("r0 = 0,1,2,3\ndist_range_km = 0.1, 0.5 # km\nalgorithms = omp, s_amp").unwrap();
        assert_eq!(s.axis, SweepAxis::R0);
        assert_eq!(s.point(3.0).unwrap().r_scale, 0.125);
        assert_eq!(s.base.dist_range_km, (0.1, 0.5));
        assert_eq!(s.algorithms, vec![Algorithm::SAmp, Algorithm::Omp]);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(spec("lambda = 1.5").is_err());
        assert!(spec("trials = 0").is_err());
        assert!(spec("algorithms = lasso").is_err());
        assert!(spec("pilot_len = 3000").is_err());
    }
}
