use std::fs;
use std::process::{Command, Output};

fn samp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samp")).args(args).output().expect("spawn samp")
}

const SMALL: &[&str] = &[
    "--set", "n_users=120", "--set", "pilot_len=40", "--set", "n_adts=3", "--trials", "2",
];

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, "# power sweep\ntx_power_dbm = 23, 33\nalgorithms = s_amp, amp_mmse, omp, oracle_ls\nseed = 7\n").unwrap();
    let mut csvs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        let o = samp(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(fs::read(&out).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sweep_axis,sweep_value,algorithm,adt,nmse_x_db,nmse_h_db,dep,trials,seed"));
    // 2 points × 4 algorithms × (3 ADTs + pooled).
    assert_eq!(lines.count(), 2 * 4 * 4);
    assert!(text.contains("tx_power_dbm,23,oracle_ls,all,"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "seed = 1\nalgorithms = omp\n").unwrap();
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--seed", "99", "--algos", "amp_mmse"];
    args.extend_from_slice(SMALL);
    let o = samp(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",amp_mmse,") && l.ends_with(",99")), "{text}");
}

#[test]
fn bad_config_exits_with_code_2_and_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "seed = 1\npilot_len = 40, 60\nlambda = 0.05, 0.1\n").unwrap();
    let o = samp(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    assert_eq!(samp(&["run", "--set", "nonsense"]).status.code(), Some(2));
    assert_eq!(samp(&["run", "--set", "lambda=1.5"]).status.code(), Some(2));
    assert_eq!(samp(&["run", "--config", "/nonexistent/samp.cfg"]).status.code(), Some(2));
    assert_eq!(samp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn se_trace_csv() {
    let o = samp(&[
        "se", "--pilot-len", "40,80", "--set", "n_users=200", "--set", "n_adts=4", "--set", "se_trajectories=2000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "t,algorithm,nor_ct,pilot_len,tx_power_dbm");
    assert_eq!(rows.len(), 1 + 2 * 2 * 4);
    assert!(rows[1].starts_with("1,s_amp,"));
}

#[test]
fn check_runs_selected_criteria() {
    let o = samp(&["check", "1", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert_eq!(samp(&["check", "42"]).status.code(), Some(2));
}
