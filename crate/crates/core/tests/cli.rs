use std::path::Path;
use std::process::{Command, Output};

use dmcast::experiment::{AngleGrid, ExperimentConfig};

fn dmcast(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dmcast"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        trials: 10_000,
        angle_grid: AngleGrid {
            points_deg: vec![30.0, 90.0],
            ..AngleGrid::default()
        },
        ..ExperimentConfig::default()
    }
}

fn header_config(text: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .expect("config header")
        .to_string()
}

#[test]
fn invalid_configs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let cases = [
        r#"{"trials": 100}"#,
        r#"{"layout": {"desired_angles": [[30, 190]], "eavesdropper_angles": [90]}}"#,
        r#"{"angle_error": {"realizations": 10}}"#,
        r#"{"array": {"n_antennas": 4, "spacing_wavelengths": 0.5}}"#,
        r#"{"unknown_field": true}"#,
        r#"{"power": {"beta1_sq": 1.5}}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&path, text).unwrap();
        let o = dmcast(&["ber-angle"], Some(&path), &out);
        assert_eq!(
            o.status.code(),
            Some(2),
            "case {text}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stderr).contains("invalid config"));
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(
        dmcast(&["flops"], Some(&missing), &out).status.code(),
        Some(2)
    );
    let o = dmcast(&["flops", "--threads", "0"], None, &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, small_config().to_json()).unwrap();
    let first = dir.path().join("first.csv");
    let o = dmcast(&["ber-angle", "--seed", "99"], Some(&cfg_path), &first);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# dmcast ber-angle"));
    assert_eq!(lines.next(), Some("# seed: 99"));
    assert!(text.contains("\nscheme,group,angle_deg,ber,trials\n"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert!(rows[0].starts_with("max-grp-nsp,1,30,"));
    assert!(rows.iter().all(|r| r.ends_with(",10000")));

    let replay_cfg = dir.path().join("replay.json");
    std::fs::write(&replay_cfg, header_config(&text)).unwrap();
    let replay = dir.path().join("replay.csv");
    assert!(dmcast(&["ber-angle"], Some(&replay_cfg), &replay)
        .status
        .success());
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&replay).unwrap()
    );

    let other = dir.path().join("other.csv");
    assert!(
        dmcast(&["ber-angle", "--seed", "100"], Some(&cfg_path), &other)
            .status
            .success()
    );
    assert_ne!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&other).unwrap()
    );
}

#[test]
fn ssr_and_flops_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ssr.csv");
    assert!(dmcast(&["ssr-snr"], None, &out).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "scheme,group,snr_db,ssr");
    assert_eq!(rows.len(), 1 + 3 * 2 * 8);

    let mut c = ExperimentConfig::default();
    c.flops.k = vec![2, 4, 8];
    let cfg_path = dir.path().join("f.json");
    std::fs::write(&cfg_path, c.to_json()).unwrap();
    let out = dir.path().join("flops.csv");
    assert!(dmcast(&["flops"], Some(&cfg_path), &out).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\nmethod,K,T,N,M,flops\nmax-grp-nsp,2,2,16,2,10104\n"));
    assert!(text.contains("# warning: skipped max-grp-nsp K=8 T=2 N=16 M=2"));
    assert!(text.contains("# warning: no K exponent for leakage between 2 and 8"));

    c.flops.auto_scale_n = true;
    std::fs::write(&cfg_path, c.to_json()).unwrap();
    assert!(dmcast(&["flops"], Some(&cfg_path), &out).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\nleakage,8,2,18,2,"));
    assert!(text.contains("# exponent,leakage,K,2,8,"));
    assert!(!text.contains("# warning"));
}
