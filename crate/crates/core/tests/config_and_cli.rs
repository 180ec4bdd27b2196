use std::path::{Path, PathBuf};
use std::process::Command;

use dqan::scenario::{self, parse_config, RunMode};
use dqan::Error;
use proptest::prelude::*;

fn bundled_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_80km.cfg")
}

/// Two users, a short sensing trace and no DM solve: small enough for CI.
const SMALL: &str = r#"
[run]
seed = 11

[plan]
n_users = 2

[modulator]

[filters]

[channel]
length_km = 20

[noise]
system_phase_psd = 1e-10

[[events]]
position_km = 7.0
kind = "tap_burst"
frequency_hz = 10000.0
amplitude_rad = 1.0
decay_s = 0.0002
start_s = 0.02
duration_s = 0.0024

[receiver]

[keyrate]
methods = ["gaussian", "plob"]

[qkd]
slots = 100000
loopback_slots = 64

[sensing]
bands = ["10kHz"]
duration_s = 0.05

[[users]]
modulation_variance = 1.17
electronic_noise = 0.19
efficiency = 0.51
excess_noise = 0.01

[[users]]
modulation_variance = 1.2
electronic_noise = 0.15
efficiency = 0.5
excess_noise = 0.012
"#;

fn dqan() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqan"))
}

fn write_small(dir: &Path) -> PathBuf {
    let p = dir.join("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p
}

#[test]
fn bundled_config_loads() {
    let cfg = scenario::load_config(&bundled_cfg()).unwrap();
    assert_eq!(cfg.n_users(), 8);
    assert!(cfg.validate().is_ok());
    assert!((cfg.channel_spec().transmittance() - 0.0251).abs() < 1e-4);
}

#[test]
fn wide_filter_is_a_design_violation() {
    let text = SMALL.replace("[filters]\n", "[filters]\nlinewidth_hz = 300e6\n");
    let err = parse_config(&text).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("linewidth"), "{err}");
}

#[test]
fn effective_config_round_trips() {
    let cfg = parse_config(SMALL).unwrap();
    let again = parse_config(&cfg.to_toml()).unwrap();
    assert_eq!(cfg.hash(), again.hash());
}

#[test]
fn run_writes_every_artifact_and_is_deterministic() {
    let cfg = parse_config(SMALL).unwrap();
    let a = scenario::run_scenario(&cfg, RunMode::Both, 11).unwrap();
    let b = scenario::run_scenario(&cfg, RunMode::Both, 11).unwrap();
    assert_eq!(a.report_json(), b.report_json());
    assert_eq!(scenario::report_hash(&a.report), scenario::report_hash(&b.report));
    let c = scenario::run_scenario(&cfg, RunMode::Both, 12).unwrap();
    assert_ne!(scenario::report_hash(&a.report), scenario::report_hash(&c.report));

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    for f in ["report.json", "timing.json", "design.csv", "keyrates.csv", "estimates.csv", "loopback.csv", "localizations.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let keyrates = std::fs::read_to_string(dir.path().join("keyrates.csv")).unwrap();
    assert_eq!(keyrates.lines().count(), 1 + 2 * 2);
    let sensing = a.report.sensing.as_ref().unwrap();
    let hit = sensing.localizations[0].result.unwrap();
    assert!((hit.estimated_km - 7.0).abs() < 0.2, "{hit:?}");
}

#[test]
fn cli_validate_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let v = dqan().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(String::from_utf8_lossy(&v.stdout).contains("2 users"));

    let out = dir.path().join("out");
    let r = dqan().args(["run"]).arg(&cfg).args(["--mode", "qkd", "--seed", "3", "--out"]).arg(&out).output().unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("report.json").is_file());
    assert!(!out.join("localizations.csv").exists());
}

#[test]
fn cli_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let out = dir.path().join("sweep");
    let r = dqan().arg("sweep").arg(&cfg).args(["--var", "distance", "--grid", "10,30", "--out"]).arg(&out).output().unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("L_km,T,eps,K_gauss_bps,K_dm_bps,K_plob_bps"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.cfg");
    std::fs::write(&empty, "").unwrap();
    let code = |args: &[&std::ffi::OsStr]| dqan().args(args).output().unwrap().status.code();

    assert_eq!(code(&["validate".as_ref(), empty.as_os_str()]), Some(2));

    let unknown = dir.path().join("unknown.cfg");
    std::fs::write(&unknown, SMALL.replace("[channel]\n", "[channel]\nlenght_km = 3\n")).unwrap();
    assert_eq!(code(&["validate".as_ref(), unknown.as_os_str()]), Some(2));

    let missing = dir.path().join("nope.cfg");
    assert_ne!(code(&["validate".as_ref(), missing.as_os_str()]), Some(0));

    let cfg = write_small(dir.path());
    assert_eq!(code(&["run".as_ref(), cfg.as_os_str(), "--mode".as_ref(), "bogus".as_ref()]), Some(2));
    assert_eq!(code(&["sweep".as_ref(), cfg.as_os_str(), "--var".as_ref(), "distance".as_ref()]), Some(2));
    assert_eq!(code(&["frobnicate".as_ref()]), Some(2));

    // the output directory is a regular file: a runtime failure
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let args = ["run".as_ref(), cfg.as_os_str(), "--mode".as_ref(), "qkd".as_ref(), "--out".as_ref(), blocker.as_os_str()];
    assert_eq!(code(&args), Some(3));
}

fn section_soup() -> impl Strategy<Value = String> {
    let line = prop_oneof![
        Just("[plan]".to_string()),
        Just("[channel]".to_string()),
        Just("[[users]]".to_string()),
        Just("[noise]".to_string()),
        Just("[keyrate]".to_string()),
        (prop::sample::select(vec!["length_km", "n_users", "fock_cutoff", "excess_noise", "linewidth_hz", "rate", "baud"]), -1e9f64..1e9)
            .prop_map(|(k, v)| format!("{k} = {v}")),
        "[a-z_=\\[\\] \"0-9.]{0,20}",
    ];
    prop::collection::vec(line, 0..20).prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parsing_never_panics(text in section_soup()) {
        if let Ok(cfg) = parse_config(&text) {
            let _ = cfg.validate();
        }
    }

    #[test]
    fn perturbed_numbers_are_accepted_or_rejected_cleanly(
        length in -50.0f64..500.0, lw in -1e8f64..1e9, va in -1.0f64..5.0, eps in -0.1f64..2.0,
    ) {
        let text = SMALL
            .replace("length_km = 20", &format!("length_km = {length:?}"))
            .replace("[filters]\n", &format!("[filters]\nlinewidth_hz = {lw:?}\n"))
            .replace("modulation_variance = 1.17", &format!("modulation_variance = {va:?}"))
            .replace("excess_noise = 0.01\n", &format!("excess_noise = {eps:?}\n"));
        match parse_config(&text) {
            Ok(cfg) => match cfg.validate() {
                Ok(()) => prop_assert!(length > 0.0 && lw > 0.0 && va > 0.0 && eps >= 0.0),
                Err(e) => prop_assert!(matches!(e, Error::Validation(_) | Error::Config(_)), "{e}"),
            },
            Err(e) => prop_assert!(e.is_config()),
        }
    }
}
