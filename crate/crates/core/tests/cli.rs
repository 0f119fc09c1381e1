use ncofdm_sync::sync_luisa::{run_luisa, LuisaParams};
use ncofdm_sync::waveform::{
    assemble_frame, make_preamble, FrameConfig, PreambleKind, SubcarrierMap,
};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncofdm-sync"))
}

#[test]
fn library_round_trip() {
    let map = SubcarrierMap::from_ranges(256, &[(-100, -1), (1, 16), (32, 100)]).unwrap();
    let cfg = FrameConfig::new(map, 16, 11, PreambleKind::SchmidlCox, 2).unwrap();
    let rp = make_preamble(&cfg, 7).unwrap();
    let frame = assemble_frame(&cfg, 8, &rp).unwrap();
    let sync = run_luisa(&frame, &rp, &LuisaParams::new(16)).unwrap();
    // lag-2 autocorrelation sidelobes of the notched map can be taken as paths
    assert!(sync.first_path.abs() < 16, "{}", sync.first_path);
    assert!(sync.cfo().abs() < 1e-3, "{}", sync.cfo());
}

#[test]
fn run_writes_reports_and_config_is_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(
        &config,
        "# small sweep\nscenario = gs\nalgo = luisa-sc, sc-baseline\nsnr = 10\ntrials = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--sir", "-10,inf", "--trials", "2", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    // header + 2 algorithms x 2 SIR values
    assert_eq!(metrics.lines().count(), 5);
    assert!(metrics
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(4) == Some("2")));
    assert!(out.join("trials.csv.gz").exists());
}

#[test]
fn errors_exit_nonzero() {
    let bad = bin()
        .args(["run", "--scenario", "nope", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
    let usage = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn predict_and_selftest() {
    let p = bin()
        .args(["predict", "--what", "cfo", "--snr", "20"])
        .output()
        .unwrap();
    assert!(p.status.success());
    let text = String::from_utf8(p.stdout).unwrap();
    assert!(text.starts_with("snr_db,variance,crlb,ratio\n20,"));
    let s = bin().arg("selftest").output().unwrap();
    assert!(s.status.success());
    assert!(!String::from_utf8_lossy(&s.stdout).contains("FAIL"));
}
