//! Quick invariant checks run by `ncofdm-sync selftest`.

use super::{
    metrics_csv, run_scenario, wilson_interval, Algorithm, AlgorithmSettings, Scenario, Z_95,
};
use crate::analytic::{
    cfo_estimator_bounds, interference_variance_component, nbi_psd, path_component_moments,
    preamble_psd, CaseId,
};
use crate::dsp::fft_in_place;
use crate::error::Result;
use crate::impairments::{apply_cfo, apply_channel, sample_eva_channel};
use crate::rng::rng_from;
use crate::sync_baseline_sc::{run_sc, sc_trace};
use crate::sync_luisa::{run_luisa, sync_variable, sync_variable_freq, LuisaParams};
use crate::waveform::{assemble_frame, make_preamble, BasebandSignal, FrameConfig, PreambleKind};
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn frame(
    kind: PreambleKind,
    seed: u64,
) -> Result<(crate::waveform::PreambleRecord, BasebandSignal)> {
    let cfg = FrameConfig::new(Scenario::nogs().map, 16, 3, kind, 2)?;
    let rp = make_preamble(&cfg, seed)?;
    let x = assemble_frame(&cfg, seed ^ 0x55, &rp)?;
    Ok((rp, x))
}

fn time_vs_frequency() -> Result<(bool, String)> {
    let mut rng = rng_from(11);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let (rp, x) = frame(PreambleKind::Simple, case)?;
        let n = rng.gen_range(-300..500i64);
        let k = rng.gen_range(-128..128i64);
        let y = sync_variable(&x, &rp, n, &[k])?[0];
        let mut r = x.window(n, rp.n_fft())?.to_vec();
        fft_in_place(&mut r);
        let f = sync_variable_freq(&r, &rp.freq_symbols, k);
        worst = worst.max((y - f).norm() / y.norm().max(1e-300));
    }
    Ok((worst < 1e-9, format!("max relative error {worst:.2e}")))
}

fn noiseless_sync() -> Result<(bool, String)> {
    let (rp, x) = frame(PreambleKind::SchmidlCox, 5)?;
    let ch = sample_eva_channel(256, 16, super::SAMPLE_RATE_HZ, 5)?;
    let nu = 1.37;
    let r = apply_cfo(&apply_channel(&x, &ch), nu, 256);
    let l = run_luisa(&r, &rp, &LuisaParams::new(16))?;
    let s = run_sc(&r, &rp, 20)?;
    let ok = super::is_success(l.first_path, 0, l.cfo(), nu, 16)
        && super::is_success(s.timing, 0, s.cfo, nu, 16);
    Ok((
        ok,
        format!(
            "LUISA ({}, {:.4}), S&C ({}, {:.4}), true (0, {nu})",
            l.first_path,
            l.cfo(),
            s.timing,
            s.cfo
        ),
    ))
}

fn sc_metric_cfo_invariant() -> Result<(bool, String)> {
    let (_, x) = frame(PreambleKind::SchmidlCox, 6)?;
    let a = sc_trace(&x, 256)?;
    let b = sc_trace(&apply_cfo(&x, -2.6, 256), 256)?;
    let d = a
        .timing_metric
        .iter()
        .zip(&b.timing_metric)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    Ok((d < 1e-9, format!("max metric difference {d:.2e}")))
}

fn analytic_identities() -> Result<(bool, String)> {
    let (v, c) = cfo_estimator_bounds(256, 100.0)?;
    let ratio_ok = (v / c - PI * PI / 6.0).abs() < 1e-12 && c < v;
    let zero = path_component_moments(
        CaseId::C,
        PreambleKind::SchmidlCox,
        0,
        0,
        0.0,
        1.0,
        256,
        16,
        1.0,
    )?;
    let map = Scenario::nogs().map;
    let support = PreambleKind::SchmidlCox.support(&map.occupied);
    let vi = interference_variance_component(
        &nbi_psd(256, 24, 1.0),
        &preamble_psd(256, PreambleKind::SchmidlCox, &support),
        0,
    );
    let ok = ratio_ok && zero.variance.abs() < 1e-9 && vi == 0.0;
    Ok((
        ok,
        format!(
            "var/crlb {:.4}, case-C variance at δ=1 {:.1e}, NBI V_i(0) {vi}",
            v / c,
            zero.variance
        ),
    ))
}

fn wilson_brackets() -> Result<(bool, String)> {
    let ok = [(0usize, 10usize), (3, 10), (10, 10), (17, 10_000)]
        .iter()
        .all(|&(e, n)| {
            let (lo, hi) = wilson_interval(e, n, Z_95);
            let p = e as f64 / n as f64;
            lo <= p && p <= hi && hi - lo > 0.0
        });
    Ok((ok, "Wilson intervals contain the point estimate".into()))
}

fn deterministic_report() -> Result<(bool, String)> {
    let mut s = Scenario::gs();
    s.trials = 4;
    s.base_seed = 99;
    let sweep = [(6.0, -10.0)];
    let algos = [Algorithm::LuisaSc, Algorithm::ScBaseline];
    let st = AlgorithmSettings::default();
    let a = metrics_csv(&run_scenario(&s, &algos, &st, &sweep)?);
    let b = metrics_csv(&run_scenario(&s, &algos, &st, &sweep)?);
    Ok((a == b, format!("{} bytes of metrics", a.len())))
}

/// Runs every check; failures to evaluate count as failed checks.
pub fn run_selftest() -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn() -> Result<(bool, String)>); 6] = [
        ("time/frequency synchronization variable", time_vs_frequency),
        ("noiseless EVA synchronization", noiseless_sync),
        ("S&C metric CFO invariance", sc_metric_cfo_invariant),
        ("analytic identities", analytic_identities),
        ("Wilson interval", wilson_brackets),
        ("report determinism", deterministic_report),
    ];
    checks
        .iter()
        .map(|&(name, f)| match f() {
            Ok((passed, detail)) => CheckOutcome {
                name,
                passed,
                detail,
            },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}
