use super::{Algorithm, TrialRecord};
use crate::error::Result;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

pub const METRICS_HEADER: &str = "scenario,algorithm,snr_db,sir_db,trials,errors,p_err,p_err_ci_lo,p_err_ci_hi,time_mse_all,time_mse_ok,freq_mse_all,freq_mse_ok";

pub const TRIALS_HEADER: &str = "scenario,algorithm,snr_db,sir_db,trial_id,true_timing,true_cfo,est_timing,est_cfo,success,coarse_timing,coarse_cfo,n_paths,used_z_metric";

/// Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds touch 0 and 1 exactly at the extremes; pin them against rounding
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub scenario: String,
    pub algorithm: String,
    pub snr_db: f64,
    pub sir_db: f64,
    pub trials: usize,
    pub errors: usize,
    pub p_err: f64,
    pub p_err_ci_lo: f64,
    pub p_err_ci_hi: f64,
    /// Samples², over all frames.
    pub time_mse_all: f64,
    /// Samples², successful frames only; NaN when there are none.
    pub time_mse_ok: f64,
    pub freq_mse_all: f64,
    pub freq_mse_ok: f64,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl CellMetrics {
    pub fn from_records(
        scenario: &str,
        algorithm: Algorithm,
        snr_db: f64,
        sir_db: f64,
        records: &[&TrialRecord],
    ) -> Self {
        let trials = records.len();
        let errors = records.iter().filter(|r| !r.success).count();
        let (lo, hi) = wilson_interval(errors, trials, Z_95);
        let dt = |r: &&&TrialRecord| ((r.est_timing - r.true_timing) as f64).powi(2);
        let df = |r: &&&TrialRecord| (r.est_cfo - r.true_cfo).powi(2);
        let ok = || records.iter().filter(|r| r.success);
        Self {
            scenario: scenario.into(),
            algorithm: algorithm.name().into(),
            snr_db,
            sir_db,
            trials,
            errors,
            p_err: if trials == 0 {
                f64::NAN
            } else {
                errors as f64 / trials as f64
            },
            p_err_ci_lo: lo,
            p_err_ci_hi: hi,
            time_mse_all: mean(records.iter().map(|r| dt(&r))),
            time_mse_ok: mean(ok().map(|r| dt(&r))),
            freq_mse_all: mean(records.iter().map(|r| df(&r))),
            freq_mse_ok: mean(ok().map(|r| df(&r))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub algorithms: Vec<Algorithm>,
    /// Sweep-major, algorithms in the requested order.
    pub cells: Vec<CellMetrics>,
    /// Same order as `cells`, trial id ascending within a cell.
    pub trials: Vec<TrialRecord>,
}

impl MetricsReport {
    /// `per_trial[t]` holds trial `t`'s records in `run_trial` order.
    pub fn aggregate(
        scenario: &str,
        algorithms: &[Algorithm],
        sweep: &[(f64, f64)],
        per_trial: Vec<Vec<TrialRecord>>,
    ) -> Self {
        let n_algo = algorithms.len();
        let mut cells = Vec::with_capacity(sweep.len() * n_algo);
        let mut trials = Vec::with_capacity(per_trial.iter().map(Vec::len).sum());
        for (ci, &(snr, sir)) in sweep.iter().enumerate() {
            for (ai, &algo) in algorithms.iter().enumerate() {
                let slot = ci * n_algo + ai;
                let recs: Vec<&TrialRecord> = per_trial.iter().map(|t| &t[slot]).collect();
                cells.push(CellMetrics::from_records(scenario, algo, snr, sir, &recs));
                trials.extend(recs.into_iter().cloned());
            }
        }
        Self {
            scenario: scenario.into(),
            algorithms: algorithms.to_vec(),
            cells,
            trials,
        }
    }

    pub fn cell(&self, algorithm: Algorithm, snr_db: f64, sir_db: f64) -> Option<&CellMetrics> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm.name() && c.snr_db == snr_db && c.sir_db == sir_db)
    }
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for c in &report.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.scenario,
            c.algorithm,
            c.snr_db,
            c.sir_db,
            c.trials,
            c.errors,
            c.p_err,
            c.p_err_ci_lo,
            c.p_err_ci_hi,
            c.time_mse_all,
            c.time_mse_ok,
            c.freq_mse_all,
            c.freq_mse_ok
        );
    }
    s
}

pub fn trials_csv(report: &MetricsReport) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    for t in &report.trials {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            report.scenario,
            t.algorithm.name(),
            t.snr_db,
            t.sir_db,
            t.trial_id,
            t.true_timing,
            t.true_cfo,
            t.est_timing,
            t.est_cfo,
            u8::from(t.success),
            t.aux.coarse_timing,
            t.aux.coarse_cfo,
            t.aux.n_paths,
            u8::from(t.aux.used_z_metric)
        );
    }
    s
}

/// Writes `metrics.csv` and `trials.csv.gz` into `dir`, creating it.
pub fn emit_report(report: &MetricsReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(report))?;
    let file = fs::File::create(dir.join("trials.csv.gz"))?;
    let mut gz = GzEncoder::new(file, Compression::default());
    gz.write_all(trials_csv(report).as_bytes())?;
    gz.finish()?;
    Ok(())
}
