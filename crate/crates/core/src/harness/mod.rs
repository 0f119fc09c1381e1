//! Monte Carlo experiment runner.
//!
//! Every trial derives its own seed from the base seed and the trial id, so
//! channel, CFO, noise, interference and payload are shared by all sweep
//! cells and algorithms of that trial, and parallel runs give the same
//! report as serial ones.

mod config;
mod metrics;
pub mod predict;
pub mod selftest;

pub use config::{parse_list, parse_ranges, InterferenceChoice, RunOptions};
pub use metrics::{
    emit_report, metrics_csv, trials_csv, wilson_interval, CellMetrics, MetricsReport,
    METRICS_HEADER, TRIALS_HEADER, Z_95,
};

use crate::error::{Error, Result};
use crate::impairments::{
    corrupt, sample_eva_channel, wbi_notch_tones, ChannelRealization, ImpairmentConfig,
    Interference,
};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::sync_baseline_sc::run_sc;
use crate::sync_luisa::{run_luisa, CoarseRule, LuisaParams};
use crate::waveform::{
    assemble_frame, make_preamble, BasebandSignal, FrameConfig, PreambleKind, PreambleRecord,
    SubcarrierMap,
};
use rand::Rng;
use rayon::prelude::*;

/// LTE-like sampling rate for N = 256 at 15 kHz spacing.
pub const SAMPLE_RATE_HZ: f64 = 3.84e6;
/// Caps the worker pool when set.
pub const THREADS_ENV: &str = "NCOFDM_SYNC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// S&C preamble, combined Y/Z detection, |ν| ≤ 20.
    LuisaSc,
    /// Simple preamble, Y-only detection, full CFO range.
    LuisaSimple,
    /// S&C preamble, Y-only detection, full CFO range.
    LuisaYOnly,
    ScBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::LuisaSc,
        Algorithm::LuisaSimple,
        Algorithm::LuisaYOnly,
        Algorithm::ScBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LuisaSc => "luisa-sc",
            Algorithm::LuisaSimple => "luisa-simple",
            Algorithm::LuisaYOnly => "luisa-yonly",
            Algorithm::ScBaseline => "sc-baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }

    pub fn preamble_kind(self) -> PreambleKind {
        match self {
            Algorithm::LuisaSimple => PreambleKind::Simple,
            _ => PreambleKind::SchmidlCox,
        }
    }
}

/// Knobs shared by the algorithm presets.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSettings {
    /// Overrides the preset CFO bound of every LUISA variant;
    /// `Some(None)` forces the full range.
    pub nu_max: Option<Option<f64>>,
    pub p_fd: f64,
    pub gamma: usize,
    pub presence_pfd: Option<f64>,
    /// Integer CFO search range of the S&C baseline.
    pub sc_range: i64,
}

impl Default for AlgorithmSettings {
    fn default() -> Self {
        Self {
            nu_max: None,
            p_fd: 1e-5,
            gamma: 2,
            presence_pfd: None,
            sc_range: 20,
        }
    }
}

impl AlgorithmSettings {
    /// `None` for the baseline.
    pub fn luisa_params(&self, algo: Algorithm, n_cp: usize) -> Option<LuisaParams> {
        let (rule, nu_max) = match algo {
            Algorithm::LuisaSc => (CoarseRule::YZCombined, Some(20.0)),
            Algorithm::LuisaSimple | Algorithm::LuisaYOnly => (CoarseRule::YOnly, None),
            Algorithm::ScBaseline => return None,
        };
        let mut p = LuisaParams::new(n_cp);
        p.rule = rule;
        p.nu_max = self.nu_max.unwrap_or(nu_max);
        p.p_fd = self.p_fd;
        p.gamma = self.gamma;
        p.presence_pfd = self.presence_pfd;
        Some(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelProfile {
    Eva,
    /// Single unit tap.
    Flat,
}

/// Per-frame random notch around a randomly placed NBI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsaNotch {
    pub width: usize,
    /// NBI frequency drawn uniformly from this interval.
    pub freq_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Occupied subcarriers (the initial set for DSA).
    pub map: SubcarrierMap,
    pub n_cp: usize,
    /// Preamble included.
    pub n_symbols: usize,
    pub interframe_gap: usize,
    /// Applied whenever the SIR is finite. For DSA the NBI frequency is
    /// redrawn per frame.
    pub interference: Interference,
    pub dsa: Option<DsaNotch>,
    pub cfo_range: (f64, f64),
    pub channel_profile: ChannelProfile,
    pub trials: usize,
    pub base_seed: u64,
}

impl Scenario {
    fn base(name: &str, map: SubcarrierMap, interference: Interference) -> Self {
        Self {
            name: name.into(),
            map,
            n_cp: 16,
            n_symbols: 11,
            interframe_gap: 2,
            interference,
            dsa: None,
            cfo_range: (-3.0, 3.0),
            channel_profile: ChannelProfile::Eva,
            trials: 10_000,
            base_seed: 0,
        }
    }

    /// No guard subcarriers, notch at 17..31, NBI at 24.
    pub fn nogs() -> Self {
        let map =
            SubcarrierMap::from_ranges(256, &[(-100, -1), (1, 16), (32, 100)]).expect("static map");
        Self::base(
            "nogs",
            map,
            Interference::Nbi {
                center_freq: 24.0,
                phase: None,
            },
        )
    }

    /// 15 guard subcarriers on each side of the notch, NBI at 24.
    pub fn gs() -> Self {
        let map =
            SubcarrierMap::from_ranges(256, &[(-85, -1), (1, 1), (47, 85)]).expect("static map");
        Self::base(
            "gs",
            map,
            Interference::Nbi {
                center_freq: 24.0,
                phase: None,
            },
        )
    }

    /// Random NBI frequency per frame with a 45-subcarrier notch around it.
    pub fn dsa() -> Self {
        let map = SubcarrierMap::from_ranges(256, &[(-100, -1), (1, 100)]).expect("static map");
        let mut s = Self::base(
            "dsa",
            map,
            Interference::Nbi {
                center_freq: 0.0,
                phase: None,
            },
        );
        s.dsa = Some(DsaNotch {
            width: 45,
            freq_range: (-128.0, 127.0),
        });
        s
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim() {
            "nogs" => Ok(Self::nogs()),
            "gs" => Ok(Self::gs()),
            "dsa" => Ok(Self::dsa()),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario '{other}'"
            ))),
        }
    }

    pub fn n_fft(&self) -> usize {
        self.map.n_fft
    }

    /// Half-bin tones over the largest gap of unoccupied positive bins
    /// between occupied ones, i.e. the spectrum notch.
    pub fn notch_wbi(&self) -> Result<Interference> {
        let occ = &self.map.occupied;
        let (lo, hi) = occ
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|(a, b)| b - a > 2)
            .max_by_key(|(a, b)| (b - a, *a))
            .ok_or_else(|| Error::InvalidArgument("map has no notch for WBI".into()))?;
        Ok(Interference::Wbi {
            bins: wbi_notch_tones(lo, hi),
        })
    }
}

/// `I` with the cyclic block of `width` bins centred on `round(f)` removed.
pub fn carve_notch(map: &SubcarrierMap, f: f64, width: usize) -> Result<SubcarrierMap> {
    let n = map.n_fft as i64;
    let c = f.round() as i64;
    let half = (width / 2) as i64;
    let kept = map.occupied.iter().copied().filter(|&k| {
        let d = (k - c).rem_euclid(n);
        d.min(n - d) > half
    });
    SubcarrierMap::new(map.n_fft, kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialAux {
    /// `n_M` for LUISA, plateau midpoint for the baseline.
    pub coarse_timing: i64,
    /// `ν̂_0` for LUISA, the fractional estimate for the baseline.
    pub coarse_cfo: f64,
    pub n_paths: usize,
    pub used_z_metric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub algorithm: Algorithm,
    pub snr_db: f64,
    pub sir_db: f64,
    pub true_timing: i64,
    pub true_cfo: f64,
    pub est_timing: i64,
    pub est_cfo: f64,
    pub success: bool,
    pub aux: TrialAux,
}

/// Timing error below `N_CP` samples and CFO error below half a subcarrier.
pub fn is_success(
    est_timing: i64,
    true_timing: i64,
    est_cfo: f64,
    true_cfo: f64,
    n_cp: usize,
) -> bool {
    (est_timing - true_timing).abs() < n_cp as i64 && (est_cfo - true_cfo).abs() < 0.5
}

/// Runs one algorithm on a received signal; returns `(timing, cfo, aux)`.
pub fn estimate(
    algo: Algorithm,
    settings: &AlgorithmSettings,
    r: &BasebandSignal,
    rp: &PreambleRecord,
    n_cp: usize,
) -> Result<(i64, f64, TrialAux)> {
    match settings.luisa_params(algo, n_cp) {
        Some(params) => {
            let s = run_luisa(r, rp, &params)?;
            let aux = TrialAux {
                coarse_timing: s.n_m,
                coarse_cfo: s.nu_hat.first().copied().unwrap_or(f64::NAN),
                n_paths: s.paths.len(),
                used_z_metric: s.used_z_metric,
            };
            if !s.detected {
                return Ok((i64::MIN / 2, f64::NAN, aux));
            }
            Ok((s.first_path, s.cfo(), aux))
        }
        None => {
            let s = run_sc(r, rp, settings.sc_range)?;
            let aux = TrialAux {
                coarse_timing: s.timing,
                coarse_cfo: s.frac,
                n_paths: 0,
                used_z_metric: false,
            };
            Ok((s.timing, s.cfo, aux))
        }
    }
}

/// Seed of trial `trial_id`.
pub fn trial_seed(base_seed: u64, trial_id: u64) -> u64 {
    derive_seed(derive_seed(base_seed, stream::TRIAL), trial_id)
}

/// Everything drawn once per trial.
#[derive(Debug, Clone)]
pub struct TrialDraw {
    pub seed: u64,
    pub cfo: f64,
    pub channel: ChannelRealization,
    pub map: SubcarrierMap,
    pub interference: Interference,
}

pub fn draw_trial(s: &Scenario, trial_id: u64) -> Result<TrialDraw> {
    let seed = trial_seed(s.base_seed, trial_id);
    let (lo, hi) = s.cfo_range;
    let cfo = if hi > lo {
        stream_rng(seed, stream::CFO).gen_range(lo..hi)
    } else {
        lo
    };
    let channel = match s.channel_profile {
        ChannelProfile::Eva => sample_eva_channel(s.n_fft(), s.n_cp, SAMPLE_RATE_HZ, seed)?,
        ChannelProfile::Flat => ChannelRealization::identity(),
    };
    let (map, interference) = match s.dsa {
        Some(d) => {
            let f = stream_rng(seed, stream::NBI_FREQ).gen_range(d.freq_range.0..d.freq_range.1);
            let interference = match &s.interference {
                Interference::Nbi { phase, .. } => Interference::Nbi {
                    center_freq: f,
                    phase: *phase,
                },
                other => other.clone(),
            };
            (carve_notch(&s.map, f, d.width)?, interference)
        }
        None => (s.map.clone(), s.interference.clone()),
    };
    Ok(TrialDraw {
        seed,
        cfo,
        channel,
        map,
        interference,
    })
}

/// All sweep cells and algorithms of one trial, ordered cell-major.
pub fn run_trial(
    s: &Scenario,
    algorithms: &[Algorithm],
    settings: &AlgorithmSettings,
    sweep: &[(f64, f64)],
    trial_id: u64,
) -> Result<Vec<TrialRecord>> {
    let draw = draw_trial(s, trial_id)?;
    let mut frames: Vec<(PreambleKind, PreambleRecord, BasebandSignal, f64)> = Vec::new();
    for kind in [PreambleKind::SchmidlCox, PreambleKind::Simple] {
        if !algorithms.iter().any(|a| a.preamble_kind() == kind) {
            continue;
        }
        let cfg = FrameConfig::new(
            draw.map.clone(),
            s.n_cp,
            s.n_symbols,
            kind,
            s.interframe_gap,
        )?;
        let rp = make_preamble(&cfg, derive_seed(draw.seed, stream::PREAMBLE))?;
        let x = assemble_frame(&cfg, derive_seed(draw.seed, stream::DATA), &rp)?;
        frames.push((kind, rp, x, cfg.signal_power()));
    }
    let true_timing = draw.channel.first_path() as i64;
    let mut out = Vec::with_capacity(sweep.len() * algorithms.len());
    for &(snr_db, sir_db) in sweep {
        let interference = if sir_db.is_infinite() && sir_db > 0.0 {
            Interference::None
        } else {
            draw.interference.clone()
        };
        let mut received = Vec::with_capacity(frames.len());
        for (kind, _, x, power) in &frames {
            let imp = ImpairmentConfig {
                n_fft: s.n_fft(),
                cfo: draw.cfo,
                snr_db,
                interference: interference.clone(),
                sir_db,
                signal_power: *power,
            };
            imp.validate(&draw.map)?;
            received.push((*kind, corrupt(x, &imp, &draw.channel, draw.seed)?));
        }
        for &algo in algorithms {
            let i = frames
                .iter()
                .position(|f| f.0 == algo.preamble_kind())
                .expect("frame built for every preamble kind in use");
            let (est_timing, est_cfo, aux) =
                estimate(algo, settings, &received[i].1, &frames[i].1, s.n_cp)?;
            out.push(TrialRecord {
                trial_id,
                algorithm: algo,
                snr_db,
                sir_db,
                true_timing,
                true_cfo: draw.cfo,
                est_timing,
                est_cfo,
                success: is_success(est_timing, true_timing, est_cfo, draw.cfo, s.n_cp),
                aux,
            });
        }
    }
    Ok(out)
}

/// Worker pool sized by `NCOFDM_SYNC_THREADS` (rayon's default otherwise).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}='{v}' is not a count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Runs `s.trials` trials over every sweep cell and algorithm.
pub fn run_scenario(
    s: &Scenario,
    algorithms: &[Algorithm],
    settings: &AlgorithmSettings,
    sweep: &[(f64, f64)],
) -> Result<MetricsReport> {
    if algorithms.is_empty() {
        return Err(Error::InvalidArgument("no algorithm selected".into()));
    }
    log::info!(
        "scenario {}: {} trials x {} cells x {} algorithms",
        s.name,
        s.trials,
        sweep.len(),
        algorithms.len()
    );
    let per_trial: Vec<Vec<TrialRecord>> = if sweep.is_empty() {
        Vec::new()
    } else {
        thread_pool()?.install(|| {
            (0..s.trials as u64)
                .into_par_iter()
                .map(|t| run_trial(s, algorithms, settings, sweep, t))
                .collect::<Result<Vec<_>>>()
        })?
    };
    Ok(MetricsReport::aggregate(
        &s.name, algorithms, sweep, per_trial,
    ))
}
