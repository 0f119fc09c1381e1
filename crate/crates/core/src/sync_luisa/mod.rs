//! Preamble cross-correlation synchronizer.
//!
//! The central quantity is the synchronization variable
//! `Y(n,k) = sum_m r(n+m) conj(x_m) exp(-j2π mk/N)`, an unnormalized DFT of
//! the received window multiplied by the conjugate reference preamble. Its
//! frequency-domain form is `Y(n,k) = N^{-1/2} sum_{k1} conj(d_{k1}) R(n, k+k1)`
//! where `R(n,.)` is the unnormalized DFT of `r(n..n+N-1)`.
//!
//! The pipeline in [`run_luisa`]: coarse time / integer CFO from the peak of
//! `|Y|^2` (optionally `|Z|^2`), coarse fractional CFO by three-bin
//! interpolation, multipath detection around the peak, iterative fine CFO
//! over the detected paths, and a per-path channel estimate.

mod cfo;
mod grid;
mod noise;
mod paths;

pub use cfo::{candan, coarse_frac_cfo, fine_cfo_update, CfoUpdate};
pub use grid::{coarse_detect, z_value, CoarseDecision, CoarseRule, SyncGrid};
pub use noise::{estimate_noise_floor, path_threshold, presence_threshold, NoiseFloorTracker};
pub use paths::{detect_paths, initial_channel_estimate, PathDetection};

use crate::dsp::{bin_of, cis, fft_in_place, C64};
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, PreambleRecord};
use grid::CoarseTracker;
use std::f64::consts::PI;

/// `r(n+m) conj(x_m)` for `m = 0..N-1`, the DFT input of `Y(n,.)`.
fn product(window: &[C64], rp: &PreambleRecord, out: &mut [C64]) {
    for ((o, &r), x) in out.iter_mut().zip(window).zip(&rp.time_samples) {
        *o = r * x.conj();
    }
}

/// `Y(n,k)` for all `N` integer offsets, in FFT bin order (`k mod N`).
pub fn sync_spectrum(r: &BasebandSignal, rp: &PreambleRecord, n: i64) -> Result<Vec<C64>> {
    let n_fft = rp.n_fft();
    let window = r.window(n, n_fft)?;
    let mut buf = vec![C64::new(0.0, 0.0); n_fft];
    product(window, rp, &mut buf);
    fft_in_place(&mut buf);
    Ok(buf)
}

/// `Y(n,k)` for each requested integer `k`.
pub fn sync_variable(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    n: i64,
    k_set: &[i64],
) -> Result<Vec<C64>> {
    let spec = sync_spectrum(r, rp, n)?;
    Ok(k_set.iter().map(|&k| spec[bin_of(k, rp.n_fft())]).collect())
}

/// Frequency-domain evaluation of `Y(n,k)` from the window DFT `R(n,.)` and
/// the preamble symbols (both in bin order).
pub fn sync_variable_freq(r_window_dft: &[C64], preamble_symbols: &[C64], k: i64) -> C64 {
    let n_fft = r_window_dft.len();
    let sum: C64 = preamble_symbols
        .iter()
        .enumerate()
        .filter(|(_, d)| d.norm_sqr() > 0.0)
        .map(|(b, d)| d.conj() * r_window_dft[bin_of(k + b as i64, n_fft)])
        .sum();
    sum / (n_fft as f64).sqrt()
}

/// Reference preamble correlator at a (possibly non-integer) offset `f`:
/// `conj(x_m) exp(-j2π m f/N)`.
#[derive(Debug, Clone)]
pub struct Steering {
    pub freq: f64,
    taps: Vec<C64>,
}

impl Steering {
    pub fn new(rp: &PreambleRecord, freq: f64) -> Self {
        let n_fft = rp.n_fft() as f64;
        let taps = rp
            .time_samples
            .iter()
            .enumerate()
            .map(|(m, x)| x.conj() * cis(-2.0 * PI * (m as f64 * freq / n_fft).fract()))
            .collect();
        Self { freq, taps }
    }

    pub fn apply(&self, r: &BasebandSignal, n: i64) -> Result<C64> {
        let window = r.window(n, self.taps.len())?;
        Ok(window.iter().zip(&self.taps).map(|(a, b)| a * b).sum())
    }
}

/// `Y(n,f)` by direct correlation, valid for any real `f`.
pub fn sync_variable_at(r: &BasebandSignal, rp: &PreambleRecord, n: i64, f: f64) -> Result<C64> {
    Steering::new(rp, f).apply(r, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LuisaParams {
    /// Upper bound on `|ν|`; `None` searches all `N` integer offsets.
    pub nu_max: Option<f64>,
    /// False path detection probability over the `2 N_CP` candidates.
    pub p_fd: f64,
    /// Fine CFO iterations.
    pub gamma: usize,
    pub rule: CoarseRule,
    /// Enables preamble presence detection with this false detection
    /// probability over the whole scanned plane.
    pub presence_pfd: Option<f64>,
    pub n_cp: usize,
}

impl LuisaParams {
    pub fn new(n_cp: usize) -> Self {
        Self {
            nu_max: None,
            p_fd: 1e-5,
            gamma: 2,
            rule: CoarseRule::YZCombined,
            presence_pfd: None,
            n_cp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    pub n_m: i64,
    pub k_m: i64,
    pub used_z_metric: bool,
    /// `[ν̂_0, ν̂_1, .., ν̂_γ]`
    pub nu_hat: Vec<f64>,
    /// Detected path delays, ascending.
    pub paths: Vec<i64>,
    pub first_path: i64,
    pub channel_estimate: Vec<(i64, C64)>,
    pub detected: bool,
    /// The coarse interpolation hit its degenerate guard.
    pub coarse_degenerate: bool,
    /// Number of fine iterations that hit their degenerate guard.
    pub fine_degenerate: usize,
}

impl SyncResult {
    fn absent() -> Self {
        Self {
            n_m: 0,
            k_m: 0,
            used_z_metric: false,
            nu_hat: Vec::new(),
            paths: Vec::new(),
            first_path: 0,
            channel_estimate: Vec::new(),
            detected: false,
            coarse_degenerate: false,
            fine_degenerate: 0,
        }
    }

    /// Final CFO estimate, `ν̂_γ`.
    pub fn cfo(&self) -> f64 {
        self.nu_hat.last().copied().unwrap_or(0.0)
    }
}

/// Scans every window start of `r` and returns the coarse decision.
/// With presence detection enabled, scanning stops `N` samples after the
/// first threshold crossing; `None` means no crossing.
pub fn coarse_scan(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    nu_max: Option<f64>,
    rule: CoarseRule,
    presence_pfd: Option<f64>,
) -> Result<Option<CoarseDecision>> {
    let n_fft = rp.n_fft();
    let starts = r.window_starts(n_fft);
    if starts.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than N={n_fft}",
            r.len()
        )));
    }
    let mut tracker = CoarseTracker::new(n_fft, nu_max);
    let n_points = (starts.end - starts.start) as usize * tracker.search_len();
    let presence_scale = match presence_pfd {
        Some(p) => Some(presence_threshold(1.0, p, n_points)?),
        None => None,
    };
    let mut floor = NoiseFloorTracker::new(r, starts.start, n_fft, rp.power)?;
    let mut stop_at = i64::MAX;
    let mut buf = vec![C64::new(0.0, 0.0); n_fft];
    let plan = crate::dsp::forward_plan(n_fft);
    for n in starts {
        if n > stop_at {
            break;
        }
        let window = r.window(n, n_fft)?;
        product(window, rp, &mut buf);
        plan.process(&mut buf);
        let peak = tracker.update(n, |k| buf[bin_of(k, n_fft)]);
        if let Some(scale) = presence_scale {
            let sigma = floor.value();
            if stop_at == i64::MAX && peak > scale * sigma {
                stop_at = n + n_fft as i64;
            }
            floor.advance();
        }
    }
    if presence_scale.is_some() && stop_at == i64::MAX {
        return Ok(None);
    }
    Ok(tracker.finish(rule))
}

/// Full synchronization of one received signal.
pub fn run_luisa(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    params: &LuisaParams,
) -> Result<SyncResult> {
    let coarse = match coarse_scan(r, rp, params.nu_max, params.rule, params.presence_pfd)? {
        Some(c) => c,
        None => return Ok(SyncResult::absent()),
    };
    let n_fft = rp.n_fft();
    let [y_minus, y0, y_plus] = coarse.y_neighbors;
    let (nu_c, coarse_degenerate) = candan(y_minus, y0, y_plus, n_fft);
    let mut nu = nu_c + coarse.k_m as f64;
    let mut nu_hat = vec![nu];

    let det = detect_paths(r, rp, coarse.n_m, nu, params.p_fd, params.n_cp)?;
    let mut fine_degenerate = 0;
    for _ in 0..params.gamma {
        let upd = fine_cfo_update(r, rp, &det.paths, nu)?;
        if upd.degenerate {
            fine_degenerate += 1;
        }
        nu += upd.delta;
        nu_hat.push(nu);
    }
    let channel_estimate = initial_channel_estimate(r, rp, &det.paths, nu)?;
    Ok(SyncResult {
        n_m: coarse.n_m,
        k_m: coarse.k_m,
        used_z_metric: coarse.used_z_metric,
        nu_hat,
        first_path: det.first_path,
        paths: det.paths,
        channel_estimate,
        detected: true,
        coarse_degenerate,
        fine_degenerate,
    })
}
