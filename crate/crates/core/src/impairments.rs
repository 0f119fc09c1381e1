//! Channel and impairment model.
//!
//! `r(n) = sum_l x(n-l) h(l) exp(j2π nν/N) + i(n) + w(n)`, with `n` the
//! global sample index so that the CFO phase is zero at the optimal timing
//! point.

use crate::dsp::{cis, C64};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};
use crate::waveform::{qpsk_symbols, BasebandSignal, SubcarrierMap};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Extended Vehicular A: (delay ns, relative power dB).
pub const EVA_PROFILE: [(f64, f64); 9] = [
    (0.0, 0.0),
    (30.0, -1.5),
    (150.0, -1.4),
    (310.0, -3.6),
    (370.0, -0.6),
    (710.0, -9.1),
    (1090.0, -7.0),
    (1730.0, -12.0),
    (2510.0, -16.9),
];

/// Tap gains on the sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<C64>,
    pub profile_name: String,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<C64>, profile_name: impl Into<String>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument(
                "channel needs at least one tap".into(),
            ));
        }
        Ok(Self {
            taps,
            profile_name: profile_name.into(),
        })
    }

    /// Single unit tap.
    pub fn identity() -> Self {
        Self {
            taps: vec![C64::new(1.0, 0.0)],
            profile_name: "awgn".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn gain(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum()
    }

    /// `argmax_l |h(l)|^2`
    pub fn strongest_path(&self) -> usize {
        let mut best = 0;
        for (l, h) in self.taps.iter().enumerate() {
            if h.norm_sqr() > self.taps[best].norm_sqr() {
                best = l;
            }
        }
        best
    }

    /// Delay of the first non-zero tap.
    pub fn first_path(&self) -> usize {
        self.taps
            .iter()
            .position(|h| h.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    pub fn check_fits_cp(&self, n_cp: usize) -> Result<()> {
        let spread = self.taps.len() - 1;
        if spread > n_cp {
            return Err(Error::DelaySpreadExceedsCp { spread, n_cp });
        }
        Ok(())
    }
}

/// Rounded tap positions and normalized powers of the EVA profile at the
/// given sample rate. Coincident paths are merged by summing their powers.
pub fn eva_tap_powers(sample_rate_hz: f64) -> Vec<f64> {
    let total: f64 = EVA_PROFILE
        .iter()
        .map(|&(_, db)| 10f64.powf(db / 10.0))
        .sum();
    let mut powers: Vec<f64> = Vec::new();
    for &(delay_ns, db) in &EVA_PROFILE {
        let slot = (delay_ns * 1e-9 * sample_rate_hz).round() as usize;
        if powers.len() <= slot {
            powers.resize(slot + 1, 0.0);
        }
        powers[slot] += 10f64.powf(db / 10.0) / total;
    }
    powers
}

/// One Rayleigh realization of the EVA profile on the sample grid.
///
/// Each profile path is an independent circular Gaussian with the profile
/// variance; paths rounding to the same sample add coherently.
pub fn sample_eva_channel(
    n_fft: usize,
    n_cp: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(
            "sample rate must be positive".into(),
        ));
    }
    let _ = n_fft;
    let total: f64 = EVA_PROFILE
        .iter()
        .map(|&(_, db)| 10f64.powf(db / 10.0))
        .sum();
    let mut rng = rng_from(derive_seed(seed, stream::CHANNEL));
    let mut taps: Vec<C64> = Vec::new();
    for &(delay_ns, db) in &EVA_PROFILE {
        let slot = (delay_ns * 1e-9 * sample_rate_hz).round() as usize;
        if taps.len() <= slot {
            taps.resize(slot + 1, C64::new(0.0, 0.0));
        }
        let sigma = (10f64.powf(db / 10.0) / total).sqrt() * FRAC_1_SQRT_2;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        taps[slot] += C64::new(re, im) * sigma;
    }
    let ch = ChannelRealization {
        taps,
        profile_name: "eva".into(),
    };
    ch.check_fits_cp(n_cp)?;
    Ok(ch)
}

/// Linear convolution with the channel taps; the first tap keeps the timing.
pub fn apply_channel(x: &BasebandSignal, ch: &ChannelRealization) -> BasebandSignal {
    let l = ch.taps.len();
    let mut out = vec![C64::new(0.0, 0.0); x.len() + l - 1];
    for (d, &h) in ch.taps.iter().enumerate() {
        if h.norm_sqr() == 0.0 {
            continue;
        }
        for (o, &s) in out[d..].iter_mut().zip(&x.samples) {
            *o += s * h;
        }
    }
    BasebandSignal {
        samples: out,
        origin_index: x.origin_index,
    }
}

/// Multiplies global sample `n` by `exp(j2π nν/N)`.
pub fn apply_cfo(x: &BasebandSignal, nu: f64, n_fft: usize) -> BasebandSignal {
    if nu == 0.0 {
        return x.clone();
    }
    let samples = x
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let n = x.origin_index + i as i64;
            // reduce the phase argument to keep precision for long signals
            let cycles = (n as f64 * nu / n_fft as f64).fract();
            s * cis(2.0 * PI * cycles)
        })
        .collect();
    BasebandSignal {
        samples,
        origin_index: x.origin_index,
    }
}

/// Complex sinusoid `A exp(j2π f n/N + jθ)` for `n = 0..length-1`.
pub fn make_nbi(
    length: usize,
    center_freq: f64,
    amplitude: f64,
    phase: f64,
    n_fft: usize,
) -> BasebandSignal {
    let samples = (0..length)
        .map(|n| {
            let cycles = (n as f64 * center_freq / n_fft as f64).fract();
            cis(2.0 * PI * cycles + phase) * amplitude
        })
        .collect();
    BasebandSignal {
        samples,
        origin_index: 0,
    }
}

/// OFDM-like interferer: blocks of `symbol_len` samples (no CP) carrying
/// fresh QPSK symbols on fractional-bin tones. The block grid starts at a
/// seed-dependent offset so that it is unrelated to the victim's symbols.
/// Unit average power.
pub fn make_wbi(
    length: usize,
    occupied_fractional_bins: &[f64],
    symbol_len: usize,
    seed: u64,
    n_fft: usize,
) -> Result<BasebandSignal> {
    if occupied_fractional_bins.is_empty() {
        return Err(Error::InvalidArgument("WBI needs at least one tone".into()));
    }
    if symbol_len == 0 {
        return Err(Error::InvalidArgument(
            "WBI block length must be positive".into(),
        ));
    }
    let n_tones = occupied_fractional_bins.len();
    let norm = 1.0 / (n_tones as f64).sqrt();
    let offset = rng_from(derive_seed(seed, stream::WBI_OFFSET)).gen_range(0..symbol_len);
    // one tone table per in-block position
    let steer: Vec<Vec<C64>> = (0..symbol_len)
        .map(|m| {
            occupied_fractional_bins
                .iter()
                .map(|&f| cis(2.0 * PI * (m as f64 * f / n_fft as f64).fract()))
                .collect()
        })
        .collect();
    let mut samples = Vec::with_capacity(length);
    let mut block = usize::MAX;
    let mut syms: Vec<C64> = Vec::new();
    for i in 0..length {
        let t = i + offset;
        let b = t / symbol_len;
        if b != block {
            block = b;
            syms = qpsk_symbols(n_tones, derive_seed(seed, b as u64));
        }
        let m = t % symbol_len;
        let v: C64 = syms.iter().zip(&steer[m]).map(|(s, e)| s * e).sum();
        samples.push(v * norm);
    }
    Ok(BasebandSignal {
        samples,
        origin_index: 0,
    })
}

/// Half-bin WBI tones filling the gaps between consecutive unoccupied bins
/// in `[lo, hi]`.
pub fn wbi_notch_tones(lo: i64, hi: i64) -> Vec<f64> {
    (lo..hi).map(|k| k as f64 + 0.5).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Interference {
    None,
    /// Complex sinusoid; phase drawn uniformly per call when `None`.
    Nbi {
        center_freq: f64,
        phase: Option<f64>,
    },
    Wbi {
        bins: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentConfig {
    pub n_fft: usize,
    /// CFO normalized to the subcarrier spacing.
    pub cfo: f64,
    /// Over the whole receiver band; `+inf` disables noise.
    pub snr_db: f64,
    pub interference: Interference,
    pub sir_db: f64,
    /// `σ_x²`, reference for the SNR and SIR.
    pub signal_power: f64,
}

impl ImpairmentConfig {
    pub fn clean(n_fft: usize, signal_power: f64) -> Self {
        Self {
            n_fft,
            cfo: 0.0,
            snr_db: f64::INFINITY,
            interference: Interference::None,
            sir_db: f64::INFINITY,
            signal_power,
        }
    }

    pub fn noise_variance(&self) -> f64 {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            0.0
        } else {
            self.signal_power * 10f64.powf(-self.snr_db / 10.0)
        }
    }

    pub fn interference_power(&self) -> f64 {
        match self.interference {
            Interference::None => 0.0,
            _ if self.sir_db.is_infinite() && self.sir_db > 0.0 => 0.0,
            _ => self.signal_power * 10f64.powf(-self.sir_db / 10.0),
        }
    }

    pub fn validate(&self, map: &SubcarrierMap) -> Result<()> {
        let half = (self.n_fft / 2) as f64;
        match &self.interference {
            Interference::None => {}
            Interference::Nbi { center_freq, .. } => {
                if !(*center_freq >= -half && *center_freq < half) {
                    return Err(Error::InvalidArgument(format!(
                        "NBI frequency {center_freq} outside [-N/2, N/2)"
                    )));
                }
            }
            Interference::Wbi { bins } => {
                if bins.is_empty() {
                    return Err(Error::InvalidArgument("WBI needs at least one tone".into()));
                }
                if let Some(f) = bins
                    .iter()
                    .find(|f| f.fract() == 0.0 && map.contains(**f as i64))
                {
                    return Err(Error::InvalidArgument(format!(
                        "WBI tone {f} is orthogonal to occupied subcarrier"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Complex AWGN with per-sample variance `variance`.
pub fn awgn(len: usize, variance: f64, seed: u64) -> Vec<C64> {
    let mut rng = rng_from(seed);
    let s = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * s, im * s)
        })
        .collect()
}

/// Applies channel, CFO, interference and noise. Interference and noise
/// draws come from sub-streams of `seed`, so a fixed seed reuses the same
/// realizations across SNR/SIR values.
pub fn corrupt(
    x: &BasebandSignal,
    imp: &ImpairmentConfig,
    ch: &ChannelRealization,
    seed: u64,
) -> Result<BasebandSignal> {
    let mut y = apply_cfo(&apply_channel(x, ch), imp.cfo, imp.n_fft);
    let len = y.len();
    let sigma_i_sq = imp.interference_power();
    if sigma_i_sq > 0.0 {
        let amp = sigma_i_sq.sqrt();
        let interference = match &imp.interference {
            Interference::None => None,
            Interference::Nbi { center_freq, phase } => {
                let theta = phase.unwrap_or_else(|| {
                    rng_from(derive_seed(seed, stream::NBI_PHASE)).gen_range(0.0..2.0 * PI)
                });
                Some(make_nbi(len, *center_freq, amp, theta, imp.n_fft))
            }
            Interference::Wbi { bins } => {
                let w = make_wbi(
                    len,
                    bins,
                    imp.n_fft,
                    derive_seed(seed, stream::INTERFERENCE),
                    imp.n_fft,
                )?;
                Some(BasebandSignal {
                    samples: w.samples.into_iter().map(|v| v * amp).collect(),
                    origin_index: 0,
                })
            }
        };
        if let Some(i) = interference {
            for (o, v) in y.samples.iter_mut().zip(&i.samples) {
                *o += v;
            }
        }
    }
    let sigma_w_sq = imp.noise_variance();
    if sigma_w_sq > 0.0 {
        let w = awgn(len, sigma_w_sq, derive_seed(seed, stream::NOISE));
        for (o, v) in y.samples.iter_mut().zip(&w) {
            *o += v;
        }
    }
    Ok(y)
}
