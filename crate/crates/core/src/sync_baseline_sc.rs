//! Schmidl&Cox autocorrelation synchronizer, used as the reference method.
//!
//! Timing comes from the half-symbol autocorrelation metric
//! `M(n) = |P(n)|² / R_e(n)²`, fractional CFO from the angle of `P`, and the
//! even integer part from a differential correlation of the received
//! preamble spectrum against the known preamble symbols.

use crate::dsp::{bin_of, cis, fft_in_place, C64};
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, PreambleRecord};
use std::f64::consts::PI;

/// Fraction of the metric peak that delimits the plateau.
pub const PLATEAU_LEVEL: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScMetricTrace {
    /// Window start of the first entry.
    pub start: i64,
    pub timing_metric: Vec<f64>,
    pub autocorr: Vec<C64>,
    pub energy: Vec<f64>,
}

impl ScMetricTrace {
    pub fn len(&self) -> usize {
        self.timing_metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timing_metric.is_empty()
    }

    fn index(&self, n: i64) -> Option<usize> {
        let i = n - self.start;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }

    pub fn metric(&self, n: i64) -> Option<f64> {
        self.index(n).map(|i| self.timing_metric[i])
    }

    pub fn p(&self, n: i64) -> Option<C64> {
        self.index(n).map(|i| self.autocorr[i])
    }
}

/// `P(n) = sum_{m<N/2} conj(r(n+m)) r(n+m+N/2)`,
/// `R_e(n) = sum_{m<N/2} |r(n+m+N/2)|²` and `M(n)` for every `n` with a full
/// `N`-sample window.
pub fn sc_trace(r: &BasebandSignal, n_fft: usize) -> Result<ScMetricTrace> {
    if r.len() < 2 * n_fft {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than 2N={}",
            r.len(),
            2 * n_fft
        )));
    }
    let half = n_fft / 2;
    let s = &r.samples;
    let count = s.len() - n_fft + 1;
    let mut trace = ScMetricTrace {
        start: r.origin_index,
        timing_metric: Vec::with_capacity(count),
        autocorr: Vec::with_capacity(count),
        energy: Vec::with_capacity(count),
    };
    for i in 0..count {
        let a = &s[i..i + half];
        let b = &s[i + half..i + n_fft];
        let p: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        let e: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        let m = if e > 0.0 { p.norm_sqr() / (e * e) } else { 0.0 };
        trace.autocorr.push(p);
        trace.energy.push(e);
        trace.timing_metric.push(m);
    }
    Ok(trace)
}

/// Midpoint of the first and last samples reaching 90% of the metric peak,
/// searched within `±N` of the peak.
pub fn sc_timing(r: &BasebandSignal, n_fft: usize) -> Result<(i64, ScMetricTrace)> {
    let trace = sc_trace(r, n_fft)?;
    if trace.energy.iter().all(|&e| e == 0.0) {
        return Err(Error::NoSignalEnergy);
    }
    let mut peak_i = 0;
    for (i, &m) in trace.timing_metric.iter().enumerate() {
        if m > trace.timing_metric[peak_i] {
            peak_i = i;
        }
    }
    let level = PLATEAU_LEVEL * trace.timing_metric[peak_i];
    let lo = peak_i.saturating_sub(n_fft);
    let hi = (peak_i + n_fft).min(trace.len() - 1);
    let above = |i: &usize| trace.timing_metric[*i] >= level;
    let first = (lo..=hi).find(above).unwrap_or(peak_i);
    let last = (lo..=hi).rev().find(above).unwrap_or(peak_i);
    let mid = (first + last) / 2;
    Ok((trace.start + mid as i64, trace))
}

/// `arg(P(timing)) / π`, in `(-1, 1]` subcarrier spacings.
pub fn sc_frac_cfo(trace: &ScMetricTrace, timing: i64, n_fft: usize) -> Result<f64> {
    let _ = n_fft;
    let p = trace.p(timing).ok_or_else(|| {
        Error::InvalidArgument(format!("timing {timing} outside the metric trace"))
    })?;
    Ok(p.arg() / PI)
}

/// Even integer CFO search. The window at `timing` is derotated by `frac`,
/// transformed, and for each `g` with `|2g| ≤ range` the spectrum shifted by
/// `2g` bins is matched against the preamble symbols through the
/// differential metric `|sum conj(R(k+2g) d*_k) R(k'+2g) d*_{k'}|` over
/// consecutive preamble subcarriers `k' = k + 2`, which is insensitive to
/// the timing-induced linear phase. Returns `g`.
pub fn sc_int_cfo(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    timing: i64,
    frac: f64,
    range: i64,
) -> Result<i64> {
    let n_fft = rp.n_fft();
    let nn = n_fft as f64;
    let mut spec: Vec<C64> = r
        .window(timing, n_fft)?
        .iter()
        .enumerate()
        .map(|(m, &v)| {
            let n = timing + m as i64;
            v * cis(-2.0 * PI * (n as f64 * frac / nn).fract())
        })
        .collect();
    fft_in_place(&mut spec);
    let pairs: Vec<(i64, i64)> = rp
        .support
        .windows(2)
        .filter(|w| w[1] - w[0] == 2)
        .map(|w| (w[0], w[1]))
        .collect();
    let d = |k: i64| rp.freq_symbols[bin_of(k, n_fft)];
    let mut best = (f64::NEG_INFINITY, 0i64);
    let g_max = range.abs() / 2;
    // ascending |g| so that ties keep the smaller shift
    let mut gs: Vec<i64> = (-g_max..=g_max).collect();
    gs.sort_by_key(|g| (g.abs(), *g));
    for g in gs {
        let shift = 2 * g;
        let metric: C64 = pairs
            .iter()
            .map(|&(k, k2)| {
                let a = spec[bin_of(k + shift, n_fft)] * d(k).conj();
                let b = spec[bin_of(k2 + shift, n_fft)] * d(k2).conj();
                a.conj() * b
            })
            .sum();
        if metric.norm() > best.0 {
            best = (metric.norm(), g);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScResult {
    pub timing: i64,
    pub frac: f64,
    pub g: i64,
    /// `frac + 2g`
    pub cfo: f64,
}

/// Timing, fractional and integer CFO in one call.
pub fn run_sc(r: &BasebandSignal, rp: &PreambleRecord, range: i64) -> Result<ScResult> {
    let n_fft = rp.n_fft();
    let (timing, trace) = sc_timing(r, n_fft)?;
    let frac = sc_frac_cfo(&trace, timing, n_fft)?;
    // the FFT window must fit; clamp plateau picks at the very end
    let last = r.end_index() - n_fft as i64;
    let g = sc_int_cfo(r, rp, timing.min(last), frac, range)?;
    Ok(ScResult {
        timing,
        frac,
        g,
        cfo: frac + 2.0 * g as f64,
    })
}
