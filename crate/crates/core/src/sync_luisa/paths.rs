use super::noise::{estimate_noise_floor, path_threshold};
use super::Steering;
use crate::dsp::{cis, C64};
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, PreambleRecord};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct PathDetection {
    /// Accepted delays, ascending; always contains the anchor `n_M`.
    pub paths: Vec<i64>,
    pub first_path: i64,
    /// `(n, |Y(n, ν̂_0)|^2, threshold)` for every candidate examined.
    pub candidates: Vec<(i64, f64, f64)>,
}

/// Multipath detection in `n_M ± N_CP` at the coarse CFO estimate `nu0`.
///
/// A candidate `n` passes if `|Y(n, nu0)|^2 > -σ_thr^2(n) ln(P_FD / (2 N_CP))`.
/// Passing candidates are then taken strongest first and kept while all
/// accepted delays (including `n_M`) span at most `N_CP` samples.
pub fn detect_paths(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    n_m: i64,
    nu0: f64,
    p_fd: f64,
    n_cp: usize,
) -> Result<PathDetection> {
    let n_fft = rp.n_fft();
    let steer = Steering::new(rp, nu0);
    let mut candidates = Vec::with_capacity(2 * n_cp);
    let mut passing = Vec::new();
    let span = n_cp as i64;
    for n in n_m - span..=n_m + span {
        if n == n_m || r.window(n, n_fft).is_err() {
            continue;
        }
        let power = steer.apply(r, n)?.norm_sqr();
        let thr = path_threshold(estimate_noise_floor(r, n, n_fft, rp.power)?, p_fd, n_cp)?;
        candidates.push((n, power, thr));
        if power > thr {
            passing.push((n, power));
        }
    }
    passing.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let (mut lo, mut hi) = (n_m, n_m);
    let mut paths = vec![n_m];
    for (n, _) in passing {
        let (l2, h2) = (lo.min(n), hi.max(n));
        if h2 - l2 <= span {
            lo = l2;
            hi = h2;
            paths.push(n);
        }
    }
    paths.sort_unstable();
    Ok(PathDetection {
        first_path: paths[0],
        paths,
        candidates,
    })
}

/// `ĥ(l) = Y(l, ν̂) exp(-j2π lν̂/N) / (N σ_x^2)` for each detected delay.
///
/// The phase factor removes the CFO rotation accumulated up to sample `l`.
pub fn initial_channel_estimate(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    paths: &[i64],
    nu: f64,
) -> Result<Vec<(i64, C64)>> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument(
            "channel estimate needs at least one path".into(),
        ));
    }
    let n_fft = rp.n_fft() as f64;
    let steer = Steering::new(rp, nu);
    let scale = 1.0 / (n_fft * rp.power);
    paths
        .iter()
        .map(|&l| {
            let y = steer.apply(r, l)?;
            let derot = cis(-2.0 * PI * (l as f64 * nu / n_fft).fract());
            Ok((l, y * derot * scale))
        })
        .collect()
}
