//! Closed-form moments of the synchronization variable.
//!
//! For a single channel path `l` the component
//! `Y_l(n,k) = exp(j2π nν/N) sum_m x̃(n+m-l) conj(x_m) exp(j2π m(ν-k)/N)`
//! has a non-zero mean only when the window overlaps a copy of the reference
//! preamble. With `δ = ν - k` and `d = n - l` the cases are:
//!
//! | case | `d`    | aligned `m`            | preamble   |
//! |------|--------|------------------------|------------|
//! | A    | `-N`   | `N-N_CP .. N-1`        | both       |
//! | B    | `-N/2` | `N/2-N_CP .. N-1`      | S&C        |
//! | C    | `0`    | `0 .. N-1`             | both       |
//! | D    | `N/2`  | `0 .. N/2-1`           | S&C        |
//!
//! Every mean has the form
//! `σ_x² exp(j2π nν/N) exp(jπ δ c) sin(π a δ)/sin(π δ/N)` with `a N` aligned
//! samples. The variances assume the transmitted samples behave as
//! independent circular Gaussians (apart from the CP and S&C repetitions),
//! which holds for Gaussian preamble symbols on a near-full band.

use crate::dsp::{bin_of, cis, C64};
use crate::error::{Error, Result};
use crate::impairments::ChannelRealization;
use crate::waveform::PreambleKind;
use std::f64::consts::PI;

/// Below this distance from a multiple of `N`, `sin(π aδ)/sin(πδ/N)` is
/// replaced by its limit.
const SINC_SWITCHOVER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    A,
    B,
    C,
    D,
    Otherwise,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [
        CaseId::A,
        CaseId::B,
        CaseId::C,
        CaseId::D,
        CaseId::Otherwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::A => "A",
            CaseId::B => "B",
            CaseId::C => "C",
            CaseId::D => "D",
            CaseId::Otherwise => "otherwise",
        }
    }

    pub fn applies_to(self, kind: PreambleKind) -> bool {
        match self {
            CaseId::B | CaseId::D => kind == PreambleKind::SchmidlCox,
            _ => true,
        }
    }

    /// The case for the offset `n - l`.
    pub fn classify(kind: PreambleKind, offset: i64, n_fft: usize) -> CaseId {
        let n = n_fft as i64;
        match offset {
            d if d == -n => CaseId::A,
            0 => CaseId::C,
            d if d == -n / 2 && kind == PreambleKind::SchmidlCox => CaseId::B,
            d if d == n / 2 && kind == PreambleKind::SchmidlCox => CaseId::D,
            _ => CaseId::Otherwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPrediction {
    pub mean: C64,
    pub variance: f64,
}

/// `sin(π a δ) / sin(π δ / N)` where `aN` is an integer sample count; at
/// `δ = jN` the limit `aN (-1)^{j(aN-1)}` is used.
pub fn sinc_ratio(count: usize, delta: f64, n_fft: usize) -> f64 {
    let n = n_fft as f64;
    let j = (delta / n).round();
    if (delta - j * n).abs() < SINC_SWITCHOVER {
        let sign = if (j as i64 * (count as i64 - 1)).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        return count as f64 * sign;
    }
    (PI * count as f64 * delta / n).sin() / (PI * delta / n).sin()
}

/// Table-I mean and variance of `Y_l(n,k)` for one unit-gain path.
///
/// `sigma_x_sq` is the per-sample power of the transmitted samples.
#[allow(clippy::too_many_arguments)]
pub fn path_component_moments(
    case: CaseId,
    kind: PreambleKind,
    n: i64,
    l: i64,
    k: f64,
    nu: f64,
    n_fft: usize,
    n_cp: usize,
    sigma_x_sq: f64,
) -> Result<MomentPrediction> {
    let offset = n - l;
    if CaseId::classify(kind, offset, n_fft) != case {
        return Err(Error::InconsistentCase {
            case: case.name(),
            offset,
        });
    }
    let nn = n_fft as f64;
    let ncp = n_cp as f64;
    let delta = nu - k;
    let s2 = sigma_x_sq;
    let s4 = s2 * s2;
    // (time of the exp(j2π·ν/N) reference, phase coefficient of πδ, aligned count)
    let geometry = |t: f64, c: f64, count: usize| {
        s2 * cis(2.0 * PI * t * nu / nn) * cis(PI * delta * c) * sinc_ratio(count, delta, n_fft)
    };
    let (mean, variance) = match case {
        CaseId::A => (
            geometry((l - n_fft as i64) as f64, 2.0 - (ncp + 1.0) / nn, n_cp),
            s4 * ncp,
        ),
        CaseId::B => {
            if delta.abs() > 0.5 {
                return Err(Error::OutsideValidity(format!(
                    "case B variance is only defined for |ν-k| ≤ 0.5, got {delta}"
                )));
            }
            (
                geometry(
                    l as f64 - nn / 2.0,
                    1.5 - (ncp + 1.0) / nn,
                    n_fft / 2 + n_cp,
                ),
                s4 * nn / 2.0 + (1.0 + 2.0 * (PI * delta).cos()) * s4 * ncp,
            )
        }
        CaseId::C => {
            let var = match kind {
                PreambleKind::Simple => s4 * nn,
                PreambleKind::SchmidlCox => (1.0 + (PI * delta).cos()) * nn * s4,
            };
            (geometry(l as f64, 1.0 - 1.0 / nn, n_fft), var)
        }
        // n = l + N/2 here
        CaseId::D => (
            geometry(l as f64 + nn / 2.0, 0.5 - 1.0 / nn, n_fft / 2),
            s4 * nn,
        ),
        CaseId::Otherwise => {
            let count = (n_fft as i64 + n_cp as i64 + offset).clamp(0, n_fft as i64);
            (C64::new(0.0, 0.0), s4 * count as f64)
        }
    };
    Ok(MomentPrediction { mean, variance })
}

/// Moments for whichever case `n - l` falls in.
#[allow(clippy::too_many_arguments)]
pub fn moments_at(
    kind: PreambleKind,
    n: i64,
    l: i64,
    k: f64,
    nu: f64,
    n_fft: usize,
    n_cp: usize,
    sigma_x_sq: f64,
) -> Result<MomentPrediction> {
    let case = CaseId::classify(kind, n - l, n_fft);
    path_component_moments(case, kind, n, l, k, nu, n_fft, n_cp, sigma_x_sq)
}

/// `V_i(k) = sum_{k1} E|g_{k1}|² E|d_{(k1-k) mod N}|²`, both vectors in bin order.
pub fn interference_variance_component(
    interference_psd: &[f64],
    preamble_psd: &[f64],
    k: i64,
) -> f64 {
    let n = interference_psd.len();
    interference_psd
        .iter()
        .enumerate()
        .map(|(k1, g)| g * preamble_psd[bin_of(k1 as i64 - k, n)])
        .sum()
}

/// `sum_l |h(l)|² V[Y_l] + V_i + N σ_w² σ_x²`
pub fn full_variance(
    channel: &ChannelRealization,
    per_path: &[MomentPrediction],
    v_i: f64,
    sigma_w_sq: f64,
    sigma_x_sq: f64,
    n_fft: usize,
) -> Result<f64> {
    if per_path.len() != channel.taps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} path predictions for {} taps",
            per_path.len(),
            channel.taps.len()
        )));
    }
    let paths: f64 = channel
        .taps
        .iter()
        .zip(per_path)
        .map(|(h, p)| h.norm_sqr() * p.variance)
        .sum();
    Ok(paths + v_i + n_fft as f64 * sigma_w_sq * sigma_x_sq)
}

/// Mean of `σ_thr²(n)` for a frame whose preamble starts at 0:
/// `σ_x²(σ_i²+σ_w²)N + sum_l |h(l)|² σ_x⁴ min(max(0, N+N_CP+n-l), N)`.
pub fn noise_floor_mean(
    channel: &ChannelRealization,
    n: i64,
    sigma_i_sq: f64,
    sigma_w_sq: f64,
    sigma_x_sq: f64,
    n_fft: usize,
    n_cp: usize,
) -> f64 {
    let nn = n_fft as i64;
    let paths: f64 = channel
        .taps
        .iter()
        .enumerate()
        .map(|(l, h)| {
            let count = (nn + n_cp as i64 + n - l as i64).clamp(0, nn);
            h.norm_sqr() * sigma_x_sq * sigma_x_sq * count as f64
        })
        .sum();
    sigma_x_sq * (sigma_i_sq + sigma_w_sq) * n_fft as f64 + paths
}

/// Variance of the fine CFO estimator and the Cramér-Rao bound for linear
/// `snr`: `1/(4N SNR)` and `6/(4π² N SNR)`.
pub fn cfo_estimator_bounds(n_fft: usize, snr: f64) -> Result<(f64, f64)> {
    if !(snr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "snr must be positive, got {snr}"
        )));
    }
    let n = n_fft as f64;
    Ok((1.0 / (4.0 * n * snr), 6.0 / (4.0 * PI * PI * n * snr)))
}

/// `E|d_k|²` in bin order for a preamble on `support`.
pub fn preamble_psd(n_fft: usize, kind: PreambleKind, support: &[i64]) -> Vec<f64> {
    let mut psd = vec![0.0; n_fft];
    let a2 = kind.amplitude().powi(2);
    for &k in support {
        psd[bin_of(k, n_fft)] = a2;
    }
    psd
}

/// `E|g_k|²` of a sinusoid on integer bin `f` with power `sigma_i_sq`.
pub fn nbi_psd(n_fft: usize, f: i64, sigma_i_sq: f64) -> Vec<f64> {
    let mut psd = vec![0.0; n_fft];
    psd[bin_of(f, n_fft)] = n_fft as f64 * sigma_i_sq;
    psd
}

/// `E|g_k|²` of equal-power tones at fractional bins, each observed as a
/// steady tone over the window (Dirichlet leakage, block edges ignored).
/// Sums to `N σ_i²`.
pub fn wbi_psd(n_fft: usize, tones: &[f64], sigma_i_sq: f64) -> Vec<f64> {
    let n = n_fft as f64;
    let per_tone = sigma_i_sq / tones.len().max(1) as f64;
    let mut psd = vec![0.0; n_fft];
    for &f in tones {
        for (b, p) in psd.iter_mut().enumerate() {
            let r = sinc_ratio(n_fft, f - b as f64, n_fft);
            *p += per_tone * r * r / n;
        }
    }
    psd
}

/// `V_i(k) / (N σ_i² σ_x²)` over the requested offsets.
pub fn vi_curve(
    interference_psd: &[f64],
    preamble_psd: &[f64],
    sigma_i_sq: f64,
    sigma_x_sq: f64,
    ks: impl IntoIterator<Item = i64>,
) -> Vec<(i64, f64)> {
    let norm = interference_psd.len() as f64 * sigma_i_sq * sigma_x_sq;
    ks.into_iter()
        .map(|k| {
            (
                k,
                interference_variance_component(interference_psd, preamble_psd, k) / norm,
            )
        })
        .collect()
}
