//! Closed-form curves as CSV text.

use super::InterferenceChoice;
use crate::analytic::{
    cfo_estimator_bounds, nbi_psd, path_component_moments, preamble_psd, vi_curve, wbi_psd, CaseId,
};
use crate::error::{Error, Result};
use crate::impairments::wbi_notch_tones;
use crate::waveform::{PreambleKind, SubcarrierMap};
use std::fmt::Write as _;

/// Representative `n - l` of each case; "otherwise" uses `-N_CP`.
fn offset_of(case: CaseId, n_fft: usize, n_cp: usize) -> i64 {
    let n = n_fft as i64;
    match case {
        CaseId::A => -n,
        CaseId::B => -n / 2,
        CaseId::C => 0,
        CaseId::D => n / 2,
        CaseId::Otherwise => -(n_cp as i64),
    }
}

/// Moments of every applicable case for both preamble kinds at unit
/// `σ_x²`, path delay `l`, offset `k` and CFO `nu`.
pub fn table_csv(n_fft: usize, n_cp: usize, l: i64, k: f64, nu: f64) -> Result<String> {
    let mut s = String::from("kind,case,n_minus_l,mean_re,mean_im,mean_abs,variance\n");
    for kind in [PreambleKind::Simple, PreambleKind::SchmidlCox] {
        for case in CaseId::ALL {
            if !case.applies_to(kind) {
                continue;
            }
            let off = offset_of(case, n_fft, n_cp);
            let m = match path_component_moments(case, kind, l + off, l, k, nu, n_fft, n_cp, 1.0) {
                Ok(m) => m,
                Err(Error::OutsideValidity(_)) => continue,
                Err(e) => return Err(e),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                kind.name(),
                case.name(),
                off,
                m.mean.re,
                m.mean.im,
                m.mean.norm(),
                m.variance
            );
        }
    }
    Ok(s)
}

/// Normalized interference variance `V_i(k) / (N σ_i² σ_x²)` for
/// `k ∈ [-N/2, N/2)`.
pub fn vi_csv(
    map: &SubcarrierMap,
    kind: PreambleKind,
    interference: &InterferenceChoice,
) -> Result<String> {
    let n = map.n_fft;
    let support = kind.support(&map.occupied);
    let d = preamble_psd(n, kind, &support);
    let sigma_x_sq = d.iter().sum::<f64>() / (n * n) as f64;
    let g = match interference {
        InterferenceChoice::Nbi(f) => {
            let f = f.unwrap_or(24.0);
            if f.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "NBI curve needs an integer bin, got {f}"
                )));
            }
            nbi_psd(n, f as i64, 1.0)
        }
        InterferenceChoice::Wbi(range) => {
            let (lo, hi) = range.ok_or_else(|| {
                Error::InvalidArgument("WBI curve needs explicit bounds, e.g. wbi:16:32".into())
            })?;
            wbi_psd(n, &wbi_notch_tones(lo, hi), 1.0)
        }
        InterferenceChoice::None => {
            return Err(Error::InvalidArgument(
                "V_i curve needs an interference model".into(),
            ))
        }
    };
    let half = (n / 2) as i64;
    let mut s = String::from("k,vi_normalized\n");
    for (k, v) in vi_curve(&g, &d, 1.0, sigma_x_sq, -half..half) {
        let _ = writeln!(s, "{k},{v}");
    }
    Ok(s)
}

/// Fine-estimator variance and Cramér-Rao bound over SNRs in dB.
pub fn cfo_csv(n_fft: usize, snr_db: &[f64]) -> Result<String> {
    let mut s = String::from("snr_db,variance,crlb,ratio\n");
    for &db in snr_db {
        let (v, c) = cfo_estimator_bounds(n_fft, 10f64.powf(db / 10.0))?;
        let _ = writeln!(s, "{db},{v},{c},{}", v / c);
    }
    Ok(s)
}
