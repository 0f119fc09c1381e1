use super::Steering;
use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::waveform::{BasebandSignal, PreambleRecord};
use std::f64::consts::PI;

const DEGENERATE_RATIO: f64 = 1e-3;

/// Three-bin interpolation of the sinc-shaped `Y(n,.)` around its peak:
/// `(N/π) atan(tan(π/N) Re(Q1/Q2))` with `Q1 = Y(k-1) - Y(k+1)` and
/// `Q2 = 2Y(k) - Y(k-1) - Y(k+1)`. Returns the offset from `k` and whether
/// `Q2` was too small to use (offset 0 then).
pub fn candan(y_minus: C64, y0: C64, y_plus: C64, n_fft: usize) -> (f64, bool) {
    let q1 = y_minus - y_plus;
    let q2 = 2.0 * y0 - y_minus - y_plus;
    if q2.norm() < DEGENERATE_RATIO * y0.norm() || q2.norm() == 0.0 {
        return (0.0, true);
    }
    (interpolate((q1 / q2).re, n_fft), false)
}

fn interpolate(ratio: f64, n_fft: usize) -> f64 {
    let n = n_fft as f64;
    n / PI * ((PI / n).tan() * ratio).atan()
}

/// `ν̂_0 = k_M + ν̂_C` from the grid values around `(n_M, k_M)`.
pub fn coarse_frac_cfo(grid: &super::SyncGrid, n_m: i64, k_m: i64) -> Result<(f64, bool)> {
    let get = |k| {
        grid.y(n_m, k).ok_or_else(|| {
            Error::InvalidArgument(format!("grid lacks Y({n_m}, {k}) for interpolation"))
        })
    };
    let (nu_c, degenerate) = candan(get(k_m - 1)?, get(k_m)?, get(k_m + 1)?, grid.n_fft);
    Ok((nu_c + k_m as f64, degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoUpdate {
    pub delta: f64,
    pub degenerate: bool,
}

/// Path-coherent interpolation step at `nu_prev`:
/// `Re(sum_D Q1 Y* / sum_D Q2 Y*)` with `Y` evaluated at
/// `nu_prev - 1, nu_prev, nu_prev + 1`.
pub fn fine_cfo_update(
    r: &BasebandSignal,
    rp: &PreambleRecord,
    paths: &[i64],
    nu_prev: f64,
) -> Result<CfoUpdate> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument(
            "fine CFO needs at least one path".into(),
        ));
    }
    let s_minus = Steering::new(rp, nu_prev - 1.0);
    let s0 = Steering::new(rp, nu_prev);
    let s_plus = Steering::new(rp, nu_prev + 1.0);
    let mut num = C64::new(0.0, 0.0);
    let mut den = C64::new(0.0, 0.0);
    let mut energy = 0.0;
    for &n in paths {
        let ym = s_minus.apply(r, n)?;
        let y0 = s0.apply(r, n)?;
        let yp = s_plus.apply(r, n)?;
        num += (ym - yp) * y0.conj();
        den += (2.0 * y0 - ym - yp) * y0.conj();
        energy += y0.norm_sqr();
    }
    if den.norm() < DEGENERATE_RATIO * energy || den.norm() == 0.0 {
        return Ok(CfoUpdate {
            delta: 0.0,
            degenerate: true,
        });
    }
    Ok(CfoUpdate {
        delta: interpolate((num / den).re, rp.n_fft()),
        degenerate: false,
    })
}
