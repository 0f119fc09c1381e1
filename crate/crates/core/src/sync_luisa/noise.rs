use crate::error::{Error, Result};
use crate::waveform::BasebandSignal;

/// `σ_thr^2(n) = σ_x^2 sum_{m<N} |r(n+m)|^2`, the variance of `Y(n,k)` when
/// the window is uncorrelated with the preamble.
pub fn estimate_noise_floor(
    r: &BasebandSignal,
    n: i64,
    n_fft: usize,
    sigma_x_sq: f64,
) -> Result<f64> {
    let w = r.window(n, n_fft)?;
    Ok(sigma_x_sq * w.iter().map(|v| v.norm_sqr()).sum::<f64>())
}

/// Streaming `σ_thr^2(n)` using
/// `σ_thr^2(n) = σ_thr^2(n-1) + σ_x^2 (|r(n+N-1)|^2 - |r(n-1)|^2)`.
pub struct NoiseFloorTracker<'a> {
    r: &'a BasebandSignal,
    n: i64,
    n_fft: usize,
    sigma_x_sq: f64,
    energy: f64,
}

impl<'a> NoiseFloorTracker<'a> {
    pub fn new(r: &'a BasebandSignal, n: i64, n_fft: usize, sigma_x_sq: f64) -> Result<Self> {
        let energy = estimate_noise_floor(r, n, n_fft, 1.0)?;
        Ok(Self {
            r,
            n,
            n_fft,
            sigma_x_sq,
            energy,
        })
    }

    pub fn position(&self) -> i64 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.sigma_x_sq * self.energy
    }

    /// Moves to `n + 1`; samples beyond the signal count as zero.
    pub fn advance(&mut self) {
        let leaving = self.r.at(self.n).norm_sqr();
        let entering = self.r.at(self.n + self.n_fft as i64).norm_sqr();
        self.energy += entering - leaving;
        self.n += 1;
    }
}

/// Threshold on `|Y|^2` for a chi-square(2) false detection probability
/// `p_fd` spread over `n_points` tests: `-σ^2 ln(p_fd / n_points)`.
pub fn presence_threshold(sigma_thr_sq: f64, p_fd: f64, n_points: usize) -> Result<f64> {
    if !(p_fd > 0.0 && p_fd <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p_fd={p_fd} must be in (0, 1]"
        )));
    }
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be positive".into()));
    }
    Ok(-sigma_thr_sq * (p_fd / n_points as f64).ln())
}

/// Path acceptance threshold: `-σ_thr^2 ln(P_FD / (2 N_CP))`.
pub fn path_threshold(sigma_thr_sq: f64, p_fd: f64, n_cp: usize) -> Result<f64> {
    presence_threshold(sigma_thr_sq, p_fd, (2 * n_cp).max(1))
}
