//! FFT plumbing and bin-index helpers.
//!
//! Conventions used across the crate:
//! - the inverse transform used for modulation carries `1/sqrt(N)`;
//! - the forward transform used for synchronization is unnormalized;
//! - subcarrier `k` in `[-N/2, N/2-1]` lives in FFT bin `k mod N`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized forward DFT, in place.
pub fn fft_in_place(buf: &mut [C64]) {
    forward_plan(buf.len()).process(buf);
}

/// Inverse DFT scaled by `1/sqrt(N)`, in place.
pub fn ifft_unitary_in_place(buf: &mut [C64]) {
    let n = buf.len();
    inverse_plan(n).process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
}

#[inline]
pub fn bin_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Maps an FFT bin back to the signed subcarrier index in `[-N/2, N/2-1]`.
#[inline]
pub fn signed_index(bin: usize, n: usize) -> i64 {
    let b = (bin % n) as i64;
    if b >= (n as i64) / 2 {
        b - n as i64
    } else {
        b
    }
}

/// `exp(j*phase)`
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::new(phase.cos(), phase.sin())
}

pub fn mean_power(x: &[C64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}
