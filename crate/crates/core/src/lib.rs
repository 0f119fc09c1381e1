pub mod analytic;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod impairments;
pub mod rng;
pub mod sync_baseline_sc;
pub mod sync_luisa;
pub mod waveform;
