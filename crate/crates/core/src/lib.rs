//! Front-ends, learnable wavelet filterbanks, generative back-ends and detection
//! metrics for spoofed-speech detection.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs (training takes an explicit seed), so results are
//! bit-reproducible across runs and threads. File formats, WAV ingestion and
//! the command line live in the `wavespoof` companion crate.
//!
//! Module map:
//!
//! * [`signal`]: pre-emphasis, framing, windows, spectra, DCT, dynamic
//!   features, CMVN, energy VAD and the Teager-Kaiser operator.
//! * [`mfcc`], [`wpt`], [`mwpc`], [`pca`]: handcrafted cepstral and
//!   wavelet-packet front-ends.
//! * [`cwt`], [`scattering`]: fixed wavelet front-ends.
//! * [`wd`]: the wavelet deconvolution layer with analytic scale gradients,
//!   a small classifier head, batch sampling and the training loop.
//! * [`gmm`]: diagonal GMMs fitted by EM and log-likelihood-ratio scoring.
//! * [`metrics`]: DET sweeps, EER, normalized minimum t-DCF and score fusion.
//! * [`synth`]: a two-band synthetic corpus used in place of real recordings.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cwt;
mod error;
pub mod fft;
pub mod gmm;
pub mod matrix;
pub mod metrics;
pub mod mfcc;
pub mod mwpc;
pub mod pca;
pub mod scattering;
pub mod signal;
pub mod synth;
pub mod wd;
pub mod wpt;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::{Key, ScoreSet};
pub use signal::{FeatureMatrix, FrameMatrix, Waveform};

/// Floor added inside every log-energy computation.
pub const LOG_FLOOR: f64 = 1e-10;
