//! Low-level signal operations shared by every front-end.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{fft, Error, Matrix, Result, LOG_FLOOR};

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples covering `ms` milliseconds, rounded to nearest.
    pub fn ms_to_samples(&self, ms: f64) -> usize {
        ms_to_samples(ms, self.sample_rate)
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    libm::round(ms * sample_rate as f64 / 1000.0) as usize
}

/// Overlapping frames cut from a signal, one frame per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub frames: Matrix,
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameMatrix {
    pub fn n_frames(&self) -> usize {
        self.frames.rows()
    }
}

/// `n_frames × dim` feature matrix.
pub type FeatureMatrix = Matrix;

/// First-order pre-emphasis `y[t] = x[t] − α·x[t−1]`, with `y[0] = x[0]`.
pub fn preemphasize(x: &Waveform, alpha: f64) -> Result<Waveform> {
    if x.is_empty() {
        return Err(Error::Empty("pre-emphasis input"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", "pre-emphasis coefficient must lie in [0, 1)"));
    }
    let s = &x.samples;
    let mut y = Vec::with_capacity(s.len());
    y.push(s[0]);
    y.extend(s.windows(2).map(|w| w[1] - alpha * w[0]));
    Ok(Waveform { samples: y, sample_rate: x.sample_rate })
}

/// Splits a waveform into frames of `frame_ms` every `hop_ms`; the trailing partial frame is dropped.
pub fn frame(x: &Waveform, frame_ms: f64, hop_ms: f64) -> Result<FrameMatrix> {
    if !(frame_ms > 0.0) || !(hop_ms > 0.0) {
        return Err(Error::param("frame_ms/hop_ms", "must be positive"));
    }
    let frame_len = x.ms_to_samples(frame_ms);
    let hop = x.ms_to_samples(hop_ms);
    frame_samples(&x.samples, frame_len, hop)
}

/// Framing in sample units.
pub fn frame_samples(x: &[f64], frame_len: usize, hop: usize) -> Result<FrameMatrix> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::param("frame_len/hop", "must be at least one sample"));
    }
    if x.len() < frame_len {
        return Err(Error::TooShort { needed: frame_len, got: x.len() });
    }
    let n_frames = (x.len() - frame_len) / hop + 1;
    let mut data = Vec::with_capacity(n_frames * frame_len);
    for f in 0..n_frames {
        data.extend_from_slice(&x[f * hop..f * hop + frame_len]);
    }
    Ok(FrameMatrix { frames: Matrix::from_vec(n_frames, frame_len, data)?, frame_len, hop })
}

/// Symmetric Hamming window of length `len`.
pub fn hamming(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::param("len", "Hamming window needs at least 2 points"));
    }
    let denom = (len - 1) as f64;
    Ok((0..len).map(|n| 0.54 - 0.46 * libm::cos(2.0 * PI * n as f64 / denom)).collect())
}

/// One-sided power spectrum `|DFT_nfft(frame)[k]|² / nfft` for `k = 0..=nfft/2`.
pub fn power_spectrum(frame: &[f64], nfft: usize) -> Result<Vec<f64>> {
    if !nfft.is_power_of_two() {
        return Err(Error::param("nfft", "must be a power of two"));
    }
    if frame.len() > nfft {
        return Err(Error::param("nfft", "frame is longer than the transform"));
    }
    let spec = fft::rfft(frame, nfft)?;
    let scale = nfft as f64;
    Ok(spec[..=nfft / 2].iter().map(|c| c.norm_sqr() / scale).collect())
}

fn dct_scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        libm::sqrt(1.0 / n as f64)
    } else {
        libm::sqrt(2.0 / n as f64)
    }
}

/// Orthonormal type-II DCT, truncated to the first `n_out` coefficients.
pub fn dct2(v: &[f64], n_out: usize) -> Result<Vec<f64>> {
    let n = v.len();
    if n_out == 0 || n_out > n {
        return Err(Error::param("n_out", "must lie in 1..=len(v)"));
    }
    let nf = n as f64;
    Ok((0..n_out)
        .map(|k| {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(i, x)| x * libm::cos(PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)))
                .sum();
            dct_scale(k, n) * s
        })
        .collect())
}

/// Inverse of the full-length orthonormal DCT-II (a DCT-III).
pub fn idct2(coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::Empty("inverse DCT input"));
    }
    let nf = n as f64;
    Ok((0..n)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| dct_scale(k, n) * c * libm::cos(PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)))
                .sum()
        })
        .collect())
}

/// First difference along time: `Δ_0 = 0`, `Δ_k = f_k − f_{k−1}`.
pub fn delta(features: &FeatureMatrix) -> FeatureMatrix {
    let mut out = Matrix::zeros(features.rows(), features.cols());
    for k in 1..features.rows() {
        let (prev, cur) = (features.row(k - 1), features.row(k));
        for (o, (c, p)) in out.row_mut(k).iter_mut().zip(cur.iter().zip(prev)) {
            *o = c - p;
        }
    }
    out
}

/// Per-utterance mean and variance normalization using population variance.
///
/// Columns with zero variance map to zeros.
pub fn cmvn(features: &FeatureMatrix) -> Result<FeatureMatrix> {
    let n = features.rows();
    if n < 2 {
        return Err(Error::InsufficientData("CMVN needs at least two frames".into()));
    }
    let mut out = features.clone();
    for c in 0..features.cols() {
        let col = features.column(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = libm::sqrt(var);
        for (r, v) in col.iter().enumerate() {
            out[(r, c)] = if std > 0.0 { (v - mean) / std } else { 0.0 };
        }
    }
    Ok(out)
}

/// `ln(Σ x² + ε)`.
pub fn log_energy(frame: &[f64]) -> f64 {
    libm::log(frame.iter().map(|v| v * v).sum::<f64>() + LOG_FLOOR)
}

/// Default VAD threshold below the loudest frame.
pub const DEFAULT_VAD_DB: f64 = 40.0;

/// Keeps frames whose log energy is within `threshold_db` of the loudest frame.
pub fn energy_vad(frames: &FrameMatrix, threshold_db: f64) -> Vec<bool> {
    let energies: Vec<f64> = frames.frames.iter_rows().map(log_energy).collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gate = max - threshold_db / 10.0 * core::f64::consts::LN_10;
    energies.iter().map(|&e| e >= gate).collect()
}

/// Teager-Kaiser energy `Ψ[t] = s[t]² − s[t−1]·s[t+1]`; endpoints copy their neighbor.
pub fn tke(frame: &[f64]) -> Result<Vec<f64>> {
    let n = frame.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let mut out = vec![0.0; n];
    for t in 1..n - 1 {
        out[t] = frame[t] * frame[t] - frame[t - 1] * frame[t + 1];
    }
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    Ok(out)
}
