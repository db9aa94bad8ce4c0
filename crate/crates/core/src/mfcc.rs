//! Mel scale, triangular mel filterbank and the MFCC pipeline.

use alloc::vec::Vec;

use crate::signal::{self, FeatureMatrix, Waveform};
use crate::{Error, Matrix, Result, LOG_FLOOR};

pub fn hz_to_mel(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::param("f", "frequency must be non-negative"));
    }
    Ok(2595.0 * libm::log10(1.0 + f / 700.0))
}

pub fn mel_to_hz(m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::param("m", "mel value must be non-negative"));
    }
    Ok(700.0 * (libm::pow(10.0, m / 2595.0) - 1.0))
}

/// Triangular filters on mel-spaced DFT bins, one filter per row.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Matrix,
    /// `n_filt + 2` edge bins; filter `m` spans `bins[m]..=bins[m + 2]`.
    pub bins: Vec<usize>,
    pub sample_rate: u32,
    pub nfft: usize,
}

impl MelFilterbank {
    pub fn n_filt(&self) -> usize {
        self.weights.rows()
    }

    /// Peak bin of each filter.
    pub fn center_bins(&self) -> &[usize] {
        &self.bins[1..self.bins.len() - 1]
    }

    /// Filterbank energies `Σ_k P[k]·H_m[k]`.
    pub fn apply(&self, power: &[f64]) -> Result<Vec<f64>> {
        self.weights.mul_vec(power)
    }
}

/// Value of a triangle with edges `lo < mid < hi` at `k`.
pub(crate) fn triangle(k: f64, lo: f64, mid: f64, hi: f64) -> f64 {
    if k < lo || k > hi {
        0.0
    } else if k <= mid {
        if mid == lo {
            1.0
        } else {
            (k - lo) / (mid - lo)
        }
    } else {
        (hi - k) / (hi - mid)
    }
}

pub fn mel_filterbank(n_filt: usize, nfft: usize, sample_rate: u32) -> Result<MelFilterbank> {
    if n_filt == 0 {
        return Err(Error::param("n_filt", "need at least one filter"));
    }
    if !nfft.is_power_of_two() || nfft < 2 {
        return Err(Error::param("nfft", "must be a power of two"));
    }
    let top = hz_to_mel(sample_rate as f64 / 2.0)?;
    let n_bins = nfft / 2 + 1;
    let bins: Vec<usize> = (0..n_filt + 2)
        .map(|i| {
            let hz = mel_to_hz(top * i as f64 / (n_filt + 1) as f64)?;
            Ok((libm::floor((nfft + 1) as f64 * hz / sample_rate as f64) as usize).min(n_bins - 1))
        })
        .collect::<Result<_>>()?;
    if bins.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("n_filt", "too many filters for the DFT resolution (duplicate bins)"));
    }
    let mut weights = Matrix::zeros(n_filt, n_bins);
    for m in 0..n_filt {
        let (lo, mid, hi) = (bins[m] as f64, bins[m + 1] as f64, bins[m + 2] as f64);
        for k in bins[m]..=bins[m + 2] {
            weights[(m, k)] = triangle(k as f64, lo, mid, hi);
        }
    }
    Ok(MelFilterbank { weights, bins, sample_rate, nfft })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub alpha: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub nfft: usize,
    pub n_filt: usize,
    pub n_ceps: usize,
    pub use_vad: bool,
    pub vad_db: f64,
    pub use_cmvn: bool,
    /// Keep only Δ and ΔΔ.
    pub dynamic_only: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            alpha: 0.97,
            frame_ms: 25.0,
            hop_ms: 10.0,
            nfft: 512,
            n_filt: 20,
            n_ceps: 20,
            use_vad: true,
            vad_db: signal::DEFAULT_VAD_DB,
            use_cmvn: true,
            dynamic_only: true,
        }
    }
}

impl MfccConfig {
    pub fn output_dim(&self) -> usize {
        if self.dynamic_only {
            2 * self.n_ceps
        } else {
            3 * self.n_ceps
        }
    }
}

/// Static cepstra: coefficient 0 is replaced by the frame log energy.
pub fn static_cepstra(x: &Waveform, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    if cfg.n_ceps == 0 || cfg.n_ceps > cfg.n_filt {
        return Err(Error::param("n_ceps", "must lie in 1..=n_filt"));
    }
    let emph = signal::preemphasize(x, cfg.alpha)?;
    let mut frames = signal::frame(&emph, cfg.frame_ms, cfg.hop_ms)?;
    if cfg.use_vad {
        let mask = signal::energy_vad(&frames, cfg.vad_db);
        frames.frames = frames.frames.select_rows(&mask);
    }
    let window = signal::hamming(frames.frame_len)?;
    let fbank = mel_filterbank(cfg.n_filt, cfg.nfft, x.sample_rate)?;
    let mut out = Matrix::zeros(frames.n_frames(), cfg.n_ceps);
    let mut windowed = alloc::vec![0.0; frames.frame_len];
    for (r, raw) in frames.frames.iter_rows().enumerate() {
        for ((w, s), h) in windowed.iter_mut().zip(raw).zip(&window) {
            *w = s * h;
        }
        let power = signal::power_spectrum(&windowed, cfg.nfft)?;
        let log_mel: Vec<f64> = fbank.apply(&power)?.iter().map(|e| libm::log(e + LOG_FLOOR)).collect();
        let mut ceps = signal::dct2(&log_mel, cfg.n_ceps)?;
        ceps[0] = signal::log_energy(raw);
        out.row_mut(r).copy_from_slice(&ceps);
    }
    Ok(out)
}

/// Full MFCC pipeline: static cepstra with Δ and ΔΔ, optional VAD and CMVN.
pub fn mfcc(x: &Waveform, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    let stat = static_cepstra(x, cfg)?;
    let d = signal::delta(&stat);
    let dd = signal::delta(&d);
    let feats = if cfg.dynamic_only { Matrix::hstack(&[&d, &dd])? } else { Matrix::hstack(&[&stat, &d, &dd])? };
    if cfg.use_cmvn {
        signal::cmvn(&feats)
    } else {
        Ok(feats)
    }
}
