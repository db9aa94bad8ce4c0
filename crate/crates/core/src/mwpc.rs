//! Mel wavelet packet coefficients: TKE, wavelet packet subband log energies,
//! mel-weighted projection and PCA.

use alloc::vec::Vec;

use crate::mfcc::{hz_to_mel, mel_to_hz, triangle};
use crate::pca::{pca_apply, pca_fit, PcaModel};
use crate::signal::{self, FeatureMatrix, Waveform};
use crate::wpt::{wpt, Wavelet};
use crate::{Error, Matrix, Result, LOG_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct MwpcConfig {
    pub alpha: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub level: usize,
    pub wavelet: Wavelet,
    pub n_filt: usize,
    pub n_components: usize,
}

impl Default for MwpcConfig {
    fn default() -> Self {
        MwpcConfig {
            alpha: 0.97,
            frame_ms: 25.0,
            hop_ms: 10.0,
            level: 4,
            wavelet: Wavelet::Db4,
            n_filt: 20,
            n_components: 12,
        }
    }
}

/// `n_filt × 2^level` matrix of triangular mel weights evaluated at each
/// subband's center frequency (subbands split `[0, fs/2]` uniformly).
pub fn subband_mel_matrix(n_filt: usize, level: usize, sample_rate: u32) -> Result<Matrix> {
    if n_filt == 0 {
        return Err(Error::param("n_filt", "need at least one filter"));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist)?;
    let edges: Vec<f64> =
        (0..n_filt + 2).map(|i| mel_to_hz(top * i as f64 / (n_filt + 1) as f64)).collect::<Result<_>>()?;
    let n_bands = 1usize << level;
    let mut w = Matrix::zeros(n_filt, n_bands);
    for m in 0..n_filt {
        for b in 0..n_bands {
            let center = (b as f64 + 0.5) * nyquist / n_bands as f64;
            w[(m, b)] = triangle(center, edges[m], edges[m + 1], edges[m + 2]);
        }
    }
    Ok(w)
}

/// Mel-projected subband log energies, one row per frame (before PCA).
pub fn mwpc_mel_features(x: &Waveform, cfg: &MwpcConfig) -> Result<FeatureMatrix> {
    let emph = signal::preemphasize(x, cfg.alpha)?;
    let frames = signal::frame(&emph, cfg.frame_ms, cfg.hop_ms)?;
    let window = signal::hamming(frames.frame_len)?;
    let mel = subband_mel_matrix(cfg.n_filt, cfg.level, x.sample_rate)?;
    let mut out = Matrix::zeros(frames.n_frames(), cfg.n_filt);
    for (r, raw) in frames.frames.iter_rows().enumerate() {
        let windowed: Vec<f64> = raw.iter().zip(&window).map(|(s, w)| s * w).collect();
        let energy = signal::tke(&windowed)?;
        let tree = wpt(&energy, cfg.wavelet, cfg.level)?;
        let log_e: Vec<f64> = tree.leaf_energies().iter().map(|e| libm::log(e + LOG_FLOOR)).collect();
        out.row_mut(r).copy_from_slice(&mel.mul_vec(&log_e)?);
    }
    Ok(out)
}

/// Full MWPC pipeline with a previously fitted PCA model.
pub fn mwpc(x: &Waveform, pca: &PcaModel, cfg: &MwpcConfig) -> Result<FeatureMatrix> {
    if pca.input_dim() != cfg.n_filt {
        return Err(Error::DimensionMismatch { context: "MWPC PCA model", expected: cfg.n_filt, got: pca.input_dim() });
    }
    pca_apply(pca, &mwpc_mel_features(x, cfg)?)
}

/// Fits the PCA stage on the pooled frames of a set of training utterances.
pub fn fit_mwpc_pca<'a>(train: impl IntoIterator<Item = &'a Waveform>, cfg: &MwpcConfig) -> Result<PcaModel> {
    let mut rows = Vec::new();
    for x in train {
        let f = mwpc_mel_features(x, cfg)?;
        rows.extend(f.iter_rows().map(<[f64]>::to_vec));
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no training frames for PCA".into()));
    }
    pca_fit(&Matrix::from_rows(&rows)?, cfg.n_components)
}
