//! Discretized continuous wavelet transform with a Mexican-hat filterbank.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::signal::Waveform;
use crate::{Error, Matrix, Result};

/// `2 / (π^{1/4}·√3)`.
#[cfg(test)]
fn hat_gain() -> f64 {
    2.0 / (libm::pow(PI, 0.25) * libm::sqrt(3.0))
}

/// `ψ(t) = 2/(π^{1/4}·√(3σ))·(t²/σ² − 1)·exp(−t²/σ²)`.
///
/// The central lobe is negative: `ψ(0) = −2/(π^{1/4}√(3σ))`.
pub fn mexican_hat(t: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", "must be positive"));
    }
    let u = t * t / (sigma * sigma);
    Ok(2.0 / (libm::pow(PI, 0.25) * libm::sqrt(3.0 * sigma)) * (u - 1.0) * libm::exp(-u))
}

/// Center frequency of the Mexican hat above, in cycles per sample at unit scale.
///
/// A unit-amplitude tone of angular frequency `ω` produces a response of
/// magnitude `√s·|Ψ̂(sω)|` at scale `s`, with `|Ψ̂(v)| ∝ (1/2 + v²/4)·e^{−v²/4}`.
/// That is maximal at `v⁴ − 3v² − 2 = 0`, so a tone of `f` cycles/sample peaks
/// at scale `v*/(2πf)`, i.e. `fc = v*/(2π)` with `v* = √((3 + √17)/2)`.
pub fn mexican_hat_center_frequency() -> f64 {
    libm::sqrt((3.0 + libm::sqrt(17.0)) / 2.0) / (2.0 * PI)
}

/// `F = fc·fs / s`.
pub fn scale_to_freq(s: f64, fc: f64, fs: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::param("s", "scale must be positive"));
    }
    Ok(fc * fs / s)
}

/// Inverse of [`scale_to_freq`].
pub fn freq_to_scale(f: f64, fc: f64, fs: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::param("f", "frequency must be positive"));
    }
    Ok(fc * fs / f)
}

/// Fractional-octave scale ladder `s_j = s0·2^{j·dj}`, `j = 0..=floor(J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    pub s0: f64,
    pub dj: f64,
    pub n_step: f64,
    pub scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Index of the grid scale closest to `s` in log distance.
    pub fn nearest(&self, s: f64) -> usize {
        nearest_log(&self.scales, s)
    }
}

pub(crate) fn nearest_log(scales: &[f64], s: f64) -> usize {
    let target = libm::log(s);
    let mut best = 0;
    for (i, v) in scales.iter().enumerate() {
        if libm::fabs(libm::log(*v) - target) < libm::fabs(libm::log(scales[best]) - target) {
            best = i;
        }
    }
    best
}

/// Builds the grid with `J = log2(N·n_step/s0)/dj`.
pub fn scale_grid(s0: f64, dj: f64, n: usize, n_step: f64) -> Result<ScaleGrid> {
    if !(s0 > 0.0) || !(dj > 0.0) || !(n_step > 0.0) {
        return Err(Error::param("s0/dj/n_step", "must be positive"));
    }
    if n < 2 {
        return Err(Error::param("N", "signal length must be at least 2"));
    }
    let j_max = libm::log2(n as f64 * n_step / s0) / dj;
    if !(j_max > 0.0) {
        return Err(Error::param("N·n_step", "must exceed the smallest scale"));
    }
    let count = libm::floor(j_max) as usize + 1;
    let scales = (0..count).map(|j| s0 * libm::exp2(j as f64 * dj)).collect();
    Ok(ScaleGrid { s0, dj, n_step, scales })
}

/// How a scaled wavelet is cut to a finite kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelRule {
    /// Support `t ∈ [−⌈k·s⌉, ⌈k·s⌉]`.
    Support { widths: f64 },
    /// Fixed odd length, centered on zero.
    Fixed(usize),
}

impl Default for KernelRule {
    fn default() -> Self {
        KernelRule::Support { widths: 5.0 }
    }
}

impl KernelRule {
    pub fn half_width(&self, s: f64) -> Result<usize> {
        match *self {
            KernelRule::Support { widths } => {
                if !(widths > 0.0) {
                    return Err(Error::param("widths", "must be positive"));
                }
                Ok(libm::ceil(widths * s) as usize)
            }
            KernelRule::Fixed(k) => {
                if k % 2 == 0 || k < 3 {
                    return Err(Error::param("K", "kernel length must be odd and at least 3"));
                }
                Ok((k - 1) / 2)
            }
        }
    }
}

/// `(1/√s)·ψ(t/s)` with `σ = 1`, sampled at integer `t` in `[−h, h]`.
pub fn cwt_kernel(s: f64, rule: KernelRule) -> Result<Vec<f64>> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", "scale must be positive and finite"));
    }
    let h = rule.half_width(s)? as i64;
    let norm = 1.0 / libm::sqrt(s);
    let k: Vec<f64> = (-h..=h).map(|t| norm * mexican_hat(t as f64 / s, 1.0).unwrap_or(0.0)).collect();
    if k.iter().any(|v| !v.is_finite()) || k.iter().all(|&v| v == 0.0) {
        return Err(Error::param("s", "degenerate kernel"));
    }
    Ok(k)
}

/// `out[m] = Σ_t kernel[t]·x[m + t]` over the centered kernel, zero outside `x`.
pub(crate) fn correlate_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = x.len() as i64;
    let h = (kernel.len() / 2) as i64;
    (0..n)
        .map(|m| {
            let lo = (-h).max(-m);
            let hi = h.min(n - 1 - m);
            let mut acc = 0.0;
            for t in lo..=hi {
                acc += kernel[(t + h) as usize] * x[(m + t) as usize];
            }
            acc
        })
        .collect()
}

/// `n_scales × signal_len` wavelet coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub coeffs: Matrix,
    pub scales: Vec<f64>,
}

impl Scalogram {
    /// Mean absolute coefficient per scale.
    pub fn mean_abs(&self) -> Vec<f64> {
        self.coeffs.iter_rows().map(|r| r.iter().map(|v| libm::fabs(*v)).sum::<f64>() / r.len() as f64).collect()
    }
}

pub fn cwt(x: &Waveform, grid: &ScaleGrid, rule: KernelRule) -> Result<Scalogram> {
    cwt_scales(&x.samples, &grid.scales, rule)
}

/// CWT on an arbitrary list of scales.
pub fn cwt_scales(x: &[f64], scales: &[f64], rule: KernelRule) -> Result<Scalogram> {
    if x.is_empty() {
        return Err(Error::Empty("CWT input"));
    }
    if scales.is_empty() {
        return Err(Error::Empty("CWT scale list"));
    }
    let kernels: Vec<Vec<f64>> = scales.iter().map(|&s| cwt_kernel(s, rule)).collect::<Result<_>>()?;
    let shortest = kernels.iter().map(Vec::len).min().unwrap_or(0);
    if x.len() < shortest {
        return Err(Error::TooShort { needed: shortest, got: x.len() });
    }
    let mut coeffs = Matrix::zeros(scales.len(), x.len());
    for (j, k) in kernels.iter().enumerate() {
        coeffs.row_mut(j).copy_from_slice(&correlate_same(x, k));
    }
    Ok(Scalogram { coeffs, scales: scales.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn mexican_hat_values() {
        assert!(mexican_hat(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!(mexican_hat(-2.5, 2.5).unwrap().abs() < 1e-15);
        assert!((mexican_hat(0.0, 1.0).unwrap() + 0.8673).abs() < 1e-4);
        assert!((mexican_hat(0.0, 1.0).unwrap() + hat_gain()).abs() < 1e-15);
        for t in [0.1, 0.7, 1.9, 3.3] {
            assert_eq!(mexican_hat(t, 1.3).unwrap(), mexican_hat(-t, 1.3).unwrap());
        }
        assert!(mexican_hat(0.0, 0.0).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = scale_grid(2.0, 0.125, 3200, 0.1).unwrap();
        assert_eq!(g.len(), 59);
        let g = scale_grid(1.0, 1.0, 80, 0.1).unwrap();
        assert_eq!(g.scales, vec![1.0, 2.0, 4.0, 8.0]);
        assert!(scale_grid(10.0, 0.5, 10, 1.0).is_err());
        assert!(scale_grid(1.0, 0.0, 10, 1.0).is_err());
    }

    #[test]
    fn freq_examples() {
        assert_eq!(scale_to_freq(2.0, 0.25, 1.0).unwrap(), 0.125);
        assert_eq!(scale_to_freq(4.0, 0.25, 1.0).unwrap(), 0.0625);
        assert_eq!(scale_to_freq(4000.0, 0.25, 16000.0).unwrap(), 1.0);
        assert!(scale_to_freq(0.0, 0.25, 1.0).is_err());
        let fc = mexican_hat_center_frequency();
        let v = 2.0 * PI * fc;
        assert!((v.powi(4) - 3.0 * v * v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_support() {
        assert_eq!(cwt_kernel(2.0, KernelRule::default()).unwrap().len(), 21);
        assert_eq!(cwt_kernel(2.0, KernelRule::Fixed(33)).unwrap().len(), 33);
        assert!(cwt_kernel(2.0, KernelRule::Fixed(32)).is_err());
        assert!(cwt_kernel(-1.0, KernelRule::default()).is_err());
    }

    #[test]
    fn zero_and_short_input() {
        let s = cwt_scales(&[0.0; 64], &[1.0, 2.0], KernelRule::default()).unwrap();
        assert!(s.coeffs.as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(cwt_scales(&[0.0; 5], &[4.0], KernelRule::default()), Err(Error::TooShort { .. })));
    }
}
