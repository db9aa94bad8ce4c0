//! Forward transform and scale gradients of the wavelet deconvolution layer.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Matrix, Result};

pub const DEFAULT_KERNEL_LEN: usize = 251;
pub const DEFAULT_S_MIN: f64 = 0.05;
pub const DEFAULT_S_MAX: f64 = 512.0;

/// Learnable scales, kept inside `[s_min, s_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector {
    values: Vec<f64>,
    s_min: f64,
    s_max: f64,
}

impl ScaleVector {
    pub fn new(values: Vec<f64>, s_min: f64, s_max: f64) -> Result<Self> {
        if !(s_min > 0.0) || !(s_max >= s_min) || !s_max.is_finite() {
            return Err(Error::param("bounds", "need 0 < s_min ≤ s_max < ∞"));
        }
        if values.is_empty() {
            return Err(Error::Empty("scale vector"));
        }
        if values.iter().any(|s| !(*s >= s_min && *s <= s_max)) {
            return Err(Error::param("scales", "every scale must lie inside the bounds"));
        }
        Ok(ScaleVector { values, s_min, s_max })
    }

    pub fn with_default_bounds(values: Vec<f64>) -> Result<Self> {
        ScaleVector::new(values, DEFAULT_S_MIN, DEFAULT_S_MAX)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }
}

/// `M` scales spaced geometrically from 1 to 128 (powers of two for `M = 8`).
pub fn didactic_init(m: usize) -> Result<ScaleVector> {
    if m == 0 {
        return Err(Error::param("M", "need at least one scale"));
    }
    let values = if m == 1 { vec![1.0] } else { (0..m).map(|i| libm::exp2(7.0 * i as f64 / (m - 1) as f64)).collect() };
    ScaleVector::with_default_bounds(values)
}

fn check_kernel_len(k: usize) -> Result<i64> {
    if k.is_multiple_of(2) || k < 3 {
        return Err(Error::param("K", "kernel length must be odd and at least 3"));
    }
    Ok(((k - 1) / 2) as i64)
}

fn check_scale(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", "scale must be positive and finite"));
    }
    Ok(())
}

/// `ψ_{s,t} = 2/(π^{1/4}√(3s))·(t²/s² − 1)·exp(−t²/s²)` for `t = −(K−1)/2 ..= (K−1)/2`.
pub fn wd_kernel(s: f64, k: usize) -> Result<Vec<f64>> {
    check_scale(s)?;
    let h = check_kernel_len(k)?;
    let a = 2.0 / (libm::pow(PI, 0.25) * libm::sqrt(3.0 * s));
    Ok((-h..=h)
        .map(|t| {
            let u = (t * t) as f64 / (s * s);
            a * (u - 1.0) * libm::exp(-u)
        })
        .collect())
}

/// `∂ψ_{s,t}/∂s`, assembled from the amplitude, polynomial and Gaussian factors
/// `A = 2/(π^{1/4}√(3s))`, `M = t²/s² − 1`, `G = exp(−t²/s²)`:
/// `∂ψ/∂s = A·(M·∂G/∂s + G·∂M/∂s) + M·G·∂A/∂s`.
pub fn wd_kernel_scale_derivative(s: f64, k: usize) -> Result<Vec<f64>> {
    check_scale(s)?;
    let h = check_kernel_len(k)?;
    let pi4 = libm::pow(PI, 0.25);
    let a = 2.0 / (pi4 * libm::sqrt(3.0 * s));
    let da = -3.0 / pi4 * libm::pow(3.0 * s, -1.5);
    let s3 = s * s * s;
    Ok((-h..=h)
        .map(|t| {
            let t2 = (t * t) as f64;
            let m = t2 / (s * s) - 1.0;
            let dm = -2.0 * t2 / s3;
            let g = libm::exp(-t2 / (s * s));
            let dg = 2.0 * t2 / s3 * g;
            a * (m * dg + g * dm) + m * g * da
        })
        .collect())
}

/// One kernel per scale, `M × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct WdKernelBank {
    pub kernels: Matrix,
}

impl WdKernelBank {
    pub fn new(scales: &ScaleVector, k: usize) -> Result<Self> {
        let mut kernels = Matrix::zeros(scales.len(), k);
        for (i, &s) in scales.as_slice().iter().enumerate() {
            kernels.row_mut(i).copy_from_slice(&wd_kernel(s, k)?);
        }
        Ok(WdKernelBank { kernels })
    }

    pub fn kernel_len(&self) -> usize {
        self.kernels.cols()
    }
}

/// Layer output `z`, one row per scale, same length as the input.
#[derive(Debug, Clone, PartialEq)]
pub struct WdActivations {
    pub z: Matrix,
}

/// `z_{ij} = Σ_t ψ_{s_i,t}·x_{j+t}` with zeros outside the signal.
pub fn wd_forward(x: &[f64], scales: &ScaleVector, k: usize) -> Result<WdActivations> {
    if x.is_empty() {
        return Err(Error::Empty("WD input"));
    }
    let bank = WdKernelBank::new(scales, k)?;
    wd_forward_bank(x, &bank)
}

pub fn wd_forward_bank(x: &[f64], bank: &WdKernelBank) -> Result<WdActivations> {
    if x.is_empty() {
        return Err(Error::Empty("WD input"));
    }
    let mut z = Matrix::zeros(bank.kernels.rows(), x.len());
    for (i, kernel) in bank.kernels.iter_rows().enumerate() {
        z.row_mut(i).copy_from_slice(&crate::cwt::correlate_same(x, kernel));
    }
    Ok(WdActivations { z })
}

/// `g_k = Σ_j dE/dz_j · x_{j+t_k}` for one row of upstream gradient.
fn kernel_gradient(x: &[f64], dz: &[f64], h: i64) -> Vec<f64> {
    let n = x.len() as i64;
    (-h..=h)
        .map(|t| {
            let lo = 0.max(-t);
            let hi = n.min(n - t);
            let mut acc = 0.0;
            for j in lo..hi {
                acc += dz[j as usize] * x[(j + t) as usize];
            }
            acc
        })
        .collect()
}

/// `dE/ds_i = Σ_k ∂ψ_{s_i,k}/∂s_i · Σ_j dE/dz_{ij}·x_{j+k}`.
pub fn wd_backward(x: &[f64], scales: &ScaleVector, de_dz: &Matrix, k: usize) -> Result<Vec<f64>> {
    let h = check_kernel_len(k)?;
    if de_dz.rows() != scales.len() {
        return Err(Error::DimensionMismatch { context: "dE/dz rows", expected: scales.len(), got: de_dz.rows() });
    }
    if de_dz.cols() != x.len() {
        return Err(Error::DimensionMismatch { context: "dE/dz columns", expected: x.len(), got: de_dz.cols() });
    }
    scales
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let dpsi = wd_kernel_scale_derivative(s, k)?;
            let g = kernel_gradient(x, de_dz.row(i), h);
            Ok(dpsi.iter().zip(&g).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Projected gradient step `s' = clamp(s − γ·g, s_min, s_max)`.
pub fn update_scales(scales: &ScaleVector, grads: &[f64], gamma: f64) -> Result<ScaleVector> {
    if grads.len() != scales.len() {
        return Err(Error::DimensionMismatch { context: "scale gradient", expected: scales.len(), got: grads.len() });
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "learning rate must be non-negative"));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("scale gradient".into()));
    }
    let (lo, hi) = scales.bounds();
    let values = scales.values.iter().zip(grads).map(|(s, g)| (s - gamma * g).clamp(lo, hi)).collect();
    Ok(ScaleVector { values, s_min: lo, s_max: hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_shape_and_values() {
        let k = wd_kernel(1.0, 5).unwrap();
        assert_eq!(k.len(), 5);
        assert!((k[2] + 0.8673).abs() < 1e-4);
        assert_eq!(k[2], crate::cwt::mexican_hat(0.0, 1.0).unwrap());
        assert!(k[1].abs() < 1e-15 && k[3].abs() < 1e-15);
        let k = wd_kernel(3.7, 33).unwrap();
        for t in 0..33 {
            assert_eq!(k[t], k[32 - t]);
        }
        assert!(wd_kernel(1.0, 4).is_err());
        assert!(wd_kernel(0.0, 5).is_err());
    }

    #[test]
    fn derivative_matches_closed_form() {
        // (4t⁴/s⁴ − 9t²/s² + 1)·exp(−t²/s²) / (π^{1/4}·√(3s³))
        for s in [0.5, 1.0, 7.3, 120.0] {
            let d = wd_kernel_scale_derivative(s, 65).unwrap();
            for (i, v) in d.iter().enumerate() {
                let t = i as f64 - 32.0;
                let u = t * t / (s * s);
                let closed = (4.0 * u * u - 9.0 * u + 1.0) * libm::exp(-u) / (libm::pow(PI, 0.25) * libm::sqrt(3.0 * s * s * s));
                assert!((v - closed).abs() <= 1e-12 * (1.0 + closed.abs()), "s={s} t={t}");
            }
        }
    }

    #[test]
    fn didactic_values() {
        assert_eq!(didactic_init(8).unwrap().as_slice(), &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]);
        assert_eq!(didactic_init(1).unwrap().as_slice(), &[1.0]);
        let s = didactic_init(20).unwrap();
        let ratio = libm::pow(128.0, 1.0 / 19.0);
        for w in s.as_slice().windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        assert!((s.as_slice()[19] - 128.0).abs() < 1e-12);
        assert!(didactic_init(0).is_err());
    }

    #[test]
    fn update_examples() {
        let s = ScaleVector::with_default_bounds(vec![1.0, 4.0]).unwrap();
        assert_eq!(update_scales(&s, &[0.0, 0.0], 0.3).unwrap(), s);
        let u = update_scales(&s, &[10.0, 1.0], 1.0).unwrap();
        assert_eq!(u.as_slice()[0], 0.05);
        let u = update_scales(&s, &[0.0, 1.0], 0.5).unwrap();
        assert_eq!(u.as_slice()[1], 3.5);
        let u = update_scales(&s, &[0.0, -1e6], 1.0).unwrap();
        assert_eq!(u.as_slice()[1], DEFAULT_S_MAX);
        assert!(update_scales(&s, &[0.0], 1.0).is_err());
    }

    #[test]
    fn zero_input_and_zero_gradient() {
        let s = ScaleVector::with_default_bounds(vec![1.0, 2.0, 4.0]).unwrap();
        let z = wd_forward(&[0.0; 50], &s, 33).unwrap();
        assert!(z.z.as_slice().iter().all(|&v| v == 0.0));
        let x: Vec<f64> = (0..50).map(|i| libm::sin(i as f64)).collect();
        let g = wd_backward(&x, &s, &Matrix::zeros(3, 50), 33).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert!(wd_backward(&x, &s, &Matrix::zeros(2, 50), 33).is_err());
        assert!(wd_forward(&[], &s, 33).is_err());
    }

    #[test]
    fn chunk_length_preserved() {
        let s = didactic_init(8).unwrap();
        let z = wd_forward(&vec![0.1; 3200], &s, DEFAULT_KERNEL_LEN).unwrap();
        assert_eq!((z.z.rows(), z.z.cols()), (8, 3200));
    }
}
