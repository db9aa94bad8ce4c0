//! Two-level log wavelet scattering with analytic Gabor-type filters,
//! periodic boundaries and rectangular averaging windows.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::signal::Waveform;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringConfig {
    /// First-order wavelets.
    pub n1: usize,
    /// Second-order wavelets per first-order path.
    pub n2: usize,
    /// First-order wavelets per octave.
    pub q1: usize,
    /// Second-order wavelets per octave.
    pub q2: usize,
    /// Averaging window length M in samples (also the hop).
    pub avg_len: usize,
    pub eps: f64,
    /// Center frequency of the highest first-order filter, cycles per sample.
    pub xi_max: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig { n1: 12, n2: 1, q1: 8, q2: 8, avg_len: 256, eps: 1e-6, xi_max: 0.35 }
    }
}

impl ScatteringConfig {
    pub fn n_paths(&self) -> usize {
        self.n1 + self.n1 * self.n2
    }

    fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.q1 == 0 || self.q2 == 0 {
            return Err(Error::param("n1/q1/q2", "must be positive"));
        }
        if self.avg_len == 0 {
            return Err(Error::param("avg_len", "must be positive"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::param("eps", "must be positive"));
        }
        if !(self.xi_max > 0.0 && self.xi_max < 0.5) {
            return Err(Error::param("xi_max", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// One scattering path: first-order filter and optional second-order filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Path {
    pub j1: usize,
    pub j2: Option<usize>,
}

/// Log scattering coefficients, `n_paths × n_frames`, zeroth order excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFeatures {
    pub coeffs: Matrix,
    pub paths: Vec<Path>,
}

/// A complex filter stored with its support offset.
#[derive(Debug, Clone)]
struct Filter {
    half: usize,
    taps: Vec<Complex64>,
}

/// Filter `j` of a ladder: the mother `exp(2πiξn)·exp(−n²/2σ²)` dilated as
/// `(1/s)·ψ(n/s)` with `s = 2^{j/q}`, L1-normalized at unit scale.
fn ladder_filter(xi_top: f64, q: usize, j: usize) -> Filter {
    let s = libm::exp2(j as f64 / q as f64);
    // frequency-domain std is half the spacing between neighboring centers
    let sigma_f = xi_top * (1.0 - libm::exp2(-1.0 / q as f64)) / 2.0;
    let sigma = 1.0 / (2.0 * PI * sigma_f);
    let half = libm::ceil(6.0 * sigma * s) as usize;
    let norm = 1.0 / (s * sigma * libm::sqrt(2.0 * PI));
    let taps = (-(half as i64)..=half as i64)
        .map(|n| {
            let u = n as f64 / s;
            let env = norm * libm::exp(-u * u / (2.0 * sigma * sigma));
            let ph = 2.0 * PI * xi_top * u;
            Complex64::new(env * libm::cos(ph), env * libm::sin(ph))
        })
        .collect();
    Filter { half, taps }
}

/// `|ψ ⊛ x|` with circular convolution.
fn modulus_circular(x: &[f64], f: &Filter) -> Vec<f64> {
    let n = x.len() as i64;
    let h = f.half as i64;
    (0..n)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, tap) in f.taps.iter().enumerate() {
                let t = i as i64 - h;
                acc += tap * x[(m - t).rem_euclid(n) as usize];
            }
            acc.norm()
        })
        .collect()
}

fn average_frames(p: &[f64], m: usize, n_frames: usize) -> Vec<f64> {
    (0..n_frames).map(|k| p[k * m..(k + 1) * m].iter().sum::<f64>() / m as f64).collect()
}

pub fn scattering(x: &Waveform, cfg: &ScatteringConfig) -> Result<ScatteringFeatures> {
    scattering_samples(&x.samples, cfg)
}

pub fn scattering_samples(x: &[f64], cfg: &ScatteringConfig) -> Result<ScatteringFeatures> {
    cfg.validate()?;
    if x.len() < cfg.avg_len {
        return Err(Error::TooShort { needed: cfg.avg_len, got: x.len() });
    }
    let n_frames = x.len() / cfg.avg_len;
    let first: Vec<Filter> = (0..cfg.n1).map(|j| ladder_filter(cfg.xi_max, cfg.q1, j)).collect();
    // second-order ladder starts just below the lowest first-order filter
    let xi2 = cfg.xi_max * libm::exp2(-(cfg.n1 as f64) / cfg.q1 as f64);
    let second: Vec<Filter> = (0..cfg.n2).map(|j| ladder_filter(xi2, cfg.q2, j)).collect();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_paths());
    let mut paths = Vec::with_capacity(cfg.n_paths());
    let mut second_rows = Vec::with_capacity(cfg.n1 * cfg.n2);
    let mut second_paths = Vec::with_capacity(cfg.n1 * cfg.n2);
    for (j1, f1) in first.iter().enumerate() {
        let p1 = modulus_circular(x, f1);
        rows.push(average_frames(&p1, cfg.avg_len, n_frames));
        paths.push(Path { j1, j2: None });
        for (j2, f2) in second.iter().enumerate() {
            let p2 = modulus_circular(&p1, f2);
            second_rows.push(average_frames(&p2, cfg.avg_len, n_frames));
            second_paths.push(Path { j1, j2: Some(j2) });
        }
    }
    rows.extend(second_rows);
    paths.extend(second_paths);
    let mut coeffs = Matrix::from_rows(&rows)?;
    for v in coeffs.as_mut_slice() {
        *v = libm::log(*v + cfg.eps);
    }
    Ok(ScatteringFeatures { coeffs, paths })
}
