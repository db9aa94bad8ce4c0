//! Periodized wavelet packet transform with Daubechies-4 filters.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Daubechies-4 (8-tap) scaling filter, normalized so `Σ h = √2` and `Σ h² = 1`.
pub const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wavelet {
    Db4,
}

impl Wavelet {
    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Db4 => "db4",
        }
    }

    pub fn lowpass(self) -> &'static [f64] {
        match self {
            Wavelet::Db4 => &DB4_LOWPASS,
        }
    }

    /// Quadrature-mirror highpass `g[i] = (−1)^i·h[L−1−i]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l).map(|i| if i % 2 == 0 { h[l - 1 - i] } else { -h[l - 1 - i] }).collect()
    }
}

/// Leaves of a full wavelet packet tree.
#[derive(Debug, Clone, PartialEq)]
pub struct WptTree {
    /// `2^level` subbands, lowest frequency first.
    pub leaf_coeffs: Vec<Vec<f64>>,
    pub level: usize,
    pub wavelet: Wavelet,
}

impl WptTree {
    pub fn n_leaves(&self) -> usize {
        self.leaf_coeffs.len()
    }

    pub fn leaf_energies(&self) -> Vec<f64> {
        self.leaf_coeffs.iter().map(|c| c.iter().map(|v| v * v).sum()).collect()
    }
}

/// One analysis step: filter with periodic extension, keep every second sample.
fn analysis_step(x: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n / 2).map(|k| filter.iter().enumerate().map(|(i, h)| h * x[(2 * k + i) % n]).sum()).collect()
}

/// Full wavelet packet decomposition to `level`.
///
/// The frame is zero-padded to a multiple of `2^level`; both branches are
/// split at every node and the leaves are returned in natural frequency order.
pub fn wpt(frame: &[f64], wavelet: Wavelet, level: usize) -> Result<WptTree> {
    if level == 0 {
        return Err(Error::param("level", "must be at least 1"));
    }
    if level >= usize::BITS as usize - 1 {
        return Err(Error::param("level", "too deep"));
    }
    let lo = wavelet.lowpass();
    let hi = wavelet.highpass();
    let block = 1usize << level;
    let padded_len = frame.len().div_ceil(block) * block;
    if padded_len < lo.len() || frame.is_empty() {
        return Err(Error::TooShort { needed: lo.len(), got: frame.len() });
    }
    let mut padded = frame.to_vec();
    padded.resize(padded_len, 0.0);
    // nodes in Paley (filter-bank) order: child 2p is lowpass, 2p + 1 highpass
    let mut nodes = vec![padded];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            next.push(analysis_step(node, lo));
            next.push(analysis_step(node, &hi));
        }
        nodes = next;
    }
    // highpass branches swap frequency order; the Gray code undoes it
    let leaf_coeffs = (0..nodes.len()).map(|f| core::mem::take(&mut nodes[f ^ (f >> 1)])).collect();
    Ok(WptTree { leaf_coeffs, level, wavelet })
}
