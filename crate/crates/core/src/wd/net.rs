//! Pooling and a two-layer dense head with log-softmax output.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gmm::log_sum_exp;
use crate::matrix::dot;
use crate::{Error, Matrix, Result};

pub const N_CLASSES: usize = 2;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Per-scale temporal mean followed by per-scale temporal max.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub features: Vec<f64>,
    argmax: Vec<usize>,
    len: usize,
}

pub fn pool(z: &Matrix) -> Result<Pooled> {
    if z.cols() == 0 {
        return Err(Error::Empty("activations to pool"));
    }
    let m = z.rows();
    let mut features = vec![0.0; 2 * m];
    let mut argmax = vec![0; m];
    for (i, row) in z.iter_rows().enumerate() {
        features[i] = row.iter().sum::<f64>() / row.len() as f64;
        let mut best = 0;
        for (j, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = j;
            }
        }
        argmax[i] = best;
        features[m + i] = row[best];
    }
    Ok(Pooled { features, argmax, len: z.cols() })
}

/// Routes gradients of the pooled features back to `dE/dz`.
pub fn pool_backward(d_features: &[f64], pooled: &Pooled) -> Result<Matrix> {
    let m = pooled.argmax.len();
    if d_features.len() != 2 * m {
        return Err(Error::DimensionMismatch { context: "pooled gradient", expected: 2 * m, got: d_features.len() });
    }
    let mut dz = Matrix::zeros(m, pooled.len);
    let inv = 1.0 / pooled.len as f64;
    for i in 0..m {
        let row = dz.row_mut(i);
        row.iter_mut().for_each(|v| *v = d_features[i] * inv);
        row[pooled.argmax[i]] += d_features[m + i];
    }
    Ok(dz)
}

/// `dense → leaky-ReLU → dense → log-softmax` over two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyNet {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub leaky_slope: f64,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl Forward {
    pub fn nll(&self, label: usize) -> f64 {
        -self.log_probs[label]
    }

    /// `log p(bonafide) − log p(spoof)`.
    pub fn log_ratio(&self) -> f64 {
        self.log_probs[0] - self.log_probs[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl NetGrads {
    pub fn zeros_like(net: &ToyNet) -> Self {
        NetGrads {
            w1: Matrix::zeros(net.w1.rows(), net.w1.cols()),
            b1: vec![0.0; net.b1.len()],
            w2: Matrix::zeros(net.w2.rows(), net.w2.cols()),
            b2: vec![0.0; net.b2.len()],
        }
    }

    pub fn accumulate(&mut self, other: &NetGrads, factor: f64) {
        let pairs = [
            (self.w1.as_mut_slice(), other.w1.as_slice()),
            (self.b1.as_mut_slice(), other.b1.as_slice()),
            (self.w2.as_mut_slice(), other.w2.as_slice()),
            (self.b2.as_mut_slice(), other.b2.as_slice()),
        ];
        for (dst, src) in pairs {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += factor * s);
        }
    }
}

impl ToyNet {
    /// Uniform Glorot initialization with zero biases.
    pub fn new(input: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::param("layer sizes", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = libm::sqrt(6.0 / (rows + cols) as f64);
            let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
            Matrix::from_vec(rows, cols, data)
        };
        Ok(ToyNet {
            w1: glorot(hidden, input)?,
            b1: vec![0.0; hidden],
            w2: glorot(N_CLASSES, hidden)?,
            b2: vec![0.0; N_CLASSES],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        ToyNet {
            w1: Matrix::zeros(hidden, input),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(N_CLASSES, hidden),
            b2: vec![0.0; N_CLASSES],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.w2.is_finite()
            && self.b1.iter().chain(&self.b2).all(|v| v.is_finite())
            && self.leaky_slope.is_finite()
    }

    pub fn forward(&self, features: &[f64]) -> Result<Forward> {
        if features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { context: "head input", expected: self.input_dim(), got: features.len() });
        }
        check_finite("pooled WD activations", features)?;
        let pre: Vec<f64> = self.w1.iter_rows().zip(&self.b1).map(|(w, b)| dot(w, features) + b).collect();
        check_finite("dense layer 1", &pre)?;
        let hidden: Vec<f64> = pre.iter().map(|&v| if v > 0.0 { v } else { self.leaky_slope * v }).collect();
        let logits: Vec<f64> = self.w2.iter_rows().zip(&self.b2).map(|(w, b)| dot(w, &hidden) + b).collect();
        check_finite("dense layer 2", &logits)?;
        let lse = log_sum_exp(&logits);
        let log_probs = logits.iter().map(|l| l - lse).collect();
        Ok(Forward { input: features.to_vec(), pre, hidden, log_probs })
    }

    /// Gradients of `−log p(label)` w.r.t. every parameter and the input.
    pub fn backward(&self, fw: &Forward, label: usize) -> Result<(NetGrads, Vec<f64>)> {
        if label >= N_CLASSES {
            return Err(Error::param("label", "class index out of range"));
        }
        let d_logits: Vec<f64> = fw
            .log_probs
            .iter()
            .enumerate()
            .map(|(c, lp)| libm::exp(*lp) - if c == label { 1.0 } else { 0.0 })
            .collect();
        let mut grads = NetGrads::zeros_like(self);
        for (c, dl) in d_logits.iter().enumerate() {
            grads.b2[c] = *dl;
            for (g, h) in grads.w2.row_mut(c).iter_mut().zip(&fw.hidden) {
                *g = dl * h;
            }
        }
        let d_pre: Vec<f64> = (0..self.hidden_dim())
            .map(|h| {
                let d_hidden: f64 = d_logits.iter().enumerate().map(|(c, dl)| dl * self.w2[(c, h)]).sum();
                if fw.pre[h] > 0.0 {
                    d_hidden
                } else {
                    self.leaky_slope * d_hidden
                }
            })
            .collect();
        let mut d_input = vec![0.0; self.input_dim()];
        for (h, dp) in d_pre.iter().enumerate() {
            grads.b1[h] = *dp;
            for ((g, x), (di, w)) in
                grads.w1.row_mut(h).iter_mut().zip(&fw.input).zip(d_input.iter_mut().zip(self.w1.row(h)))
            {
                *g = dp * x;
                *di += dp * w;
            }
        }
        Ok((grads, d_input))
    }

    /// Plain gradient-descent step.
    pub fn apply(&mut self, grads: &NetGrads, lr: f64) {
        let mut step = NetGrads { w1: self.w1.clone(), b1: self.b1.clone(), w2: self.w2.clone(), b2: self.b2.clone() };
        step.accumulate(grads, -lr);
        self.w1 = step.w1;
        self.b1 = step.b1;
        self.w2 = step.w2;
        self.b2 = step.b2;
    }
}

fn check_finite(layer: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{layer} output")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_probs_normalize() {
        let net = ToyNet::new(4, 3, 1).unwrap();
        let fw = net.forward(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        let total: f64 = fw.log_probs.iter().map(|v| libm::exp(*v)).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = ToyNet::zeros(6, 5);
        let fw = net.forward(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for lp in fw.log_probs {
            assert!((lp - libm::log(0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn nan_is_reported_with_layer() {
        let net = ToyNet::new(2, 2, 0).unwrap();
        let err = net.forward(&[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains("pooled")));
        let mut bad = net.clone();
        bad.b1[0] = f64::INFINITY;
        let err = bad.forward(&[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains("dense layer 1")));
    }

    #[test]
    fn pooling_mean_and_max() {
        let z = Matrix::from_rows(&[vec![1.0, 3.0, 2.0], vec![-1.0, -2.0, -3.0]]).unwrap();
        let p = pool(&z).unwrap();
        assert_eq!(p.features, vec![2.0, -2.0, 3.0, -1.0]);
        let dz = pool_backward(&[3.0, 0.0, 1.0, 2.0], &p).unwrap();
        assert_eq!(dz.row(0), &[1.0, 2.0, 1.0]);
        assert_eq!(dz.row(1), &[2.0, 0.0, 0.0]);
    }
}
