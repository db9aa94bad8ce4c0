//! Diagonal-covariance Gaussian mixtures trained by EM, and LLR scoring.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::FeatureMatrix;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Matrix,
    pub variances: Matrix,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Matrix, variances: Matrix) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::Empty("GMM weights"));
        }
        if means.rows() != m || variances.rows() != m {
            return Err(Error::DimensionMismatch { context: "GMM components", expected: m, got: means.rows() });
        }
        if means.cols() != variances.cols() {
            return Err(Error::DimensionMismatch { context: "GMM dimension", expected: means.cols(), got: variances.cols() });
        }
        if weights.iter().chain(means.as_slice()).chain(variances.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMM parameters".into()));
        }
        if variances.as_slice().iter().any(|&v| v <= 0.0) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::param("variances/weights", "variances must be positive and weights non-negative"));
        }
        if libm::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-10 {
            return Err(Error::param("weights", "must sum to 1"));
        }
        Ok(GmmModel { weights, means, variances })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.cols()
    }

    /// Per-component `log w_m − ½·Σ_d log(2π·σ²_md)`.
    fn log_norms(&self) -> Vec<f64> {
        (0..self.n_components())
            .map(|m| {
                let det: f64 = self.variances.row(m).iter().map(|v| libm::log(2.0 * PI * v)).sum();
                libm::log(self.weights[m]) - 0.5 * det
            })
            .collect()
    }

    fn component_logs(&self, norms: &[f64], frame: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let maha: f64 = frame
                .iter()
                .zip(self.means.row(m))
                .zip(self.variances.row(m))
                .map(|((x, mu), v)| (x - mu) * (x - mu) / v)
                .sum();
            *o = norms[m] - 0.5 * maha;
        }
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + libm::log(v.iter().map(|x| libm::exp(x - max)).sum::<f64>())
}

/// `log Σ_m w_m·N(frame; μ_m, diag σ²_m)`.
pub fn gmm_loglik(model: &GmmModel, frame: &[f64]) -> Result<f64> {
    if frame.len() != model.dim() {
        return Err(Error::DimensionMismatch { context: "GMM frame", expected: model.dim(), got: frame.len() });
    }
    let norms = model.log_norms();
    let mut comp = vec![0.0; model.n_components()];
    model.component_logs(&norms, frame, &mut comp);
    Ok(log_sum_exp(&comp))
}

/// Sum of frame log-likelihoods.
pub fn total_loglik(model: &GmmModel, x: &FeatureMatrix) -> Result<f64> {
    frame_logliks(model, x).map(|v| v.iter().sum())
}

fn frame_logliks(model: &GmmModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.cols() != model.dim() {
        return Err(Error::DimensionMismatch { context: "GMM features", expected: model.dim(), got: x.cols() });
    }
    let norms = model.log_norms();
    let mut comp = vec![0.0; model.n_components()];
    Ok(x
        .iter_rows()
        .map(|row| {
            model.component_logs(&norms, row, &mut comp);
            log_sum_exp(&comp)
        })
        .collect())
}

/// Mean over frames of `log p(frame | human) − log p(frame | spoof)`.
pub fn llr_score(features: &FeatureMatrix, human: &GmmModel, spoof: &GmmModel) -> Result<f64> {
    if features.rows() == 0 {
        return Err(Error::Empty("utterance features"));
    }
    if human.dim() != spoof.dim() {
        return Err(Error::DimensionMismatch { context: "GMM pair", expected: human.dim(), got: spoof.dim() });
    }
    let h = frame_logliks(human, features)?;
    let s = frame_logliks(spoof, features)?;
    Ok(h.iter().zip(&s).map(|(a, b)| a - b).sum::<f64>() / features.rows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmConfig {
    pub components: usize,
    pub max_iter: usize,
    /// Relative log-likelihood change that stops EM.
    pub tol: f64,
    pub kmeans_iter: usize,
    pub var_floor: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig { components: 8, max_iter: 50, tol: 1e-6, kmeans_iter: 10, var_floor: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Total log-likelihood before each M-step and after the last one.
    pub loglik_trace: Vec<f64>,
    /// Number of components re-seeded because they lost all responsibility.
    pub reseeded: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_pp(x: &FeatureMatrix, k: usize, iters: usize, rng: &mut ChaCha8Rng) -> (Matrix, Vec<usize>) {
    let n = x.rows();
    let mut centers = Matrix::zeros(k, x.cols());
    centers.row_mut(0).copy_from_slice(x.row(rng.gen_range(0..n)));
    let mut d2: Vec<f64> = x.iter_rows().map(|r| sq_dist(r, centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(x.row(pick));
        for (i, r) in x.iter_rows().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, centers.row(c)));
        }
    }
    let mut assign = vec![0usize; n];
    for _ in 0..iters.max(1) {
        for (i, r) in x.iter_rows().enumerate() {
            assign[i] = (0..k)
                .min_by(|&a, &b| sq_dist(r, centers.row(a)).total_cmp(&sq_dist(r, centers.row(b))))
                .unwrap_or(0);
        }
        let mut sums = Matrix::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for (i, r) in x.iter_rows().enumerate() {
            counts[assign[i]] += 1;
            sums.row_mut(assign[i]).iter_mut().zip(r).for_each(|(s, v)| *s += v);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    (centers, assign)
}

/// k-means++ initialization followed by EM.
pub fn gmm_fit(x: &FeatureMatrix, cfg: &GmmConfig, seed: u64) -> Result<GmmFit> {
    let (n, d, k) = (x.rows(), x.cols(), cfg.components);
    if k == 0 {
        return Err(Error::param("components", "need at least one component"));
    }
    if d == 0 {
        return Err(Error::Empty("feature dimension"));
    }
    if n < 10 * k {
        return Err(Error::InsufficientData(alloc::format!("{n} frames for {k} components; need at least {}", 10 * k)));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("GMM training features".into()));
    }
    if !(cfg.var_floor > 0.0) {
        return Err(Error::param("var_floor", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (centers, assign) = kmeans_pp(x, k, cfg.kmeans_iter, &mut rng);

    // global variance for clusters too small to estimate their own
    let mut global_mean = vec![0.0; d];
    for r in x.iter_rows() {
        global_mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n as f64);
    }
    let mut global_var = vec![0.0; d];
    for r in x.iter_rows() {
        for j in 0..d {
            global_var[j] += (r[j] - global_mean[j]) * (r[j] - global_mean[j]) / n as f64;
        }
    }
    let mut weights = vec![0.0; k];
    let mut variances = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, r) in x.iter_rows().enumerate() {
        let c = assign[i];
        counts[c] += 1;
        for j in 0..d {
            variances[(c, j)] += (r[j] - centers[(c, j)]) * (r[j] - centers[(c, j)]);
        }
    }
    for c in 0..k {
        weights[c] = counts[c].max(1) as f64;
        for j in 0..d {
            let v = if counts[c] >= 2 { variances[(c, j)] / counts[c] as f64 } else { global_var[j] };
            variances[(c, j)] = v.max(cfg.var_floor);
        }
    }
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    let mut model = GmmModel { weights, means: centers, variances };

    let mut trace = Vec::new();
    let mut resp = Matrix::zeros(n, k);
    let mut reseeded = 0;
    let mut comp = vec![0.0; k];
    for iter in 0..=cfg.max_iter {
        // E-step
        let norms = model.log_norms();
        let mut ll = 0.0;
        for (i, r) in x.iter_rows().enumerate() {
            model.component_logs(&norms, r, &mut comp);
            let lse = log_sum_exp(&comp);
            ll += lse;
            for (c, v) in comp.iter().enumerate() {
                resp[(i, c)] = libm::exp(v - lse);
            }
        }
        trace.push(ll);
        if iter == cfg.max_iter {
            break;
        }
        if iter > 0 {
            let prev = trace[trace.len() - 2];
            if libm::fabs(ll - prev) <= cfg.tol * libm::fabs(prev) {
                break;
            }
        }
        // M-step
        let nk: Vec<f64> = (0..k).map(|c| (0..n).map(|i| resp[(i, c)]).sum()).collect();
        let mut means = Matrix::zeros(k, d);
        let mut vars = Matrix::zeros(k, d);
        for c in 0..k {
            if nk[c] <= 1e-10 * n as f64 {
                continue;
            }
            for (i, r) in x.iter_rows().enumerate() {
                let g = resp[(i, c)];
                means.row_mut(c).iter_mut().zip(r).for_each(|(m, v)| *m += g * v);
            }
            means.row_mut(c).iter_mut().for_each(|m| *m /= nk[c]);
            for (i, r) in x.iter_rows().enumerate() {
                let g = resp[(i, c)];
                for j in 0..d {
                    let diff = r[j] - means[(c, j)];
                    vars[(c, j)] += g * diff * diff;
                }
            }
            vars.row_mut(c).iter_mut().for_each(|v| *v = (*v / nk[c]).max(cfg.var_floor));
        }
        let mut weights: Vec<f64> = nk.iter().map(|v| v / n as f64).collect();
        for c in 0..k {
            if nk[c] > 1e-10 * n as f64 {
                continue;
            }
            // split the heaviest component along its widest dimension
            reseeded += 1;
            let big = (0..k).max_by(|&a, &b| weights[a].total_cmp(&weights[b])).unwrap_or(0);
            let widest = (0..d).max_by(|&a, &b| vars[(big, a)].total_cmp(&vars[(big, b)])).unwrap_or(0);
            let offset = libm::sqrt(vars[(big, widest)]) * 0.5;
            let src_mean = means.row(big).to_vec();
            let src_var = vars.row(big).to_vec();
            means.row_mut(c).copy_from_slice(&src_mean);
            means[(c, widest)] += offset;
            means[(big, widest)] -= offset;
            vars.row_mut(c).copy_from_slice(&src_var);
            weights[big] /= 2.0;
            weights[c] = weights[big];
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        model = GmmModel { weights, means, variances: vars };
    }
    Ok(GmmFit { model, loglik_trace: trace, reseeded })
}
