//! Principal component analysis fitted on training features.

use alloc::vec::Vec;

use crate::matrix::{dot, symmetric_eigen};
use crate::signal::FeatureMatrix;
use crate::{Error, Matrix, Result};

/// Mean and top-`k` principal directions (rows of `projection`).
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub projection: Matrix,
    /// Eigenvalues of the population covariance matching each projection row.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.projection.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects one frame: `(x − mean)·Pᵀ`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { context: "PCA input", expected: self.input_dim(), got: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.projection.iter_rows().map(|p| dot(p, &centered)).collect())
    }
}

/// Population covariance of the rows of `x` around their mean.
pub fn covariance(x: &FeatureMatrix) -> (Vec<f64>, Matrix) {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = alloc::vec![0.0; d];
    for row in x.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Matrix::zeros(d, d);
    for row in x.iter_rows() {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    if k == 0 || k > x.cols() {
        return Err(Error::param("k", "must lie in 1..=input dimension"));
    }
    if x.rows() <= k {
        return Err(Error::InsufficientData("PCA needs more frames than components".into()));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("PCA training data".into()));
    }
    let (mean, cov) = covariance(x);
    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut projection = Matrix::zeros(k, x.cols());
    for r in 0..k {
        projection.row_mut(r).copy_from_slice(vectors.row(r));
    }
    Ok(PcaModel { mean, projection, variances: values[..k].to_vec() })
}

pub fn pca_apply(pca: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = Matrix::zeros(x.rows(), pca.k());
    for (r, row) in x.iter_rows().enumerate() {
        out.row_mut(r).copy_from_slice(&pca.project(row)?);
    }
    Ok(out)
}
