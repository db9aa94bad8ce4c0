//! Line-oriented text archives for fitted models.
//!
//! ```text
//! wavespoof-model 1
//! kind gmm
//! config gmm.components = 8
//! param weights 1 8
//! 1.2500000000000000e-1 ...
//! end
//! ```
//!
//! Every `param` line is followed by `rows` lines of `cols` floats printed with
//! 17 significant digits, which parse back to the identical `f64`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use wavespoof_core::gmm::GmmModel;
use wavespoof_core::pca::PcaModel;
use wavespoof_core::wd::{ScaleVector, ToyNet};
use wavespoof_core::Matrix;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;
const HEADER: &str = "wavespoof-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Gmm,
    Pca,
    Wd,
    ToyNet,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Gmm => "gmm",
            Kind::Pca => "pca",
            Kind::Wd => "wd",
            Kind::ToyNet => "toynet",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gmm" => Ok(Kind::Gmm),
            "pca" => Ok(Kind::Pca),
            "wd" => Ok(Kind::Wd),
            "toynet" => Ok(Kind::ToyNet),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub kind: Kind,
    /// Echo of the run configuration that produced the model.
    pub config: Vec<(String, String)>,
    pub params: Vec<(String, Matrix)>,
}

impl Archive {
    pub fn new(kind: Kind, config: Vec<(String, String)>) -> Self {
        Archive { kind, config, params: Vec::new() }
    }

    pub fn push(&mut self, name: &str, m: Matrix) {
        self.params.push((name.to_string(), m));
    }

    pub fn push_vec(&mut self, name: &str, v: &[f64]) {
        self.push(name, Matrix::from_vec(1, v.len(), v.to_vec()).expect("row vector"));
    }

    pub fn param(&self, name: &str) -> Result<&Matrix, String> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, m)| m).ok_or_else(|| format!("missing parameter `{name}`"))
    }

    pub fn vector(&self, name: &str) -> Result<Vec<f64>, String> {
        let m = self.param(name)?;
        if m.rows() != 1 {
            return Err(format!("parameter `{name}` should be a row vector"));
        }
        Ok(m.row(0).to_vec())
    }

    pub fn scalar(&self, name: &str) -> Result<f64, String> {
        match self.vector(name)?.as_slice() {
            [v] => Ok(*v),
            _ => Err(format!("parameter `{name}` should be a scalar")),
        }
    }

    pub fn expect_kind(&self, kind: Kind) -> Result<(), String> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(format!("expected a `{kind}` model, found `{}`", self.kind))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER} {FORMAT_VERSION}\nkind {}\n", self.kind);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config {k} = {v}");
        }
        for (name, m) in &self.params {
            let _ = writeln!(out, "param {name} {} {}", m.rows(), m.cols());
            for row in m.iter_rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    /// Parses archive text; errors carry the 1-based line number.
    pub fn from_text(text: &str) -> Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = || lines.next().ok_or((0, "unexpected end of archive".to_string()));

        let (n, header) = next()?;
        let version = header
            .strip_prefix(HEADER)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or((n, "missing archive header".to_string()))?;
        if version != FORMAT_VERSION {
            return Err((n, format!("unsupported archive version {version}")));
        }
        let (n, kind_line) = next()?;
        let kind = kind_line
            .strip_prefix("kind ")
            .ok_or((n, "expected `kind <name>`".to_string()))?
            .trim()
            .parse()
            .map_err(|e| (n, e))?;
        let mut archive = Archive::new(kind, Vec::new());
        loop {
            let (n, line) = next()?;
            if line == "end" {
                return Ok(archive);
            }
            if let Some(rest) = line.strip_prefix("config ") {
                let (k, v) = rest.split_once(" = ").ok_or((n, "expected `config key = value`".to_string()))?;
                archive.config.push((k.trim().to_string(), v.trim().to_string()));
            } else if let Some(rest) = line.strip_prefix("param ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [name, rows, cols] = parts[..] else {
                    return Err((n, "expected `param name rows cols`".to_string()));
                };
                let rows: usize = rows.parse().map_err(|_| (n, "bad row count".to_string()))?;
                let cols: usize = cols.parse().map_err(|_| (n, "bad column count".to_string()))?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (n, row) = next()?;
                    let before = data.len();
                    for tok in row.split_whitespace() {
                        data.push(tok.parse::<f64>().map_err(|_| (n, format!("bad number `{tok}`")))?);
                    }
                    if data.len() - before != cols {
                        return Err((n, format!("expected {cols} values")));
                    }
                }
                archive.push(name, Matrix::from_vec(rows, cols, data).map_err(|e| (n, e.to_string()))?);
            } else {
                return Err((n, format!("unexpected line `{line}`")));
            }
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_text()).map_err(|e| CliError::file(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        Archive::from_text(&text).map_err(|(line, msg)| CliError::parse(path, line, msg))
    }
}

pub fn gmm_archive(model: &GmmModel, class: &str, config: Vec<(String, String)>) -> Archive {
    let mut a = Archive::new(Kind::Gmm, config);
    a.config.push(("class".into(), class.into()));
    a.push_vec("weights", &model.weights);
    a.push("means", model.means.clone());
    a.push("variances", model.variances.clone());
    a
}

pub fn gmm_from_archive(a: &Archive) -> Result<GmmModel, String> {
    a.expect_kind(Kind::Gmm)?;
    GmmModel::new(a.vector("weights")?, a.param("means")?.clone(), a.param("variances")?.clone()).map_err(|e| e.to_string())
}

pub fn pca_archive(model: &PcaModel, config: Vec<(String, String)>) -> Archive {
    let mut a = Archive::new(Kind::Pca, config);
    a.push_vec("mean", &model.mean);
    a.push("projection", model.projection.clone());
    a.push_vec("variances", &model.variances);
    a
}

pub fn pca_from_archive(a: &Archive) -> Result<PcaModel, String> {
    a.expect_kind(Kind::Pca)?;
    let model = PcaModel {
        mean: a.vector("mean")?,
        projection: a.param("projection")?.clone(),
        variances: a.vector("variances")?,
    };
    if model.projection.cols() != model.mean.len() || model.variances.len() != model.projection.rows() {
        return Err("inconsistent PCA parameter shapes".into());
    }
    Ok(model)
}

pub fn wd_archive(scales: &ScaleVector, kernel_len: usize, config: Vec<(String, String)>) -> Archive {
    let mut a = Archive::new(Kind::Wd, config);
    let (lo, hi) = scales.bounds();
    a.push_vec("scales", scales.as_slice());
    a.push_vec("bounds", &[lo, hi]);
    a.push_vec("kernel_len", &[kernel_len as f64]);
    a
}

pub fn wd_from_archive(a: &Archive) -> Result<(ScaleVector, usize), String> {
    a.expect_kind(Kind::Wd)?;
    let bounds = a.vector("bounds")?;
    let [lo, hi] = bounds[..] else {
        return Err("`bounds` needs two values".into());
    };
    let k = a.scalar("kernel_len")?;
    if k.fract() != 0.0 || k < 3.0 {
        return Err("`kernel_len` must be an integer ≥ 3".into());
    }
    let scales = ScaleVector::new(a.vector("scales")?, lo, hi).map_err(|e| e.to_string())?;
    Ok((scales, k as usize))
}

pub fn toynet_archive(net: &ToyNet, config: Vec<(String, String)>) -> Archive {
    let mut a = Archive::new(Kind::ToyNet, config);
    a.push("w1", net.w1.clone());
    a.push_vec("b1", &net.b1);
    a.push("w2", net.w2.clone());
    a.push_vec("b2", &net.b2);
    a.push_vec("leaky_slope", &[net.leaky_slope]);
    a
}

pub fn toynet_from_archive(a: &Archive) -> Result<ToyNet, String> {
    a.expect_kind(Kind::ToyNet)?;
    let net = ToyNet {
        w1: a.param("w1")?.clone(),
        b1: a.vector("b1")?,
        w2: a.param("w2")?.clone(),
        b2: a.vector("b2")?,
        leaky_slope: a.scalar("leaky_slope")?,
    };
    if net.w1.rows() != net.b1.len() || net.w2.cols() != net.b1.len() || net.w2.rows() != net.b2.len() || net.b2.len() != 2 {
        return Err("inconsistent classifier parameter shapes".into());
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wavespoof_core::wd::didactic_init;

    fn awkward() -> Vec<f64> {
        vec![0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-300, -0.0, 6.02214076e23, f64::EPSILON]
    }

    #[test]
    fn floats_survive_bit_for_bit() {
        let mut a = Archive::new(Kind::Pca, vec![("front_end".into(), "mwpc".into())]);
        a.push("m", Matrix::from_vec(1, 7, awkward()).unwrap());
        let back = Archive::from_text(&a.to_text()).unwrap();
        let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.param("m").unwrap()), bits(a.param("m").unwrap()));
        assert_eq!(back.config, a.config);
    }

    #[test]
    fn every_kind_round_trips() {
        let gmm = GmmModel::new(
            vec![0.25, 0.75],
            Matrix::from_rows(&[vec![0.1, 0.2], vec![-1.0 / 3.0, 7.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.1, 0.2], vec![2.0 / 3.0, 1e-6]]).unwrap(),
        )
        .unwrap();
        let a = Archive::from_text(&gmm_archive(&gmm, "bonafide", vec![]).to_text()).unwrap();
        assert_eq!(gmm_from_archive(&a).unwrap(), gmm);

        let pca = PcaModel {
            mean: vec![0.5, 1.0 / 7.0],
            projection: Matrix::from_rows(&[vec![0.6, 0.8]]).unwrap(),
            variances: vec![3.25],
        };
        let a = Archive::from_text(&pca_archive(&pca, vec![]).to_text()).unwrap();
        assert_eq!(pca_from_archive(&a).unwrap(), pca);

        let scales = didactic_init(5).unwrap();
        let a = Archive::from_text(&wd_archive(&scales, 251, vec![]).to_text()).unwrap();
        assert_eq!(wd_from_archive(&a).unwrap(), (scales, 251));

        let net = ToyNet::new(10, 4, 3).unwrap();
        let a = Archive::from_text(&toynet_archive(&net, vec![]).to_text()).unwrap();
        assert_eq!(toynet_from_archive(&a).unwrap(), net);
    }

    #[test]
    fn wrong_kind_and_bad_lines_are_reported() {
        let net = ToyNet::new(2, 2, 0).unwrap();
        let a = toynet_archive(&net, vec![]);
        assert!(gmm_from_archive(&a).unwrap_err().contains("gmm"));
        let text = a.to_text().replace("param b1 1 2", "param b1 1 3");
        let (line, _) = Archive::from_text(&text).unwrap_err();
        assert!(line > 2);
    }
}
