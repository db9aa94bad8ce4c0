//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wavespoof_core::cwt::cwt;
use wavespoof_core::gmm::{gmm_fit, llr_score};
use wavespoof_core::metrics::{det_sweep, fuse, FusionWeights};
use wavespoof_core::mfcc::mfcc;
use wavespoof_core::mwpc::{fit_mwpc_pca, mwpc};
use wavespoof_core::pca::PcaModel;
use wavespoof_core::scattering::scattering;
use wavespoof_core::signal::ms_to_samples;
use wavespoof_core::synth::synth_dataset;
use wavespoof_core::wd::{chunk_utterance, pool, score_utterance, train, wd_forward, Dataset, ScaleVector, Utterance};
use wavespoof_core::{Key, Matrix, ScoreSet, Waveform, LOG_FLOOR};

use crate::archive::{self, Archive};
use crate::config::{BackEnd, FrontEnd, RunConfig};
use crate::error::{CliError, CliResult};
use crate::features::{read_features, write_features};
use crate::manifest::{read_scores, write_scores, Manifest, ManifestEntry};
use crate::wav::{read_wav, write_wav};

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::file(path, e))
}

pub fn feature_path(dir: &Path, utt_id: &str) -> PathBuf {
    dir.join(format!("{utt_id}.feat"))
}

/// Writes a speaker-paired synthetic corpus as WAV files plus `manifest.txt`.
pub fn synth_data(cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    cfg.validate_synth()?;
    let ds = synth_dataset(&cfg.synth, cfg.seed)?;
    let wav_dir = out.join("wav");
    ensure_dir(&wav_dir)?;
    let mut manifest = Manifest::default();
    for u in &ds.utterances {
        let path = wav_dir.join(format!("{}.wav", u.id));
        write_wav(&path, &u.samples, ds.sample_rate)?;
        manifest.entries.push(ManifestEntry { utt_id: u.id.clone(), speaker: u.speaker.clone(), key: u.key, wav: path });
    }
    let list = out.join("manifest.txt");
    write_text(&list, &manifest.to_text(out))?;
    Ok(list)
}

/// Per-utterance extraction state shared by all workers.
enum Extractor {
    Mfcc,
    Mwpc(PcaModel),
    Cwt,
    Scattering,
    Wd(ScaleVector, usize),
}

fn cwt_features(w: &Waveform, cfg: &RunConfig) -> wavespoof_core::Result<Matrix> {
    let c = &cfg.cwt;
    let sg = cwt(w, &c.grid()?, c.rule())?;
    let len = w.ms_to_samples(c.frame_ms);
    let hop = w.ms_to_samples(c.hop_ms);
    if len == 0 || hop == 0 || w.len() < len {
        return Err(wavespoof_core::Error::TooShort { needed: len.max(1), got: w.len() });
    }
    let n_frames = 1 + (w.len() - len) / hop;
    let mut out = Matrix::zeros(n_frames, sg.scales.len());
    for f in 0..n_frames {
        for (j, row) in sg.coeffs.iter_rows().enumerate() {
            let seg = &row[f * hop..f * hop + len];
            out[(f, j)] = (seg.iter().map(|v| v.abs()).sum::<f64>() / len as f64 + LOG_FLOOR).ln();
        }
    }
    Ok(out)
}

fn wd_features(w: &Waveform, scales: &ScaleVector, k: usize, chunk_ms: f64) -> wavespoof_core::Result<Matrix> {
    let chunks = chunk_utterance(&w.samples, w.ms_to_samples(chunk_ms));
    let rows = chunks
        .iter()
        .map(|c| Ok(pool(&wd_forward(c, scales, k)?.z)?.features))
        .collect::<wavespoof_core::Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 2 * scales.len()));
    }
    Matrix::from_rows(&rows)
}

impl Extractor {
    fn run(&self, w: &Waveform, cfg: &RunConfig) -> wavespoof_core::Result<Matrix> {
        match self {
            Extractor::Mfcc => mfcc(w, &cfg.mfcc),
            Extractor::Mwpc(pca) => mwpc(w, pca, &cfg.mwpc),
            Extractor::Cwt => cwt_features(w, cfg),
            Extractor::Scattering => Ok(scattering(w, &cfg.scattering)?.coeffs.transpose()),
            Extractor::Wd(scales, k) => wd_features(w, scales, *k, cfg.wd.chunk_ms),
        }
    }
}

pub struct ExtractOptions<'a> {
    pub manifest: &'a Path,
    pub out: &'a Path,
    /// Fitted PCA for MWPC; fitted on the manifest and saved to `<out>/pca.model` when absent.
    pub pca: Option<&'a Path>,
    /// Trained WD scales; the didactic initialization is used when absent.
    pub wd_model: Option<&'a Path>,
}

/// Extracts one feature file per utterance. Returns the number of failures;
/// every failure is reported on stderr and the remaining files still run.
pub fn extract(cfg: &RunConfig, opts: &ExtractOptions<'_>) -> CliResult<usize> {
    cfg.validate()?;
    let manifest = Manifest::load(opts.manifest)?;
    ensure_dir(opts.out)?;
    if manifest.entries.is_empty() {
        return Ok(0);
    }
    let audio: Vec<CliResult<Waveform>> = manifest.entries.par_iter().map(|e| read_wav(&e.wav)).collect();

    let extractor = match cfg.front_end {
        FrontEnd::Mfcc => Extractor::Mfcc,
        FrontEnd::Cwt => Extractor::Cwt,
        FrontEnd::Scattering => Extractor::Scattering,
        FrontEnd::Mwpc => match opts.pca {
            Some(p) => Extractor::Mwpc(archive::pca_from_archive(&Archive::load(p)?).map_err(|e| CliError::file(p, e))?),
            None => {
                let pca = fit_mwpc_pca(audio.iter().filter_map(|a| a.as_ref().ok()), &cfg.mwpc)?;
                archive::pca_archive(&pca, cfg.to_pairs()).save(&opts.out.join("pca.model"))?;
                Extractor::Mwpc(pca)
            }
        },
        FrontEnd::Wd => match opts.wd_model {
            Some(p) => {
                let (s, k) = archive::wd_from_archive(&Archive::load(p)?).map_err(|e| CliError::file(p, e))?;
                Extractor::Wd(s, k)
            }
            None => Extractor::Wd(cfg.wd.initial_scales()?, cfg.wd.kernel_len),
        },
    };

    let results: Vec<CliResult<()>> = manifest
        .entries
        .par_iter()
        .zip(audio.par_iter())
        .map(|(entry, wav)| {
            let w = wav.as_ref().map_err(|e| CliError::Data(e.to_string()))?;
            let feats = extractor.run(w, cfg).map_err(|e| CliError::Data(format!("{}: {e}", entry.utt_id)))?;
            write_features(&feature_path(opts.out, &entry.utt_id), &feats)
        })
        .collect();
    let mut failures = 0;
    for r in results {
        if let Err(e) = r {
            eprintln!("error: {e}");
            failures += 1;
        }
    }
    Ok(failures)
}

fn load_class_features(manifest: &Manifest, dir: &Path, key: Key) -> CliResult<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for e in manifest.entries.iter().filter(|e| e.key == key) {
        let path = feature_path(dir, &e.utt_id);
        let m = read_features(&path)?;
        if *dim.get_or_insert(m.cols()) != m.cols() {
            return Err(CliError::file(&path, format!("feature dimension {} differs from {}", m.cols(), dim.unwrap_or(0))));
        }
        rows.extend(m.iter_rows().map(<[f64]>::to_vec));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("no {key} frames in the training manifest")));
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// Fits one GMM per class and writes `bonafide.model` and `spoof.model`.
pub fn train_gmm(cfg: &RunConfig, manifest: &Path, features: &Path, out: &Path) -> CliResult<(PathBuf, PathBuf)> {
    let cfg = RunConfig { back_end: BackEnd::Gmm, ..cfg.clone() };
    cfg.validate()?;
    let manifest = Manifest::load(manifest)?;
    for key in [Key::Bonafide, Key::Spoof] {
        if manifest.count(key) == 0 {
            return Err(CliError::Data(format!("training manifest has no {key} utterances")));
        }
    }
    ensure_dir(out)?;
    let mut paths = Vec::new();
    for (i, key) in [Key::Bonafide, Key::Spoof].into_iter().enumerate() {
        let x = load_class_features(&manifest, features, key)?;
        let fit = gmm_fit(&x, &cfg.gmm, cfg.seed.wrapping_add(i as u64))?;
        let path = out.join(format!("{key}.model"));
        archive::gmm_archive(&fit.model, key.as_str(), cfg.to_pairs()).save(&path)?;
        paths.push(path);
    }
    Ok((paths[0].clone(), paths[1].clone()))
}

fn load_dataset(manifest: &Manifest) -> CliResult<Dataset> {
    let audio: Vec<CliResult<Waveform>> = manifest.entries.par_iter().map(|e| read_wav(&e.wav)).collect();
    let mut sample_rate = None;
    let mut utterances = Vec::with_capacity(audio.len());
    for (e, w) in manifest.entries.iter().zip(audio) {
        let w = w?;
        if *sample_rate.get_or_insert(w.sample_rate) != w.sample_rate {
            return Err(CliError::file(&e.wav, "sample rate differs from the rest of the manifest"));
        }
        utterances.push(Utterance { id: e.utt_id.clone(), speaker: e.speaker.clone(), key: e.key, samples: w.samples });
    }
    let sample_rate = sample_rate.ok_or_else(|| CliError::Data("empty manifest".into()))?;
    Ok(Dataset { sample_rate, utterances })
}

pub struct TrainWdOutputs {
    pub scales: PathBuf,
    pub head: PathBuf,
    pub trajectory: PathBuf,
    pub history: PathBuf,
    pub best_epoch: usize,
}

/// Trains WD scales and the classifier head; writes the best checkpoint as
/// `scales.model` + `head.model`, plus `trajectory.csv` and `history.csv`.
pub fn train_wd(cfg: &RunConfig, manifest: &Path, heldout: &Path, out: &Path) -> CliResult<TrainWdOutputs> {
    cfg.validate_wd()?;
    let train_set = load_dataset(&Manifest::load(manifest)?)?;
    let heldout_set = load_dataset(&Manifest::load(heldout)?)?;
    let tc = cfg.wd.train_config(cfg.seed)?;
    let outcome = train(&train_set, &heldout_set, &tc)?;
    ensure_dir(out)?;

    let scales = out.join("scales.model");
    archive::wd_archive(&outcome.scales, tc.kernel_len, cfg.to_pairs()).save(&scales)?;
    let head = out.join("head.model");
    archive::toynet_archive(&outcome.net, cfg.to_pairs()).save(&head)?;

    let m = outcome.scales.len();
    let mut traj = String::from("epoch");
    for i in 0..m {
        let _ = write!(traj, ",s{}", i + 1);
    }
    traj.push('\n');
    for (e, row) in outcome.trajectory.iter().enumerate() {
        let _ = write!(traj, "{e}");
        for v in row {
            let _ = write!(traj, ",{v:.16e}");
        }
        traj.push('\n');
    }
    let trajectory = out.join("trajectory.csv");
    write_text(&trajectory, &traj)?;

    let mut hist = String::from("epoch,train_loss,heldout_loss,heldout_eer,heldout_accuracy\n");
    for h in &outcome.history {
        let _ = writeln!(
            hist,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            h.epoch, h.train_loss, h.heldout_loss, h.heldout_eer, h.heldout_accuracy
        );
    }
    let history = out.join("history.csv");
    write_text(&history, &hist)?;
    Ok(TrainWdOutputs { scales, head, trajectory, history, best_epoch: outcome.best_epoch })
}

pub enum ScoreModels<'a> {
    Gmm { features: &'a Path, bonafide: &'a Path, spoof: &'a Path },
    Wd { scales: &'a Path, head: &'a Path },
}

pub fn score(cfg: &RunConfig, manifest: &Path, models: &ScoreModels<'_>, out: &Path) -> CliResult<ScoreSet> {
    let manifest = Manifest::load(manifest)?;
    let scores: Vec<CliResult<f64>> = match models {
        ScoreModels::Gmm { features, bonafide, spoof } => {
            let load = |p: &Path| archive::gmm_from_archive(&Archive::load(p)?).map_err(|e| CliError::file(p, e));
            let (human, fake) = (load(bonafide)?, load(spoof)?);
            if human.dim() != fake.dim() {
                return Err(CliError::Data(format!("model dimensions differ: {} vs {}", human.dim(), fake.dim())));
            }
            manifest
                .entries
                .par_iter()
                .map(|e| {
                    let x = read_features(&feature_path(features, &e.utt_id))?;
                    llr_score(&x, &human, &fake).map_err(|err| CliError::Data(format!("{}: {err}", e.utt_id)))
                })
                .collect()
        }
        ScoreModels::Wd { scales, head } => {
            let (scales_v, k) = archive::wd_from_archive(&Archive::load(scales)?).map_err(|e| CliError::file(*scales, e))?;
            let net = archive::toynet_from_archive(&Archive::load(head)?).map_err(|e| CliError::file(*head, e))?;
            if net.input_dim() != 2 * scales_v.len() {
                return Err(CliError::Data(format!(
                    "classifier expects {} inputs but the WD layer pools to {}",
                    net.input_dim(),
                    2 * scales_v.len()
                )));
            }
            manifest
                .entries
                .par_iter()
                .map(|e| {
                    let w = read_wav(&e.wav)?;
                    let chunk = ms_to_samples(cfg.wd.chunk_ms, w.sample_rate);
                    score_utterance(&w.samples, &scales_v, &net, k, chunk).map_err(|err| CliError::Data(format!("{}: {err}", e.utt_id)))
                })
                .collect()
        }
    };
    let mut triples = Vec::with_capacity(scores.len());
    for (e, s) in manifest.entries.iter().zip(scores) {
        triples.push((e.utt_id.clone(), e.key, s?));
    }
    let set = ScoreSet::from_triples(triples)?;
    write_scores(out, &set)?;
    Ok(set)
}

pub fn parse_weights(text: &str) -> CliResult<FusionWeights> {
    let w = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad fusion weight `{t}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    FusionWeights::new(w).map_err(|e| CliError::Usage(e.to_string()))
}

fn fused_scores(files: &[PathBuf], weights: Option<&FusionWeights>) -> CliResult<ScoreSet> {
    let sets = files.iter().map(|p| read_scores(p)).collect::<CliResult<Vec<_>>>()?;
    match (sets.len(), weights) {
        (0, _) => Err(CliError::Usage("no score files given".into())),
        (1, None) => Ok(sets.into_iter().next().expect("one set")),
        (_, None) => Err(CliError::Usage("several score files need --weights or --fusion-1".into())),
        (n, Some(w)) if w.as_slice().len() != n => {
            Err(CliError::Usage(format!("{} weights for {n} score files", w.as_slice().len())))
        }
        (_, Some(w)) => fuse(&sets, w).map_err(|e| CliError::Data(e.to_string())),
    }
}

pub fn fuse_files(files: &[PathBuf], weights: &FusionWeights, out: &Path) -> CliResult<ScoreSet> {
    let set = fused_scores(files, Some(weights))?;
    write_scores(out, &set)?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub n_bonafide: usize,
    pub n_spoof: usize,
    pub eer: f64,
    pub min_tdcf: f64,
    pub beta: f64,
    pub weights: Option<Vec<f64>>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "n_bonafide,{}", self.n_bonafide);
        let _ = writeln!(out, "n_spoof,{}", self.n_spoof);
        let _ = writeln!(out, "eer_percent,{:.16e}", 100.0 * self.eer);
        let _ = writeln!(out, "min_tdcf,{:.16e}", self.min_tdcf);
        let _ = writeln!(out, "beta,{}", self.beta);
        if let Some(w) = &self.weights {
            let w: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "fusion_weights,{}", w.join(";"));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!("EER = {:.2} %  min t-DCF = {:.4}  (beta = {})", 100.0 * self.eer, self.min_tdcf, self.beta);
        if let Some(w) = &self.weights {
            let w: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            let _ = write!(s, "  fused with weights ({})", w.join(", "));
        }
        s
    }
}

pub fn eval(files: &[PathBuf], weights: Option<&FusionWeights>, beta: f64, out: Option<&Path>) -> CliResult<Report> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CliError::Usage("beta must be positive".into()));
    }
    let set = fused_scores(files, weights)?;
    let sweep = det_sweep(&set).map_err(|e| CliError::Data(e.to_string()))?;
    let report = Report {
        n_bonafide: set.scores_of(Key::Bonafide).len(),
        n_spoof: set.scores_of(Key::Spoof).len(),
        eer: sweep.eer(),
        min_tdcf: sweep.min_tdcf(beta)?,
        beta,
        weights: if files.len() > 1 { weights.map(|w| w.as_slice().to_vec()) } else { None },
    };
    if let Some(p) = out {
        write_text(p, &report.to_csv())?;
    }
    Ok(report)
}
