//! Run configuration read from `key = value` files.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use wavespoof_core::cwt::{scale_grid, KernelRule, ScaleGrid};
use wavespoof_core::gmm::GmmConfig;
use wavespoof_core::mfcc::{mel_filterbank, MfccConfig};
use wavespoof_core::mwpc::MwpcConfig;
use wavespoof_core::scattering::ScatteringConfig;
use wavespoof_core::synth::SynthConfig;
use wavespoof_core::wd::{didactic_init, BatchSpec, ScaleVector, TrainConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontEnd {
    Mfcc,
    Mwpc,
    Cwt,
    Scattering,
    Wd,
}

impl FromStr for FrontEnd {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "mfcc" => FrontEnd::Mfcc,
            "mwpc" => FrontEnd::Mwpc,
            "cwt" => FrontEnd::Cwt,
            "scattering" => FrontEnd::Scattering,
            "wd" => FrontEnd::Wd,
            _ => return Err(format!("unknown front end `{s}`")),
        })
    }
}

impl FrontEnd {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontEnd::Mfcc => "mfcc",
            FrontEnd::Mwpc => "mwpc",
            FrontEnd::Cwt => "cwt",
            FrontEnd::Scattering => "scattering",
            FrontEnd::Wd => "wd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackEnd {
    Gmm,
    WdNet,
}

impl FromStr for BackEnd {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gmm" => Ok(BackEnd::Gmm),
            "wd-net" => Ok(BackEnd::WdNet),
            _ => Err(format!("unknown back end `{s}`")),
        }
    }
}

impl BackEnd {
    pub fn as_str(self) -> &'static str {
        match self {
            BackEnd::Gmm => "gmm",
            BackEnd::WdNet => "wd-net",
        }
    }
}

/// CWT front-end: log mean magnitude per scale over short frames.
#[derive(Debug, Clone, PartialEq)]
pub struct CwtConfig {
    pub s0: f64,
    pub dj: f64,
    pub n: usize,
    pub n_step: f64,
    pub widths: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for CwtConfig {
    fn default() -> Self {
        CwtConfig { s0: 2.0, dj: 0.125, n: 3200, n_step: 0.1, widths: 5.0, frame_ms: 25.0, hop_ms: 10.0 }
    }
}

impl CwtConfig {
    pub fn grid(&self) -> wavespoof_core::Result<ScaleGrid> {
        scale_grid(self.s0, self.dj, self.n, self.n_step)
    }

    pub fn rule(&self) -> KernelRule {
        KernelRule::Support { widths: self.widths }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WdConfig {
    pub n_scales: usize,
    pub kernel_len: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub chunk_ms: f64,
    pub lr_scales: f64,
    pub lr_net: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for WdConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let (s_min, s_max) = t.initial_scales.bounds();
        WdConfig {
            n_scales: t.initial_scales.len(),
            kernel_len: t.kernel_len,
            hidden: t.hidden,
            epochs: t.epochs,
            batches_per_epoch: t.batches_per_epoch,
            batch_size: 32,
            chunk_ms: t.batch.chunk_ms,
            lr_scales: t.lr_scales,
            lr_net: t.lr_net,
            s_min,
            s_max,
        }
    }
}

impl WdConfig {
    pub fn initial_scales(&self) -> wavespoof_core::Result<ScaleVector> {
        ScaleVector::new(didactic_init(self.n_scales)?.as_slice().to_vec(), self.s_min, self.s_max)
    }

    pub fn train_config(&self, seed: u64) -> wavespoof_core::Result<TrainConfig> {
        Ok(TrainConfig {
            initial_scales: self.initial_scales()?,
            kernel_len: self.kernel_len,
            hidden: self.hidden,
            epochs: self.epochs,
            batches_per_epoch: self.batches_per_epoch,
            batch: BatchSpec { utterances_per_batch: self.batch_size, chunk_ms: self.chunk_ms, ..BatchSpec::default() },
            lr_scales: self.lr_scales,
            lr_net: self.lr_net,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub front_end: FrontEnd,
    pub back_end: BackEnd,
    pub seed: u64,
    pub beta: f64,
    pub mfcc: MfccConfig,
    pub mwpc: MwpcConfig,
    pub cwt: CwtConfig,
    pub scattering: ScatteringConfig,
    pub wd: WdConfig,
    pub gmm: GmmConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            front_end: FrontEnd::Mfcc,
            back_end: BackEnd::Gmm,
            seed: 0,
            beta: 1.0,
            mfcc: MfccConfig::default(),
            mwpc: MwpcConfig::default(),
            cwt: CwtConfig::default(),
            scattering: ScatteringConfig::default(),
            wd: WdConfig::default(),
            gmm: GmmConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value `{value}` for `{key}`"))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|(line, msg)| CliError::Config(format!("{}:{line}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or((i + 1, "expected `key = value`".to_string()))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| (i + 1, e))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        macro_rules! p {
            ($field:expr) => {
                $field = parse_value(key, v)?
            };
        }
        match key {
            "front_end" => p!(self.front_end),
            "back_end" => p!(self.back_end),
            "seed" => p!(self.seed),
            "beta" => p!(self.beta),
            "mfcc.alpha" => p!(self.mfcc.alpha),
            "mfcc.frame_ms" => p!(self.mfcc.frame_ms),
            "mfcc.hop_ms" => p!(self.mfcc.hop_ms),
            "mfcc.nfft" => p!(self.mfcc.nfft),
            "mfcc.n_filt" => p!(self.mfcc.n_filt),
            "mfcc.n_ceps" => p!(self.mfcc.n_ceps),
            "mfcc.use_vad" => p!(self.mfcc.use_vad),
            "mfcc.vad_db" => p!(self.mfcc.vad_db),
            "mfcc.use_cmvn" => p!(self.mfcc.use_cmvn),
            "mfcc.dynamic_only" => p!(self.mfcc.dynamic_only),
            "mwpc.alpha" => p!(self.mwpc.alpha),
            "mwpc.frame_ms" => p!(self.mwpc.frame_ms),
            "mwpc.hop_ms" => p!(self.mwpc.hop_ms),
            "mwpc.level" => p!(self.mwpc.level),
            "mwpc.n_filt" => p!(self.mwpc.n_filt),
            "mwpc.n_components" => p!(self.mwpc.n_components),
            "cwt.s0" => p!(self.cwt.s0),
            "cwt.dj" => p!(self.cwt.dj),
            "cwt.n" => p!(self.cwt.n),
            "cwt.n_step" => p!(self.cwt.n_step),
            "cwt.widths" => p!(self.cwt.widths),
            "cwt.frame_ms" => p!(self.cwt.frame_ms),
            "cwt.hop_ms" => p!(self.cwt.hop_ms),
            "scattering.n1" => p!(self.scattering.n1),
            "scattering.n2" => p!(self.scattering.n2),
            "scattering.q1" => p!(self.scattering.q1),
            "scattering.q2" => p!(self.scattering.q2),
            "scattering.avg_len" => p!(self.scattering.avg_len),
            "scattering.eps" => p!(self.scattering.eps),
            "scattering.xi_max" => p!(self.scattering.xi_max),
            "wd.n_scales" => p!(self.wd.n_scales),
            "wd.kernel_len" => p!(self.wd.kernel_len),
            "wd.hidden" => p!(self.wd.hidden),
            "wd.epochs" => p!(self.wd.epochs),
            "wd.batches_per_epoch" => p!(self.wd.batches_per_epoch),
            "wd.batch_size" => p!(self.wd.batch_size),
            "wd.chunk_ms" => p!(self.wd.chunk_ms),
            "wd.lr_scales" => p!(self.wd.lr_scales),
            "wd.lr_net" => p!(self.wd.lr_net),
            "wd.s_min" => p!(self.wd.s_min),
            "wd.s_max" => p!(self.wd.s_max),
            "gmm.components" => p!(self.gmm.components),
            "gmm.max_iter" => p!(self.gmm.max_iter),
            "gmm.tol" => p!(self.gmm.tol),
            "gmm.kmeans_iter" => p!(self.gmm.kmeans_iter),
            "gmm.var_floor" => p!(self.gmm.var_floor),
            "synth.sample_rate" => p!(self.synth.sample_rate),
            "synth.n_speakers" => p!(self.synth.n_speakers),
            "synth.utts_per_class" => p!(self.synth.utts_per_class),
            "synth.duration_s" => p!(self.synth.duration_s),
            "synth.bonafide_lo" => p!(self.synth.bonafide_band.0),
            "synth.bonafide_hi" => p!(self.synth.bonafide_band.1),
            "synth.spoof_lo" => p!(self.synth.spoof_band.0),
            "synth.spoof_hi" => p!(self.synth.spoof_band.1),
            "synth.n_tones" => p!(self.synth.n_tones),
            "synth.n_noise" => p!(self.synth.n_noise),
            "synth.noise_floor" => p!(self.synth.noise_floor),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let m = &self.mfcc;
        let w = &self.mwpc;
        let c = &self.cwt;
        let s = &self.scattering;
        let d = &self.wd;
        let g = &self.gmm;
        let y = &self.synth;
        let pairs: Vec<(&str, String)> = vec![
            ("front_end", self.front_end.as_str().into()),
            ("back_end", self.back_end.as_str().into()),
            ("seed", self.seed.to_string()),
            ("beta", self.beta.to_string()),
            ("mfcc.alpha", m.alpha.to_string()),
            ("mfcc.frame_ms", m.frame_ms.to_string()),
            ("mfcc.hop_ms", m.hop_ms.to_string()),
            ("mfcc.nfft", m.nfft.to_string()),
            ("mfcc.n_filt", m.n_filt.to_string()),
            ("mfcc.n_ceps", m.n_ceps.to_string()),
            ("mfcc.use_vad", m.use_vad.to_string()),
            ("mfcc.vad_db", m.vad_db.to_string()),
            ("mfcc.use_cmvn", m.use_cmvn.to_string()),
            ("mfcc.dynamic_only", m.dynamic_only.to_string()),
            ("mwpc.alpha", w.alpha.to_string()),
            ("mwpc.frame_ms", w.frame_ms.to_string()),
            ("mwpc.hop_ms", w.hop_ms.to_string()),
            ("mwpc.level", w.level.to_string()),
            ("mwpc.n_filt", w.n_filt.to_string()),
            ("mwpc.n_components", w.n_components.to_string()),
            ("cwt.s0", c.s0.to_string()),
            ("cwt.dj", c.dj.to_string()),
            ("cwt.n", c.n.to_string()),
            ("cwt.n_step", c.n_step.to_string()),
            ("cwt.widths", c.widths.to_string()),
            ("cwt.frame_ms", c.frame_ms.to_string()),
            ("cwt.hop_ms", c.hop_ms.to_string()),
            ("scattering.n1", s.n1.to_string()),
            ("scattering.n2", s.n2.to_string()),
            ("scattering.q1", s.q1.to_string()),
            ("scattering.q2", s.q2.to_string()),
            ("scattering.avg_len", s.avg_len.to_string()),
            ("scattering.eps", s.eps.to_string()),
            ("scattering.xi_max", s.xi_max.to_string()),
            ("wd.n_scales", d.n_scales.to_string()),
            ("wd.kernel_len", d.kernel_len.to_string()),
            ("wd.hidden", d.hidden.to_string()),
            ("wd.epochs", d.epochs.to_string()),
            ("wd.batches_per_epoch", d.batches_per_epoch.to_string()),
            ("wd.batch_size", d.batch_size.to_string()),
            ("wd.chunk_ms", d.chunk_ms.to_string()),
            ("wd.lr_scales", d.lr_scales.to_string()),
            ("wd.lr_net", d.lr_net.to_string()),
            ("wd.s_min", d.s_min.to_string()),
            ("wd.s_max", d.s_max.to_string()),
            ("gmm.components", g.components.to_string()),
            ("gmm.max_iter", g.max_iter.to_string()),
            ("gmm.tol", g.tol.to_string()),
            ("gmm.kmeans_iter", g.kmeans_iter.to_string()),
            ("gmm.var_floor", g.var_floor.to_string()),
            ("synth.sample_rate", y.sample_rate.to_string()),
            ("synth.n_speakers", y.n_speakers.to_string()),
            ("synth.utts_per_class", y.utts_per_class.to_string()),
            ("synth.duration_s", y.duration_s.to_string()),
            ("synth.bonafide_lo", y.bonafide_band.0.to_string()),
            ("synth.bonafide_hi", y.bonafide_band.1.to_string()),
            ("synth.spoof_lo", y.spoof_band.0.to_string()),
            ("synth.spoof_hi", y.spoof_band.1.to_string()),
            ("synth.n_tones", y.n_tones.to_string()),
            ("synth.n_noise", y.n_noise.to_string()),
            ("synth.noise_floor", y.noise_floor.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Checks the parameters of the selected front end and back end against
    /// the preconditions of the modules they feed.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive".into());
        }
        match self.front_end {
            FrontEnd::Mfcc => {
                let m = &self.mfcc;
                if !(0.0..1.0).contains(&m.alpha) || !(m.frame_ms > 0.0 && m.hop_ms > 0.0) {
                    return bad("mfcc: need 0 ≤ alpha < 1 and positive frame/hop".into());
                }
                if m.n_ceps == 0 || m.n_ceps > m.n_filt {
                    return bad("mfcc: need 1 ≤ n_ceps ≤ n_filt".into());
                }
                if m.frame_ms / 1000.0 * self.synth.sample_rate as f64 > m.nfft as f64 {
                    return bad("mfcc: frame longer than nfft".into());
                }
                mel_filterbank(m.n_filt, m.nfft, self.synth.sample_rate).map_err(|e| CliError::Config(format!("mfcc: {e}")))?;
            }
            FrontEnd::Mwpc => {
                let w = &self.mwpc;
                if !(0.0..1.0).contains(&w.alpha) || !(w.frame_ms > 0.0 && w.hop_ms > 0.0) {
                    return bad("mwpc: need 0 ≤ alpha < 1 and positive frame/hop".into());
                }
                if w.level == 0 || w.level > 8 || w.n_filt == 0 || w.n_components == 0 || w.n_components > w.n_filt {
                    return bad("mwpc: need 1 ≤ level ≤ 8 and 1 ≤ n_components ≤ n_filt".into());
                }
            }
            FrontEnd::Cwt => {
                let c = &self.cwt;
                self.cwt.grid().map_err(|e| CliError::Config(format!("cwt: {e}")))?;
                if !(c.widths > 0.0 && c.frame_ms > 0.0 && c.hop_ms > 0.0) {
                    return bad("cwt: widths, frame_ms and hop_ms must be positive".into());
                }
            }
            FrontEnd::Scattering => {
                let s = &self.scattering;
                if s.n1 == 0 || s.q1 == 0 || s.q2 == 0 || s.avg_len == 0 || !(s.eps > 0.0) || !(s.xi_max > 0.0 && s.xi_max < 0.5) {
                    return bad("scattering: n1, q1, q2, avg_len, eps must be positive and 0 < xi_max < 0.5".into());
                }
            }
            FrontEnd::Wd => self.validate_wd()?,
        }
        match self.back_end {
            BackEnd::Gmm => {
                let g = &self.gmm;
                if g.components == 0 || g.max_iter == 0 || !(g.var_floor > 0.0) || !(g.tol >= 0.0) {
                    return bad("gmm: components and max_iter must be positive, var_floor > 0, tol ≥ 0".into());
                }
            }
            BackEnd::WdNet => self.validate_wd()?,
        }
        Ok(())
    }

    pub fn validate_wd(&self) -> CliResult<()> {
        let d = &self.wd;
        self.wd.initial_scales().map_err(|e| CliError::Config(format!("wd: {e}")))?;
        if d.kernel_len.is_multiple_of(2) || d.kernel_len < 3 {
            return Err(CliError::Config("wd: kernel_len must be odd and at least 3".into()));
        }
        if d.hidden == 0 || d.epochs == 0 || d.batches_per_epoch == 0 || d.batch_size < 2 || !d.batch_size.is_multiple_of(2) {
            return Err(CliError::Config("wd: hidden, epochs, batches_per_epoch must be positive; batch_size even and ≥ 2".into()));
        }
        if !(d.chunk_ms > 0.0 && d.lr_scales >= 0.0 && d.lr_net >= 0.0) {
            return Err(CliError::Config("wd: chunk_ms must be positive and learning rates non-negative".into()));
        }
        Ok(())
    }

    pub fn validate_synth(&self) -> CliResult<()> {
        self.synth.validate().map_err(|e| CliError::Config(format!("synth: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = RunConfig::parse("# demo\nfront_end = mwpc\nseed = 7  # inline\n\nmwpc.n_components=10\n").unwrap();
        assert_eq!(cfg.front_end, FrontEnd::Mwpc);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.mwpc.n_components, 10);
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_line() {
        assert_eq!(RunConfig::parse("seed = 1\nbogus = 2\n").unwrap_err().0, 2);
        assert_eq!(RunConfig::parse("seed = x\n").unwrap_err().0, 1);
        assert_eq!(RunConfig::parse("just words\n").unwrap_err().0, 1);
    }

    #[test]
    fn echo_parses_back_to_the_same_config() {
        let mut cfg = RunConfig::default();
        cfg.set("wd.lr_scales", "0.123456789").unwrap();
        cfg.set("front_end", "scattering").unwrap();
        let text: String = cfg.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.mfcc.alpha = 1.5;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let mut cfg = RunConfig { back_end: BackEnd::WdNet, ..RunConfig::default() };
        cfg.wd.kernel_len = 250;
        assert!(cfg.validate().is_err());
    }
}
