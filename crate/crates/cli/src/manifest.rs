//! Protocol lists and score files.
//!
//! A manifest line is `<utt_id> <speaker_id> <bonafide|spoof> <wav_path>`;
//! relative paths resolve against the manifest's directory. A score line is
//! `<utt_id> <bonafide|spoof> <score>`. Blank lines and `#` comments are skipped
//! in both.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use wavespoof_core::metrics::ScoreEntry;
use wavespoof_core::{Key, ScoreSet};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub speaker: String,
    pub key: Key,
    pub wav: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

impl Manifest {
    pub fn parse(text: &str, base: &Path, origin: &Path) -> CliResult<Self> {
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (n, line) in content_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [utt, spk, key, wav] = fields[..] else {
                return Err(CliError::parse(origin, n, "expected `<utt_id> <speaker_id> <bonafide|spoof> <wav_path>`"));
            };
            let key: Key = key.parse().map_err(|e: wavespoof_core::Error| CliError::parse(origin, n, e))?;
            if !seen.insert(utt.to_string()) {
                return Err(CliError::parse(origin, n, format!("duplicate utterance id `{utt}`")));
            }
            entries.push(ManifestEntry { utt_id: utt.into(), speaker: spk.into(), key, wav: base.join(wav) });
        }
        Ok(Manifest { entries })
    }

    /// Reads a manifest and checks that every referenced file exists.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let m = Manifest::parse(&text, base, path)?;
        if let Some(missing) = m.entries.iter().find(|e| !e.wav.is_file()) {
            return Err(CliError::file(&missing.wav, format!("audio for `{}` not found", missing.utt_id)));
        }
        Ok(m)
    }

    pub fn to_text(&self, base: &Path) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let rel = e.wav.strip_prefix(base).unwrap_or(&e.wav);
            let _ = writeln!(out, "{} {} {} {}", e.utt_id, e.speaker, e.key, rel.display());
        }
        out
    }

    pub fn count(&self, key: Key) -> usize {
        self.entries.iter().filter(|e| e.key == key).count()
    }
}

pub fn format_scores(set: &ScoreSet) -> String {
    let mut out = String::new();
    for e in set.entries() {
        let _ = writeln!(out, "{} {} {:.16e}", e.utt_id, e.key, e.score);
    }
    out
}

pub fn parse_scores(text: &str, origin: &Path) -> CliResult<ScoreSet> {
    let mut entries = Vec::new();
    for (n, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [utt, key, score] = fields[..] else {
            return Err(CliError::parse(origin, n, "expected `<utt_id> <bonafide|spoof> <score>`"));
        };
        let key: Key = key.parse().map_err(|e: wavespoof_core::Error| CliError::parse(origin, n, e))?;
        let score: f64 = score.parse().map_err(|_| CliError::parse(origin, n, format!("bad score `{score}`")))?;
        entries.push(ScoreEntry { utt_id: utt.into(), key, score });
    }
    ScoreSet::new(entries).map_err(|e| CliError::file(origin, e))
}

pub fn write_scores(path: &Path, set: &ScoreSet) -> CliResult<()> {
    fs::write(path, format_scores(set)).map_err(|e| CliError::file(path, e))
}

pub fn read_scores(path: &Path) -> CliResult<ScoreSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_scores(&text, path)
}
