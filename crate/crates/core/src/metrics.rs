//! Detection metrics for countermeasure scores: DET sweep, EER, normalized
//! minimum tandem detection cost, and weighted score fusion.
//!
//! Higher scores mean "more bonafide". A trial is accepted as bonafide iff
//! `score ≥ threshold`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Key {
    Bonafide,
    Spoof,
}

impl Key {
    pub fn as_str(self) -> &'static str {
        match self {
            Key::Bonafide => "bonafide",
            Key::Spoof => "spoof",
        }
    }

    /// Class index used by the neural head: bonafide 0, spoof 1.
    pub fn index(self) -> usize {
        match self {
            Key::Bonafide => 0,
            Key::Spoof => 1,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Key {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonafide" => Ok(Key::Bonafide),
            "spoof" => Ok(Key::Spoof),
            other => Err(Error::param("key", format!("expected `bonafide` or `spoof`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub utt_id: String,
    pub key: Key,
    pub score: f64,
}

/// Per-utterance scores with unique utterance ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.utt_id.as_str()) {
                return Err(Error::UtteranceMismatch(format!("duplicate utterance id `{}`", e.utt_id)));
            }
            if !e.score.is_finite() {
                return Err(Error::NonFinite(format!("score of `{}`", e.utt_id)));
            }
        }
        Ok(ScoreSet { entries })
    }

    /// Builds a set from `(id, key, score)` triples.
    pub fn from_triples<S: Into<String>>(triples: impl IntoIterator<Item = (S, Key, f64)>) -> Result<Self> {
        ScoreSet::new(triples.into_iter().map(|(id, key, score)| ScoreEntry { utt_id: id.into(), key, score }).collect())
    }

    /// Anonymous set with generated ids, handy for metric computations.
    pub fn from_classes(bonafide: &[f64], spoof: &[f64]) -> Result<Self> {
        let b = bonafide.iter().enumerate().map(|(i, &s)| (format!("b{i}"), Key::Bonafide, s));
        let sp = spoof.iter().enumerate().map(|(i, &s)| (format!("s{i}"), Key::Spoof, s));
        ScoreSet::from_triples(b.chain(sp))
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores_of(&self, key: Key) -> Vec<f64> {
        self.entries.iter().filter(|e| e.key == key).map(|e| e.score).collect()
    }
}

/// Error rates at every distinct threshold, plus the ±∞ sentinels.
#[derive(Debug, Clone, PartialEq)]
pub struct DetSweep {
    pub thresholds: Vec<f64>,
    /// Fraction of bonafide trials rejected.
    pub p_miss: Vec<f64>,
    /// Fraction of spoof trials accepted.
    pub p_fa: Vec<f64>,
}

pub fn det_sweep(scores: &ScoreSet) -> Result<DetSweep> {
    let mut bona = scores.scores_of(Key::Bonafide);
    let mut spoof = scores.scores_of(Key::Spoof);
    if bona.is_empty() || spoof.is_empty() {
        return Err(Error::InsufficientData("both bonafide and spoof scores are required".into()));
    }
    bona.sort_by(f64::total_cmp);
    spoof.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = bona.iter().chain(&spoof).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.insert(0, f64::NEG_INFINITY);
    thresholds.push(f64::INFINITY);

    let (nb, ns) = (bona.len() as f64, spoof.len() as f64);
    let (mut ib, mut is) = (0usize, 0usize);
    let mut p_miss = Vec::with_capacity(thresholds.len());
    let mut p_fa = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        // count scores strictly below t
        while ib < bona.len() && bona[ib] < t {
            ib += 1;
        }
        while is < spoof.len() && spoof[is] < t {
            is += 1;
        }
        p_miss.push(ib as f64 / nb);
        p_fa.push((spoof.len() - is) as f64 / ns);
    }
    Ok(DetSweep { thresholds, p_miss, p_fa })
}

impl DetSweep {
    /// Equal error rate by linear interpolation at the first sign change of `p_miss − p_fa`.
    pub fn eer(&self) -> f64 {
        let d = |i: usize| self.p_miss[i] - self.p_fa[i];
        // d starts at −1 (accept all) and ends at +1 (reject all)
        let i = (0..self.thresholds.len()).find(|&i| d(i) >= 0.0).unwrap_or(self.thresholds.len() - 1);
        if d(i) == 0.0 || i == 0 {
            return self.p_miss[i];
        }
        let (d0, d1) = (d(i - 1), d(i));
        let lambda = -d0 / (d1 - d0);
        self.p_miss[i - 1] + lambda * (self.p_miss[i] - self.p_miss[i - 1])
    }

    /// `min_t (β·p_miss + p_fa) / min(β, 1)`.
    pub fn min_tdcf(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::param("beta", "must be positive and finite"));
        }
        let best = self.p_miss.iter().zip(&self.p_fa).map(|(m, f)| beta * m + f).fold(f64::INFINITY, f64::min);
        Ok(best / beta.min(1.0))
    }
}

pub fn eer(scores: &ScoreSet) -> Result<f64> {
    Ok(det_sweep(scores)?.eer())
}

pub fn min_tdcf(scores: &ScoreSet, beta: f64) -> Result<f64> {
    det_sweep(scores)?.min_tdcf(beta)
}

/// Non-negative fusion weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights(Vec<f64>);

impl FusionWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("fusion weights"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::param("weights", "must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if libm::fabs(sum - 1.0) > 1e-12 {
            return Err(Error::param("weights", format!("must sum to 1, got {sum}")));
        }
        Ok(FusionWeights(weights))
    }

    /// 75 % on the first system, the rest split evenly over the other two.
    pub fn fusion_1() -> Self {
        FusionWeights(alloc::vec![0.75, 0.125, 0.125])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Weighted sum of per-utterance scores; entry order follows the first set.
pub fn fuse(score_sets: &[ScoreSet], weights: &FusionWeights) -> Result<ScoreSet> {
    let w = weights.as_slice();
    if score_sets.len() != w.len() {
        return Err(Error::DimensionMismatch { context: "fusion systems", expected: w.len(), got: score_sets.len() });
    }
    let first = &score_sets[0];
    let lookups: Vec<BTreeMap<&str, &ScoreEntry>> =
        score_sets.iter().map(|s| s.entries.iter().map(|e| (e.utt_id.as_str(), e)).collect()).collect();
    for (sys, set) in score_sets.iter().enumerate().skip(1) {
        if set.len() != first.len() {
            let offender = set
                .entries
                .iter()
                .find(|e| !lookups[0].contains_key(e.utt_id.as_str()))
                .or_else(|| first.entries.iter().find(|e| !lookups[sys].contains_key(e.utt_id.as_str())))
                .map(|e| e.utt_id.clone())
                .unwrap_or_default();
            return Err(Error::UtteranceMismatch(format!("system {sys} differs at utterance `{offender}`")));
        }
    }
    let mut fused = Vec::with_capacity(first.len());
    for e in &first.entries {
        let mut score = 0.0;
        for (sys, lookup) in lookups.iter().enumerate() {
            let other = lookup.get(e.utt_id.as_str()).ok_or_else(|| {
                Error::UtteranceMismatch(format!("utterance `{}` missing from system {sys}", e.utt_id))
            })?;
            if other.key != e.key {
                return Err(Error::UtteranceMismatch(format!("utterance `{}` has conflicting keys", e.utt_id)));
            }
            score += w[sys] * other.score;
        }
        fused.push(ScoreEntry { utt_id: e.utt_id.to_string(), key: e.key, score });
    }
    ScoreSet::new(fused)
}
