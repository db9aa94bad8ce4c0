//! Balanced, speaker-paired sampling of fixed-length chunks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::ms_to_samples;
use crate::{Error, Key, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub key: Key,
    pub samples: Vec<f64>,
}

/// Labelled utterances sharing one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample_rate: u32,
    pub utterances: Vec<Utterance>,
}

impl Dataset {
    pub fn count(&self, key: Key) -> usize {
        self.utterances.iter().filter(|u| u.key == key).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub utterances_per_batch: usize,
    pub chunk_ms: f64,
    /// Equal bonafide and spoof counts.
    pub balanced: bool,
    /// Pair every spoof chunk with a bonafide chunk of the same speaker.
    pub speaker_paired: bool,
}

impl Default for BatchSpec {
    fn default() -> Self {
        BatchSpec { utterances_per_batch: 256, chunk_ms: 200.0, balanced: true, speaker_paired: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub samples: Vec<f64>,
    pub key: Key,
    /// Index into [`Dataset::utterances`].
    pub source: usize,
}

/// Contiguous slice at a uniformly random offset, zero-padded if the utterance is short.
fn random_chunk(samples: &[f64], len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if samples.len() <= len {
        let mut c = samples.to_vec();
        c.resize(len, 0.0);
        return c;
    }
    let start = rng.gen_range(0..=samples.len() - len);
    samples[start..start + len].to_vec()
}

/// Draws one batch of `(chunk, label)` pairs.
///
/// Balanced batches alternate spoof and bonafide chunks; with speaker pairing
/// each bonafide chunk comes from the speaker of the spoof chunk before it.
pub fn sample_batch(ds: &Dataset, spec: &BatchSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Chunk>> {
    let chunk_len = ms_to_samples(spec.chunk_ms, ds.sample_rate);
    if chunk_len == 0 {
        return Err(Error::param("chunk_ms", "chunk must span at least one sample"));
    }
    if spec.utterances_per_batch == 0 {
        return Err(Error::param("utterances_per_batch", "must be positive"));
    }
    if ds.utterances.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut batch = Vec::with_capacity(spec.utterances_per_batch);
    if !spec.balanced {
        for _ in 0..spec.utterances_per_batch {
            let i = rng.gen_range(0..ds.utterances.len());
            let u = &ds.utterances[i];
            batch.push(Chunk { samples: random_chunk(&u.samples, chunk_len, rng), key: u.key, source: i });
        }
        return Ok(batch);
    }
    if !spec.utterances_per_batch.is_multiple_of(2) {
        return Err(Error::param("utterances_per_batch", "balanced batches need an even size"));
    }
    let spoof: Vec<usize> = (0..ds.utterances.len()).filter(|&i| ds.utterances[i].key == Key::Spoof).collect();
    let bona: Vec<usize> = (0..ds.utterances.len()).filter(|&i| ds.utterances[i].key == Key::Bonafide).collect();
    if spoof.is_empty() || bona.is_empty() {
        return Err(Error::InsufficientData("batches need both bonafide and spoof utterances".into()));
    }
    let mut bona_by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in &bona {
        bona_by_speaker.entry(ds.utterances[i].speaker.as_str()).or_default().push(i);
    }
    if spec.speaker_paired {
        if let Some(&i) = spoof.iter().find(|&&i| !bona_by_speaker.contains_key(ds.utterances[i].speaker.as_str())) {
            return Err(Error::UnpairedSpeaker(ds.utterances[i].speaker.clone()));
        }
    }
    for _ in 0..spec.utterances_per_batch / 2 {
        let si = spoof[rng.gen_range(0..spoof.len())];
        let pool = if spec.speaker_paired { &bona_by_speaker[ds.utterances[si].speaker.as_str()] } else { &bona };
        let bi = pool[rng.gen_range(0..pool.len())];
        for idx in [si, bi] {
            let u = &ds.utterances[idx];
            batch.push(Chunk { samples: random_chunk(&u.samples, chunk_len, rng), key: u.key, source: idx });
        }
    }
    Ok(batch)
}

/// [`sample_batch`] with a fresh generator seeded from `seed`.
pub fn sample_batch_seeded(ds: &Dataset, spec: &BatchSpec, seed: u64) -> Result<Vec<Chunk>> {
    sample_batch(ds, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}
