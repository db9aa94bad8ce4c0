//! Joint gradient-descent training of the WD scales and the classifier head.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::batch::{sample_batch, BatchSpec, Dataset};
use super::layer::{didactic_init, update_scales, wd_backward, wd_forward_bank, ScaleVector, WdKernelBank, DEFAULT_KERNEL_LEN};
use super::net::{pool, pool_backward, NetGrads, ToyNet};
use crate::metrics::{eer, Key, ScoreSet};
use crate::signal::ms_to_samples;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub initial_scales: ScaleVector,
    pub kernel_len: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch: BatchSpec,
    /// Step size for the scales.
    pub lr_scales: f64,
    /// Step size for the dense head.
    pub lr_net: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            initial_scales: didactic_init(8).expect("eight didactic scales"),
            kernel_len: DEFAULT_KERNEL_LEN,
            hidden: 16,
            epochs: 50,
            batches_per_epoch: 1,
            batch: BatchSpec::default(),
            lr_scales: 0.5,
            lr_net: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub heldout_loss: f64,
    pub heldout_eer: f64,
    pub heldout_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Checkpoint with the lowest held-out EER (ties: lower held-out loss, then earlier epoch).
    pub scales: ScaleVector,
    pub net: ToyNet,
    pub best_epoch: usize,
    /// Row 0 holds the initial scales, row `e` the scales after epoch `e`.
    pub trajectory: Vec<Vec<f64>>,
    pub history: Vec<EpochRecord>,
    pub final_scales: ScaleVector,
    pub final_net: ToyNet,
}

/// Consecutive non-overlapping chunks; a short tail is dropped unless it is the only chunk.
pub fn chunk_utterance(samples: &[f64], chunk_len: usize) -> Vec<Vec<f64>> {
    if chunk_len == 0 || samples.is_empty() {
        return Vec::new();
    }
    if samples.len() < chunk_len {
        let mut c = samples.to_vec();
        c.resize(chunk_len, 0.0);
        return vec![c];
    }
    samples.chunks_exact(chunk_len).map(<[f64]>::to_vec).collect()
}

struct ChunkEval {
    log_ratio: f64,
    nll_bona: f64,
    nll_spoof: f64,
}

fn eval_chunk(chunk: &[f64], bank: &WdKernelBank, net: &ToyNet) -> Result<ChunkEval> {
    let z = wd_forward_bank(chunk, bank)?;
    let pooled = pool(&z.z)?;
    let fw = net.forward(&pooled.features)?;
    Ok(ChunkEval { log_ratio: fw.log_ratio(), nll_bona: fw.nll(0), nll_spoof: fw.nll(1) })
}

/// Utterance score: mean over chunks of `log p(bonafide) − log p(spoof)`.
pub fn score_utterance(samples: &[f64], scales: &ScaleVector, net: &ToyNet, kernel_len: usize, chunk_len: usize) -> Result<f64> {
    let bank = WdKernelBank::new(scales, kernel_len)?;
    let chunks = chunk_utterance(samples, chunk_len);
    if chunks.is_empty() {
        return Err(Error::Empty("utterance to score"));
    }
    let mut total = 0.0;
    for c in &chunks {
        total += eval_chunk(c, &bank, net)?.log_ratio;
    }
    Ok(total / chunks.len() as f64)
}

/// Loss and gradients of one batch, averaged over its chunks.
fn batch_gradients(
    batch: &[super::batch::Chunk],
    scales: &ScaleVector,
    bank: &WdKernelBank,
    net: &ToyNet,
) -> Result<(f64, Vec<f64>, NetGrads)> {
    let inv = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut scale_grads = vec![0.0; scales.len()];
    let mut net_grads = NetGrads::zeros_like(net);
    for chunk in batch {
        let label = chunk.key.index();
        let z = wd_forward_bank(&chunk.samples, bank)?;
        let pooled = pool(&z.z)?;
        let fw = net.forward(&pooled.features)?;
        loss += fw.nll(label) * inv;
        let (g, d_features) = net.backward(&fw, label)?;
        net_grads.accumulate(&g, inv);
        let dz = pool_backward(&d_features, &pooled)?;
        let ds = wd_backward(&chunk.samples, scales, &dz, bank.kernel_len())?;
        scale_grads.iter_mut().zip(&ds).for_each(|(a, b)| *a += b * inv);
    }
    Ok((loss, scale_grads, net_grads))
}

fn evaluate(heldout: &Dataset, scales: &ScaleVector, net: &ToyNet, kernel_len: usize, chunk_len: usize) -> Result<(f64, f64, f64)> {
    let bank = WdKernelBank::new(scales, kernel_len)?;
    let mut triples = Vec::with_capacity(heldout.utterances.len());
    let mut loss = 0.0;
    let mut n_chunks = 0usize;
    let mut correct = 0usize;
    for u in &heldout.utterances {
        let chunks = chunk_utterance(&u.samples, chunk_len);
        let mut ratio = 0.0;
        for c in &chunks {
            let e = eval_chunk(c, &bank, net)?;
            ratio += e.log_ratio;
            loss += if u.key == Key::Bonafide { e.nll_bona } else { e.nll_spoof };
        }
        n_chunks += chunks.len();
        let score = ratio / chunks.len().max(1) as f64;
        let predicted = if score >= 0.0 { Key::Bonafide } else { Key::Spoof };
        if predicted == u.key {
            correct += 1;
        }
        triples.push((u.id.clone(), u.key, score));
    }
    let set = ScoreSet::from_triples(triples)?;
    Ok((loss / n_chunks.max(1) as f64, eer(&set)?, correct as f64 / heldout.utterances.len() as f64))
}

/// Runs `epochs × batches_per_epoch` gradient steps and keeps the best held-out checkpoint.
pub fn train(train_set: &Dataset, heldout: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if heldout.count(Key::Bonafide) == 0 || heldout.count(Key::Spoof) == 0 {
        return Err(Error::InsufficientData("held-out split needs both classes".into()));
    }
    if heldout.sample_rate != train_set.sample_rate {
        return Err(Error::param("sample_rate", "train and held-out sets differ"));
    }
    if cfg.epochs == 0 || cfg.batches_per_epoch == 0 {
        return Err(Error::param("epochs", "need at least one epoch and one batch per epoch"));
    }
    if !(cfg.lr_scales >= 0.0) || !(cfg.lr_net >= 0.0) {
        return Err(Error::param("learning rate", "must be non-negative"));
    }
    let chunk_len = ms_to_samples(cfg.batch.chunk_ms, train_set.sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut scales = cfg.initial_scales.clone();
    let mut net = ToyNet::new(2 * scales.len(), cfg.hidden, cfg.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let mut trajectory = vec![scales.as_slice().to_vec()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, f64, usize, ScaleVector, ToyNet)> = None;

    for epoch in 1..=cfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.batches_per_epoch {
            let batch = sample_batch(train_set, &cfg.batch, &mut rng)?;
            let bank = WdKernelBank::new(&scales, cfg.kernel_len)?;
            let (loss, scale_grads, net_grads) = batch_gradients(&batch, &scales, &bank, &net)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_loss += loss / cfg.batches_per_epoch as f64;
            scales = update_scales(&scales, &scale_grads, cfg.lr_scales).map_err(|_| Error::Diverged { epoch, loss })?;
            net.apply(&net_grads, cfg.lr_net);
            if !net.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
        }
        trajectory.push(scales.as_slice().to_vec());
        let (heldout_loss, heldout_eer, heldout_accuracy) = evaluate(heldout, &scales, &net, cfg.kernel_len, chunk_len)?;
        if !heldout_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: heldout_loss });
        }
        history.push(EpochRecord { epoch, train_loss: epoch_loss, heldout_loss, heldout_eer, heldout_accuracy });
        let better = match &best {
            None => true,
            Some((e, l, ..)) => heldout_eer < *e || (heldout_eer == *e && heldout_loss < *l),
        };
        if better {
            best = Some((heldout_eer, heldout_loss, epoch, scales.clone(), net.clone()));
        }
    }
    let (_, _, best_epoch, best_scales, best_net) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        scales: best_scales,
        net: best_net,
        best_epoch,
        trajectory,
        history,
        final_scales: scales,
        final_net: net,
    })
}
