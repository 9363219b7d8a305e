use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::reaction::dataset::{ProcessedRecord, Split};
use crate::reaction::Vocabulary;
use crate::tensor::{Adam, ParamId, Tape};

use super::{Accuracy, Example, GraphRetro, Mode, PipelineError, TrainConfig};

/// What the training loop fed to each loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrainCounters {
    pub batches: usize,
    pub edit_examples: usize,
    pub synthon_examples: usize,
    /// Synthon-loss examples whose reaction has more than one edit.
    pub synthon_multi_edit_examples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub edit_loss: f64,
    pub synthon_loss: f64,
    /// Mean objective actually backpropagated: the weighted sum in shared
    /// mode, the plain sum of the two losses in separate mode.
    pub total_loss: f64,
    pub accuracy: Accuracy,
    pub lr_edit: f64,
    pub lr_synthon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_accuracy: Accuracy,
    pub counters: TrainCounters,
}

/// Learning-rate decay after `patience` epochs without improvement.
struct Plateau {
    lr: f64,
    best: f64,
    stale: usize,
}

impl Plateau {
    fn new(lr: f64) -> Plateau {
        Plateau {
            lr,
            best: f64::NEG_INFINITY,
            stale: 0,
        }
    }

    fn observe(&mut self, metric: f64, patience: usize, factor: f64) {
        if metric > self.best {
            self.best = metric;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= patience {
                self.lr *= factor;
                self.stale = 0;
                log::info!("validation plateau; learning rate now {}", self.lr);
            }
        }
    }
}

fn examples_of(records: &[ProcessedRecord], split: Split, vocab: &Vocabulary) -> Vec<Example> {
    records
        .iter()
        .filter(|r| r.split == split)
        .filter_map(|r| match Example::from_record(r, vocab) {
            Ok(e) => Some(e),
            Err(e) => {
                log::warn!("record from line {} unusable: {e}", r.line);
                None
            }
        })
        .collect()
}

/// Train on the records' training split, selecting on the dev split (or the
/// training split when there is no dev data).
pub fn train(
    config: TrainConfig,
    records: &[ProcessedRecord],
    vocab: Vocabulary,
) -> Result<(GraphRetro, TrainReport), PipelineError> {
    let train_set = examples_of(records, Split::Train, &vocab);
    let dev_set = examples_of(records, Split::Dev, &vocab);
    train_examples(config, vocab, &train_set, &dev_set)
}

fn batch_seed(seed: u64, epoch: usize, batch: usize, part: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((epoch as u64) << 32)
        ^ ((batch as u64) << 2)
        ^ part
}

/// Numeric failures anywhere in a step are reported against its batch.
fn numeric(e: PipelineError, epoch: usize, batch: usize) -> PipelineError {
    if e.exit_code() == 3 {
        PipelineError::NonFiniteLoss { epoch, batch }
    } else {
        e
    }
}

fn step(
    model: &mut GraphRetro,
    ids: &[ParamId],
    lr: f64,
    loss: impl FnOnce(&GraphRetro, &mut Tape) -> Result<crate::tensor::Var, PipelineError>,
    seed: u64,
    at: (usize, usize),
) -> Result<f64, PipelineError> {
    let fail = |e: PipelineError| numeric(e, at.0, at.1);
    model.store.zero_grad();
    let (grads, value) = {
        let mut tape = Tape::new(&model.store, true, seed);
        let l = loss(model, &mut tape).map_err(fail)?;
        let value = tape.value(l).item();
        if !value.is_finite() {
            return Err(PipelineError::NonFiniteLoss { epoch: at.0, batch: at.1 });
        }
        (tape.backward(l).map_err(|e| fail(e.into()))?, value)
    };
    model.store.accumulate(&grads);
    let clip = model.config.clip_norm;
    model.store.clip_gradients_of(ids, clip).map_err(|e| fail(e.into()))?;
    let adam = Adam { lr, ..Adam::default() };
    model.store.adam_step_of(ids, &adam).map_err(|e| fail(e.into()))?;
    Ok(value)
}

/// Train from prepared examples. Deterministic for a given config.
pub fn train_examples(
    config: TrainConfig,
    vocab: Vocabulary,
    train_set: &[Example],
    dev_set: &[Example],
) -> Result<(GraphRetro, TrainReport), PipelineError> {
    log::info!("config hash {} seed {}", config.hash(), config.seed);
    let mut model = GraphRetro::new(config.clone(), vocab)?;
    let edit_ids = model.edit_params();
    let synthon_ids = model.synthon_params();
    let all_ids: Vec<ParamId> = model.store.ids().collect();
    let shared = config.mode == Mode::Shared;
    let select_on: Vec<&Example> = if dev_set.is_empty() { train_set.iter().collect() } else { dev_set.iter().collect() };

    let mut edit_plateau = Plateau::new(config.lr);
    let mut synthon_plateau = Plateau::new(config.lr);
    let mut best = (f64::NEG_INFINITY, 0, model.store.clone(), Accuracy { edit: 0.0, group: 0.0 });
    let mut counters = TrainCounters::default();
    let mut logs = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(batch_seed(config.seed, epoch, 0, 3)));
        let (mut edit_total, mut synthon_total, mut objective, mut batches) = (0.0, 0.0, 0.0, 0);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let at = (epoch, b + 1);
            let edit_batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).filter(|e| model.edit_trainable(e)).collect();
            let synthon_batch: Vec<&Example> = chunk
                .iter()
                .map(|&i| &train_set[i])
                .filter(|e| e.labels_known() && (!shared || e.is_single_edit()))
                .collect();
            counters.batches += 1;
            counters.edit_examples += edit_batch.len();
            counters.synthon_examples += synthon_batch.len();
            counters.synthon_multi_edit_examples += synthon_batch.iter().filter(|e| !e.is_single_edit()).count();
            batches += 1;
            if shared {
                let (le, ls) = (config.lambda_edit, config.lambda_synthon);
                let mut parts = (0.0, 0.0);
                objective += step(
                    &mut model,
                    &all_ids,
                    edit_plateau.lr,
                    |m, tape| {
                        let mut total = tape.constant(crate::tensor::Tensor::scalar(0.0));
                        if !edit_batch.is_empty() {
                            let l = m.edit_loss(tape, &edit_batch)?;
                            parts.0 = tape.value(l).item();
                            let l = tape.scale(l, le);
                            total = tape.add(total, l)?;
                        }
                        if !synthon_batch.is_empty() {
                            let l = m.synthon_loss(tape, &synthon_batch)?;
                            parts.1 = tape.value(l).item();
                            let l = tape.scale(l, ls);
                            total = tape.add(total, l)?;
                        }
                        Ok(total)
                    },
                    batch_seed(config.seed, epoch, b, 0),
                    at,
                )?;
                edit_total += parts.0;
                synthon_total += parts.1;
            } else {
                if !edit_batch.is_empty() {
                    let l = step(
                        &mut model,
                        &edit_ids,
                        edit_plateau.lr,
                        |m, tape| m.edit_loss(tape, &edit_batch),
                        batch_seed(config.seed, epoch, b, 1),
                        at,
                    )?;
                    edit_total += l;
                    objective += l;
                }
                if !synthon_batch.is_empty() {
                    let l = step(
                        &mut model,
                        &synthon_ids,
                        synthon_plateau.lr,
                        |m, tape| m.synthon_loss(tape, &synthon_batch),
                        batch_seed(config.seed, epoch, b, 2),
                        at,
                    )?;
                    synthon_total += l;
                    objective += l;
                }
            }
        }
        let accuracy = Accuracy::measure(&model, &select_on, config.batch_size)?;
        let combined = (accuracy.edit + accuracy.group) / 2.0;
        if shared {
            edit_plateau.observe(combined, config.patience, config.plateau_factor);
            synthon_plateau.lr = edit_plateau.lr;
        } else {
            edit_plateau.observe(accuracy.edit, config.patience, config.plateau_factor);
            synthon_plateau.observe(accuracy.group, config.patience, config.plateau_factor);
        }
        if combined > best.0 {
            best = (combined, epoch, model.store.clone(), accuracy);
        }
        let log_entry = EpochLog {
            epoch,
            edit_loss: edit_total / batches.max(1) as f64,
            synthon_loss: synthon_total / batches.max(1) as f64,
            total_loss: objective / batches.max(1) as f64,
            accuracy,
            lr_edit: edit_plateau.lr,
            lr_synthon: synthon_plateau.lr,
        };
        log::info!(
            "epoch {epoch}: edit_loss {:.5} synthon_loss {:.5} edit_acc {:.4} group_acc {:.4}",
            log_entry.edit_loss,
            log_entry.synthon_loss,
            accuracy.edit,
            accuracy.group
        );
        logs.push(log_entry);
    }
    let (_, best_epoch, store, best_accuracy) = best;
    if best_epoch > 0 {
        model.store = store;
    }
    Ok((
        model,
        TrainReport {
            epochs: logs,
            best_epoch,
            best_accuracy,
            counters,
        },
    ))
}
