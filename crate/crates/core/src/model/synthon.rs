use rand::Rng;

use crate::reaction::{END, PAD, START};
use crate::tensor::{ParamId, ParameterStore, Tape, TensorError, Var};

use super::ModelError;

/// Rows of a leaving-group classification batch: which record's product,
/// which synthon component, and which token came before.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompletionInput {
    pub record: Vec<usize>,
    pub component: Vec<usize>,
    pub previous: Vec<usize>,
}

impl CompletionInput {
    /// Teacher-forced rows. `components[r]` lists record `r`'s component rows
    /// in completion order and `labels[r]` the true token of each; an unknown
    /// label is followed by `END` as history.
    pub fn teacher_forced(components: &[Vec<usize>], labels: &[Vec<Option<usize>>]) -> CompletionInput {
        let mut input = CompletionInput::default();
        for (r, (comps, labs)) in components.iter().zip(labels).enumerate() {
            let mut previous = START;
            for (&c, &l) in comps.iter().zip(labs) {
                input.record.push(r);
                input.component.push(c);
                input.previous.push(previous);
                previous = l.unwrap_or(END);
            }
        }
        input
    }

    pub fn len(&self) -> usize {
        self.record.len()
    }

    pub fn is_empty(&self) -> bool {
        self.record.is_empty()
    }
}

/// A partial or complete choice of tokens, one per component so far.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionCandidate {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
}

/// Classifier over the vocabulary conditioned on the product, the current
/// synthon component and the previous token's embedding.
#[derive(Debug, Clone)]
pub struct SynthonHead {
    pub vocab_size: usize,
    pub dropout: f64,
    project: ParamId,
    product: ParamId,
    synthon: ParamId,
    previous: ParamId,
    output: ParamId,
    embedding: ParamId,
}

impl SynthonHead {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        graph_dim: usize,
        embed_dim: usize,
        hidden: usize,
        vocab_size: usize,
        dropout: f64,
        rng: &mut impl Rng,
    ) -> Result<SynthonHead, TensorError> {
        let mut w = |name: &str, r, c| store.add_weight(&format!("{prefix}.{name}"), r, c, rng);
        Ok(SynthonHead {
            vocab_size,
            dropout,
            project: w("project", graph_dim, embed_dim)?,
            product: w("product", embed_dim, hidden)?,
            synthon: w("synthon", embed_dim, hidden)?,
            previous: w("previous", embed_dim, hidden)?,
            output: w("output", hidden, vocab_size)?,
            embedding: w("embedding", vocab_size, embed_dim)?,
        })
    }

    /// `input.len() × vocab_size` log-probabilities with `START` and `PAD`
    /// excluded. `products` and `components` are graph representation rows.
    pub fn log_probs(
        &self,
        tape: &mut Tape,
        products: Var,
        components: Var,
        input: &CompletionInput,
    ) -> Result<Var, ModelError> {
        if let Some(&bad) = input.previous.iter().find(|&&t| t >= self.vocab_size) {
            return Err(ModelError::LabelOutOfRange {
                index: bad,
                size: self.vocab_size,
            });
        }
        let proj = tape.param(self.project);
        let p = tape.gather_rows(products, &input.record)?;
        let p = tape.matmul(p, proj)?;
        let s = tape.gather_rows(components, &input.component)?;
        let s = tape.matmul(s, proj)?;
        let e = tape.embedding(self.embedding, &input.previous)?;
        let (w1, w2, w3) = (tape.param(self.product), tape.param(self.synthon), tape.param(self.previous));
        let a = tape.matmul(p, w1)?;
        let b = tape.matmul(s, w2)?;
        let c = tape.matmul(e, w3)?;
        let h = tape.add(a, b)?;
        let h = tape.add(h, c)?;
        let h = tape.relu(h);
        let h = tape.dropout(h, self.dropout);
        let u = tape.param(self.output);
        let logits = tape.matmul(h, u)?;
        let mut mask = vec![false; input.len() * self.vocab_size];
        for row in 0..input.len() {
            mask[row * self.vocab_size + START] = true;
            mask[row * self.vocab_size + PAD] = true;
        }
        let logits = tape.mask_fill(logits, &mask)?;
        Ok(tape.log_softmax_rows(logits))
    }

    /// Sum over rows of the true token's negative log-probability, divided
    /// by `num_records`. `None` rows (padding or unknown) contribute nothing.
    pub fn loss(
        &self,
        tape: &mut Tape,
        log_probs: Var,
        targets: &[Option<usize>],
        num_records: usize,
    ) -> Result<Var, ModelError> {
        let v = self.vocab_size;
        let mut picks = Vec::new();
        for (row, t) in targets.iter().enumerate() {
            if let Some(t) = *t {
                if t >= v || t == START || t == PAD {
                    return Err(ModelError::LabelOutOfRange { index: t, size: v });
                }
                picks.push(row * v + t);
            }
        }
        let chosen = tape.select(log_probs, &picks)?;
        let total = tape.sum(chosen);
        Ok(tape.scale(total, -1.0 / num_records.max(1) as f64))
    }

    /// Beam over one record's components in completion order: every
    /// candidate is extended by its `k` best tokens and the `k²` results are
    /// cut back to `k` by cumulative log-probability.
    pub fn beam(
        &self,
        store: &ParameterStore,
        product: &crate::tensor::Tensor,
        components: &crate::tensor::Tensor,
        k: usize,
    ) -> Result<Vec<CompletionCandidate>, ModelError> {
        let mut beam = vec![CompletionCandidate {
            tokens: Vec::new(),
            log_prob: 0.0,
        }];
        for c in 0..components.rows() {
            let mut tape = Tape::new(store, false, 0);
            let p = tape.constant(product.clone());
            let s = tape.constant(components.clone());
            let input = CompletionInput {
                record: vec![0; beam.len()],
                component: vec![c; beam.len()],
                previous: beam.iter().map(|b| b.tokens.last().copied().unwrap_or(START)).collect(),
            };
            let lp = self.log_probs(&mut tape, p, s, &input)?;
            let lp = tape.value(lp);
            let mut next = Vec::with_capacity(beam.len() * k);
            for (row, node) in beam.iter().enumerate() {
                for (token, log_prob) in top_tokens(lp.row_slice(row), k) {
                    let mut tokens = node.tokens.clone();
                    tokens.push(token);
                    next.push(CompletionCandidate {
                        tokens,
                        log_prob: node.log_prob + log_prob,
                    });
                }
            }
            next.sort_by(|a, b| b.log_prob.total_cmp(&a.log_prob));
            next.truncate(k);
            beam = next;
        }
        Ok(beam)
    }
}

/// The `k` most likely selectable tokens of one row, ties by index.
pub fn top_tokens(row: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..row.len()).filter(|&t| t != START && t != PAD).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
    idx.into_iter().take(k).map(|t| (t, row[t])).collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::tensor::{Precision, Tensor};

    fn head(store: &mut ParameterStore, vocab: usize) -> SynthonHead {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        SynthonHead::new(store, "lg", 4, 3, 5, vocab, 0.2, &mut rng).unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_over_selectable_tokens() {
        let mut store = ParameterStore::new(Precision::F64);
        let h = head(&mut store, 7);
        for id in store.ids().collect::<Vec<_>>() {
            store.value_mut(id).data_mut().fill(0.0);
        }
        let mut tape = Tape::new(&store, false, 0);
        let p = tape.constant(Tensor::row(vec![1.0; 4]));
        let s = tape.constant(Tensor::row(vec![2.0; 4]));
        let input = CompletionInput::teacher_forced(&[vec![0]], &[vec![Some(3)]]);
        let lp = h.log_probs(&mut tape, p, s, &input).unwrap();
        let row = tape.value(lp).row_slice(0).to_vec();
        assert_eq!(row[START], f64::NEG_INFINITY);
        assert_eq!(row[PAD], f64::NEG_INFINITY);
        let probs: f64 = row.iter().map(|v| v.exp()).sum();
        assert!((probs - 1.0).abs() < 1e-12);
        let loss = h.loss(&mut tape, lp, &[Some(3)], 1).unwrap();
        assert!((tape.value(loss).item() - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn previous_token_changes_distribution() {
        let mut store = ParameterStore::new(Precision::F64);
        let h = head(&mut store, 6);
        let mut tape = Tape::new(&store, false, 0);
        let p = tape.constant(Tensor::row(vec![0.3, -0.2, 0.5, 1.0]));
        let s = tape.constant(Tensor::new(2, 4, vec![0.1, 0.2, 0.3, 0.4, -0.5, 0.2, 0.0, 0.9]).unwrap());
        let input = CompletionInput {
            record: vec![0, 0],
            component: vec![1, 1],
            previous: vec![END, 3],
        };
        let lp = h.log_probs(&mut tape, p, s, &input).unwrap();
        let v = tape.value(lp);
        assert_ne!(v.row_slice(0), v.row_slice(1));
    }

    #[test]
    fn bad_targets_are_rejected() {
        let mut store = ParameterStore::new(Precision::F64);
        let h = head(&mut store, 5);
        let mut tape = Tape::new(&store, false, 0);
        let lp = tape.constant(Tensor::zeros(1, 5));
        assert!(h.loss(&mut tape, lp, &[Some(5)], 1).is_err());
        assert!(h.loss(&mut tape, lp, &[Some(PAD)], 1).is_err());
    }

    #[test]
    fn beam_respects_width_and_order() {
        let mut store = ParameterStore::new(Precision::F64);
        let h = head(&mut store, 6);
        let p = Tensor::row(vec![0.3, -0.2, 0.5, 1.0]);
        let s = Tensor::new(2, 4, vec![0.1, 0.2, 0.3, 0.4, -0.5, 0.2, 0.0, 0.9]).unwrap();
        let out = h.beam(&store, &p, &s, 2).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[0].log_prob >= out[1].log_prob);
        assert!(out.iter().all(|c| c.tokens.len() == 2));
        let greedy = h.beam(&store, &p, &s, 1).unwrap();
        assert_eq!(greedy.len(), 1);
        assert!(!greedy[0].tokens.contains(&PAD) && !greedy[0].tokens.contains(&START));
    }

    #[test]
    fn teacher_forcing_shifts_labels() {
        let input = CompletionInput::teacher_forced(&[vec![1, 0], vec![2]], &[vec![Some(4), Some(1)], vec![None]]);
        assert_eq!(input.previous, vec![START, 4, START]);
        assert_eq!(input.record, vec![0, 0, 1]);
        assert_eq!(input.component, vec![1, 0, 2]);
    }
}
