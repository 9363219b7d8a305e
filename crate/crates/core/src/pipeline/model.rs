use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    edit_loss, BatchedGraph, CandidateSpace, CompletionInput, EditHead, Encoder, GlobalConv, MultiEditHead,
    SynthonHead,
};
use crate::molgraph::{canonical_smiles, Molecule};
use crate::reaction::dataset::{ordered_synthons, ProcessedRecord};
use crate::reaction::{EditSet, ReactionError, Vocabulary, ATOM_FEATURES, ATOM_FEATURES_WITH_CLASS};
use crate::tensor::{ParamId, ParameterStore, Tape, Tensor, Var};

use super::{Mode, PipelineError, TrainConfig};

/// A record prepared for the models: synthons in completion order and
/// vocabulary labels per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub product: Molecule,
    pub class: Option<u8>,
    pub edits: EditSet,
    pub synthons: Molecule,
    /// Synthon component indices in completion order.
    pub order: Vec<usize>,
    /// Token per component in completion order; `None` when unknown.
    pub labels: Vec<Option<usize>>,
    /// Canonical reactant SMILES without maps.
    pub reactants: String,
}

impl Example {
    pub fn from_record(record: &ProcessedRecord, vocab: &Vocabulary) -> Result<Example, ReactionError> {
        let (synthons, order) = ordered_synthons(&record.product, &record.edits)?;
        Ok(Example {
            product: record.product.clone(),
            class: record.reaction_class,
            edits: record.edits.clone(),
            synthons,
            order,
            labels: record.group_labels(vocab),
            reactants: canonical_smiles(&record.reactants, false),
        })
    }

    pub fn is_single_edit(&self) -> bool {
        self.edits.len() == 1
    }

    pub fn labels_known(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone)]
enum EditModel {
    Single(EditHead),
    Multi(MultiEditHead),
}

/// Edit predictor and synthon completer with their parameters.
#[derive(Debug, Clone)]
pub struct GraphRetro {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub store: ParameterStore,
    edit_encoder: Encoder,
    conv: GlobalConv,
    edit_model: EditModel,
    lg_encoder: Encoder,
    lg_head: SynthonHead,
}

pub(crate) const EDIT_PREFIX: &str = "edit.";
pub(crate) const LG_PREFIX: &str = "lg.";
const SHARED_ENCODER: &str = "shared.enc";

impl GraphRetro {
    /// Fresh parameters drawn from the config seed.
    pub fn new(config: TrainConfig, vocab: Vocabulary) -> Result<GraphRetro, PipelineError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParameterStore::new(config.precision);
        let atom_dim = if config.use_class { ATOM_FEATURES_WITH_CLASS } else { ATOM_FEATURES };
        let c = &config;
        let edit_encoder_name = match c.mode {
            Mode::Separate => "edit.enc",
            Mode::Shared => SHARED_ENCODER,
        };
        let edit_encoder = Encoder::new(&mut store, edit_encoder_name, atom_dim, c.hidden, c.mpn_steps, &mut rng)?;
        let conv = GlobalConv::new(&mut store, "edit.conv", c.hidden, &c.conv_filters, c.kernel, &mut rng)?;
        let conv_out = c.conv_filters.last().copied().unwrap_or(c.hidden);
        let edit_model = if c.multi_edit {
            EditModel::Multi(MultiEditHead::new(&mut store, "edit.multi", conv_out, c.edit_hidden, &mut rng)?)
        } else {
            EditModel::Single(EditHead::new(&mut store, "edit.head", conv_out, c.edit_hidden, &mut rng)?)
        };
        let lg_encoder = match c.mode {
            Mode::Separate => Encoder::new(&mut store, "lg.enc", atom_dim, c.hidden, c.mpn_steps, &mut rng)?,
            Mode::Shared => edit_encoder.clone(),
        };
        let lg_head = SynthonHead::new(
            &mut store,
            "lg.head",
            c.hidden,
            c.embed_dim,
            c.lg_hidden,
            vocab.len(),
            c.dropout,
            &mut rng,
        )?;
        Ok(GraphRetro {
            config,
            vocab,
            store,
            edit_encoder,
            conv,
            edit_model,
            lg_encoder,
            lg_head,
        })
    }

    /// Parameters of the edit model, including a shared encoder.
    pub fn edit_params(&self) -> Vec<ParamId> {
        self.store
            .ids()
            .filter(|&id| {
                let n = self.store.name(id);
                n.starts_with(EDIT_PREFIX) || n.starts_with(SHARED_ENCODER)
            })
            .collect()
    }

    /// Parameters of the synthon completer, including a shared encoder.
    pub fn synthon_params(&self) -> Vec<ParamId> {
        self.store
            .ids()
            .filter(|&id| {
                let n = self.store.name(id);
                n.starts_with(LG_PREFIX) || n.starts_with(SHARED_ENCODER)
            })
            .collect()
    }

    pub fn is_multi_edit(&self) -> bool {
        matches!(self.edit_model, EditModel::Multi(_))
    }

    fn batch(&self, graphs: &[(&Molecule, Option<u8>)]) -> BatchedGraph {
        BatchedGraph::new(graphs, self.config.use_class)
    }

    /// Examples the edit loss can use: all of them for the multi-edit model,
    /// single-edit ones otherwise.
    pub fn edit_trainable(&self, ex: &Example) -> bool {
        self.is_multi_edit() || ex.is_single_edit()
    }

    /// Mean edit loss over `examples`, which must all be
    /// [`edit_trainable`](Self::edit_trainable).
    pub fn edit_loss(&self, tape: &mut Tape, examples: &[&Example]) -> Result<Var, PipelineError> {
        let graphs: Vec<(&Molecule, Option<u8>)> = examples.iter().map(|e| (&e.product, e.class)).collect();
        let truth: Vec<&EditSet> = examples.iter().map(|e| &e.edits).collect();
        match &self.edit_model {
            EditModel::Single(head) => {
                let batch = self.batch(&graphs);
                let mols: Vec<&Molecule> = examples.iter().map(|e| &e.product).collect();
                let space = CandidateSpace::new(&mols, false)?;
                let enc = self.edit_encoder.encode(tape, &batch)?;
                let reps = self.conv.apply(tape, &batch, &enc)?;
                let scores = head.score(tape, &reps, space)?;
                Ok(edit_loss(tape, &scores, &mols, &truth)?)
            }
            EditModel::Multi(head) => Ok(head.sequence_loss(
                tape,
                &self.edit_encoder,
                &self.conv,
                &graphs,
                &truth,
                self.config.use_class,
            )?),
        }
    }

    /// Product and synthon-component representations for the completer.
    /// Component rows of example `i` start at the returned offset `i`.
    fn completion_reps(&self, tape: &mut Tape, examples: &[(&Molecule, &Molecule, Option<u8>)]) -> Result<(Var, Var, Vec<usize>), PipelineError> {
        let products: Vec<(&Molecule, Option<u8>)> = examples.iter().map(|e| (e.0, e.2)).collect();
        let synthons: Vec<(&Molecule, Option<u8>)> = examples.iter().map(|e| (e.1, e.2)).collect();
        let pb = self.batch(&products);
        let sb = self.batch(&synthons);
        let p = self.lg_encoder.encode(tape, &pb)?.graphs;
        let s = self.lg_encoder.encode(tape, &sb)?.components;
        Ok((p, s, sb.component_offsets.clone()))
    }

    /// Teacher-forced synthon loss, summed over components and averaged
    /// over examples.
    pub fn synthon_loss(&self, tape: &mut Tape, examples: &[&Example]) -> Result<Var, PipelineError> {
        let parts: Vec<(&Molecule, &Molecule, Option<u8>)> =
            examples.iter().map(|e| (&e.product, &e.synthons, e.class)).collect();
        let (p, s, offsets) = self.completion_reps(tape, &parts)?;
        let components: Vec<Vec<usize>> = examples
            .iter()
            .enumerate()
            .map(|(i, e)| e.order.iter().map(|&c| offsets[i] + c).collect())
            .collect();
        let labels: Vec<Vec<Option<usize>>> = examples.iter().map(|e| e.labels.clone()).collect();
        let input = CompletionInput::teacher_forced(&components, &labels);
        let lp = self.lg_head.log_probs(tape, p, s, &input)?;
        let targets: Vec<Option<usize>> = labels.into_iter().flatten().collect();
        Ok(self.lg_head.loss(tape, lp, &targets, examples.len())?)
    }

    /// The `k` most likely edit sets with their log-likelihoods.
    pub fn top_edits(&self, product: &Molecule, class: Option<u8>, k: usize) -> Result<Vec<(EditSet, f64)>, PipelineError> {
        match &self.edit_model {
            EditModel::Single(head) => {
                let mut tape = Tape::new(&self.store, false, 0);
                let batch = self.batch(&[(product, class)]);
                let space = CandidateSpace::new(&[product], false)?;
                let enc = self.edit_encoder.encode(&mut tape, &batch)?;
                let reps = self.conv.apply(&mut tape, &batch, &enc)?;
                let scores = head.score(&mut tape, &reps, space)?;
                Ok(scores
                    .topk(&tape, 0, product, k)
                    .into_iter()
                    .filter_map(|s| s.edit.map(|e| (EditSet::single(e), s.log_prob)))
                    .collect())
            }
            EditModel::Multi(head) => Ok(head.decode(
                &self.store,
                &self.edit_encoder,
                &self.conv,
                product,
                class,
                self.config.use_class,
                k,
                self.config.max_edit_steps,
            )?),
        }
    }

    /// Top-1 edit per example, batched. Multi-edit models decode one by one.
    pub fn predict_edits(&self, examples: &[&Example]) -> Result<Vec<Option<EditSet>>, PipelineError> {
        match &self.edit_model {
            EditModel::Single(head) => {
                let mut tape = Tape::new(&self.store, false, 0);
                let graphs: Vec<(&Molecule, Option<u8>)> = examples.iter().map(|e| (&e.product, e.class)).collect();
                let mols: Vec<&Molecule> = examples.iter().map(|e| &e.product).collect();
                let batch = self.batch(&graphs);
                let space = CandidateSpace::new(&mols, false)?;
                let enc = self.edit_encoder.encode(&mut tape, &batch)?;
                let reps = self.conv.apply(&mut tape, &batch, &enc)?;
                let scores = head.score(&mut tape, &reps, space)?;
                Ok((0..examples.len())
                    .map(|g| {
                        scores
                            .topk(&tape, g, mols[g], 1)
                            .first()
                            .and_then(|s| s.edit)
                            .map(EditSet::single)
                    })
                    .collect())
            }
            EditModel::Multi(_) => examples
                .iter()
                .map(|e| Ok(self.top_edits(&e.product, e.class, 1)?.into_iter().next().map(|x| x.0)))
                .collect(),
        }
    }

    /// Greedy leaving-group tokens on the true synthons, per example.
    pub fn predict_groups(&self, examples: &[&Example]) -> Result<Vec<Vec<usize>>, PipelineError> {
        let mut out = Vec::with_capacity(examples.len());
        for e in examples {
            let (p, s) = self.completion_inputs(&e.product, &e.synthons, &e.order, e.class)?;
            let best = self.lg_head.beam(&self.store, &p, &s, 1)?;
            out.push(best.into_iter().next().map(|c| c.tokens).unwrap_or_default());
        }
        Ok(out)
    }

    /// Product representation (`1 × hidden`) and component representations
    /// in completion order (`C × hidden`).
    pub fn completion_inputs(
        &self,
        product: &Molecule,
        synthons: &Molecule,
        order: &[usize],
        class: Option<u8>,
    ) -> Result<(Tensor, Tensor), PipelineError> {
        let mut tape = Tape::new(&self.store, false, 0);
        let (p, s, _) = self.completion_reps(&mut tape, &[(product, synthons, class)])?;
        let s = tape.gather_rows(s, order)?;
        Ok((tape.value(p).clone(), tape.value(s).clone()))
    }

    /// Log-probabilities over the vocabulary for each `(component, previous
    /// token)` row.
    pub fn group_log_probs(
        &self,
        product: &Tensor,
        components: &Tensor,
        rows: &[(usize, usize)],
    ) -> Result<Tensor, PipelineError> {
        let mut tape = Tape::new(&self.store, false, 0);
        let p = tape.constant(product.clone());
        let s = tape.constant(components.clone());
        let input = CompletionInput {
            record: vec![0; rows.len()],
            component: rows.iter().map(|r| r.0).collect(),
            previous: rows.iter().map(|r| r.1).collect(),
        };
        let lp = self.lg_head.log_probs(&mut tape, p, s, &input)?;
        Ok(tape.value(lp).clone())
    }

    pub fn synthon_head(&self) -> &SynthonHead {
        &self.lg_head
    }
}
