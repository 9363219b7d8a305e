use std::collections::HashMap;

use rand::Rng;

use crate::molgraph::Molecule;
use crate::reaction::{apply_edits, AtomEdit, BondEdit, Edit, EditLabel, EditSet};
use crate::tensor::{ParamId, ParameterStore, Tape, Tensor, TensorError, Var};

use super::{BatchedGraph, ConvReps, Encoder, GlobalConv, ModelError};

const LABELS: usize = 5;

/// One scoreable edit of a graph. Indices are local to the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Candidate {
    Bond { bond: usize, label: EditLabel },
    Atom { atom: usize },
    Stop,
}

/// Flattened edit candidates of a batch: per graph, every (bond, label other
/// than the bond's current one) in bond then label order, then every atom,
/// then the stop symbol when present.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSpace {
    pub candidates: Vec<Candidate>,
    pub graph_of: Vec<usize>,
    pub offsets: Vec<usize>,
    /// Position of each candidate in `[bond logits | atom logits | stop logits]`.
    flat: Vec<usize>,
    lookup: Vec<HashMap<Candidate, usize>>,
}

impl CandidateSpace {
    pub fn new(mols: &[&Molecule], with_stop: bool) -> Result<CandidateSpace, ModelError> {
        let total_bonds: usize = mols.iter().map(|m| m.num_bonds()).sum();
        let total_atoms: usize = mols.iter().map(|m| m.num_atoms()).sum();
        let mut space = CandidateSpace {
            candidates: Vec::new(),
            graph_of: Vec::new(),
            offsets: vec![0],
            flat: Vec::new(),
            lookup: Vec::new(),
        };
        let (mut bond_base, mut atom_base) = (0, 0);
        for (g, mol) in mols.iter().enumerate() {
            if mol.atoms().iter().any(|a| a.atom_map.is_none()) {
                return Err(ModelError::Batch("graph has an atom without a map number".into()));
            }
            let mut lookup = HashMap::new();
            let mut push = |space: &mut CandidateSpace, c: Candidate, flat: usize| {
                lookup.insert(c, space.candidates.len());
                space.candidates.push(c);
                space.graph_of.push(g);
                space.flat.push(flat);
            };
            for (b, bond) in mol.bonds().iter().enumerate() {
                let current = EditLabel::for_order(bond.order);
                for l in 0..LABELS {
                    let label = EditLabel::from_index(l).unwrap();
                    if label != current {
                        push(&mut space, Candidate::Bond { bond: b, label }, (bond_base + b) * LABELS + l);
                    }
                }
            }
            for a in 0..mol.num_atoms() {
                push(&mut space, Candidate::Atom { atom: a }, total_bonds * LABELS + atom_base + a);
            }
            if with_stop {
                push(&mut space, Candidate::Stop, total_bonds * LABELS + total_atoms + g);
            }
            space.lookup.push(lookup);
            space.offsets.push(space.candidates.len());
            bond_base += mol.num_bonds();
            atom_base += mol.num_atoms();
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn num_graphs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn graph_range(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    /// Global index of `edit` among graph `g`'s candidates; `None` means stop.
    pub fn find(&self, g: usize, mol: &Molecule, edit: Option<&Edit>) -> Option<usize> {
        let c = match edit {
            None => Candidate::Stop,
            Some(Edit::Bond(e)) => {
                let (i, j) = (mol.atom_by_map(e.pair.0)?, mol.atom_by_map(e.pair.1)?);
                Candidate::Bond {
                    bond: mol.bond_between(i, j)?,
                    label: e.label,
                }
            }
            Some(Edit::Atom(e)) => Candidate::Atom {
                atom: mol.atom_by_map(e.atom)?,
            },
        };
        self.lookup[g].get(&c).copied()
    }

    /// The edit a candidate stands for, in atom-map terms. `None` for stop.
    pub fn to_edit(&self, mol: &Molecule, index: usize) -> Option<Edit> {
        let map = |i: usize| mol.atom(i).atom_map.expect("candidate graphs are mapped");
        match self.candidates[index] {
            Candidate::Bond { bond, label } => {
                let b = &mol.bonds()[bond];
                Some(Edit::Bond(BondEdit::new(map(b.a), map(b.b), label)))
            }
            Candidate::Atom { atom } => Some(Edit::Atom(AtomEdit { atom: map(atom) })),
            Candidate::Stop => None,
        }
    }
}

/// Per-graph log-probabilities over a candidate space.
#[derive(Debug, Clone)]
pub struct EditScores {
    /// `len × 1`, normalised within each graph.
    pub log_probs: Var,
    pub space: CandidateSpace,
}

/// A ranked edit; `edit` is `None` for the stop symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEdit {
    pub candidate: usize,
    pub edit: Option<Edit>,
    pub log_prob: f64,
}

impl EditScores {
    /// The `k` most likely candidates of graph `g`, ties kept in candidate
    /// order.
    pub fn topk(&self, tape: &Tape, g: usize, mol: &Molecule, k: usize) -> Vec<ScoredEdit> {
        let values = tape.value(self.log_probs).data();
        let mut ranked: Vec<usize> = self.space.graph_range(g).collect();
        ranked.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        ranked
            .into_iter()
            .take(k)
            .map(|c| ScoredEdit {
                candidate: c,
                edit: self.space.to_edit(mol, c),
                log_prob: values[c],
            })
            .collect()
    }
}

/// `uᵀ relu(W x + b)` for every row of `x`.
#[derive(Debug, Clone, Copy)]
struct ScoreNet {
    w: ParamId,
    b: ParamId,
    u: ParamId,
}

impl ScoreNet {
    fn new(
        store: &mut ParameterStore,
        name: &str,
        input: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<ScoreNet, TensorError> {
        Ok(ScoreNet {
            w: store.add_weight(&format!("{name}.w"), input, hidden, rng)?,
            b: store.add_zeros(&format!("{name}.b"), 1, hidden)?,
            u: store.add_weight(&format!("{name}.u"), hidden, 1, rng)?,
        })
    }

    fn apply(&self, tape: &mut Tape, x: Var) -> Result<Var, TensorError> {
        let (w, b, u) = (tape.param(self.w), tape.param(self.b), tape.param(self.u));
        let h = tape.linear(x, w, b)?;
        let h = tape.relu(h);
        tape.matmul(h, u)
    }
}

/// Atom scorer and one bond scorer per edit label.
#[derive(Debug, Clone)]
struct Scorers {
    atom: ScoreNet,
    bond: [ScoreNet; LABELS],
}

impl Scorers {
    fn new(
        store: &mut ParameterStore,
        prefix: &str,
        atom_in: usize,
        bond_in: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<Scorers, TensorError> {
        let atom = ScoreNet::new(store, &format!("{prefix}.atom"), atom_in, hidden, rng)?;
        let mut bond = Vec::with_capacity(LABELS);
        for l in 0..LABELS {
            let name = EditLabel::from_index(l).unwrap().name().to_lowercase();
            bond.push(ScoreNet::new(store, &format!("{prefix}.bond_{name}"), bond_in, hidden, rng)?);
        }
        Ok(Scorers {
            atom,
            bond: bond.try_into().unwrap(),
        })
    }

    /// Bond, atom and optional stop logits, normalised per graph over `space`.
    fn normalise(
        &self,
        tape: &mut Tape,
        atoms: Var,
        bonds: Var,
        stop: Option<Var>,
        space: CandidateSpace,
    ) -> Result<EditScores, TensorError> {
        let per_label: Vec<Var> = self
            .bond
            .iter()
            .map(|net| net.apply(tape, bonds))
            .collect::<Result<_, _>>()?;
        let bond_logits = tape.concat(&per_label)?;
        let atom_logits = self.atom.apply(tape, atoms)?;
        let mut parts = Vec::with_capacity(3);
        for v in [Some(bond_logits), Some(atom_logits), stop].into_iter().flatten() {
            let len = tape.value(v).data().len();
            parts.push(tape.reshape(v, 1, len)?);
        }
        let flat = tape.concat(&parts)?;
        let len = tape.value(flat).data().len();
        let flat = tape.reshape(flat, len, 1)?;
        let picked = tape.select(flat, &space.flat)?;
        let log_probs = tape.segment_log_softmax(picked, &space.graph_of, space.num_graphs())?;
        Ok(EditScores { log_probs, space })
    }
}

/// Single-edit scoring over convolved atom and bond representations.
#[derive(Debug, Clone)]
pub struct EditHead {
    scorers: Scorers,
}

impl EditHead {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<EditHead, TensorError> {
        Ok(EditHead {
            scorers: Scorers::new(store, prefix, input, input, hidden, rng)?,
        })
    }

    pub fn score(&self, tape: &mut Tape, conv: &ConvReps, space: CandidateSpace) -> Result<EditScores, ModelError> {
        Ok(self.scorers.normalise(tape, conv.atoms, conv.bonds, None, space)?)
    }
}

/// Mean negative log-likelihood of each graph's single true edit.
pub fn edit_loss(tape: &mut Tape, scores: &EditScores, mols: &[&Molecule], truth: &[&EditSet]) -> Result<Var, ModelError> {
    let mut picks = Vec::with_capacity(truth.len());
    for (g, edits) in truth.iter().enumerate() {
        let seq = edits.sequence();
        if seq.len() != 1 {
            return Err(ModelError::EditNotCandidate(format!("{edits} (expected exactly one edit)")));
        }
        picks.push(
            scores
                .space
                .find(g, mols[g], Some(&seq[0]))
                .ok_or_else(|| ModelError::EditNotCandidate(edits.to_string()))?,
        );
    }
    mean_nll(tape, scores.log_probs, &picks, truth.len())
}

fn mean_nll(tape: &mut Tape, log_probs: Var, picks: &[usize], count: usize) -> Result<Var, ModelError> {
    let chosen = tape.select(log_probs, picks)?;
    let total = tape.sum(chosen);
    Ok(tape.scale(total, -1.0 / count.max(1) as f64))
}

/// Outputs of one autoregressive edit step.
#[derive(Debug, Clone)]
pub struct MultiEditStep {
    pub scores: EditScores,
    /// `num_atoms × hidden` atom states.
    pub hidden: Var,
    /// `num_graphs × hidden` sums of atom states.
    pub molecule: Var,
}

/// Autoregressive edit model: atom states carried across steps, a stop
/// symbol scored from the summed molecule state.
#[derive(Debug, Clone)]
pub struct MultiEditHead {
    pub hidden: usize,
    carry: ParamId,
    input: ParamId,
    bias: ParamId,
    scorers: Scorers,
    stop: ScoreNet,
}

impl MultiEditHead {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        input: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Result<MultiEditHead, TensorError> {
        Ok(MultiEditHead {
            hidden,
            carry: store.add_weight(&format!("{prefix}.carry"), hidden, hidden, rng)?,
            input: store.add_weight(&format!("{prefix}.input"), input, hidden, rng)?,
            bias: store.add_zeros(&format!("{prefix}.bias"), 1, hidden)?,
            scorers: Scorers::new(store, prefix, hidden, 2 * hidden, hidden, rng)?,
            stop: ScoreNet::new(store, &format!("{prefix}.stop"), hidden, hidden, rng)?,
        })
    }

    /// One step given the previous atom states (zeros at the first step).
    pub fn step(
        &self,
        tape: &mut Tape,
        batch: &BatchedGraph,
        atoms: Var,
        previous: Var,
        space: CandidateSpace,
    ) -> Result<MultiEditStep, ModelError> {
        let (wc, wi, b) = (tape.param(self.carry), tape.param(self.input), tape.param(self.bias));
        let carried = tape.matmul(previous, wc)?;
        let fresh = tape.matmul(atoms, wi)?;
        let h = tape.add(carried, fresh)?;
        let h = tape.add_row(h, b)?;
        let hidden = tape.relu(h);
        let molecule = tape.segment_sum(hidden, &batch.atom_graph, batch.num_graphs())?;
        let (firsts, seconds): (Vec<usize>, Vec<usize>) = batch.bond_ends.iter().copied().unzip();
        let a = tape.gather_rows(hidden, &firsts)?;
        let c = tape.gather_rows(hidden, &seconds)?;
        let bonds = tape.concat(&[a, c])?;
        let stop = self.stop.apply(tape, molecule)?;
        let scores = self.scorers.normalise(tape, hidden, bonds, Some(stop), space)?;
        Ok(MultiEditStep {
            scores,
            hidden,
            molecule,
        })
    }

    /// Teacher-forced loss over full edit sequences, each ending with stop.
    /// Graphs that finished earlier stay in the batch without contributing.
    #[allow(clippy::too_many_arguments)]
    pub fn sequence_loss(
        &self,
        tape: &mut Tape,
        encoder: &Encoder,
        conv: &GlobalConv,
        products: &[(&Molecule, Option<u8>)],
        truth: &[&EditSet],
        class_dims: bool,
    ) -> Result<Var, ModelError> {
        let sequences: Vec<Vec<Edit>> = truth.iter().map(|e| e.sequence()).collect();
        let steps = sequences.iter().map(|s| s.len() + 1).max().unwrap_or(0);
        let n: usize = products.iter().map(|p| p.0.num_atoms()).sum();
        let mut previous = tape.constant(Tensor::zeros(n, self.hidden));
        let mut step_scores = Vec::with_capacity(steps);
        let mut targets = Vec::with_capacity(steps);
        for t in 0..steps {
            let graphs: Vec<Molecule> = products
                .iter()
                .zip(&sequences)
                .map(|(p, seq)| apply_edits(p.0, &EditSet::from_sequence(&seq[..t.min(seq.len())])))
                .collect::<Result<_, _>>()?;
            let refs: Vec<&Molecule> = graphs.iter().collect();
            let pairs: Vec<(&Molecule, Option<u8>)> = graphs.iter().zip(products).map(|(g, p)| (g, p.1)).collect();
            let batch = BatchedGraph::new(&pairs, class_dims);
            let space = CandidateSpace::new(&refs, true)?;
            let enc = encoder.encode(tape, &batch)?;
            let reps = conv.apply(tape, &batch, &enc)?;
            let out = self.step(tape, &batch, reps.atoms, previous, space)?;
            let mut step_targets = Vec::with_capacity(graphs.len());
            for (g, seq) in sequences.iter().enumerate() {
                step_targets.push(match t.cmp(&seq.len()) {
                    std::cmp::Ordering::Less => Some(
                        out.scores
                            .space
                            .find(g, &graphs[g], Some(&seq[t]))
                            .ok_or_else(|| ModelError::EditNotCandidate(truth[g].to_string()))?,
                    ),
                    std::cmp::Ordering::Equal => out.scores.space.find(g, &graphs[g], None),
                    std::cmp::Ordering::Greater => None,
                });
            }
            previous = out.hidden;
            step_scores.push(out.scores);
            targets.push(step_targets);
        }
        multi_edit_loss(tape, &step_scores, &targets)
    }

    /// Beam decoding of edit sets, at most `max_steps` edits each. Sequences
    /// reaching the same set keep their best score.
    #[allow(clippy::too_many_arguments)]
    pub fn decode(
        &self,
        store: &ParameterStore,
        encoder: &Encoder,
        conv: &GlobalConv,
        product: &Molecule,
        class: Option<u8>,
        class_dims: bool,
        beam: usize,
        max_steps: usize,
    ) -> Result<Vec<(EditSet, f64)>, ModelError> {
        struct Node {
            edits: Vec<Edit>,
            hidden: Tensor,
            score: f64,
        }
        let mut live = vec![Node {
            edits: Vec::new(),
            hidden: Tensor::zeros(product.num_atoms(), self.hidden),
            score: 0.0,
        }];
        let mut done: Vec<(EditSet, f64)> = Vec::new();
        for step in 0..=max_steps {
            let mut next = Vec::new();
            for node in &live {
                let graph = apply_edits(product, &EditSet::from_sequence(&node.edits))?;
                if step == max_steps {
                    log::warn!("edit decoding hit {max_steps} steps without stopping; truncating");
                    done.push((EditSet::from_sequence(&node.edits), node.score));
                    continue;
                }
                let mut tape = Tape::new(store, false, 0);
                let batch = BatchedGraph::new(&[(&graph, class)], class_dims);
                let space = CandidateSpace::new(&[&graph], true)?;
                let enc = encoder.encode(&mut tape, &batch)?;
                let reps = conv.apply(&mut tape, &batch, &enc)?;
                let prev = tape.constant(node.hidden.clone());
                let out = self.step(&mut tape, &batch, reps.atoms, prev, space)?;
                let hidden = tape.value(out.hidden).clone();
                for s in out.scores.topk(&tape, 0, &graph, beam) {
                    let score = node.score + s.log_prob;
                    match s.edit {
                        None => done.push((EditSet::from_sequence(&node.edits), score)),
                        Some(e) => {
                            let mut edits = node.edits.clone();
                            edits.push(e);
                            next.push(Node {
                                edits,
                                hidden: hidden.clone(),
                                score,
                            });
                        }
                    }
                }
            }
            // Finished hypotheses compete with live ones for the beam.
            done.sort_by(|a, b| b.1.total_cmp(&a.1));
            done.truncate(beam);
            next.sort_by(|a, b| b.score.total_cmp(&a.score));
            let floor = if done.len() == beam { done[beam - 1].1 } else { f64::NEG_INFINITY };
            next.retain(|n| n.score > floor);
            next.truncate(beam);
            live = next;
            if live.is_empty() {
                break;
            }
        }
        let mut best: HashMap<EditSet, f64> = HashMap::new();
        for (set, score) in done {
            let entry = best.entry(set).or_insert(f64::NEG_INFINITY);
            *entry = entry.max(score);
        }
        let mut out: Vec<(EditSet, f64)> = best.into_iter().collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.truncate(beam);
        Ok(out)
    }
}

/// Sum over steps of the mean per-graph negative log-likelihood. `None`
/// targets are skipped; each step is averaged over the batch size.
pub fn multi_edit_loss(tape: &mut Tape, steps: &[EditScores], targets: &[Vec<Option<usize>>]) -> Result<Var, ModelError> {
    let mut total = tape.constant(Tensor::scalar(0.0));
    for (scores, t) in steps.iter().zip(targets) {
        let picks: Vec<usize> = t.iter().flatten().copied().collect();
        let step = mean_nll(tape, scores.log_probs, &picks, t.len())?;
        total = tape.add(total, step)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::molgraph::parse_smiles;
    use crate::tensor::Precision;

    fn mapped(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn benzene_has_thirty_candidates() {
        let m = mapped("[cH:1]1[cH:2][cH:3][cH:4][cH:5][cH:6]1");
        let space = CandidateSpace::new(&[&m], false).unwrap();
        assert_eq!(space.len(), 6 * 4 + 6);
        let with_stop = CandidateSpace::new(&[&m], true).unwrap();
        assert_eq!(with_stop.len(), 31);
        assert!(!space.candidates.contains(&Candidate::Bond {
            bond: 0,
            label: EditLabel::Aromatic
        }));
    }

    #[test]
    fn unmapped_graphs_are_rejected() {
        let m = mapped("CC");
        assert!(CandidateSpace::new(&[&m], false).is_err());
    }

    #[test]
    fn find_and_back() {
        let m = mapped("[CH3:1][C:2](=[O:3])[OH:4]");
        let space = CandidateSpace::new(&[&m], false).unwrap();
        for i in 0..space.len() {
            let e = space.to_edit(&m, i).unwrap();
            assert_eq!(space.find(0, &m, Some(&e)), Some(i));
        }
        assert_eq!(space.find(0, &m, None), None);
    }

    #[test]
    fn uniform_and_saturated_loss() {
        let store = ParameterStore::new(Precision::F64);
        let m = mapped("[cH:1]1[cH:2][cH:3][cH:4][cH:5][cH:6]1");
        let space = CandidateSpace::new(&[&m], false).unwrap();
        let truth = EditSet::single(space.to_edit(&m, 3).unwrap());
        let mut tape = Tape::new(&store, false, 0);
        let zeros = tape.constant(Tensor::zeros(30, 1));
        let lp = tape.segment_log_softmax(zeros, &space.graph_of, 1).unwrap();
        let scores = EditScores {
            log_probs: lp,
            space: space.clone(),
        };
        let l = edit_loss(&mut tape, &scores, &[&m], &[&truth]).unwrap();
        assert!((tape.value(l).item() - 30f64.ln()).abs() < 1e-12);

        let mut logits = vec![0.0; 30];
        logits[3] = 1e3;
        let x = tape.constant(Tensor::column(logits));
        let lp = tape.segment_log_softmax(x, &space.graph_of, 1).unwrap();
        let scores = EditScores { log_probs: lp, space };
        let l = edit_loss(&mut tape, &scores, &[&m], &[&truth]).unwrap();
        assert!(tape.value(l).item() < 1e-6);
    }

    #[test]
    fn absent_truth_is_an_error() {
        let store = ParameterStore::new(Precision::F64);
        let m = mapped("[CH3:1][CH3:2]");
        let space = CandidateSpace::new(&[&m], false).unwrap();
        let mut tape = Tape::new(&store, false, 0);
        let x = tape.constant(Tensor::zeros(space.len(), 1));
        let lp = tape.segment_log_softmax(x, &space.graph_of, 1).unwrap();
        let scores = EditScores { log_probs: lp, space };
        let wrong = EditSet::single(Edit::Bond(BondEdit::new(1, 2, EditLabel::Single)));
        assert!(matches!(
            edit_loss(&mut tape, &scores, &[&m], &[&wrong]),
            Err(ModelError::EditNotCandidate(_))
        ));
    }

    #[test]
    fn molecule_state_is_atom_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParameterStore::new(Precision::F64);
        let head = MultiEditHead::new(&mut store, "multi", 3, 4, &mut rng).unwrap();
        let m = mapped("[CH3:1][CH2:2][OH:3]");
        let batch = BatchedGraph::new(&[(&m, None)], false);
        let space = CandidateSpace::new(&[&m], true).unwrap();
        let mut tape = Tape::new(&store, false, 0);
        let atoms = tape.constant(Tensor::new(3, 3, (0..9).map(|i| i as f64 * 0.1).collect()).unwrap());
        let prev = tape.constant(Tensor::zeros(3, 4));
        let out = head.step(&mut tape, &batch, atoms, prev, space).unwrap();
        let h = tape.value(out.hidden);
        for c in 0..4 {
            let total: f64 = (0..3).map(|i| h.get(i, c)).sum();
            assert_eq!(tape.value(out.molecule).get(0, c), total);
        }
    }

    #[test]
    fn uniform_two_step_loss() {
        let store = ParameterStore::new(Precision::F64);
        let mut tape = Tape::new(&store, false, 0);
        let m = mapped("[CH3:1][CH2:2][CH2:3][CH3:4]");
        // 3 bonds x 4 labels + 4 atoms + stop = 17; use two such steps
        let space = CandidateSpace::new(&[&m], true).unwrap();
        let k = space.len();
        let mut steps = Vec::new();
        for _ in 0..2 {
            let x = tape.constant(Tensor::zeros(k, 1));
            let lp = tape.segment_log_softmax(x, &space.graph_of, 1).unwrap();
            steps.push(EditScores {
                log_probs: lp,
                space: space.clone(),
            });
        }
        let l = multi_edit_loss(&mut tape, &steps, &[vec![Some(0)], vec![Some(k - 1)]]).unwrap();
        assert!((tape.value(l).item() - 2.0 * (k as f64).ln()).abs() < 1e-12);
    }
}
