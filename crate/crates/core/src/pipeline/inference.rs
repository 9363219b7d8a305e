use std::collections::HashSet;

use crate::model::top_tokens;
use crate::molgraph::{canonical_smiles, Molecule};
use crate::reaction::dataset::ordered_synthons;
use crate::reaction::{attach_leaving_group, EditSet, Vocabulary, START};
use crate::tensor::Tensor;

use super::{GraphRetro, PipelineError};

/// One ranked reactant set.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// 1-based.
    pub rank: usize,
    /// Canonical SMILES of all reactants, maps stripped.
    pub reactants: String,
    /// Edit log-likelihood plus the leaving-group log-likelihoods.
    pub score: f64,
    pub edits: EditSet,
    /// Vocabulary index per synthon component in completion order.
    pub tokens: Vec<usize>,
}

/// A completed synthon set from [`complete_synthons`].
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub reactants: String,
}

/// Number every atom when any lacks a map, so edits can be named.
pub fn ensure_mapped(mol: &Molecule) -> Molecule {
    if mol.atoms().iter().all(|a| a.atom_map.is_some()) {
        return mol.clone();
    }
    let (mut atoms, bonds) = mol.clone().into_parts();
    for (i, a) in atoms.iter_mut().enumerate() {
        a.atom_map = Some(i as u32 + 1);
    }
    Molecule::new(atoms, bonds).expect("renumbering keeps the graph valid")
}

/// Attach each component's group and join the results.
pub(crate) fn attach_all(
    vocab: &Vocabulary,
    synthons: &Molecule,
    order: &[usize],
    tokens: &[usize],
) -> Result<String, PipelineError> {
    let parts = synthons.split_components();
    let mut out = Molecule::empty();
    for (&c, &t) in order.iter().zip(tokens) {
        let piece = attach_leaving_group(&parts[c], vocab.group(t), vocab.table())
            .map_err(|e| PipelineError::Reaction(e.into()))?;
        out = out.combine(&piece).map_err(|e| PipelineError::Reaction(e.into()))?;
    }
    Ok(canonical_smiles(&out, false))
}

/// Beam over leaving groups for one synthon set, then attachment. Candidates
/// whose attachment fails are dropped.
pub fn complete_synthons(
    model: &GraphRetro,
    product: &Molecule,
    synthons: &Molecule,
    order: &[usize],
    class: Option<u8>,
    k: usize,
) -> Result<Vec<Completion>, PipelineError> {
    let (p, s) = model.completion_inputs(product, synthons, order, class)?;
    let beam = model.synthon_head().beam(&model.store, &p, &s, k)?;
    let mut out = Vec::new();
    for cand in beam {
        match attach_all(&model.vocab, synthons, order, &cand.tokens) {
            Ok(reactants) => out.push(Completion {
                tokens: cand.tokens,
                log_prob: cand.log_prob,
                reactants,
            }),
            Err(e) => log::debug!("dropping completion {:?}: {e}", cand.tokens),
        }
    }
    if out.is_empty() {
        log::warn!("no leaving-group combination attached to the synthons");
    }
    Ok(out)
}

struct EditContext {
    edits: EditSet,
    log_prob: f64,
    synthons: Molecule,
    order: Vec<usize>,
    product_rep: Tensor,
    component_reps: Tensor,
}

fn edit_contexts(
    model: &GraphRetro,
    product: &Molecule,
    class: Option<u8>,
    k: usize,
) -> Result<Vec<EditContext>, PipelineError> {
    let mut out = Vec::new();
    for (edits, log_prob) in model.top_edits(product, class, k)? {
        let (synthons, order) = match ordered_synthons(product, &edits) {
            Ok(x) => x,
            Err(e) => {
                log::debug!("edit {edits} not applicable: {e}");
                continue;
            }
        };
        let (product_rep, component_reps) = model.completion_inputs(product, &synthons, &order, class)?;
        out.push(EditContext {
            edits,
            log_prob,
            synthons,
            order,
            product_rep,
            component_reps,
        });
    }
    Ok(out)
}

/// Rank, deduplicate by reactant string keeping the best score, and number.
fn finish(mut scored: Vec<Prediction>, limit: usize) -> Vec<Prediction> {
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.reactants.cmp(&b.reactants)));
    let mut seen = HashSet::new();
    scored.retain(|p| seen.insert(p.reactants.clone()));
    scored.truncate(limit);
    for (i, p) in scored.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    scored
}

/// Beam search over edits then leaving groups.
///
/// The `n` best edits seed `n` nodes. Each round extends every unfinished
/// node by its `n` best tokens for its next component and keeps the `n`
/// best of all nodes by cumulative log-likelihood. Finished nodes are
/// attached, and identical reactant sets keep their best score.
pub fn beam_search(
    model: &GraphRetro,
    product: &Molecule,
    class: Option<u8>,
    n: usize,
) -> Result<Vec<Prediction>, PipelineError> {
    let product = ensure_mapped(product);
    let contexts = edit_contexts(model, &product, class, n)?;
    struct Node {
        ctx: usize,
        tokens: Vec<usize>,
        score: f64,
    }
    let done = |node: &Node| node.tokens.len() == contexts[node.ctx].order.len();
    let mut nodes: Vec<Node> = contexts
        .iter()
        .enumerate()
        .map(|(ctx, c)| Node {
            ctx,
            tokens: Vec::new(),
            score: c.log_prob,
        })
        .collect();
    while !nodes.iter().all(done) {
        // One batched forward per edit context over its open nodes.
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        for (ctx, c) in contexts.iter().enumerate() {
            let open: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].ctx == ctx && !done(&nodes[i])).collect();
            if open.is_empty() {
                continue;
            }
            let queries: Vec<(usize, usize)> = open
                .iter()
                .map(|&i| (nodes[i].tokens.len(), nodes[i].tokens.last().copied().unwrap_or(START)))
                .collect();
            let lp = model.group_log_probs(&c.product_rep, &c.component_reps, &queries)?;
            for (r, &i) in open.iter().enumerate() {
                rows[i] = Some(lp.row_slice(r).to_vec());
            }
        }
        let mut next = Vec::new();
        for (node, row) in nodes.into_iter().zip(rows) {
            match row {
                None => next.push(node),
                Some(row) => {
                    for (t, lp) in top_tokens(&row, n) {
                        let mut tokens = node.tokens.clone();
                        tokens.push(t);
                        next.push(Node {
                            ctx: node.ctx,
                            tokens,
                            score: node.score + lp,
                        });
                    }
                }
            }
        }
        next.sort_by(|a, b| b.score.total_cmp(&a.score));
        next.truncate(n);
        nodes = next;
    }
    let mut scored = Vec::new();
    for node in nodes {
        let c = &contexts[node.ctx];
        match attach_all(&model.vocab, &c.synthons, &c.order, &node.tokens) {
            Ok(reactants) => scored.push(Prediction {
                rank: 0,
                reactants,
                score: node.score,
                edits: c.edits.clone(),
                tokens: node.tokens,
            }),
            Err(e) => log::debug!("dropping {} {:?}: {e}", c.edits, node.tokens),
        }
    }
    if scored.is_empty() {
        log::warn!("no candidate survived attachment");
    }
    Ok(finish(scored, n))
}

/// Width-one beam.
pub fn greedy(model: &GraphRetro, product: &Molecule, class: Option<u8>) -> Result<Vec<Prediction>, PipelineError> {
    beam_search(model, product, class, 1)
}

/// Every edit candidate combined with every token sequence, scored exactly
/// and ranked like [`beam_search`]. Exponential in the component count;
/// meant as a reference for small models.
pub fn brute_force(model: &GraphRetro, product: &Molecule, class: Option<u8>) -> Result<Vec<Prediction>, PipelineError> {
    let product = ensure_mapped(product);
    let contexts = edit_contexts(model, &product, class, usize::MAX)?;
    let mut scored = Vec::new();
    for c in &contexts {
        let mut stack: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), c.log_prob)];
        while let Some((tokens, score)) = stack.pop() {
            if tokens.len() == c.order.len() {
                if let Ok(reactants) = attach_all(&model.vocab, &c.synthons, &c.order, &tokens) {
                    scored.push(Prediction {
                        rank: 0,
                        reactants,
                        score,
                        edits: c.edits.clone(),
                        tokens,
                    });
                }
                continue;
            }
            let prev = tokens.last().copied().unwrap_or(START);
            let lp = model.group_log_probs(&c.product_rep, &c.component_reps, &[(tokens.len(), prev)])?;
            for (t, l) in top_tokens(lp.row_slice(0), usize::MAX) {
                let mut next = tokens.clone();
                next.push(t);
                stack.push((next, score + l));
            }
        }
    }
    Ok(finish(scored, usize::MAX))
}
