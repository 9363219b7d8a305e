use rand::Rng;

use crate::molgraph::{canonical_rank, Molecule};
use crate::reaction::{featurize, BOND_FEATURES};
use crate::tensor::{ParamId, ParameterStore, Tape, Tensor, TensorError, Var};

use super::ModelError;

/// Several molecules packed into one set of index arrays.
///
/// Bond `b` yields directed edges `2b` (lower-index end to higher) and
/// `2b + 1` (the reverse). Atoms, bonds and components of each molecule are
/// contiguous and in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchedGraph {
    /// `num_atoms × atom_dim`.
    pub atom_features: Tensor,
    /// Per directed edge `u→v`: `[x_u, x_uv]`.
    pub edge_inputs: Tensor,
    pub edge_source: Vec<usize>,
    pub edge_target: Vec<usize>,
    pub edge_reverse: Vec<usize>,
    /// `(outgoing u→v, incoming k→u)` for every neighbour `k ≠ v` of `u`.
    pub pair_out: Vec<usize>,
    pub pair_in: Vec<usize>,
    pub atom_graph: Vec<usize>,
    pub atom_component: Vec<usize>,
    pub atom_offsets: Vec<usize>,
    pub bond_offsets: Vec<usize>,
    pub component_offsets: Vec<usize>,
    /// Bond endpoints with the lower canonical rank first.
    pub bond_ends: Vec<(usize, usize)>,
    /// Atoms of each graph in canonical order.
    pub atom_order: Vec<usize>,
    /// Bonds of each graph ordered by (lower rank, higher rank).
    pub bond_order: Vec<usize>,
}

impl BatchedGraph {
    pub fn new(graphs: &[(&Molecule, Option<u8>)], class_dims: bool) -> BatchedGraph {
        let mut atom_rows = Vec::new();
        let mut edge_rows = Vec::new();
        let mut atom_dim = 0;
        let mut b = BatchedGraph {
            atom_features: Tensor::zeros(0, 0),
            edge_inputs: Tensor::zeros(0, 0),
            edge_source: Vec::new(),
            edge_target: Vec::new(),
            edge_reverse: Vec::new(),
            pair_out: Vec::new(),
            pair_in: Vec::new(),
            atom_graph: Vec::new(),
            atom_component: Vec::new(),
            atom_offsets: vec![0],
            bond_offsets: vec![0],
            component_offsets: vec![0],
            bond_ends: Vec::new(),
            atom_order: Vec::new(),
            bond_order: Vec::new(),
        };
        for (g, &(mol, class)) in graphs.iter().enumerate() {
            let feats = featurize(mol, class, class_dims);
            atom_dim = feats.atom_dim;
            let atom_base = b.atom_graph.len();
            let bond_base = b.bond_ends.len();
            let comp_base = *b.component_offsets.last().unwrap();
            let edge_base = 2 * bond_base;
            atom_rows.extend_from_slice(&feats.atom_features);
            for i in 0..mol.num_atoms() {
                b.atom_graph.push(g);
                b.atom_component.push(comp_base + mol.component_ids()[i]);
            }
            let rank = canonical_rank(mol, false).rank;
            for (k, bond) in mol.bonds().iter().enumerate() {
                let (lo, hi) = (bond.a.min(bond.b), bond.a.max(bond.b));
                for (u, v) in [(lo, hi), (hi, lo)] {
                    b.edge_source.push(atom_base + u);
                    b.edge_target.push(atom_base + v);
                    edge_rows.extend_from_slice(feats.atom(u));
                    edge_rows.extend_from_slice(feats.bond(k));
                }
                b.edge_reverse.extend([edge_base + 2 * k + 1, edge_base + 2 * k]);
                let (first, second) = if rank[bond.a] < rank[bond.b] { (bond.a, bond.b) } else { (bond.b, bond.a) };
                b.bond_ends.push((atom_base + first, atom_base + second));
            }
            // Incoming edges per atom, then the pairs excluding the reverse.
            let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); mol.num_atoms()];
            for e in edge_base..edge_base + 2 * mol.num_bonds() {
                incoming[b.edge_target[e] - atom_base].push(e);
            }
            for e in edge_base..edge_base + 2 * mol.num_bonds() {
                for &f in &incoming[b.edge_source[e] - atom_base] {
                    if f != b.edge_reverse[e] {
                        b.pair_out.push(e);
                        b.pair_in.push(f);
                    }
                }
            }
            let mut order: Vec<usize> = (0..mol.num_atoms()).collect();
            order.sort_by_key(|&i| rank[i]);
            b.atom_order.extend(order.iter().map(|&i| atom_base + i));
            let mut bonds: Vec<usize> = (0..mol.num_bonds()).collect();
            bonds.sort_by_key(|&k| {
                let bond = &mol.bonds()[k];
                let (x, y) = (rank[bond.a], rank[bond.b]);
                (x.min(y), x.max(y))
            });
            b.bond_order.extend(bonds.iter().map(|&k| bond_base + k));
            b.atom_offsets.push(atom_base + mol.num_atoms());
            b.bond_offsets.push(bond_base + mol.num_bonds());
            b.component_offsets.push(comp_base + mol.num_components());
        }
        let n = b.atom_graph.len();
        if atom_dim == 0 {
            atom_dim = featurize(&Molecule::empty(), None, class_dims).atom_dim;
        }
        b.atom_features = Tensor::new(n, atom_dim, atom_rows).expect("atom rows");
        b.edge_inputs = Tensor::new(b.edge_source.len(), atom_dim + BOND_FEATURES, edge_rows).expect("edge rows");
        b
    }

    pub fn num_graphs(&self) -> usize {
        self.atom_offsets.len() - 1
    }

    pub fn num_atoms(&self) -> usize {
        self.atom_graph.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bond_ends.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_source.len()
    }

    pub fn num_components(&self) -> usize {
        *self.component_offsets.last().unwrap()
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_features.cols()
    }

    /// Check every index array against the others.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::Batch(what.to_string()));
        let (n, e) = (self.num_atoms(), self.num_edges());
        if self.atom_features.rows() != n || self.atom_component.len() != n {
            return bad("per-atom arrays disagree on atom count");
        }
        if self.edge_target.len() != e || self.edge_reverse.len() != e || self.edge_inputs.rows() != e {
            return bad("per-edge arrays disagree on edge count");
        }
        if e != 2 * self.num_bonds() {
            return bad("edge count is not twice the bond count");
        }
        for i in 0..e {
            let r = self.edge_reverse[i];
            if self.edge_source[i] >= n || self.edge_target[i] >= n {
                return bad("edge endpoint out of range");
            }
            if r >= e || r == i || self.edge_reverse[r] != i {
                return bad("edge reverse is not an involution");
            }
            if self.edge_source[r] != self.edge_target[i] || self.edge_target[r] != self.edge_source[i] {
                return bad("edge reverse has different endpoints");
            }
        }
        if self.pair_out.len() != self.pair_in.len() {
            return bad("pair arrays differ in length");
        }
        for (&o, &i) in self.pair_out.iter().zip(&self.pair_in) {
            if o >= e || i >= e || self.edge_target[i] != self.edge_source[o] || i == self.edge_reverse[o] {
                return bad("pair does not feed its outgoing edge");
            }
        }
        if self.atom_order.len() != n || self.bond_order.len() != self.num_bonds() {
            return bad("canonical orders have the wrong length");
        }
        if self.atom_component.iter().any(|&c| c >= self.num_components()) {
            return bad("component id out of range");
        }
        Ok(())
    }

    /// `(start, len)` of every graph's atoms.
    pub fn atom_segments(&self) -> Vec<(usize, usize)> {
        self.atom_offsets.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
    }

    pub fn bond_segments(&self) -> Vec<(usize, usize)> {
        self.bond_offsets.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
    }
}

/// Encoder outputs before the convolution stack.
#[derive(Debug, Clone, Copy)]
pub struct Encodings {
    /// `num_atoms × hidden`.
    pub atoms: Var,
    /// `num_bonds × 2·hidden`, lower-rank endpoint first.
    pub bonds: Var,
    /// `num_graphs × hidden`, sum of atom rows.
    pub graphs: Var,
    /// `num_components × hidden`.
    pub components: Var,
}

/// Gated message-passing encoder over directed bonds.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub hidden: usize,
    pub steps: usize,
    atom_dim: usize,
    z_in: ParamId,
    z_msg: ParamId,
    z_bias: ParamId,
    r_in: ParamId,
    r_msg: ParamId,
    r_bias: ParamId,
    h_in: ParamId,
    h_msg: ParamId,
    h_bias: ParamId,
    out_atom: ParamId,
    out_msg: ParamId,
    out_bias: ParamId,
}

impl Encoder {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        atom_dim: usize,
        hidden: usize,
        steps: usize,
        rng: &mut impl Rng,
    ) -> Result<Encoder, TensorError> {
        let edge_dim = atom_dim + BOND_FEATURES;
        let mut w = |name: &str, r, c| store.add_weight(&format!("{prefix}.{name}"), r, c, rng);
        let z_in = w("z_in", edge_dim, hidden)?;
        let z_msg = w("z_msg", hidden, hidden)?;
        let r_in = w("r_in", edge_dim, hidden)?;
        let r_msg = w("r_msg", hidden, hidden)?;
        let h_in = w("h_in", edge_dim, hidden)?;
        let h_msg = w("h_msg", hidden, hidden)?;
        let out_atom = w("out_atom", atom_dim, hidden)?;
        let out_msg = w("out_msg", hidden, hidden)?;
        let mut z = |name: &str| store.add_zeros(&format!("{prefix}.{name}"), 1, hidden);
        Ok(Encoder {
            hidden,
            steps,
            atom_dim,
            z_in,
            z_msg,
            z_bias: z("z_bias")?,
            r_in,
            r_msg,
            r_bias: z("r_bias")?,
            h_in,
            h_msg,
            h_bias: z("h_bias")?,
            out_atom,
            out_msg,
            out_bias: z("out_bias")?,
        })
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_dim
    }

    pub fn encode(&self, tape: &mut Tape, batch: &BatchedGraph) -> Result<Encodings, ModelError> {
        batch.validate()?;
        if batch.atom_dim() != self.atom_dim {
            return Err(ModelError::Batch(format!(
                "atom features have {} columns, encoder expects {}",
                batch.atom_dim(),
                self.atom_dim
            )));
        }
        let (n, e, d) = (batch.num_atoms(), batch.num_edges(), self.hidden);
        let x = tape.constant(batch.atom_features.clone());
        let edges = tape.constant(batch.edge_inputs.clone());
        let p = |tape: &mut Tape, id| tape.param(id);

        let (zw, zb) = (p(tape, self.z_in), p(tape, self.z_bias));
        let z_fixed = tape.linear(edges, zw, zb)?;
        let (rw, rb) = (p(tape, self.r_in), p(tape, self.r_bias));
        let r_fixed = tape.linear(edges, rw, rb)?;
        let r_fixed = tape.gather_rows(r_fixed, &batch.pair_out)?;
        let (hw, hb) = (p(tape, self.h_in), p(tape, self.h_bias));
        let h_fixed = tape.linear(edges, hw, hb)?;
        let (z_msg, r_msg, h_msg) = (p(tape, self.z_msg), p(tape, self.r_msg), p(tape, self.h_msg));

        let mut messages = tape.constant(Tensor::zeros(e, d));
        for _ in 0..self.steps {
            let into_atom = tape.segment_sum(messages, &batch.edge_target, n)?;
            let at_source = tape.gather_rows(into_atom, &batch.edge_source)?;
            let reverse = tape.gather_rows(messages, &batch.edge_reverse)?;
            let s = tape.sub(at_source, reverse)?;

            let zs = tape.matmul(s, z_msg)?;
            let z = tape.add(z_fixed, zs)?;
            let z = tape.sigmoid(z);

            let incoming = tape.gather_rows(messages, &batch.pair_in)?;
            let rm = tape.matmul(incoming, r_msg)?;
            let r = tape.add(r_fixed, rm)?;
            let r = tape.sigmoid(r);
            let gated = tape.mul(r, incoming)?;
            let gated = tape.segment_sum(gated, &batch.pair_out, e)?;

            let hm = tape.matmul(gated, h_msg)?;
            let candidate = tape.add(h_fixed, hm)?;
            let candidate = tape.tanh(candidate);

            let delta = tape.sub(candidate, s)?;
            let step = tape.mul(z, delta)?;
            messages = tape.add(s, step)?;
        }

        let into_atom = tape.segment_sum(messages, &batch.edge_target, n)?;
        let (wa, wm, b) = (p(tape, self.out_atom), p(tape, self.out_msg), p(tape, self.out_bias));
        let from_atom = tape.matmul(x, wa)?;
        let from_msg = tape.matmul(into_atom, wm)?;
        let h = tape.add(from_atom, from_msg)?;
        let h = tape.add_row(h, b)?;
        let atoms = tape.relu(h);

        let graphs = tape.segment_sum(atoms, &batch.atom_graph, batch.num_graphs())?;
        let components = tape.segment_sum(atoms, &batch.atom_component, batch.num_components())?;
        let (firsts, seconds): (Vec<usize>, Vec<usize>) = batch.bond_ends.iter().copied().unzip();
        let a = tape.gather_rows(atoms, &firsts)?;
        let c = tape.gather_rows(atoms, &seconds)?;
        let bonds = tape.concat(&[a, c])?;
        Ok(Encodings {
            atoms,
            bonds,
            graphs,
            components,
        })
    }
}

/// Outputs of the convolution stacks, in the batch's own atom and bond order.
#[derive(Debug, Clone, Copy)]
pub struct ConvReps {
    pub atoms: Var,
    pub bonds: Var,
}

/// Same-padded 1-D convolutions run along each graph's canonical atom
/// sequence and, with separate weights, along its bond sequence.
#[derive(Debug, Clone)]
pub struct GlobalConv {
    pub kernel: usize,
    atom_layers: Vec<(ParamId, ParamId)>,
    bond_layers: Vec<(ParamId, ParamId)>,
}

impl GlobalConv {
    pub fn new(
        store: &mut ParameterStore,
        prefix: &str,
        hidden: usize,
        filters: &[usize],
        kernel: usize,
        rng: &mut impl Rng,
    ) -> Result<GlobalConv, TensorError> {
        let mut stack = |kind: &str, input: usize| -> Result<Vec<(ParamId, ParamId)>, TensorError> {
            let mut layers = Vec::new();
            let mut width = input;
            for (i, &f) in filters.iter().enumerate() {
                let w = store.add_weight(&format!("{prefix}.{kind}{i}.w"), kernel * width, f, rng)?;
                let b = store.add_zeros(&format!("{prefix}.{kind}{i}.b"), 1, f)?;
                layers.push((w, b));
                width = f;
            }
            Ok(layers)
        };
        let atom_layers = stack("atom", hidden)?;
        let bond_layers = stack("bond", 2 * hidden)?;
        Ok(GlobalConv {
            kernel,
            atom_layers,
            bond_layers,
        })
    }

    pub fn apply(&self, tape: &mut Tape, batch: &BatchedGraph, enc: &Encodings) -> Result<ConvReps, ModelError> {
        let atoms = self.run(tape, enc.atoms, &batch.atom_order, &batch.atom_segments(), &self.atom_layers)?;
        let bonds = self.run(tape, enc.bonds, &batch.bond_order, &batch.bond_segments(), &self.bond_layers)?;
        Ok(ConvReps { atoms, bonds })
    }

    fn run(
        &self,
        tape: &mut Tape,
        input: Var,
        order: &[usize],
        segments: &[(usize, usize)],
        layers: &[(ParamId, ParamId)],
    ) -> Result<Var, ModelError> {
        let mut h = tape.gather_rows(input, order)?;
        for (i, &(w, b)) in layers.iter().enumerate() {
            if i > 0 {
                h = tape.relu(h);
            }
            let (w, b) = (tape.param(w), tape.param(b));
            h = tape.conv1d(h, w, b, segments, self.kernel)?;
        }
        let mut inverse = vec![0; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            inverse[i] = pos;
        }
        Ok(tape.gather_rows(h, &inverse)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::molgraph::parse_smiles;
    use crate::reaction::ATOM_FEATURES;
    use crate::tensor::Precision;

    fn setup(hidden: usize, steps: usize) -> (ParameterStore, Encoder) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParameterStore::new(Precision::F64);
        let enc = Encoder::new(&mut store, "enc", ATOM_FEATURES, hidden, steps, &mut rng).unwrap();
        (store, enc)
    }

    #[test]
    fn batch_topology() {
        let m = parse_smiles("CC(C)O").unwrap();
        let b = BatchedGraph::new(&[(&m, None)], false);
        assert_eq!(b.num_edges(), 6);
        // central carbon has degree 3: each outgoing edge gets 2 inputs
        assert_eq!(b.pair_out.len(), 3 * 2);
        b.validate().unwrap();
    }

    #[test]
    fn corrupt_reverse_is_rejected() {
        let m = parse_smiles("CCO").unwrap();
        let mut b = BatchedGraph::new(&[(&m, None)], false);
        b.edge_reverse.swap(0, 1);
        b.edge_reverse[0] = 0;
        let (store, enc) = setup(4, 1);
        let mut tape = Tape::new(&store, false, 0);
        assert!(matches!(enc.encode(&mut tape, &b), Err(ModelError::Batch(_))));
    }

    #[test]
    fn zero_steps_equals_isolated_formula() {
        let (store, enc) = setup(4, 0);
        let m = parse_smiles("CCO").unwrap();
        let b = BatchedGraph::new(&[(&m, None)], false);
        let mut tape = Tape::new(&store, false, 0);
        let out = enc.encode(&mut tape, &b).unwrap();
        let w = store.value(enc.out_atom);
        let got = tape.value(out.atoms);
        for i in 0..3 {
            for c in 0..4 {
                let pre: f64 = (0..ATOM_FEATURES).map(|k| b.atom_features.get(i, k) * w.get(k, c)).sum();
                assert!((got.get(i, c) - pre.max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn graph_rows_are_atom_sums() {
        let (store, enc) = setup(5, 2);
        let m = parse_smiles("CC(=O)O.c1ccccc1").unwrap();
        let b = BatchedGraph::new(&[(&m, None)], false);
        let mut tape = Tape::new(&store, false, 0);
        let out = enc.encode(&mut tape, &b).unwrap();
        let atoms = tape.value(out.atoms);
        let comps = tape.value(out.components);
        assert_eq!(comps.rows(), 2);
        for c in 0..5 {
            let total: f64 = (0..m.num_atoms()).map(|i| atoms.get(i, c)).sum();
            assert_eq!(tape.value(out.graphs).get(0, c), total);
            let first: f64 = (0..4).map(|i| atoms.get(i, c)).sum();
            assert_eq!(comps.get(0, c), first);
        }
    }

    #[test]
    fn single_atom_convolution_is_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParameterStore::new(Precision::F64);
        let enc = Encoder::new(&mut store, "enc", ATOM_FEATURES, 6, 2, &mut rng).unwrap();
        let conv = GlobalConv::new(&mut store, "conv", 6, &[8, 4, 3], 5, &mut rng).unwrap();
        let m = parse_smiles("[Na+]").unwrap();
        let b = BatchedGraph::new(&[(&m, None)], false);
        let mut tape = Tape::new(&store, false, 0);
        let e = enc.encode(&mut tape, &b).unwrap();
        let c = conv.apply(&mut tape, &b, &e).unwrap();
        assert_eq!(tape.shape(c.atoms), [1, 3]);
        assert_eq!(tape.shape(c.bonds), [0, 3]);
        assert!(tape.value(c.atoms).data().iter().all(|v| v.is_finite()));
    }
}
