use graphretro::model::{BatchedGraph, Encoder};
use graphretro::molgraph::{parse_smiles, Molecule};
use graphretro::reaction::{featurize, ATOM_FEATURES};
use graphretro::tensor::{ParameterStore, Precision, Tape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WEIGHTS: [&str; 12] = [
    "z_in", "z_msg", "z_bias", "r_in", "r_msg", "r_bias", "h_in", "h_msg", "h_bias", "out_atom", "out_msg", "out_bias",
];

/// Encoder whose weights are a fixed trigonometric pattern.
fn hand_set(hidden: usize, steps: usize) -> (ParameterStore, Encoder) {
    let mut store = ParameterStore::new(Precision::F64);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let enc = Encoder::new(&mut store, "enc", ATOM_FEATURES, hidden, steps, &mut rng).unwrap();
    for (w, name) in WEIGHTS.iter().enumerate() {
        let id = store.id(&format!("enc.{name}")).unwrap();
        for (k, v) in store.value_mut(id).data_mut().iter_mut().enumerate() {
            *v = 0.4 * ((1.7 * k as f64) + 0.9 * w as f64).sin();
        }
    }
    (store, enc)
}

fn weight(store: &ParameterStore, name: &str) -> Tensor {
    store.value(store.id(&format!("enc.{name}")).unwrap()).clone()
}

/// `x · W` for a row vector and an `in × out` matrix.
fn vec_mat(x: &[f64], w: &Tensor) -> Vec<f64> {
    (0..w.cols()).map(|j| x.iter().enumerate().map(|(i, xi)| xi * w.get(i, j)).sum()).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gated message passing written directly over neighbour lists.
fn scalar_reference(mol: &Molecule, store: &ParameterStore, d: usize, steps: usize) -> Vec<Vec<f64>> {
    let f = featurize(mol, None, false);
    let n = mol.num_atoms();
    let mut neighbours: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, b) in mol.bonds().iter().enumerate() {
        neighbours[b.a].push((b.b, k));
        neighbours[b.b].push((b.a, k));
    }
    let w = |name: &str| weight(store, name);
    let (z_in, z_msg, z_b) = (w("z_in"), w("z_msg"), w("z_bias"));
    let (r_in, r_msg, r_b) = (w("r_in"), w("r_msg"), w("r_bias"));
    let (h_in, h_msg, h_b) = (w("h_in"), w("h_msg"), w("h_bias"));
    let edge_input = |u: usize, k: usize| [f.atom(u), f.bond(k)].concat();

    let mut m = vec![vec![vec![0.0; d]; n]; n];
    for _ in 0..steps {
        let mut next = m.clone();
        for u in 0..n {
            for &(v, k) in &neighbours[u] {
                let x = edge_input(u, k);
                let others: Vec<usize> = neighbours[u].iter().map(|p| p.0).filter(|&q| q != v).collect();
                let mut s = vec![0.0; d];
                let mut gated = vec![0.0; d];
                for &q in &others {
                    s = add(&s, &m[q][u]);
                    let r = add(&add(&vec_mat(&x, &r_in), r_b.data()), &vec_mat(&m[q][u], &r_msg));
                    for i in 0..d {
                        gated[i] += sigmoid(r[i]) * m[q][u][i];
                    }
                }
                let z = add(&add(&vec_mat(&x, &z_in), z_b.data()), &vec_mat(&s, &z_msg));
                let h = add(&add(&vec_mat(&x, &h_in), h_b.data()), &vec_mat(&gated, &h_msg));
                for i in 0..d {
                    let (zi, hi) = (sigmoid(z[i]), h[i].tanh());
                    next[u][v][i] = (1.0 - zi) * s[i] + zi * hi;
                }
            }
        }
        m = next;
    }
    let (oa, om, ob) = (w("out_atom"), w("out_msg"), w("out_bias"));
    (0..n)
        .map(|u| {
            let mut incoming = vec![0.0; d];
            for &(q, _) in &neighbours[u] {
                incoming = add(&incoming, &m[q][u]);
            }
            let h = add(&add(&vec_mat(f.atom(u), &oa), &vec_mat(&incoming, &om)), ob.data());
            h.into_iter().map(|x| x.max(0.0)).collect()
        })
        .collect()
}

fn encode(store: &ParameterStore, enc: &Encoder, mols: &[&Molecule]) -> (Tensor, Tensor) {
    let graphs: Vec<(&Molecule, Option<u8>)> = mols.iter().map(|m| (*m, None)).collect();
    let batch = BatchedGraph::new(&graphs, false);
    let mut tape = Tape::new(store, false, 0);
    let out = enc.encode(&mut tape, &batch).unwrap();
    (tape.value(out.atoms).clone(), tape.value(out.graphs).clone())
}

#[test]
fn three_atom_path_matches_scalar_reference() {
    let mol = parse_smiles("CCO").unwrap();
    for steps in [1, 2, 3] {
        let (store, enc) = hand_set(2, steps);
        let (atoms, _) = encode(&store, &enc, &[&mol]);
        let expected = scalar_reference(&mol, &store, 2, steps);
        for (u, row) in expected.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                assert!((atoms.get(u, i) - v).abs() < 1e-12, "steps {steps} atom {u} dim {i}");
            }
        }
    }
}

#[test]
fn branched_ring_matches_scalar_reference() {
    let mol = parse_smiles("CC(=O)Nc1ccccc1").unwrap();
    let (store, enc) = hand_set(3, 4);
    let (atoms, _) = encode(&store, &enc, &[&mol]);
    let expected = scalar_reference(&mol, &store, 3, 4);
    for (u, row) in expected.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            assert!((atoms.get(u, i) - v).abs() < 1e-12);
        }
    }
}

#[test]
fn batched_graphs_match_separate_encoding() {
    let a = parse_smiles("CC(=O)OCC").unwrap();
    let b = parse_smiles("c1ccncc1Cl").unwrap();
    let (store, enc) = hand_set(4, 3);
    let (atoms_ab, graphs_ab) = encode(&store, &enc, &[&a, &b]);
    let (atoms_a, graphs_a) = encode(&store, &enc, &[&a]);
    let (atoms_b, graphs_b) = encode(&store, &enc, &[&b]);
    let na = a.num_atoms();
    for u in 0..na {
        assert_eq!(atoms_ab.row_slice(u), atoms_a.row_slice(u));
    }
    for u in 0..b.num_atoms() {
        assert_eq!(atoms_ab.row_slice(na + u), atoms_b.row_slice(u));
    }
    assert_eq!(graphs_ab.row_slice(0), graphs_a.row_slice(0));
    assert_eq!(graphs_ab.row_slice(1), graphs_b.row_slice(0));
}

#[test]
fn atom_order_does_not_change_representations() {
    let mol = parse_smiles("CC(C)(C)OC(=O)N1CCC(CO)CC1").unwrap();
    let (store, enc) = hand_set(5, 3);
    let (atoms, graph) = encode(&store, &enc, &[&mol]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut order: Vec<usize> = (0..mol.num_atoms()).collect();
        order.shuffle(&mut rng);
        let p = mol.permuted(&order);
        let (patoms, pgraph) = encode(&store, &enc, &[&p]);
        for (new, &old) in order.iter().enumerate() {
            for (x, y) in patoms.row_slice(new).iter().zip(atoms.row_slice(old)) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        for (x, y) in pgraph.data().iter().zip(graph.data()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
