//! Gradient-check scenarios shared by the gradient tests and the acceptance
//! report.

use graphretro::model::{BatchedGraph, Encoder, ModelError};
use graphretro::molgraph::{parse_smiles, Molecule};
use graphretro::pipeline::{Example, GraphRetro, TrainConfig};
use graphretro::reaction::ATOM_FEATURES;
use graphretro::tensor::{check_gradients, GradCheck, ParamId, ParameterStore, Precision, Tape, Tensor, TensorError, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

/// Weighted sum of `v` with a fixed non-uniform pattern, so that outputs
/// summing to a constant still carry a gradient.
fn weighted_sum(t: &mut Tape, v: Var) -> Result<Var, TensorError> {
    let [r, c] = t.shape(v);
    let w = Tensor::new(r, c, (0..r * c).map(|k| (1.1 * k as f64 + 0.3).sin()).collect())?;
    let w = t.constant(w);
    let p = t.mul(v, w)?;
    Ok(t.sum(p))
}

fn op_check<F>(shapes: &[(usize, usize)], f: F) -> GradCheck
where
    F: Fn(&mut Tape, &[ParamId]) -> Result<Var, TensorError>,
{
    let mut store = ParameterStore::new(Precision::F64);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let ids: Vec<ParamId> = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| store.add_weight(&format!("p{i}"), r, c, &mut rng).unwrap())
        .collect();
    check_gradients(&mut store, &ids, EPS, |t| {
        let out = f(t, &ids)?;
        weighted_sum(t, out)
    })
    .unwrap()
}

macro_rules! unary {
    ($name:literal, $method:ident) => {
        ($name, op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            Ok(t.$method(a))
        }))
    };
}

macro_rules! binary {
    ($name:literal, $method:ident, $b:expr) => {
        ($name, op_check(&[(3, 4), $b], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            t.$method(a, b)
        }))
    };
}

/// One check per tape operation.
pub fn primitive_checks() -> Vec<(&'static str, GradCheck)> {
    let segments = [(0, 3), (3, 2)];
    vec![
        binary!("matmul", matmul, (4, 2)),
        binary!("add", add, (3, 4)),
        binary!("sub", sub, (3, 4)),
        binary!("mul", mul, (3, 4)),
        binary!("add_row", add_row, (1, 4)),
        ("scale", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            Ok(t.scale(a, -2.5))
        })),
        ("linear", op_check(&[(3, 4), (4, 2), (1, 2)], |t, p| {
            let (x, w, b) = (t.param(p[0]), t.param(p[1]), t.param(p[2]));
            t.linear(x, w, b)
        })),
        ("concat", op_check(&[(3, 4), (3, 2)], |t, p| {
            let (a, b) = (t.param(p[0]), t.param(p[1]));
            t.concat(&[a, b])
        })),
        unary!("relu", relu),
        unary!("tanh", tanh),
        unary!("sigmoid", sigmoid),
        unary!("softmax_rows", softmax_rows),
        unary!("log_softmax_rows", log_softmax_rows),
        ("segment_log_softmax", op_check(&[(5, 1)], |t, p| {
            let a = t.param(p[0]);
            t.segment_log_softmax(a, &[0, 0, 1, 1, 1], 2)
        })),
        ("segment_sum", op_check(&[(5, 3)], |t, p| {
            let a = t.param(p[0]);
            t.segment_sum(a, &[1, 0, 1, 2, 0], 3)
        })),
        ("gather_rows", op_check(&[(4, 3)], |t, p| {
            let a = t.param(p[0]);
            t.gather_rows(a, &[3, 0, 0, 2, 1])
        })),
        ("embedding", op_check(&[(5, 3)], |t, p| t.embedding(p[0], &[4, 0, 0, 2]))),
        ("select", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            t.select(a, &[0, 5, 5, 11])
        })),
        ("reshape", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            t.reshape(a, 2, 6)
        })),
        ("sum", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            let a = t.tanh(a);
            Ok(t.sum(a))
        })),
        ("mask_fill", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            let mut mask = vec![false; 12];
            mask[1] = true;
            mask[6] = true;
            let m = t.mask_fill(a, &mask)?;
            Ok(t.softmax_rows(m))
        })),
        ("dropout", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            Ok(t.dropout(a, 0.3))
        })),
        ("im2col", op_check(&[(5, 3)], |t, p| {
            let a = t.param(p[0]);
            t.im2col(a, &segments, 3)
        })),
        ("conv1d", op_check(&[(5, 3), (9, 2), (1, 2)], |t, p| {
            let (a, w, b) = (t.param(p[0]), t.param(p[1]), t.param(p[2]));
            t.conv1d(a, w, b, &segments, 3)
        })),
        ("cross_entropy", op_check(&[(3, 4)], |t, p| {
            let a = t.param(p[0]);
            t.cross_entropy(a, &[Some(1), None, Some(3)])
        })),
    ]
}

fn tensor_error(e: ModelError) -> TensorError {
    match e {
        ModelError::Tensor(t) => t,
        other => panic!("{other}"),
    }
}

/// Two message-passing steps on a batch of two molecules.
pub fn encoder_check() -> GradCheck {
    let mut store = ParameterStore::new(Precision::F64);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let enc = Encoder::new(&mut store, "enc", ATOM_FEATURES, 3, 2, &mut rng).unwrap();
    // Non-zero biases so their gradients are exercised away from zero.
    for name in ["z_bias", "r_bias", "h_bias", "out_bias"] {
        let id = store.id(&format!("enc.{name}")).unwrap();
        store.value_mut(id).data_mut().copy_from_slice(&[0.1, -0.2, 0.05]);
    }
    let a = parse_smiles("CC(=O)OCC").unwrap();
    let b = parse_smiles("c1ccccc1O").unwrap();
    let graphs: Vec<(&Molecule, Option<u8>)> = vec![(&a, None), (&b, None)];
    let batch = BatchedGraph::new(&graphs, false);
    let ids: Vec<ParamId> = store.ids().collect();
    check_gradients(&mut store, &ids, EPS, |tape| {
        let out = enc.encode(tape, &batch).map_err(tensor_error)?;
        let g = tape.tanh(out.graphs);
        let g = weighted_sum(tape, g)?;
        let bonds = weighted_sum(tape, out.bonds)?;
        let bonds = tape.scale(bonds, 0.01);
        tape.add(g, bonds)
    })
    .unwrap()
}

fn model_check(model: &GraphRetro, ids: &[ParamId], loss: impl Fn(&GraphRetro, &mut Tape) -> Var) -> GradCheck {
    let mut store = model.store.clone();
    check_gradients(&mut store, ids, EPS, |tape| Ok(loss(model, tape))).unwrap()
}

/// Edit loss through encoder, convolutions and scorers.
pub fn edit_head_check() -> GradCheck {
    let prep = super::prepared(60, 4);
    let exs = super::examples(&prep, None);
    let batch: Vec<&Example> = exs.iter().filter(|e| e.is_single_edit()).take(2).collect();
    let m = GraphRetro::new(super::tiny_config(), prep.vocab.clone()).unwrap();
    model_check(&m, &m.edit_params(), |m, tape| m.edit_loss(tape, &batch).unwrap())
}

/// Teacher-forced leaving-group loss over records with at least two
/// components, so the previous-token input is exercised.
pub fn completion_check() -> GradCheck {
    let prep = super::prepared(60, 5);
    let exs = super::examples(&prep, None);
    let batch: Vec<&Example> = exs.iter().filter(|e| e.order.len() >= 2 && e.labels_known()).take(2).collect();
    assert_eq!(batch.len(), 2);
    let m = GraphRetro::new(super::tiny_config(), prep.vocab.clone()).unwrap();
    model_check(&m, &m.synthon_params(), |m, tape| m.synthon_loss(tape, &batch).unwrap())
}

/// Sequential edit loss on a two-edit record.
pub fn multi_edit_check() -> GradCheck {
    let prep = super::prepared(200, 6);
    let exs = super::examples(&prep, None);
    let batch: Vec<&Example> = exs.iter().filter(|e| e.edits.len() == 2).take(1).collect();
    assert_eq!(batch.len(), 1);
    let config = TrainConfig {
        multi_edit: true,
        ..super::tiny_config()
    };
    let m = GraphRetro::new(config, prep.vocab.clone()).unwrap();
    model_check(&m, &m.edit_params(), |m, tape| m.edit_loss(tape, &batch).unwrap())
}
