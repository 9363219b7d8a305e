//! Acceptance report: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use graphretro::corpus;
use graphretro::model::CandidateSpace;
use graphretro::molgraph::canonical_smiles;
use graphretro::pipeline::cli::predict_all;
use graphretro::pipeline::{
    beam_search, brute_force, ensure_mapped, evaluate_topn, parse_predictions, save_checkpoint, train_examples,
    write_predictions, Accuracy, Example, Mode, TrainConfig,
};
use graphretro::reaction::dataset::{extract, preprocess, Split};
use graphretro::reaction::{parse_reaction, AttachTable};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let took = start.elapsed();
    (took <= limit, format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let lines = corpus::all_reactions();
    let table = AttachTable::default();
    let ok = lines
        .iter()
        .filter(|l| {
            parse_reaction(l)
                .and_then(|p| extract(&p))
                .is_ok_and(|ex| ex.round_trips(&table))
        })
        .count();
    let (fast, time) = within(Duration::from_secs(10), start);
    outcome(lines.len() >= 200 && ok == lines.len() && fast, format!("{ok}/{} reactions reproduced, {time}", lines.len()))
}

fn canonical_stability() -> Outcome {
    let start = Instant::now();
    let mut mols = corpus::products();
    mols.sort_by_key(|m| std::cmp::Reverse(m.num_atoms()));
    mols.truncate(50);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut unstable = 0;
    for m in &mols {
        let mut seen = HashSet::new();
        for _ in 0..100 {
            let mut order: Vec<usize> = (0..m.num_atoms()).collect();
            order.shuffle(&mut rng);
            seen.insert(canonical_smiles(&m.permuted(&order), false));
        }
        unstable += usize::from(seen.len() != 1);
    }
    let (fast, time) = within(Duration::from_secs(10), start);
    outcome(
        mols.len() == 50 && unstable == 0 && fast,
        format!("{} molecules x 100 permutations, {unstable} with more than one string, {time}", mols.len()),
    )
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let mut reports = common::grad::primitive_checks();
    reports.push(("encoder T=2", common::grad::encoder_check()));
    reports.push(("edit head", common::grad::edit_head_check()));
    reports.push(("completion head", common::grad::completion_check()));
    reports.push(("multi-edit", common::grad::multi_edit_check()));
    let worst = reports
        .iter()
        .max_by(|a, b| a.1.max_rel_error.total_cmp(&b.1.max_rel_error))
        .unwrap();
    let scalars: usize = reports.iter().map(|r| r.1.checked).sum();
    let abs = reports.iter().map(|r| r.1.max_abs_error).fold(0.0, f64::max);
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| r.1.max_rel_error >= common::grad::TOL)
        .map(|r| r.0)
        .collect();
    let (fast, time) = within(Duration::from_secs(60), start);
    outcome(
        failing.is_empty() && fast,
        format!(
            "{} checks over {scalars} scalars, worst rel {:.2e} ({}), worst abs {abs:.2e}, failing {failing:?}, {time}",
            reports.len(),
            worst.1.max_rel_error,
            worst.0
        ),
    )
}

fn linear_candidates() -> Outcome {
    let mols = corpus::products();
    let mut wrong = 0;
    for m in &mols {
        let m = ensure_mapped(m);
        let space = CandidateSpace::new(&[&m], false).unwrap();
        wrong += usize::from(space.len() != 4 * m.num_bonds() + m.num_atoms());
    }
    outcome(wrong == 0, format!("{} products, {wrong} with a count other than 4M+N", mols.len()))
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let prep = common::prepared(400, 21);
    let subset: Vec<Example> = common::examples(&prep, Some(Split::Train))
        .into_iter()
        .filter(|e| e.is_single_edit() && e.labels_known())
        .take(32)
        .collect();
    let config = TrainConfig {
        epochs: 200,
        ..common::overfit_config()
    };
    let (model, report) = train_examples(config, prep.vocab.clone(), &subset, &[]).unwrap();
    let first = report
        .epochs
        .iter()
        .find(|e| e.accuracy.edit >= 0.95 && e.accuracy.group >= 0.95)
        .map(|e| e.epoch);
    let refs: Vec<&Example> = subset.iter().collect();
    let acc = Accuracy::measure(&model, &refs, 32).unwrap();
    let (fast, time) = within(Duration::from_secs(300), start);
    outcome(
        subset.len() == 32 && acc.edit >= 0.95 && acc.group >= 0.95 && first.is_some() && fast,
        format!(
            "edit {:.3} group {:.3} on {} reactions, first reached at epoch {first:?}, {time}",
            acc.edit,
            acc.group,
            subset.len()
        ),
    )
}

fn beam_exactness() -> Outcome {
    let start = Instant::now();
    let full = preprocess(&corpus::all_reactions(), [1.0, 0.0, 0.0], 0);
    let halides: HashSet<&str> = ["[Cl*]", "[Br*]"].into();
    let lines: Vec<String> = full
        .records
        .iter()
        .filter(|r| r.edits.len() == 1 && r.group_keys.iter().flatten().all(|k| halides.contains(k.as_str())))
        .map(|r| corpus::all_reactions()[r.line - 1].clone())
        .take(40)
        .collect();
    let prep = preprocess(&lines, [1.0, 0.0, 0.0], 0);
    let examples = common::examples(&prep, None);
    let config = TrainConfig {
        epochs: 5,
        ..common::tiny_config()
    };
    let (model, _) = train_examples(config, prep.vocab.clone(), &examples, &[]).unwrap();
    let selectable = prep.vocab.len() - 2;
    let mut compared = 0;
    let mut mismatches = 0;
    let mut max_components = 0;
    for e in examples.iter().take(6) {
        let product = ensure_mapped(&e.product);
        let edits = CandidateSpace::new(&[&product], false).unwrap().len();
        max_components = max_components.max(e.order.len());
        let n = edits * selectable.pow(e.order.len() as u32);
        let beam = beam_search(&model, &product, None, n).unwrap();
        let exact = brute_force(&model, &product, None).unwrap();
        compared += exact.len();
        let same = beam.len() == exact.len()
            && beam
                .iter()
                .zip(&exact)
                .all(|(a, b)| a.reactants == b.reactants && (a.score - b.score).abs() < 1e-6);
        mismatches += usize::from(!same);
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    outcome(
        mismatches == 0 && prep.vocab.len() <= 5 && max_components <= 3 && fast,
        format!(
            "vocab {}, up to {max_components} components, {compared} ranked candidates, {mismatches} products differ, {time}",
            prep.vocab.len()
        ),
    )
}

fn shared_contract() -> Outcome {
    let prep = common::prepared(120, 5);
    let train = common::examples(&prep, Some(Split::Train));
    let epochs = 2;
    let config = TrainConfig {
        mode: Mode::Shared,
        epochs,
        ..common::tiny_config()
    };
    let (lambda_e, lambda_s) = (config.lambda_edit, config.lambda_synthon);
    let (model, report) = train_examples(config, prep.vocab.clone(), &train, &[]).unwrap();
    let c = report.counters;
    let single = train.iter().filter(|e| e.is_single_edit()).count();
    let single_known = train.iter().filter(|e| e.is_single_edit() && e.labels_known()).count();
    let multi = train.len() - single;
    let objective_ok = report
        .epochs
        .iter()
        .all(|e| (e.total_loss - (lambda_e * e.edit_loss + lambda_s * e.synthon_loss)).abs() < 1e-9 * e.total_loss.abs().max(1.0));
    let edit_ids: HashSet<_> = model.edit_params().into_iter().collect();
    let shared_encoder = model.synthon_params().iter().filter(|id| edit_ids.contains(id)).count();
    let pass = (lambda_e, lambda_s) == (1.0, 2.0)
        && multi > 0
        && c.synthon_multi_edit_examples == 0
        && c.synthon_examples == epochs * single_known
        && c.edit_examples == epochs * single
        && objective_ok
        && shared_encoder > 0;
    outcome(
        pass,
        format!(
            "weights ({lambda_e}, {lambda_s}), synthon examples {} of which multi-edit {}, {multi} multi-edit records withheld per epoch, objective matches {objective_ok}, {shared_encoder} shared encoder tensors",
            c.synthon_examples, c.synthon_multi_edit_examples
        ),
    )
}

fn determinism() -> Outcome {
    let prep = common::prepared(60, 9);
    let train = common::examples(&prep, Some(Split::Train));
    let inputs: Vec<(String, String, Option<u8>)> = prep
        .records
        .iter()
        .filter(|r| r.split != Split::Train)
        .map(|r| {
            let s = graphretro::molgraph::write_smiles(&r.product, true, true);
            (s.clone(), s, None)
        })
        .collect();
    let config = TrainConfig {
        epochs: 3,
        dropout: 0.2,
        precision: graphretro::tensor::Precision::F32,
        ..common::tiny_config()
    };
    let run = |threads: usize| {
        let (model, _) = train_examples(config.clone(), prep.vocab.clone(), &train, &[]).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let preds = pool.install(|| write_predictions(&predict_all(&model, &inputs, 5)));
        (save_checkpoint(&model), preds)
    };
    let (ck1, p1) = run(1);
    let (ck2, p2) = run(1);
    let (_, p4) = run(4);
    outcome(
        ck1 == ck2 && p1 == p2 && p1 == p4,
        format!(
            "checkpoints {} bytes identical {}, prediction files identical {} (1 vs 4 threads {})",
            ck1.len(),
            ck1 == ck2,
            p1 == p2,
            p1 == p4
        ),
    )
}

fn evaluation_semantics() -> Outcome {
    // Truth at ranks 1, 3, 7, 50 and 51, a malformed line, an empty block,
    // and a hit written with atom maps.
    let mut text = String::new();
    let mut block = |input: &str, hit_rank: Option<usize>, len: usize| {
        text.push_str(input);
        text.push('\n');
        for r in 1..=len {
            let smiles = if Some(r) == hit_rank { "[CH3:1][C:2](=[O:3])[OH:4].[CH3:5][NH2:6]".to_string() } else { format!("C{}", "C".repeat(r)) };
            text.push_str(&format!("{r}\t{}\t{smiles}\n", -(r as f64)));
        }
        text.push('\n');
    };
    block("p1", Some(1), 5);
    block("p2", Some(3), 5);
    block("p3", Some(7), 10);
    block("p4", Some(50), 50);
    block("p5", Some(51), 60);
    block("p6", None, 0);
    text.push_str("p7\n1\tnot-a-number\tCC(=O)O.CN\n\n");
    let truth = vec!["CN.CC(O)=O".to_string(); 7];
    let blocks = parse_predictions(&text);
    let report = evaluate_topn(&blocks, &truth, &[1, 3, 5, 10, 50]);
    let got: Vec<f64> = report.rows.iter().map(|r| r.1).collect();
    let expected: Vec<f64> = [1.0, 2.0, 2.0, 3.0, 4.0].iter().map(|h| h / 7.0).collect();
    outcome(got == expected, format!("top-(1,3,5,10,50) {got:.4?} expected {expected:.4?}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("round-trip on the fixture corpus", round_trip),
        ("canonicalization stability", canonical_stability),
        ("gradient checks", gradient_checks),
        ("edit candidates are 4M+N", linear_candidates),
        ("overfit sanity", overfit),
        ("beam exactness against brute force", beam_exactness),
        ("shared-mode contract", shared_contract),
        ("determinism", determinism),
        ("evaluation semantics", evaluation_semantics),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
