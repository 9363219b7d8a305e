mod common;

use std::sync::OnceLock;

use graphretro::pipeline::cli::run;
use graphretro::pipeline::{
    beam_search, complete_synthons, greedy, load_checkpoint, save_checkpoint, train_examples, Example, GraphRetro,
    PipelineError, Prediction, TrainConfig, CHECKPOINT_VERSION,
};
use graphretro::reaction::dataset::{ordered_synthons, Split};
use graphretro::reaction::START;

struct Fixture {
    model: GraphRetro,
    test: Vec<Example>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let prep = common::prepared(80, 11);
        let train = common::examples(&prep, Some(Split::Train));
        let test = common::examples(&prep, Some(Split::Test));
        let config = TrainConfig {
            epochs: 8,
            ..common::tiny_config()
        };
        let (model, _) = train_examples(config, prep.vocab.clone(), &train, &[]).unwrap();
        Fixture { model, test }
    })
}

/// Edit log-likelihood plus each chosen group's log-likelihood, recomputed
/// from the prediction's recorded choices.
fn rescore(model: &GraphRetro, e: &Example, p: &Prediction) -> f64 {
    let edit = model
        .top_edits(&e.product, e.class, usize::MAX)
        .unwrap()
        .into_iter()
        .find(|(set, _)| *set == p.edits)
        .unwrap()
        .1;
    let (synthons, order) = ordered_synthons(&e.product, &p.edits).unwrap();
    let (prod, comps) = model.completion_inputs(&e.product, &synthons, &order, e.class).unwrap();
    let mut total = edit;
    let mut previous = START;
    for (c, &t) in p.tokens.iter().enumerate() {
        let lp = model.group_log_probs(&prod, &comps, &[(c, previous)]).unwrap();
        total += lp.get(0, t);
        previous = t;
    }
    total
}

#[test]
fn predictions_are_ranked_and_rescorable() {
    let f = fixture();
    for e in f.test.iter().take(6) {
        let preds = beam_search(&f.model, &e.product, e.class, 10).unwrap();
        assert!(!preds.is_empty() && preds.len() <= 10);
        for (i, p) in preds.iter().enumerate() {
            assert_eq!(p.rank, i + 1);
            assert!((rescore(&f.model, e, p) - p.score).abs() < 1e-6);
        }
        assert!(preds.windows(2).all(|w| w[0].score >= w[1].score));
        let mut names: Vec<&str> = preds.iter().map(|p| p.reactants.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), preds.len());
    }
}

#[test]
fn width_one_beam_is_the_greedy_composition() {
    let f = fixture();
    for e in f.test.iter().take(6) {
        let beam = greedy(&f.model, &e.product, e.class).unwrap();
        let (edits, edit_lp) = f.model.top_edits(&e.product, e.class, 1).unwrap().remove(0);
        let (synthons, order) = ordered_synthons(&e.product, &edits).unwrap();
        let done = complete_synthons(&f.model, &e.product, &synthons, &order, e.class, 1).unwrap();
        match (beam.first(), done.first()) {
            (Some(b), Some(c)) => {
                assert_eq!(b.edits, edits);
                assert_eq!(b.tokens, c.tokens);
                assert_eq!(b.reactants, c.reactants);
                assert!((b.score - (edit_lp + c.log_prob)).abs() < 1e-9);
            }
            (None, None) => {}
            other => panic!("beam and composition disagree: {other:?}"),
        }
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let f = fixture();
    let bytes = save_checkpoint(&f.model);
    let loaded = load_checkpoint(&bytes).unwrap();
    assert_eq!(save_checkpoint(&loaded), bytes);
    for e in f.test.iter().take(4) {
        assert_eq!(
            beam_search(&f.model, &e.product, e.class, 5).unwrap(),
            beam_search(&loaded, &e.product, e.class, 5).unwrap()
        );
    }
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let bytes = save_checkpoint(&fixture().model);
    let mut wrong_version = bytes.clone();
    wrong_version[4..8].copy_from_slice(&(CHECKPOINT_VERSION + 1).to_le_bytes());
    let err = load_checkpoint(&wrong_version).unwrap_err();
    assert!(matches!(err, PipelineError::Checkpoint(_)));
    assert_eq!(err.exit_code(), 2);
    assert!(load_checkpoint(&bytes[..bytes.len() / 2]).is_err());
    assert!(load_checkpoint(b"not a model").is_err());
}

#[test]
fn exploding_training_reports_the_batch() {
    let prep = common::prepared(40, 3);
    let train = common::examples(&prep, Some(Split::Train));
    let config = TrainConfig {
        lr: 1e300,
        epochs: 3,
        ..common::tiny_config()
    };
    let err = train_examples(config, prep.vocab.clone(), &train, &[]).unwrap_err();
    assert!(matches!(err, PipelineError::NonFiniteLoss { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("graphretro").chain(args.iter().copied()))
}

#[test]
fn cli_end_to_end_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    assert_eq!(cli(&["corpus", "--n", "60", "--seed", "2", "--output", &p("rx.txt")]), 0);
    assert_eq!(cli(&["preprocess", "--input", &p("rx.txt"), "--out-dir", &p("data")]), 0);
    for f in ["vocab.txt", "records.tsv", "stats.tsv"] {
        assert!(dir.path().join("data").join(f).exists());
    }
    std::fs::write(p("small.cfg"), "hidden=8\nmpn_steps=2\nconv_filters=8\nkernel=3\nedit_hidden=8\nembed_dim=4\nlg_hidden=8\n").unwrap();
    let train = |out: &str| {
        cli(&[
            "train", "--records", &p("data/records.tsv"), "--vocab", &p("data/vocab.txt"), "--config", &p("small.cfg"),
            "--set", "epochs=2", "--output", &p(out),
        ])
    };
    assert_eq!(train("m.ck"), 0);
    let predict = |out: &str| {
        cli(&["predict", "--checkpoint", &p("m.ck"), "--records", &p("data/records.tsv"), "--beam", "3", "--output", &p(out)])
    };
    assert_eq!(predict("p.txt"), 0);
    let text = std::fs::read_to_string(p("p.txt")).unwrap();
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let ranks: Vec<usize> = block.lines().skip(1).map(|l| l.split('\t').next().unwrap().parse().unwrap()).collect();
        assert!(ranks.len() <= 3);
        assert_eq!(ranks, (1..=ranks.len()).collect::<Vec<_>>());
    }
    assert_eq!(cli(&["evaluate", "--predictions", &p("p.txt"), "--records", &p("data/records.tsv"), "--checkpoint", &p("m.ck")]), 0);
    assert_eq!(cli(&["stats", "--records", &p("data/records.tsv")]), 0);

    // Plain product input, with a class column and a reaction line.
    std::fs::write(p("in.txt"), "CCOC(C)=O\nCC(=O)NC\t2\nCC(=O)Cl.NC>>CC(=O)NC\n").unwrap();
    assert_eq!(cli(&["predict", "--checkpoint", &p("m.ck"), "--input", &p("in.txt"), "--output", &p("q.txt")]), 0);
    assert_eq!(std::fs::read_to_string(p("q.txt")).unwrap().matches("\n\n").count(), 3);

    assert_eq!(cli(&["train", "--bogus"]), 1);
    assert_eq!(cli(&["evaluate", "--predictions", &p("p.txt"), "--records", &p("data/records.tsv"), "--n", "x"]), 1);
    assert_eq!(cli(&["predict", "--checkpoint", &p("missing.ck"), "--input", &p("in.txt"), "--output", &p("r.txt")]), 2);
    assert_eq!(cli(&["predict", "--checkpoint", &p("in.txt"), "--input", &p("in.txt"), "--output", &p("r.txt")]), 2);
    let bad = [
        "train", "--records", &p("data/records.tsv"), "--vocab", &p("data/vocab.txt"), "--set", "no_such_key=1", "--output",
        &p("x.ck"),
    ];
    assert_eq!(cli(&bad), 1);
    let exploding = [
        "train", "--records", &p("data/records.tsv"), "--vocab", &p("data/vocab.txt"), "--config", &p("small.cfg"), "--set",
        "lr=1e300", "--output", &p("x.ck"),
    ];
    assert_eq!(cli(&exploding), 3);
}
