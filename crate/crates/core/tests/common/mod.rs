#![allow(dead_code)]

pub mod grad;

use graphretro::corpus;
use graphretro::pipeline::{Example, TrainConfig};
use graphretro::reaction::dataset::{preprocess, Prepared, Split};
use graphretro::tensor::Precision;

/// Small dimensions so full-model tests stay fast.
pub fn tiny_config() -> TrainConfig {
    TrainConfig {
        hidden: 8,
        mpn_steps: 2,
        conv_filters: vec![8, 6],
        kernel: 3,
        edit_hidden: 8,
        embed_dim: 6,
        lg_hidden: 8,
        dropout: 0.0,
        batch_size: 8,
        precision: Precision::F64,
        ..TrainConfig::default()
    }
}

pub fn prepared(n: usize, seed: u64) -> Prepared {
    preprocess(&corpus::generate(n, seed), [0.8, 0.1, 0.1], seed)
}

pub fn examples(prep: &Prepared, split: Option<Split>) -> Vec<Example> {
    prep.records
        .iter()
        .filter(|r| split.is_none_or(|s| r.split == s))
        .map(|r| Example::from_record(r, &prep.vocab).unwrap())
        .collect()
}

/// Dimensions used for the memorisation check.
pub fn overfit_config() -> TrainConfig {
    TrainConfig {
        hidden: 64,
        mpn_steps: 3,
        conv_filters: vec![64, 32],
        kernel: 3,
        edit_hidden: 64,
        embed_dim: 32,
        lg_hidden: 64,
        dropout: 0.0,
        batch_size: 8,
        ..TrainConfig::default()
    }
}
