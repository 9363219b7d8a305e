use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::tensor::Precision;

use super::PipelineError;

/// How the two models relate during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Independent encoders, losses and optimizer schedules.
    Separate,
    /// One encoder trained on a weighted sum of both losses.
    Shared,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Separate => "separate",
            Mode::Shared => "shared",
        }
    }
}

/// Every setting that shapes a trained model. Serialized as `key=value`
/// lines; see [`TrainConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub lambda_edit: f64,
    pub lambda_synthon: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub plateau_factor: f64,
    pub patience: usize,
    pub mpn_steps: usize,
    pub hidden: usize,
    pub conv_filters: Vec<usize>,
    pub kernel: usize,
    pub edit_hidden: usize,
    pub embed_dim: usize,
    pub lg_hidden: usize,
    pub dropout: f64,
    pub use_class: bool,
    pub multi_edit: bool,
    pub max_edit_steps: usize,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Separate,
            lambda_edit: 1.0,
            lambda_synthon: 2.0,
            lr: 0.001,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            clip_norm: 20.0,
            plateau_factor: 0.9,
            patience: 5,
            mpn_steps: 10,
            hidden: 300,
            conv_filters: vec![600, 300, 150],
            kernel: 5,
            edit_hidden: 300,
            embed_dim: 200,
            lg_hidden: 300,
            dropout: 0.2,
            use_class: false,
            multi_edit: false,
            max_edit_steps: 6,
            precision: Precision::F32,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .parse()
        .map_err(|_| PipelineError::Config(format!("bad value '{value}' for '{key}'")))
}

impl TrainConfig {
    /// Recognised keys, in serialization order.
    pub const KEYS: [&'static str; 22] = [
        "mode",
        "lambda_edit",
        "lambda_synthon",
        "lr",
        "epochs",
        "batch_size",
        "seed",
        "clip_norm",
        "plateau_factor",
        "patience",
        "mpn_steps",
        "hidden",
        "conv_filters",
        "kernel",
        "edit_hidden",
        "embed_dim",
        "lg_hidden",
        "dropout",
        "use_class",
        "multi_edit",
        "max_edit_steps",
        "precision",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let value = value.trim();
        match key.trim() {
            "mode" => {
                self.mode = match value {
                    "separate" => Mode::Separate,
                    "shared" => Mode::Shared,
                    _ => return Err(PipelineError::Config(format!("unknown mode '{value}'"))),
                }
            }
            "lambda_edit" => self.lambda_edit = parse(key, value)?,
            "lambda_synthon" => self.lambda_synthon = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "plateau_factor" => self.plateau_factor = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "mpn_steps" => self.mpn_steps = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "conv_filters" => {
                self.conv_filters = if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_, _>>()?
                }
            }
            "kernel" => self.kernel = parse(key, value)?,
            "edit_hidden" => self.edit_hidden = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "lg_hidden" => self.lg_hidden = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "use_class" => self.use_class = parse(key, value)?,
            "multi_edit" => self.multi_edit = parse(key, value)?,
            "max_edit_steps" => self.max_edit_steps = parse(key, value)?,
            "precision" => {
                self.precision = Precision::from_name(value)
                    .ok_or_else(|| PipelineError::Config(format!("unknown precision '{value}'")))?
            }
            other => return Err(PipelineError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply(&mut self, assignment: &str) -> Result<(), PipelineError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("expected key=value, got '{assignment}'")))?;
        self.set(k, v)
    }

    /// Defaults overridden by the file's lines. Blank lines and `#` comments
    /// are ignored.
    pub fn from_text(text: &str) -> Result<TrainConfig, PipelineError> {
        let mut config = TrainConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap().trim();
            if !line.is_empty() {
                config.apply(line)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.mode == Mode::Shared && !(self.lambda_edit > 0.0 && self.lambda_synthon > 0.0) {
            return fail("shared mode needs positive loss weights");
        }
        if self.batch_size == 0 || self.hidden == 0 || self.embed_dim == 0 {
            return fail("batch_size, hidden and embed_dim must be positive");
        }
        if self.kernel.is_multiple_of(2) {
            return fail("kernel must be odd");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must be in [0, 1)");
        }
        if !(self.lr > 0.0 && self.clip_norm > 0.0 && self.plateau_factor > 0.0) {
            return fail("lr, clip_norm and plateau_factor must be positive");
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "mode" => self.mode.name().to_string(),
            "lambda_edit" => self.lambda_edit.to_string(),
            "lambda_synthon" => self.lambda_synthon.to_string(),
            "lr" => self.lr.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "seed" => self.seed.to_string(),
            "clip_norm" => self.clip_norm.to_string(),
            "plateau_factor" => self.plateau_factor.to_string(),
            "patience" => self.patience.to_string(),
            "mpn_steps" => self.mpn_steps.to_string(),
            "hidden" => self.hidden.to_string(),
            "conv_filters" => self.conv_filters.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","),
            "kernel" => self.kernel.to_string(),
            "edit_hidden" => self.edit_hidden.to_string(),
            "embed_dim" => self.embed_dim.to_string(),
            "lg_hidden" => self.lg_hidden.to_string(),
            "dropout" => self.dropout.to_string(),
            "use_class" => self.use_class.to_string(),
            "multi_edit" => self.multi_edit.to_string(),
            "max_edit_steps" => self.max_edit_steps.to_string(),
            "precision" => self.precision.name().to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Hex SHA-256 of the serialized form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in Self::KEYS {
            writeln!(f, "{key}={}", self.value_of(key))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.lambda_edit, c.lambda_synthon), (1.0, 2.0));
        assert_eq!(c.epochs, 100);
        assert_eq!(c.conv_filters, vec![600, 300, 150]);
        assert_eq!((c.kernel, c.hidden, c.mpn_steps), (5, 300, 10));
        assert_eq!((c.embed_dim, c.lg_hidden, c.dropout), (200, 300, 0.2));
        assert_eq!((c.clip_norm, c.plateau_factor, c.lr), (20.0, 0.9, 0.001));
    }

    #[test]
    fn text_round_trip_and_hash() {
        let mut c = TrainConfig::default();
        c.apply("mode=shared").unwrap();
        c.apply("conv_filters=8,4").unwrap();
        let back = TrainConfig::from_text(&c.to_string()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(c.hash(), TrainConfig::default().hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn bad_input() {
        assert!(TrainConfig::from_text("nope=1").is_err());
        assert!(TrainConfig::from_text("epochs=x").is_err());
        assert!(TrainConfig::from_text("kernel=4").is_err());
        assert!(TrainConfig::from_text("mode=shared\nlambda_edit=0").is_err());
        let c = TrainConfig::from_text("# comment\n\nseed=7 # trailing\n").unwrap();
        assert_eq!(c.seed, 7);
    }
}
