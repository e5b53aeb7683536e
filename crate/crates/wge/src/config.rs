//! Run configuration as flat `key = value` text.
//!
//! Sources apply in order: defaults, config file, `WGE_*` environment
//! variables, then command-line overrides. Unknown keys are errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use wge_core::dataset::Split;
use wge_core::encoder::{Activation, Variant};
use wge_core::train::TrainConfig;

pub const ENV_PREFIX: &str = "WGE_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value `{value}` for `{key}`: {reason}")]
    BadValue { origin: String, key: String, value: String, reason: String },
    #[error("{origin}: expected `key = value`, got `{line}`")]
    Syntax { origin: String, line: String },
    #[error(transparent)]
    Invalid(#[from] wge_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { dataset_dir: PathBuf::from("data"), out_dir: PathBuf::from("runs"), train: TrainConfig::default() }
    }
}

/// Every recognized key, in the order used by [`RunConfig::to_text`].
pub const KEYS: [&str; 17] = [
    "dataset_dir",
    "out_dir",
    "variant",
    "seed",
    "epochs",
    "batch_size",
    "lr",
    "negatives",
    "filter_negatives",
    "beta",
    "layers",
    "dim",
    "alpha0",
    "activation",
    "eval_every",
    "patience",
    "selection_split",
];

impl RunConfig {
    /// Sets one key from its text form. `origin` labels errors.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            origin: origin.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        fn num<T: std::str::FromStr>(v: &str, bad: impl Fn(&str) -> ConfigError) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| bad(&e.to_string()))
        }
        let t = &mut self.train;
        match key {
            "dataset_dir" => self.dataset_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "variant" => t.variant = Variant::from_name(value).ok_or_else(|| bad(&variant_choices()))?,
            "seed" => t.seed = num(value, bad)?,
            "epochs" => t.epochs = num(value, bad)?,
            "batch_size" => t.batch_size = num(value, bad)?,
            "lr" => t.lr = num(value, bad)?,
            "negatives" => t.negatives = num(value, bad)?,
            "filter_negatives" => t.filter_negatives = num(value, bad)?,
            "beta" => t.beta = num(value, bad)?,
            "layers" => t.layers = num(value, bad)?,
            "dim" => t.dim = num(value, bad)?,
            "alpha0" => t.alpha0 = num(value, bad)?,
            "activation" => t.activation = Activation::from_name(value).ok_or_else(|| bad("expected tanh or relu"))?,
            "eval_every" => t.eval_every = num(value, bad)?,
            "patience" => {
                t.patience = match value {
                    "none" => None,
                    v => Some(num(v, bad)?),
                }
            }
            "selection_split" => {
                t.selection_split = Split::from_name(value).ok_or_else(|| bad("expected train, valid or test"))?
            }
            _ => return Err(ConfigError::UnknownKey { origin: origin.to_string(), key: key.to_string() }),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let here = format!("{origin}:{}", n + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { origin: here.clone(), line: line.to_string() })?;
            self.set(k.trim(), v.trim(), &here)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|cause| ConfigError::Io { path: path.to_path_buf(), cause })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies `WGE_<KEY>` variables, e.g. `WGE_LR=0.001`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (k, v) in vars {
            let key = k[ENV_PREFIX.len()..].to_ascii_lowercase();
            self.set(&key, &v, &format!("environment variable {k}"))?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides given on the command line.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<(), ConfigError> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { origin: "command line".into(), line: p.clone() })?;
            self.set(k.trim(), v.trim(), "command line")?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Ok(self.train.validate()?)
    }

    /// Resolved configuration; parsing it back gives the same value.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let mut out = String::new();
        for key in KEYS {
            let value = match key {
                "dataset_dir" => self.dataset_dir.display().to_string(),
                "out_dir" => self.out_dir.display().to_string(),
                "variant" => t.variant.name().to_string(),
                "seed" => t.seed.to_string(),
                "epochs" => t.epochs.to_string(),
                "batch_size" => t.batch_size.to_string(),
                "lr" => t.lr.to_string(),
                "negatives" => t.negatives.to_string(),
                "filter_negatives" => t.filter_negatives.to_string(),
                "beta" => t.beta.to_string(),
                "layers" => t.layers.to_string(),
                "dim" => t.dim.to_string(),
                "alpha0" => t.alpha0.to_string(),
                "activation" => t.activation.name().to_string(),
                "eval_every" => t.eval_every.to_string(),
                "patience" => t.patience.map_or("none".to_string(), |p| p.to_string()),
                "selection_split" => t.selection_split.name().to_string(),
                _ => unreachable!("every key is listed"),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text, origin)?;
        Ok(c)
    }
}

fn variant_choices() -> String {
    let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
    format!("expected one of {}", names.join(", "))
}
