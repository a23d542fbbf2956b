//! Flat `key=value` config files. Keys are the long flag names without
//! the leading dashes, e.g. `neg-ratio=10`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rotateqvs_core::TrainConfig;

use crate::error::{Error, IoContext, Result};

/// Keys accepted in a config file, in the order they are written back.
pub const KEYS: [&str; 10] =
    ["dim", "lr", "margin", "neg-ratio", "granularity", "epochs", "batch-size", "valid-every", "seed", "score-agg"];

/// Parse `key=value` lines. `#` starts a comment; blank lines are ignored.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    parse(&fs::read_to_string(path).at(path)?)
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

/// Set one field of `cfg` from its key.
pub fn set(cfg: &mut TrainConfig, key: &str, v: &str) -> Result<()> {
    match key {
        "dim" => cfg.dim = value(key, v)?,
        "lr" => cfg.lr = value(key, v)?,
        "margin" => cfg.margin = value(key, v)?,
        "neg-ratio" => cfg.neg_ratio = value(key, v)?,
        "granularity" => cfg.granularity = value(key, v)?,
        "epochs" => cfg.epochs = value(key, v)?,
        "batch-size" => cfg.batch_size = value(key, v)?,
        "valid-every" => cfg.valid_every = value(key, v)?,
        "seed" => cfg.seed = value(key, v)?,
        "score-agg" => cfg.score_agg = v.parse()?,
        _ => return Err(Error::Config(format!("unknown key `{key}`"))),
    }
    Ok(())
}

pub fn apply(cfg: &mut TrainConfig, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        set(cfg, k, v)?;
    }
    Ok(())
}

/// `cfg` as key/value pairs, readable back by [`apply`].
pub fn to_pairs(cfg: &TrainConfig) -> Vec<(String, String)> {
    let values = [
        cfg.dim.to_string(),
        cfg.lr.to_string(),
        cfg.margin.to_string(),
        cfg.neg_ratio.to_string(),
        cfg.granularity.to_string(),
        cfg.epochs.to_string(),
        cfg.batch_size.to_string(),
        cfg.valid_every.to_string(),
        cfg.seed.to_string(),
        cfg.score_agg.to_string(),
    ];
    KEYS.iter().map(|k| k.to_string()).zip(values).collect()
}
