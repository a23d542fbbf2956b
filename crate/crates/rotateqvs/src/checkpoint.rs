//! Checkpoint files: a short text header followed by the raw tables.
//!
//! ```text
//! rotateqvs-checkpoint 1
//! n_entities=7128
//! n_relations=230
//! n_timestamps=365
//! k=100
//! score_agg=l1
//! seed=0
//! epoch=150
//! granularity=1
//! end
//! ```
//!
//! After the `end` line come little-endian `f64` values: entity channels
//! a, b, c, d, then relation a, b, c, d, then time a, b, c, d. Each channel
//! holds `rows * k` values, row-major.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rotateqvs_core::model::EmbeddingTable;
use rotateqvs_core::{ModelParams, ScoreAgg};

use crate::error::{Error, IoContext, Result};

const MAGIC: &str = "rotateqvs-checkpoint 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_timestamps: usize,
    pub k: usize,
    pub score_agg: ScoreAgg,
    pub seed: u64,
    pub epoch: usize,
    pub granularity: usize,
}

impl Header {
    pub fn of(params: &ModelParams, seed: u64, epoch: usize, granularity: usize) -> Header {
        Header {
            n_entities: params.n_entities(),
            n_relations: params.n_relations(),
            n_timestamps: params.n_timestamps(),
            k: params.k(),
            score_agg: params.score_agg,
            seed,
            epoch,
            granularity,
        }
    }

    fn text(&self) -> String {
        format!(
            "{MAGIC}\nn_entities={}\nn_relations={}\nn_timestamps={}\nk={}\nscore_agg={}\nseed={}\nepoch={}\ngranularity={}\nend\n",
            self.n_entities,
            self.n_relations,
            self.n_timestamps,
            self.k,
            self.score_agg,
            self.seed,
            self.epoch,
            self.granularity
        )
    }

    /// Fails with `ShapeMismatch` unless the table sizes equal the counts
    /// of a dataset vocabulary.
    pub fn check_shape(&self, n_entities: usize, n_relations: usize, n_timestamps: usize) -> Result<()> {
        let got = (self.n_entities, self.n_relations, self.n_timestamps);
        let want = (n_entities, n_relations, n_timestamps);
        if got != want {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has (entities, relations, timestamps) = {got:?}, dataset has {want:?}"
            )));
        }
        Ok(())
    }
}

/// Serialize to bytes.
pub fn to_bytes(params: &ModelParams, header: &Header) -> Vec<u8> {
    let mut out = header.text().into_bytes();
    for table in [&params.entity, &params.relation, &params.time] {
        for channel in table.channels() {
            for v in channel {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_checkpoint(path: &Path, params: &ModelParams, header: &Header) -> Result<()> {
    let bytes = to_bytes(params, header);
    // write then rename so a crash never leaves a truncated checkpoint
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = BufWriter::new(fs::File::create(&tmp).at(&tmp)?);
        f.write_all(&bytes).at(&tmp)?;
        f.flush().at(&tmp)?;
    }
    fs::rename(&tmp, path).at(path)
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::Checkpoint { path: path.to_path_buf(), reason: reason.into() }
}

/// Parse bytes produced by [`to_bytes`]; `path` is only used in errors.
pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<(Header, ModelParams)> {
    let mut pos = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad(path, "header is not terminated"))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| bad(path, "header is not UTF-8"))?;
        pos += nl + 1;
        if line == "end" {
            break;
        }
        lines.push(line);
        if lines.len() > 64 {
            return Err(bad(path, "header too long"));
        }
    }
    if lines.first() != Some(&MAGIC) {
        return Err(bad(path, "missing magic line"));
    }
    let field = |key: &str| -> Result<&str> {
        lines[1..]
            .iter()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| bad(path, format!("missing `{key}`")))
    };
    let num = |key: &str| -> Result<u64> {
        field(key)?.parse::<u64>().map_err(|_| bad(path, format!("`{key}` is not an integer")))
    };
    let header = Header {
        n_entities: num("n_entities")? as usize,
        n_relations: num("n_relations")? as usize,
        n_timestamps: num("n_timestamps")? as usize,
        k: num("k")? as usize,
        score_agg: field("score_agg")?.parse().map_err(|e: rotateqvs_core::Error| bad(path, e.to_string()))?,
        seed: num("seed")?,
        epoch: num("epoch")? as usize,
        granularity: num("granularity")? as usize,
    };

    let rows = header.n_entities + header.n_relations + header.n_timestamps;
    let expected = rows
        .checked_mul(header.k)
        .and_then(|n| n.checked_mul(4 * 8))
        .ok_or_else(|| bad(path, "table sizes overflow"))?;
    let body = &bytes[pos..];
    if body.len() != expected {
        return Err(bad(path, format!("expected {expected} bytes of tables, found {}", body.len())));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut table = |n_rows: usize| -> Result<EmbeddingTable> {
        let n = n_rows * header.k;
        let mut channel = || values.by_ref().take(n).collect::<Vec<f64>>();
        let channels = [channel(), channel(), channel(), channel()];
        Ok(EmbeddingTable::from_channels(n_rows, header.k, channels)?)
    };
    let entity = table(header.n_entities)?;
    let relation = table(header.n_relations)?;
    let time = table(header.n_timestamps)?;
    Ok((header, ModelParams { entity, relation, time, score_agg: header.score_agg }))
}

pub fn read_checkpoint(path: &Path) -> Result<(Header, ModelParams)> {
    let mut bytes = Vec::new();
    fs::File::open(path).at(path)?.read_to_end(&mut bytes).at(path)?;
    from_bytes(&bytes, path)
}
