//! CSV outputs.

use std::fs;
use std::path::Path;

use rotateqvs_core::eval::{EvalReport, Metrics};
use rotateqvs_core::patterns::HistogramBin;
use rotateqvs_core::train::EpochRecord;

use crate::error::{IoContext, Result};

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path).at(path)?))
}

/// `epoch,mean_loss,valid_mrr` with an empty cell when validation did not run.
pub fn write_train_log(path: &Path, log: &[EpochRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["epoch", "mean_loss", "valid_mrr"])?;
    for r in log {
        w.write_record([
            r.epoch.to_string(),
            r.mean_loss.to_string(),
            r.valid_mrr.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().at(path)
}

fn metric_row(split: &str, side: &str, m: &Metrics) -> [String; 7] {
    [
        split.to_string(),
        side.to_string(),
        m.mrr.to_string(),
        m.hits1.to_string(),
        m.hits3.to_string(),
        m.hits10.to_string(),
        m.n_queries.to_string(),
    ]
}

pub const EVAL_HEADER: [&str; 7] = ["split", "side", "mrr", "hits1", "hits3", "hits10", "n_queries"];

/// One row each for the pooled, head and tail metrics.
pub fn write_eval(path: &Path, split: &str, report: &EvalReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(EVAL_HEADER)?;
    for (side, m) in [("all", &report.overall), ("head", &report.head), ("tail", &report.tail)] {
        w.write_record(metric_row(split, side, m))?;
    }
    w.flush().at(path)
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin_lo", "bin_hi", "positive_density", "negative_density"])?;
    for b in bins {
        w.write_record([
            b.lo.to_string(),
            b.hi.to_string(),
            b.positive_density.to_string(),
            b.negative_density.to_string(),
        ])?;
    }
    w.flush().at(path)
}

/// Generic table writer for the pattern diagnostics.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().at(path)
}
