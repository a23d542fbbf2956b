//! Tab-separated quadruple files and vocabulary construction.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rotateqvs_core::dataset::{Labels, TimeIndex};
use rotateqvs_core::{Dataset, Quadruple, Vocabulary};

use crate::error::{Error, IoContext, Result};

/// How the time column(s) of a file are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    /// One ISO `YYYY-MM-DD` column.
    Date,
    /// One integer year column.
    Year,
    /// Begin and end columns (`YYYY-MM-DD` with `#` for unknown digits);
    /// only the begin year is kept.
    Interval,
}

impl TimeMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TimeMode::Date => "date",
            TimeMode::Year => "year",
            TimeMode::Interval => "interval",
        }
    }

    /// Interval files for YAGO-style datasets, dates otherwise.
    pub fn for_dataset(name: &str) -> TimeMode {
        if name.to_ascii_lowercase().starts_with("yago") {
            TimeMode::Interval
        } else {
            TimeMode::Date
        }
    }

    /// Chronological sort key of a label produced in this mode.
    pub fn sort_key(&self, label: &str) -> Option<i64> {
        match self {
            TimeMode::Date => parse_date(label).map(|d| d.num_days_from_ce() as i64),
            TimeMode::Year | TimeMode::Interval => parse_year(label),
        }
    }
}

impl FromStr for TimeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "date" => Ok(TimeMode::Date),
            "year" => Ok(TimeMode::Year),
            "interval" => Ok(TimeMode::Interval),
            _ => Err(format!("unknown time mode `{s}` (expected date, year or interval)")),
        }
    }
}

/// One fact with its original string fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub time: String,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn parse_year(s: &str) -> Option<i64> {
    s.parse::<i64>().ok()
}

/// Year of an interval bound such as `1931-##-##`, `-0044-03-15` or `1931`.
fn interval_year(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let year = body.split('-').next()?;
    if year.is_empty() || !year.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let y: i64 = year.parse().ok()?;
    Some(if neg { -y } else { y })
}

fn parse_line(line: &str, mode: TimeMode) -> std::result::Result<RawFact, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    let expected = match mode {
        TimeMode::Date | TimeMode::Year => 4,
        TimeMode::Interval => 5,
    };
    if cols.len() != expected {
        return Err(format!("expected {expected} tab-separated columns, found {}", cols.len()));
    }
    let time = match mode {
        TimeMode::Date => {
            let d = parse_date(cols[3]).ok_or_else(|| format!("unparsable date `{}`", cols[3]))?;
            d.format("%Y-%m-%d").to_string()
        }
        TimeMode::Year => {
            parse_year(cols[3]).ok_or_else(|| format!("unparsable year `{}`", cols[3]))?.to_string()
        }
        TimeMode::Interval => {
            // an unknown begin falls back to the end of the interval
            interval_year(cols[3])
                .or_else(|| interval_year(cols[4]))
                .ok_or_else(|| format!("no usable year in `{}` / `{}`", cols[3], cols[4]))?
                .to_string()
        }
    };
    Ok(RawFact { head: cols[0].into(), relation: cols[1].into(), tail: cols[2].into(), time })
}

/// Parse quadruples from a reader. Blank lines are skipped; `name` is used
/// in error messages.
pub fn parse_quadruples<R: Read>(reader: R, mode: TimeMode, name: &Path) -> Result<Vec<RawFact>> {
    let mut facts = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.at(name)?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fact = parse_line(line, mode).map_err(|reason| Error::MalformedLine {
            path: name.to_path_buf(),
            line: i + 1,
            reason,
        })?;
        facts.push(fact);
    }
    Ok(facts)
}

pub fn parse_quadruple_file(path: &Path, mode: TimeMode) -> Result<Vec<RawFact>> {
    let file = fs::File::open(path).at(path)?;
    parse_quadruples(file, mode, path)
}

/// Path of split `name` inside `dir`: `name`, `name.txt` or `name.tsv`.
pub fn split_path(dir: &Path, name: &str) -> Result<PathBuf> {
    for candidate in [name.to_string(), format!("{name}.txt"), format!("{name}.tsv")] {
        let p = dir.join(candidate);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::Io {
        path: dir.join(name),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "split file not found"),
    })
}

/// Build the vocabulary over all three splits and encode them. Entities and
/// relations get ids in order of first appearance (train, valid, test);
/// time labels are sorted chronologically and binned by `granularity`.
pub fn encode(
    train: &[RawFact],
    valid: &[RawFact],
    test: &[RawFact],
    mode: TimeMode,
    granularity: usize,
) -> Result<Dataset> {
    let mut entities = Labels::new();
    let mut relations = Labels::new();
    let mut times: Vec<(i64, String)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for f in train.iter().chain(valid).chain(test) {
        entities.intern(&f.head);
        relations.intern(&f.relation);
        entities.intern(&f.tail);
        if seen.insert(f.time.as_str()) {
            let key = mode
                .sort_key(&f.time)
                .ok_or_else(|| Error::Config(format!("time label `{}` is not a {}", f.time, mode.as_str())))?;
            times.push((key, f.time.clone()));
        }
    }
    times.sort();
    let times = TimeIndex::from_sorted_labels(times.into_iter().map(|(_, l)| l).collect(), granularity)?;
    let vocab = Vocabulary { entities, relations, times };
    let enc = |facts: &[RawFact]| -> Vec<Quadruple> {
        facts
            .iter()
            .map(|f| {
                Quadruple::new(
                    vocab.entities.id(&f.head).unwrap(),
                    vocab.relations.id(&f.relation).unwrap(),
                    vocab.entities.id(&f.tail).unwrap(),
                    vocab.times.id(&f.time).unwrap(),
                )
            })
            .collect()
    };
    let (train, valid, test) = (enc(train), enc(valid), enc(test));
    Ok(Dataset { train, valid, test, vocab, granularity })
}

/// Load `train`, `valid` and `test` from `dir`.
pub fn load_dataset(dir: &Path, mode: TimeMode, granularity: usize) -> Result<Dataset> {
    if !dir.is_dir() {
        return Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        });
    }
    let train = parse_quadruple_file(&split_path(dir, "train")?, mode)?;
    let valid = parse_quadruple_file(&split_path(dir, "valid")?, mode)?;
    let test = parse_quadruple_file(&split_path(dir, "test")?, mode)?;
    encode(&train, &valid, &test, mode, granularity)
}

/// Decode one quadruple back to its labels. Time ids map to the first raw
/// label of their bin.
pub fn decode(vocab: &Vocabulary, q: &Quadruple) -> Option<RawFact> {
    Some(RawFact {
        head: vocab.entities.label(q.s)?.into(),
        relation: vocab.relations.label(q.r)?.into(),
        tail: vocab.entities.label(q.o)?.into(),
        time: vocab.times.label(q.t)?.into(),
    })
}

/// Write facts as four tab-separated columns.
pub fn write_quadruples(path: &Path, vocab: &Vocabulary, facts: &[Quadruple]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path).at(path)?);
    for q in facts {
        let f = decode(vocab, q).ok_or_else(|| {
            Error::Core(rotateqvs_core::Error::IdOutOfRange(format!("{q:?} not covered by vocabulary")))
        })?;
        writeln!(out, "{}\t{}\t{}\t{}", f.head, f.relation, f.tail, f.time).at(path)?;
    }
    out.flush().at(path)
}

/// Dump `entities.tsv`, `relations.tsv` and `times.tsv` as `id<TAB>label`
/// lines. Time lines list every raw label with the id of its bin.
pub fn write_vocab(dir: &Path, vocab: &Vocabulary) -> Result<()> {
    fs::create_dir_all(dir).at(dir)?;
    let dump = |name: &str, rows: &mut dyn Iterator<Item = (usize, &str)>| -> Result<()> {
        let path = dir.join(name);
        let mut out = std::io::BufWriter::new(fs::File::create(&path).at(&path)?);
        for (id, label) in rows {
            writeln!(out, "{id}\t{label}").at(&path)?;
        }
        out.flush().at(&path)
    };
    dump("entities.tsv", &mut vocab.entities.iter())?;
    dump("relations.tsv", &mut vocab.relations.iter())?;
    dump("times.tsv", &mut vocab.times.iter().map(|(l, id)| (id, l)))
}
