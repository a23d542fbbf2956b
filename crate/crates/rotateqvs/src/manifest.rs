//! `manifest.txt`: what was run, with which settings, and checksums of
//! everything it produced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{IoContext, Result};

pub const FILE_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Full command line as given.
    pub args: Vec<String>,
    pub config: Vec<(String, String)>,
    pub dataset: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub started: String,
    pub finished: Option<String>,
    /// `(file name relative to out_dir, sha256 hex)`.
    pub artifacts: Vec<(String, String)>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).at(path)?;
    let mut hex = String::with_capacity(64);
    for b in Sha256::digest(&bytes).iter() {
        let _ = write!(hex, "{b:02x}");
    }
    Ok(hex)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, out_dir: &Path) -> Self {
        RunManifest {
            command: command.into(),
            args,
            out_dir: out_dir.to_path_buf(),
            started: now(),
            ..Default::default()
        }
    }

    pub fn path(&self) -> PathBuf {
        self.out_dir.join(FILE_NAME)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "args={}", self.args.join(" "));
        if let Some(d) = &self.dataset {
            let _ = writeln!(s, "dataset={}", d.display());
        }
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        let _ = writeln!(s, "out={}", self.out_dir.display());
        let _ = writeln!(s, "started={}", self.started);
        if let Some(f) = &self.finished {
            let _ = writeln!(s, "finished={f}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k}={v}");
        }
        for (name, sum) in &self.artifacts {
            let _ = writeln!(s, "sha256.{name}={sum}");
        }
        s
    }

    pub fn write(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).at(&self.out_dir)?;
        let p = self.path();
        fs::write(&p, self.to_text()).at(p)
    }

    /// Record checksums of `names` (relative to the output directory),
    /// stamp the finish time and rewrite the file.
    pub fn finish(&mut self, names: &[&str]) -> Result<()> {
        for name in names {
            let sum = sha256_file(&self.out_dir.join(name))?;
            self.artifacts.push((name.to_string(), sum));
        }
        self.finished = Some(now());
        self.write()
    }
}
