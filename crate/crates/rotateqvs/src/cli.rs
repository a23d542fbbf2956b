//! The `rotateqvs` command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rotateqvs_core::check::{run_suite, Suite};
use rotateqvs_core::eval::evaluate_with;
use rotateqvs_core::patterns::{
    cosine_similarity, deduction_residuals, evolution_histogram, inversion_residual, real_part_magnitude,
    temporal_transport,
};
use rotateqvs_core::synth::{generate, SyntheticSpec};
use rotateqvs_core::train::{default_config, train_with, EpochRecord, TrainObserver};
use rotateqvs_core::{Dataset, EvalReport, Executor, ModelParams, Quadruple, ScoreAgg, Sequential, TrainConfig};

use crate::checkpoint::{read_checkpoint, write_checkpoint, Header};
use crate::error::Error;
use crate::loader::{load_dataset, write_quadruples, write_vocab, TimeMode};
use crate::manifest::RunManifest;
use crate::parallel::Rayon;
use crate::{config, report};

pub const CHECKPOINT: &str = "checkpoint.bin";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const EVAL: &str = "eval.csv";

#[derive(Debug, Parser)]
#[command(name = "rotateqvs", version, about = "Temporal knowledge graph embeddings with quaternion rotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train embeddings on a dataset directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint with time-wise filtered ranking.
    Eval(EvalArgs),
    /// Relation-pattern diagnostics on a trained checkpoint.
    Analyze(AnalyzeArgs),
    /// Run the built-in numerical self-checks.
    Check(CheckArgs),
    /// Generate a synthetic graph with planted relation patterns.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset name; selects default hyperparameters for known benchmarks.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Directory holding train/valid/test, or a parent of `<dataset>/`.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// How time columns are read (date, year or interval).
    #[arg(long, global = true)]
    pub time_mode: Option<TimeMode>,
    #[arg(long, global = true)]
    pub granularity: Option<usize>,
}

impl DataArgs {
    fn dir(&self) -> anyhow::Result<PathBuf> {
        let Some(base) = &self.data_dir else { bail!("--data-dir is required") };
        if !base.is_dir() {
            bail!("data directory {} does not exist", base.display());
        }
        if let Some(name) = &self.dataset {
            let nested = base.join(name);
            let has_train = |d: &Path| ["train", "train.txt", "train.tsv"].iter().any(|f| d.join(f).is_file());
            if !has_train(base) && has_train(&nested) {
                return Ok(nested);
            }
        }
        Ok(base.clone())
    }

    fn time_mode(&self) -> TimeMode {
        self.time_mode.unwrap_or_else(|| TimeMode::for_dataset(self.dataset.as_deref().unwrap_or("")))
    }

    fn load(&self, granularity: usize) -> anyhow::Result<(PathBuf, Dataset)> {
        let dir = self.dir()?;
        let ds = load_dataset(&dir, self.time_mode(), granularity)?;
        Ok((dir, ds))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Agg {
    L1,
    L2,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// `key=value` file layered between dataset defaults and flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub neg_ratio: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub valid_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub score_agg: Option<Agg>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Independent runs with seeds seed, seed+1, ...; each goes to `seed-<n>/`.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Valid,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Defaults to `eval/` next to the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Skip filtering of known facts (debugging only).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub what: Analysis,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to `analysis/` next to the checkpoint.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Real-part magnitude of relations (all relations if none given).
    Symmetry {
        #[arg(long)]
        relation: Vec<String>,
    },
    /// Inversion residuals of a relation against a partner (or all others).
    Inversion {
        #[arg(long)]
        relation: String,
        #[arg(long)]
        partner: Option<String>,
    },
    /// Similarity histogram of temporally evolved relation pairs.
    Evolution {
        #[arg(long)]
        head: Option<String>,
        #[arg(long)]
        tail: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        bin_width: f64,
        #[arg(long, default_value_t = 1)]
        negatives: usize,
        #[arg(long, default_value_t = 250)]
        max_pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare a relation transported between two timestamps with a target.
    Deduction {
        #[arg(long)]
        relation: String,
        #[arg(long)]
        time: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        target_time: String,
    },
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// quaternion, rotation, gradient or ranking; all when omitted.
    #[arg(long)]
    pub suite: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub entities: Option<usize>,
    #[arg(long)]
    pub symmetric: Option<usize>,
    #[arg(long)]
    pub asymmetric: Option<usize>,
    #[arg(long)]
    pub inverse_pairs: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub timestamps: Option<usize>,
    #[arg(long)]
    pub facts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parse `args` (including the program name) and run.
pub fn run_from<I, T>(args: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = Cli::try_parse_from(&args)?;
    run(cli, argv)
}

pub fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::Analyze(a) => cmd_analyze(a, argv),
        Command::Check(a) => cmd_check(a, argv),
        Command::Synth(a) => cmd_synth(a, argv),
    }
}

/// Built-in defaults, then dataset defaults, then the config file, then flags.
pub fn resolve_config(a: &TrainArgs) -> anyhow::Result<TrainConfig> {
    let mut cfg = match a.data.dataset.as_deref().map(default_config) {
        Some(Ok(c)) => c,
        _ => TrainConfig::default(),
    };
    if let Some(path) = &a.config {
        config::apply(&mut cfg, &config::read(path)?)?;
    }
    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = a.$field {
                cfg.$field = v;
            }
        };
    }
    flag!(dim);
    flag!(lr);
    flag!(margin);
    flag!(neg_ratio);
    flag!(epochs);
    flag!(batch_size);
    flag!(valid_every);
    flag!(seed);
    if let Some(g) = a.data.granularity {
        cfg.granularity = g;
    }
    if let Some(agg) = a.score_agg {
        cfg.score_agg = match agg {
            Agg::L1 => ScoreAgg::L1,
            Agg::L2 => ScoreAgg::L2,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Saves a checkpoint at every validation improvement and reports progress.
struct Saver<'a> {
    path: &'a Path,
    seed: u64,
    granularity: usize,
    error: Option<Error>,
    saved: bool,
}

impl TrainObserver for Saver<'_> {
    fn on_epoch(&mut self, r: &EpochRecord) {
        match r.valid_mrr {
            Some(m) => eprintln!("epoch {:>5}  loss {:.6}  valid MRR {:.4}", r.epoch, r.mean_loss, m),
            None => eprintln!("epoch {:>5}  loss {:.6}", r.epoch, r.mean_loss),
        }
    }

    fn on_improvement(&mut self, epoch: usize, params: &ModelParams) {
        if self.error.is_some() {
            return;
        }
        let header = Header::of(params, self.seed, epoch, self.granularity);
        match write_checkpoint(self.path, params, &header) {
            Ok(()) => self.saved = true,
            Err(e) => self.error = Some(e),
        }
    }
}

fn with_executor<T>(threads: usize, f: impl FnOnce(&dyn DynExec) -> T) -> T {
    if threads <= 1 {
        f(&Sequential)
    } else {
        f(&Rayon::new(threads))
    }
}

/// Object-safe front for the two executors used by the CLI.
trait DynExec {
    fn train(&self, ds: &Dataset, cfg: &TrainConfig, obs: &mut dyn TrainObserver)
        -> rotateqvs_core::Result<rotateqvs_core::TrainOutcome>;
    fn evaluate(
        &self,
        split: &[Quadruple],
        params: &ModelParams,
        filter: Option<&rotateqvs_core::FilterIndex>,
    ) -> rotateqvs_core::Result<EvalReport>;
}

impl<E: Executor> DynExec for E {
    fn train(
        &self,
        ds: &Dataset,
        cfg: &TrainConfig,
        obs: &mut dyn TrainObserver,
    ) -> rotateqvs_core::Result<rotateqvs_core::TrainOutcome> {
        train_with(ds, cfg, self, obs)
    }

    fn evaluate(
        &self,
        split: &[Quadruple],
        params: &ModelParams,
        filter: Option<&rotateqvs_core::FilterIndex>,
    ) -> rotateqvs_core::Result<EvalReport> {
        evaluate_with(split, params, filter, self)
    }
}

fn cmd_train(a: TrainArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let cfg = resolve_config(&a)?;
    if a.runs == 0 {
        bail!("--runs must be at least 1");
    }
    let dir = a.data.dir()?;
    let seeds: Vec<u64> = (0..a.runs as u64).map(|i| cfg.seed + i).collect();
    let mut manifest = RunManifest::new("train", argv, &a.out);
    manifest.dataset = Some(dir.clone());
    manifest.seeds = seeds.clone();
    manifest.config = config::to_pairs(&cfg);
    manifest.config.push(("time-mode".into(), a.data.time_mode().as_str().into()));
    manifest.config.push(("threads".into(), a.threads.to_string()));
    manifest.write()?;

    let ds = load_dataset(&dir, a.data.time_mode(), cfg.granularity)?;
    eprintln!(
        "loaded {}: {} entities, {} relations, {} timestamps, {}/{}/{} facts",
        dir.display(),
        ds.n_entities(),
        ds.n_relations(),
        ds.n_timestamps(),
        ds.train.len(),
        ds.valid.len(),
        ds.test.len()
    );
    write_vocab(&a.out.join("vocab"), &ds.vocab)?;

    let mut artifacts: Vec<String> = ["vocab/entities.tsv", "vocab/relations.tsv", "vocab/times.tsv"].map(String::from).into();
    let mut summary = Vec::new();
    for &seed in &seeds {
        let run_dir = if a.runs == 1 { a.out.clone() } else { a.out.join(format!("seed-{seed}")) };
        let prefix = if a.runs == 1 { String::new() } else { format!("seed-{seed}/") };
        fs::create_dir_all(&run_dir).with_context(|| format!("creating {}", run_dir.display()))?;
        let run_cfg = TrainConfig { seed, ..cfg.clone() };
        let ckpt = run_dir.join(CHECKPOINT);
        let mut saver = Saver { path: &ckpt, seed, granularity: cfg.granularity, error: None, saved: false };
        let outcome = with_executor(a.threads, |ex| ex.train(&ds, &run_cfg, &mut saver))?;
        if let Some(e) = saver.error {
            return Err(e.into());
        }
        if !saver.saved {
            let header = Header::of(&outcome.params, seed, cfg.epochs, cfg.granularity);
            write_checkpoint(&ckpt, &outcome.params, &header)?;
        }
        report::write_train_log(&run_dir.join(TRAIN_LOG), &outcome.log)?;

        let filter = ds.filter_index();
        let rep = with_executor(a.threads, |ex| ex.evaluate(&ds.test, &outcome.params, Some(&filter)))?;
        report::write_eval(&run_dir.join(EVAL), "test", &rep)?;
        println!("seed {seed} (best epoch {:?})\n{rep}", outcome.best_epoch);
        summary.push((seed, rep.overall));
        for f in [CHECKPOINT, TRAIN_LOG, EVAL] {
            artifacts.push(format!("{prefix}{f}"));
        }
    }
    if a.runs > 1 {
        let n = summary.len() as f64;
        let mean = |f: fn(&rotateqvs_core::Metrics) -> f64| summary.iter().map(|(_, m)| f(m)).sum::<f64>() / n;
        let mut rows: Vec<Vec<String>> = summary
            .iter()
            .map(|(s, m)| vec![s.to_string(), m.mrr.to_string(), m.hits1.to_string(), m.hits3.to_string(), m.hits10.to_string()])
            .collect();
        let means = [mean(|m| m.mrr), mean(|m| m.hits1), mean(|m| m.hits3), mean(|m| m.hits10)];
        rows.push(std::iter::once("mean".to_string()).chain(means.iter().map(f64::to_string)).collect());
        report::write_rows(&a.out.join("seeds.csv"), &["seed", "mrr", "hits1", "hits3", "hits10"], &rows)?;
        println!("mean over {} runs: MRR {:.4}  Hits@1 {:.4}  Hits@3 {:.4}  Hits@10 {:.4}", a.runs, means[0], means[1], means[2], means[3]);
        artifacts.push("seeds.csv".into());
    }
    let names: Vec<&str> = artifacts.iter().map(String::as_str).collect();
    manifest.finish(&names)?;
    Ok(())
}

fn default_out(checkpoint: &Path, sub: &str) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(sub)
}

fn load_for_checkpoint(data: &DataArgs, checkpoint: &Path) -> anyhow::Result<(PathBuf, Dataset, Header, ModelParams)> {
    let (header, params) = read_checkpoint(checkpoint)?;
    let g = data.granularity.unwrap_or(header.granularity);
    let (dir, ds) = data.load(g)?;
    header.check_shape(ds.n_entities(), ds.n_relations(), ds.n_timestamps())?;
    Ok((dir, ds, header, params))
}

fn cmd_eval(a: EvalArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let out = a.out.clone().unwrap_or_else(|| default_out(&a.checkpoint, "eval"));
    let mut manifest = RunManifest::new("eval", argv, &out);
    manifest.dataset = a.data.data_dir.clone();
    manifest.config.push(("checkpoint".into(), a.checkpoint.display().to_string()));
    manifest.write()?;

    let (_, ds, header, params) = load_for_checkpoint(&a.data, &a.checkpoint)?;
    manifest.seeds = vec![header.seed];
    let (name, split) = match a.split {
        SplitArg::Valid => ("valid", &ds.valid),
        SplitArg::Test => ("test", &ds.test),
    };
    let filter = (!a.raw).then(|| ds.filter_index());
    let rep = with_executor(a.threads, |ex| ex.evaluate(split, &params, filter.as_ref()))?;
    print!("{rep}");
    report::write_eval(&out.join(EVAL), name, &rep)?;
    manifest.finish(&[EVAL])?;
    Ok(())
}

fn relation_id(ds: &Dataset, label: &str) -> Result<usize, Error> {
    ds.vocab.relations.id(label).ok_or_else(|| Error::UnknownLabel { kind: "relation", label: label.into() })
}

fn entity_id(ds: &Dataset, label: &str) -> Result<usize, Error> {
    ds.vocab.entities.id(label).ok_or_else(|| Error::UnknownLabel { kind: "entity", label: label.into() })
}

fn time_id(ds: &Dataset, label: &str) -> Result<usize, Error> {
    ds.vocab.times.id(label).ok_or_else(|| Error::UnknownLabel { kind: "time", label: label.into() })
}

fn rel_label(ds: &Dataset, r: usize) -> String {
    ds.vocab.relations.label(r).unwrap_or("?").to_string()
}

fn time_label(ds: &Dataset, t: usize) -> String {
    ds.vocab.times.label(t).unwrap_or("?").to_string()
}

/// `(earlier, later)` fact pairs sharing head and tail, optionally restricted
/// to one head/tail, with distinct relation or time.
pub fn evolution_pairs(ds: &Dataset, head: Option<usize>, tail: Option<usize>) -> Vec<(Quadruple, Quadruple)> {
    let mut by_pair: BTreeMap<(usize, usize), Vec<Quadruple>> = BTreeMap::new();
    for q in ds.all() {
        if head.is_some_and(|h| h != q.s) || tail.is_some_and(|t| t != q.o) {
            continue;
        }
        by_pair.entry((q.s, q.o)).or_default().push(*q);
    }
    let mut pairs = Vec::new();
    for facts in by_pair.values_mut() {
        facts.sort_by_key(|q| (q.t, q.r));
        facts.dedup();
        for (i, a) in facts.iter().enumerate() {
            for b in &facts[i + 1..] {
                if a.t < b.t && a.r != b.r {
                    pairs.push((*a, *b));
                }
            }
        }
    }
    pairs
}

fn cmd_analyze(a: AnalyzeArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let Some(checkpoint) = a.checkpoint.clone() else { bail!("--checkpoint is required") };
    let out = a.out.clone().unwrap_or_else(|| default_out(&checkpoint, "analysis"));
    let mut manifest = RunManifest::new("analyze", argv, &out);
    manifest.dataset = a.data.data_dir.clone();
    manifest.config.push(("checkpoint".into(), checkpoint.display().to_string()));
    manifest.write()?;
    let (_, ds, header, p) = load_for_checkpoint(&a.data, &checkpoint)?;
    manifest.seeds = vec![header.seed];

    let mut written: Vec<&str> = Vec::new();
    match &a.what {
        Analysis::Symmetry { relation } => {
            let ids: Vec<usize> = if relation.is_empty() {
                (0..ds.n_relations()).collect()
            } else {
                relation.iter().map(|l| relation_id(&ds, l)).collect::<Result<_, _>>()?
            };
            let mut rows = Vec::new();
            for r in ids {
                let m = real_part_magnitude(r, &p)?;
                println!("{}\t{m:.6}", rel_label(&ds, r));
                rows.push(vec![rel_label(&ds, r), m.to_string()]);
            }
            report::write_rows(&out.join("symmetry.csv"), &["relation", "real_part_magnitude"], &rows)?;
            written.push("symmetry.csv");
        }
        Analysis::Inversion { relation, partner } => {
            let r1 = relation_id(&ds, relation)?;
            let partners: Vec<usize> = match partner {
                Some(l) => vec![relation_id(&ds, l)?],
                None => (0..ds.n_relations()).filter(|&r| r != r1).collect(),
            };
            let mut rows = Vec::new();
            for r2 in partners {
                let (n, re) = inversion_residual(r1, r2, &p)?;
                println!("{}\t{}\t{n:.6}\t{re:.6}", rel_label(&ds, r1), rel_label(&ds, r2));
                rows.push(vec![rel_label(&ds, r1), rel_label(&ds, r2), n.to_string(), re.to_string()]);
            }
            report::write_rows(&out.join("inversion.csv"), &["relation", "partner", "norm_residual", "real_residual"], &rows)?;
            written.push("inversion.csv");
        }
        Analysis::Evolution { head, tail, bin_width, negatives, max_pairs, seed } => {
            let h = head.as_deref().map(|l| entity_id(&ds, l)).transpose()?;
            let t = tail.as_deref().map(|l| entity_id(&ds, l)).transpose()?;
            let mut pairs = evolution_pairs(&ds, h, t);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            if pairs.len() > *max_pairs {
                use rand::seq::SliceRandom;
                pairs.shuffle(&mut rng);
                pairs.truncate(*max_pairs);
            }
            let hist = evolution_histogram(&pairs, *negatives, &p, *bin_width, &mut rng)?;
            report::write_histogram(&out.join("evolution_histogram.csv"), &hist.bins)?;
            let rows: Vec<Vec<String>> = pairs
                .iter()
                .zip(&hist.positive)
                .map(|((b, tg), sim)| {
                    vec![rel_label(&ds, b.r), time_label(&ds, b.t), rel_label(&ds, tg.r), time_label(&ds, tg.t), sim.to_string()]
                })
                .collect();
            report::write_rows(
                &out.join("evolution_pairs.csv"),
                &["base_relation", "base_time", "target_relation", "target_time", "similarity"],
                &rows,
            )?;
            println!(
                "{} pairs; mean similarity positive {:.4}, negative {:.4}",
                pairs.len(),
                hist.positive_mean().unwrap_or(f64::NAN),
                hist.negative_mean().unwrap_or(f64::NAN)
            );
            written.extend(["evolution_histogram.csv", "evolution_pairs.csv"]);
        }
        Analysis::Deduction { relation, time, target, target_time } => {
            let (r1, r2) = (relation_id(&ds, relation)?, relation_id(&ds, target)?);
            let (t1, t2) = (time_id(&ds, time)?, time_id(&ds, target_time)?);
            let moved = temporal_transport(r1, t1, t2, &p)?;
            let r2v = p.relation.row(r2);
            let (n, re) = deduction_residuals(&moved, &r2v);
            let cos = cosine_similarity(&moved, &r2v)?;
            println!("norm residual {n:.6}  real residual {re:.6}  cosine {cos:.6}");
            let row = vec![relation.clone(), time.clone(), target.clone(), target_time.clone(), n.to_string(), re.to_string(), cos.to_string()];
            report::write_rows(
                &out.join("deduction.csv"),
                &["relation", "time", "target", "target_time", "norm_residual", "real_residual", "cosine"],
                &[row],
            )?;
            written.push("deduction.csv");
        }
    }
    manifest.finish(&written)?;
    Ok(())
}

fn cmd_check(a: CheckArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let suites: Vec<Suite> = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite
            .iter()
            .map(|s| Suite::from_name(s).with_context(|| format!("unknown suite `{s}`")))
            .collect::<anyhow::Result<_>>()?
    };
    let mut manifest = a.out.as_ref().map(|o| RunManifest::new("check", argv, o));
    if let Some(m) = manifest.as_mut() {
        m.seeds = vec![a.seed];
        m.write()?;
    }
    let mut rows = Vec::new();
    let mut failed = 0;
    for s in suites {
        let started = std::time::Instant::now();
        let rep = run_suite(s, a.seed);
        let status = if rep.passed() { "PASS" } else { "FAIL" };
        println!("{status} {} ({} cases, {:.2?})", s.name(), rep.cases, started.elapsed());
        for c in &rep.checks {
            println!("    {:<48} max {:.3e}  tol {:.0e}", c.name, c.max_residual, c.tolerance);
            rows.push(vec![s.name().into(), c.name.into(), c.max_residual.to_string(), c.tolerance.to_string(), c.passed().to_string()]);
        }
        if !rep.passed() {
            failed += 1;
        }
    }
    if let Some(m) = manifest.as_mut() {
        report::write_rows(&m.out_dir.join("check.csv"), &["suite", "check", "max_residual", "tolerance", "passed"], &rows)?;
        m.finish(&["check.csv"])?;
    }
    if failed > 0 {
        bail!("{failed} suite(s) failed");
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs, argv: Vec<String>) -> anyhow::Result<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n_entities: a.entities.unwrap_or(d.n_entities),
        n_symmetric_rels: a.symmetric.unwrap_or(d.n_symmetric_rels),
        n_asymmetric_rels: a.asymmetric.unwrap_or(d.n_asymmetric_rels),
        n_inverse_pairs: a.inverse_pairs.unwrap_or(d.n_inverse_pairs),
        n_evolution_chains: a.chains.unwrap_or(d.n_evolution_chains),
        n_timestamps: a.timestamps.unwrap_or(d.n_timestamps),
        facts_per_relation: a.facts.unwrap_or(d.facts_per_relation),
        seed: a.seed,
    };
    let mut manifest = RunManifest::new("synth", argv, &a.out);
    manifest.seeds = vec![spec.seed];
    manifest.config = vec![
        ("entities".into(), spec.n_entities.to_string()),
        ("symmetric".into(), spec.n_symmetric_rels.to_string()),
        ("asymmetric".into(), spec.n_asymmetric_rels.to_string()),
        ("inverse-pairs".into(), spec.n_inverse_pairs.to_string()),
        ("chains".into(), spec.n_evolution_chains.to_string()),
        ("timestamps".into(), spec.n_timestamps.to_string()),
        ("facts".into(), spec.facts_per_relation.to_string()),
    ];
    manifest.write()?;
    let g = generate(&spec)?;
    let ds = &g.dataset;
    for (name, facts) in [("train.txt", &ds.train), ("valid.txt", &ds.valid), ("test.txt", &ds.test)] {
        write_quadruples(&a.out.join(name), &ds.vocab, facts)?;
    }
    let mut planted = Vec::new();
    for &r in &g.symmetric {
        planted.push(vec!["symmetric".into(), rel_label(ds, r), String::new()]);
    }
    for &r in &g.asymmetric {
        planted.push(vec!["asymmetric".into(), rel_label(ds, r), String::new()]);
    }
    for &(r1, r2) in &g.inverse_pairs {
        planted.push(vec!["inverse".into(), rel_label(ds, r1), rel_label(ds, r2)]);
    }
    for c in &g.chains {
        planted.push(vec!["evolution".into(), rel_label(ds, c.first), rel_label(ds, c.second)]);
    }
    report::write_rows(&a.out.join("planted.csv"), &["pattern", "relation", "partner"], &planted)?;
    println!(
        "wrote {} train, {} valid, {} test facts to {}",
        ds.train.len(),
        ds.valid.len(),
        ds.test.len(),
        a.out.display()
    );
    manifest.finish(&["train.txt", "valid.txt", "test.txt", "planted.csv"])?;
    Ok(())
}
