//! Adagrad training with negative sampling and keep-best-on-validation.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{negative_samples, Dataset, Quadruple};
use crate::error::{Error, Result};
use crate::eval::evaluate_with;
use crate::exec::{Executor, Sequential};
use crate::model::{gradients, init_params, EmbeddingTable, Gradients, ModelParams, RowGrads, ScoreAgg};

/// Adagrad damping constant.
pub const ADAGRAD_EPS: f64 = 1e-10;

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_NEGATIVES: u64 = 2;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension `k` (quaternions per embedding).
    pub dim: usize,
    pub lr: f64,
    /// Negatives per positive.
    pub neg_ratio: usize,
    pub margin: f64,
    /// Consecutive raw timestamps merged into one id.
    pub granularity: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs between validations; 0 disables validation.
    pub valid_every: usize,
    pub seed: u64,
    pub score_agg: ScoreAgg,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 500,
            lr: 0.1,
            neg_ratio: 10,
            margin: 110.0,
            granularity: 1,
            epochs: 500,
            batch_size: 512,
            valid_every: 25,
            seed: 0,
            score_agg: ScoreAgg::L1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.into()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if self.neg_ratio < 1 {
            return bad("neg_ratio must be >= 1");
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be > 0");
        }
        if self.granularity < 1 {
            return bad("granularity must be >= 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1");
        }
        Ok(())
    }
}

/// Best hyperparameters reported for each benchmark.
pub fn default_config(dataset: &str) -> Result<TrainConfig> {
    let (margin, granularity) = match dataset.to_ascii_lowercase().as_str() {
        "icews14" => (110.0, 1),
        "icews05-15" | "icews05_15" | "icews0515" => (120.0, 2),
        "yago11k" => (50.0, 100),
        "gdelt" => (110.0, 1),
        _ => return Err(Error::UnknownDataset(String::from(dataset))),
    };
    Ok(TrainConfig { margin, granularity, lr: 0.1, dim: 500, neg_ratio: 10, ..TrainConfig::default() })
}

/// Per-coordinate squared-gradient sums, shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub entity: EmbeddingTable,
    pub relation: EmbeddingTable,
    pub time: EmbeddingTable,
    pub eps: f64,
}

impl AdagradState {
    pub fn new(params: &ModelParams) -> Self {
        let k = params.k();
        AdagradState {
            entity: EmbeddingTable::zeros(params.n_entities(), k),
            relation: EmbeddingTable::zeros(params.n_relations(), k),
            time: EmbeddingTable::zeros(params.n_timestamps(), k),
            eps: ADAGRAD_EPS,
        }
    }
}

fn adagrad_rows(table: &mut EmbeddingTable, acc: &mut EmbeddingTable, grads: &RowGrads, lr: f64, eps: f64) {
    let k = table.k();
    for (&row, g) in grads {
        let (tc, ac) = (table.channels_mut(), acc.channels_mut());
        for (ch, (param, sum)) in tc.into_iter().zip(ac).enumerate() {
            for m in 0..k {
                let gi = g[ch * k + m];
                let i = row * k + m;
                sum[i] += gi * gi;
                param[i] -= lr * gi / (libm::sqrt(sum[i]) + eps);
            }
        }
    }
}

/// One Adagrad update over the rows present in `grads`.
pub fn adagrad_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdagradState, lr: f64) -> Result<()> {
    if state.entity.rows() != params.n_entities()
        || state.relation.rows() != params.n_relations()
        || state.time.rows() != params.n_timestamps()
        || state.entity.k() != params.k()
    {
        return Err(Error::ShapeMismatch("optimizer state does not match parameters".into()));
    }
    let eps = state.eps;
    adagrad_rows(&mut params.entity, &mut state.entity, &grads.entity, lr, eps);
    adagrad_rows(&mut params.relation, &mut state.relation, &grads.relation, lr, eps);
    adagrad_rows(&mut params.time, &mut state.time, &grads.time, lr, eps);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters of the best validated epoch, or the last epoch when no
    /// validation ran.
    pub params: ModelParams,
    pub log: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_valid_mrr: Option<f64>,
}

/// Hooks called by the training loop.
pub trait TrainObserver {
    fn on_epoch(&mut self, _record: &EpochRecord) {}
    fn on_improvement(&mut self, _epoch: usize, _params: &ModelParams) {}
}

impl TrainObserver for () {}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Initial parameters for `dataset` under `config`.
pub fn initial_params(dataset: &Dataset, config: &TrainConfig) -> ModelParams {
    init_params(
        dataset.n_entities(),
        dataset.n_relations(),
        dataset.n_timestamps(),
        config.dim,
        &mut stream(config.seed, STREAM_INIT),
    )
    .with_score_agg(config.score_agg)
}

/// Single-threaded training without hooks.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(dataset, config, &Sequential, &mut ())
}

/// Train with a chosen executor for per-sample gradients. Results are
/// bit-identical for every executor that preserves ordering.
pub fn train_with<E: Executor>(
    dataset: &Dataset,
    config: &TrainConfig,
    exec: &E,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome> {
    config.validate()?;
    dataset.check_ids()?;
    if dataset.n_entities() < 2 {
        return Err(Error::InvalidConfig("training needs at least two entities".into()));
    }
    let mut params = initial_params(dataset, config);
    let mut state = AdagradState::new(&params);
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    if config.epochs == 0 {
        return Ok(TrainOutcome { params, log, best_epoch: None, best_valid_mrr: None });
    }

    let filter = dataset.filter_index();
    let mut shuffle_rng = stream(config.seed, STREAM_SHUFFLE);
    let mut neg_rng = stream(config.seed, STREAM_NEGATIVES);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<(Quadruple, Vec<Quadruple>)> = batch
                .iter()
                .map(|&i| {
                    let pos = dataset.train[i];
                    let negs = negative_samples(&pos, config.neg_ratio, &mut neg_rng, dataset.n_entities());
                    (pos, negs)
                })
                .collect();
            let per_sample = exec.map_indexed(samples.len(), |i| {
                gradients(&samples[i].0, &samples[i].1, config.margin, &params)
            });
            let scale = 1.0 / samples.len() as f64;
            let mut acc = Gradients::default();
            for g in per_sample {
                let g = g?;
                loss_sum += g.loss;
                acc.accumulate(&g, scale);
            }
            adagrad_step(&mut params, &acc, &mut state, config.lr)?;
        }
        let mean_loss = if order.is_empty() { 0.0 } else { loss_sum / order.len() as f64 };

        let validate_now = config.valid_every > 0
            && !dataset.valid.is_empty()
            && (epoch % config.valid_every == 0 || epoch == config.epochs);
        let valid_mrr = if validate_now {
            Some(evaluate_with(&dataset.valid, &params, Some(&filter), exec)?.mrr())
        } else {
            None
        };
        let record = EpochRecord { epoch, mean_loss, valid_mrr };
        observer.on_epoch(&record);
        log.push(record);

        if let Some(mrr) = valid_mrr {
            if best.as_ref().is_none_or(|(_, b, _)| mrr > *b) {
                observer.on_improvement(epoch, &params);
                best = Some((epoch, mrr, params.clone()));
            }
        }
    }

    Ok(match best {
        Some((epoch, mrr, p)) => TrainOutcome { params: p, log, best_epoch: Some(epoch), best_valid_mrr: Some(mrr) },
        None => TrainOutcome { params, log, best_epoch: None, best_valid_mrr: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Labels, TimeIndex, Vocabulary};
    use crate::model::init_params;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn default_config_values() {
        let c = default_config("icews14").unwrap();
        assert_eq!((c.margin, c.granularity, c.lr, c.dim, c.neg_ratio), (110.0, 1, 0.1, 500, 10));
        let c = default_config("ICEWS05-15").unwrap();
        assert_eq!((c.margin, c.granularity), (120.0, 2));
        let c = default_config("yago11k").unwrap();
        assert_eq!((c.margin, c.granularity), (50.0, 100));
        let c = default_config("gdelt").unwrap();
        assert_eq!((c.margin, c.granularity), (110.0, 1));
        assert!(matches!(default_config("wikidata"), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { dim: 0, ..Default::default() },
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { neg_ratio: 0, ..Default::default() },
            TrainConfig { margin: -1.0, ..Default::default() },
            TrainConfig { granularity: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn grads_for(params: &ModelParams, value: f64) -> Gradients {
        let k = params.k();
        let mut g = Gradients::default();
        g.entity.insert(0, vec![value; 4 * k]);
        g
    }

    #[test]
    fn adagrad_zero_gradient_is_noop() {
        let mut p = init_params(2, 1, 1, 2, &mut ChaCha8Rng::seed_from_u64(0));
        let before = p.clone();
        let mut st = AdagradState::new(&p);
        let g = grads_for(&p, 0.0);
        adagrad_step(&mut p, &g, &mut st, 0.1).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adagrad_first_step_and_shrinking() {
        let mut p = init_params(2, 1, 1, 2, &mut ChaCha8Rng::seed_from_u64(0));
        let x0 = p.entity.a[0];
        let mut st = AdagradState::new(&p);
        let g = grads_for(&p, 0.3);
        adagrad_step(&mut p, &g, &mut st, 0.1).unwrap();
        let d1 = p.entity.a[0] - x0;
        assert!((d1 + 0.1 * 0.3 / (0.3 + ADAGRAD_EPS)).abs() < 1e-15);
        let x1 = p.entity.a[0];
        adagrad_step(&mut p, &g, &mut st, 0.1).unwrap();
        let d2 = p.entity.a[0] - x1;
        assert!(d2.abs() < d1.abs());
        assert!((st.entity.a[0] - 2.0 * 0.3 * 0.3).abs() < 1e-15);
        // untouched rows keep their value and accumulator
        assert_eq!(st.entity.a[2], 0.0);
    }

    fn tiny_dataset() -> Dataset {
        let train: Vec<Quadruple> = (0..10).map(|i| Quadruple::new(i, i % 2, (i + 1) % 10, i % 3)).collect();
        Dataset {
            train,
            valid: vec![Quadruple::new(0, 1, 5, 2)],
            test: vec![Quadruple::new(3, 0, 7, 1)],
            vocab: Vocabulary {
                entities: (0..10).map(|i| format!("e{i}")).collect::<Labels>(),
                relations: ["r0", "r1"].into_iter().collect(),
                times: TimeIndex::from_sorted_labels((0..3).map(|i| format!("t{i}")).collect(), 1).unwrap(),
            },
            granularity: 1,
        }
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let ds = tiny_dataset();
        let cfg = TrainConfig { dim: 4, epochs: 0, ..Default::default() };
        let out = train(&ds, &cfg).unwrap();
        assert!(out.log.is_empty());
        assert_eq!(out.params, initial_params(&ds, &cfg));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let ds = tiny_dataset();
        let cfg = TrainConfig { dim: 4, epochs: 6, batch_size: 3, valid_every: 2, margin: 3.0, ..Default::default() };
        let a = train(&ds, &cfg).unwrap();
        let b = train(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log.len(), 6);
        let validated: Vec<f64> = a.log.iter().filter_map(|r| r.valid_mrr).collect();
        assert_eq!(validated.len(), 3);
        let best = validated.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(a.best_valid_mrr, Some(best));
    }

    #[test]
    fn loss_decreases_on_small_graph() {
        let ds = tiny_dataset();
        let cfg = TrainConfig { dim: 10, epochs: 10, batch_size: 4, margin: 6.0, valid_every: 0, ..Default::default() };
        let out = train(&ds, &cfg).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|r| r.mean_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
        assert!(out.best_epoch.is_none());
    }
}
