//! Time-wise filtered link prediction: ranks, MRR and Hits@k.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{FilterIndex, Quadruple};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::model::{score_rotated, ModelParams};
use crate::quaternion::Quaternion;

/// Which entity slot of a fact is replaced by candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Predict `s` in `(?, r, o, t)`.
    Head,
    /// Predict `o` in `(s, r, ?, t)`.
    Tail,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Head, Side::Tail];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Head => "head",
            Side::Tail => "tail",
        }
    }

    #[inline]
    fn candidate(&self, q: &Quadruple, e: usize) -> (usize, usize) {
        match self {
            Side::Head => (e, q.o),
            Side::Tail => (q.s, e),
        }
    }

    #[inline]
    fn answer(&self, q: &Quadruple) -> usize {
        match self {
            Side::Head => q.s,
            Side::Tail => q.o,
        }
    }
}

/// Rank of the true answer among candidates scored from entities already
/// rotated into `q.t`. `filter = None` gives the raw (unfiltered) rank.
pub fn rank_rotated(
    params: &ModelParams,
    rotated: &[Quaternion],
    q: &Quadruple,
    filter: Option<&FilterIndex>,
    side: Side,
) -> usize {
    let answer = side.answer(q);
    let truth = score_rotated(params, rotated, q.s, q.r, q.o);
    let known = filter.and_then(|f| match side {
        Side::Head => f.heads(q.r, q.o, q.t),
        Side::Tail => f.tails(q.s, q.r, q.t),
    });
    let mut better = 0;
    for e in 0..params.n_entities() {
        if e == answer || known.is_some_and(|set| set.contains(&e)) {
            continue;
        }
        let (s, o) = side.candidate(q, e);
        if score_rotated(params, rotated, s, q.r, o) < truth {
            better += 1;
        }
    }
    1 + better
}

/// Filtered rank of `q` on `side`. Ties with the true answer do not count.
pub fn rank(q: &Quadruple, params: &ModelParams, filter: &FilterIndex, side: Side) -> Result<usize> {
    params.check_quadruple(q)?;
    let rotated = params.rotated_entities(q.t)?;
    Ok(rank_rotated(params, &rotated, q, Some(filter), side))
}

/// Unfiltered rank, for debugging.
pub fn raw_rank(q: &Quadruple, params: &ModelParams, side: Side) -> Result<usize> {
    params.check_quadruple(q)?;
    let rotated = params.rotated_entities(q.t)?;
    Ok(rank_rotated(params, &rotated, q, None, side))
}

/// MRR and Hits@{1,3,10} over a set of ranks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub n_queries: usize,
}

pub fn metrics(ranks: &[usize]) -> Result<Metrics> {
    if ranks.is_empty() {
        return Err(Error::EmptyRanks);
    }
    let n = ranks.len() as f64;
    let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    Ok(Metrics {
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
        hits1: hits(1),
        hits3: hits(3),
        hits10: hits(10),
        n_queries: ranks.len(),
    })
}

/// Pooled metrics over head and tail queries plus the per-side breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: Metrics,
    pub head: Metrics,
    pub tail: Metrics,
    /// Head rank and tail rank of each evaluated fact, in split order.
    pub ranks: Vec<(usize, usize)>,
}

impl EvalReport {
    pub fn mrr(&self) -> f64 {
        self.overall.mrr
    }

    pub fn n_queries(&self) -> usize {
        self.overall.n_queries
    }

    /// All ranks, head ranks first then tail ranks.
    pub fn all_ranks(&self) -> Vec<usize> {
        self.ranks.iter().map(|r| r.0).chain(self.ranks.iter().map(|r| r.1)).collect()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>9} {:>8} {:>8} {:>8} {:>9}", "side", "MRR", "Hits@1", "Hits@3", "Hits@10", "queries")?;
        for (name, m) in [("all", &self.overall), ("head", &self.head), ("tail", &self.tail)] {
            writeln!(
                f,
                "{:<8} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>9}",
                name, m.mrr, m.hits1, m.hits3, m.hits10, m.n_queries
            )?;
        }
        Ok(())
    }
}

/// Evaluate every fact of `split` in both directions.
pub fn evaluate(split: &[Quadruple], params: &ModelParams, filter: &FilterIndex) -> Result<EvalReport> {
    evaluate_with(split, params, Some(filter), &Sequential)
}

/// As [`evaluate`], with a choice of executor and an optional filter. Facts
/// are grouped by timestamp so that entities are rotated once per stamp.
pub fn evaluate_with<E: Executor>(
    split: &[Quadruple],
    params: &ModelParams,
    filter: Option<&FilterIndex>,
    exec: &E,
) -> Result<EvalReport> {
    for q in split {
        params.check_quadruple(q)?;
    }
    let mut by_time: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, q) in split.iter().enumerate() {
        by_time.entry(q.t).or_default().push(i);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_time.into_iter().collect();

    let per_group = exec.map_indexed(groups.len(), |g| -> Result<Vec<(usize, usize, usize)>> {
        let (t, ref idx) = groups[g];
        let rotated = params.rotated_entities(t)?;
        Ok(idx
            .iter()
            .map(|&i| {
                let q = &split[i];
                let h = rank_rotated(params, &rotated, q, filter, Side::Head);
                let tl = rank_rotated(params, &rotated, q, filter, Side::Tail);
                (i, h, tl)
            })
            .collect())
    });

    let mut ranks = vec![(0, 0); split.len()];
    for group in per_group {
        for (i, h, t) in group? {
            ranks[i] = (h, t);
        }
    }
    let heads: Vec<usize> = ranks.iter().map(|r| r.0).collect();
    let tails: Vec<usize> = ranks.iter().map(|r| r.1).collect();
    let mut pooled = heads.clone();
    pooled.extend_from_slice(&tails);
    Ok(EvalReport {
        overall: metrics(&pooled)?,
        head: metrics(&heads)?,
        tail: metrics(&tails)?,
        ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_filter_index;
    use crate::model::{init_params, score_value};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn metrics_examples() {
        let m = metrics(&[1, 1, 1]).unwrap();
        assert_eq!((m.mrr, m.hits1, m.hits3, m.hits10), (1.0, 1.0, 1.0, 1.0));
        let m = metrics(&[2]).unwrap();
        assert_eq!((m.mrr, m.hits1, m.hits3, m.hits10), (0.5, 0.0, 1.0, 1.0));
        let m = metrics(&[1, 4, 10, 100]).unwrap();
        assert!((m.mrr - 0.34).abs() < 1e-15);
        assert_eq!((m.hits1, m.hits3, m.hits10), (0.25, 0.25, 0.75));
        assert_eq!(metrics(&[]), Err(Error::EmptyRanks));
    }

    fn toy(seed: u64) -> ModelParams {
        init_params(5, 2, 2, 3, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn unique_minimum_ranks_first() {
        let p = toy(1);
        let q0 = Quadruple::new(0, 0, 0, 0);
        let best = (0..5)
            .min_by(|&a, &b| {
                let sa = score_value(&p, &Quadruple { o: a, ..q0 }).unwrap();
                let sb = score_value(&p, &Quadruple { o: b, ..q0 }).unwrap();
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        let q = Quadruple { o: best, ..q0 };
        let filter = build_filter_index([&[q][..]]);
        assert_eq!(rank(&q, &p, &filter, Side::Tail).unwrap(), 1);
    }

    #[test]
    fn two_entity_worse_answer_ranks_second() {
        let p = init_params(2, 1, 1, 2, &mut ChaCha8Rng::seed_from_u64(4));
        let a = Quadruple::new(0, 0, 0, 0);
        let b = Quadruple::new(0, 0, 1, 0);
        let (fa, fb) = (score_value(&p, &a).unwrap(), score_value(&p, &b).unwrap());
        let worse = if fa > fb { a } else { b };
        let filter = build_filter_index([&[worse][..]]);
        assert_eq!(rank(&worse, &p, &filter, Side::Tail).unwrap(), 2);
        // once the better candidate is a known fact it no longer competes
        let better = if fa > fb { b } else { a };
        let filter = build_filter_index([&[worse, better][..]]);
        assert_eq!(rank(&worse, &p, &filter, Side::Tail).unwrap(), 1);
    }

    #[test]
    fn evaluate_composes_ranks() {
        let p = toy(2);
        let split = [Quadruple::new(0, 1, 2, 1), Quadruple::new(3, 0, 4, 0), Quadruple::new(4, 1, 4, 1)];
        let filter = build_filter_index([&split[..]]);
        let rep = evaluate(&split, &p, &filter).unwrap();
        assert_eq!(rep.n_queries(), 6);
        let mut expected = Vec::new();
        for side in Side::BOTH {
            for q in &split {
                expected.push(rank(q, &p, &filter, side).unwrap());
            }
        }
        assert_eq!(rep.all_ranks(), expected);
        assert_eq!(rep.overall, metrics(&expected).unwrap());

        let one = evaluate(&split[..1], &p, &filter).unwrap();
        assert_eq!(one.n_queries(), 2);
        assert!(one.overall.hits1 <= one.overall.hits3 && one.overall.hits3 <= one.overall.hits10);
        assert!(one.overall.mrr >= one.overall.hits1);
    }

    #[test]
    fn filtered_never_exceeds_raw() {
        let p = toy(3);
        let facts: Vec<Quadruple> = (0..5).flat_map(|s| (0..5).map(move |o| Quadruple::new(s, 0, o, 0))).step_by(3).collect();
        let filter = build_filter_index([&facts[..]]);
        for q in &facts {
            for side in Side::BOTH {
                assert!(rank(q, &p, &filter, side).unwrap() <= raw_rank(q, &p, side).unwrap());
            }
        }
    }
}
