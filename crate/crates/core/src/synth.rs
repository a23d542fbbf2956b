//! Small temporal graphs with planted relation patterns.
//!
//! Relation ids are laid out family by family: symmetric, asymmetric,
//! inverse pairs (two ids each) and evolution chains (two ids each).
//! Every planted pattern produces a primary fact that always stays in the
//! training split; the facts derived from it (the reverse of a symmetric
//! fact, the partner of an inverse fact, the evolved fact of a chain) are the
//! pool from which validation and test facts are drawn.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Labels, Quadruple, TimeIndex, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_symmetric_rels: usize,
    pub n_asymmetric_rels: usize,
    pub n_inverse_pairs: usize,
    pub n_evolution_chains: usize,
    pub n_timestamps: usize,
    /// Planted events per relation (per pair for inverse pairs and chains).
    pub facts_per_relation: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_entities: 50,
            n_symmetric_rels: 2,
            n_asymmetric_rels: 2,
            n_inverse_pairs: 2,
            n_evolution_chains: 2,
            n_timestamps: 20,
            facts_per_relation: 40,
            seed: 0,
        }
    }
}

/// One evolution chain: `(s, first, o, from)` is followed by `(s, second, o, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolutionChain {
    pub first: usize,
    pub second: usize,
    pub from: usize,
    pub to: usize,
}

/// Generated dataset plus the planted ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGraph {
    pub dataset: Dataset,
    pub symmetric: Vec<usize>,
    pub asymmetric: Vec<usize>,
    pub inverse_pairs: Vec<(usize, usize)>,
    pub chains: Vec<EvolutionChain>,
    /// `(base, evolved)` fact pairs of all chains.
    pub evolution_pairs: Vec<(Quadruple, Quadruple)>,
}

impl SyntheticSpec {
    pub fn n_relations(&self) -> usize {
        self.n_symmetric_rels + self.n_asymmetric_rels + 2 * self.n_inverse_pairs + 2 * self.n_evolution_chains
    }

    pub fn check(&self) -> Result<()> {
        let fail = |why: String| Err(Error::InfeasibleSpec(why));
        if self.n_relations() == 0 {
            return fail("no relation family requested".into());
        }
        if self.n_entities == 0 || self.n_timestamps == 0 {
            return fail("need at least one entity and one timestamp".into());
        }
        let (n, t, f) = (self.n_entities, self.n_timestamps, self.facts_per_relation);
        if f == 0 {
            return Ok(());
        }
        if n < 2 {
            return fail(format!("{n} entity cannot host facts between distinct entities"));
        }
        let unordered = n * (n - 1) / 2;
        if self.n_symmetric_rels > 0 && f > unordered * t {
            return fail(format!("{f} symmetric facts exceed the {} available", unordered * t));
        }
        if self.n_asymmetric_rels > 0 && f > unordered * t {
            return fail(format!("{f} asymmetric facts exceed the {} available", unordered * t));
        }
        if self.n_inverse_pairs > 0 && f > n * (n - 1) * t {
            return fail(format!("{f} inverse facts exceed the {} available", n * (n - 1) * t));
        }
        if self.n_evolution_chains > 0 {
            if t < 2 {
                return fail("evolution chains need two timestamps".into());
            }
            if f > n * (n - 1) {
                return fail(format!("{f} evolving pairs exceed the {} available", n * (n - 1)));
            }
        }
        Ok(())
    }
}

/// `YYYY-MM-DD` for `days` after 2000-01-01.
pub fn day_label(days: usize) -> String {
    // civil-from-days, proleptic Gregorian
    let z = days as i64 + 10_957 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!("{y:04}-{m:02}-{d:02}")
}

fn distinct_pair<R: Rng>(rng: &mut R, n: usize) -> (usize, usize) {
    let s = rng.gen_range(0..n);
    let mut o = rng.gen_range(0..n - 1);
    if o >= s {
        o += 1;
    }
    (s, o)
}

struct Emitted {
    /// Facts that always go to train.
    primary: Vec<Quadruple>,
    /// Facts eligible for valid/test.
    derived: Vec<Quadruple>,
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticGraph> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, nt, f) = (spec.n_entities, spec.n_timestamps, spec.facts_per_relation);
    let mut out = Emitted { primary: Vec::new(), derived: Vec::new() };
    let mut relations = Labels::new();

    let mut symmetric = Vec::new();
    for i in 0..spec.n_symmetric_rels {
        let r = relations.intern(&format!("symmetric_{i}"));
        symmetric.push(r);
        let mut seen = BTreeSet::new();
        while seen.len() < f {
            let (s, o) = distinct_pair(&mut rng, n);
            let t = rng.gen_range(0..nt);
            if seen.insert((s.min(o), s.max(o), t)) {
                out.primary.push(Quadruple::new(s, r, o, t));
                out.derived.push(Quadruple::new(o, r, s, t));
            }
        }
    }

    // asymmetric facts follow a hidden total order, so no reverse ever exists
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut position = alloc::vec![0; n];
    for (p, &e) in order.iter().enumerate() {
        position[e] = p;
    }
    let mut asymmetric = Vec::new();
    for i in 0..spec.n_asymmetric_rels {
        let r = relations.intern(&format!("asymmetric_{i}"));
        asymmetric.push(r);
        let mut seen = BTreeSet::new();
        while seen.len() < f {
            let (x, y) = distinct_pair(&mut rng, n);
            let (s, o) = if position[x] < position[y] { (x, y) } else { (y, x) };
            let t = rng.gen_range(0..nt);
            if seen.insert((s, o, t)) {
                out.primary.push(Quadruple::new(s, r, o, t));
            }
        }
    }

    let mut inverse_pairs = Vec::new();
    for i in 0..spec.n_inverse_pairs {
        let r1 = relations.intern(&format!("inverse_{i}_a"));
        let r2 = relations.intern(&format!("inverse_{i}_b"));
        inverse_pairs.push((r1, r2));
        let mut seen = BTreeSet::new();
        while seen.len() < f {
            let (s, o) = distinct_pair(&mut rng, n);
            let t = rng.gen_range(0..nt);
            if seen.insert((s, o, t)) {
                out.primary.push(Quadruple::new(s, r1, o, t));
                out.derived.push(Quadruple::new(o, r2, s, t));
            }
        }
    }

    let mut chains = Vec::new();
    let mut evolution_pairs = Vec::new();
    for i in 0..spec.n_evolution_chains {
        let first = relations.intern(&format!("evolution_{i}_a"));
        let second = relations.intern(&format!("evolution_{i}_b"));
        let from = rng.gen_range(0..nt - 1);
        let to = rng.gen_range(from + 1..nt);
        chains.push(EvolutionChain { first, second, from, to });
        let mut seen = BTreeSet::new();
        while seen.len() < f {
            let (s, o) = distinct_pair(&mut rng, n);
            if seen.insert((s, o)) {
                let base = Quadruple::new(s, first, o, from);
                let evolved = Quadruple::new(s, second, o, to);
                out.primary.push(base);
                out.derived.push(evolved);
                evolution_pairs.push((base, evolved));
            }
        }
    }

    let total = out.primary.len() + out.derived.len();
    let n_valid = (total / 10).min(out.derived.len() / 2);
    let n_test = (total / 10).min(out.derived.len() - n_valid);

    // keep at least one training fact per relation
    let mut in_train: BTreeMap<usize, usize> = BTreeMap::new();
    for q in out.primary.iter().chain(&out.derived) {
        *in_train.entry(q.r).or_default() += 1;
    }
    let mut pool = out.derived;
    pool.shuffle(&mut rng);
    let (mut valid, mut test, mut train) = (Vec::new(), Vec::new(), out.primary);
    for q in pool {
        let count = in_train.get_mut(&q.r).expect("relation counted");
        if *count > 1 && valid.len() < n_valid {
            *count -= 1;
            valid.push(q);
        } else if *count > 1 && test.len() < n_test {
            *count -= 1;
            test.push(q);
        } else {
            train.push(q);
        }
    }
    // facts whose entity never occurs in train go back to train
    let mut seen_in_train = alloc::vec![false; n];
    for q in &train {
        seen_in_train[q.s] = true;
        seen_in_train[q.o] = true;
    }
    for split in [&mut valid, &mut test] {
        let mut kept = Vec::with_capacity(split.len());
        for q in split.drain(..) {
            if seen_in_train[q.s] && seen_in_train[q.o] {
                kept.push(q);
            } else {
                seen_in_train[q.s] = true;
                seen_in_train[q.o] = true;
                train.push(q);
            }
        }
        *split = kept;
    }
    train.sort_unstable();
    valid.sort_unstable();
    test.sort_unstable();

    let vocab = Vocabulary {
        entities: (0..n).map(|i| format!("entity_{i}")).collect(),
        relations,
        times: TimeIndex::from_sorted_labels((0..nt).map(day_label).collect(), 1)?,
    };
    Ok(SyntheticGraph {
        dataset: Dataset { train, valid, test, vocab, granularity: 1 },
        symmetric,
        asymmetric,
        inverse_pairs,
        chains,
        evolution_pairs,
    })
}
