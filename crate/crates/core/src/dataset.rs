//! Integer-coded temporal facts, vocabularies, negative sampling and the
//! time-wise filter index.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// One time-stamped fact `(s, r, o, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quadruple {
    pub s: usize,
    pub r: usize,
    pub o: usize,
    pub t: usize,
}

impl Quadruple {
    #[inline]
    pub const fn new(s: usize, r: usize, o: usize, t: usize) -> Self {
        Quadruple { s, r, o, t }
    }

    /// `(o, r, s, t)`.
    #[inline]
    pub const fn reversed(&self) -> Self {
        Quadruple::new(self.o, self.r, self.s, self.t)
    }
}

/// A bijection between string labels and dense ids `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Labels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `label`, inserting it if unseen.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.into());
        self.index.insert(label.into(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.labels.iter().enumerate().map(|(i, s)| (i, s.as_str()))
    }
}

impl<S: AsRef<str>> FromIterator<S> for Labels {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut l = Labels::new();
        for s in iter {
            l.intern(s.as_ref());
        }
        l
    }
}

/// Chronologically ordered time labels and the bin each one maps to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimeIndex {
    labels: Vec<String>,
    bins: Vec<usize>,
    index: BTreeMap<String, usize>,
    n_bins: usize,
}

impl TimeIndex {
    /// `labels` must already be distinct and in chronological order.
    pub fn from_sorted_labels(labels: Vec<String>, granularity: usize) -> Result<Self> {
        if granularity == 0 {
            return Err(Error::InvalidConfig("time granularity must be >= 1".into()));
        }
        let mut index = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidConfig(alloc::format!("duplicate time label `{l}`")));
            }
        }
        let bins: Vec<usize> = (0..labels.len()).map(|i| i / granularity).collect();
        let n_bins = labels.len().div_ceil(granularity);
        Ok(TimeIndex { labels, bins, index, n_bins })
    }

    /// Timestamp id of a raw label.
    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).map(|&i| self.bins[i])
    }

    /// First raw label falling in bin `id`.
    pub fn label(&self, id: usize) -> Option<&str> {
        self.bins.iter().position(|&b| b == id).map(|i| self.labels[i].as_str())
    }

    /// All raw labels of bin `id`, in chronological order.
    pub fn labels_of(&self, id: usize) -> impl Iterator<Item = &str> {
        self.bins
            .iter()
            .zip(&self.labels)
            .filter(move |(b, _)| **b == id)
            .map(|(_, l)| l.as_str())
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    /// `(raw label, bin id)` in chronological order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.labels.iter().map(String::as_str).zip(self.bins.iter().copied())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub entities: Labels,
    pub relations: Labels,
    pub times: TimeIndex,
}

impl Vocabulary {
    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn n_timestamps(&self) -> usize {
        self.times.n_bins()
    }
}

/// Sort distinct time labels and assign `position / granularity` as id.
pub fn bin_timestamps<T: Ord + Clone>(
    labels: impl IntoIterator<Item = T>,
    granularity: usize,
) -> BTreeMap<T, usize> {
    assert!(granularity >= 1, "time granularity must be >= 1");
    let distinct: BTreeSet<T> = labels.into_iter().collect();
    distinct
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i / granularity))
        .collect()
}

/// Train/valid/test splits over a shared vocabulary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<Quadruple>,
    pub valid: Vec<Quadruple>,
    pub test: Vec<Quadruple>,
    pub vocab: Vocabulary,
    pub granularity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Dataset {
    pub fn n_entities(&self) -> usize {
        self.vocab.n_entities()
    }

    pub fn n_relations(&self) -> usize {
        self.vocab.n_relations()
    }

    pub fn n_timestamps(&self) -> usize {
        self.vocab.n_timestamps()
    }

    pub fn split(&self, which: Split) -> &[Quadruple] {
        match which {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Quadruple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    /// Every id referenced by a split is inside the vocabulary.
    pub fn check_ids(&self) -> Result<()> {
        let (ne, nr, nt) = (self.n_entities(), self.n_relations(), self.n_timestamps());
        for q in self.all() {
            if q.s >= ne || q.o >= ne || q.r >= nr || q.t >= nt {
                return Err(Error::IdOutOfRange(alloc::format!(
                    "{q:?} with n_e={ne} n_r={nr} n_t={nt}"
                )));
            }
        }
        Ok(())
    }

    /// Number of quadruples that occur in more than one split.
    pub fn split_overlap(&self) -> usize {
        let train: BTreeSet<_> = self.train.iter().collect();
        let valid: BTreeSet<_> = self.valid.iter().collect();
        let test: BTreeSet<_> = self.test.iter().collect();
        train.intersection(&valid).count()
            + train.intersection(&test).count()
            + valid.intersection(&test).count()
    }

    pub fn filter_index(&self) -> FilterIndex {
        build_filter_index([&self.train[..], &self.valid[..], &self.test[..]])
    }
}

/// `eta` corruptions of `q`, each replacing the head or the tail (chosen
/// uniformly) with a different uniformly drawn entity. True facts are not
/// filtered out.
pub fn negative_samples<R: Rng + ?Sized>(
    q: &Quadruple,
    eta: usize,
    rng: &mut R,
    n_entities: usize,
) -> Vec<Quadruple> {
    assert!(n_entities >= 2, "negative sampling needs at least two entities");
    (0..eta)
        .map(|_| {
            let corrupt_head = rng.gen_bool(0.5);
            let original = if corrupt_head { q.s } else { q.o };
            let mut e = rng.gen_range(0..n_entities - 1);
            if e >= original {
                e += 1;
            }
            if corrupt_head {
                Quadruple { s: e, ..*q }
            } else {
                Quadruple { o: e, ..*q }
            }
        })
        .collect()
}

/// True completions per `(s, r, t)` and `(r, o, t)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterIndex {
    pub tail_index: BTreeMap<(usize, usize, usize), BTreeSet<usize>>,
    pub head_index: BTreeMap<(usize, usize, usize), BTreeSet<usize>>,
}

impl FilterIndex {
    pub fn insert(&mut self, q: &Quadruple) {
        self.tail_index.entry((q.s, q.r, q.t)).or_default().insert(q.o);
        self.head_index.entry((q.r, q.o, q.t)).or_default().insert(q.s);
    }

    /// Known tails of `(s, r, ?, t)`.
    pub fn tails(&self, s: usize, r: usize, t: usize) -> Option<&BTreeSet<usize>> {
        self.tail_index.get(&(s, r, t))
    }

    /// Known heads of `(?, r, o, t)`.
    pub fn heads(&self, r: usize, o: usize, t: usize) -> Option<&BTreeSet<usize>> {
        self.head_index.get(&(r, o, t))
    }

    pub fn contains(&self, q: &Quadruple) -> bool {
        self.tails(q.s, q.r, q.t).is_some_and(|set| set.contains(&q.o))
    }
}

pub fn build_filter_index<'a>(splits: impl IntoIterator<Item = &'a [Quadruple]>) -> FilterIndex {
    let mut index = FilterIndex::default();
    for split in splits {
        for q in split {
            index.insert(q);
        }
    }
    index
}
