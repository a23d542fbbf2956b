//! Embedding tables, the time-rotation forward pass, the translational score,
//! the margin loss and its analytic gradient.
//!
//! For a fact `(s, r, o, t)` every coordinate `m` is scored as
//!
//! ```text
//! u      = normalize(tau_raw[t][m])
//! s_t    = u s[m] conj(u)
//! o_t    = u o[m] conj(u)
//! res[m] = s_t + r[m] - conj(o_t)
//! ```
//!
//! and the per-coordinate norms `|res[m]|` are aggregated by [`ScoreAgg`].
//! Lower scores mean more plausible facts.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::dataset::Quadruple;
use crate::error::{Error, Result};
use crate::quaternion::{
    conjugate, hamilton, inner, norm, normalize, rotate, Quaternion, QuaternionVector,
    UnitQuaternion,
};

/// How per-coordinate residual norms are combined into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreAgg {
    /// `sum_m |res[m]|`
    #[default]
    L1,
    /// `sqrt(sum_m |res[m]|^2)`
    L2,
}

impl ScoreAgg {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScoreAgg::L1 => "l1",
            ScoreAgg::L2 => "l2",
        }
    }
}

impl fmt::Display for ScoreAgg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreAgg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(ScoreAgg::L1),
            "l2" => Ok(ScoreAgg::L2),
            other => Err(Error::InvalidConfig(alloc::format!("unknown score aggregation `{other}`"))),
        }
    }
}

/// `rows` quaternion vectors of length `k`, stored channel by channel:
/// `a[row * k + m]` is the real part of coordinate `m` of `row`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: usize,
    k: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, k: usize) -> Self {
        let n = rows * k;
        EmbeddingTable { rows, k, a: vec![0.0; n], b: vec![0.0; n], c: vec![0.0; n], d: vec![0.0; n] }
    }

    pub fn from_channels(rows: usize, k: usize, channels: [Vec<f64>; 4]) -> Result<Self> {
        let n = rows * k;
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "table of {rows}x{k} needs {n} values per channel"
            )));
        }
        let [a, b, c, d] = channels;
        Ok(EmbeddingTable { rows, k, a, b, c, d })
    }

    /// Every coordinate drawn uniformly from `[-bound, bound]`, channel `a`
    /// first, then `b`, `c`, `d`.
    pub fn uniform<R: Rng + ?Sized>(rows: usize, k: usize, bound: f64, rng: &mut R) -> Self {
        let mut t = EmbeddingTable::zeros(rows, k);
        for ch in t.channels_mut() {
            for x in ch.iter_mut() {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        t
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn quat(&self, row: usize, m: usize) -> Quaternion {
        let i = row * self.k + m;
        Quaternion::new(self.a[i], self.b[i], self.c[i], self.d[i])
    }

    #[inline]
    pub fn set_quat(&mut self, row: usize, m: usize, q: Quaternion) {
        let i = row * self.k + m;
        self.a[i] = q.a;
        self.b[i] = q.b;
        self.c[i] = q.c;
        self.d[i] = q.d;
    }

    pub fn row(&self, row: usize) -> QuaternionVector {
        (0..self.k).map(|m| self.quat(row, m)).collect()
    }

    pub fn set_row(&mut self, row: usize, v: &QuaternionVector) -> Result<()> {
        if v.len() != self.k {
            return Err(Error::ShapeMismatch(alloc::format!(
                "row of length {} in a table with k = {}",
                v.len(),
                self.k
            )));
        }
        for (m, q) in v.iter().enumerate() {
            self.set_quat(row, m, q);
        }
        Ok(())
    }

    pub fn channels(&self) -> [&[f64]; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn channels_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.a, &mut self.b, &mut self.c, &mut self.d]
    }

    pub fn scale(&mut self, factor: f64) {
        for ch in self.channels_mut() {
            ch.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Entity, relation and raw (unnormalized) timestamp tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub entity: EmbeddingTable,
    pub relation: EmbeddingTable,
    pub time: EmbeddingTable,
    pub score_agg: ScoreAgg,
}

/// Half-width of the uniform initialization interval, `6 / sqrt(4k)`.
pub fn init_bound(k: usize) -> f64 {
    6.0 / libm::sqrt(4.0 * k as f64)
}

/// Uniform initialization in `[-6/sqrt(4k), 6/sqrt(4k)]` for all three
/// tables, drawn in the order entity, relation, time.
pub fn init_params<R: Rng + ?Sized>(
    n_entities: usize,
    n_relations: usize,
    n_timestamps: usize,
    k: usize,
    rng: &mut R,
) -> ModelParams {
    assert!(n_entities >= 1 && n_relations >= 1 && n_timestamps >= 1 && k >= 1);
    let bound = init_bound(k);
    ModelParams {
        entity: EmbeddingTable::uniform(n_entities, k, bound, rng),
        relation: EmbeddingTable::uniform(n_relations, k, bound, rng),
        time: EmbeddingTable::uniform(n_timestamps, k, bound, rng),
        score_agg: ScoreAgg::L1,
    }
}

impl ModelParams {
    pub fn with_score_agg(mut self, agg: ScoreAgg) -> Self {
        self.score_agg = agg;
        self
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.entity.k()
    }

    pub fn n_entities(&self) -> usize {
        self.entity.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.relation.rows()
    }

    pub fn n_timestamps(&self) -> usize {
        self.time.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.entity.is_finite() && self.relation.is_finite() && self.time.is_finite()
    }

    pub fn check_quadruple(&self, q: &Quadruple) -> Result<()> {
        if q.s >= self.n_entities()
            || q.o >= self.n_entities()
            || q.r >= self.n_relations()
            || q.t >= self.n_timestamps()
        {
            return Err(Error::IdOutOfRange(alloc::format!(
                "{q:?} with n_e={} n_r={} n_t={}",
                self.n_entities(),
                self.n_relations(),
                self.n_timestamps()
            )));
        }
        Ok(())
    }

    /// Unit time quaternion of coordinate `m` at timestamp `t`.
    #[inline]
    pub fn time_unit(&self, t: usize, m: usize) -> Result<UnitQuaternion> {
        normalize(self.time.quat(t, m))
    }

    /// All entities rotated into timestamp `t`, row-major `[e * k + m]`.
    pub fn rotated_entities(&self, t: usize) -> Result<Vec<Quaternion>> {
        let k = self.k();
        let units: Vec<UnitQuaternion> = (0..k).map(|m| self.time_unit(t, m)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(self.n_entities() * k);
        for e in 0..self.n_entities() {
            for (m, u) in units.iter().enumerate() {
                out.push(rotate(self.entity.quat(e, m), u));
            }
        }
        Ok(out)
    }
}

/// Rotate each coordinate of `e` by the normalized coordinate of `tau_raw`.
pub fn time_specific_entity(e: &QuaternionVector, tau_raw: &QuaternionVector) -> Result<QuaternionVector> {
    e.rotate_by(tau_raw)
}

#[inline]
fn residual(s_t: Quaternion, r: Quaternion, o_t: Quaternion) -> Quaternion {
    (s_t + r) - conjugate(o_t)
}

#[derive(Debug, Clone, Copy, Default)]
struct Agg {
    l1: f64,
    sq: f64,
}

impl Agg {
    #[inline]
    fn push(&mut self, n: f64) {
        self.l1 += n;
        self.sq += n * n;
    }

    #[inline]
    fn finish(self, agg: ScoreAgg) -> f64 {
        match agg {
            ScoreAgg::L1 => self.l1,
            ScoreAgg::L2 => libm::sqrt(self.sq),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub s_t: QuaternionVector,
    pub o_t: QuaternionVector,
    /// `s_t + r - conj(o_t)`
    pub residual: QuaternionVector,
    pub value: f64,
}

/// Full forward pass for one fact.
pub fn score(params: &ModelParams, q: &Quadruple) -> Result<ScoreBreakdown> {
    params.check_quadruple(q)?;
    let k = params.k();
    let (mut s_t, mut o_t, mut res) =
        (QuaternionVector::zeros(k), QuaternionVector::zeros(k), QuaternionVector::zeros(k));
    let mut agg = Agg::default();
    for m in 0..k {
        let u = params.time_unit(q.t, m)?;
        let st = rotate(params.entity.quat(q.s, m), &u);
        let ot = rotate(params.entity.quat(q.o, m), &u);
        let rm = residual(st, params.relation.quat(q.r, m), ot);
        agg.push(norm(rm));
        s_t.set(m, st);
        o_t.set(m, ot);
        res.set(m, rm);
    }
    Ok(ScoreBreakdown { s_t, o_t, residual: res, value: agg.finish(params.score_agg) })
}

/// Score value only; bit-identical to `score(..).value`.
pub fn score_value(params: &ModelParams, q: &Quadruple) -> Result<f64> {
    params.check_quadruple(q)?;
    let mut agg = Agg::default();
    for m in 0..params.k() {
        let u = params.time_unit(q.t, m)?;
        let st = rotate(params.entity.quat(q.s, m), &u);
        let ot = rotate(params.entity.quat(q.o, m), &u);
        agg.push(norm(residual(st, params.relation.quat(q.r, m), ot)));
    }
    Ok(agg.finish(params.score_agg))
}

/// Score of `(s, r, o)` from entities already rotated into the fact's
/// timestamp (see [`ModelParams::rotated_entities`]). Bit-identical to
/// [`score_value`].
#[inline]
pub fn score_rotated(params: &ModelParams, rotated: &[Quaternion], s: usize, r: usize, o: usize) -> f64 {
    let k = params.k();
    let (st, ot) = (&rotated[s * k..(s + 1) * k], &rotated[o * k..(o + 1) * k]);
    let mut agg = Agg::default();
    for m in 0..k {
        agg.push(norm(residual(st[m], params.relation.quat(r, m), ot[m])));
    }
    agg.finish(params.score_agg)
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `-log sigmoid(margin - f(pos)) - sum_i log sigmoid(f(neg_i) - margin)`.
pub fn loss_from_scores(pos: f64, negs: &[f64], margin: f64) -> f64 {
    softplus(pos - margin) + negs.iter().map(|&f| softplus(margin - f)).sum::<f64>()
}

pub fn loss(pos: &Quadruple, negs: &[Quadruple], margin: f64, params: &ModelParams) -> Result<f64> {
    let fp = score_value(params, pos)?;
    let fn_: Vec<f64> = negs.iter().map(|n| score_value(params, n)).collect::<Result<_>>()?;
    Ok(loss_from_scores(fp, &fn_, margin))
}

/// Gradient rows keyed by row id; each row is laid out `a(k) b(k) c(k) d(k)`.
pub type RowGrads = BTreeMap<usize, Vec<f64>>;

/// Sparse gradient of the loss: only touched rows are present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub entity: RowGrads,
    pub relation: RowGrads,
    pub time: RowGrads,
}

#[inline]
fn add_quat(rows: &mut RowGrads, row: usize, k: usize, m: usize, g: Quaternion) {
    let v = rows.entry(row).or_insert_with(|| vec![0.0; 4 * k]);
    v[m] += g.a;
    v[k + m] += g.b;
    v[2 * k + m] += g.c;
    v[3 * k + m] += g.d;
}

fn add_rows(into: &mut RowGrads, from: &RowGrads, scale: f64) {
    for (row, g) in from {
        let dst = into.entry(*row).or_insert_with(|| vec![0.0; g.len()]);
        for (d, x) in dst.iter_mut().zip(g) {
            *d += scale * x;
        }
    }
}

impl Gradients {
    /// `self += scale * other`, rows visited in ascending id order.
    pub fn accumulate(&mut self, other: &Gradients, scale: f64) {
        self.loss += scale * other.loss;
        add_rows(&mut self.entity, &other.entity, scale);
        add_rows(&mut self.relation, &other.relation, scale);
        add_rows(&mut self.time, &other.time, scale);
    }

    pub fn is_empty(&self) -> bool {
        self.entity.is_empty() && self.relation.is_empty() && self.time.is_empty()
    }
}

/// Add `weight * d f(q) / d params` into `grads`.
fn add_score_gradient(params: &ModelParams, q: &Quadruple, weight: f64, grads: &mut Gradients) -> Result<()> {
    let k = params.k();
    let mut cache = Vec::with_capacity(k);
    let mut agg = Agg::default();
    for m in 0..k {
        let raw = params.time.quat(q.t, m);
        let u = normalize(raw)?;
        let st = rotate(params.entity.quat(q.s, m), &u);
        let ot = rotate(params.entity.quat(q.o, m), &u);
        let res = residual(st, params.relation.quat(q.r, m), ot);
        let n = norm(res);
        agg.push(n);
        cache.push((raw, u.quaternion(), res, n));
    }
    let f = agg.finish(params.score_agg);

    for (m, &(raw, u, res, n)) in cache.iter().enumerate() {
        // d f / d res[m]; zero subgradient at the norm's kink
        let denom = match params.score_agg {
            ScoreAgg::L1 => n,
            ScoreAgg::L2 => f,
        };
        if denom == 0.0 {
            continue;
        }
        let g = res.scale(weight / denom);
        let g_im = Quaternion::pure(g.im());

        add_quat(&mut grads.relation, q.r, k, m, g);

        // res.a = s.a + r.a - o.a; res.v = R(v_s + v_o) + v_r
        let back = hamilton(hamilton(conjugate(u), g_im), u);
        let back = Quaternion::pure(back.im());
        add_quat(&mut grads.entity, q.s, k, m, Quaternion::real(g.a) + back);
        add_quat(&mut grads.entity, q.o, k, m, Quaternion::real(-g.a) + back);

        // d <G, u w conj(u)> / du = -2 G u w, then through u = p / |p|
        let (s, o) = (params.entity.quat(q.s, m), params.entity.quat(q.o, m));
        let w = Quaternion::pure([s.b + o.b, s.c + o.c, s.d + o.d]);
        let gu = hamilton(hamilton(g_im, u), w).scale(-2.0);
        let gp = (gu - u.scale(inner(u, gu))).scale(1.0 / norm(raw));
        add_quat(&mut grads.time, q.t, k, m, gp);
    }
    Ok(())
}

/// Loss and analytic gradient for one positive and its negatives.
pub fn gradients(pos: &Quadruple, negs: &[Quadruple], margin: f64, params: &ModelParams) -> Result<Gradients> {
    params.check_quadruple(pos)?;
    for n in negs {
        params.check_quadruple(n)?;
    }
    let fp = score_value(params, pos)?;
    let fn_: Vec<f64> = negs.iter().map(|n| score_value(params, n)).collect::<Result<_>>()?;
    let mut grads = Gradients { loss: loss_from_scores(fp, &fn_, margin), ..Default::default() };

    add_score_gradient(params, pos, sigmoid(fp - margin), &mut grads)?;
    for (n, &f) in negs.iter().zip(&fn_) {
        add_score_gradient(params, n, -sigmoid(margin - f), &mut grads)?;
    }
    Ok(grads)
}
