//! Raw diagnostics for symmetric, asymmetric, inverse and temporally
//! evolving relations. Nothing here applies a threshold.

use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::Quadruple;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quaternion::{hamilton, inverse, normalize, Quaternion, QuaternionVector};

fn check_relation(params: &ModelParams, r: usize) -> Result<()> {
    if r >= params.n_relations() {
        return Err(Error::IdOutOfRange(alloc::format!("relation {r} of {}", params.n_relations())));
    }
    Ok(())
}

fn check_time(params: &ModelParams, t: usize) -> Result<()> {
    if t >= params.n_timestamps() {
        return Err(Error::IdOutOfRange(alloc::format!("timestamp {t} of {}", params.n_timestamps())));
    }
    Ok(())
}

fn l2(xs: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(xs.map(|x| x * x).sum::<f64>())
}

/// `|Re(r)| / |r|` over the flattened relation embedding. Zero for purely
/// imaginary relations, one for purely real ones.
pub fn real_part_magnitude(r: usize, params: &ModelParams) -> Result<f64> {
    check_relation(params, r)?;
    let v = params.relation.row(r);
    let total = v.frobenius();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(l2(v.a.iter().copied()) / total)
}

/// `(|Re(r1) + Re(r2)|, |Im(r1) - Im(r2)|)`, each divided by `|r1| + |r2|`.
/// Both vanish for an exact inverse pair.
pub fn inversion_residual(r1: usize, r2: usize, params: &ModelParams) -> Result<(f64, f64)> {
    check_relation(params, r1)?;
    check_relation(params, r2)?;
    let (x, y) = (params.relation.row(r1), params.relation.row(r2));
    let scale = x.frobenius() + y.frobenius();
    if scale == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let re = l2(x.a.iter().zip(&y.a).map(|(p, q)| p + q));
    let im = l2(
        [(&x.b, &y.b), (&x.c, &y.c), (&x.d, &y.d)]
            .into_iter()
            .flat_map(|(p, q)| p.iter().zip(q.iter()).map(|(u, v)| u - v)),
    );
    Ok((re / scale, im / scale))
}

/// Conjugate `r` coordinate-wise by `q = u2 u1^-1`, with `u1`, `u2` the
/// normalized raw time quaternions: `q r q^-1`.
pub fn transport(r: &QuaternionVector, tau1: &QuaternionVector, tau2: &QuaternionVector) -> Result<QuaternionVector> {
    if tau1.len() != r.len() || tau2.len() != r.len() {
        return Err(Error::ShapeMismatch("transport operands differ in length".into()));
    }
    (0..r.len())
        .map(|m| {
            let u1 = normalize(tau1.get(m))?.quaternion();
            let u2 = normalize(tau2.get(m))?.quaternion();
            let q = hamilton(u2, inverse(u1)?);
            Ok(hamilton(hamilton(q, r.get(m)), inverse(q)?))
        })
        .collect()
}

/// Relation `r1` carried from timestamp `t1` to `t2`.
pub fn temporal_transport(r1: usize, t1: usize, t2: usize, params: &ModelParams) -> Result<QuaternionVector> {
    check_relation(params, r1)?;
    check_time(params, t1)?;
    check_time(params, t2)?;
    transport(&params.relation.row(r1), &params.time.row(t1), &params.time.row(t2))
}

/// Cosine over the flattened `4k` real coordinates.
pub fn cosine_similarity(x: &QuaternionVector, y: &QuaternionVector) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch("cosine operands differ in length".into()));
    }
    let (nx, ny) = (x.frobenius(), y.frobenius());
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = x.flat().zip(y.flat()).map(|(a, b)| a * b).sum();
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// `(max_m ||r1[m]| - |r2[m]||, max_m |Re r1[m] - Re r2[m]|)`: the norm and
/// real-part equalities implied by temporal evolution.
pub fn deduction_check(r1: usize, r2: usize, params: &ModelParams) -> Result<(f64, f64)> {
    check_relation(params, r1)?;
    check_relation(params, r2)?;
    Ok(deduction_residuals(&params.relation.row(r1), &params.relation.row(r2)))
}

pub fn deduction_residuals(x: &QuaternionVector, y: &QuaternionVector) -> (f64, f64) {
    x.iter().zip(y.iter()).fold((0.0f64, 0.0f64), |(dn, dr), (p, q)| {
        (dn.max((p.norm() - q.norm()).abs()), dr.max((p.a - q.a).abs()))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub positive_density: f64,
    pub negative_density: f64,
}

/// Similarity populations for evolved relation pairs and their binned
/// densities over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvolutionHistogram {
    pub bins: Vec<HistogramBin>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl EvolutionHistogram {
    pub fn positive_mean(&self) -> Option<f64> {
        mean(&self.positive)
    }

    pub fn negative_mean(&self) -> Option<f64> {
        mean(&self.negative)
    }
}

fn bin_densities(values: &[f64], n_bins: usize, width: f64) -> Vec<f64> {
    let mut counts = alloc::vec![0usize; n_bins];
    for &v in values {
        let i = libm::floor((v + 1.0) / width);
        let i = if i < 0.0 { 0 } else { (i as usize).min(n_bins - 1) };
        counts[i] += 1;
    }
    let total = values.len() as f64 * width;
    counts.into_iter().map(|c| if total > 0.0 { c as f64 / total } else { 0.0 }).collect()
}

/// For each `(base, target)` pair, the cosine between the base relation
/// transported from the base to the target timestamp and the target
/// relation (positive), plus `negatives_per_pair` cosines against relations
/// drawn uniformly from those different from the target (negative).
pub fn evolution_histogram<R: Rng + ?Sized>(
    pairs: &[(Quadruple, Quadruple)],
    negatives_per_pair: usize,
    params: &ModelParams,
    bin_width: f64,
    rng: &mut R,
) -> Result<EvolutionHistogram> {
    if !(bin_width > 0.0 && bin_width <= 2.0) {
        return Err(Error::InvalidConfig("histogram bin width must be in (0, 2]".into()));
    }
    if pairs.is_empty() {
        return Ok(EvolutionHistogram::default());
    }
    let n_r = params.n_relations();
    let mut hist = EvolutionHistogram::default();
    for (base, target) in pairs {
        let moved = temporal_transport(base.r, base.t, target.t, params)?;
        check_relation(params, target.r)?;
        hist.positive.push(cosine_similarity(&moved, &params.relation.row(target.r))?);
        if n_r < 2 {
            continue;
        }
        for _ in 0..negatives_per_pair {
            let mut neg = rng.gen_range(0..n_r - 1);
            if neg >= target.r {
                neg += 1;
            }
            hist.negative.push(cosine_similarity(&moved, &params.relation.row(neg))?);
        }
    }
    let n_bins = libm::ceil(2.0 / bin_width - 1e-9) as usize;
    let pos = bin_densities(&hist.positive, n_bins, bin_width);
    let neg = bin_densities(&hist.negative, n_bins, bin_width);
    hist.bins = (0..n_bins)
        .map(|i| HistogramBin {
            lo: -1.0 + i as f64 * bin_width,
            hi: (-1.0 + (i + 1) as f64 * bin_width).min(1.0),
            positive_density: pos[i],
            negative_density: neg[i],
        })
        .collect();
    Ok(hist)
}

/// Quaternion with the real part of `q` negated; with `r2 = inverse_partner(r1)`
/// the pair has zero inversion residual.
pub fn inverse_partner(q: Quaternion) -> Quaternion {
    Quaternion::new(-q.a, q.b, q.c, q.d)
}
