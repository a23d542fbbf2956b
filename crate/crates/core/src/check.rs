//! Self-test battery: randomized property suites for the quaternion kernel,
//! the rotation, the analytic gradient and the filtered ranking.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{build_filter_index, negative_samples, Quadruple};
use crate::error::Result;
use crate::eval::{rank, Side};
use crate::model::{gradients, init_params, loss, EmbeddingTable, ModelParams, ScoreAgg};
use crate::quaternion::{
    conj_product_identity_check, hamilton, hamilton_3d, inverse, norm, norm3, rodrigues_oracle, rotate,
    unit_from_axis_angle, Quaternion,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Quaternion,
    Rotation,
    Gradient,
    Ranking,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Quaternion, Suite::Rotation, Suite::Gradient, Suite::Ranking];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Quaternion => "quaternion",
            Suite::Rotation => "rotation",
            Suite::Gradient => "gradient",
            Suite::Ranking => "ranking",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Worst residual of one property over all cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check { name, max_residual: 0.0, tolerance }
    }

    fn record(&mut self, residual: f64) {
        // NaN must fail
        if !(residual <= self.max_residual) {
            self.max_residual = residual;
        }
    }

    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

pub fn random_quaternion<R: Rng>(rng: &mut R, scale: f64) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

pub fn random_axis<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = norm3(v);
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Hamilton product routes, norm multiplicativity, conjugate reversal and
/// two-sided inverses for norms spread log-uniformly over `[1e-6, 1e6]`.
pub fn quaternion_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut routes = Check::new("hamilton == hamilton_3d", 1e-12);
    let mut mult = Check::new("|pq| == |p||q| (relative)", 1e-10);
    let mut conj2 = Check::new("conj(pq) == conj(q)conj(p)", 1e-12);
    let mut conj3 = Check::new("conj(pqr) == conj(r)conj(q)conj(p)", 1e-12);
    let mut inv = Check::new("q q^-1 == q^-1 q == 1", 1e-12);
    for _ in 0..cases {
        let (p, q, r) = (random_quaternion(&mut rng, 2.0), random_quaternion(&mut rng, 2.0), random_quaternion(&mut rng, 2.0));
        routes.record(hamilton(p, q).max_abs_diff(hamilton_3d(p, q)));
        let expected = norm(p) * norm(q);
        mult.record((norm(hamilton(p, q)) - expected).abs() / expected.max(f64::MIN_POSITIVE));
        conj2.record(conj_product_identity_check(&[p, q]));
        conj3.record(conj_product_identity_check(&[p, q, r]));
        let target = libm::exp(rng.gen_range(-13.8155..13.8155));
        let x = p.scale(target / norm(p).max(f64::MIN_POSITIVE));
        match inverse(x) {
            Ok(xi) => {
                inv.record(hamilton(x, xi).max_abs_diff(Quaternion::ONE));
                inv.record(hamilton(xi, x).max_abs_diff(Quaternion::ONE));
            }
            Err(_) => inv.record(f64::INFINITY),
        }
    }
    SuiteReport { suite: Suite::Quaternion, cases, checks: alloc::vec![routes, mult, conj2, conj3, inv] }
}

/// Sandwich rotation against Rodrigues' formula, plus real-part and norm
/// preservation.
pub fn rotation_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = Check::new("Im(q x conj(q)) == rodrigues", 1e-10);
    let mut real = Check::new("real part preserved", 1e-10);
    let mut size = Check::new("norm preserved", 1e-10);
    for _ in 0..cases {
        let x = random_quaternion(&mut rng, 3.0);
        let axis = random_axis(&mut rng);
        let angle = rng.gen_range(-core::f64::consts::TAU..core::f64::consts::TAU);
        let u = unit_from_axis_angle(axis, angle).expect("unit axis");
        let y = rotate(x, &u);
        let v = rodrigues_oracle(x.im(), axis, angle).expect("unit axis");
        oracle.record(Quaternion::pure(v).max_abs_diff(Quaternion::pure(y.im())));
        real.record((y.a - x.a).abs());
        size.record((norm(y) - norm(x)).abs());
    }
    SuiteReport { suite: Suite::Rotation, cases, checks: alloc::vec![oracle, real, size] }
}

fn table(params: &mut ModelParams, which: usize) -> &mut EmbeddingTable {
    match which {
        0 => &mut params.entity,
        1 => &mut params.relation,
        _ => &mut params.time,
    }
}

/// Largest relative error between the analytic gradient and central
/// differences over every coordinate of every table. The denominator is
/// floored at `1e-6` so that vanishing partials are compared absolutely.
pub fn finite_difference_error(
    params: &ModelParams,
    pos: &Quadruple,
    negs: &[Quadruple],
    margin: f64,
    step: f64,
) -> Result<f64> {
    let g = gradients(pos, negs, margin, params)?;
    let k = params.k();
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        let grads = [&g.entity, &g.relation, &g.time][which];
        let rows = table(&mut params.clone(), which).rows();
        for row in 0..rows {
            for ch in 0..4 {
                for m in 0..k {
                    let at = |delta: f64| -> Result<f64> {
                        let mut p = params.clone();
                        table(&mut p, which).channels_mut()[ch][row * k + m] += delta;
                        loss(pos, negs, margin, &p)
                    };
                    let fd = (at(step)? - at(-step)?) / (2.0 * step);
                    let an = grads.get(&row).map_or(0.0, |r| r[ch * k + m]);
                    let denom = fd.abs().max(an.abs()).max(1e-6);
                    worst = worst.max((fd - an).abs() / denom);
                }
            }
        }
    }
    Ok(worst)
}

/// A random micro-instance: `k <= 8`, `n_e <= 5`, `eta <= 3`.
pub fn micro_instance<R: Rng>(rng: &mut R) -> (ModelParams, Quadruple, Vec<Quadruple>, f64) {
    let k = rng.gen_range(1..=8);
    let n_e = rng.gen_range(2..=5);
    let n_r = rng.gen_range(1..=3);
    let n_t = rng.gen_range(1..=3);
    let eta = rng.gen_range(1..=3);
    let agg = if rng.gen_bool(0.5) { ScoreAgg::L1 } else { ScoreAgg::L2 };
    let params = init_params(n_e, n_r, n_t, k, rng).with_score_agg(agg);
    let pos = Quadruple::new(rng.gen_range(0..n_e), rng.gen_range(0..n_r), rng.gen_range(0..n_e), rng.gen_range(0..n_t));
    let negs = negative_samples(&pos, eta, rng, n_e);
    // margin near the typical score so neither sigmoid saturates
    let margin = rng.gen_range(0.5..2.0) * k as f64;
    (params, pos, negs, margin)
}

pub fn gradient_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fd = Check::new("analytic vs central differences (relative)", 1e-4);
    for _ in 0..cases {
        let (p, pos, negs, margin) = micro_instance(&mut rng);
        fd.record(finite_difference_error(&p, &pos, &negs, margin, 1e-5).unwrap_or(f64::INFINITY));
    }
    SuiteReport { suite: Suite::Gradient, cases, checks: alloc::vec![fd] }
}

/// Filtered rank by materializing every candidate, dropping known facts at
/// the same timestamp and sorting.
pub fn brute_force_rank(
    q: &Quadruple,
    params: &ModelParams,
    known: &[Quadruple],
    side: Side,
) -> Result<usize> {
    let mut candidates: Vec<(f64, bool)> = Vec::new();
    for e in 0..params.n_entities() {
        let c = match side {
            Side::Head => Quadruple { s: e, ..*q },
            Side::Tail => Quadruple { o: e, ..*q },
        };
        let is_answer = c == *q;
        if !is_answer && known.contains(&c) {
            continue;
        }
        candidates.push((crate::model::score(params, &c)?.value, is_answer));
    }
    candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite scores").then(y.1.cmp(&x.1)));
    Ok(1 + candidates.iter().position(|c| c.1).expect("answer present"))
}

/// Seeded graphs with at most 10 entities and 5 relations; the residual is
/// the number of mismatching ranks.
pub fn ranking_suite(seed: u64, graphs: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0usize;
    for _ in 0..graphs {
        let n_e = rng.gen_range(2..=10);
        let n_r = rng.gen_range(1..=5);
        let n_t = rng.gen_range(1..=4);
        let params = init_params(n_e, n_r, n_t, rng.gen_range(1..=6), &mut rng);
        let n_facts = rng.gen_range(1..=30);
        let facts: Vec<Quadruple> = (0..n_facts)
            .map(|_| Quadruple::new(rng.gen_range(0..n_e), rng.gen_range(0..n_r), rng.gen_range(0..n_e), rng.gen_range(0..n_t)))
            .collect();
        let filter = build_filter_index([&facts[..]]);
        for q in &facts {
            for side in Side::BOTH {
                let fast = rank(q, &params, &filter, side);
                let slow = brute_force_rank(q, &params, &facts, side);
                if fast.is_err() || fast.ok() != slow.ok() {
                    mismatches += 1;
                }
            }
        }
    }
    let mut exact = Check::new("rank == brute-force rank (mismatches)", 0.0);
    exact.record(mismatches as f64);
    SuiteReport { suite: Suite::Ranking, cases: graphs, checks: alloc::vec![exact] }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    match suite {
        Suite::Quaternion => quaternion_suite(seed, 10_000),
        Suite::Rotation => rotation_suite(seed, 10_000),
        Suite::Gradient => gradient_suite(seed, 100),
        Suite::Ranking => ranking_suite(seed, 50),
    }
}
