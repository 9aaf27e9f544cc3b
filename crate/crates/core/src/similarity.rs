//! Similarity kernels and the pool classification rule.
//!
//! Distances are negated so that for every kind a higher value means more
//! similar: L1 and L2 give values `<= 0` (0 only for identical vectors),
//! cosine gives values in `[-1, 1]`.
//!
//! Kernels accept any element type that widens to `f64` and always
//! accumulate in `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};
use crate::par;
use crate::types::{check_dim, ClassId, LabelVector, Pool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimilarityKind {
    L1,
    L2,
    Cosine,
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimilarityKind::L1 => "l1",
            SimilarityKind::L2 => "l2",
            SimilarityKind::Cosine => "cosine",
        })
    }
}

impl FromStr for SimilarityKind {
    type Err = LvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(SimilarityKind::L1),
            "l2" => Ok(SimilarityKind::L2),
            "cosine" | "cos" => Ok(SimilarityKind::Cosine),
            other => Err(LvpError::InvalidConfig(format!(
                "unknown similarity '{other}' (expected l1, l2 or cosine)"
            ))),
        }
    }
}

/// Inverse temperature applied to scores before the softmax.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxConfig {
    pub inverse_temperature: f64,
}

impl SoftmaxConfig {
    pub fn new(inverse_temperature: f64) -> Result<Self> {
        if !(inverse_temperature.is_finite() && inverse_temperature > 0.0) {
            return Err(LvpError::InvalidConfig(format!(
                "inverse temperature must be positive and finite, got {inverse_temperature}"
            )));
        }
        Ok(SoftmaxConfig {
            inverse_temperature,
        })
    }
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig {
            inverse_temperature: 1.0,
        }
    }
}

const LANES: usize = 8;

#[inline]
fn widen<T: Copy + Into<f64>>(x: T) -> f64 {
    x.into()
}

#[inline]
fn l1_blocked<A, B>(a: &[A], b: &[B]) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            acc[i] += (widen(x[i]) - widen(y[i])).abs();
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += (widen(*x) - widen(*y)).abs();
    }
    acc.iter().sum::<f64>() + tail
}

#[inline]
fn l2sq_blocked<A, B>(a: &[A], b: &[B]) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            let d = widen(x[i]) - widen(y[i]);
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = widen(*x) - widen(*y);
        tail += d * d;
    }
    acc.iter().sum::<f64>() + tail
}

/// Returns (a·b, ‖a‖², ‖b‖²) in one pass.
#[inline]
fn dot_norms_blocked<A, B>(a: &[A], b: &[B]) -> (f64, f64, f64)
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let mut dot = [0.0f64; LANES];
    let mut na = [0.0f64; LANES];
    let mut nb = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            let (p, q) = (widen(x[i]), widen(y[i]));
            dot[i] += p * q;
            na[i] += p * p;
            nb[i] += q * q;
        }
    }
    let (mut td, mut ta, mut tb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(rb) {
        let (p, q) = (widen(*x), widen(*y));
        td += p * q;
        ta += p * p;
        tb += q * q;
    }
    (
        dot.iter().sum::<f64>() + td,
        na.iter().sum::<f64>() + ta,
        nb.iter().sum::<f64>() + tb,
    )
}

/// Similarity without dimension checks. Callers must have validated lengths.
#[inline]
pub(crate) fn sim_unchecked<A, B>(kind: SimilarityKind, a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    Ok(match kind {
        SimilarityKind::L1 => -l1_blocked(a, b),
        SimilarityKind::L2 => -l2sq_blocked(a, b).sqrt(),
        SimilarityKind::Cosine => {
            let (dot, na, nb) = dot_norms_blocked(a, b);
            if na == 0.0 || nb == 0.0 {
                return Err(LvpError::ZeroVector);
            }
            dot / (na.sqrt() * nb.sqrt())
        }
    })
}

/// Similarity between two vectors; higher means more alike.
pub fn sim<A, B>(kind: SimilarityKind, a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    check_dim(a.len(), b.len())?;
    sim_unchecked(kind, a, b)
}

/// Plain one-accumulator loops, kept as the reference the blocked kernels are
/// checked against.
pub mod reference {
    use super::SimilarityKind;

    pub fn sim(kind: SimilarityKind, a: &[f32], b: &[f32]) -> f64 {
        assert_eq!(a.len(), b.len());
        match kind {
            SimilarityKind::L1 => {
                let mut s = 0.0f64;
                for i in 0..a.len() {
                    s += (a[i] as f64 - b[i] as f64).abs();
                }
                -s
            }
            SimilarityKind::L2 => {
                let mut s = 0.0f64;
                for i in 0..a.len() {
                    let d = a[i] as f64 - b[i] as f64;
                    s += d * d;
                }
                -s.sqrt()
            }
            SimilarityKind::Cosine => {
                let (mut d, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
                for i in 0..a.len() {
                    d += a[i] as f64 * b[i] as f64;
                    na += a[i] as f64 * a[i] as f64;
                    nb += b[i] as f64 * b[i] as f64;
                }
                d / (na.sqrt() * nb.sqrt())
            }
        }
    }
}

/// Max similarity between the query and any entry of one class.
pub fn pool_similarity(kind: SimilarityKind, entries: &[LabelVector], query: &[f32]) -> Result<f64> {
    let first = entries.first().ok_or_else(|| {
        LvpError::InvalidLabelVector("pool entry list is empty".to_string())
    })?;
    let dim = first.vector.dim();
    check_dim(dim, query.len())?;
    let mut best = f64::NEG_INFINITY;
    for lv in entries {
        check_dim(dim, lv.vector.dim())?;
        let s = sim_unchecked(kind, &lv.vector, query)?;
        if s > best {
            best = s;
        }
    }
    Ok(best)
}

/// Per-class pre-softmax scores plus how many kernel calls produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassScores {
    pub scores: BTreeMap<ClassId, f64>,
    pub evaluations: usize,
}

pub fn class_scores(kind: SimilarityKind, pool: &Pool, query: &[f32]) -> Result<ClassScores> {
    if pool.is_empty() {
        return Err(LvpError::EmptyPool);
    }
    check_dim(pool.dim(), query.len())?;
    let mut scores = BTreeMap::new();
    let mut evaluations = 0;
    for (class, entries) in pool.entries() {
        let mut best = f64::NEG_INFINITY;
        for lv in entries {
            let s = sim_unchecked(kind, &lv.vector, query)?;
            evaluations += 1;
            if s > best {
                best = s;
            }
        }
        scores.insert(class.clone(), best);
    }
    Ok(ClassScores {
        scores,
        evaluations,
    })
}

/// Numerically stable softmax of `tau * scores`.
pub fn softmax(scores: &[f64], tau: f64) -> Vec<f64> {
    let m = scores
        .iter()
        .map(|s| tau * s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (tau * s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn class_probabilities(
    scores: &BTreeMap<ClassId, f64>,
    cfg: SoftmaxConfig,
) -> BTreeMap<ClassId, f64> {
    let values: Vec<f64> = scores.values().copied().collect();
    let probs = softmax(&values, cfg.inverse_temperature);
    scores.keys().cloned().zip(probs).collect()
}

/// Index of the first maximum, so ties go to the earliest (smallest) class.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Predicted class and the full probability map.
pub fn classify(
    kind: SimilarityKind,
    pool: &Pool,
    query: &[f32],
    cfg: SoftmaxConfig,
) -> Result<(ClassId, BTreeMap<ClassId, f64>)> {
    let scores = class_scores(kind, pool, query)?.scores;
    let best = argmax(scores.values().copied()).ok_or(LvpError::EmptyPool)?;
    let class = scores.keys().nth(best).cloned().ok_or(LvpError::EmptyPool)?;
    Ok((class, class_probabilities(&scores, cfg)))
}

/// Decision only. Softmax is monotone, so this matches `classify` for any
/// temperature without computing probabilities.
pub fn predict(kind: SimilarityKind, pool: &Pool, query: &[f32]) -> Result<ClassId> {
    if pool.is_empty() {
        return Err(LvpError::EmptyPool);
    }
    check_dim(pool.dim(), query.len())?;
    let mut best: Option<(&ClassId, f64)> = None;
    for (class, entries) in pool.entries() {
        let mut s = f64::NEG_INFINITY;
        for lv in entries {
            s = s.max(sim_unchecked(kind, &lv.vector, query)?);
        }
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((class, s)),
        }
    }
    Ok(best.map(|(c, _)| c.clone()).expect("non-empty pool"))
}

/// Classifies many queries; parallel across queries when enabled, with output
/// identical to a sequential loop.
pub fn predict_batch<Q>(kind: SimilarityKind, pool: &Pool, queries: &[Q]) -> Result<Vec<ClassId>>
where
    Q: AsRef<[f32]> + Sync,
{
    par::try_map(queries, |q| predict(kind, pool, q.as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Embedding, Modality};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn lv(class: u32, v: &[f32]) -> LabelVector {
        LabelVector::new(emb(v), ClassId::new("t", class), None, Modality::ImageMean, 1).unwrap()
    }

    fn pool_of(vs: &[(u32, &[f32])]) -> Pool {
        let mut p = Pool::new(vs[0].1.len()).unwrap();
        for (c, v) in vs {
            p.push(lv(*c, v)).unwrap();
        }
        p
    }

    #[test]
    fn worked_examples() {
        let a = [0.5f32, -1.0];
        assert_eq!(sim(SimilarityKind::L1, &a, &a).unwrap(), 0.0);
        assert_eq!(
            sim(SimilarityKind::Cosine, &[1.0f32, 0.0, 0.0], &[0.0f32, 1.0, 0.0]).unwrap(),
            0.0
        );
        // 24 / (5 * 5)
        let c = sim(SimilarityKind::Cosine, &[3.0f32, 4.0], &[4.0f32, 3.0]).unwrap();
        assert!((c - 0.96).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(matches!(
            sim(SimilarityKind::L1, &[1.0f32], &[1.0f32, 2.0]),
            Err(LvpError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            sim(SimilarityKind::Cosine, &[0.0f32, 0.0], &[1.0f32, 2.0]),
            Err(LvpError::ZeroVector)
        ));
    }

    #[test]
    fn pool_similarity_takes_max() {
        // L1 sims to query [0] are -2, -0.5, -1.1
        let entries = vec![lv(0, &[2.0]), lv(0, &[0.5]), lv(0, &[-1.1])];
        let s = pool_similarity(SimilarityKind::L1, &entries, &[0.0]).unwrap();
        assert_eq!(s, -0.5);
        assert!(pool_similarity(SimilarityKind::L1, &[], &[0.0]).is_err());
    }

    #[test]
    fn pool_similarity_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [SimilarityKind::L1, SimilarityKind::L2, SimilarityKind::Cosine] {
            let entries: Vec<LabelVector> = (0..7)
                .map(|_| {
                    let v: Vec<f32> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                    lv(0, &v)
                })
                .collect();
            let q: Vec<f32> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut sims = Vec::new();
            for e in &entries {
                sims.push(reference::sim(kind, &e.vector, &q));
            }
            let want = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let got = pool_similarity(kind, &entries, &q).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn scores_count_evaluations() {
        let mut p = Pool::new(2).unwrap();
        for c in 0..100u32 {
            p.push(lv(c, &[c as f32, 1.0])).unwrap();
        }
        let s = class_scores(SimilarityKind::Cosine, &p, &[1.0, 1.0]).unwrap();
        assert_eq!(s.evaluations, 100);
        assert_eq!(s.scores.len(), 100);

        let single = pool_of(&[(4, &[1.0, 2.0])]);
        assert_eq!(class_scores(SimilarityKind::L2, &single, &[0.0, 0.0]).unwrap().scores.len(), 1);
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[1.0, 0.0], 1.0);
        assert!((p[0] - 0.7310586).abs() < 1e-6);
        assert!((p[1] - 0.2689414).abs() < 1e-6);
        let u = softmax(&[3.0; 4], 1.0);
        assert!(u.iter().all(|x| (x - 0.25).abs() < 1e-15));
        // large scores stay finite
        let big = softmax(&[1e6, 1e6 - 1.0], 1.0);
        assert!(big.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn ties_go_to_smallest_class() {
        let p = pool_of(&[(5, &[1.0]), (2, &[-1.0])]);
        let (c, probs) = classify(SimilarityKind::L1, &p, &[0.0], SoftmaxConfig::default()).unwrap();
        assert_eq!(c, ClassId::new("t", 2));
        assert!((probs[&c] - 0.5).abs() < 1e-15);
        assert_eq!(predict(SimilarityKind::L1, &p, &[0.0]).unwrap(), c);
    }

    #[test]
    fn identity_query_wins_under_l1() {
        let p = pool_of(&[(0, &[1.0, 2.0]), (1, &[1.5, 2.0]), (2, &[-3.0, 0.0])]);
        let (c, _) = classify(SimilarityKind::L1, &p, &[1.5, 2.0], SoftmaxConfig::default()).unwrap();
        assert_eq!(c, ClassId::new("t", 1));
    }

    #[test]
    fn classify_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..1000 {
            let kind = [SimilarityKind::L1, SimilarityKind::L2, SimilarityKind::Cosine][case % 3];
            let k = rng.random_range(1..8u32);
            let d = rng.random_range(1..10usize);
            let mut p = Pool::new(d).unwrap();
            for c in 0..k {
                for _ in 0..rng.random_range(1..4) {
                    let v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    p.push(lv(c, &v)).unwrap();
                }
            }
            let q: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut best = (u32::MAX, f64::NEG_INFINITY);
            for (class, entries) in p.entries() {
                let mut s = f64::NEG_INFINITY;
                for e in entries {
                    s = s.max(reference::sim(kind, &e.vector, &q));
                }
                if s > best.1 {
                    best = (class.local_id, s);
                }
            }
            let (c, _) = classify(kind, &p, &q, SoftmaxConfig::default()).unwrap();
            assert_eq!(c.local_id, best.0, "case {case}");
        }
    }

    #[test]
    fn batch_equals_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = Pool::new(16).unwrap();
        for c in 0..20 {
            let v: Vec<f32> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.push(lv(c, &v)).unwrap();
        }
        let qs: Vec<Vec<f32>> = (0..500)
            .map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let batch = predict_batch(SimilarityKind::L2, &p, &qs).unwrap();
        for (q, c) in qs.iter().zip(&batch) {
            assert_eq!(&predict(SimilarityKind::L2, &p, q).unwrap(), c);
        }
    }

    #[test]
    fn parse_kind() {
        assert_eq!("L1".parse::<SimilarityKind>().unwrap(), SimilarityKind::L1);
        assert_eq!("cosine".parse::<SimilarityKind>().unwrap(), SimilarityKind::Cosine);
        assert!("dot".parse::<SimilarityKind>().is_err());
        assert!(SoftmaxConfig::new(0.0).is_err());
        assert!(SoftmaxConfig::new(f64::NAN).is_err());
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f32>> {
        proptest::collection::vec(-100.0f32..100.0, d)
    }

    proptest! {
        #[test]
        fn symmetric_and_self_similar(
            (a, b) in (1usize..40).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d)))
        ) {
            for kind in [SimilarityKind::L1, SimilarityKind::L2] {
                prop_assert_eq!(sim(kind, &a, &b).unwrap(), sim(kind, &b, &a).unwrap());
                prop_assert_eq!(sim(kind, &a, &a).unwrap(), 0.0);
                if a != b {
                    prop_assert!(sim(kind, &a, &b).unwrap() < 0.0);
                }
            }
            if a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0) {
                let c = sim(SimilarityKind::Cosine, &a, &b).unwrap();
                prop_assert_eq!(c, sim(SimilarityKind::Cosine, &b, &a).unwrap());
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&c));
            }
        }

        #[test]
        fn cosine_scale_invariant(a in vec_strategy(12), scale in 0.01f32..100.0) {
            prop_assume!(a.iter().any(|x| x.abs() > 1e-3));
            let b: Vec<f32> = a.iter().map(|x| x * scale).collect();
            let c = sim(SimilarityKind::Cosine, &a, &b).unwrap();
            prop_assert!((c - 1.0).abs() < 1e-9);
        }

        #[test]
        fn softmax_normalized(scores in proptest::collection::vec(-30.0f64..30.0, 1..30), tau in 0.01f64..10.0) {
            let p = softmax(&scores, tau);
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|x| *x > 0.0 && *x <= 1.0));
        }
    }
}
