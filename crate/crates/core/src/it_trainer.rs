//! Text/image mixing: each class's label vector becomes `α ⊙ T + β ⊙ Ī`,
//! with per-class vectors α, β trained on the current task only.
//!
//! Training minimizes the mean cross-entropy of `τ · cos(mix_k, query)`
//! logits whose softmax runs over the classes of the current task. The
//! gradient is exact, including the derivative of the cosine normalizer.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};
use crate::par;
use crate::pool_builder::MeanAccumulator;
use crate::types::{
    check_dim, ClassId, Embedding, LabelVector, Modality, Pool, Record, TaskSpec,
};

/// Mixing vectors for one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixing {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Mixing {
    pub fn constant(dim: usize, alpha: f64, beta: f64) -> Self {
        Mixing {
            alpha: vec![alpha; dim],
            beta: vec![beta; dim],
        }
    }

    fn mix(&self, text: &[f64], image: &[f64]) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .zip(text.iter().zip(image))
            .map(|((a, b), (t, i))| a * t + b * i)
            .collect()
    }
}

/// Mixing parameters owned by one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ITParams {
    pub task_index: usize,
    pub dim: usize,
    pub per_class: BTreeMap<ClassId, Mixing>,
}

impl ITParams {
    pub fn init<'a>(
        task_index: usize,
        dim: usize,
        classes: impl IntoIterator<Item = &'a ClassId>,
        cfg: &ITTrainConfig,
    ) -> Self {
        ITParams {
            task_index,
            dim,
            per_class: classes
                .into_iter()
                .map(|c| (c.clone(), Mixing::constant(dim, cfg.alpha_init, cfg.beta_init)))
                .collect(),
        }
    }

    pub fn get(&self, class: &ClassId) -> Option<&Mixing> {
        self.per_class.get(class)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ITTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Logit scale used only while training.
    pub inverse_temperature: f64,
    pub seed: u64,
    pub alpha_init: f64,
    pub beta_init: f64,
}

impl Default for ITTrainConfig {
    fn default() -> Self {
        ITTrainConfig {
            learning_rate: 1e-4,
            epochs: 10,
            batch_size: 256,
            inverse_temperature: 100.0,
            seed: 0,
            alpha_init: 0.5,
            beta_init: 1.0,
        }
    }
}

impl ITTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(LvpError::InvalidConfig(what.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.inverse_temperature.is_finite() && self.inverse_temperature > 0.0) {
            return bad("inverse_temperature must be positive");
        }
        if !(self.alpha_init.is_finite() && self.beta_init.is_finite()) {
            return bad("alpha_init and beta_init must be finite");
        }
        Ok(())
    }
}

/// `α ⊙ text + β ⊙ image_mean` for one class.
pub fn compose_it(
    params: &ITParams,
    class: &ClassId,
    text: &[f32],
    image_mean: &[f32],
) -> Result<Embedding> {
    let m = params
        .get(class)
        .ok_or_else(|| LvpError::MissingParams(class.clone()))?;
    check_dim(params.dim, text.len())?;
    check_dim(params.dim, image_mean.len())?;
    let t: Vec<f64> = text.iter().map(|&x| f64::from(x)).collect();
    let i: Vec<f64> = image_mean.iter().map(|&x| f64::from(x)).collect();
    Embedding::from_f64(&m.mix(&t, &i))
}

/// First text entry of `class` in a text pool.
pub fn text_vector<'a>(text_pool: &'a Pool, class: &ClassId) -> Result<&'a Embedding> {
    text_pool
        .get(class)
        .and_then(|e| e.iter().find(|lv| lv.modality == Modality::Text).or(e.first()))
        .map(|lv| &lv.vector)
        .ok_or_else(|| LvpError::TextFreeClass(class.clone()))
}

/// One class's image mean, combining several domain entries by sample count.
fn class_image_mean(pool: &Pool, class: &ClassId) -> Result<Vec<f64>> {
    let entries = pool
        .get(class)
        .ok_or_else(|| LvpError::EmptyClassEntry(class.clone()))?;
    if let [single] = entries {
        return Ok(single.vector.to_f64());
    }
    let mut acc = MeanAccumulator::new(class.clone(), None, pool.dim());
    for lv in entries {
        // a label vector with count n stands for n copies of its mean
        acc.combine(&MeanAccumulator::with_mean(
            class.clone(),
            lv.domain_id,
            lv.vector.to_f64(),
            lv.sample_count.max(1),
        ))?;
    }
    Ok(acc.mean().to_vec())
}

/// A task's training data in the form the loss needs: unit-normalized
/// queries, and per-class text and image-mean vectors in `f64`.
#[derive(Clone, Debug)]
pub struct ItProblem {
    pub task_index: usize,
    pub dim: usize,
    pub classes: Vec<ClassId>,
    texts: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    queries: Vec<(usize, Vec<f64>)>,
}

impl ItProblem {
    /// Records whose class is not among the image-mean pool's classes are
    /// rejected; every class needs a text vector.
    pub fn new(
        task_index: usize,
        records: &[Record],
        text_pool: &Pool,
        image_means: &Pool,
    ) -> Result<Self> {
        let dim = image_means.dim();
        check_dim(dim, text_pool.dim())?;
        let classes: Vec<ClassId> = records
            .iter()
            .map(|r| r.class.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if classes.is_empty() {
            return Err(LvpError::EmptyTask(task_index));
        }
        let mut texts = Vec::with_capacity(classes.len());
        let mut images = Vec::with_capacity(classes.len());
        for c in &classes {
            texts.push(text_vector(text_pool, c)?.to_f64());
            images.push(class_image_mean(image_means, c)?);
        }
        let index: BTreeMap<&ClassId, usize> =
            classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut queries = Vec::with_capacity(records.len());
        for r in records {
            r.embedding.check_dim(dim)?;
            let q = r.embedding.to_f64();
            let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(LvpError::ZeroVector);
            }
            queries.push((index[&r.class], q.into_iter().map(|x| x / norm).collect()));
        }
        Ok(ItProblem {
            task_index,
            dim,
            classes,
            texts,
            images,
            queries,
        })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn init_params(&self, cfg: &ITTrainConfig) -> ITParams {
        ITParams::init(self.task_index, self.dim, &self.classes, cfg)
    }

    fn mixed_unit(&self, params: &ITParams) -> Result<Vec<(Vec<f64>, f64)>> {
        self.classes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = params
                    .get(c)
                    .ok_or_else(|| LvpError::MissingParams(c.clone()))?;
                let v = m.mix(&self.texts[k], &self.images[k]);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(LvpError::DegenerateMixing(c.clone()));
                }
                Ok((v.into_iter().map(|x| x / norm).collect(), norm))
            })
            .collect()
    }

    /// Mean loss and gradients over the records at `batch`.
    pub fn loss_and_grads(&self, params: &ITParams, tau: f64, batch: &[usize]) -> Result<ItGradients> {
        let k_count = self.classes.len();
        let units = self.mixed_unit(params)?;
        let b = batch.len().max(1) as f64;

        // per record: (cosines, loss, dL/dz scaled by 1/B)
        let per_record: Vec<(Vec<f64>, f64, Vec<f64>)> = par::map(batch, |&r| {
            let (label, q) = &self.queries[r];
            let cos: Vec<f64> = units
                .iter()
                .map(|(u, _)| u.iter().zip(q).map(|(a, b)| a * b).sum())
                .collect();
            let z: Vec<f64> = cos.iter().map(|c| tau * c).collect();
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
            let lse = m + sum.ln();
            let loss = lse - z[*label];
            let coef: Vec<f64> = z
                .iter()
                .enumerate()
                .map(|(k, v)| ((v - lse).exp() - if k == *label { 1.0 } else { 0.0 }) / b)
                .collect();
            (cos, loss, coef)
        });
        let loss = per_record.iter().map(|(_, l, _)| l).sum::<f64>() / b;

        let grads: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(k_count, |k| {
            let (unit, norm) = &units[k];
            let mut s_vec = vec![0.0; self.dim];
            let mut s_cos = 0.0;
            for (&r, (cos, _, coef)) in batch.iter().zip(&per_record) {
                let c = coef[k];
                if c == 0.0 {
                    continue;
                }
                for (s, x) in s_vec.iter_mut().zip(&self.queries[r].1) {
                    *s += c * x;
                }
                s_cos += c * cos[k];
            }
            let scale = tau / norm;
            let g_mix: Vec<f64> = s_vec
                .iter()
                .zip(unit)
                .map(|(s, u)| scale * (s - s_cos * u))
                .collect();
            let ga = g_mix.iter().zip(&self.texts[k]).map(|(g, t)| g * t).collect();
            let gb = g_mix.iter().zip(&self.images[k]).map(|(g, i)| g * i).collect();
            (ga, gb)
        });

        if !loss.is_finite() {
            return Err(LvpError::Diverged { step: 0, loss });
        }
        Ok(ItGradients {
            loss,
            per_class: self.classes.iter().cloned().zip(grads).collect(),
        })
    }

    pub fn full_batch_loss(&self, params: &ITParams, tau: f64) -> Result<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        Ok(self.loss_and_grads(params, tau, &all)?.loss)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItGradients {
    pub loss: f64,
    /// Class → (∂loss/∂α, ∂loss/∂β).
    pub per_class: BTreeMap<ClassId, (Vec<f64>, Vec<f64>)>,
}

/// Loss and gradients over all of a task's records.
pub fn it_loss_and_grads(
    params: &ITParams,
    records: &[Record],
    text_pool: &Pool,
    image_means: &Pool,
    cfg: &ITTrainConfig,
) -> Result<ItGradients> {
    let problem = ItProblem::new(params.task_index, records, text_pool, image_means)?;
    let all: Vec<usize> = (0..problem.len()).collect();
    problem.loss_and_grads(params, cfg.inverse_temperature, &all)
}

/// Mini-batch SGD from the configured initialization. `on_epoch` sees the
/// parameters after each epoch.
pub fn train_problem(
    problem: &ItProblem,
    cfg: &ITTrainConfig,
    mut on_epoch: impl FnMut(usize, &ITParams),
) -> Result<ITParams> {
    cfg.validate()?;
    let mut params = problem.init_params(cfg);
    let mut order: Vec<usize> = (0..problem.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let g = problem
                .loss_and_grads(&params, cfg.inverse_temperature, batch)
                .map_err(|e| match e {
                    LvpError::Diverged { loss, .. } => LvpError::Diverged { step, loss },
                    other => other,
                })?;
            for (class, (ga, gb)) in &g.per_class {
                let m = params.per_class.get_mut(class).expect("class in params");
                for (a, d) in m.alpha.iter_mut().zip(ga) {
                    *a -= cfg.learning_rate * d;
                }
                for (b, d) in m.beta.iter_mut().zip(gb) {
                    *b -= cfg.learning_rate * d;
                }
            }
            step += 1;
        }
        on_epoch(epoch, &params);
    }
    Ok(params)
}

/// Trains a fresh set of mixing vectors for `task`. Nothing owned by other
/// tasks is read or written.
pub fn train_it_task(
    task: &TaskSpec,
    text_pool: &Pool,
    image_means: &Pool,
    cfg: &ITTrainConfig,
) -> Result<ITParams> {
    let problem = ItProblem::new(task.index, &task.records, text_pool, image_means)?;
    train_problem(&problem, cfg, |_, _| {})
}

/// Replaces every image-mean entry with its mixed vector.
///
/// Entries are paired with parameter sets in task order: the j-th entry of a
/// class uses the j-th parameter set (sorted by task index) that covers the
/// class. This matches pools grown by appending one entry per task.
pub fn build_lvp_it(pool_i: &Pool, text_pool: &Pool, params: &[ITParams]) -> Result<Pool> {
    check_dim(pool_i.dim(), text_pool.dim())
        .map_err(|_| LvpError::PoolDimensionMismatch {
            expected: pool_i.dim(),
            found: text_pool.dim(),
        })?;
    let missing_text: Vec<ClassId> = pool_i
        .classes()
        .filter(|c| !text_pool.contains(c))
        .cloned()
        .collect();
    if !missing_text.is_empty() {
        return Err(LvpError::ClassSetMismatch {
            missing_image: Vec::new(),
            missing_text,
        });
    }
    let mut sorted: Vec<&ITParams> = params.iter().collect();
    sorted.sort_by_key(|p| p.task_index);

    let mut out = Pool::new(pool_i.dim())?;
    for (class, entries) in pool_i.entries() {
        let text = text_vector(text_pool, class)?;
        let owners: Vec<&ITParams> = sorted
            .iter()
            .copied()
            .filter(|p| p.per_class.contains_key(class))
            .collect();
        if owners.is_empty() {
            return Err(LvpError::MissingParams(class.clone()));
        }
        let mut mixed = Vec::with_capacity(entries.len());
        for (j, lv) in entries.iter().enumerate() {
            let p = if owners.len() == 1 {
                owners[0]
            } else {
                owners
                    .get(j)
                    .copied()
                    .ok_or_else(|| LvpError::MissingParams(class.clone()))?
            };
            let v = compose_it(p, class, text, &lv.vector)?;
            if v.iter().all(|x| *x == 0.0) {
                return Err(LvpError::DegenerateMixing(class.clone()));
            }
            mixed.push(LabelVector::new(
                v,
                class.clone(),
                lv.domain_id,
                Modality::MixedIt,
                lv.sample_count,
            )?);
        }
        out.insert_class(class.clone(), mixed)?;
        if let Some(n) = pool_i.name(class).or(text_pool.name(class)) {
            out.set_name(class.clone(), n);
        }
    }
    for line in pool_i.provenance() {
        out.log(line.clone());
    }
    out.log(format!(
        "mix text and image means for {} classes using {} task parameter sets",
        out.num_classes(),
        params.len()
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Record, TaskKind};
    use rand::{Rng, SeedableRng};

    fn emb(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn cid(i: u32) -> ClassId {
        ClassId::new("t", i)
    }

    fn one_class_params(dim: usize, alpha: f64, beta: f64) -> ITParams {
        let mut per_class = BTreeMap::new();
        per_class.insert(cid(0), Mixing::constant(dim, alpha, beta));
        ITParams {
            task_index: 1,
            dim,
            per_class,
        }
    }

    #[test]
    fn compose_examples() {
        let t = [1.0f32, -1.0];
        let i = [2.0f32, 2.0];
        let p = one_class_params(2, 0.0, 1.0);
        assert_eq!(compose_it(&p, &cid(0), &t, &i).unwrap().as_slice(), &i);
        let p = one_class_params(2, 1.0, 1.0);
        assert_eq!(compose_it(&p, &cid(0), &t, &t).unwrap().as_slice(), &[2.0, -2.0]);
        let p = one_class_params(2, 0.5, 1.0);
        assert_eq!(compose_it(&p, &cid(0), &t, &i).unwrap().as_slice(), &[2.5, 1.5]);
        assert!(matches!(
            compose_it(&p, &cid(1), &t, &i),
            Err(LvpError::MissingParams(_))
        ));
    }

    fn text_pool(vs: &[(u32, &[f32])]) -> Pool {
        let mut p = Pool::new(vs[0].1.len()).unwrap();
        for (c, v) in vs {
            p.push(LabelVector::text(emb(v), cid(*c))).unwrap();
        }
        p
    }

    #[test]
    fn single_class_has_zero_loss() {
        let records = vec![
            Record::new(emb(&[1.0, 0.5]), cid(0), None),
            Record::new(emb(&[0.2, 0.9]), cid(0), None),
        ];
        let task = TaskSpec::new(1, TaskKind::Cil, records.clone());
        let means = crate::pool_builder::build_lvp_i(&task).unwrap();
        let texts = text_pool(&[(0, &[0.3, 0.3])]);
        let cfg = ITTrainConfig::default();
        let params = ITParams::init(1, 2, [cid(0)].iter(), &cfg);
        let g = it_loss_and_grads(&params, &records, &texts, &means, &cfg).unwrap();
        assert_eq!(g.loss, 0.0);
        let (ga, gb) = &g.per_class[&cid(0)];
        assert!(ga.iter().chain(gb).all(|x| *x == 0.0));
    }

    #[test]
    fn equal_logits_give_ln2() {
        // the query is orthogonal-symmetric to both mixed vectors
        let records = vec![
            Record::new(emb(&[1.0, 1.0]), cid(0), None),
            Record::new(emb(&[1.0, 1.0]), cid(1), None),
        ];
        let mut means = Pool::new(2).unwrap();
        for (c, v) in [(0, [1.0f32, 0.0]), (1, [0.0, 1.0])] {
            means
                .push(LabelVector::new(emb(&v), cid(c), None, Modality::ImageMean, 1).unwrap())
                .unwrap();
        }
        let texts = text_pool(&[(0, &[1.0, 0.0]), (1, &[0.0, 1.0])]);
        let cfg = ITTrainConfig::default();
        let params = ITParams::init(1, 2, [cid(0), cid(1)].iter(), &cfg);
        let problem = ItProblem {
            task_index: 1,
            dim: 2,
            classes: vec![cid(0), cid(1)],
            texts: vec![texts.get(&cid(0)).unwrap()[0].vector.to_f64(), texts.get(&cid(1)).unwrap()[0].vector.to_f64()],
            images: vec![means.get(&cid(0)).unwrap()[0].vector.to_f64(), means.get(&cid(1)).unwrap()[0].vector.to_f64()],
            queries: vec![(0, vec![std::f64::consts::FRAC_1_SQRT_2; 2])],
        };
        let g = problem.loss_and_grads(&params, 100.0, &[0]).unwrap();
        assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-12);
        let via_records = it_loss_and_grads(&params, &records, &texts, &means, &cfg).unwrap();
        assert!((via_records.loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_epochs_returns_init() {
        let records: Vec<Record> = (0..4)
            .map(|i| Record::new(emb(&[i as f32 + 1.0, 1.0]), cid(i % 2), None))
            .collect();
        let task = TaskSpec::new(2, TaskKind::Cil, records);
        let means = crate::pool_builder::build_lvp_i(&task).unwrap();
        let texts = text_pool(&[(0, &[1.0, 0.0]), (1, &[0.0, 1.0])]);
        let cfg = ITTrainConfig {
            epochs: 0,
            ..ITTrainConfig::default()
        };
        let p = train_it_task(&task, &texts, &means, &cfg).unwrap();
        assert_eq!(p.task_index, 2);
        for m in p.per_class.values() {
            assert!(m.alpha.iter().all(|a| *a == 0.5));
            assert!(m.beta.iter().all(|b| *b == 1.0));
        }
    }

    #[test]
    fn alpha_init_sweep_is_configurable() {
        for a in [0.1, 0.3, 0.5, 0.7, 1.0] {
            let cfg = ITTrainConfig {
                alpha_init: a,
                ..ITTrainConfig::default()
            };
            cfg.validate().unwrap();
            let p = ITParams::init(1, 3, [cid(0)].iter(), &cfg);
            assert_eq!(p.per_class[&cid(0)].alpha, vec![a; 3]);
        }
    }

    #[test]
    fn missing_text_is_reported() {
        let records = vec![Record::new(emb(&[1.0]), cid(5), None)];
        let task = TaskSpec::new(1, TaskKind::Cil, records);
        let means = crate::pool_builder::build_lvp_i(&task).unwrap();
        let texts = text_pool(&[(0, &[1.0])]);
        assert!(matches!(
            train_it_task(&task, &texts, &means, &ITTrainConfig::default()),
            Err(LvpError::TextFreeClass(c)) if c == cid(5)
        ));
        match build_lvp_it(&means, &texts, &[]) {
            Err(LvpError::ClassSetMismatch { missing_text, .. }) => {
                assert_eq!(missing_text, vec![cid(5)])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn build_at_identity_params_reproduces_image_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let records: Vec<Record> = (0..30)
            .map(|i| {
                let v: Vec<f32> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                Record::new(emb(&v), cid(i % 3), None)
            })
            .collect();
        let task = TaskSpec::new(1, TaskKind::Cil, records);
        let means = crate::pool_builder::build_lvp_i(&task).unwrap();
        let texts = text_pool(&[(0, &[1.0, 0.0, 0.0, 0.0]), (1, &[0.0, 1.0, 0.0, 0.0]), (2, &[0.0, 0.0, 1.0, 0.0])]);
        let cfg = ITTrainConfig {
            alpha_init: 0.0,
            beta_init: 1.0,
            ..ITTrainConfig::default()
        };
        let params = ITParams::init(1, 4, means.classes(), &cfg);
        let it = build_lvp_it(&means, &texts, &[params]).unwrap();
        for (c, e) in it.entries() {
            assert_eq!(e[0].modality, Modality::MixedIt);
            assert_eq!(e[0].vector, means.get(c).unwrap()[0].vector);
        }
        assert_eq!(it.memory_floats(), means.memory_floats());
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let records: Vec<Record> = (0..90)
            .map(|i| {
                let v: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                Record::new(emb(&v), cid(i % 3), None)
            })
            .collect();
        let task = TaskSpec::new(1, TaskKind::Cil, records);
        let means = crate::pool_builder::build_lvp_i(&task).unwrap();
        let mut texts = Pool::new(6).unwrap();
        for c in 0..3 {
            let v: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            texts.push(LabelVector::text(emb(&v), cid(c))).unwrap();
        }
        let cfg = ITTrainConfig {
            batch_size: 16,
            epochs: 3,
            learning_rate: 1e-2,
            seed: 42,
            ..ITTrainConfig::default()
        };
        let a = train_it_task(&task, &texts, &means, &cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| train_it_task(&task, &texts, &means, &cfg).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, ITParams::init(1, 6, means.classes(), &cfg));
    }
}
