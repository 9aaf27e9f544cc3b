//! Linear softmax classifier trained on label vectors only.
//!
//! The head is retrained from zero on the whole current pool whenever the
//! pool grows; nothing carries over between calls.

use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};
use crate::par;
use crate::similarity::argmax;
use crate::types::{check_dim, ClassId, Pool};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// Row `k` scores `class_order[k]`. Sorted ascending.
    pub class_order: Vec<ClassId>,
    pub dim: usize,
    /// Row-major `K × D`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearClassifier {
    pub fn zeros(class_order: Vec<ClassId>, dim: usize) -> Self {
        let k = class_order.len();
        LinearClassifier {
            class_order,
            dim,
            weights: vec![0.0; k * dim],
            bias: vec![0.0; k],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_order.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.dim..(k + 1) * self.dim]
    }

    pub fn logits(&self, query: &[f32]) -> Result<Vec<f64>> {
        check_dim(self.dim, query.len())?;
        Ok(self.logits_unchecked(query))
    }

    fn logits_unchecked(&self, query: &[f32]) -> Vec<f64> {
        (0..self.num_classes())
            .map(|k| {
                self.row(k)
                    .iter()
                    .zip(query)
                    .map(|(w, &x)| w * f64::from(x))
                    .sum::<f64>()
                    + self.bias[k]
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|x| x.is_finite())
    }
}

/// Argmax of `W·query + b`; ties go to the smallest class.
pub fn predict(head: &LinearClassifier, query: &[f32]) -> Result<ClassId> {
    let logits = head.logits(query)?;
    let k = argmax(logits).ok_or(LvpError::TooFewClasses(0))?;
    Ok(head.class_order[k].clone())
}

pub fn predict_batch<Q>(head: &LinearClassifier, queries: &[Q]) -> Result<Vec<ClassId>>
where
    Q: AsRef<[f32]> + Sync,
{
    par::try_map(queries, |q| predict(head, q.as_ref()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub target_loss_low: f64,
    /// Training stops as soon as the loss is at or below this.
    pub target_loss_high: f64,
    pub max_steps: usize,
    /// Full-batch training draws no randomness; kept for the config echo.
    pub seed: u64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        HeadTrainConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            target_loss_low: 0.05,
            target_loss_high: 0.1,
            max_steps: 5000,
            seed: 0,
        }
    }
}

impl HeadTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(LvpError::InvalidConfig(what.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0 < self.target_loss_low && self.target_loss_low <= self.target_loss_high) {
            return bad("need 0 < target_loss_low <= target_loss_high");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decay rates must lie in [0, 1)");
        }
        Ok(())
    }
}

/// A trained head plus how training ended.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadFit {
    pub classifier: LinearClassifier,
    pub loss: f64,
    pub steps: usize,
    pub reached_low_target: bool,
    /// Full-batch loss before each update (and the final one).
    pub loss_history: Vec<f64>,
}

/// Mean cross-entropy and its gradient for the current parameters.
fn loss_and_grad(
    head: &LinearClassifier,
    inputs: &[&[f32]],
    labels: &[usize],
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = inputs.len() as f64;
    let k_count = head.num_classes();
    let per_example: Vec<(f64, Vec<f64>)> = par::map_range(inputs.len(), |i| {
        let z = head.logits_unchecked(inputs[i]);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let coef = z
            .iter()
            .enumerate()
            .map(|(k, v)| ((v - lse).exp() - if k == labels[i] { 1.0 } else { 0.0 }) / n)
            .collect();
        (lse - z[labels[i]], coef)
    });
    let loss = per_example.iter().map(|(l, _)| l).sum::<f64>() / n;
    let rows: Vec<(Vec<f64>, f64)> = par::map_range(k_count, |k| {
        let mut g = vec![0.0; head.dim];
        let mut gb = 0.0;
        for (x, (_, coef)) in inputs.iter().zip(&per_example) {
            let c = coef[k];
            gb += c;
            for (gi, &xi) in g.iter_mut().zip(x.iter()) {
                *gi += c * f64::from(xi);
            }
        }
        (g, gb)
    });
    let mut gw = Vec::with_capacity(k_count * head.dim);
    let mut gb = Vec::with_capacity(k_count);
    for (g, b) in rows {
        gw.extend(g);
        gb.push(b);
    }
    (loss, gw, gb)
}

/// Full-batch Adam from zero initialization on labeled vectors.
pub fn fit_softmax(
    classes: Vec<ClassId>,
    dim: usize,
    inputs: &[&[f32]],
    labels: &[usize],
    cfg: &HeadTrainConfig,
) -> Result<HeadFit> {
    cfg.validate()?;
    if classes.len() < 2 {
        return Err(LvpError::TooFewClasses(classes.len()));
    }
    for x in inputs {
        check_dim(dim, x.len())?;
    }
    let mut head = LinearClassifier::zeros(classes, dim);
    let mut m_w = vec![0.0; head.weights.len()];
    let mut v_w = vec![0.0; head.weights.len()];
    let mut m_b = vec![0.0; head.bias.len()];
    let mut v_b = vec![0.0; head.bias.len()];
    let mut history = Vec::new();
    let mut steps = 0;
    let loss = loop {
        let (loss, gw, gb) = loss_and_grad(&head, inputs, labels);
        history.push(loss);
        if !loss.is_finite() {
            return Err(LvpError::Diverged { step: steps, loss });
        }
        if loss <= cfg.target_loss_high || steps == cfg.max_steps {
            break loss;
        }
        steps += 1;
        let t = steps as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.epsilon);
            }
        };
        update(&mut head.weights, &gw, &mut m_w, &mut v_w);
        update(&mut head.bias, &gb, &mut m_b, &mut v_b);
    };
    if !head.is_finite() {
        return Err(LvpError::Diverged { step: steps, loss });
    }
    let reached_low_target = loss <= cfg.target_loss_low;
    if loss > cfg.target_loss_high {
        log::warn!("head training stopped at max_steps={} with loss {loss:.4}", cfg.max_steps);
    } else if !reached_low_target {
        log::debug!("head loss {loss:.4} within high target but above {}", cfg.target_loss_low);
    }
    Ok(HeadFit {
        classifier: head,
        loss,
        steps,
        reached_low_target,
        loss_history: history,
    })
}

/// Trains on every label vector in the pool, labeled by its class. Classes
/// with several entries contribute several examples.
pub fn train_head(pool: &Pool, cfg: &HeadTrainConfig) -> Result<HeadFit> {
    if pool.num_classes() < 2 {
        return Err(LvpError::TooFewClasses(pool.num_classes()));
    }
    let classes: Vec<ClassId> = pool.classes().cloned().collect();
    let mut inputs = Vec::with_capacity(pool.complexity());
    let mut labels = Vec::with_capacity(pool.complexity());
    for (k, entries) in pool.entries().values().enumerate() {
        for lv in entries {
            inputs.push(lv.vector.as_slice());
            labels.push(k);
        }
    }
    fit_softmax(classes, pool.dim(), &inputs, &labels, cfg)
}

/// Per class: the mixed text/image entries when the mixed pool has the
/// class, otherwise the image-mean entries.
pub fn select_head_inputs(pool_i: &Pool, pool_it: Option<&Pool>) -> Pool {
    let Some(it) = pool_it else {
        return pool_i.clone();
    };
    let mut out = pool_i.clone();
    for (class, entries) in it.entries() {
        if pool_i.contains(class) {
            out.insert_class(class.clone(), entries.clone())
                .expect("same dimension");
        }
    }
    out
}
