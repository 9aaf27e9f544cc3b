//! Seeded Gaussian class clusters standing in for encoder output, plus the
//! naive reference classifiers used to cross-check the engine.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): stream 0 of the seed
//! draws domain offsets, stream `k + 1` draws everything for class `k` in a
//! fixed order (mean, text noise, then train and test records per domain).
//! Classes are independent, so generation parallelizes per class without
//! changing a single bit of output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};
use crate::par;
use crate::types::{ClassId, Embedding, LabelVector, Pool, Record, TaskKind, TaskSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub count: usize,
    /// Standard deviation of each domain's shared offset vector.
    pub offset_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub namespace: String,
    pub classes: usize,
    pub dim: usize,
    /// Standard deviation of the class-mean draw.
    pub mean_scale: f64,
    /// Within-class standard deviation.
    pub sigma: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Number of CIL tasks the classes are split into. Ignored with domains.
    pub tasks: usize,
    /// When set, the stream is domain-incremental: one task per domain.
    pub domains: Option<DomainSpec>,
    /// When set, a pseudo-text vector `mean + N(0, text_noise²)` per class.
    pub text_noise: Option<f64>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            namespace: "synth".to_string(),
            classes: 10,
            dim: 16,
            mean_scale: 1.0,
            sigma: 0.1,
            train_per_class: 20,
            test_per_class: 10,
            tasks: 2,
            domains: None,
            text_noise: Some(0.05),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LvpError::InvalidConfig(m));
        if self.classes == 0 || self.dim == 0 {
            return bad("classes and dim must be at least 1".into());
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return bad("train/test records per class must be at least 1".into());
        }
        let scales = [
            self.mean_scale,
            self.sigma,
            self.text_noise.unwrap_or(0.0),
            self.domains.as_ref().map_or(0.0, |d| d.offset_scale),
        ];
        if scales.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("scales must be finite and non-negative".into());
        }
        match &self.domains {
            Some(d) if d.count == 0 => bad("domain count must be at least 1".into()),
            None if self.tasks == 0 || self.tasks > self.classes => bad(format!(
                "tasks must be in 1..={} (got {})",
                self.classes, self.tasks
            )),
            _ => Ok(()),
        }
    }

    pub fn class_id(&self, k: usize) -> ClassId {
        ClassId::new(self.namespace.clone(), k as u32)
    }

    /// Task (0-based) that class `k` belongs to in a CIL split.
    pub fn task_of(&self, k: usize) -> usize {
        k * self.tasks / self.classes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub train: Vec<TaskSpec>,
    pub test: Vec<TaskSpec>,
    pub text: Option<Pool>,
    /// Generating means, without domain offsets.
    pub means: BTreeMap<ClassId, Vec<f64>>,
    /// Domain offset vectors, indexed by domain id.
    pub domain_offsets: Vec<Vec<f64>>,
}

type Points = Vec<Vec<f32>>;

struct ClassDraw {
    mean: Vec<f64>,
    text: Option<Vec<f64>>,
    /// Per domain: (train, test) point sets.
    points: Vec<(Points, Points)>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let dim = spec.dim;
    let n_domains = spec.domains.as_ref().map_or(1, |d| d.count);
    let offsets: Vec<Vec<f64>> = match &spec.domains {
        Some(d) => {
            let mut rng = stream(spec.seed, 0);
            (0..d.count).map(|_| gaussian(&mut rng, dim, d.offset_scale)).collect()
        }
        None => vec![vec![0.0; dim]],
    };

    let draws: Vec<ClassDraw> = par::map_range(spec.classes, |k| {
        let mut rng = stream(spec.seed, k as u64 + 1);
        let mean = gaussian(&mut rng, dim, spec.mean_scale);
        let text = spec.text_noise.map(|s| {
            let noise = gaussian(&mut rng, dim, s);
            mean.iter().zip(noise).map(|(m, n)| m + n).collect()
        });
        let mut sample = |offset: &[f64]| -> Vec<f32> {
            mean.iter()
                .zip(offset)
                .map(|(m, o)| (m + o + spec.sigma * rng.sample::<f64, _>(StandardNormal)) as f32)
                .collect()
        };
        let points = offsets
            .iter()
            .map(|off| {
                let train = (0..spec.train_per_class).map(|_| sample(off)).collect();
                let test = (0..spec.test_per_class).map(|_| sample(off)).collect();
                (train, test)
            })
            .collect();
        ClassDraw { mean, text, points }
    });

    let n_tasks = if spec.domains.is_some() { n_domains } else { spec.tasks };
    let kind = if spec.domains.is_some() { TaskKind::Dil } else { TaskKind::Cil };
    let mut train: Vec<Vec<Record>> = vec![Vec::new(); n_tasks];
    let mut test: Vec<Vec<Record>> = vec![Vec::new(); n_tasks];
    for (k, draw) in draws.iter().enumerate() {
        let class = spec.class_id(k);
        for (d, (tr, te)) in draw.points.iter().enumerate() {
            let (task, domain) = match spec.domains {
                Some(_) => (d, Some(d as u32)),
                None => (spec.task_of(k), None),
            };
            for p in tr {
                train[task].push(Record::new(Embedding::new(p.clone())?, class.clone(), domain));
            }
            for p in te {
                test[task].push(Record::new(Embedding::new(p.clone())?, class.clone(), domain));
            }
        }
    }
    let to_tasks = |sets: Vec<Vec<Record>>| -> Vec<TaskSpec> {
        sets.into_iter()
            .enumerate()
            .map(|(i, r)| TaskSpec::new(i + 1, kind, r))
            .collect()
    };

    let text = if spec.text_noise.is_some() {
        let mut pool = Pool::new(dim)?;
        for (k, draw) in draws.iter().enumerate() {
            let v = draw.text.as_ref().expect("text drawn");
            pool.push(LabelVector::text(Embedding::from_f64(v)?, spec.class_id(k)))?;
            pool.set_name(spec.class_id(k), format!("class_{k}"));
        }
        pool.log(format!(
            "synthetic text vectors: {} classes, noise {}",
            spec.classes,
            spec.text_noise.unwrap_or(0.0)
        ));
        Some(pool)
    } else {
        None
    };

    Ok(SynthData {
        train: to_tasks(train),
        test: to_tasks(test),
        text,
        means: draws
            .into_iter()
            .enumerate()
            .map(|(k, d)| (spec.class_id(k), d.mean))
            .collect(),
        domain_offsets: if spec.domains.is_some() { offsets } else { Vec::new() },
    })
}

/// Deliberately naive reference computations, written without any of the
/// engine's kernels.
pub mod oracle {
    use crate::similarity::SimilarityKind;
    use crate::types::ClassId;

    fn naive_sim(kind: SimilarityKind, a: &[f64], q: &[f32]) -> f64 {
        let mut acc = 0.0;
        let mut na = 0.0;
        let mut nq = 0.0;
        for i in 0..a.len() {
            let x = a[i];
            let y = q[i] as f64;
            match kind {
                SimilarityKind::L1 => acc += (x - y).abs(),
                SimilarityKind::L2 => acc += (x - y) * (x - y),
                SimilarityKind::Cosine => {
                    acc += x * y;
                    na += x * x;
                    nq += y * y;
                }
            }
        }
        match kind {
            SimilarityKind::L1 => -acc,
            SimilarityKind::L2 => -acc.sqrt(),
            SimilarityKind::Cosine => acc / (na.sqrt() * nq.sqrt()),
        }
    }

    /// Class whose mean is most similar to the query; ties go to the
    /// smaller class.
    pub fn nearest_class_mean(
        means: &[(ClassId, Vec<f64>)],
        kind: SimilarityKind,
        query: &[f32],
    ) -> ClassId {
        let mut best: Option<(&ClassId, f64)> = None;
        for (class, mean) in means {
            let s = naive_sim(kind, mean, query);
            best = match best {
                None => Some((class, s)),
                Some((bc, bs)) => {
                    if s > bs || (s == bs && class < bc) {
                        Some((class, s))
                    } else {
                        Some((bc, bs))
                    }
                }
            };
        }
        best.expect("at least one mean").0.clone()
    }

    /// Label of the single most similar training point.
    pub fn nearest_neighbor(
        points: &[(ClassId, Vec<f64>)],
        kind: SimilarityKind,
        query: &[f32],
    ) -> ClassId {
        nearest_class_mean(points, kind, query)
    }

    pub fn softmax(scores: &[f64], tau: f64) -> Vec<f64> {
        let mut m = f64::NEG_INFINITY;
        for s in scores {
            if tau * s > m {
                m = tau * s;
            }
        }
        let mut z = 0.0;
        let mut out = Vec::with_capacity(scores.len());
        for s in scores {
            let e = (tau * s - m).exp();
            out.push(e);
            z += e;
        }
        for p in out.iter_mut() {
            *p /= z;
        }
        out
    }
}
