//! Image-mean pools: streaming per-class means, merging, and size accounting.

use std::collections::BTreeMap;

use crate::error::{LvpError, Result};
use crate::par;
use crate::types::{check_dim, ClassId, Embedding, LabelVector, Modality, Pool, TaskKind, TaskSpec};

/// Running mean of the embeddings seen for one (class, domain) key.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanAccumulator {
    pub class: ClassId,
    pub domain_id: Option<u32>,
    mean: Vec<f64>,
    count: u64,
}

impl MeanAccumulator {
    pub fn new(class: ClassId, domain_id: Option<u32>, dim: usize) -> Self {
        MeanAccumulator {
            class,
            domain_id,
            mean: vec![0.0; dim],
            count: 0,
        }
    }

    /// An accumulator that has already seen `count` samples averaging `mean`.
    pub fn with_mean(class: ClassId, domain_id: Option<u32>, mean: Vec<f64>, count: u64) -> Self {
        MeanAccumulator {
            class,
            domain_id,
            mean,
            count,
        }
    }

    /// Incremental mean update: `mean += (e - mean) / n`.
    pub fn accumulate(&mut self, e: &[f32]) -> Result<()> {
        check_dim(self.mean.len(), e.len())?;
        self.count += 1;
        let n = self.count as f64;
        for (m, &x) in self.mean.iter_mut().zip(e) {
            *m += (f64::from(x) - *m) / n;
        }
        Ok(())
    }

    /// Folds in another accumulator's samples as a count-weighted average.
    pub fn combine(&mut self, other: &MeanAccumulator) -> Result<()> {
        check_dim(self.mean.len(), other.mean.len())?;
        if other.count == 0 {
            return Ok(());
        }
        let total = self.count + other.count;
        let (wa, wb) = (self.count as f64, other.count as f64);
        for (m, &o) in self.mean.iter_mut().zip(&other.mean) {
            *m = (*m * wa + o * wb) / total as f64;
        }
        self.count = total;
        Ok(())
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn to_label_vector(&self) -> Result<LabelVector> {
        LabelVector::new(
            Embedding::from_f64(&self.mean)?,
            self.class.clone(),
            self.domain_id,
            Modality::ImageMean,
            self.count,
        )
    }

    fn from_label_vector(lv: &LabelVector) -> Self {
        Self::with_mean(lv.class.clone(), lv.domain_id, lv.vector.to_f64(), lv.sample_count)
    }
}

type Key = (ClassId, Option<u32>);

/// Builds the image-mean pool for one task.
///
/// CIL tasks give one entry per class; DIL tasks give one per
/// (class, domain) pair. Each key's records are reduced in their original
/// order by a single worker, so parallel and sequential builds agree bit for
/// bit.
pub fn build_lvp_i(task: &TaskSpec) -> Result<Pool> {
    let dim = task.dim().ok_or(LvpError::EmptyTask(task.index))?;
    let mut groups: BTreeMap<Key, Vec<&[f32]>> = BTreeMap::new();
    for r in &task.records {
        r.embedding.check_dim(dim)?;
        let domain = match task.kind {
            TaskKind::Cil => None,
            TaskKind::Dil => r.domain_id,
        };
        groups
            .entry((r.class.clone(), domain))
            .or_default()
            .push(r.embedding.as_slice());
    }
    let groups: Vec<(Key, Vec<&[f32]>)> = groups.into_iter().collect();
    let vectors = par::try_map(&groups, |((class, domain), embs)| {
        let mut acc = MeanAccumulator::new(class.clone(), *domain, dim);
        for e in embs {
            acc.accumulate(e)?;
        }
        acc.to_label_vector()
    })?;

    let mut pool = Pool::new(dim)?;
    for lv in vectors {
        pool.push(lv)?;
    }
    pool.log(format!(
        "build task {} ({:?}): {} classes, {} label vectors from {} records",
        task.index,
        task.kind,
        pool.num_classes(),
        pool.complexity(),
        task.records.len()
    ));
    Ok(pool)
}

/// Splits the task's classes round-robin over `shards` workers, builds each
/// shard independently and concatenates the results.
pub fn build_lvp_i_sharded(task: &TaskSpec, shards: usize) -> Result<Pool> {
    let shards = shards.max(1);
    let classes: Vec<ClassId> = task.classes().into_iter().collect();
    let shard_of: BTreeMap<&ClassId, usize> =
        classes.iter().enumerate().map(|(i, c)| (c, i % shards)).collect();
    let parts: Vec<TaskSpec> = (0..shards)
        .map(|s| {
            let records = task
                .records
                .iter()
                .filter(|r| shard_of[&r.class] == s)
                .cloned()
                .collect();
            TaskSpec::new(task.index, task.kind, records)
        })
        .filter(|t| !t.is_empty())
        .collect();
    let pools = par::try_map(&parts, build_lvp_i)?;
    merge(&pools, MergePolicy::Error)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergePolicy {
    /// Concatenate entry lists of shared classes.
    Append,
    /// Combine image-mean entries with the same (class, domain) by
    /// count-weighted average; other shared entries are appended.
    WeightedMeanMerge,
    /// Shared classes are an error.
    Error,
}

/// Unions the class sets of `pools`. Entries of classes that appear in only
/// one pool are copied unchanged.
pub fn merge(pools: &[Pool], policy: MergePolicy) -> Result<Pool> {
    let first = pools
        .first()
        .ok_or_else(|| LvpError::InvalidConfig("merge needs at least one pool".into()))?;
    let dim = first.dim();
    let mut out = Pool::new(dim)?;
    for p in pools {
        if p.dim() != dim {
            return Err(LvpError::PoolDimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        for (class, entries) in p.entries() {
            match out.get(class) {
                None => out.insert_class(class.clone(), entries.clone())?,
                Some(existing) => {
                    let combined = match policy {
                        MergePolicy::Error => return Err(LvpError::ClassConflict(class.clone())),
                        MergePolicy::Append => {
                            let mut v = existing.to_vec();
                            v.extend(entries.iter().cloned());
                            v
                        }
                        MergePolicy::WeightedMeanMerge => weighted_merge(existing, entries)?,
                    };
                    out.insert_class(class.clone(), combined)?;
                }
            }
        }
        for (class, name) in p.names() {
            if out.name(class).is_none() {
                out.set_name(class.clone(), name.clone());
            }
        }
        for line in p.provenance() {
            out.log(line.clone());
        }
    }
    Ok(out)
}

fn weighted_merge(existing: &[LabelVector], incoming: &[LabelVector]) -> Result<Vec<LabelVector>> {
    let mut out = existing.to_vec();
    for lv in incoming {
        let slot = out.iter_mut().find(|e| {
            e.modality == Modality::ImageMean
                && lv.modality == Modality::ImageMean
                && e.domain_id == lv.domain_id
        });
        match slot {
            Some(e) => {
                let mut acc = MeanAccumulator::from_label_vector(e);
                acc.combine(&MeanAccumulator::from_label_vector(lv))?;
                *e = acc.to_label_vector()?;
            }
            None => out.push(lv.clone()),
        }
    }
    Ok(out)
}

/// Similarity evaluations per query, `O = Σ P^k`.
pub fn complexity(pool: &Pool) -> usize {
    pool.complexity()
}

/// Stored scalars, `Σ P^k × D`.
pub fn memory_floats(pool: &Pool) -> usize {
    pool.memory_floats()
}
