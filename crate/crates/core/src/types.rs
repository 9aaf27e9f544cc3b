//! Domain vocabulary shared by the rest of the crate.
//!
//! Every constructor here validates dimension and finiteness, so the
//! algorithms downstream can take well-formed inputs for granted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};

/// One encoded image or text phrase.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(Box<[f32]>);

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(LvpError::ZeroDimension);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(LvpError::NonFinite { index });
        }
        Ok(Embedding(values.into_boxed_slice()))
    }

    /// Narrows a 64-bit vector to storage precision.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        check_dim(expected, self.dim())
    }
}

impl Deref for Embedding {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LvpError::DimensionMismatch { expected, found })
    }
}

/// Globally unique class identity: a dataset namespace plus the id local to it.
///
/// Ordering is namespace first (lexicographic), then local id. Ties between
/// equally scored classes are always resolved toward the smaller `ClassId`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassId {
    pub namespace: String,
    pub local_id: u32,
}

impl ClassId {
    pub fn new(namespace: impl Into<String>, local_id: u32) -> Self {
        ClassId {
            namespace: namespace.into(),
            local_id,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace, self.local_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    ImageMean,
    Text,
    MixedIt,
}

impl Modality {
    pub fn code(self) -> u8 {
        match self {
            Modality::ImageMean => 0,
            Modality::Text => 1,
            Modality::MixedIt => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::ImageMean),
            1 => Some(Modality::Text),
            2 => Some(Modality::MixedIt),
            _ => None,
        }
    }
}

/// An embedding with known identity.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVector {
    pub vector: Embedding,
    pub class: ClassId,
    pub domain_id: Option<u32>,
    pub modality: Modality,
    /// Number of training embeddings averaged into `vector`.
    pub sample_count: u64,
}

impl LabelVector {
    pub fn new(
        vector: Embedding,
        class: ClassId,
        domain_id: Option<u32>,
        modality: Modality,
        sample_count: u64,
    ) -> Result<Self> {
        if modality == Modality::ImageMean && sample_count == 0 {
            return Err(LvpError::InvalidLabelVector(format!(
                "image-mean vector for {class} must have sample_count >= 1"
            )));
        }
        Ok(LabelVector {
            vector,
            class,
            domain_id,
            modality,
            sample_count,
        })
    }

    pub fn text(vector: Embedding, class: ClassId) -> Self {
        LabelVector {
            vector,
            class,
            domain_id: None,
            modality: Modality::Text,
            sample_count: 0,
        }
    }
}

/// Map from class to its label vectors.
///
/// Entries are kept in `ClassId` order. Equality compares dimension, entries
/// and display names; the provenance log is not part of a pool's identity.
#[derive(Clone, Debug)]
pub struct Pool {
    dim: usize,
    entries: BTreeMap<ClassId, Vec<LabelVector>>,
    names: BTreeMap<ClassId, String>,
    provenance: Vec<String>,
}

impl PartialEq for Pool {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries && self.names == other.names
    }
}

impl Pool {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LvpError::ZeroDimension);
        }
        Ok(Pool {
            dim,
            entries: BTreeMap::new(),
            names: BTreeMap::new(),
            provenance: Vec::new(),
        })
    }

    /// Appends a label vector to its class's entry list.
    pub fn push(&mut self, lv: LabelVector) -> Result<()> {
        lv.vector.check_dim(self.dim)?;
        self.entries.entry(lv.class.clone()).or_default().push(lv);
        Ok(())
    }

    pub(crate) fn insert_class(&mut self, class: ClassId, vectors: Vec<LabelVector>) -> Result<()> {
        if vectors.is_empty() {
            return Err(LvpError::EmptyClassEntry(class));
        }
        for lv in &vectors {
            lv.vector.check_dim(self.dim)?;
        }
        self.entries.insert(class, vectors);
        Ok(())
    }

    pub fn set_name(&mut self, class: ClassId, name: impl Into<String>) {
        self.names.insert(class, name.into());
    }

    pub fn name(&self, class: &ClassId) -> Option<&str> {
        self.names.get(class).map(String::as_str)
    }

    pub fn names(&self) -> &BTreeMap<ClassId, String> {
        &self.names
    }

    pub fn log(&mut self, line: impl Into<String>) {
        self.provenance.push(line.into());
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &BTreeMap<ClassId, Vec<LabelVector>> {
        &self.entries
    }

    pub fn get(&self, class: &ClassId) -> Option<&[LabelVector]> {
        self.entries.get(class).map(Vec::as_slice)
    }

    pub fn contains(&self, class: &ClassId) -> bool {
        self.entries.contains_key(class)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassId> {
        self.entries.keys()
    }

    pub fn class_set(&self) -> BTreeSet<ClassId> {
        self.entries.keys().cloned().collect()
    }

    pub fn num_classes(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vectors(&self) -> impl Iterator<Item = &LabelVector> {
        self.entries.values().flatten()
    }

    /// Similarity evaluations needed to classify one query (sum of pool sizes).
    pub fn complexity(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Stored scalars, excluding metadata.
    pub fn memory_floats(&self) -> usize {
        self.complexity() * self.dim
    }

    /// Restricts the pool to the given classes.
    pub fn subset<'a>(&self, classes: impl IntoIterator<Item = &'a ClassId>) -> Pool {
        let mut out = Pool {
            dim: self.dim,
            entries: BTreeMap::new(),
            names: BTreeMap::new(),
            provenance: self.provenance.clone(),
        };
        for class in classes {
            if let Some(v) = self.entries.get(class) {
                out.entries.insert(class.clone(), v.clone());
            }
            if let Some(n) = self.names.get(class) {
                out.names.insert(class.clone(), n.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub embedding: Embedding,
    pub class: ClassId,
    pub domain_id: Option<u32>,
}

impl Record {
    pub fn new(embedding: Embedding, class: ClassId, domain_id: Option<u32>) -> Self {
        Record {
            embedding,
            class,
            domain_id,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Cil,
    Dil,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    /// 1-based position in the stream.
    pub index: usize,
    pub kind: TaskKind,
    pub records: Vec<Record>,
}

impl TaskSpec {
    pub fn new(index: usize, kind: TaskKind, records: Vec<Record>) -> Self {
        TaskSpec {
            index,
            kind,
            records,
        }
    }

    pub fn classes(&self) -> BTreeSet<ClassId> {
        self.records.iter().map(|r| r.class.clone()).collect()
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.embedding.dim())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Checks the stream-level task invariants: CIL tasks introduce classes
/// disjoint from everything before them.
pub fn validate_stream(tasks: &[TaskSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for task in tasks {
        let classes = task.classes();
        if task.kind == TaskKind::Cil {
            if let Some(c) = classes.iter().find(|c| seen.contains(*c)) {
                return Err(LvpError::ProtocolMismatch(format!(
                    "CIL task {} reintroduces class {c}",
                    task.index
                )));
            }
        }
        seen.extend(classes);
    }
    Ok(())
}

/// Accuracy after each learning stage (rows) on each test task (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `None` where the test task's classes were not yet learned.
    pub accuracy_matrix: Vec<Vec<Option<f64>>>,
    /// Mean of the last row over present entries; test tasks weigh equally.
    pub final_average: f64,
    /// Number of queries per test task.
    pub test_task_sizes: Vec<usize>,
    /// Last row weighted by test-task size.
    pub weighted_final_average: f64,
    /// Configuration echo, seeds, and per-stage notes.
    pub meta: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn new(
        accuracy_matrix: Vec<Vec<Option<f64>>>,
        test_task_sizes: Vec<usize>,
        meta: BTreeMap<String, String>,
    ) -> Self {
        let (final_average, weighted_final_average) =
            last_row_averages(&accuracy_matrix, &test_task_sizes);
        EvalReport {
            accuracy_matrix,
            final_average,
            test_task_sizes,
            weighted_final_average,
            meta,
        }
    }

    pub fn stages(&self) -> usize {
        self.accuracy_matrix.len()
    }

    /// Recomputes both averages from the matrix alone.
    pub fn recomputed_averages(&self) -> (f64, f64) {
        last_row_averages(&self.accuracy_matrix, &self.test_task_sizes)
    }

    pub fn is_consistent(&self) -> bool {
        let (avg, weighted) = self.recomputed_averages();
        avg.to_bits() == self.final_average.to_bits()
            && weighted.to_bits() == self.weighted_final_average.to_bits()
            && self
                .accuracy_matrix
                .iter()
                .flatten()
                .flatten()
                .all(|a| (0.0..=1.0).contains(a))
    }
}

/// Averages of the final row. An empty or all-absent row averages to 0.
fn last_row_averages(matrix: &[Vec<Option<f64>>], sizes: &[usize]) -> (f64, f64) {
    let Some(last) = matrix.last() else {
        return (0.0, 0.0);
    };
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut wsum = 0.0;
    let mut wn = 0usize;
    for (j, acc) in last.iter().enumerate() {
        if let Some(a) = acc {
            sum += a;
            n += 1;
            let w = sizes.get(j).copied().unwrap_or(0);
            wsum += a * w as f64;
            wn += w;
        }
    }
    let avg = if n == 0 { 0.0 } else { sum / n as f64 };
    let weighted = if wn == 0 { 0.0 } else { wsum / wn as f64 };
    (avg, weighted)
}
