//! Stagewise continual-learning runs and their evaluation.
//!
//! After each training task the run state grows its pools (and retrains
//! whatever the variant needs), then every test task whose classes have all
//! been learned is scored. Row `s` of the accuracy matrix is the state after
//! stage `s`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LvpError, Result};
use crate::it_trainer::{self, ITParams, ITTrainConfig};
use crate::linear_head::{self, HeadTrainConfig, LinearClassifier};
use crate::pool_builder::{self, MergePolicy};
use crate::similarity::{self, SimilarityKind};
use crate::types::{validate_stream, ClassId, EvalReport, Pool, Record, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    Cil,
    Dil,
    Ctil,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Image-mean pool with similarity search.
    I,
    /// Mixed text/image pool with similarity search.
    It,
    /// Linear head trained on the pool.
    C,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::I => "i",
            Variant::It => "it",
            Variant::C => "c",
        })
    }
}

impl FromStr for Variant {
    type Err = LvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "lvp-i" => Ok(Variant::I),
            "it" | "lvp-it" => Ok(Variant::It),
            "c" | "lvp-c" => Ok(Variant::C),
            other => Err(LvpError::InvalidConfig(format!(
                "unknown variant '{other}' (expected i, it or c)"
            ))),
        }
    }
}

impl Variant {
    /// L1 for image-to-image search, cosine once text is mixed in.
    pub fn default_similarity(self) -> SimilarityKind {
        match self {
            Variant::I | Variant::C => SimilarityKind::L1,
            Variant::It => SimilarityKind::Cosine,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub setting: Setting,
    pub variant: Variant,
    pub similarity: SimilarityKind,
    pub it: ITTrainConfig,
    pub head: HeadTrainConfig,
    pub seed: u64,
}

impl Protocol {
    pub fn new(setting: Setting, variant: Variant) -> Self {
        Protocol {
            setting,
            variant,
            similarity: variant.default_similarity(),
            it: ITTrainConfig::default(),
            head: HeadTrainConfig::default(),
            seed: 0,
        }
    }

    fn meta(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("setting".into(), format!("{:?}", self.setting));
        m.insert("variant".into(), self.variant.to_string());
        m.insert("similarity".into(), self.similarity.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("it_config".into(), serde_json::to_string(&self.it).expect("config"));
        m.insert("head_config".into(), serde_json::to_string(&self.head).expect("config"));
        m
    }
}

/// Everything learned so far.
#[derive(Clone, Debug)]
pub struct RunState {
    protocol: Protocol,
    text: Option<Pool>,
    pool_i: Option<Pool>,
    pool_it: Option<Pool>,
    params: Vec<ITParams>,
    head: Option<LinearClassifier>,
    stage: usize,
}

impl RunState {
    pub fn new(protocol: Protocol, text: Option<Pool>) -> Self {
        RunState {
            protocol,
            text,
            pool_i: None,
            pool_it: None,
            params: Vec::new(),
            head: None,
            stage: 0,
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn pool_i(&self) -> Option<&Pool> {
        self.pool_i.as_ref()
    }

    pub fn pool_it(&self) -> Option<&Pool> {
        self.pool_it.as_ref()
    }

    pub fn params(&self) -> &[ITParams] {
        &self.params
    }

    pub fn head(&self) -> Option<&LinearClassifier> {
        self.head.as_ref()
    }

    pub fn learned_classes(&self) -> BTreeSet<ClassId> {
        self.pool_i.as_ref().map(Pool::class_set).unwrap_or_default()
    }

    /// Pool queried by the similarity variants.
    pub fn search_pool(&self) -> Option<&Pool> {
        match self.protocol.variant {
            Variant::It => self.pool_it.as_ref(),
            _ => self.pool_i.as_ref(),
        }
    }

    fn mixes_text(&self) -> bool {
        match self.protocol.variant {
            Variant::It => true,
            Variant::C => self.text.is_some(),
            Variant::I => false,
        }
    }

    /// Learns one task: grows the pools, trains this task's mixing
    /// parameters when needed, and retrains the head for the C variant.
    pub fn learn(&mut self, task: &TaskSpec) -> Result<()> {
        let task_pool = pool_builder::build_lvp_i(task)?;
        self.pool_i = Some(match self.pool_i.take() {
            None => task_pool.clone(),
            Some(p) => pool_builder::merge(&[p, task_pool.clone()], MergePolicy::Append)?,
        });

        if self.mixes_text() {
            let text = self.text.as_ref().expect("checked before training");
            let with_text: Vec<Record> = task
                .records
                .iter()
                .filter(|r| text.contains(&r.class))
                .cloned()
                .collect();
            if !with_text.is_empty() {
                let sub = TaskSpec::new(task.index, task.kind, with_text);
                let mut cfg = self.protocol.it.clone();
                cfg.seed = cfg.seed.wrapping_add(task.index as u64);
                let params = it_trainer::train_it_task(&sub, text, &task_pool, &cfg)?;
                let mixed = it_trainer::build_lvp_it(
                    &task_pool.subset(&sub.classes()),
                    text,
                    std::slice::from_ref(&params),
                )?;
                self.params.push(params);
                self.pool_it = Some(match self.pool_it.take() {
                    None => mixed,
                    Some(p) => pool_builder::merge(&[p, mixed], MergePolicy::Append)?,
                });
            }
        }

        if self.protocol.variant == Variant::C {
            let pool_i = self.pool_i.as_ref().expect("just built");
            let inputs = linear_head::select_head_inputs(pool_i, self.pool_it.as_ref());
            self.head = Some(linear_head::train_head(&inputs, &self.protocol.head)?.classifier);
        }
        self.stage += 1;
        Ok(())
    }

    pub fn predict_batch(&self, queries: &[&[f32]]) -> Result<Vec<ClassId>> {
        match self.protocol.variant {
            Variant::C => {
                let head = self.head.as_ref().ok_or(LvpError::EmptyPool)?;
                linear_head::predict_batch(head, queries)
            }
            _ => {
                let pool = self.search_pool().ok_or(LvpError::EmptyPool)?;
                similarity::predict_batch(self.protocol.similarity, pool, queries)
            }
        }
    }

    /// Accuracy on one test task, or `None` if some of its classes are unlearned.
    pub fn evaluate(&self, test: &TaskSpec) -> Result<Option<f64>> {
        let learned = self.learned_classes();
        if test.is_empty() || !test.classes().is_subset(&learned) {
            return Ok(None);
        }
        let queries: Vec<&[f32]> = test.records.iter().map(|r| r.embedding.as_slice()).collect();
        let predicted = self.predict_batch(&queries)?;
        let correct = predicted
            .iter()
            .zip(&test.records)
            .filter(|(p, r)| **p == r.class)
            .count();
        Ok(Some(correct as f64 / test.len() as f64))
    }
}

/// Checks a stream against a protocol without training anything.
pub fn check_stream(
    protocol: &Protocol,
    train: &[TaskSpec],
    text: Option<&Pool>,
) -> Result<()> {
    if train.is_empty() {
        return Err(LvpError::EmptyStream);
    }
    protocol.it.validate()?;
    protocol.head.validate()?;
    validate_stream(train)?;
    if protocol.variant == Variant::It {
        let text = text.ok_or_else(|| {
            LvpError::ProtocolMismatch("the it variant needs text vectors".into())
        })?;
        let missing: Vec<String> = train
            .iter()
            .flat_map(|t| t.classes())
            .filter(|c| !text.contains(c))
            .map(|c| c.to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !missing.is_empty() {
            return Err(LvpError::ProtocolMismatch(format!(
                "the it variant needs text vectors for every class; missing {}",
                missing.join(", ")
            )));
        }
    }
    if let (Some(text), Some(first)) = (text, train.first().and_then(TaskSpec::dim)) {
        if text.dim() != first {
            return Err(LvpError::DimensionMismatch {
                expected: first,
                found: text.dim(),
            });
        }
    }
    Ok(())
}

/// Runs the protocol over the training stream, evaluating every test task
/// after each stage.
pub fn run(
    protocol: &Protocol,
    train: &[TaskSpec],
    test: &[TaskSpec],
    text: Option<&Pool>,
) -> Result<EvalReport> {
    check_stream(protocol, train, text)?;
    let mut state = RunState::new(protocol.clone(), text.cloned());
    let mut rows = Vec::with_capacity(train.len());
    let mut meta = protocol.meta();
    for task in train {
        state.learn(task)?;
        let row = test
            .iter()
            .map(|t| state.evaluate(t))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    meta.insert(
        "stage_tasks".into(),
        train.iter().map(|t| t.index.to_string()).collect::<Vec<_>>().join(","),
    );
    meta.insert(
        "final_complexity".into(),
        state.search_pool().map_or(0, Pool::complexity).to_string(),
    );
    Ok(EvalReport::new(rows, test.iter().map(TaskSpec::len).collect(), meta))
}

/// Largest accuracy drop of each test task between any stage and a later
/// one, floored at zero. Tasks scored in fewer than two stages are omitted.
pub fn forgetting_audit(report: &EvalReport) -> BTreeMap<usize, f64> {
    let columns = report.accuracy_matrix.first().map_or(0, Vec::len);
    let mut out = BTreeMap::new();
    for j in 0..columns {
        let series: Vec<f64> = report
            .accuracy_matrix
            .iter()
            .filter_map(|row| row.get(j).copied().flatten())
            .collect();
        if series.len() < 2 {
            continue;
        }
        let mut best_so_far = series[0];
        let mut drop = 0.0f64;
        for &a in &series[1..] {
            drop = drop.max(best_so_far - a);
            best_so_far = best_so_far.max(a);
        }
        out.insert(j, drop);
    }
    out
}

/// Non-incremental reference: one linear head trained on every training
/// record at once, averaged equally over the test tasks.
pub fn upper_bound(train: &[TaskSpec], test: &[TaskSpec], cfg: &HeadTrainConfig) -> Result<f64> {
    let records: Vec<&Record> = train.iter().flat_map(|t| &t.records).collect();
    let dim = records
        .first()
        .map(|r| r.embedding.dim())
        .ok_or(LvpError::EmptyStream)?;
    let classes: Vec<ClassId> = records
        .iter()
        .map(|r| r.class.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&ClassId, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let inputs: Vec<&[f32]> = records.iter().map(|r| r.embedding.as_slice()).collect();
    let labels: Vec<usize> = records.iter().map(|r| index[&r.class]).collect();
    let fit = linear_head::fit_softmax(classes.clone(), dim, &inputs, &labels, cfg)?;

    let mut total = 0.0;
    let mut n = 0;
    for t in test.iter().filter(|t| !t.is_empty()) {
        let queries: Vec<&[f32]> = t.records.iter().map(|r| r.embedding.as_slice()).collect();
        let predicted = linear_head::predict_batch(&fit.classifier, &queries)?;
        let correct = predicted.iter().zip(&t.records).filter(|(p, r)| **p == r.class).count();
        total += correct as f64 / t.len() as f64;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Concatenates several datasets' task streams and shuffles the task order
/// with `seed`. Tasks are renumbered 1..M in their new order.
pub fn ctil_stream(streams: Vec<Vec<TaskSpec>>, seed: u64) -> Vec<TaskSpec> {
    let mut all: Vec<TaskSpec> = streams.into_iter().flatten().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    for (i, t) in all.iter_mut().enumerate() {
        t.index = i + 1;
    }
    all
}

/// Plain-text table of the accuracy matrix, one row per stage.
pub fn format_table(report: &EvalReport) -> String {
    use std::fmt::Write;
    let cols = report.accuracy_matrix.first().map_or(0, Vec::len);
    let mut s = String::new();
    let _ = write!(s, "{:<8}", "Stage");
    for j in 0..cols {
        let _ = write!(s, "{:>9}", format!("Task {}", j + 1));
    }
    let _ = writeln!(s, "{:>9}", "Avg");
    for (i, row) in report.accuracy_matrix.iter().enumerate() {
        let _ = write!(s, "{:<8}", i + 1);
        let mut sum = 0.0;
        let mut n = 0;
        for a in row {
            match a {
                Some(a) => {
                    let _ = write!(s, "{:>9.1}", a * 100.0);
                    sum += a;
                    n += 1;
                }
                None => {
                    let _ = write!(s, "{:>9}", "-");
                }
            }
        }
        let avg = if n == 0 { 0.0 } else { sum / n as f64 };
        let _ = writeln!(s, "{:>9.1}", avg * 100.0);
    }
    let _ = writeln!(
        s,
        "final average {:.2}% (test-size weighted {:.2}%)",
        report.final_average * 100.0,
        report.weighted_final_average * 100.0
    );
    s
}
