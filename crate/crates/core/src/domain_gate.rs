//! Binary routing between a specialist branch and the main pool.
//!
//! A gate holds two vectors: the mean of the label vectors selected by a
//! predicate ("yes") and the mean of everything else ("no"). A query goes
//! to the branch only when it is strictly closer to "yes".

use crate::error::{LvpError, Result};
use crate::linear_head::{self, LinearClassifier};
use crate::similarity::{self, SimilarityKind, SoftmaxConfig};
use crate::types::{check_dim, ClassId, LabelVector, Pool};

/// Selects label vectors by namespace and/or domain id. Unset fields match
/// anything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selector {
    pub namespace: Option<String>,
    pub domain_id: Option<u32>,
}

impl Selector {
    pub fn domain(domain_id: u32) -> Self {
        Selector {
            namespace: None,
            domain_id: Some(domain_id),
        }
    }

    pub fn namespace(ns: impl Into<String>) -> Self {
        Selector {
            namespace: Some(ns.into()),
            domain_id: None,
        }
    }

    pub fn matches(&self, lv: &LabelVector) -> bool {
        self.namespace
            .as_ref()
            .is_none_or(|ns| *ns == lv.class.namespace)
            && self.domain_id.is_none_or(|d| lv.domain_id == Some(d))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    /// Kept in `f64` so the means are exact to accumulation precision.
    pub yes_vector: Vec<f64>,
    pub no_vector: Vec<f64>,
    pub yes_count: usize,
    pub no_count: usize,
    pub kind: SimilarityKind,
    pub branch_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Branch,
    Main,
}

fn running_mean(vectors: &[&LabelVector], dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for (n, lv) in vectors.iter().enumerate() {
        let n = (n + 1) as f64;
        for (m, &x) in mean.iter_mut().zip(lv.vector.iter()) {
            *m += (f64::from(x) - *m) / n;
        }
    }
    mean
}

/// Unweighted means of the selected and unselected label vectors.
pub fn build_gate(
    pool: &Pool,
    selector: &Selector,
    kind: SimilarityKind,
    branch_id: impl Into<String>,
) -> Result<Gate> {
    let (yes, no): (Vec<&LabelVector>, Vec<&LabelVector>) =
        pool.vectors().partition(|lv| selector.matches(lv));
    if yes.is_empty() {
        return Err(LvpError::EmptyGateSide("yes"));
    }
    if no.is_empty() {
        return Err(LvpError::EmptyGateSide("no"));
    }
    Ok(Gate {
        yes_vector: running_mean(&yes, pool.dim()),
        no_vector: running_mean(&no, pool.dim()),
        yes_count: yes.len(),
        no_count: no.len(),
        kind,
        branch_id: branch_id.into(),
    })
}

/// Branch iff the query is strictly more similar to the yes vector.
pub fn route(gate: &Gate, query: &[f32]) -> Result<Route> {
    check_dim(gate.yes_vector.len(), query.len())?;
    let yes = similarity::sim(gate.kind, &gate.yes_vector, query)?;
    let no = similarity::sim(gate.kind, &gate.no_vector, query)?;
    Ok(if yes > no { Route::Branch } else { Route::Main })
}

/// What handles queries routed to the branch.
#[derive(Clone, Debug)]
pub enum BranchClassifier {
    Pool(Pool),
    Head(LinearClassifier),
}

pub fn gated_classify(
    gate: &Gate,
    branch: &BranchClassifier,
    main: &Pool,
    query: &[f32],
    kind: SimilarityKind,
    cfg: SoftmaxConfig,
) -> Result<ClassId> {
    match route(gate, query)? {
        Route::Main => Ok(similarity::classify(kind, main, query, cfg)?.0),
        Route::Branch => match branch {
            BranchClassifier::Pool(p) => Ok(similarity::classify(kind, p, query, cfg)?.0),
            BranchClassifier::Head(h) => linear_head::predict(h, query),
        },
    }
}
