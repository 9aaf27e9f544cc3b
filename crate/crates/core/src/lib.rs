//! Label vector pools for continual learning on frozen embeddings.
//!
//! Classes are represented by one or more label vectors (image means, text
//! vectors, or learned mixtures of both) and queries are classified by
//! similarity search over the pool, or by a linear head trained on it.

pub mod domain_gate;
pub mod error;
pub mod harness;
pub mod it_trainer;
pub mod linear_head;
mod par;
pub mod pool_builder;
pub mod similarity;
pub mod storage;
pub mod synth;
pub mod types;

pub use error::{LvpError, Result};
pub use par::is_parallel;
pub use similarity::{SimilarityKind, SoftmaxConfig};
pub use types::{
    validate_stream, ClassId, Embedding, EvalReport, LabelVector, Modality, Pool, Record, TaskKind,
    TaskSpec,
};
