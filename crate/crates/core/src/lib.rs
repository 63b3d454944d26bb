//! Few-shot hate speech experiment harness.
//!
//! The crate covers everything around the model: corpus ingestion,
//! knowledge-infusion corpora, nested stratified few-shot splits,
//! task-decomposed linearization and parsing, evaluation statistics, and
//! the experiment runner that drives any generator through a batch file
//! protocol.

pub mod corpus;
pub mod error;
pub mod jsonl;
pub mod knowledge;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod sampler;
pub mod scheme;

pub use error::{Error, Result};
