//! Probing toolkit for cross-cultural moral judgments in causal language models.
//!
//! The pipeline has three stages:
//!
//! 1. **Ingest** — parse raw survey exports (World Values Survey wave 7 or the
//!    2013 Pew Global Attitudes survey), clean non-responses, aggregate per
//!    country and normalize into a country × topic [`MoralMatrix`] on `[-1, 1]`.
//! 2. **Probe** — render contrast-pair prompts ("In {country} {topic} is
//!    always justifiable" vs. "… never justifiable"), score both continuations
//!    with a log-probability backend, and assemble a model-generated matrix
//!    from the score differences.
//! 3. **Analyze** — compare the two matrices via variance correlation
//!    (method 1), cluster alignment with ARI/AMI/CAS (method 2), and direct
//!    comparative probing of country pairs (method 3).
//!
//! Backends implement [`score::ScoreBackend`]; a deterministic mock, a
//! file-table oracle, and an HTTP client for remote inference servers are
//! provided, plus a persistent score cache for resumable runs.

pub mod builder;
pub mod cluster;
pub mod error;
pub mod matrix;
pub mod methods;
pub mod prompt;
pub mod score;
pub mod stats;
pub mod survey;
pub mod synth;

pub use matrix::MoralMatrix;
pub use score::{LogProbScore, ScoreBackend, ScoreRequest};
pub use stats::VarianceDivisor;
