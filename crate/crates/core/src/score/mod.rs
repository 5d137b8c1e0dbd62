//! Log-probability scoring behind a uniform backend interface.
//!
//! Three implementations ship with the crate: a deterministic [`MockBackend`]
//! for bit-reproducible pipeline runs, a [`TableBackend`] file oracle, and a
//! [`RemoteBackend`] HTTP client for inference servers. [`CachedBackend`]
//! wraps any of them with a persistent append-only score cache and in-flight
//! request deduplication.

mod cache;
mod mock;
mod remote;
mod table;

pub use cache::{cache_key, CachedBackend, ScoreCache};
pub use mock::MockBackend;
pub use remote::{RemoteBackend, RemoteConfig, AUTH_TOKEN_ENV, ENDPOINT_ENV};
pub use table::TableBackend;

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;

/// Summed continuation log-probability (natural-log units) plus the number
/// of continuation tokens it covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProbScore {
    pub logprob_sum: f64,
    pub token_count: u32,
}

impl LogProbScore {
    pub fn per_token(&self) -> f64 {
        self.logprob_sum / self.token_count as f64
    }
}

/// One scoring request: the continuation's log-probability given the prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_id: String,
    pub prefix: String,
    pub continuation: String,
}

impl ScoreRequest {
    pub fn new(
        model_id: impl Into<String>,
        prefix: impl Into<String>,
        continuation: impl Into<String>,
    ) -> Result<Self, ScoreError> {
        let continuation = continuation.into();
        if continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        Ok(Self {
            model_id: model_id.into(),
            prefix: prefix.into(),
            continuation,
        })
    }
}

/// A source of continuation log-probabilities.
///
/// Implementations must be deterministic per version: within one backend
/// version, identical requests return identical scores, and the interface
/// must be safely callable from multiple concurrent workers.
pub trait ScoreBackend: Send + Sync {
    /// Stable identity of this backend's scoring function; folded into every
    /// cache key so backend upgrades invalidate cached entries.
    fn version(&self) -> String;

    /// Whether scores are guaranteed to be proper log-probabilities
    /// (`logprob_sum <= 0`). Mock and table backends may violate this.
    fn proper(&self) -> bool {
        true
    }

    /// Whether the backend can score the given model id. Remote backends
    /// cannot know and answer true; the server is the authority.
    fn supports_model(&self, model_id: &str) -> bool {
        let _ = model_id;
        true
    }

    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError>;

    /// Order-preserving batch scoring with per-item failure isolation.
    fn score_batch(&self, reqs: &[ScoreRequest]) -> Vec<Result<LogProbScore, ScoreError>> {
        reqs.iter().map(|r| self.score(r)).collect()
    }
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for &B {
    fn version(&self) -> String {
        (**self).version()
    }
    fn proper(&self) -> bool {
        (**self).proper()
    }
    fn supports_model(&self, model_id: &str) -> bool {
        (**self).supports_model(model_id)
    }
    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        (**self).score(req)
    }
    fn score_batch(&self, reqs: &[ScoreRequest]) -> Vec<Result<LogProbScore, ScoreError>> {
        (**self).score_batch(reqs)
    }
}

impl<B: ScoreBackend + ?Sized> ScoreBackend for Box<B> {
    fn version(&self) -> String {
        (**self).version()
    }
    fn proper(&self) -> bool {
        (**self).proper()
    }
    fn supports_model(&self, model_id: &str) -> bool {
        (**self).supports_model(model_id)
    }
    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        (**self).score(req)
    }
    fn score_batch(&self, reqs: &[ScoreRequest]) -> Vec<Result<LogProbScore, ScoreError>> {
        (**self).score_batch(reqs)
    }
}
