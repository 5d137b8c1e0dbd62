//! Deterministic mock backend: scores are a keyed digest of the request
//! text, so full pipeline runs are bit-reproducible without any model.

use sha2::{Digest, Sha256};

use super::{LogProbScore, ScoreBackend, ScoreRequest};
use crate::error::ScoreError;

/// Serves model ids starting with `"mock"`. Each continuation token gets a
/// pseudo log-probability in `(-8.05, -0.05)` derived from a seeded digest
/// of (model, prefix, continuation, token index).
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    offset_per_token: f64,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            offset_per_token: 0.0,
        }
    }

    /// Adds a constant to every token's log-probability; used to exercise
    /// shift invariance of contrast scores. Positive offsets can push sums
    /// above zero, which clears the `proper` capability bit.
    pub fn with_offset_per_token(mut self, offset: f64) -> Self {
        self.offset_per_token = offset;
        self
    }

    fn unit_from_digest(&self, req: &ScoreRequest, token_idx: usize) -> f64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(req.model_id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(req.prefix.as_bytes());
        hasher.update([0x1f]);
        hasher.update(req.continuation.as_bytes());
        hasher.update([0x1f]);
        hasher.update((token_idx as u64).to_le_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes) as f64 / (u64::MAX as f64 + 1.0)
    }
}

/// Whitespace token count; the mock's stand-in for a tokenizer.
fn token_count(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

impl ScoreBackend for MockBackend {
    fn version(&self) -> String {
        format!("mock/1 seed={} offset={}", self.seed, self.offset_per_token)
    }

    fn proper(&self) -> bool {
        self.offset_per_token <= 0.0
    }

    fn supports_model(&self, model_id: &str) -> bool {
        model_id.starts_with("mock")
    }

    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        if req.continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        if !self.supports_model(&req.model_id) {
            return Err(ScoreError::UnknownModel(req.model_id.clone()));
        }
        let tokens = token_count(&req.continuation);
        if tokens == 0 {
            return Err(ScoreError::ZeroTokens);
        }
        let mut sum = 0.0;
        for idx in 0..tokens {
            let unit = self.unit_from_digest(req, idx as usize);
            sum += -(0.05 + 8.0 * unit) + self.offset_per_token;
        }
        Ok(LogProbScore {
            logprob_sum: sum,
            token_count: tokens,
        })
    }
}
