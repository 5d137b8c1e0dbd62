//! File-table oracle backend: looks up scores by (prefix, continuation)
//! digest pair from a delimiter-separated file.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{LogProbScore, ScoreBackend, ScoreRequest};
use crate::error::ScoreError;

fn text_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Scores come from a fixed table keyed on text digests; model ids are not
/// part of the table. Useful as an identity oracle and for offline replay.
#[derive(Debug, Clone)]
pub struct TableBackend {
    entries: HashMap<(String, String), LogProbScore>,
    version: String,
}

impl TableBackend {
    pub fn new(entries: HashMap<(String, String), LogProbScore>) -> Self {
        let mut keys: Vec<&(String, String)> = entries.keys().collect();
        keys.sort();
        let mut hasher = Sha256::new();
        for (p, c) in keys {
            hasher.update(p.as_bytes());
            hasher.update(c.as_bytes());
            let score = entries[&(p.clone(), c.clone())];
            hasher.update(score.logprob_sum.to_le_bytes());
            hasher.update(score.token_count.to_le_bytes());
        }
        let version = format!("table/1 {}", hex::encode(&hasher.finalize()[..8]));
        Self { entries, version }
    }

    /// Builds a table from raw (prefix, continuation) text pairs.
    pub fn from_text_entries<'a>(
        entries: impl IntoIterator<Item = (&'a str, &'a str, LogProbScore)>,
    ) -> Self {
        Self::new(
            entries
                .into_iter()
                .map(|(p, c, s)| ((text_digest(p), text_digest(c)), s))
                .collect(),
        )
    }

    /// Reads a table file with header
    /// `prefix_digest,continuation_digest,logprob_sum,token_count`.
    pub fn read<R: Read>(r: R) -> Result<Self, ScoreError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut entries = HashMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| ScoreError::Cache(format!("table: {e}")))?;
            if record.len() != 4 {
                return Err(ScoreError::Cache(format!(
                    "table row has {} fields, expected 4",
                    record.len()
                )));
            }
            let logprob_sum: f64 = record[2]
                .parse()
                .map_err(|e| ScoreError::Cache(format!("table logprob_sum: {e}")))?;
            let token_count: u32 = record[3]
                .parse()
                .map_err(|e| ScoreError::Cache(format!("table token_count: {e}")))?;
            entries.insert(
                (record[0].to_string(), record[1].to_string()),
                LogProbScore {
                    logprob_sum,
                    token_count,
                },
            );
        }
        Ok(Self::new(entries))
    }

    pub fn read_path(path: &Path) -> Result<Self, ScoreError> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Writes the table file format consumed by [`TableBackend::read`].
    pub fn write<W: std::io::Write>(&self, w: W) -> Result<(), ScoreError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "prefix_digest",
            "continuation_digest",
            "logprob_sum",
            "token_count",
        ])
        .map_err(|e| ScoreError::Cache(e.to_string()))?;
        let mut keys: Vec<&(String, String)> = self.entries.keys().collect();
        keys.sort();
        for key in keys {
            let score = self.entries[key];
            wtr.write_record([
                key.0.as_str(),
                key.1.as_str(),
                &format!("{}", score.logprob_sum),
                &format!("{}", score.token_count),
            ])
            .map_err(|e| ScoreError::Cache(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ScoreBackend for TableBackend {
    fn version(&self) -> String {
        self.version.clone()
    }

    fn proper(&self) -> bool {
        false
    }

    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        if req.continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        let key = (text_digest(&req.prefix), text_digest(&req.continuation));
        self.entries
            .get(&key)
            .copied()
            .ok_or_else(|| ScoreError::MissingEntry(format!("{}/{}", &key.0[..12], &key.1[..12])))
    }
}
