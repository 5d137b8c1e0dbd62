//! Turns backend scores into model-generated moral matrices via the
//! contrast-pair formula: per token pair, subtract the log-probability of
//! the negative-judgment statement from the positive one; average the five
//! pair scores per template; average the two template means.

use serde::{Deserialize, Serialize};

use crate::error::{BuilderError, ScoreError};
use crate::matrix::MoralMatrix;
use crate::prompt::{ContrastPair, PromptEngine, TemplateId};
use crate::score::{LogProbScore, ScoreBackend, ScoreRequest};

/// How a continuation's log-probability enters the difference: raw sums
/// (default) or per-token means. Judgment tokens differ in token count, so
/// the active mode is recorded in run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    #[default]
    RawSum,
    PerToken,
}

/// A log-probability score tagged with the normalization mode it was read
/// under; differencing scores from mixed modes is an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModedScore {
    pub score: LogProbScore,
    pub mode: NormMode,
}

impl ModedScore {
    pub fn new(score: LogProbScore, mode: NormMode) -> Self {
        Self { score, mode }
    }

    fn effective(&self) -> f64 {
        match self.mode {
            NormMode::RawSum => self.score.logprob_sum,
            NormMode::PerToken => self.score.per_token(),
        }
    }
}

/// Contrast score for one token pair: positive minus negative.
pub fn pair_score(pos: &ModedScore, neg: &ModedScore) -> Result<f64, BuilderError> {
    if pos.mode != neg.mode {
        return Err(BuilderError::MixedModes);
    }
    Ok(pos.effective() - neg.effective())
}

/// One scored contrast pair, retained for the audit trail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub template_id: TemplateId,
    pub token_pair_id: u8,
    pub positive_logprob: f64,
    pub negative_logprob: f64,
    pub difference: f64,
}

/// Full per-cell scoring breakdown: the 2×5 matrix of pair differences, the
/// two template means, and the final cell score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScoreBreakdown {
    pub country: String,
    pub topic: String,
    pub per_template_per_pair: [[f64; 5]; 2],
    pub template_means: [f64; 2],
    pub final_score: f64,
    pub rows: Vec<AuditRow>,
}

/// Options controlling a probing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub model_id: String,
    pub mode: NormMode,
    /// Upper bound on concurrent in-flight scoring calls.
    pub max_in_flight: usize,
    /// Fraction of missing cells above which the run fails.
    pub missing_cell_limit: f64,
    /// Score the entire sentence instead of the continuation given the
    /// shared prefix (sensitivity mode; the prefix cancels in the
    /// difference either way).
    pub whole_sentence: bool,
}

impl ProbeOptions {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            mode: NormMode::RawSum,
            max_in_flight: 8,
            missing_cell_limit: 0.10,
            whole_sentence: false,
        }
    }
}

fn requests_for(
    pair: &ContrastPair,
    model_id: &str,
    whole_sentence: bool,
) -> Result<(ScoreRequest, ScoreRequest), ScoreError> {
    if whole_sentence {
        Ok((
            ScoreRequest::new(model_id, "", pair.positive_sentence())?,
            ScoreRequest::new(model_id, "", pair.negative_sentence())?,
        ))
    } else {
        Ok((
            ScoreRequest::new(model_id, &pair.prefix, &pair.positive_continuation)?,
            ScoreRequest::new(model_id, &pair.prefix, &pair.negative_continuation)?,
        ))
    }
}

/// Scores one (country, topic) cell: all ten contrast pairs, averaged per
/// template and then across templates.
pub fn country_topic_score<B: ScoreBackend + ?Sized>(
    engine: &PromptEngine,
    country: &str,
    topic: &str,
    backend: &B,
    opts: &ProbeOptions,
) -> Result<PairScoreBreakdown, CellFailure> {
    let pairs = engine
        .render_moral_pairs(country, topic)
        .map_err(|e| CellFailure::new(country, topic, e.to_string()))?;
    let mut per_template_per_pair = [[0.0; 5]; 2];
    let mut rows = Vec::with_capacity(10);
    for pair in &pairs {
        let (pos_req, neg_req) = requests_for(pair, &opts.model_id, opts.whole_sentence)
            .map_err(|e| CellFailure::new(country, topic, e.to_string()))?;
        let pos = backend
            .score(&pos_req)
            .map_err(|e| CellFailure::new(country, topic, e.to_string()))?;
        let neg = backend
            .score(&neg_req)
            .map_err(|e| CellFailure::new(country, topic, e.to_string()))?;
        let diff = pair_score(
            &ModedScore::new(pos, opts.mode),
            &ModedScore::new(neg, opts.mode),
        )
        .map_err(|e| CellFailure::new(country, topic, e.to_string()))?;
        let t = match pair.template_id {
            TemplateId::In => 0,
            TemplateId::People => 1,
            TemplateId::Comparative => {
                unreachable!("moral templates only")
            }
        };
        let p = (pair.provenance.token_pair_id - 1) as usize;
        per_template_per_pair[t][p] = diff;
        rows.push(AuditRow {
            template_id: pair.template_id,
            token_pair_id: pair.provenance.token_pair_id,
            positive_logprob: match opts.mode {
                NormMode::RawSum => pos.logprob_sum,
                NormMode::PerToken => pos.per_token(),
            },
            negative_logprob: match opts.mode {
                NormMode::RawSum => neg.logprob_sum,
                NormMode::PerToken => neg.per_token(),
            },
            difference: diff,
        });
    }
    let template_means = [
        per_template_per_pair[0].iter().sum::<f64>() / 5.0,
        per_template_per_pair[1].iter().sum::<f64>() / 5.0,
    ];
    let final_score = (template_means[0] + template_means[1]) / 2.0;
    Ok(PairScoreBreakdown {
        country: country.to_string(),
        topic: topic.to_string(),
        per_template_per_pair,
        template_means,
        final_score,
        rows,
    })
}

/// A cell that could not be scored, with its cause. Such cells are marked
/// missing in the output matrix; they are never silently zeroed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub country: String,
    pub topic: String,
    pub cause: String,
}

impl CellFailure {
    fn new(country: &str, topic: &str, cause: String) -> Self {
        Self {
            country: country.to_string(),
            topic: topic.to_string(),
            cause,
        }
    }
}

/// A model-generated matrix with its audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrixOutput {
    /// Raw log-probability differences; unlike survey matrices these are
    /// neither clamped to `[-1, 1]` nor rounded.
    pub matrix: MoralMatrix,
    pub breakdowns: Vec<PairScoreBreakdown>,
    pub failures: Vec<CellFailure>,
}

/// Scores every (country, topic) cell in parallel and assembles the model
/// matrix, keeping unscoreable cells as flagged misses. Cell computations
/// are independent; aggregation order is fixed by cell index, so results do
/// not depend on completion order.
pub fn probe_cells<B: ScoreBackend + ?Sized>(
    engine: &PromptEngine,
    countries: &[String],
    topics: &[String],
    backend: &B,
    opts: &ProbeOptions,
) -> Result<ModelMatrixOutput, BuilderError> {
    let cells: Vec<(usize, usize)> = (0..countries.len())
        .flat_map(|ci| (0..topics.len()).map(move |ti| (ci, ti)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.max_in_flight.max(1))
        .build()
        .expect("scoring pool");
    let results: Vec<Result<PairScoreBreakdown, CellFailure>> = pool.install(|| {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(ci, ti)| {
                country_topic_score(engine, &countries[ci], &topics[ti], backend, opts)
            })
            .collect()
    });

    let mut scores = Vec::with_capacity(results.len());
    let mut breakdowns = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(breakdown) => {
                scores.push(Some(breakdown.final_score));
                breakdowns.push(breakdown);
            }
            Err(failure) => {
                scores.push(None);
                failures.push(failure);
            }
        }
    }
    let matrix = MoralMatrix::new(
        opts.model_id.clone(),
        countries.to_vec(),
        topics.to_vec(),
        scores,
    )?;
    Ok(ModelMatrixOutput {
        matrix,
        breakdowns,
        failures,
    })
}

/// Missing-cell budget check for a probing run.
pub fn enforce_missing_limit(output: &ModelMatrixOutput, limit: f64) -> Result<(), BuilderError> {
    let total = output.matrix.countries().len() * output.matrix.topics().len();
    let percent = output.failures.len() as f64 / total.max(1) as f64;
    if percent > limit {
        let mut summary: Vec<String> = output
            .failures
            .iter()
            .take(20)
            .map(|f| format!("  ({}, {}): {}", f.country, f.topic, f.cause))
            .collect();
        if output.failures.len() > 20 {
            summary.push(format!("  ... and {} more", output.failures.len() - 20));
        }
        return Err(BuilderError::TooManyMissing {
            missing: output.failures.len(),
            total,
            percent: percent * 100.0,
            limit: limit * 100.0,
            summary: summary.join("\n"),
        });
    }
    Ok(())
}

/// [`probe_cells`] plus the missing-cell budget: fails when the missing
/// fraction exceeds `opts.missing_cell_limit`.
pub fn build_model_matrix<B: ScoreBackend + ?Sized>(
    engine: &PromptEngine,
    countries: &[String],
    topics: &[String],
    backend: &B,
    opts: &ProbeOptions,
) -> Result<ModelMatrixOutput, BuilderError> {
    let output = probe_cells(engine, countries, topics, backend, opts)?;
    enforce_missing_limit(&output, opts.missing_cell_limit)?;
    Ok(output)
}
