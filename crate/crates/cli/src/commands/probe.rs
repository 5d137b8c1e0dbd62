//! `moralign probe`: score all contrast pairs against the configured
//! backend and emit the model matrix plus the per-pair audit file.

use std::fs::File;
use std::io::Write;
use std::time::Instant;

use moralign::builder::{enforce_missing_limit, probe_cells, ModelMatrixOutput, ProbeOptions};
use moralign::matrix::MoralMatrix;
use moralign::prompt::TemplateId;
use moralign::score::ScoreBackend;

use crate::commands::{now_unix, CacheStats, CommandMeta, RunMeta};
use crate::config::RunConfig;
use crate::outdir::OutDir;
use crate::CliError;

fn load_survey_matrix(out: &OutDir, config: &RunConfig) -> Result<MoralMatrix, CliError> {
    let path = out.survey_matrix_file(&config.survey.id)?;
    let file = File::open(&path).map_err(|_| {
        CliError::Validation(format!(
            "survey matrix {} not found; run `moralign ingest` first",
            path.display()
        ))
    })?;
    MoralMatrix::read_csv(file, config.survey.id.clone())
        .map_err(|e| CliError::Corrupt(format!("survey matrix {}: {e}", path.display())))
}

fn write_audit(output: &ModelMatrixOutput, path: &std::path::Path) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record([
        "country",
        "topic",
        "template",
        "pair_id",
        "positive_logprob",
        "negative_logprob",
        "difference",
    ])
    .map_err(|e| CliError::Validation(e.to_string()))?;
    for breakdown in &output.breakdowns {
        for row in &breakdown.rows {
            wtr.write_record([
                breakdown.country.clone(),
                breakdown.topic.clone(),
                match row.template_id {
                    TemplateId::In => "in".to_string(),
                    TemplateId::People => "people".to_string(),
                    TemplateId::Comparative => "comparative".to_string(),
                },
                row.token_pair_id.to_string(),
                format!("{}", row.positive_logprob),
                format!("{}", row.negative_logprob),
                format!("{}", row.difference),
            ])
            .map_err(|e| CliError::Validation(e.to_string()))?;
        }
    }
    wtr.flush()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let (out, _lock) = OutDir::open(&config.out_dir)?;
    let survey = load_survey_matrix(&out, config)?;

    let backend = config.make_cached_backend(&out.cache_file()?)?;
    if !backend.supports_model(&config.backend.model_id) {
        return Err(CliError::Validation(format!(
            "model {:?} is unknown to the {} backend",
            config.backend.model_id,
            backend.version()
        )));
    }

    let mut opts = ProbeOptions::new(&config.backend.model_id);
    opts.mode = config.backend.normalization;
    opts.max_in_flight = config.backend.max_in_flight;
    opts.missing_cell_limit = config.backend.missing_cell_limit;
    opts.whole_sentence = config.backend.whole_sentence;

    let engine = config.engine();
    let countries = survey.countries().to_vec();
    let topics = survey.topics().to_vec();
    log::info!(
        "probing {} cells ({} countries x {} topics, 20 scoring calls each)",
        countries.len() * topics.len(),
        countries.len(),
        topics.len()
    );
    let output = probe_cells(&engine, &countries, &topics, &backend, &opts)
        .map_err(|e| CliError::Backend(e.to_string()))?;

    // The audit trail is retained even when the run fails the budget below.
    write_audit(&output, &out.audit_file(&config.backend.model_id)?)?;

    let budget = enforce_missing_limit(&output, opts.missing_cell_limit);
    let hits = backend.cache_hits();
    let calls = backend.backend_calls();
    let meta = CommandMeta {
        command: "probe".into(),
        started_unix: now_unix(),
        duration_ms: started.elapsed().as_millis() as u64,
        seed: config.seed,
        warnings: output
            .failures
            .iter()
            .map(|f| format!("cell ({}, {}): {}", f.country, f.topic, f.cause))
            .collect(),
        notes: vec![
            format!("model_id={}", config.backend.model_id),
            format!("backend_version={}", backend.version()),
            format!("normalization={:?}", opts.mode),
            format!("whole_sentence={}", opts.whole_sentence),
            format!("proper_logprobs={}", backend.proper()),
            // Leading-space handling before judgment tokens is the scoring
            // server's tokenizer's business; record the contract here.
            "continuations carry one leading space; the backend tokenizer decides how it attaches"
                .into(),
        ],
        cache: Some(CacheStats {
            hits,
            backend_calls: calls,
            hit_rate: if hits + calls > 0 {
                hits as f64 / (hits + calls) as f64
            } else {
                0.0
            },
        }),
    };
    RunMeta::append(&out.run_meta_file(), meta)?;
    budget.map_err(|e| CliError::Backend(e.to_string()))?;

    let matrix_path = out.model_matrix_file(&config.backend.model_id)?;
    let mut matrix_file = File::create(&matrix_path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", matrix_path.display())))?;
    output
        .matrix
        .write_csv(&mut matrix_file, None)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    matrix_file
        .flush()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    log::info!(
        "model matrix written to {} ({} cache hits, {} backend calls)",
        matrix_path.display(),
        hits,
        calls
    );
    Ok(())
}
