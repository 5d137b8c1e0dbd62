//! `moralign analyze`: run the three comparison methods over the ingested
//! survey matrix and the probed model matrix, then seal the bundle with a
//! digest manifest.

use std::fs::File;
use std::time::Instant;

use moralign::matrix::MoralMatrix;
use moralign::methods::{run_method1, run_method2, run_method3, TopicSubset};

use crate::commands::{now_unix, write_json, CacheStats, CommandMeta, RunMeta};
use crate::config::RunConfig;
use crate::figures;
use crate::manifest;
use crate::outdir::OutDir;
use crate::CliError;

fn load_matrix(path: &std::path::Path, tag: &str, producer: &str) -> Result<MoralMatrix, CliError> {
    let file = File::open(path).map_err(|_| {
        CliError::Validation(format!(
            "matrix {} not found; run `moralign {producer}` first",
            path.display()
        ))
    })?;
    MoralMatrix::read_csv(file, tag)
        .map_err(|e| CliError::Corrupt(format!("matrix {}: {e}", path.display())))
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let (out, _lock) = OutDir::open(&config.out_dir)?;
    let survey = load_matrix(
        &out.survey_matrix_file(&config.survey.id)?,
        &config.survey.id,
        "ingest",
    )?;
    let model = load_matrix(
        &out.model_matrix_file(&config.backend.model_id)?,
        &config.backend.model_id,
        "probe",
    )?;

    let cfg = config.method_config();
    let pair = format!("{}_{}", config.backend.model_id, config.survey.id);
    let mut warnings = Vec::new();

    let method1 = run_method1(&survey, &model, &cfg)
        .map_err(|e| CliError::Validation(format!("method 1: {e}")))?;
    write_json(&method1, &out.report_file(&format!("method1_{pair}"))?)?;
    let scatter_path = out.figure_file(&format!("variance_scatter_{pair}"))?;
    figures::write_variance_scatter(
        &method1,
        File::create(&scatter_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", scatter_path.display())))?,
    )?;

    for subset in [
        TopicSubset::All,
        TopicSubset::Controversial,
        TopicSubset::Agreed,
    ] {
        let report = run_method2(&survey, &model, subset, &cfg)
            .map_err(|e| CliError::Validation(format!("method 2 ({}): {e}", subset.name())))?;
        if report.k_range_clamped {
            warnings.push(format!(
                "method 2 ({}): K range narrowed to [2, min(10, n-1)]",
                subset.name()
            ));
        }
        write_json(
            &report,
            &out.report_file(&format!("method2_{}_{pair}", subset.name()))?,
        )?;
    }

    // Method 3 probes the backend directly with comparative prompts.
    let backend = config.make_cached_backend(&out.cache_file()?)?;
    let engine = config.engine();
    let method3 = run_method3(&survey, &engine, &backend, &config.backend.model_id, &cfg)
        .map_err(|e| CliError::Backend(format!("method 3: {e}")))?;
    for skipped in &method3.skipped_topics {
        warnings.push(format!(
            "method 3 skipped topic {:?}: {}",
            skipped.topic, skipped.reason
        ));
    }
    if method3.ties_flagged > 0 {
        warnings.push(format!(
            "method 3: {} tied comparisons counted DIFFERENT",
            method3.ties_flagged
        ));
    }
    write_json(&method3, &out.report_file(&format!("method3_{pair}"))?)?;

    let manifest = manifest::build(out.root())?;
    manifest::write(&manifest, &out.manifest_file())?;

    let hits = backend.cache_hits();
    let calls = backend.backend_calls();
    RunMeta::append(
        &out.run_meta_file(),
        CommandMeta {
            command: "analyze".into(),
            started_unix: now_unix(),
            duration_ms: started.elapsed().as_millis() as u64,
            seed: config.seed,
            warnings,
            notes: vec![
                format!("method1 r={:.6} p={:.6}", method1.r, method1.p),
                format!("variance_divisor={:?}", cfg.divisor),
                format!("manifest_files={}", manifest.files.len()),
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
        },
    )?;
    log::info!(
        "analysis complete: {} bundle files manifested at {}",
        manifest.files.len(),
        out.manifest_file().display()
    );
    Ok(())
}
