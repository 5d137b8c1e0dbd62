//! `moralign ingest`: survey export to canonical matrix file, metadata
//! sidecar, and distribution/spread figure data.

use std::fs::File;
use std::time::Instant;

use moralign::survey::{ingest_pew, ingest_wvs, parse_wide_csv, CountryMap, SurveySource};

use crate::commands::{now_unix, CommandMeta, RunMeta};
use crate::config::{RunConfig, SurveyKind};
use crate::figures;
use crate::outdir::OutDir;
use crate::CliError;

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    config.validate_inputs()?;
    let started = Instant::now();
    let (out, _lock) = OutDir::open(&config.out_dir)?;

    let survey = &config.survey;
    let source = match survey.kind {
        SurveyKind::Wvs => SurveySource::Wvs,
        SurveyKind::Pew => SurveySource::Pew,
    };
    let question_columns: Vec<String> = survey.questions.keys().cloned().collect();
    let export = File::open(&survey.export)
        .map_err(|e| CliError::Validation(format!("{}: {e}", survey.export.display())))?;
    let table = parse_wide_csv(
        export,
        source,
        &survey.country_column,
        &question_columns,
        Some(&survey.pew_codes),
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;
    let map_file = File::open(&survey.country_map)
        .map_err(|e| CliError::Validation(format!("{}: {e}", survey.country_map.display())))?;
    let map = CountryMap::read_csv(map_file).map_err(|e| CliError::Validation(e.to_string()))?;

    let outcome = match survey.kind {
        SurveyKind::Wvs => ingest_wvs(table, &map, &survey.questions, survey.nonresponse),
        SurveyKind::Pew => ingest_pew(table, &map, &survey.questions, &survey.pew_codes),
    }
    .map_err(|e| CliError::Validation(e.to_string()))?;

    let matrix_path = out.survey_matrix_file(&survey.id)?;
    let matrix_file = File::create(&matrix_path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", matrix_path.display())))?;
    outcome
        .matrix
        .write_csv(matrix_file, Some(4))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    crate::commands::write_json(&outcome.report, &out.survey_meta_file(&survey.id)?)?;

    let hist_path = out.figure_file(&format!("{}_score_distribution", survey.id))?;
    figures::write_score_histogram(
        &outcome.matrix,
        20,
        File::create(&hist_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", hist_path.display())))?,
    )?;
    let spread_path = out.figure_file(&format!("{}_topic_spread", survey.id))?;
    figures::write_topic_spread(
        &outcome.matrix,
        File::create(&spread_path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", spread_path.display())))?,
    )?;

    log::info!(
        "ingested {}: {} countries x {} topics -> {}",
        survey.id,
        outcome.matrix.countries().len(),
        outcome.matrix.topics().len(),
        matrix_path.display()
    );
    RunMeta::append(
        &out.run_meta_file(),
        CommandMeta {
            command: "ingest".into(),
            started_unix: now_unix(),
            duration_ms: started.elapsed().as_millis() as u64,
            seed: config.seed,
            warnings: outcome.report.warnings.clone(),
            notes: vec![
                format!("source={}", outcome.report.source),
                format!("nonresponse_mode={}", outcome.report.nonresponse_mode),
                format!(
                    "replaced_nonresponses={}",
                    outcome.report.replaced_nonresponses
                ),
                format!(
                    "excluded_nonresponses={}",
                    outcome.report.excluded_nonresponses
                ),
                format!("clamped_cells={}", outcome.report.clamped_cells),
            ],
            cache: None,
        },
    )
}
