//! `moralign synth`: materialize calibrated synthetic survey exports plus
//! ready-to-run config files, so the pipeline can be exercised end to end
//! without licensed survey microdata.

use std::fs::File;
use std::path::Path;

use moralign::synth::{generate, pew_design, wvs_design, SurveyDesign};

use crate::config::{
    AnalysisConfig, BackendConfig, BackendKind, PromptsConfig, RunConfig, SurveyConfig, SurveyKind,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthTarget {
    Wvs,
    Pew,
    Both,
}

fn emit(design: SurveyDesign, seed: u64, out: &Path) -> Result<(), CliError> {
    let id = design.id.to_lowercase();
    let survey = generate(design, seed);
    let export_path = out.join(format!("{id}_export.csv"));
    let map_path = out.join(format!("{id}_countries.csv"));
    survey
        .write_export_csv(
            File::create(&export_path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", export_path.display())))?,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?;
    survey
        .write_country_map_csv(
            File::create(&map_path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", map_path.display())))?,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let config = RunConfig {
        seed,
        out_dir: format!("out-{id}").into(),
        survey: SurveyConfig {
            id: survey.design.id.to_string(),
            kind: match survey.design.source {
                moralign::survey::SurveySource::Wvs => SurveyKind::Wvs,
                moralign::survey::SurveySource::Pew => SurveyKind::Pew,
            },
            export: format!("{id}_export.csv").into(),
            country_map: format!("{id}_countries.csv").into(),
            country_column: survey.design.country_column.to_string(),
            questions: survey.design.question_topic_map(),
            nonresponse: Default::default(),
            pew_codes: Default::default(),
        },
        prompts: PromptsConfig {
            topic_phrases: survey.design.topic_phrases(),
            ..Default::default()
        },
        backend: BackendConfig {
            kind: BackendKind::Mock,
            model_id: "mock-small".into(),
            mock_seed: 1234,
            table_path: None,
            endpoint: None,
            auth_token_env: moralign::score::AUTH_TOKEN_ENV.into(),
            max_in_flight: 8,
            normalization: Default::default(),
            whole_sentence: false,
            missing_cell_limit: 0.10,
        },
        analysis: AnalysisConfig::default(),
    };
    let config_path = out.join(format!("moralign-{id}.toml"));
    let toml_text = toml::to_string_pretty(&config)
        .map_err(|e| CliError::Validation(format!("config serialization: {e}")))?;
    std::fs::write(&config_path, toml_text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", config_path.display())))?;
    log::info!(
        "wrote {}, {} and {}",
        export_path.display(),
        map_path.display(),
        config_path.display()
    );
    Ok(())
}

pub fn run(target: SynthTarget, seed: u64, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", out.display())))?;
    if matches!(target, SynthTarget::Wvs | SynthTarget::Both) {
        emit(wvs_design(), seed, out)?;
    }
    if matches!(target, SynthTarget::Pew | SynthTarget::Both) {
        emit(pew_design(), seed, out)?;
    }
    Ok(())
}
