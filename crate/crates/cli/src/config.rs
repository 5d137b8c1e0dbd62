//! Run configuration: one TOML file drives ingest, probe, analyze and
//! report for one (survey, model) pair. Relative paths resolve against the
//! config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use moralign::builder::NormMode;
use moralign::methods::MethodConfig;
use moralign::prompt::PromptEngine;
use moralign::score::{
    CachedBackend, MockBackend, RemoteBackend, RemoteConfig, ScoreBackend, TableBackend,
    AUTH_TOKEN_ENV,
};
use moralign::stats::VarianceDivisor;
use moralign::survey::{PewCodes, WvsNonresponseMode};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SurveyKind {
    Wvs,
    Pew,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    Table,
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub survey: SurveyConfig,
    #[serde(default)]
    pub prompts: PromptsConfig,
    pub backend: BackendConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    /// Source tag stamped into the matrix, e.g. "WVS".
    pub id: String,
    pub kind: SurveyKind,
    pub export: PathBuf,
    pub country_map: PathBuf,
    pub country_column: String,
    /// Question column to topic display label.
    pub questions: BTreeMap<String, String>,
    #[serde(default)]
    pub nonresponse: WvsNonresponseMode,
    #[serde(default)]
    pub pew_codes: PewCodes,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptsConfig {
    pub trailing_period: bool,
    /// Topic label to in-sentence noun phrase.
    pub topic_phrases: BTreeMap<String, String>,
    /// Extra article-corrected country display forms.
    pub articles: BTreeMap<String, String>,
}

impl Default for PromptsConfig {
    fn default() -> Self {
        Self {
            trailing_period: true,
            topic_phrases: BTreeMap::new(),
            articles: BTreeMap::new(),
        }
    }
}

fn default_mock_seed() -> u64 {
    1234
}

fn default_auth_token_env() -> String {
    AUTH_TOKEN_ENV.to_string()
}

fn default_max_in_flight() -> usize {
    8
}

fn default_missing_cell_limit() -> f64 {
    0.10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_id: String,
    #[serde(default = "default_mock_seed")]
    pub mock_seed: u64,
    #[serde(default)]
    pub table_path: Option<PathBuf>,
    /// Remote base URL; falls back to the MORALIGN_ENDPOINT variable.
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_auth_token_env")]
    pub auth_token_env: String,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub normalization: NormMode,
    #[serde(default)]
    pub whole_sentence: bool,
    #[serde(default = "default_missing_cell_limit")]
    pub missing_cell_limit: f64,
}

fn default_k_min() -> usize {
    2
}

fn default_k_max() -> usize {
    10
}

fn default_k_topics() -> usize {
    3
}

fn default_trials() -> usize {
    50
}

fn default_restarts() -> usize {
    10
}

fn default_elbow_max_k() -> usize {
    10
}

fn default_kmeans_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub variance_divisor: VarianceDivisor,
    pub k_min: usize,
    pub k_max: usize,
    pub k_topics: usize,
    pub trials: usize,
    pub kmeans_restarts: usize,
    pub elbow_max_k: usize,
    /// Clustering is seeded separately from the run seed: the run seed
    /// drives only method-3 trial sampling.
    pub kmeans_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            variance_divisor: VarianceDivisor::Population,
            k_min: default_k_min(),
            k_max: default_k_max(),
            k_topics: default_k_topics(),
            trials: default_trials(),
            kmeans_restarts: default_restarts(),
            elbow_max_k: default_elbow_max_k(),
            kmeans_seed: default_kmeans_seed(),
        }
    }
}

impl RunConfig {
    /// Loads and resolves a config file; relative paths become absolute
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };
        config.out_dir = resolve(&config.out_dir);
        config.survey.export = resolve(&config.survey.export);
        config.survey.country_map = resolve(&config.survey.country_map);
        if let Some(table) = &config.backend.table_path {
            config.backend.table_path = Some(resolve(table));
        }
        Ok(config)
    }

    /// Input-path existence checks, run before any work starts.
    pub fn validate_inputs(&self) -> Result<(), CliError> {
        for (what, path) in [
            ("survey export", &self.survey.export),
            ("country map", &self.survey.country_map),
        ] {
            if !path.exists() {
                return Err(CliError::Validation(format!(
                    "{what} not found: {}",
                    path.display()
                )));
            }
        }
        if self.backend.kind == BackendKind::Table {
            match &self.backend.table_path {
                Some(p) if p.exists() => {}
                Some(p) => {
                    return Err(CliError::Validation(format!(
                        "score table not found: {}",
                        p.display()
                    )))
                }
                None => {
                    return Err(CliError::Validation(
                        "backend.kind = \"table\" requires backend.table_path".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn engine(&self) -> PromptEngine {
        PromptEngine::new(
            self.prompts.articles.clone(),
            self.prompts.topic_phrases.clone(),
            self.prompts.trailing_period,
        )
    }

    pub fn method_config(&self) -> MethodConfig {
        let mut cfg = MethodConfig::new(self.seed);
        cfg.divisor = self.analysis.variance_divisor;
        cfg.k_topics = self.analysis.k_topics;
        cfg.k_range = (self.analysis.k_min, self.analysis.k_max);
        cfg.kmeans_seed = self.analysis.kmeans_seed;
        cfg.kmeans_restarts = self.analysis.kmeans_restarts;
        cfg.elbow_max_k = self.analysis.elbow_max_k;
        cfg.trials = self.analysis.trials;
        cfg.mode = self.backend.normalization;
        cfg
    }

    /// Constructs the configured scoring backend.
    pub fn make_backend(&self) -> Result<Box<dyn ScoreBackend>, CliError> {
        match self.backend.kind {
            BackendKind::Mock => Ok(Box::new(MockBackend::new(self.backend.mock_seed))),
            BackendKind::Table => {
                let path =
                    self.backend.table_path.as_ref().ok_or_else(|| {
                        CliError::Validation("backend.table_path is required".into())
                    })?;
                Ok(Box::new(TableBackend::read_path(path).map_err(|e| {
                    CliError::Validation(format!("score table {}: {e}", path.display()))
                })?))
            }
            BackendKind::Remote => {
                let remote = RemoteConfig::from_env(
                    self.backend.endpoint.clone(),
                    &self.backend.auth_token_env,
                )
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "remote backend needs backend.endpoint or ${}",
                        moralign::score::ENDPOINT_ENV
                    ))
                })?;
                Ok(Box::new(RemoteBackend::new(remote)))
            }
        }
    }

    /// The configured backend wrapped with the persistent score cache.
    pub fn make_cached_backend(
        &self,
        cache_path: &Path,
    ) -> Result<CachedBackend<Box<dyn ScoreBackend>>, CliError> {
        let inner = self.make_backend()?;
        CachedBackend::open(inner, cache_path)
            .map_err(|e| CliError::Validation(format!("score cache: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"
seed = 42
out_dir = "out"

[survey]
id = "WVS"
kind = "wvs"
export = "data/wvs.csv"
country_map = "data/countries.csv"
country_column = "B_COUNTRY"

[survey.questions]
Q177 = "Claiming government benefits"

[backend]
kind = "mock"
model_id = "mock-small"
"#;
        let config: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.backend.max_in_flight, 8);
        assert_eq!(config.analysis.trials, 50);
        assert_eq!(config.analysis.k_min, 2);
        assert!(config.prompts.trailing_period);
        assert_eq!(config.survey.nonresponse, WvsNonresponseMode::ZeroReplace);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"
seed = 1
out_dir = "out"
typo_field = true

[survey]
id = "X"
kind = "wvs"
export = "a"
country_map = "b"
country_column = "c"
[survey.questions]
[backend]
kind = "mock"
model_id = "m"
"#;
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }
}
