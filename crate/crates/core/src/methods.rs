//! The three comparison methods, orchestrated end to end over a
//! (survey matrix, model matrix or backend) pair: variance correlation,
//! cluster alignment, and direct comparative probing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::builder::NormMode;
use crate::cluster::{
    agglomerative_1d, alignment, elbow_k, kmeans, most_differing_pair, select_k_silhouette,
};
use crate::error::{MethodError, StatsError};
use crate::matrix::MoralMatrix;
use crate::prompt::PromptEngine;
use crate::score::ScoreBackend;
use crate::stats::{
    chi2_2x2, confusion_metrics, pearson, rank_topics, topic_profiles, Chi2Result, ConfusionCounts,
    ConfusionMetrics, RankDirection, VarianceDivisor,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Shared knobs for the three methods; every value is recorded in the
/// emitted reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub divisor: VarianceDivisor,
    /// Depth of the controversial/agreed rankings (and the method-2 subset
    /// size).
    pub k_topics: usize,
    /// Requested silhouette K range; narrowed to [2, min(10, n-1)].
    pub k_range: (usize, usize),
    pub kmeans_seed: u64,
    pub kmeans_restarts: usize,
    /// Upper end of the elbow search range for method 3.
    pub elbow_max_k: usize,
    /// Probe trials per topic in method 3.
    pub trials: usize,
    /// Master seed for method-3 trial sampling.
    pub seed: u64,
    pub mode: NormMode,
}

impl MethodConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            divisor: VarianceDivisor::Population,
            k_topics: 3,
            k_range: (2, 10),
            kmeans_seed: seed,
            kmeans_restarts: 10,
            elbow_max_k: 10,
            trials: 50,
            seed,
            mode: NormMode::RawSum,
        }
    }
}

/// Restricts both matrices to their sorted common labels and drops
/// countries with any missing cell in either matrix (listwise deletion).
fn align_matrices(
    survey: &MoralMatrix,
    model: &MoralMatrix,
    topics: &[String],
) -> Result<(MoralMatrix, MoralMatrix, Vec<String>), MethodError> {
    let (common_countries, _) = MoralMatrix::common_labels(survey, model);
    let complete: Vec<String> = common_countries
        .iter()
        .filter(|country| {
            topics.iter().all(|topic| {
                survey.get_by_label(country, topic).ok().flatten().is_some()
                    && model.get_by_label(country, topic).ok().flatten().is_some()
            })
        })
        .cloned()
        .collect();
    let dropped: Vec<String> = common_countries
        .iter()
        .filter(|c| !complete.contains(c))
        .cloned()
        .collect();
    let survey_r = survey.restrict(&complete, topics)?;
    let model_r = model.restrict(&complete, topics)?;
    Ok((survey_r, model_r, dropped))
}

fn common_topics(survey: &MoralMatrix, model: &MoralMatrix) -> Vec<String> {
    let (_, topics) = MoralMatrix::common_labels(survey, model);
    topics
}

/// One topic row of the variance-comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method1Topic {
    pub topic: String,
    pub survey_variance: f64,
    pub survey_mean: f64,
    pub model_variance: f64,
    pub model_mean: f64,
    /// Survey variance minus model variance.
    pub variance_difference: f64,
}

/// Method 1: association between per-topic cross-country variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method1Report {
    pub schema_version: u32,
    pub model_id: String,
    pub survey_id: String,
    pub r: f64,
    pub p: f64,
    pub n_topics: usize,
    pub n_countries: usize,
    pub dropped_countries: Vec<String>,
    pub divisor: VarianceDivisor,
    /// Sorted by variance difference, descending.
    pub per_topic: Vec<Method1Topic>,
    pub survey_mean_score: f64,
    pub survey_mean_variance: f64,
    pub model_mean_score: f64,
    pub model_mean_variance: f64,
    pub survey_controversial: Vec<String>,
    pub survey_agreed: Vec<String>,
    pub model_controversial: Vec<String>,
    pub model_agreed: Vec<String>,
}

/// Correlates per-topic cross-country variances of the survey and model
/// matrices over their common (country, topic) intersection.
pub fn run_method1(
    survey: &MoralMatrix,
    model: &MoralMatrix,
    cfg: &MethodConfig,
) -> Result<Method1Report, MethodError> {
    let topics = common_topics(survey, model);
    if topics.len() < 3 {
        return Err(MethodError::TooFewCommonTopics {
            got: topics.len(),
            need: 3,
        });
    }
    let (survey_r, model_r, dropped) = align_matrices(survey, model, &topics)?;
    if survey_r.countries().len() < 2 {
        return Err(MethodError::TooFewCommonCountries {
            got: survey_r.countries().len(),
            need: 2,
        });
    }
    let survey_profiles = topic_profiles(&survey_r, cfg.divisor)?;
    let model_profiles = topic_profiles(&model_r, cfg.divisor)?;
    let survey_vars: Vec<f64> = survey_profiles.iter().map(|p| p.variance).collect();
    let model_vars: Vec<f64> = model_profiles.iter().map(|p| p.variance).collect();
    let correlation = pearson(&survey_vars, &model_vars)?;

    let mut per_topic: Vec<Method1Topic> = survey_profiles
        .iter()
        .zip(&model_profiles)
        .map(|(s, m)| Method1Topic {
            topic: s.topic.clone(),
            survey_variance: s.variance,
            survey_mean: s.mean,
            model_variance: m.variance,
            model_mean: m.mean,
            variance_difference: s.variance - m.variance,
        })
        .collect();
    per_topic.sort_by(|a, b| {
        b.variance_difference
            .total_cmp(&a.variance_difference)
            .then_with(|| a.topic.cmp(&b.topic))
    });

    let k = cfg.k_topics.min(topics.len());
    let survey_cells: Vec<f64> = survey_r.cells().filter_map(|(_, _, v)| v).collect();
    let model_cells: Vec<f64> = model_r.cells().filter_map(|(_, _, v)| v).collect();
    Ok(Method1Report {
        schema_version: REPORT_SCHEMA_VERSION,
        model_id: model.source_tag().to_string(),
        survey_id: survey.source_tag().to_string(),
        r: correlation.r,
        p: correlation.p,
        n_topics: topics.len(),
        n_countries: survey_r.countries().len(),
        dropped_countries: dropped,
        divisor: cfg.divisor,
        per_topic,
        survey_mean_score: survey_cells.iter().sum::<f64>() / survey_cells.len() as f64,
        survey_mean_variance: survey_vars.iter().sum::<f64>() / survey_vars.len() as f64,
        model_mean_score: model_cells.iter().sum::<f64>() / model_cells.len() as f64,
        model_mean_variance: model_vars.iter().sum::<f64>() / model_vars.len() as f64,
        survey_controversial: rank_topics(&survey_profiles, k, RankDirection::MostControversial)?,
        survey_agreed: rank_topics(&survey_profiles, k, RankDirection::MostAgreed)?,
        model_controversial: rank_topics(&model_profiles, k, RankDirection::MostControversial)?,
        model_agreed: rank_topics(&model_profiles, k, RankDirection::MostAgreed)?,
    })
}

/// Topic subset compared in method 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicSubset {
    All,
    Controversial,
    Agreed,
}

impl TopicSubset {
    pub fn name(self) -> &'static str {
        match self {
            TopicSubset::All => "all",
            TopicSubset::Controversial => "controversial",
            TopicSubset::Agreed => "agreed",
        }
    }
}

/// One country's pair of cluster labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryClusterRow {
    pub country: String,
    pub survey_label: usize,
    pub model_label: usize,
}

/// Method 2: alignment between survey- and model-derived country clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method2Report {
    pub schema_version: u32,
    pub model_id: String,
    pub survey_id: String,
    pub subset: TopicSubset,
    pub topics: Vec<String>,
    /// K chosen by silhouette on the survey clustering and reused for the
    /// model clustering.
    pub k_used: usize,
    pub silhouette: f64,
    /// True when the requested K range was narrowed to [2, min(10, n-1)].
    pub k_range_clamped: bool,
    pub ari: f64,
    pub ami: f64,
    pub cas: f64,
    pub ami_degenerate: bool,
    pub dropped_countries: Vec<String>,
    pub labels: Vec<CountryClusterRow>,
}

/// Clusters countries by survey scores (K by silhouette), reuses the same K
/// on the model scores, and compares the two partitions with ARI/AMI/CAS.
pub fn run_method2(
    survey: &MoralMatrix,
    model: &MoralMatrix,
    subset: TopicSubset,
    cfg: &MethodConfig,
) -> Result<Method2Report, MethodError> {
    let all_topics = common_topics(survey, model);
    if all_topics.is_empty() {
        return Err(MethodError::TooFewCommonTopics { got: 0, need: 2 });
    }
    // Subset selection by survey variance ranking over the common labels.
    let (survey_common, _, _) = align_matrices(survey, model, &all_topics)?;
    let survey_profiles = topic_profiles(&survey_common, cfg.divisor)?;
    let mut topics = match subset {
        TopicSubset::All => all_topics.clone(),
        TopicSubset::Controversial => rank_topics(
            &survey_profiles,
            cfg.k_topics.min(survey_profiles.len()),
            RankDirection::MostControversial,
        )?,
        TopicSubset::Agreed => rank_topics(
            &survey_profiles,
            cfg.k_topics.min(survey_profiles.len()),
            RankDirection::MostAgreed,
        )?,
    };
    topics.sort();
    if topics.len() < 2 {
        return Err(MethodError::SubsetTooSmall(subset.name().to_string()));
    }
    let (survey_r, model_r, dropped) = align_matrices(survey, model, &topics)?;
    let countries = survey_r.countries().to_vec();
    if countries.len() < 4 {
        return Err(MethodError::TooFewCommonCountries {
            got: countries.len(),
            need: 4,
        });
    }
    let points = |matrix: &MoralMatrix| -> Vec<Vec<f64>> {
        (0..matrix.countries().len())
            .map(|ci| matrix.row(ci).into_iter().map(|v| v.unwrap()).collect())
            .collect()
    };
    let survey_points = points(&survey_r);
    let model_points = points(&model_r);
    let choice = select_k_silhouette(
        &countries,
        &survey_points,
        cfg.k_range,
        cfg.kmeans_seed,
        cfg.kmeans_restarts,
    )?;
    let survey_assignment = kmeans(
        &countries,
        &survey_points,
        choice.k,
        cfg.kmeans_seed,
        cfg.kmeans_restarts,
    )?;
    let model_assignment = kmeans(
        &countries,
        &model_points,
        choice.k,
        cfg.kmeans_seed,
        cfg.kmeans_restarts,
    )?;
    let scores = alignment(&survey_assignment, &model_assignment)?;
    let labels = countries
        .iter()
        .enumerate()
        .map(|(i, country)| CountryClusterRow {
            country: country.clone(),
            survey_label: survey_assignment.labels[i],
            model_label: model_assignment.labels[i],
        })
        .collect();
    Ok(Method2Report {
        schema_version: REPORT_SCHEMA_VERSION,
        model_id: model.source_tag().to_string(),
        survey_id: survey.source_tag().to_string(),
        subset,
        topics,
        k_used: choice.k,
        silhouette: choice.silhouette,
        k_range_clamped: choice.clamped,
        ari: scores.ari,
        ami: scores.ami,
        cas: scores.cas,
        ami_degenerate: scores.ami_degenerate,
        dropped_countries: dropped,
        labels,
    })
}

/// Binary similarity label for one probed country pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimLabel {
    #[serde(rename = "SIMILAR")]
    Similar,
    #[serde(rename = "DIFFERENT")]
    Different,
}

/// One intra- or inter-cluster country-pair comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrialRecord {
    pub topic: String,
    pub country_a: String,
    pub country_b: String,
    pub empirical_label: SimLabel,
    pub model_label: SimLabel,
    pub mean_logprob_similar: f64,
    pub mean_logprob_different: f64,
    pub trial_index: usize,
    pub seed: u64,
}

/// A topic method 3 could not probe, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTopic {
    pub topic: String,
    pub reason: String,
}

/// Method 3: direct comparative probing of intra- vs inter-cluster country
/// pairs, pooled across topics into one confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method3Report {
    pub schema_version: u32,
    pub model_id: String,
    pub survey_id: String,
    pub positive_class: String,
    pub trials_per_topic: usize,
    pub confusion: ConfusionCounts,
    pub metrics: ConfusionMetrics,
    pub chi2: Option<Chi2Result>,
    /// Why the chi-squared test is absent, when it is.
    pub chi2_note: Option<String>,
    /// Pairs whose similar and different means tied exactly (counted as
    /// DIFFERENT by convention).
    pub ties_flagged: u64,
    pub skipped_topics: Vec<SkippedTopic>,
    pub trials: Vec<ProbeTrialRecord>,
}

fn topic_stream(master_seed: u64, topic: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(b"method3-topic");
    hasher.update(topic.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes))
}

/// Two distinct indices drawn from the pool without replacement.
fn sample_two(rng: &mut ChaCha8Rng, pool: &[usize]) -> (usize, usize) {
    let i = rng.random_range(0..pool.len());
    let mut j = rng.random_range(0..pool.len() - 1);
    if j >= i {
        j += 1;
    }
    (pool[i], pool[j])
}

/// Probes one country pair: scores the three comparative token pairs and
/// averages the similar-side and different-side log-probabilities.
fn probe_pair<B: ScoreBackend + ?Sized>(
    engine: &PromptEngine,
    backend: &B,
    model_id: &str,
    topic: &str,
    country_x: &str,
    country_y: &str,
    mode: NormMode,
) -> Result<(f64, f64), MethodError> {
    let pairs = engine.render_comparative_pairs(topic, country_x, country_y)?;
    let mut sim_sum = 0.0;
    let mut diff_sum = 0.0;
    for pair in &pairs {
        let sim = backend.score(&crate::score::ScoreRequest::new(
            model_id,
            &pair.prefix,
            &pair.positive_continuation,
        )?)?;
        let diff = backend.score(&crate::score::ScoreRequest::new(
            model_id,
            &pair.prefix,
            &pair.negative_continuation,
        )?)?;
        match mode {
            NormMode::RawSum => {
                sim_sum += sim.logprob_sum;
                diff_sum += diff.logprob_sum;
            }
            NormMode::PerToken => {
                sim_sum += sim.per_token();
                diff_sum += diff.per_token();
            }
        }
    }
    let n = pairs.len() as f64;
    Ok((sim_sum / n, diff_sum / n))
}

/// Runs the direct-probing method: per topic, 1-D survey clusters with
/// elbow-selected K, the two most differing clusters, and seeded trials
/// drawing two countries from each to form two intra- and two inter-cluster
/// pairs. Trials pool across topics into one confusion matrix with
/// positive class SIMILAR.
pub fn run_method3<B: ScoreBackend + ?Sized>(
    survey: &MoralMatrix,
    engine: &PromptEngine,
    backend: &B,
    model_id: &str,
    cfg: &MethodConfig,
) -> Result<Method3Report, MethodError> {
    let mut trials = Vec::new();
    let mut skipped = Vec::new();
    let mut ties = 0u64;
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);

    for (ti, topic) in survey.topics().iter().enumerate() {
        let mut countries = Vec::new();
        let mut values = Vec::new();
        for (ci, country) in survey.countries().iter().enumerate() {
            if let Some(v) = survey.get(ci, ti) {
                countries.push(country.clone());
                values.push(v);
            }
        }
        let n = countries.len();
        if n < 4 {
            skipped.push(SkippedTopic {
                topic: topic.clone(),
                reason: format!("only {n} countries with scores"),
            });
            continue;
        }
        let elbow = elbow_k(&values, (1, cfg.elbow_max_k.min(n - 1)))?;
        if elbow.k < 2 {
            skipped.push(SkippedTopic {
                topic: topic.clone(),
                reason: "elbow selected a single cluster".into(),
            });
            continue;
        }
        let clusters = agglomerative_1d(&countries, &values, elbow.k)?;
        let pair = most_differing_pair(&clusters, &values)?;
        let members = clusters.members();
        let side_a = &members[pair.cluster_a];
        let side_b = &members[pair.cluster_b];
        if side_a.len() < 2 || side_b.len() < 2 {
            skipped.push(SkippedTopic {
                topic: topic.clone(),
                reason: format!(
                    "most differing clusters have {} and {} countries; need 2 of each",
                    side_a.len(),
                    side_b.len()
                ),
            });
            continue;
        }
        let mut rng = topic_stream(cfg.seed, topic);
        for trial_index in 0..cfg.trials {
            let (a0, a1) = sample_two(&mut rng, side_a);
            let (b0, b1) = sample_two(&mut rng, side_b);
            let comparisons = [
                (a0, a1, SimLabel::Similar),
                (b0, b1, SimLabel::Similar),
                (a0, b0, SimLabel::Different),
                (a1, b1, SimLabel::Different),
            ];
            for (x, y, empirical) in comparisons {
                let (mean_sim, mean_diff) = probe_pair(
                    engine,
                    backend,
                    model_id,
                    topic,
                    &countries[x],
                    &countries[y],
                    cfg.mode,
                )?;
                if mean_sim == mean_diff {
                    ties += 1;
                }
                let model_label = if mean_sim > mean_diff {
                    SimLabel::Similar
                } else {
                    SimLabel::Different
                };
                match (empirical, model_label) {
                    (SimLabel::Similar, SimLabel::Similar) => tp += 1,
                    (SimLabel::Similar, SimLabel::Different) => fn_ += 1,
                    (SimLabel::Different, SimLabel::Similar) => fp += 1,
                    (SimLabel::Different, SimLabel::Different) => tn += 1,
                }
                trials.push(ProbeTrialRecord {
                    topic: topic.clone(),
                    country_a: countries[x].clone(),
                    country_b: countries[y].clone(),
                    empirical_label: empirical,
                    model_label,
                    mean_logprob_similar: mean_sim,
                    mean_logprob_different: mean_diff,
                    trial_index,
                    seed: cfg.seed,
                });
            }
        }
    }
    if trials.is_empty() {
        return Err(MethodError::AllTopicsSkipped);
    }
    let confusion = ConfusionCounts {
        tp,
        fp,
        fn_,
        tn,
        positive_class: "SIMILAR".to_string(),
    };
    let metrics = confusion_metrics(&confusion)?;
    let (chi2, chi2_note) = match chi2_2x2([[tp, fn_], [fp, tn]], false) {
        Ok(result) => (Some(result), None),
        Err(StatsError::ZeroMarginal(which)) => (
            None,
            Some(format!(
                "chi-squared undefined: the {which} marginal is zero (model predicts one class)"
            )),
        ),
        Err(other) => return Err(other.into()),
    };
    Ok(Method3Report {
        schema_version: REPORT_SCHEMA_VERSION,
        model_id: model_id.to_string(),
        survey_id: survey.source_tag().to_string(),
        positive_class: "SIMILAR".to_string(),
        trials_per_topic: cfg.trials,
        confusion,
        metrics,
        chi2,
        chi2_note,
        ties_flagged: ties,
        skipped_topics: skipped,
        trials,
    })
}

/// Relabels a matrix as a model source, for identity-oracle checks.
pub fn as_model_matrix(survey: &MoralMatrix, model_id: &str) -> MoralMatrix {
    let scores = survey
        .cells()
        .map(|(_, _, v)| v)
        .collect::<Vec<Option<f64>>>();
    MoralMatrix::new(
        model_id,
        survey.countries().to_vec(),
        survey.topics().to_vec(),
        scores,
    )
    .expect("same shape")
}
