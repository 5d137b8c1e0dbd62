//! Acceptance suite: every gate criterion as one test at its stated
//! tolerance, printing one PASS line per criterion (run with
//! `cargo test -p moralign-cli --test acceptance -- --nocapture`).
//!
//! Criteria 4 and 5 exercise live language models; they are implemented in
//! full but marked ignored because they need a reachable `/v1/score`
//! endpoint serving the five reference models. Set MORALIGN_ENDPOINT and
//! run with `-- --ignored` to include them.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use moralign::builder::{build_model_matrix, ProbeOptions};
use moralign::cluster::{ami, ari, ClusterAlgorithm, ClusterAssignment};
use moralign::error::ScoreError;
use moralign::matrix::MoralMatrix;
use moralign::methods::{
    as_model_matrix, run_method1, run_method2, run_method3, MethodConfig, SimLabel, TopicSubset,
};
use moralign::prompt::PromptEngine;
use moralign::score::{
    CachedBackend, LogProbScore, MockBackend, RemoteBackend, RemoteConfig, ScoreBackend,
    ScoreRequest,
};
use moralign::stats::{
    chi2_2x2, mean_profile, pearson, rank_topics, topic_profiles, RankDirection, VarianceDivisor,
};
use moralign::survey::{
    ingest_pew, ingest_wvs, parse_wide_csv, CountryMap, PewCodes, SurveySource, WvsNonresponseMode,
};
use moralign::synth::{generate, pew_design, wvs_design, SurveyDesign};

const FIXTURE_SEED: u64 = 7;

fn pass(id: &str, detail: String) {
    println!("ACCEPTANCE {id} PASS - {detail}");
}

/// Generates the calibrated fixture and runs it through the full parsing
/// and ingestion path, exactly as a file-based run would.
fn ingest_fixture(design: SurveyDesign) -> MoralMatrix {
    let source = design.source;
    let survey = generate(design, FIXTURE_SEED);
    let mut export = Vec::new();
    survey.write_export_csv(&mut export).unwrap();
    let mut map_csv = Vec::new();
    survey.write_country_map_csv(&mut map_csv).unwrap();
    let codes = PewCodes::default();
    let table = parse_wide_csv(
        &export[..],
        source,
        survey.design.country_column,
        &survey.design.question_ids(),
        Some(&codes),
    )
    .unwrap();
    let map = CountryMap::read_csv(&map_csv[..]).unwrap();
    let outcome = match source {
        SurveySource::Wvs => ingest_wvs(
            table,
            &map,
            &survey.design.question_topic_map(),
            WvsNonresponseMode::ZeroReplace,
        ),
        SurveySource::Pew => ingest_pew(table, &map, &survey.design.question_topic_map(), &codes),
    }
    .unwrap();
    outcome.matrix
}

fn variance_of(matrix: &MoralMatrix, topic: &str, divisor: VarianceDivisor) -> f64 {
    topic_profiles(matrix, divisor)
        .unwrap()
        .into_iter()
        .find(|p| p.topic == topic)
        .unwrap()
        .variance
}

#[test]
fn criterion_01_wvs_summary_statistics() {
    let matrix = ingest_fixture(wvs_design());
    assert_eq!(matrix.countries().len(), 55);
    assert_eq!(matrix.topics().len(), 19);
    let (mean, mean_variance) = mean_profile(&matrix, VarianceDivisor::Population).unwrap();
    assert!(
        (mean - -0.575995).abs() <= 0.002,
        "grand mean {mean} not within 0.002 of -0.575995"
    );
    assert!(
        (mean_variance - 0.075163).abs() <= 0.002,
        "mean variance {mean_variance} not within 0.002 of 0.075163"
    );
    pass(
        "C01",
        format!("WVS grand mean {mean:.6} (target -0.575995 +- 0.002), mean variance {mean_variance:.6} (target 0.075163 +- 0.002)"),
    );
}

#[test]
fn criterion_02_wvs_topic_rankings() {
    let matrix = ingest_fixture(wvs_design());
    let profiles = topic_profiles(&matrix, VarianceDivisor::Population).unwrap();
    let controversial = rank_topics(&profiles, 3, RankDirection::MostControversial).unwrap();
    assert_eq!(
        controversial,
        ["Sex before marriage", "Homosexuality", "Euthanasia"]
    );
    for (topic, target) in controversial.iter().zip([0.219, 0.209, 0.126]) {
        let v = variance_of(&matrix, topic, VarianceDivisor::Population);
        assert!(
            (v - target).abs() <= 0.005,
            "{topic}: variance {v} not within 0.005 of {target}"
        );
    }
    let agreed = rank_topics(&profiles, 3, RankDirection::MostAgreed).unwrap();
    assert_eq!(
        agreed,
        [
            "Stealing property",
            "Violence against other people",
            "For a man to beat his wife"
        ]
    );
    for (topic, target) in agreed.iter().zip([0.015, 0.015, 0.018]) {
        let v = variance_of(&matrix, topic, VarianceDivisor::Population);
        assert!(
            (v - target).abs() <= 0.005,
            "{topic}: variance {v} not within 0.005 of {target}"
        );
    }
    pass(
        "C02",
        format!("WVS top-3 controversial {controversial:?} and agreed {agreed:?} with variances within +-0.005"),
    );
}

#[test]
fn criterion_03_pew_statistics_and_rankings() {
    let matrix = ingest_fixture(pew_design());
    assert_eq!(matrix.countries().len(), 39);
    assert_eq!(matrix.topics().len(), 8);
    let (mean, mean_variance) = mean_profile(&matrix, VarianceDivisor::Population).unwrap();
    assert!((mean - -0.2444).abs() <= 0.005, "PEW mean {mean}");
    assert!(
        (mean_variance - 0.1384).abs() <= 0.005,
        "PEW mean variance {mean_variance}"
    );
    let profiles = topic_profiles(&matrix, VarianceDivisor::Population).unwrap();
    let controversial = rank_topics(&profiles, 3, RankDirection::MostControversial).unwrap();
    assert_eq!(
        controversial,
        [
            "Sex between unmarried adults",
            "Homosexuality",
            "Drinking alcohol"
        ]
    );
    for (topic, target) in controversial.iter().zip([0.268, 0.216, 0.157]) {
        let v = variance_of(&matrix, topic, VarianceDivisor::Population);
        assert!((v - target).abs() <= 0.005, "{topic}: {v} vs {target}");
    }
    let agreed = rank_topics(&profiles, 3, RankDirection::MostAgreed).unwrap();
    assert_eq!(
        agreed,
        [
            "Married people having an affair",
            "Using contraceptives",
            "Gambling"
        ]
    );
    for (topic, target) in agreed.iter().zip([0.021, 0.086, 0.097]) {
        let v = variance_of(&matrix, topic, VarianceDivisor::Population);
        assert!((v - target).abs() <= 0.005, "{topic}: {v} vs {target}");
    }
    pass(
        "C03",
        format!("PEW mean {mean:.4} (target -0.2444 +- 0.005), mean variance {mean_variance:.4} (target 0.1384 +- 0.005), rankings reproduced"),
    );
}

/// The five reference models, in fixed order; index 1 is the large
/// monolingual model and index 4 the large multilingual model.
const DEFAULT_REFERENCE_MODELS: &str = "gpt2-medium,gpt2-large,opt-125m,qwen2-0.5b,bloomz-560m";

fn remote_models() -> (RemoteConfig, Vec<String>) {
    let endpoint = std::env::var("MORALIGN_ENDPOINT").expect(
        "criterion needs MORALIGN_ENDPOINT pointing at a /v1/score server with the reference models",
    );
    let models: Vec<String> = std::env::var("MORALIGN_ACCEPTANCE_MODELS")
        .unwrap_or_else(|_| DEFAULT_REFERENCE_MODELS.to_string())
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    assert_eq!(models.len(), 5, "expected five reference models");
    (
        RemoteConfig::from_env(Some(endpoint), "MORALIGN_API_TOKEN").unwrap(),
        models,
    )
}

fn probe_model_matrix(
    survey: &MoralMatrix,
    backend: &dyn ScoreBackend,
    model_id: &str,
) -> MoralMatrix {
    let engine = PromptEngine::default();
    let opts = ProbeOptions::new(model_id);
    build_model_matrix(
        &engine,
        survey.countries(),
        survey.topics(),
        &backend,
        &opts,
    )
    .unwrap()
    .matrix
}

#[test]
#[ignore = "needs a live /v1/score endpoint with the five reference models; set MORALIGN_ENDPOINT and run with --ignored"]
fn criterion_04_method1_sign_patterns_on_reference_models() {
    let (remote, models) = remote_models();
    let dir = tempfile::tempdir().unwrap();
    let wvs = ingest_fixture(wvs_design());
    let pew = ingest_fixture(pew_design());
    let cfg = MethodConfig::new(42);
    // Reported reference correlations, in model order (non-gating).
    let wvs_reference = [-0.195, -0.115, -0.035, -0.200, -0.118];
    let pew_reference = [-0.090, 0.617, -0.095, 0.102, 0.608];
    let mut lines = Vec::new();
    for (i, model_id) in models.iter().enumerate() {
        let backend = CachedBackend::open(
            RemoteBackend::new(remote.clone()),
            dir.path().join("scores.cache"),
        )
        .unwrap();
        let wvs_model = probe_model_matrix(&wvs, &backend, model_id);
        let wvs_report = run_method1(&wvs, &wvs_model, &cfg).unwrap();
        assert!(
            wvs_report.r <= 0.0,
            "{model_id}: WVS correlation {:.3} is positive; the sign pattern requires non-positive",
            wvs_report.r
        );
        let pew_model = probe_model_matrix(&pew, &backend, model_id);
        let pew_report = run_method1(&pew, &pew_model, &cfg).unwrap();
        if i == 1 || i == 4 {
            assert!(
                pew_report.r >= 0.4,
                "{model_id}: PEW correlation {:.3} below the +0.4 gate",
                pew_report.r
            );
        }
        let wvs_gap = (wvs_report.r - wvs_reference[i]).abs();
        let pew_gap = (pew_report.r - pew_reference[i]).abs();
        lines.push(format!(
            "{model_id}: WVS r {:.3} (ref {:.3}, |gap| {:.3}{}), PEW r {:.3} (ref {:.3}, |gap| {:.3}{})",
            wvs_report.r,
            wvs_reference[i],
            wvs_gap,
            if wvs_gap <= 0.25 { "" } else { ", above 0.25 - reported, not gating" },
            pew_report.r,
            pew_reference[i],
            pew_gap,
            if pew_gap <= 0.25 { "" } else { ", above 0.25 - reported, not gating" },
        ));
    }
    pass("C04", lines.join("; "));
}

#[test]
#[ignore = "needs a live /v1/score endpoint with the five reference models; set MORALIGN_ENDPOINT and run with --ignored"]
fn criterion_05_mean_pattern_on_reference_models() {
    let (remote, models) = remote_models();
    let dir = tempfile::tempdir().unwrap();
    let cfg = MethodConfig::new(42);
    let mut lines = Vec::new();
    for survey in [ingest_fixture(wvs_design()), ingest_fixture(pew_design())] {
        for model_id in &models {
            let backend = CachedBackend::open(
                RemoteBackend::new(remote.clone()),
                dir.path().join("scores.cache"),
            )
            .unwrap();
            let model = probe_model_matrix(&survey, &backend, model_id);
            let report = run_method1(&survey, &model, &cfg).unwrap();
            assert!(
                report.model_mean_variance < report.survey_mean_variance,
                "{model_id} vs {}: model mean variance {:.4} not below survey {:.4}",
                survey.source_tag(),
                report.model_mean_variance,
                report.survey_mean_variance
            );
            assert!(
                report.model_mean_score > report.survey_mean_score,
                "{model_id} vs {}: model mean score {:.4} not above survey {:.4}",
                survey.source_tag(),
                report.model_mean_score,
                report.survey_mean_score
            );
            lines.push(format!(
                "{model_id}/{}: variance {:.4} < {:.4}, mean {:.4} > {:.4}",
                survey.source_tag(),
                report.model_mean_variance,
                report.survey_mean_variance,
                report.model_mean_score,
                report.survey_mean_score
            ));
        }
    }
    pass("C05", lines.join("; "));
}

#[test]
fn criterion_06_identity_oracle_both_surveys() {
    let cfg = MethodConfig::new(42);
    for design in [wvs_design(), pew_design()] {
        let survey = ingest_fixture(design);
        let model = as_model_matrix(&survey, "identity");
        let report = run_method1(&survey, &model, &cfg).unwrap();
        assert!(
            (report.r - 1.0).abs() <= 1e-9,
            "{}: identity r = {}",
            survey.source_tag(),
            report.r
        );
        for subset in [
            TopicSubset::All,
            TopicSubset::Controversial,
            TopicSubset::Agreed,
        ] {
            let m2 = run_method2(&survey, &model, subset, &cfg).unwrap();
            assert_eq!(m2.ari, 1.0, "{} {:?}", survey.source_tag(), subset);
            assert_eq!(m2.ami, 1.0, "{} {:?}", survey.source_tag(), subset);
            assert_eq!(m2.cas, 1.0, "{} {:?}", survey.source_tag(), subset);
        }
    }
    pass(
        "C06",
        "identity model matrix gives method-1 r = 1.0 (+-1e-9) and method-2 ari = ami = cas = 1.0 exactly, for WVS and PEW".into(),
    );
}

// --- Criterion 7: exhaustive ARI/AMI oracle equivalence -------------------

/// All set partitions of n items as restricted growth strings.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, max_used: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == current.len() {
            out.push(current.clone());
            return;
        }
        for label in 0..=max_used + 1 {
            current[i] = label;
            rec(i + 1, max_used.max(label), current, out);
        }
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    rec(1, 0, &mut current, &mut out);
    out
}

/// Exhaustive pair-counting ARI: classify every item pair as together or
/// apart in each partition (the Hubert-Arabie pair formula).
fn ari_pair_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut n11, mut n00, mut n10, mut n01) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (false, false) => n00 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
            }
        }
    }
    let denominator = (n11 + n10) * (n10 + n00) + (n11 + n01) * (n01 + n00);
    if denominator == 0.0 {
        // No disagreeing pairs are even possible: identical trivial
        // partitions.
        return 1.0;
    }
    2.0 * (n11 * n00 - n10 * n01) / denominator
}

fn entropy_of(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0.0) += 1.0;
    }
    let n = labels.len() as f64;
    counts.values().map(|c| -(c / n) * (c / n).ln()).sum()
}

fn mi_of(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ca: HashMap<usize, f64> = HashMap::new();
    let mut cb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        *ca.entry(x).or_insert(0.0) += 1.0;
        *cb.entry(y).or_insert(0.0) += 1.0;
    }
    joint
        .iter()
        .map(|(&(x, y), &nxy)| {
            // p_xy * ln(p_xy / (p_x p_y)) with counts: (nxy/n) ln(nxy n / (ca cb)).
            (nxy / n) * ((nxy * n) / (ca[&x] * cb[&y])).ln()
        })
        .sum()
}

fn heap_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut items = items.to_vec();
    let mut out = Vec::new();
    let n = items.len();
    let mut c = vec![0usize; n];
    out.push(items.clone());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            out.push(items.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn sorted_margins(labels: &[usize]) -> Vec<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut margins: Vec<usize> = counts.into_values().collect();
    margins.sort();
    margins
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Exact E[MI] under the permutation model: the mean MI over all item
/// permutations of the second labeling. Depends only on the two margin
/// multisets, which keys the cache.
fn emi_enumeration(
    a: &[usize],
    b: &[usize],
    cache: &mut HashMap<(Vec<usize>, Vec<usize>), f64>,
) -> f64 {
    let key = (sorted_margins(a), sorted_margins(b));
    if let Some(&v) = cache.get(&key) {
        return v;
    }
    let perms = heap_permutations(b);
    let emi = perms.iter().map(|p| mi_of(a, p)).sum::<f64>() / perms.len() as f64;
    cache.insert(key, emi);
    emi
}

fn ami_oracle(a: &[usize], b: &[usize], cache: &mut HashMap<(Vec<usize>, Vec<usize>), f64>) -> f64 {
    let ha = entropy_of(a);
    let hb = entropy_of(b);
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mi = mi_of(a, b);
    let emi = emi_enumeration(a, b, cache);
    let denominator = 0.5 * (ha + hb) - emi;
    if denominator.abs() < 1e-12 {
        return if canonical(a) == canonical(b) {
            1.0
        } else {
            0.0
        };
    }
    (mi - emi) / denominator
}

fn assignment_of(labels: &[usize]) -> ClusterAssignment {
    let items: Vec<String> = (0..labels.len()).map(|i| format!("i{i}")).collect();
    let k = labels.iter().max().unwrap() + 1;
    ClusterAssignment::new(items, labels.to_vec(), k, ClusterAlgorithm::Kmeans, 0, None).unwrap()
}

#[test]
fn criterion_07_ari_ami_oracle_equivalence_exhaustive() {
    let mut emi_cache = HashMap::new();
    let mut checked = 0usize;
    for n in 1..=6 {
        let parts = partitions(n);
        for pa in &parts {
            let a = assignment_of(pa);
            for pb in &parts {
                let b = assignment_of(pb);
                let ari_impl = ari(&a, &b).unwrap();
                let ari_ref = ari_pair_oracle(pa, pb);
                assert!(
                    (ari_impl - ari_ref).abs() <= 1e-9,
                    "ARI mismatch on {pa:?} vs {pb:?}: {ari_impl} vs {ari_ref}"
                );
                let ami_impl = ami(&a, &b).unwrap().value;
                let ami_ref = ami_oracle(pa, pb, &mut emi_cache);
                assert!(
                    (ami_impl - ami_ref).abs() <= 1e-9,
                    "AMI mismatch on {pa:?} vs {pb:?}: {ami_impl} vs {ami_ref}"
                );
                checked += 1;
            }
        }
    }
    pass(
        "C07",
        format!("{checked} partition pairs (n <= 6, exhaustive): ARI matches the pair-counting oracle and AMI the enumerated hypergeometric E[MI] oracle to 1e-9"),
    );
}

#[test]
fn criterion_08_pearson_against_covariance_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let n = rng.random_range(3..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let nf = n as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let num = sxy - sx * sy / nf;
        let den = ((sxx - sx * sx / nf) * (syy - sy * sy / nf)).sqrt();
        if den == 0.0 {
            continue;
        }
        let oracle = num / den;
        let got = pearson(&x, &y).unwrap().r;
        worst = worst.max((got - oracle).abs());
        assert!(
            (got - oracle).abs() <= 1e-12,
            "n={n}: r {got} vs oracle {oracle}"
        );
        checked += 1;
    }

    // Perfect correlation underflows the p-value toward zero.
    let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
    let perfect = pearson(&x, &y).unwrap();
    assert!(perfect.p <= 1e-300, "p for r = 1 is {}", perfect.p);

    // Exactly orthogonal vectors at n = 20: two-sided p = 1.
    let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| (v - 10.5) * (v - 10.5)).collect();
    let null = pearson(&x, &y).unwrap();
    assert!(null.r.abs() <= 1e-15);
    assert!((null.p - 1.0).abs() <= 1e-9, "p(n=20, r=0) = {}", null.p);

    pass(
        "C08",
        format!("1000 random vectors match the covariance oracle (worst |gap| {worst:.2e} <= 1e-12); p(r=1) underflows to {:.1e}; p(n=20, r=0) = {:.12}", perfect.p, null.p),
    );
}

#[test]
fn criterion_09_chi_squared_fixed_points() {
    let flat = chi2_2x2([[10, 10], [10, 10]], false).unwrap();
    assert_eq!(flat.statistic, 0.0);
    assert!((flat.p - 1.0).abs() <= 1e-12);
    let diagonal = chi2_2x2([[20, 0], [0, 20]], false).unwrap();
    assert!(
        (diagonal.statistic - 40.0).abs() <= 1e-9,
        "statistic {}",
        diagonal.statistic
    );
    pass(
        "C09",
        format!(
            "[[10,10],[10,10]] -> (statistic 0, p = 1); [[20,0],[0,20]] -> statistic {:.12} (no correction)",
            diagonal.statistic
        ),
    );
}

/// A backend that always favors the similar-side comparative token.
struct AlwaysSimilar;

impl ScoreBackend for AlwaysSimilar {
    fn version(&self) -> String {
        "always-similar/1".into()
    }
    fn proper(&self) -> bool {
        false
    }
    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        let c = &req.continuation;
        let similar = [" similar", " alike", " aligned"]
            .iter()
            .any(|t| c.starts_with(t));
        Ok(LogProbScore {
            logprob_sum: if similar { -1.0 } else { -6.0 },
            token_count: 1,
        })
    }
}

#[test]
fn criterion_10_method3_determinism_and_balance() {
    let survey = ingest_fixture(wvs_design());
    let engine = PromptEngine::default();
    let cfg = MethodConfig::new(42);

    // Fixed seed: byte-identical trial records across runs.
    let backend = MockBackend::new(1234);
    let a = run_method3(&survey, &engine, &backend, "mock-small", &cfg).unwrap();
    let b = run_method3(&survey, &engine, &backend, "mock-small", &cfg).unwrap();
    let bytes_a = serde_json::to_vec(&a.trials).unwrap();
    let bytes_b = serde_json::to_vec(&b.trials).unwrap();
    assert_eq!(bytes_a, bytes_b, "trial records must be byte-identical");

    // Class balance per topic before any skips.
    for topic in survey.topics() {
        let (mut intra, mut inter) = (0u64, 0u64);
        for trial in a.trials.iter().filter(|t| &t.topic == topic) {
            match trial.empirical_label {
                SimLabel::Similar => intra += 1,
                SimLabel::Different => inter += 1,
            }
        }
        assert_eq!(
            intra, inter,
            "topic {topic}: {intra} intra vs {inter} inter"
        );
    }

    // A backend that always answers "similar": recall 1, accuracy 1/2.
    let always = run_method3(&survey, &engine, &AlwaysSimilar, "any", &cfg).unwrap();
    assert_eq!(always.metrics.recall, 1.0);
    assert!(
        (always.metrics.accuracy - 0.5).abs() <= 0.02,
        "accuracy {}",
        always.metrics.accuracy
    );
    pass(
        "C10",
        format!(
            "{} trial records byte-identical across reruns; intra/inter balanced per topic; always-similar backend: recall {:.3}, accuracy {:.3}",
            a.trials.len(),
            always.metrics.recall,
            always.metrics.accuracy
        ),
    );
}

fn run_cli(dir: &Path, args: &[&str]) {
    let output = Command::new(env!("CARGO_BIN_EXE_moralign"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn moralign");
    assert!(
        output.status.success(),
        "moralign {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn bundle_files(root: &Path) -> Vec<String> {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn criterion_11_full_pipeline_mock_determinism() {
    let dir = tempfile::tempdir().unwrap();
    run_cli(
        dir.path(),
        &["synth", "--out", ".", "--seed", "7", "--survey", "wvs"],
    );
    for out in ["runA", "runB"] {
        for cmd in ["ingest", "probe", "analyze"] {
            run_cli(
                dir.path(),
                &[cmd, "--config", "moralign-wvs.toml", "--out", out],
            );
        }
    }
    let manifest_a = fs::read(dir.path().join("runA/manifest.json")).unwrap();
    let manifest_b = fs::read(dir.path().join("runB/manifest.json")).unwrap();
    assert_eq!(manifest_a, manifest_b, "manifests must be byte-identical");
    let files = bundle_files(&dir.path().join("runA"));
    assert!(!files.is_empty());
    for file in &files {
        let a = fs::read(dir.path().join("runA").join(file)).unwrap();
        let b = fs::read(dir.path().join("runB").join(file)).unwrap();
        assert_eq!(a, b, "bundle file {file} differs between runs");
    }
    pass(
        "C11",
        format!(
            "two complete mock pipeline runs produced byte-identical bundles ({} files + manifest)",
            files.len()
        ),
    );
}

#[test]
fn criterion_12_variance_divisor_lock() {
    let matrix = ingest_fixture(wvs_design());
    let targets = [
        ("Sex before marriage", 0.219),
        ("Homosexuality", 0.209),
        ("Euthanasia", 0.1264),
    ];
    let max_deviation = |divisor: VarianceDivisor| -> f64 {
        targets
            .iter()
            .map(|&(topic, target)| (variance_of(&matrix, topic, divisor) - target).abs())
            .fold(0.0, f64::max)
    };
    let population = max_deviation(VarianceDivisor::Population);
    let sample = max_deviation(VarianceDivisor::Sample);
    assert!(
        population <= 0.005 || sample <= 0.005,
        "neither divisor reproduces the reference variances within 0.005 (population {population:.4}, sample {sample:.4})"
    );
    let locked = if population <= sample {
        VarianceDivisor::Population
    } else {
        VarianceDivisor::Sample
    };
    assert_eq!(
        locked,
        VarianceDivisor::default(),
        "the locked divisor must be the shipped default"
    );
    pass(
        "C12",
        format!(
            "divisor lock selects {:?} (max deviation {population:.4} vs sample {sample:.4} on the three reference variances)",
            locked
        ),
    );
}
