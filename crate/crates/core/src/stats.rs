//! Scalar statistics shared by all three comparison methods: variance
//! profiles, Pearson correlation with significance, confusion-matrix
//! metrics, and the 2×2 chi-squared association test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::StatsError;
use crate::matrix::MoralMatrix;

/// Which denominator to use for cross-country variance.
///
/// The default is the population (n) divisor; the divisor actually locked in
/// for a run is the one that reproduces the reference per-topic values (see
/// the acceptance suite) and is recorded in run metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceDivisor {
    #[default]
    Population,
    Sample,
}

impl VarianceDivisor {
    fn denominator(self, n: usize) -> f64 {
        match self {
            VarianceDivisor::Population => n as f64,
            VarianceDivisor::Sample => (n - 1) as f64,
        }
    }
}

/// Cross-country variance of one topic's scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVarianceProfile {
    pub topic: String,
    pub variance: f64,
    pub mean: f64,
    pub n_countries: usize,
}

/// Pearson correlation with its two-sided significance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// 2×2 confusion tally for a binary labeling task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub positive_class: String,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Derived confusion-matrix metrics. Division-by-zero cases yield 0 and set
/// the corresponding degenerate flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_degenerate: bool,
    pub recall_degenerate: bool,
}

/// Chi-squared test of association on a 2×2 table (df = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub p: f64,
    pub df: u32,
    pub correction_applied: bool,
}

/// Population or sample variance of one topic column across countries.
pub fn topic_variance(
    topic: &str,
    column: &[f64],
    divisor: VarianceDivisor,
) -> Result<TopicVarianceProfile, StatsError> {
    if column.len() < 2 {
        return Err(StatsError::TooFew {
            need: 2,
            got: column.len(),
        });
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = column.len();
    let mean = column.iter().sum::<f64>() / n as f64;
    let ss: f64 = column.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(TopicVarianceProfile {
        topic: topic.to_string(),
        variance: ss / divisor.denominator(n),
        mean,
        n_countries: n,
    })
}

/// Variance profile of every topic in the matrix, skipping missing cells.
pub fn topic_profiles(
    matrix: &MoralMatrix,
    divisor: VarianceDivisor,
) -> Result<Vec<TopicVarianceProfile>, StatsError> {
    matrix
        .topics()
        .iter()
        .enumerate()
        .map(|(ti, topic)| {
            let column: Vec<f64> = matrix.column(ti).into_iter().flatten().collect();
            topic_variance(topic, &column, divisor)
        })
        .collect()
}

/// Grand mean over all present cells plus the mean of per-topic variances.
pub fn mean_profile(
    matrix: &MoralMatrix,
    divisor: VarianceDivisor,
) -> Result<(f64, f64), StatsError> {
    let present: Vec<f64> = matrix.cells().filter_map(|(_, _, s)| s).collect();
    if present.is_empty() {
        return Err(StatsError::EmptyTable);
    }
    let mean_score = present.iter().sum::<f64>() / present.len() as f64;
    let profiles = topic_profiles(matrix, divisor)?;
    let mean_variance = profiles.iter().map(|p| p.variance).sum::<f64>() / profiles.len() as f64;
    Ok((mean_score, mean_variance))
}

/// Sample Pearson correlation with a two-sided p-value from the Student-t
/// distribution with n − 2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let one_minus_r2 = (1.0 - r * r).max(0.0);
    let p = if one_minus_r2 < f64::EPSILON {
        0.0
    } else {
        let t = r.abs() * (df / one_minus_r2).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
        (2.0 * dist.sf(t)).min(1.0)
    };
    Ok(CorrelationResult { r, p, n })
}

/// Accuracy, precision, recall, and F1 from confusion counts.
pub fn confusion_metrics(c: &ConfusionCounts) -> Result<ConfusionMetrics, StatsError> {
    let total = c.total();
    if total == 0 {
        return Err(StatsError::EmptyTable);
    }
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    let precision_degenerate = c.tp + c.fp == 0;
    let precision = if precision_degenerate {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let recall_degenerate = c.tp + c.fn_ == 0;
    let recall = if recall_degenerate {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ConfusionMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_degenerate,
        recall_degenerate,
    })
}

/// Chi-squared test of association on a 2×2 contingency table.
///
/// The continuity correction is off by default and can be toggled; with it
/// on, each cell contributes `(max(|O−E|−0.5, 0))²/E` (Yates).
pub fn chi2_2x2(table: [[u64; 2]; 2], correction: bool) -> Result<Chi2Result, StatsError> {
    let row: [u64; 2] = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col: [u64; 2] = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let n = row[0] + row[1];
    if n == 0 {
        return Err(StatsError::EmptyTable);
    }
    if row.contains(&0) {
        return Err(StatsError::ZeroMarginal("row"));
    }
    if col.contains(&0) {
        return Err(StatsError::ZeroMarginal("column"));
    }
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row[i] as f64 * col[j] as f64 / n as f64;
            let mut dev = (table[i][j] as f64 - expected).abs();
            if correction {
                dev = (dev - 0.5).max(0.0);
            }
            statistic += dev * dev / expected;
        }
    }
    let dist = ChiSquared::new(1.0).expect("df = 1");
    Ok(Chi2Result {
        statistic,
        p: dist.sf(statistic),
        df: 1,
        correction_applied: correction,
    })
}

/// Ranking direction for [`rank_topics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    MostControversial,
    MostAgreed,
}

/// Top-k topics by variance, descending for controversial and ascending for
/// agreed. Ties break lexicographically by topic name.
pub fn rank_topics(
    profiles: &[TopicVarianceProfile],
    k: usize,
    direction: RankDirection,
) -> Result<Vec<String>, StatsError> {
    if k > profiles.len() {
        return Err(StatsError::RankDepth {
            k,
            n: profiles.len(),
        });
    }
    let mut order: Vec<&TopicVarianceProfile> = profiles.iter().collect();
    order.sort_by(|a, b| {
        let by_var = match direction {
            RankDirection::MostControversial => b.variance.total_cmp(&a.variance),
            RankDirection::MostAgreed => a.variance.total_cmp(&b.variance),
        };
        by_var.then_with(|| a.topic.cmp(&b.topic))
    });
    Ok(order.into_iter().take(k).map(|p| p.topic.clone()).collect())
}
