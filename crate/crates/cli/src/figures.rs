//! Plot-data emission: histogram and per-topic spread series for the survey
//! score distributions, and the survey-vs-model variance scatter. Data
//! only — rendering is left to external tools.

use std::io::Write;

use moralign::matrix::MoralMatrix;
use moralign::methods::Method1Report;

use crate::CliError;

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("figure data: {e}"))
}

/// Bin counts of all present matrix cells over `[-1, 1]`.
pub fn write_score_histogram<W: Write>(
    matrix: &MoralMatrix,
    bins: usize,
    w: W,
) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["bin_low", "bin_high", "count"])
        .map_err(csv_err)?;
    let mut counts = vec![0u64; bins];
    let width = 2.0 / bins as f64;
    for (_, _, v) in matrix.cells() {
        if let Some(v) = v {
            let idx = (((v + 1.0) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
    }
    for (i, count) in counts.iter().enumerate() {
        let low = -1.0 + i as f64 * width;
        wtr.write_record([
            format!("{low:.4}"),
            format!("{:.4}", low + width),
            count.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)?;
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Five-number summary per topic: the spread of country scores.
pub fn write_topic_spread<W: Write>(matrix: &MoralMatrix, w: W) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["topic", "min", "q1", "median", "q3", "max"])
        .map_err(csv_err)?;
    for (ti, topic) in matrix.topics().iter().enumerate() {
        let mut values: Vec<f64> = matrix.column(ti).into_iter().flatten().collect();
        if values.is_empty() {
            continue;
        }
        values.sort_by(f64::total_cmp);
        wtr.write_record([
            topic.clone(),
            format!("{:.4}", values[0]),
            format!("{:.4}", quantile(&values, 0.25)),
            format!("{:.4}", quantile(&values, 0.5)),
            format!("{:.4}", quantile(&values, 0.75)),
            format!("{:.4}", values[values.len() - 1]),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)?;
    Ok(())
}

/// (topic, survey variance, model variance) triples for the variance
/// comparison scatter.
pub fn write_variance_scatter<W: Write>(report: &Method1Report, w: W) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["topic", "survey_variance", "model_variance"])
        .map_err(csv_err)?;
    let mut rows = report.per_topic.clone();
    rows.sort_by(|a, b| a.topic.cmp(&b.topic));
    for row in rows {
        wtr.write_record([
            row.topic.clone(),
            format!("{}", row.survey_variance),
            format!("{}", row.model_variance),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)?;
    Ok(())
}
