//! `moralign report`: verify the bundle manifest and render one
//! human-readable summary of all tables. Machine files are never touched;
//! regenerating the summary from the same bundle is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use moralign::methods::{Method1Report, Method2Report, Method3Report};
use moralign::survey::IngestReport;

use crate::manifest;
use crate::outdir::OutDir;
use crate::CliError;

/// Three decimals, rounded half away from zero on the decimal value.
fn fmt3(v: f64) -> String {
    format!("{:.3}", (v * 1000.0).round() / 1000.0)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

pub fn run(out_dir: &Path) -> Result<(), CliError> {
    let out = OutDir::open_readonly(out_dir)?;
    let manifest = manifest::read(&out.manifest_file())?;
    manifest::verify(&manifest, out.root())?;

    let mut method1: Vec<Method1Report> = Vec::new();
    let mut method2: Vec<Method2Report> = Vec::new();
    let mut method3: Vec<Method3Report> = Vec::new();
    let mut ingests: Vec<(String, IngestReport)> = Vec::new();
    for entry in &manifest.files {
        let path = out.root().join(&entry.path);
        let name = entry.path.rsplit('/').next().unwrap_or("");
        if entry.path.starts_with("reports/method1_") {
            method1.push(read_json(&path)?);
        } else if entry.path.starts_with("reports/method2_") {
            method2.push(read_json(&path)?);
        } else if entry.path.starts_with("reports/method3_") {
            method3.push(read_json(&path)?);
        } else if entry.path.starts_with("matrices/") && name.ends_with(".meta.json") {
            ingests.push((name.to_string(), read_json(&path)?));
        }
    }
    if method1.is_empty() && method2.is_empty() && method3.is_empty() {
        return Err(CliError::Validation(
            "bundle has no method reports; run `moralign analyze` first".into(),
        ));
    }

    let mut md = String::new();
    let _ = writeln!(md, "# Run summary\n");
    let _ = writeln!(
        md,
        "Every number below is read from a manifested machine file; see `manifest.json` for digests.\n"
    );

    for (name, report) in &ingests {
        let _ = writeln!(md, "## Survey ingestion ({name})\n");
        let _ = writeln!(
            md,
            "- source: {} ({} countries x {} topics, {} response rows)",
            report.source, report.countries, report.topics, report.total_rows
        );
        let _ = writeln!(
            md,
            "- non-response handling: {} (replaced {}, excluded {})",
            report.nonresponse_mode, report.replaced_nonresponses, report.excluded_nonresponses
        );
        let _ = writeln!(md, "- clamped cells: {}", report.clamped_cells);
        if !report.dropped_topics.is_empty() {
            let _ = writeln!(md, "- dropped topics: {}", report.dropped_topics.join(", "));
        }
        let _ = writeln!(md);
    }

    for report in &method1 {
        let _ = writeln!(
            md,
            "## Method 1 — variance comparison ({} vs {})\n",
            report.model_id, report.survey_id
        );
        let _ = writeln!(
            md,
            "Pearson r = {} (p = {}, n = {} topics, {} countries, divisor {:?})\n",
            fmt3(report.r),
            fmt3(report.p),
            report.n_topics,
            report.n_countries,
            report.divisor
        );
        let _ = writeln!(md, "| Source | Mean moral score | Mean variance |");
        let _ = writeln!(md, "|---|---|---|");
        let _ = writeln!(
            md,
            "| {} | {} | {} |",
            report.survey_id,
            fmt3(report.survey_mean_score),
            fmt3(report.survey_mean_variance)
        );
        let _ = writeln!(
            md,
            "| {} | {} | {} |\n",
            report.model_id,
            fmt3(report.model_mean_score),
            fmt3(report.model_mean_variance)
        );
        let _ = writeln!(
            md,
            "Most controversial ({}): {}",
            report.survey_id,
            report.survey_controversial.join("; ")
        );
        let _ = writeln!(
            md,
            "Most agreed ({}): {}",
            report.survey_id,
            report.survey_agreed.join("; ")
        );
        let _ = writeln!(
            md,
            "Most controversial ({}): {}",
            report.model_id,
            report.model_controversial.join("; ")
        );
        let _ = writeln!(
            md,
            "Most agreed ({}): {}\n",
            report.model_id,
            report.model_agreed.join("; ")
        );
        let _ = writeln!(
            md,
            "| Topic | {} variance | {} mean | {} variance | {} mean | Variance difference |",
            report.survey_id, report.survey_id, report.model_id, report.model_id
        );
        let _ = writeln!(md, "|---|---|---|---|---|---|");
        for row in &report.per_topic {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} |",
                row.topic,
                fmt3(row.survey_variance),
                fmt3(row.survey_mean),
                fmt3(row.model_variance),
                fmt3(row.model_mean),
                fmt3(row.variance_difference)
            );
        }
        let _ = writeln!(md);
    }

    if !method2.is_empty() {
        let first = &method2[0];
        let _ = writeln!(
            md,
            "## Method 2 — cluster alignment ({} vs {})\n",
            first.model_id, first.survey_id
        );
        let _ = writeln!(md, "| Subset | Topics | K | Silhouette | ARI | AMI | CAS |");
        let _ = writeln!(md, "|---|---|---|---|---|---|---|");
        for report in &method2 {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                report.subset.name(),
                report.topics.len(),
                report.k_used,
                fmt3(report.silhouette),
                fmt3(report.ari),
                fmt3(report.ami),
                fmt3(report.cas)
            );
        }
        let _ = writeln!(md);
        if method2.iter().any(|r| r.k_range_clamped) {
            let _ = writeln!(
                md,
                "Silhouette K selection is undefined at K = 1; the requested range was narrowed to [2, min(10, n-1)].\n"
            );
        }
    }

    for report in &method3 {
        let _ = writeln!(
            md,
            "## Method 3 — direct comparative probing ({} vs {})\n",
            report.model_id, report.survey_id
        );
        let c = &report.confusion;
        let _ = writeln!(
            md,
            "Positive class {} | {} trials/topic | tp {} fp {} fn {} tn {} | ties flagged {}\n",
            report.positive_class,
            report.trials_per_topic,
            c.tp,
            c.fp,
            c.fn_,
            c.tn,
            report.ties_flagged
        );
        let m = &report.metrics;
        let _ = writeln!(md, "| Accuracy | Precision | Recall | F1 |");
        let _ = writeln!(md, "|---|---|---|---|");
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} |\n",
            fmt3(m.accuracy),
            fmt3(m.precision),
            fmt3(m.recall),
            fmt3(m.f1)
        );
        match (&report.chi2, &report.chi2_note) {
            (Some(chi2), _) => {
                let _ = writeln!(
                    md,
                    "Chi-squared (df = {}): statistic {} , p = {}\n",
                    chi2.df,
                    fmt3(chi2.statistic),
                    fmt3(chi2.p)
                );
            }
            (None, Some(note)) => {
                let _ = writeln!(md, "Chi-squared: not available — {note}\n");
            }
            (None, None) => {}
        }
        if !report.skipped_topics.is_empty() {
            let _ = writeln!(md, "Skipped topics:");
            for skipped in &report.skipped_topics {
                let _ = writeln!(md, "- {}: {}", skipped.topic, skipped.reason);
            }
            let _ = writeln!(md);
        }
    }

    std::fs::write(out.summary_file(), md).map_err(|e| {
        CliError::Validation(format!(
            "cannot write {}: {e}",
            out.summary_file().display()
        ))
    })?;
    log::info!("summary written to {}", out.summary_file().display());
    Ok(())
}
