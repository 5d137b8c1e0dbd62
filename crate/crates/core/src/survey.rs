//! Survey ingestion: parse raw WVS and PEW exports, clean non-responses,
//! aggregate per country, and normalize into a [`MoralMatrix`] on `[-1, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::matrix::MoralMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveySource {
    Wvs,
    Pew,
}

impl SurveySource {
    pub fn name(self) -> &'static str {
        match self {
            SurveySource::Wvs => "WVS",
            SurveySource::Pew => "PEW",
        }
    }
}

/// One respondent's answer to one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseRow {
    pub country_code: String,
    pub question_id: String,
    pub answer: i64,
    /// 1-based line in the source file, for diagnostics.
    pub line: u64,
}

/// Long-form response table, one row per (respondent, question).
#[derive(Debug, Clone, PartialEq)]
pub struct RawResponseTable {
    pub source: SurveySource,
    pub rows: Vec<ResponseRow>,
}

/// WVS non-response codes: 'Don't know' (-1), 'No answer' (-2),
/// 'Not asked in survey' (-4), 'Missing; Not available' (-5).
pub const WVS_NONRESPONSE_CODES: [i64; 4] = [-1, -2, -4, -5];

/// Whether an answer is in the documented WVS code set.
pub fn wvs_answer_valid(answer: i64) -> bool {
    WVS_NONRESPONSE_CODES.contains(&answer) || (1..=10).contains(&answer)
}

/// How WVS non-responses enter country means. The default replaces them
/// with zero; the alternate mode excludes them entirely and exists for
/// sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WvsNonresponseMode {
    #[default]
    ZeroReplace,
    Exclude,
}

/// Mapping from numeric country code to canonical display name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryMap {
    entries: BTreeMap<String, String>,
}

impl CountryMap {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self, IngestError> {
        let mut entries = BTreeMap::new();
        for (code, name) in pairs {
            if name.is_empty() {
                return Err(IngestError::BadCountryMap(format!(
                    "empty name for code {code:?}"
                )));
            }
            if entries.insert(code.clone(), name).is_some() {
                return Err(IngestError::BadCountryMap(format!(
                    "duplicate code {code:?}"
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Reads a two-column `code,name` file with a header row.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut pairs = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() < 2 {
                return Err(IngestError::BadCountryMap(
                    "expected two columns: code,name".into(),
                ));
            }
            pairs.push((record[0].to_string(), record[1].to_string()));
        }
        Self::new(pairs)
    }

    pub fn resolve(&self, code: &str) -> Option<&str> {
        self.entries.get(code).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(c, n)| (c.as_str(), n.as_str()))
    }
}

/// Coded PEW option sets: the three substantive options plus the
/// non-response codes that are excluded from cell means (0 is a substantive
/// PEW answer, so non-responses are never zeroed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PewCodes {
    pub acceptable: Vec<i64>,
    pub unacceptable: Vec<i64>,
    pub not_a_moral_issue: Vec<i64>,
    pub nonresponse: Vec<i64>,
}

impl Default for PewCodes {
    fn default() -> Self {
        Self {
            acceptable: vec![1],
            unacceptable: vec![2],
            not_a_moral_issue: vec![3],
            nonresponse: vec![8, 9],
        }
    }
}

impl PewCodes {
    pub fn known(&self, answer: i64) -> bool {
        self.acceptable.contains(&answer)
            || self.unacceptable.contains(&answer)
            || self.not_a_moral_issue.contains(&answer)
            || self.nonresponse.contains(&answer)
    }
}

/// Parses a wide survey export (one respondent per row, one column per
/// question) into the long-form response table, validating every answer
/// against the source's documented code set.
pub fn parse_wide_csv<R: Read>(
    r: R,
    source: SurveySource,
    country_column: &str,
    question_columns: &[String],
    pew_codes: Option<&PewCodes>,
) -> Result<RawResponseTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let col_index = |name: &str| -> Result<usize, IngestError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let country_idx = col_index(country_column)?;
    let question_idx: Vec<(usize, &String)> = question_columns
        .iter()
        .map(|q| col_index(q).map(|i| (i, q)))
        .collect::<Result<_, _>>()?;

    let default_codes = PewCodes::default();
    let codes = pew_codes.unwrap_or(&default_codes);

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let country_code = record.get(country_idx).unwrap_or("").trim().to_string();
        if country_code.is_empty() {
            return Err(IngestError::EmptyField {
                line,
                field: "country code",
            });
        }
        for &(idx, question) in &question_idx {
            let raw = record.get(idx).unwrap_or("").trim();
            if raw.is_empty() {
                return Err(IngestError::EmptyField {
                    line,
                    field: "answer",
                });
            }
            let answer: i64 = raw.parse().map_err(|_| IngestError::InvalidAnswer {
                line,
                question: question.clone(),
                answer: i64::MIN,
                survey: source.name(),
            })?;
            let valid = match source {
                SurveySource::Wvs => wvs_answer_valid(answer),
                SurveySource::Pew => codes.known(answer),
            };
            if !valid {
                return Err(IngestError::InvalidAnswer {
                    line,
                    question: question.clone(),
                    answer,
                    survey: source.name(),
                });
            }
            rows.push(ResponseRow {
                country_code: country_code.clone(),
                question_id: question.clone(),
                answer,
                line,
            });
        }
    }
    Ok(RawResponseTable { source, rows })
}

/// Replaces every WVS non-response code with zero, leaving substantive
/// answers and the row count unchanged. Returns the replacement count.
pub fn clean_nonresponses(
    mut table: RawResponseTable,
) -> Result<(RawResponseTable, u64), IngestError> {
    if table.source != SurveySource::Wvs {
        return Err(IngestError::WrongSource {
            expected: "WVS",
            got: table.source.name(),
        });
    }
    let mut replaced = 0;
    for row in &mut table.rows {
        if !wvs_answer_valid(row.answer) {
            return Err(IngestError::InvalidAnswer {
                line: row.line,
                question: row.question_id.clone(),
                answer: row.answer,
                survey: "WVS",
            });
        }
        if WVS_NONRESPONSE_CODES.contains(&row.answer) {
            row.answer = 0;
            replaced += 1;
        }
    }
    Ok((table, replaced))
}

/// Drops WVS non-response rows entirely (the sensitivity-analysis mode).
/// Returns the number of rows excluded.
pub fn drop_nonresponses(
    mut table: RawResponseTable,
) -> Result<(RawResponseTable, u64), IngestError> {
    if table.source != SurveySource::Wvs {
        return Err(IngestError::WrongSource {
            expected: "WVS",
            got: table.source.name(),
        });
    }
    for row in &table.rows {
        if !wvs_answer_valid(row.answer) {
            return Err(IngestError::InvalidAnswer {
                line: row.line,
                question: row.question_id.clone(),
                answer: row.answer,
                survey: "WVS",
            });
        }
    }
    let before = table.rows.len();
    table
        .rows
        .retain(|r| !WVS_NONRESPONSE_CODES.contains(&r.answer));
    let excluded = (before - table.rows.len()) as u64;
    Ok((table, excluded))
}

/// Running sum and count for one (country, question) cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellAggregate {
    pub sum: f64,
    pub count: u64,
}

impl CellAggregate {
    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Per-cell aggregates keyed by (country display name, question id).
/// Cells with zero contributing rows are simply absent — missing, not zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregates {
    pub cells: BTreeMap<(String, String), CellAggregate>,
}

/// Arithmetic mean of raw answers per (country, question), resolving
/// country codes through the map.
pub fn aggregate_by_country(
    table: &RawResponseTable,
    map: &CountryMap,
) -> Result<Aggregates, IngestError> {
    let mut cells: BTreeMap<(String, String), CellAggregate> = BTreeMap::new();
    for row in &table.rows {
        let name = map
            .resolve(&row.country_code)
            .ok_or_else(|| IngestError::UnknownCountry {
                code: row.country_code.clone(),
                line: row.line,
            })?;
        let cell = cells
            .entry((name.to_string(), row.question_id.clone()))
            .or_default();
        cell.sum += row.answer as f64;
        cell.count += 1;
    }
    Ok(Aggregates { cells })
}

/// The unclamped affine map from the WVS 1–10 answer scale onto `[-1, 1]`:
/// 1 maps to -1, 5.5 to 0, 10 to +1.
pub fn wvs_affine(mean: f64) -> f64 {
    (mean - 5.5) / 4.5
}

/// Rounds to four decimal places, half away from zero.
pub fn round4(v: f64) -> f64 {
    (v * 10_000.0).round() / 10_000.0
}

/// A normalized WVS cell score with its clamp flag. Zero-replacement pulls
/// some country means below the documented 1–10 range, so values are
/// clamped into `[-1, 1]` and the clamp is surfaced as a warning count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub value: f64,
    pub clamped: bool,
}

/// Normalizes a WVS country mean onto `[-1, 1]`, rounded to four decimals.
pub fn normalize_wvs(mean: f64) -> Result<Normalized, IngestError> {
    if !mean.is_finite() {
        return Err(IngestError::NonFinite);
    }
    let raw = wvs_affine(mean);
    let clamped = !(-1.0..=1.0).contains(&raw);
    Ok(Normalized {
        value: round4(raw.clamp(-1.0, 1.0)),
        clamped,
    })
}

/// Maps one coded PEW answer to its score: acceptable is +1, not a moral
/// issue is 0, unacceptable is -1. Non-responses return `None` and are
/// excluded from cell means.
pub fn normalize_pew(answer: i64, codes: &PewCodes) -> Result<Option<f64>, IngestError> {
    if codes.acceptable.contains(&answer) {
        Ok(Some(1.0))
    } else if codes.not_a_moral_issue.contains(&answer) {
        Ok(Some(0.0))
    } else if codes.unacceptable.contains(&answer) {
        Ok(Some(-1.0))
    } else if codes.nonresponse.contains(&answer) {
        Ok(None)
    } else {
        Err(IngestError::InvalidAnswer {
            line: 0,
            question: String::new(),
            answer,
            survey: "PEW",
        })
    }
}

/// One assembled matrix cell prior to layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValue {
    pub value: f64,
    pub rows: u64,
    pub clamped: bool,
}

/// Sidecar metadata produced alongside every ingested matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source: String,
    pub nonresponse_mode: String,
    pub countries: usize,
    pub topics: usize,
    pub total_rows: u64,
    pub replaced_nonresponses: u64,
    pub excluded_nonresponses: u64,
    pub clamped_cells: u64,
    pub dropped_topics: Vec<String>,
    pub missing_cells: Vec<(String, String)>,
    pub country_rows: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

/// An ingested matrix plus its run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub matrix: MoralMatrix,
    pub report: IngestReport,
}

/// A freshly assembled matrix with its layout diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltMatrix {
    pub matrix: MoralMatrix,
    pub dropped_topics: Vec<String>,
    pub missing_cells: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Assembles normalized cells into a matrix with stable lexicographic
/// country and topic ordering. Topics present for fewer than two countries
/// are dropped with a warning (their cross-country variance is undefined);
/// cells with no data are flagged missing, never zeroed.
pub fn build_matrix(
    source_tag: &str,
    cells: &BTreeMap<(String, String), CellValue>,
) -> Result<BuiltMatrix, IngestError> {
    if cells.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut countries: BTreeSet<&str> = BTreeSet::new();
    let mut topic_countries: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (country, topic) in cells.keys() {
        countries.insert(country);
        topic_countries.entry(topic).or_default().insert(country);
    }
    let mut warnings = Vec::new();
    let mut dropped = Vec::new();
    let mut topics = Vec::new();
    for (topic, present_in) in &topic_countries {
        if present_in.len() < 2 {
            warnings.push(format!(
                "topic {topic:?} present for {} country; dropped (variance undefined)",
                present_in.len()
            ));
            dropped.push(topic.to_string());
        } else {
            topics.push(topic.to_string());
        }
    }
    if topics.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let countries: Vec<String> = countries.into_iter().map(str::to_string).collect();
    let mut scores = Vec::with_capacity(countries.len() * topics.len());
    let mut missing = Vec::new();
    for country in &countries {
        for topic in &topics {
            match cells.get(&(country.clone(), topic.clone())) {
                Some(cell) => scores.push(Some(cell.value)),
                None => {
                    missing.push((country.clone(), topic.clone()));
                    scores.push(None);
                }
            }
        }
    }
    let matrix = MoralMatrix::new(source_tag, countries, topics, scores)?;
    Ok(BuiltMatrix {
        matrix,
        dropped_topics: dropped,
        missing_cells: missing,
        warnings,
    })
}

/// Full WVS pipeline: clean non-responses, aggregate raw answers per
/// country, normalize the means onto `[-1, 1]`, and assemble the matrix.
/// `topics` maps question ids to topic display labels.
pub fn ingest_wvs(
    table: RawResponseTable,
    map: &CountryMap,
    topics: &BTreeMap<String, String>,
    mode: WvsNonresponseMode,
) -> Result<IngestOutcome, IngestError> {
    let total_rows = table.rows.len() as u64;
    let (table, replaced, excluded) = match mode {
        WvsNonresponseMode::ZeroReplace => {
            let (t, replaced) = clean_nonresponses(table)?;
            (t, replaced, 0)
        }
        WvsNonresponseMode::Exclude => {
            let (t, excluded) = drop_nonresponses(table)?;
            (t, 0, excluded)
        }
    };
    let aggregates = aggregate_by_country(&table, map)?;
    let mut cells = BTreeMap::new();
    let mut clamped_cells = 0;
    for ((country, question), agg) in &aggregates.cells {
        let Some(topic) = topics.get(question) else {
            continue;
        };
        let normalized = normalize_wvs(agg.mean())?;
        if normalized.clamped {
            clamped_cells += 1;
        }
        cells.insert(
            (country.clone(), topic.clone()),
            CellValue {
                value: normalized.value,
                rows: agg.count,
                clamped: normalized.clamped,
            },
        );
    }
    let source_tag = SurveySource::Wvs.name();
    let built = build_matrix(source_tag, &cells)?;
    let mut warnings = built.warnings;
    if clamped_cells > 0 {
        warnings.push(format!(
            "{clamped_cells} cell mean(s) fell outside the 1-10 scale after zero-replacement and were clamped"
        ));
    }
    let report = IngestReport {
        source: source_tag.to_string(),
        nonresponse_mode: match mode {
            WvsNonresponseMode::ZeroReplace => "zero_replace".into(),
            WvsNonresponseMode::Exclude => "exclude".into(),
        },
        countries: built.matrix.countries().len(),
        topics: built.matrix.topics().len(),
        total_rows,
        replaced_nonresponses: replaced,
        excluded_nonresponses: excluded,
        clamped_cells,
        dropped_topics: built.dropped_topics,
        missing_cells: built.missing_cells,
        country_rows: country_row_counts(&cells),
        warnings,
    };
    Ok(IngestOutcome {
        matrix: built.matrix,
        report,
    })
}

/// Full PEW pipeline: map each coded answer to its score (excluding
/// non-responses), average per (country, topic), round to four decimals,
/// and assemble the matrix.
pub fn ingest_pew(
    table: RawResponseTable,
    map: &CountryMap,
    topics: &BTreeMap<String, String>,
    codes: &PewCodes,
) -> Result<IngestOutcome, IngestError> {
    if table.source != SurveySource::Pew {
        return Err(IngestError::WrongSource {
            expected: "PEW",
            got: table.source.name(),
        });
    }
    let total_rows = table.rows.len() as u64;
    let mut aggregates: BTreeMap<(String, String), CellAggregate> = BTreeMap::new();
    let mut excluded = 0u64;
    for row in &table.rows {
        let name = map
            .resolve(&row.country_code)
            .ok_or_else(|| IngestError::UnknownCountry {
                code: row.country_code.clone(),
                line: row.line,
            })?;
        let value = normalize_pew(row.answer, codes).map_err(|_| IngestError::InvalidAnswer {
            line: row.line,
            question: row.question_id.clone(),
            answer: row.answer,
            survey: "PEW",
        })?;
        match value {
            Some(v) => {
                let cell = aggregates
                    .entry((name.to_string(), row.question_id.clone()))
                    .or_default();
                cell.sum += v;
                cell.count += 1;
            }
            None => excluded += 1,
        }
    }
    let mut cells = BTreeMap::new();
    for ((country, question), agg) in &aggregates {
        let Some(topic) = topics.get(question) else {
            continue;
        };
        cells.insert(
            (country.clone(), topic.clone()),
            CellValue {
                value: round4(agg.mean()),
                rows: agg.count,
                clamped: false,
            },
        );
    }
    let source_tag = SurveySource::Pew.name();
    let built = build_matrix(source_tag, &cells)?;
    let report = IngestReport {
        source: source_tag.to_string(),
        nonresponse_mode: "exclude".into(),
        countries: built.matrix.countries().len(),
        topics: built.matrix.topics().len(),
        total_rows,
        replaced_nonresponses: 0,
        excluded_nonresponses: excluded,
        clamped_cells: 0,
        dropped_topics: built.dropped_topics,
        missing_cells: built.missing_cells,
        country_rows: country_row_counts(&cells),
        warnings: built.warnings,
    };
    Ok(IngestOutcome {
        matrix: built.matrix,
        report,
    })
}

fn country_row_counts(cells: &BTreeMap<(String, String), CellValue>) -> BTreeMap<String, u64> {
    let mut out: BTreeMap<String, u64> = BTreeMap::new();
    for ((country, _), cell) in cells {
        *out.entry(country.clone()).or_default() += cell.rows;
    }
    out
}
