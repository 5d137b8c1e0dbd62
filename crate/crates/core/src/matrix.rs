//! The country × topic moral score matrix and its canonical file format.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::MatrixError;

/// Rectangular table of moral scores. Rows are countries, columns are topics.
///
/// Survey-derived matrices hold values in `[-1, 1]` rounded to four decimals;
/// model-derived matrices hold raw log-probability differences on an
/// unbounded scale (the relaxation is recorded in the sidecar metadata, not
/// here). Missing cells are `None` and are flagged rather than zeroed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoralMatrix {
    countries: Vec<String>,
    topics: Vec<String>,
    /// Row-major: `scores[country_idx * topics.len() + topic_idx]`.
    scores: Vec<Option<f64>>,
    source_tag: String,
}

impl MoralMatrix {
    /// Assembles a matrix, validating labels and dimensions.
    pub fn new(
        source_tag: impl Into<String>,
        countries: Vec<String>,
        topics: Vec<String>,
        scores: Vec<Option<f64>>,
    ) -> Result<Self, MatrixError> {
        if countries.is_empty() {
            return Err(MatrixError::Empty("countries"));
        }
        if topics.is_empty() {
            return Err(MatrixError::Empty("topics"));
        }
        check_labels("country", &countries)?;
        check_labels("topic", &topics)?;
        let expected = countries.len() * topics.len();
        if scores.len() != expected {
            return Err(MatrixError::DimensionMismatch {
                got: scores.len(),
                expected,
            });
        }
        Ok(Self {
            countries,
            topics,
            scores,
            source_tag: source_tag.into(),
        })
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn get(&self, country_idx: usize, topic_idx: usize) -> Option<f64> {
        self.scores[country_idx * self.topics.len() + topic_idx]
    }

    pub fn get_by_label(&self, country: &str, topic: &str) -> Result<Option<f64>, MatrixError> {
        let ci = self.country_index(country)?;
        let ti = self.topic_index(topic)?;
        Ok(self.get(ci, ti))
    }

    pub fn country_index(&self, country: &str) -> Result<usize, MatrixError> {
        self.countries
            .iter()
            .position(|c| c == country)
            .ok_or_else(|| MatrixError::UnknownLabel {
                kind: "country",
                label: country.to_string(),
            })
    }

    pub fn topic_index(&self, topic: &str) -> Result<usize, MatrixError> {
        self.topics
            .iter()
            .position(|t| t == topic)
            .ok_or_else(|| MatrixError::UnknownLabel {
                kind: "topic",
                label: topic.to_string(),
            })
    }

    /// One topic's scores across all countries, in row order.
    pub fn column(&self, topic_idx: usize) -> Vec<Option<f64>> {
        (0..self.countries.len())
            .map(|ci| self.get(ci, topic_idx))
            .collect()
    }

    /// One country's scores across all topics.
    pub fn row(&self, country_idx: usize) -> Vec<Option<f64>> {
        (0..self.topics.len())
            .map(|ti| self.get(country_idx, ti))
            .collect()
    }

    /// Iterates `(country, topic, score)` over all cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, Option<f64>)> + '_ {
        let width = self.topics.len();
        self.scores.iter().enumerate().map(move |(i, s)| {
            (
                self.countries[i / width].as_str(),
                self.topics[i % width].as_str(),
                *s,
            )
        })
    }

    pub fn missing_count(&self) -> usize {
        self.scores.iter().filter(|s| s.is_none()).count()
    }

    /// Projects the matrix onto the given label subsets, preserving the order
    /// in which they are passed.
    pub fn restrict(&self, countries: &[String], topics: &[String]) -> Result<Self, MatrixError> {
        let country_idx: Vec<usize> = countries
            .iter()
            .map(|c| self.country_index(c))
            .collect::<Result<_, _>>()?;
        let topic_idx: Vec<usize> = topics
            .iter()
            .map(|t| self.topic_index(t))
            .collect::<Result<_, _>>()?;
        let mut scores = Vec::with_capacity(country_idx.len() * topic_idx.len());
        for &ci in &country_idx {
            for &ti in &topic_idx {
                scores.push(self.get(ci, ti));
            }
        }
        Self::new(
            self.source_tag.clone(),
            countries.to_vec(),
            topics.to_vec(),
            scores,
        )
    }

    /// Sorted intersections of country and topic labels of two matrices.
    pub fn common_labels(a: &Self, b: &Self) -> (Vec<String>, Vec<String>) {
        let countries = sorted_intersection(&a.countries, &b.countries);
        let topics = sorted_intersection(&a.topics, &b.topics);
        (countries, topics)
    }

    /// Writes the canonical matrix file: header `country,<topic1>,...`, one
    /// row per country. `decimals` fixes the cell precision (survey matrices
    /// use 4); `None` writes full shortest-round-trip precision (model
    /// matrices). Missing cells are empty fields.
    pub fn write_csv<W: Write>(&self, w: W, decimals: Option<usize>) -> Result<(), MatrixError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["country".to_string()];
        header.extend(self.topics.iter().cloned());
        wtr.write_record(&header)?;
        for (ci, country) in self.countries.iter().enumerate() {
            let mut record = vec![country.clone()];
            for ti in 0..self.topics.len() {
                record.push(match self.get(ci, ti) {
                    Some(v) => match decimals {
                        Some(d) => format!("{v:.d$}"),
                        None => format!("{v}"),
                    },
                    None => String::new(),
                });
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a canonical matrix file written by [`MoralMatrix::write_csv`].
    pub fn read_csv<R: Read>(r: R, source_tag: impl Into<String>) -> Result<Self, MatrixError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.is_empty() || &header[0] != "country" {
            return Err(MatrixError::Malformed(
                "first header column must be `country`".into(),
            ));
        }
        let topics: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut countries = Vec::new();
        let mut scores = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != topics.len() + 1 {
                return Err(MatrixError::Malformed(format!(
                    "row for {:?} has {} fields, expected {}",
                    record.get(0).unwrap_or(""),
                    record.len(),
                    topics.len() + 1
                )));
            }
            countries.push(record[0].to_string());
            for field in record.iter().skip(1) {
                if field.is_empty() {
                    scores.push(None);
                } else {
                    let v: f64 = field
                        .parse()
                        .map_err(|e| MatrixError::Malformed(format!("bad cell {field:?}: {e}")))?;
                    scores.push(Some(v));
                }
            }
        }
        Self::new(source_tag, countries, topics, scores)
    }
}

fn check_labels(kind: &'static str, labels: &[String]) -> Result<(), MatrixError> {
    let mut seen = BTreeSet::new();
    for label in labels {
        if label.is_empty() {
            return Err(MatrixError::EmptyLabel(kind));
        }
        if !seen.insert(label.as_str()) {
            return Err(MatrixError::DuplicateLabel {
                kind,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

fn sorted_intersection(a: &[String], b: &[String]) -> Vec<String> {
    let set: BTreeSet<&String> = b.iter().collect();
    let mut common: Vec<String> = a.iter().filter(|x| set.contains(x)).cloned().collect();
    common.sort();
    common
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MoralMatrix {
        MoralMatrix::new(
            "TEST",
            vec!["Brazil".into(), "Japan".into()],
            vec!["Divorce".into(), "Gambling".into(), "Suicide".into()],
            vec![
                Some(0.1),
                Some(-0.2),
                None,
                Some(0.5),
                Some(-0.9),
                Some(0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_duplicate_labels() {
        let err = MoralMatrix::new(
            "T",
            vec!["A".into(), "A".into()],
            vec!["x".into()],
            vec![Some(0.0), Some(0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, MatrixError::DuplicateLabel { .. }));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = MoralMatrix::new("T", vec!["A".into()], vec!["x".into()], vec![]).unwrap_err();
        assert!(matches!(err, MatrixError::DimensionMismatch { .. }));
    }

    #[test]
    fn indexing_and_columns() {
        let m = sample();
        assert_eq!(m.get_by_label("Japan", "Divorce").unwrap(), Some(0.5));
        assert_eq!(m.column(2), vec![None, Some(0.0)]);
        assert_eq!(m.missing_count(), 1);
    }

    #[test]
    fn restrict_preserves_requested_order() {
        let m = sample();
        let r = m
            .restrict(
                &["Japan".into(), "Brazil".into()],
                &["Suicide".into(), "Divorce".into()],
            )
            .unwrap();
        assert_eq!(r.countries(), ["Japan", "Brazil"]);
        assert_eq!(r.get(0, 1), Some(0.5));
        assert_eq!(r.get(1, 0), None);
    }

    #[test]
    fn csv_round_trip_with_missing_cells_and_commas_in_labels() {
        let m = MoralMatrix::new(
            "T",
            vec!["Chile".into()],
            vec!["Terrorism as a political, ideological or religious tactic".into()],
            vec![None],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, Some(4)).unwrap();
        let back = MoralMatrix::read_csv(&buf[..], "T").unwrap();
        assert_eq!(back, m);

        let m2 = sample();
        let mut buf2 = Vec::new();
        m2.write_csv(&mut buf2, Some(4)).unwrap();
        let back2 = MoralMatrix::read_csv(&buf2[..], "TEST").unwrap();
        assert_eq!(back2, m2);
    }

    #[test]
    fn full_precision_round_trips_model_scores() {
        let v = -3.141592653589793e-2;
        let m = MoralMatrix::new("M", vec!["A".into()], vec!["x".into()], vec![Some(v)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, None).unwrap();
        let back = MoralMatrix::read_csv(&buf[..], "M").unwrap();
        assert_eq!(back.get(0, 0), Some(v));
    }

    #[test]
    fn common_labels_sorted() {
        let a = sample();
        let b = MoralMatrix::new(
            "U",
            vec!["Japan".into(), "Kenya".into()],
            vec!["Suicide".into(), "Divorce".into()],
            vec![Some(0.0); 4],
        )
        .unwrap();
        let (countries, topics) = MoralMatrix::common_labels(&a, &b);
        assert_eq!(countries, ["Japan"]);
        assert_eq!(topics, ["Divorce", "Suicide"]);
    }
}
