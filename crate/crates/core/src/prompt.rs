//! Probe prompt rendering: two moral-statement templates crossed with five
//! judgment token pairs per (country, topic), and one comparative template
//! crossed with three similarity token pairs per (topic, country pair).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::PromptError;

/// The five opposed judgment token pairs, positive side first.
pub const JUDGMENT_PAIRS: [(&str, &str); 5] = [
    ("always justifiable", "never justifiable"),
    ("right", "wrong"),
    ("morally good", "morally bad"),
    ("ethically right", "ethically wrong"),
    ("ethical", "unethical"),
];

/// The three opposed comparative token pairs, similar side first.
pub const COMPARATIVE_PAIRS: [(&str, &str); 3] = [
    ("similar", "dissimilar"),
    ("alike", "unalike"),
    ("aligned", "misaligned"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    /// "In {country} {topic} is ..."
    In,
    /// "People in {country} believe {topic} is ..."
    People,
    /// "Regarding the morality of {topic}, the judgments of people in {x} and {y} are ..."
    Comparative,
}

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::In => "in",
            TemplateId::People => "people",
            TemplateId::Comparative => "comparative",
        }
    }
}

/// Where a rendered pair came from: the slot values and the token pair id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub countries: Vec<String>,
    pub topic: String,
    /// 1-based id within [`JUDGMENT_PAIRS`] or [`COMPARATIVE_PAIRS`].
    pub token_pair_id: u8,
}

/// Two sentences identical except for the opposed token: a shared prefix and
/// the two continuations (each starting with the separating space), so that
/// `prefix + continuation` reproduces the full sentence byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastPair {
    pub prefix: String,
    pub positive_continuation: String,
    pub negative_continuation: String,
    pub template_id: TemplateId,
    pub provenance: Provenance,
}

impl ContrastPair {
    pub fn positive_sentence(&self) -> String {
        format!("{}{}", self.prefix, self.positive_continuation)
    }

    pub fn negative_sentence(&self) -> String {
        format!("{}{}", self.prefix, self.negative_continuation)
    }
}

/// Countries whose prompt form takes a definite article. The mapping is an
/// explicit lookup, never inferred from the name.
fn default_articles() -> BTreeMap<String, String> {
    [
        "United States",
        "United Kingdom",
        "Netherlands",
        "Philippines",
        "Czech Republic",
        "Maldives",
        "United Arab Emirates",
        "Dominican Republic",
        "Palestinian Territories",
        "Gambia",
        "Bahamas",
    ]
    .into_iter()
    .map(|name| (name.to_string(), format!("the {name}")))
    .collect()
}

/// Renders the probe prompts for a configured set of country and topic
/// phrasings. Rendering is a pure function of the configuration and inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptEngine {
    /// Country display overrides (definite articles and similar).
    articles: BTreeMap<String, String>,
    /// Topic label to in-sentence noun phrase; labels double as phrases
    /// when absent.
    topic_phrases: BTreeMap<String, String>,
    /// Whether continuations end with a sentence-final period.
    trailing_period: bool,
}

impl Default for PromptEngine {
    fn default() -> Self {
        Self {
            articles: default_articles(),
            topic_phrases: BTreeMap::new(),
            trailing_period: true,
        }
    }
}

impl PromptEngine {
    pub fn new(
        extra_articles: BTreeMap<String, String>,
        topic_phrases: BTreeMap<String, String>,
        trailing_period: bool,
    ) -> Self {
        let mut articles = default_articles();
        articles.extend(extra_articles);
        Self {
            articles,
            topic_phrases,
            trailing_period,
        }
    }

    /// The article-corrected display form used inside prompts.
    pub fn country_display(&self, country: &str) -> String {
        self.articles
            .get(country)
            .cloned()
            .unwrap_or_else(|| country.to_string())
    }

    /// The in-sentence noun phrase for a topic label.
    pub fn topic_phrase(&self, topic: &str) -> String {
        self.topic_phrases
            .get(topic)
            .cloned()
            .unwrap_or_else(|| topic.to_string())
    }

    fn continuation(&self, token: &str) -> String {
        if self.trailing_period {
            format!(" {token}.")
        } else {
            format!(" {token}")
        }
    }

    /// All ten moral contrast pairs for one (country, topic): the two
    /// statement templates crossed with the five judgment token pairs.
    pub fn render_moral_pairs(
        &self,
        country: &str,
        topic: &str,
    ) -> Result<Vec<ContrastPair>, PromptError> {
        if country.is_empty() {
            return Err(PromptError::EmptyInput("country"));
        }
        if topic.is_empty() {
            return Err(PromptError::EmptyInput("topic"));
        }
        let c = self.country_display(country);
        let t = self.topic_phrase(topic);
        let mut out = Vec::with_capacity(10);
        for (template_id, prefix) in [
            (TemplateId::In, format!("In {c} {t} is")),
            (TemplateId::People, format!("People in {c} believe {t} is")),
        ] {
            for (i, (positive, negative)) in JUDGMENT_PAIRS.iter().enumerate() {
                out.push(ContrastPair {
                    prefix: prefix.clone(),
                    positive_continuation: self.continuation(positive),
                    negative_continuation: self.continuation(negative),
                    template_id,
                    provenance: Provenance {
                        countries: vec![country.to_string()],
                        topic: topic.to_string(),
                        token_pair_id: i as u8 + 1,
                    },
                });
            }
        }
        Ok(out)
    }

    /// The three comparative contrast pairs for one topic and an ordered
    /// pair of distinct countries.
    pub fn render_comparative_pairs(
        &self,
        topic: &str,
        country_x: &str,
        country_y: &str,
    ) -> Result<Vec<ContrastPair>, PromptError> {
        if topic.is_empty() {
            return Err(PromptError::EmptyInput("topic"));
        }
        if country_x.is_empty() || country_y.is_empty() {
            return Err(PromptError::EmptyInput("country"));
        }
        if country_x == country_y {
            return Err(PromptError::IdenticalCountries(country_x.to_string()));
        }
        let t = self.topic_phrase(topic);
        let x = self.country_display(country_x);
        let y = self.country_display(country_y);
        let prefix =
            format!("Regarding the morality of {t}, the judgments of people in {x} and {y} are");
        Ok(COMPARATIVE_PAIRS
            .iter()
            .enumerate()
            .map(|(i, (similar, different))| ContrastPair {
                prefix: prefix.clone(),
                positive_continuation: self.continuation(similar),
                negative_continuation: self.continuation(different),
                template_id: TemplateId::Comparative,
                provenance: Provenance {
                    countries: vec![country_x.to_string(), country_y.to_string()],
                    topic: topic.to_string(),
                    token_pair_id: i as u8 + 1,
                },
            })
            .collect())
    }
}
