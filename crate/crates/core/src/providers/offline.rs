//! Deterministic offline backends: a scripted chat model, fixture-corpus
//! search, and a hashed bag-of-words embedder.
//!
//! Given identical inputs these return identical outputs, byte for byte,
//! which is what makes full offline runs reproducible.

use serde::Deserialize;

use crate::textutil;

use super::{validate_search, ChatProvider, ChatRequest, EmbedProvider, ProviderError, SearchProvider, SearchResult};

/// Corpus bundled into the binary; used when the config names no fixture
/// file.
pub const DEFAULT_CORPUS: &str = include_str!("../../fixtures/corpus.jsonl");

// ====== scripted chat ======

/// Five question stems per metric. `{}` takes the blindspot topic; every
/// stem ends with a question mark so the parser keeps all five lines.
const QUESTION_STEMS: [(&str, [&str; 5]); 7] = [
    (
        "Clique",
        [
            "What shared fact would tie together everything recorded about {}?",
            "Which mutual relationship completes the picture of {}?",
            "What deduction follows from the established facts about {}?",
            "Which common thread links the known details of {}?",
            "What missing detail would make the account of {} fully consistent?",
        ],
    ),
    (
        "NonClique",
        [
            "What background introduces the isolated details of {}?",
            "Which unfamiliar aspects of {} still lack context?",
            "What origin story anchors the stray facts about {}?",
            "How do the overlooked pieces of {} fit the larger whole?",
            "What primer would explain {} to a newcomer?",
        ],
    ),
    (
        "Clustering",
        [
            "Which related subjects sit alongside {}?",
            "What siblings or variants accompany {}?",
            "Which neighbouring examples broaden {}?",
            "What parallel cases resemble {}?",
            "Which adjacent themes add breadth to {}?",
        ],
    ),
    (
        "Degree",
        [
            "What widely known facts surround {}?",
            "Which prominent sources discuss {}?",
            "What popular accounts mention {}?",
            "Which notable figures appear in the story of {}?",
            "What famous events involve {}?",
        ],
    ),
    (
        "Betweenness",
        [
            "What is the connection between {} and its wider setting?",
            "Which bridge joins {} to more distant subjects?",
            "What links {} with surrounding developments?",
            "Which pathway relates {} to other fields?",
            "What intermediary ties {} into the bigger story?",
        ],
    ),
    (
        "Diameter",
        [
            "What timeline spans the full history of {}?",
            "Which milestones chart the long arc of {}?",
            "What schedule orders the key events of {}?",
            "How far back does the history of {} reach?",
            "Which distant chapters complete the story of {}?",
        ],
    ),
    (
        "Louvain",
        [
            "What carries lessons across the communities around {}?",
            "Which clusters of knowledge meet in {}?",
            "What transfers between the groups connected to {}?",
            "Which separate circles overlap around {}?",
            "What analogy crosses domains for {}?",
        ],
    ),
];

/// Chat model that computes its reply from `(template_id, slots)` alone.
///
/// Question-generation requests get five metric-flavoured questions about
/// the topic slot; answer requests get the context sentence with the highest
/// token overlap against the query (ties: earlier chunk, earlier sentence).
#[derive(Debug, Default, Clone)]
pub struct ScriptedChat;

impl ScriptedChat {
    pub fn new() -> Self {
        ScriptedChat
    }

    fn questions(slots: &std::collections::BTreeMap<String, String>) -> String {
        let metric = slots.get("metric").map(String::as_str).unwrap_or("");
        let topic = slots
            .get("topic")
            .map(String::as_str)
            .unwrap_or("the subject")
            .trim_end_matches(['?', '.', '!', ' ']);
        let stems = QUESTION_STEMS
            .iter()
            .find(|(key, _)| *key == metric)
            .map(|(_, stems)| stems)
            .unwrap_or(&QUESTION_STEMS[0].1);
        stems
            .iter()
            .map(|stem| stem.replacen("{}", topic, 1))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn extractive_answer(slots: &std::collections::BTreeMap<String, String>) -> String {
        let query = slots.get("query").map(String::as_str).unwrap_or("");
        let context = slots.get("context").map(String::as_str).unwrap_or("");
        if context.trim().is_empty() {
            return "No grounded answer is available.".to_string();
        }
        let mut best: Option<(usize, String)> = None;
        for chunk in context.split("\n\n") {
            for sentence in textutil::split_sentences(chunk) {
                let overlap = textutil::token_overlap(&sentence, query);
                match &best {
                    Some((score, _)) if overlap <= *score => {}
                    _ => best = Some((overlap, sentence)),
                }
            }
        }
        best.map(|(_, s)| s)
            .unwrap_or_else(|| "No grounded answer is available.".to_string())
    }
}

impl ChatProvider for ScriptedChat {
    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.validate()?;
        Ok(match request.template_id.as_str() {
            "question_gen" => Self::questions(&request.slots),
            "answer" => Self::extractive_answer(&request.slots),
            "judge" => "VERDICT: UNCHANGED\nScripted fallback verdict.".to_string(),
            _ => "OK.".to_string(),
        })
    }
}

// ====== fixture search ======

#[derive(Debug, Clone, Deserialize, PartialEq)]
pub struct FixtureDoc {
    pub id: String,
    pub title: String,
    pub url: String,
    pub content: String,
}

/// Ranks a bundled document corpus by unique-token overlap with the query;
/// ties break on ascending document id and zero-overlap documents never
/// match. No network involved.
#[derive(Debug, Clone)]
pub struct FixtureSearch {
    docs: Vec<FixtureDoc>,
}

impl FixtureSearch {
    pub fn from_jsonl(input: &str) -> Result<Self, String> {
        let mut docs = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: FixtureDoc = serde_json::from_str(line)
                .map_err(|e| format!("corpus line {}: {e}", lineno + 1))?;
            if doc.id.is_empty() {
                return Err(format!("corpus line {}: empty id", lineno + 1));
            }
            docs.push(doc);
        }
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        for w in docs.windows(2) {
            if w[0].id == w[1].id {
                return Err(format!("duplicate corpus id {}", w[0].id));
            }
        }
        Ok(FixtureSearch { docs })
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }
}

impl SearchProvider for FixtureSearch {
    fn search(
        &self,
        query: &str,
        max_results: usize,
    ) -> Result<Vec<SearchResult>, ProviderError> {
        validate_search(query, max_results)?;
        let mut scored: Vec<(usize, &FixtureDoc)> = self
            .docs
            .iter()
            .map(|d| {
                let text = format!("{} {}", d.title, d.content);
                (textutil::token_overlap(query, &text), d)
            })
            .filter(|&(score, _)| score > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(scored
            .into_iter()
            .take(max_results)
            .map(|(_, d)| SearchResult {
                title: d.title.clone(),
                url: d.url.clone(),
                content: d.content.clone(),
            })
            .collect())
    }
}

// ====== hashed embedding ======

/// Bag-of-words embedder: tokens are hashed into `dimension` buckets,
/// counted, and L2-normalized. Empty text maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashedEmbed {
    dimension: usize,
}

impl HashedEmbed {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashedEmbed { dimension }
    }
}

impl EmbedProvider for HashedEmbed {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut buckets = vec![0.0f64; self.dimension];
        for (token, count) in textutil::token_counts(text) {
            let slot = (textutil::fnv1a64(token.as_bytes()) % self.dimension as u64) as usize;
            buckets[slot] += count as f64;
        }
        let norm = buckets.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut buckets {
                *v /= norm;
            }
        }
        Ok(buckets)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
