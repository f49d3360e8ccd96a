//! The three chat-model roles: metric-conditioned question generation,
//! graph-RAG answering, and before/after judging.
//!
//! All three speak to the model through [`ProviderGateway`], so the same
//! code runs against the scripted offline backend and live HTTP adapters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::graph_store::{KnowledgeGraph, NodeId, NodeKind, Stage};
use crate::ingest::VectorIndex;
use crate::metrics::{MetricEntry, MetricKey, SparseNodeSet};
use crate::providers::{ChatRequest, ProviderError, ProviderGateway};
use crate::textutil;

/// Questions requested from the model per metric.
pub const QUESTIONS_PER_METRIC: usize = 5;
/// Chunks retrieved as answer context.
pub const CONTEXT_CHUNKS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum QaError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("cannot read template {path}: {message}")]
    Template { path: String, message: String },
    #[error("judge reply has no parseable verdict line: {0:?}")]
    UnparseableVerdict(String),
    #[error("sparse set is empty; nothing to generate questions about")]
    EmptySparseSet,
    #[error("query must be non-empty")]
    EmptyQuery,
    #[error("invalid answer pair: {0}")]
    InvalidAnswerPair(&'static str),
    #[error("question text must be non-empty and end with '?': {0:?}")]
    MalformedQuestion(String),
}

// ====== prompt templates ======

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    QuestionGen,
    Answer,
    Judge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 3] = [
        TemplateId::QuestionGen,
        TemplateId::Answer,
        TemplateId::Judge,
    ];

    /// File stem under the templates directory, doubling as the chat
    /// request's template id.
    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::QuestionGen => "question_gen",
            TemplateId::Answer => "answer",
            TemplateId::Judge => "judge",
        }
    }
}

/// The three prompt templates, either embedded or read from a directory.
/// Placeholders look like `{topic}` and are filled from the request slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    question_gen: String,
    answer: String,
    judge: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    /// Templates compiled into the binary.
    pub fn builtin() -> Self {
        Templates {
            question_gen: include_str!("../templates/question_gen.txt").to_string(),
            answer: include_str!("../templates/answer.txt").to_string(),
            judge: include_str!("../templates/judge.txt").to_string(),
        }
    }

    /// Reads `<stem>.txt` for each template from `dir`; a missing file
    /// falls back to the built-in text, any other read failure is an error.
    pub fn from_dir(dir: &Path) -> Result<Self, QaError> {
        let mut loaded = Self::builtin();
        for id in TemplateId::ALL {
            let path = dir.join(format!("{}.txt", id.as_str()));
            match std::fs::read_to_string(&path) {
                Ok(text) => *loaded.slot_mut(id) = text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(QaError::Template {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(loaded)
    }

    fn slot_mut(&mut self, id: TemplateId) -> &mut String {
        match id {
            TemplateId::QuestionGen => &mut self.question_gen,
            TemplateId::Answer => &mut self.answer,
            TemplateId::Judge => &mut self.judge,
        }
    }

    pub fn text(&self, id: TemplateId) -> &str {
        match id {
            TemplateId::QuestionGen => &self.question_gen,
            TemplateId::Answer => &self.answer,
            TemplateId::Judge => &self.judge,
        }
    }

    /// Builds the chat request: renders the template with `slots` and keeps
    /// the slots attached so scripted backends can key on them.
    pub fn request(&self, id: TemplateId, slots: BTreeMap<String, String>) -> ChatRequest {
        let prompt = fill(self.text(id), &slots);
        ChatRequest::new(id.as_str(), slots, prompt)
    }
}

/// Replaces every `{key}` occurrence with the slot value. Unknown
/// placeholders are left verbatim.
fn fill(template: &str, slots: &BTreeMap<String, String>) -> String {
    let mut out = template.to_string();
    for (key, value) in slots {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn slot(key: &str, value: impl Into<String>) -> (String, String) {
    (key.to_string(), value.into())
}

// ====== question generation ======

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichmentQuestion {
    pub metric: MetricKey,
    pub text: String,
    /// Sparse nodes the prompt was conditioned on.
    pub target_nodes: Vec<NodeId>,
}

impl EnrichmentQuestion {
    /// Trims the text and enforces the format invariant: non-empty and
    /// ending with a question mark.
    pub fn new(
        metric: MetricKey,
        text: impl Into<String>,
        target_nodes: Vec<NodeId>,
    ) -> Result<Self, QaError> {
        let text = text.into();
        let trimmed = text.trim();
        if trimmed.is_empty() || !trimmed.ends_with('?') {
            return Err(QaError::MalformedQuestion(text));
        }
        Ok(EnrichmentQuestion {
            metric,
            text: trimmed.to_string(),
            target_nodes,
        })
    }
}

/// What one generation round produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionBatch {
    pub questions: Vec<EnrichmentQuestion>,
    /// True when the first reply had fewer than five valid lines and a
    /// second request was issued.
    pub reprompted: bool,
    /// True when even the re-prompt yielded zero valid questions; callers
    /// log a warning and move on.
    pub exhausted: bool,
}

/// Asks the model for five fact-seeking questions about a metric's sparse
/// region. Reply lines are trimmed and lines not ending in `?` dropped; a
/// shortfall triggers exactly one re-prompt, after which the larger
/// surviving set (first attempt on ties) is returned, capped at five.
pub fn generate_questions(
    gateway: &mut dyn ProviderGateway,
    templates: &Templates,
    entry: &MetricEntry,
    sparse: &SparseNodeSet,
    blindspot_topic: &str,
) -> Result<QuestionBatch, QaError> {
    if sparse.is_empty() {
        return Err(QaError::EmptySparseSet);
    }
    let targets: Vec<NodeId> = sparse.entries.iter().map(|e| e.id.clone()).collect();
    let nodes_block = sparse
        .entries
        .iter()
        .map(|e| format!("{} | {:.4} | {}", e.id.as_str(), e.score, e.preview))
        .collect::<Vec<_>>()
        .join("\n");
    let base: BTreeMap<String, String> = [
        slot("metric", entry.key.as_str()),
        slot("label", entry.cognitive_label),
        slot("shortcoming", entry.shortcoming),
        slot("topic", blindspot_topic),
        slot("nodes", nodes_block),
        slot("retry", ""),
    ]
    .into_iter()
    .collect();

    let first = ask(gateway, templates, entry.key, &targets, base.clone())?;
    if first.len() >= QUESTIONS_PER_METRIC {
        return Ok(QuestionBatch {
            questions: first,
            reprompted: false,
            exhausted: false,
        });
    }
    let mut retry_slots = base;
    retry_slots.insert(
        "retry".to_string(),
        "Reminder: output exactly five lines, each a question ending with '?'.".to_string(),
    );
    let second = ask(gateway, templates, entry.key, &targets, retry_slots)?;
    let questions = if second.len() > first.len() { second } else { first };
    let exhausted = questions.is_empty();
    Ok(QuestionBatch {
        questions,
        reprompted: true,
        exhausted,
    })
}

fn ask(
    gateway: &mut dyn ProviderGateway,
    templates: &Templates,
    metric: MetricKey,
    targets: &[NodeId],
    slots: BTreeMap<String, String>,
) -> Result<Vec<EnrichmentQuestion>, QaError> {
    let reply = gateway.chat(&templates.request(TemplateId::QuestionGen, slots))?;
    Ok(reply
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && line.ends_with('?'))
        .take(QUESTIONS_PER_METRIC)
        .map(|line| {
            EnrichmentQuestion::new(metric, line, targets.to_vec())
                .expect("filtered lines satisfy the question invariant")
        })
        .collect())
}

// ====== answering ======

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnswerPhase {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerRecord {
    pub question: String,
    pub answer: String,
    pub phase: AnswerPhase,
    /// Top retrieved chunk ids, in retrieval order, at most five.
    pub context_chunks: Vec<NodeId>,
    /// True when the vector index held nothing to retrieve from.
    pub no_context: bool,
}

/// Graph-RAG answering: embed the query, retrieve the top five chunks, and
/// prompt the model with query plus chunk texts in retrieval order.
pub fn answer(
    gateway: &mut dyn ProviderGateway,
    templates: &Templates,
    graph: &KnowledgeGraph,
    index: &VectorIndex,
    query: &str,
    phase: AnswerPhase,
) -> Result<AnswerRecord, QaError> {
    if query.trim().is_empty() {
        return Err(QaError::EmptyQuery);
    }
    let vector = gateway.embed(query)?;
    let mut context_chunks = Vec::new();
    let mut parts = Vec::new();
    for (id, _) in index.top_k(&vector, CONTEXT_CHUNKS) {
        if let Some(node) = graph.node(&id) {
            if node.kind == NodeKind::Chunk {
                parts.push(node.text.clone());
                context_chunks.push(id);
            }
        }
    }
    let no_context = context_chunks.is_empty();
    let slots: BTreeMap<String, String> = [
        slot("query", query),
        slot("context", parts.join("\n\n")),
    ]
    .into_iter()
    .collect();
    let reply = gateway.chat(&templates.request(TemplateId::Answer, slots))?;
    Ok(AnswerRecord {
        question: query.to_string(),
        answer: reply.trim().to_string(),
        phase,
        context_chunks,
        no_context,
    })
}

// ====== judging ======

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Improved,
    Unchanged,
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub rationale: String,
}

/// How before/after pairs get compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JudgeBackend {
    /// Prompt the chat model and parse its `VERDICT:` line.
    Live,
    /// Pure computation: token-F1 against a reference when one exists,
    /// retrieval provenance otherwise.
    Offline { f1_deadband: f64 },
}

/// Compares the before/after answers for one query and returns a three-way
/// verdict. The records must carry the matching phases and the same
/// question text as `query`.
#[allow(clippy::too_many_arguments)]
pub fn judge(
    backend: JudgeBackend,
    gateway: &mut dyn ProviderGateway,
    templates: &Templates,
    graph: &KnowledgeGraph,
    query: &str,
    before: &AnswerRecord,
    after: &AnswerRecord,
    reference: Option<&str>,
) -> Result<Verdict, QaError> {
    if before.phase != AnswerPhase::Before || after.phase != AnswerPhase::After {
        return Err(QaError::InvalidAnswerPair("phases must be Before then After"));
    }
    if before.question != query || after.question != query {
        return Err(QaError::InvalidAnswerPair(
            "records answer a different question",
        ));
    }
    match backend {
        JudgeBackend::Live => judge_live(gateway, templates, query, before, after, reference),
        JudgeBackend::Offline { f1_deadband } => {
            Ok(judge_offline(graph, before, after, reference, f1_deadband))
        }
    }
}

fn judge_live(
    gateway: &mut dyn ProviderGateway,
    templates: &Templates,
    query: &str,
    before: &AnswerRecord,
    after: &AnswerRecord,
    reference: Option<&str>,
) -> Result<Verdict, QaError> {
    let reference_block = match reference {
        Some(r) => format!("Reference answer:\n{r}"),
        None => "No reference answer is available.".to_string(),
    };
    let slots: BTreeMap<String, String> = [
        slot("query", query),
        slot("before", before.answer.as_str()),
        slot("after", after.answer.as_str()),
        slot("reference", reference_block),
    ]
    .into_iter()
    .collect();
    let reply = gateway.chat(&templates.request(TemplateId::Judge, slots))?;
    parse_verdict(&reply).ok_or_else(|| QaError::UnparseableVerdict(reply.clone()))
}

/// Parses the first `VERDICT: <word>` line (case-insensitive); everything
/// after that line becomes the rationale.
fn parse_verdict(reply: &str) -> Option<Verdict> {
    let mut lines = reply.lines();
    for line in lines.by_ref() {
        let upper = line.trim().to_uppercase();
        let Some(value) = upper.strip_prefix("VERDICT:") else {
            continue;
        };
        let outcome = match value.trim() {
            "IMPROVED" => Outcome::Improved,
            "UNCHANGED" => Outcome::Unchanged,
            "DEGRADED" => Outcome::Degraded,
            _ => return None,
        };
        let rationale = lines.collect::<Vec<_>>().join("\n").trim().to_string();
        return Some(Verdict { outcome, rationale });
    }
    None
}

fn judge_offline(
    graph: &KnowledgeGraph,
    before: &AnswerRecord,
    after: &AnswerRecord,
    reference: Option<&str>,
    deadband: f64,
) -> Verdict {
    if let Some(reference) = reference {
        let f1_before = textutil::token_f1(&before.answer, reference);
        let f1_after = textutil::token_f1(&after.answer, reference);
        let delta = f1_after - f1_before;
        let outcome = if delta > deadband {
            Outcome::Improved
        } else if delta < -deadband {
            Outcome::Degraded
        } else {
            Outcome::Unchanged
        };
        return Verdict {
            outcome,
            rationale: format!(
                "token F1 {f1_before:.4} -> {f1_after:.4} (delta {delta:+.4}, deadband {deadband})"
            ),
        };
    }
    if before.answer == after.answer {
        return Verdict {
            outcome: Outcome::Unchanged,
            rationale: "answers are textually identical".to_string(),
        };
    }
    let cites_new_evidence = after.context_chunks.iter().any(|id| {
        !before.context_chunks.contains(id)
            && graph
                .node(id)
                .is_some_and(|n| n.stage == Stage::Enrichment)
    });
    if cites_new_evidence {
        Verdict {
            outcome: Outcome::Improved,
            rationale: "answer changed and draws on newly ingested context".to_string(),
        }
    } else {
        Verdict {
            outcome: Outcome::Unchanged,
            rationale: "answer changed but cites no new enrichment context".to_string(),
        }
    }
}
