//! Per-query orchestration and run-set aggregation.
//!
//! One query runs as: clear the graph, seed it from the top search result,
//! answer the question, run the seven metric cycles in registry order,
//! answer again, judge the pair. A run over a question set aggregates the
//! verdicts into improvement rate, collateral stability, and mean search
//! cost, with every provider call logged as a deterministic event stream.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Config;
use crate::graph_store::{GraphError, KnowledgeGraph, Stage};
use crate::ingest::{ingest_documents, DocumentItem, IngestError, VectorIndex};
use crate::metrics::{self, detect_sparse, MetricEntry, MetricKey, MetricRegistry, Orientation};
use crate::providers::{
    ChatRequest, ProviderError, ProviderGateway, ProviderMode, ProviderSet, SearchResult,
};
use crate::par;
use crate::qa::{
    self, AnswerPhase, AnswerRecord, JudgeBackend, Outcome, QaError, Templates, Verdict,
};

/// Search results requested when seeding; only the first is kept.
pub const SEED_MAX_RESULTS: usize = 3;
/// Search results requested per enrichment question; only the first is kept.
pub const ENRICH_MAX_RESULTS: usize = 1;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("question set: {0}")]
    QuestionSet(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

// ====== question sets ======

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionItem {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub reference_answer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionSet {
    pub items: Vec<QuestionItem>,
}

impl QuestionSet {
    /// Parses one JSON object per line: `{"id", "question",
    /// "reference_answer"?}`. Ids must be unique, questions non-empty, and
    /// the set non-empty.
    pub fn from_jsonl(input: &str) -> Result<Self, PipelineError> {
        let mut items: Vec<QuestionItem> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: QuestionItem = serde_json::from_str(line).map_err(|e| {
                PipelineError::QuestionSet(format!("line {}: {e}", lineno + 1))
            })?;
            if item.id.is_empty() {
                return Err(PipelineError::QuestionSet(format!(
                    "line {}: empty id",
                    lineno + 1
                )));
            }
            if item.question.trim().is_empty() {
                return Err(PipelineError::QuestionSet(format!(
                    "line {}: empty question",
                    lineno + 1
                )));
            }
            if items.iter().any(|q| q.id == item.id) {
                return Err(PipelineError::QuestionSet(format!(
                    "duplicate question id {:?}",
                    item.id
                )));
            }
            items.push(item);
        }
        if items.is_empty() {
            return Err(PipelineError::QuestionSet("no questions".to_string()));
        }
        Ok(QuestionSet { items })
    }
}

// ====== logging ======

/// One logged event. `ts_ordinal` is a per-run counter, not wall clock, so
/// two identical runs produce identical logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub ts_ordinal: u64,
    pub query_id: String,
    pub event: String,
    pub payload: serde_json::Value,
}

/// One retrieved snippet, persisted verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub query_id: String,
    pub source_question: String,
    pub url: String,
    pub content: String,
}

/// Gateway for one query: forwards provider calls, counts searches, logs
/// every call as an event, and keeps retrieved snippets. Event ordinals are
/// query-local here and renumbered into one run-wide sequence at merge time.
struct QuerySession<'a> {
    set: &'a ProviderSet,
    query_id: String,
    source_question: String,
    next_ordinal: u64,
    search_calls: u64,
    events: Vec<EventRecord>,
    snippets: Vec<SnippetRecord>,
}

impl<'a> QuerySession<'a> {
    fn new(set: &'a ProviderSet, query_id: &str) -> Self {
        QuerySession {
            set,
            query_id: query_id.to_string(),
            source_question: String::new(),
            next_ordinal: 0,
            search_calls: 0,
            events: Vec::new(),
            snippets: Vec::new(),
        }
    }

    /// Question attributed to subsequent searches in the snippet log.
    fn set_source(&mut self, question: &str) {
        self.source_question = question.to_string();
    }

    fn log(&mut self, event: &str, payload: serde_json::Value) {
        self.events.push(EventRecord {
            ts_ordinal: self.next_ordinal,
            query_id: self.query_id.clone(),
            event: event.to_string(),
            payload,
        });
        self.next_ordinal += 1;
    }
}

impl ProviderGateway for QuerySession<'_> {
    fn chat(&mut self, request: &ChatRequest) -> Result<String, ProviderError> {
        let outcome = self.set.chat.chat(request);
        self.log(
            "chat",
            json!({
                "template": request.template_id,
                "fingerprint": request.fingerprint(),
                "ok": outcome.is_ok(),
            }),
        );
        outcome
    }

    fn search(
        &mut self,
        query: &str,
        max_results: usize,
    ) -> Result<Vec<SearchResult>, ProviderError> {
        self.search_calls += 1;
        let outcome = self.set.search.search(query, max_results);
        match &outcome {
            Ok(results) => {
                self.log(
                    "search",
                    json!({
                        "query": query,
                        "max_results": max_results,
                        "results": results.len(),
                    }),
                );
                for r in results {
                    self.snippets.push(SnippetRecord {
                        query_id: self.query_id.clone(),
                        source_question: self.source_question.clone(),
                        url: r.url.clone(),
                        content: r.content.clone(),
                    });
                }
            }
            Err(e) => {
                self.log(
                    "search",
                    json!({
                        "query": query,
                        "max_results": max_results,
                        "error": e.to_string(),
                    }),
                );
            }
        }
        outcome
    }

    fn embed(&mut self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let outcome = self.set.embed.embed(text);
        self.log(
            "embed",
            json!({
                "chars": text.chars().count(),
                "ok": outcome.is_ok(),
            }),
        );
        outcome
    }
}

// ====== per-query records ======

/// Counters for one metric cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleStats {
    pub metric: MetricKey,
    pub skipped: bool,
    pub questions_generated: usize,
    pub searches_attempted: usize,
    pub documents_ingested: usize,
    pub nodes_added: usize,
    pub edges_added: usize,
}

impl CycleStats {
    fn skipped(metric: MetricKey) -> Self {
        CycleStats {
            metric,
            skipped: true,
            questions_generated: 0,
            searches_attempted: 0,
            documents_ingested: 0,
            nodes_added: 0,
            edges_added: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRunRecord {
    pub id: String,
    pub question: String,
    /// True when the seed search returned nothing and the query was skipped.
    pub unseeded: bool,
    pub seed: Option<SearchResult>,
    pub ans_before: Option<AnswerRecord>,
    pub ans_after: Option<AnswerRecord>,
    pub verdict: Option<Verdict>,
    pub cycles: Vec<CycleStats>,
    pub search_call_count: u64,
}

/// Everything one query produced, before merging into the run outputs.
pub struct QueryOutcome {
    pub record: QueryRunRecord,
    pub events: Vec<EventRecord>,
    pub snippets: Vec<SnippetRecord>,
    /// Final graph snapshot, persisted form.
    pub graph_jsonl: String,
}

// ====== run-level report ======

/// Enrichment volume one metric contributed across the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MetricVolume {
    pub questions_generated: usize,
    pub searches_attempted: usize,
    pub documents_ingested: usize,
    pub nodes_added: usize,
    pub edges_added: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub questions: usize,
    pub seeded: usize,
    pub unseeded: usize,
    pub improved: usize,
    pub unchanged: usize,
    pub degraded: usize,
    /// Fraction of seeded queries judged Improved.
    pub improvement_rate: f64,
    /// Among non-improved queries, the fraction not degraded. Reported as
    /// 1.0 when no non-improved queries exist; see the `defined` flag.
    pub collateral_stability: f64,
    pub collateral_stability_defined: bool,
    /// Mean search calls per query, seed call included.
    pub mean_cost: f64,
    pub per_metric: BTreeMap<MetricKey, MetricVolume>,
}

/// Folds per-query records into the run report.
pub fn aggregate_report(records: &[QueryRunRecord]) -> RunReport {
    let questions = records.len();
    let unseeded = records.iter().filter(|r| r.unseeded).count();
    let seeded = questions - unseeded;
    let mut improved = 0;
    let mut unchanged = 0;
    let mut degraded = 0;
    for record in records {
        match record.verdict.as_ref().map(|v| v.outcome) {
            Some(Outcome::Improved) => improved += 1,
            Some(Outcome::Unchanged) => unchanged += 1,
            Some(Outcome::Degraded) => degraded += 1,
            None => {}
        }
    }
    let improvement_rate = if seeded > 0 {
        improved as f64 / seeded as f64
    } else {
        0.0
    };
    let stability_denominator = unchanged + degraded;
    let collateral_stability_defined = stability_denominator > 0;
    let collateral_stability = if collateral_stability_defined {
        unchanged as f64 / stability_denominator as f64
    } else {
        1.0
    };
    let mean_cost = if questions > 0 {
        records.iter().map(|r| r.search_call_count).sum::<u64>() as f64 / questions as f64
    } else {
        0.0
    };
    let mut per_metric: BTreeMap<MetricKey, MetricVolume> = MetricKey::ALL
        .iter()
        .map(|&k| (k, MetricVolume::default()))
        .collect();
    for record in records {
        for cycle in &record.cycles {
            let volume = per_metric.entry(cycle.metric).or_default();
            volume.questions_generated += cycle.questions_generated;
            volume.searches_attempted += cycle.searches_attempted;
            volume.documents_ingested += cycle.documents_ingested;
            volume.nodes_added += cycle.nodes_added;
            volume.edges_added += cycle.edges_added;
        }
    }
    RunReport {
        questions,
        seeded,
        unseeded,
        improved,
        unchanged,
        degraded,
        improvement_rate,
        collateral_stability,
        collateral_stability_defined,
        mean_cost,
        per_metric,
    }
}

/// A completed run: the report plus everything needed to write the output
/// files.
pub struct RunOutput {
    pub report: RunReport,
    pub records: Vec<QueryRunRecord>,
    pub events: Vec<EventRecord>,
    pub snippets: Vec<SnippetRecord>,
    /// `(query_id, graph_jsonl)` final snapshots, in question order.
    pub graphs: Vec<(String, String)>,
}

#[derive(Serialize)]
struct FullReport<'a> {
    #[serde(flatten)]
    report: &'a RunReport,
    records: &'a [QueryRunRecord],
}

impl RunOutput {
    /// The report document: aggregate fields plus per-query records.
    pub fn report_json(&self) -> String {
        let full = FullReport {
            report: &self.report,
            records: &self.records,
        };
        let mut out = serde_json::to_string_pretty(&full).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn snippets_jsonl(&self) -> String {
        let mut out = String::new();
        for snippet in &self.snippets {
            out.push_str(&serde_json::to_string(snippet).expect("snippet serializes"));
            out.push('\n');
        }
        out
    }
}

// ====== the pipeline ======

/// Knobs lifted out of the config file.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub louvain_seed: u64,
    pub f1_deadband: f64,
    pub orientations: BTreeMap<MetricKey, Orientation>,
    /// Run queries on isolated graphs in parallel (requires the `parallel`
    /// feature to have an effect). Output bytes are identical either way.
    pub parallel: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            louvain_seed: 0,
            f1_deadband: 0.05,
            orientations: BTreeMap::new(),
            parallel: false,
        }
    }
}

impl PipelineOptions {
    pub fn from_config(config: &Config) -> Self {
        PipelineOptions {
            louvain_seed: config.louvain.seed,
            f1_deadband: config.judge.f1_deadband,
            orientations: config.metrics.orientation.clone(),
            parallel: config.pipeline.parallel,
        }
    }
}

pub struct Pipeline {
    set: ProviderSet,
    templates: Templates,
    registry: MetricRegistry,
    options: PipelineOptions,
}

impl Pipeline {
    pub fn new(set: ProviderSet, templates: Templates, options: PipelineOptions) -> Self {
        Pipeline {
            set,
            templates,
            registry: MetricRegistry::standard(),
            options,
        }
    }

    pub fn mode(&self) -> ProviderMode {
        self.set.mode
    }

    fn judge_backend(&self) -> JudgeBackend {
        match self.set.mode {
            ProviderMode::Live => JudgeBackend::Live,
            ProviderMode::Offline => JudgeBackend::Offline {
                f1_deadband: self.options.f1_deadband,
            },
        }
    }

    fn orientation_for(&self, key: MetricKey) -> Orientation {
        self.options
            .orientations
            .get(&key)
            .copied()
            .unwrap_or_default()
    }

    /// One metric cycle: compute the metric on a fresh projection, flag the
    /// sparse region, generate questions, and for each question retain at
    /// most the first search result and ingest it. Provider failures skip
    /// the affected question only; question generation failures propagate.
    fn run_metric_cycle(
        &self,
        session: &mut QuerySession,
        graph: &mut KnowledgeGraph,
        index: &mut VectorIndex,
        entry: &MetricEntry,
        blindspot_topic: &str,
    ) -> Result<CycleStats, PipelineError> {
        session.log("cycle_start", json!({ "metric": entry.key.as_str() }));
        let projection = graph.undirected_projection();
        if projection.node_count() == 0 {
            session.log(
                "cycle_skipped",
                json!({ "metric": entry.key.as_str(), "reason": "empty graph" }),
            );
            return Ok(CycleStats::skipped(entry.key));
        }
        let scores = metrics::compute(&projection, entry.key, self.options.louvain_seed);
        let sparse = detect_sparse(
            &scores,
            entry.key,
            &projection,
            self.orientation_for(entry.key),
        )
        .expect("non-empty projection yields non-empty scores");
        if sparse.is_empty() {
            session.log(
                "cycle_skipped",
                json!({ "metric": entry.key.as_str(), "reason": "no sparse nodes" }),
            );
            return Ok(CycleStats::skipped(entry.key));
        }

        let batch =
            qa::generate_questions(session, &self.templates, entry, &sparse, blindspot_topic)?;
        if batch.exhausted {
            session.log(
                "question_warning",
                json!({
                    "metric": entry.key.as_str(),
                    "reason": "no valid questions after one re-prompt",
                }),
            );
        }
        session.log(
            "cycle_questions",
            json!({
                "metric": entry.key.as_str(),
                "count": batch.questions.len(),
                "reprompted": batch.reprompted,
                "texts": batch.questions.iter().map(|q| q.text.as_str()).collect::<Vec<_>>(),
            }),
        );

        let mut stats = CycleStats {
            metric: entry.key,
            skipped: false,
            questions_generated: batch.questions.len(),
            searches_attempted: 0,
            documents_ingested: 0,
            nodes_added: 0,
            edges_added: 0,
        };
        for question in &batch.questions {
            session.set_source(&question.text);
            stats.searches_attempted += 1;
            let results = match session.search(&question.text, ENRICH_MAX_RESULTS) {
                Ok(results) => results,
                Err(e) => {
                    session.log(
                        "question_failed",
                        json!({
                            "metric": entry.key.as_str(),
                            "question": question.text,
                            "error": e.to_string(),
                        }),
                    );
                    continue;
                }
            };
            let Some(first) = results.first() else {
                continue;
            };
            let item = DocumentItem {
                text: first.content.clone(),
                provenance: question.text.clone(),
            };
            match ingest_documents(
                graph,
                index,
                session,
                &[item],
                Stage::Enrichment,
                Some(entry.key),
            ) {
                Ok(counts) => {
                    stats.documents_ingested += 1;
                    stats.nodes_added += counts.nodes_added();
                    stats.edges_added += counts.edges_added;
                }
                Err(e) => {
                    session.log(
                        "question_failed",
                        json!({
                            "metric": entry.key.as_str(),
                            "question": question.text,
                            "error": e.to_string(),
                        }),
                    );
                }
            }
        }
        session.log(
            "cycle_end",
            json!({
                "metric": entry.key.as_str(),
                "questions": stats.questions_generated,
                "searches": stats.searches_attempted,
                "documents": stats.documents_ingested,
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
            }),
        );
        Ok(stats)
    }

    /// Runs one question end to end on a fresh graph and index.
    pub fn run_query(&self, item: &QuestionItem) -> Result<QueryOutcome, PipelineError> {
        let mut session = QuerySession::new(&self.set, &item.id);
        let mut graph = KnowledgeGraph::new();
        let mut index = VectorIndex::new();
        graph.clear();
        index.clear();
        assert_eq!(graph.node_count(), 0, "graph must start empty");
        assert_eq!(graph.edge_count(), 0, "graph must start empty");
        session.log(
            "query_start",
            json!({ "question": item.question, "has_reference": item.reference_answer.is_some() }),
        );

        session.set_source(&item.question);
        let seed_results = session.search(&item.question, SEED_MAX_RESULTS)?;
        let Some(seed) = seed_results.first().cloned() else {
            session.log("unseeded", json!({ "question": item.question }));
            let record = QueryRunRecord {
                id: item.id.clone(),
                question: item.question.clone(),
                unseeded: true,
                seed: None,
                ans_before: None,
                ans_after: None,
                verdict: None,
                cycles: Vec::new(),
                search_call_count: session.search_calls,
            };
            return Ok(QueryOutcome {
                record,
                graph_jsonl: graph.to_jsonl(),
                events: session.events,
                snippets: session.snippets,
            });
        };
        session.log("seed", json!({ "url": seed.url, "title": seed.title }));
        ingest_documents(
            &mut graph,
            &mut index,
            &mut session,
            &[DocumentItem {
                text: seed.content.clone(),
                provenance: "seed".to_string(),
            }],
            Stage::Seed,
            None,
        )?;

        let ans_before = qa::answer(
            &mut session,
            &self.templates,
            &graph,
            &index,
            &item.question,
            AnswerPhase::Before,
        )?;
        session.log("answer", json!({ "phase": "before" }));

        let mut cycles = Vec::with_capacity(self.registry.entries().len());
        for entry in self.registry.entries() {
            let stats =
                self.run_metric_cycle(&mut session, &mut graph, &mut index, entry, &item.question)?;
            cycles.push(stats);
        }

        let ans_after = qa::answer(
            &mut session,
            &self.templates,
            &graph,
            &index,
            &item.question,
            AnswerPhase::After,
        )?;
        session.log("answer", json!({ "phase": "after" }));

        let verdict = qa::judge(
            self.judge_backend(),
            &mut session,
            &self.templates,
            &graph,
            &item.question,
            &ans_before,
            &ans_after,
            item.reference_answer.as_deref(),
        )?;
        session.log(
            "verdict",
            json!({ "outcome": format!("{:?}", verdict.outcome) }),
        );
        session.log(
            "query_end",
            json!({ "nodes": graph.node_count(), "edges": graph.edge_count() }),
        );

        let enrichment_searches: usize = cycles.iter().map(|c| c.searches_attempted).sum();
        debug_assert_eq!(session.search_calls, 1 + enrichment_searches as u64);

        let record = QueryRunRecord {
            id: item.id.clone(),
            question: item.question.clone(),
            unseeded: false,
            seed: Some(seed),
            ans_before: Some(ans_before),
            ans_after: Some(ans_after),
            verdict: Some(verdict),
            cycles,
            search_call_count: session.search_calls,
        };
        Ok(QueryOutcome {
            record,
            graph_jsonl: graph.to_jsonl(),
            events: session.events,
            snippets: session.snippets,
        })
    }

    /// Runs every question and merges the outcomes. With `parallel` set
    /// (and the feature compiled in) queries run on worker threads over
    /// isolated graphs; outcomes are merged in question order either way,
    /// so the bytes written do not depend on the mode.
    pub fn run_set(&self, set: &QuestionSet) -> Result<RunOutput, PipelineError> {
        let outcomes: Vec<Result<QueryOutcome, PipelineError>> = if self.options.parallel {
            par::map_indices(set.items.len(), |i| self.run_query(&set.items[i]))
        } else {
            set.items.iter().map(|item| self.run_query(item)).collect()
        };

        let mut records = Vec::with_capacity(outcomes.len());
        let mut events = Vec::new();
        let mut snippets = Vec::new();
        let mut graphs = Vec::new();
        let mut next_ordinal = 0u64;
        for outcome in outcomes {
            let outcome = outcome?;
            for mut event in outcome.events {
                event.ts_ordinal = next_ordinal;
                next_ordinal += 1;
                events.push(event);
            }
            snippets.extend(outcome.snippets);
            graphs.push((outcome.record.id.clone(), outcome.graph_jsonl));
            records.push(outcome.record);
        }
        let report = aggregate_report(&records);
        Ok(RunOutput {
            report,
            records,
            events,
            snippets,
            graphs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{FixtureSearch, HashedEmbed, ScriptedChat};

    const TEST_CORPUS: &str = concat!(
        "{\"id\":\"m1\",\"title\":\"Why do monsoon winds reverse direction seasonally\",\"url\":\"fixture://m1\",\"content\":\"Monsoon winds reverse direction between seasons. Sailors relied on the monsoon reversal for trade routes.\"}\n",
        "{\"id\":\"m2\",\"title\":\"Monsoon cause\",\"url\":\"fixture://m2\",\"content\":\"Monsoon winds reverse direction seasonally because differential heating of land and ocean flips the pressure gradient. Widely known facts surround the monsoon season.\"}\n",
        "{\"id\":\"m3\",\"title\":\"Monsoon history\",\"url\":\"fixture://m3\",\"content\":\"The history of monsoon science spans a long timeline of milestones. Halley connected monsoon winds with heating in 1686.\"}\n",
        "{\"id\":\"r1\",\"title\":\"Reef primer\",\"url\":\"fixture://r1\",\"content\":\"Coral reefs host a quarter of marine species. Reef bleaching follows heat stress.\"}\n",
        "{\"id\":\"r2\",\"title\":\"Reef connections\",\"url\":\"fixture://r2\",\"content\":\"Coral reefs link fisheries and coastal communities in one connected cluster. Reef species pathways bridge distant habitats.\"}\n",
    );

    fn offline_pipeline(parallel: bool) -> Pipeline {
        let set = ProviderSet {
            mode: ProviderMode::Offline,
            chat: Box::new(ScriptedChat::new()),
            search: Box::new(FixtureSearch::from_jsonl(TEST_CORPUS).unwrap()),
            embed: Box::new(HashedEmbed::new(64)),
        };
        let options = PipelineOptions {
            parallel,
            ..PipelineOptions::default()
        };
        Pipeline::new(set, Templates::builtin(), options)
    }

    fn monsoon_item() -> QuestionItem {
        QuestionItem {
            id: "q-monsoon".to_string(),
            question: "Why do monsoon winds reverse direction seasonally?".to_string(),
            reference_answer: Some("differential heating of land and ocean".to_string()),
        }
    }

    fn reef_item() -> QuestionItem {
        QuestionItem {
            id: "q-reef".to_string(),
            question: "What do coral reefs host?".to_string(),
            reference_answer: None,
        }
    }

    fn test_set() -> QuestionSet {
        QuestionSet {
            items: vec![monsoon_item(), reef_item()],
        }
    }

    #[test]
    fn question_set_parses_and_validates() {
        let good = "{\"id\":\"a\",\"question\":\"one?\"}\n{\"id\":\"b\",\"question\":\"two?\",\"reference_answer\":\"x\"}\n";
        let set = QuestionSet::from_jsonl(good).unwrap();
        assert_eq!(set.items.len(), 2);
        assert_eq!(set.items[1].reference_answer.as_deref(), Some("x"));

        for bad in [
            "",
            "{\"id\":\"a\",\"question\":\"\"}",
            "{\"id\":\"\",\"question\":\"x?\"}",
            "{\"id\":\"a\",\"question\":\"x?\"}\n{\"id\":\"a\",\"question\":\"y?\"}",
            "{\"id\":\"a\",\"question\":\"x?\",\"extra\":1}",
        ] {
            assert!(QuestionSet::from_jsonl(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn run_query_covers_all_cycles_in_registry_order() {
        let pipeline = offline_pipeline(false);
        let outcome = pipeline.run_query(&monsoon_item()).unwrap();
        let record = &outcome.record;
        assert!(!record.unseeded);
        assert_eq!(record.cycles.len(), 7);
        let order: Vec<MetricKey> = record.cycles.iter().map(|c| c.metric).collect();
        assert_eq!(order, MetricKey::ALL.to_vec());
        assert!(record.ans_before.is_some());
        assert!(record.ans_after.is_some());
        assert!(record.verdict.is_some());
    }

    #[test]
    fn search_call_count_matches_search_events_and_cycle_sums() {
        let pipeline = offline_pipeline(false);
        let outcome = pipeline.run_query(&monsoon_item()).unwrap();
        let searches = outcome
            .events
            .iter()
            .filter(|e| e.event == "search")
            .count() as u64;
        assert_eq!(outcome.record.search_call_count, searches);
        let enrichment: usize = outcome
            .record
            .cycles
            .iter()
            .map(|c| c.searches_attempted)
            .sum();
        assert_eq!(outcome.record.search_call_count, 1 + enrichment as u64);
    }

    #[test]
    fn seed_ingest_happens_before_the_first_answer() {
        let pipeline = offline_pipeline(false);
        let outcome = pipeline.run_query(&monsoon_item()).unwrap();
        let before = outcome.record.ans_before.as_ref().unwrap();
        assert!(!before.no_context);
        let graph = KnowledgeGraph::from_jsonl(&outcome.graph_jsonl).unwrap();
        for id in &before.context_chunks {
            assert_eq!(graph.node(id).unwrap().stage, Stage::Seed);
        }
    }

    #[test]
    fn unmatched_question_is_flagged_unseeded() {
        let pipeline = offline_pipeline(false);
        let item = QuestionItem {
            id: "q-none".to_string(),
            question: "zorp blag quux?".to_string(),
            reference_answer: None,
        };
        let outcome = pipeline.run_query(&item).unwrap();
        assert!(outcome.record.unseeded);
        assert!(outcome.record.verdict.is_none());
        assert_eq!(outcome.record.search_call_count, 1);
        assert!(outcome.events.iter().any(|e| e.event == "unseeded"));
    }

    #[test]
    fn node_and_edge_counts_grow_monotonically_through_cycles() {
        let pipeline = offline_pipeline(false);
        let outcome = pipeline.run_query(&monsoon_item()).unwrap();
        let mut last = (0u64, 0u64);
        for event in outcome
            .events
            .iter()
            .filter(|e| e.event == "cycle_end" || e.event == "query_end")
        {
            let nodes = event.payload["nodes"].as_u64().unwrap();
            let edges = event.payload["edges"].as_u64().unwrap();
            assert!(nodes >= last.0 && edges >= last.1);
            last = (nodes, edges);
        }
        assert!(last.0 > 0);
    }

    #[test]
    fn enrichment_improves_the_referenced_answer() {
        let pipeline = offline_pipeline(false);
        let outcome = pipeline.run_query(&monsoon_item()).unwrap();
        let verdict = outcome.record.verdict.as_ref().unwrap();
        assert_eq!(verdict.outcome, Outcome::Improved, "{verdict:?}");
    }

    #[test]
    fn run_set_is_deterministic_byte_for_byte() {
        let pipeline = offline_pipeline(false);
        let a = pipeline.run_set(&test_set()).unwrap();
        let b = pipeline.run_set(&test_set()).unwrap();
        assert_eq!(a.report_json(), b.report_json());
        assert_eq!(a.events_jsonl(), b.events_jsonl());
        assert_eq!(a.snippets_jsonl(), b.snippets_jsonl());
        assert_eq!(a.graphs, b.graphs);
    }

    #[test]
    fn merged_event_ordinals_form_one_contiguous_sequence() {
        let pipeline = offline_pipeline(false);
        let output = pipeline.run_set(&test_set()).unwrap();
        for (i, event) in output.events.iter().enumerate() {
            assert_eq!(event.ts_ordinal, i as u64);
        }
        assert_eq!(output.graphs.len(), 2);
        assert_eq!(output.graphs[0].0, "q-monsoon");
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_mode_produces_identical_bytes() {
        let sequential = offline_pipeline(false).run_set(&test_set()).unwrap();
        let parallel = offline_pipeline(true).run_set(&test_set()).unwrap();
        assert_eq!(sequential.report_json(), parallel.report_json());
        assert_eq!(sequential.events_jsonl(), parallel.events_jsonl());
        assert_eq!(sequential.snippets_jsonl(), parallel.snippets_jsonl());
        assert_eq!(sequential.graphs, parallel.graphs);
    }

    #[test]
    fn report_arithmetic_follows_the_definitions() {
        fn record_with(outcome: Option<Outcome>, searches: u64, unseeded: bool) -> QueryRunRecord {
            QueryRunRecord {
                id: format!("{outcome:?}-{searches}"),
                question: "q?".to_string(),
                unseeded,
                seed: None,
                ans_before: None,
                ans_after: None,
                verdict: outcome.map(|o| Verdict {
                    outcome: o,
                    rationale: String::new(),
                }),
                cycles: Vec::new(),
                search_call_count: searches,
            }
        }

        let records = vec![
            record_with(Some(Outcome::Improved), 36, false),
            record_with(Some(Outcome::Improved), 36, false),
            record_with(Some(Outcome::Unchanged), 36, false),
            record_with(Some(Outcome::Degraded), 36, false),
        ];
        let report = aggregate_report(&records);
        assert_eq!(report.improvement_rate, 0.5);
        assert_eq!(report.collateral_stability, 0.5);
        assert!(report.collateral_stability_defined);
        assert_eq!(report.mean_cost, 36.0);

        let all_improved = vec![
            record_with(Some(Outcome::Improved), 10, false),
            record_with(Some(Outcome::Improved), 20, false),
        ];
        let report = aggregate_report(&all_improved);
        assert_eq!(report.improvement_rate, 1.0);
        assert_eq!(report.collateral_stability, 1.0);
        assert!(!report.collateral_stability_defined);
        assert_eq!(report.mean_cost, 15.0);

        let with_unseeded = vec![
            record_with(Some(Outcome::Improved), 36, false),
            record_with(None, 1, true),
        ];
        let report = aggregate_report(&with_unseeded);
        assert_eq!(report.seeded, 1);
        assert_eq!(report.unseeded, 1);
        assert_eq!(report.improvement_rate, 1.0);
        assert_eq!(report.mean_cost, 18.5);
    }
}
