//! Command-line front end: `run`, `metrics`, and `export`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 provider
//! failure that aborted a run. Stdout carries machine-readable output
//! only; diagnostics go to stderr.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::Config;
use crate::graph_store::{KnowledgeGraph, NodeId, NodeKind, Projection};
use crate::metrics::{self, detect_sparse, MetricKey, Orientation, SparseEntry};
use crate::pipeline::{Pipeline, PipelineOptions, QuestionSet};
use crate::providers::ProviderSet;
use crate::qa::Templates;

#[derive(Debug, Parser)]
#[command(name = "mkge", version, about = "Knowledge-graph enrichment pipeline")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a question set through the full enrichment pipeline.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Question set, one JSON object per line.
        #[arg(long)]
        questions: PathBuf,
        /// Output directory; falls back to `paths.logs` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute metric scores and sparse sets for a persisted graph.
    Metrics {
        /// Graph snapshot (JSON Lines, as written by `run`).
        #[arg(long)]
        graph: PathBuf,
        /// Restrict output to one metric.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Emit a figure source for a persisted graph.
    Export {
        #[arg(long)]
        graph: PathBuf,
        /// Output format; only `dot` is supported.
        #[arg(long)]
        format: String,
        /// Style this metric's sparse nodes distinctly.
        #[arg(long)]
        highlight: Option<String>,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad configuration or input; exit 2.
    Usage(String),
    /// Provider failure that aborted a run; exit 3.
    Aborted(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Aborted(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Aborted(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Writes machine output to stdout; a closed pipe (`mkge ... | head`) ends
/// the process quietly instead of panicking.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).and_then(|()| out.flush()).is_err() {
        std::process::exit(0);
    }
}

/// Parses arguments from the process environment and dispatches. Returns
/// the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            questions,
            out,
        } => cmd_run(&config, &questions, out.as_deref()),
        Command::Metrics { graph, metric } => cmd_metrics(&graph, metric.as_deref()),
        Command::Export {
            graph,
            format,
            highlight,
        } => cmd_export(&graph, &format, highlight.as_deref()),
    }
}

fn parse_metric_key(name: &str) -> Result<MetricKey, CliError> {
    MetricKey::ALL
        .into_iter()
        .find(|k| k.as_str().eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            let valid: Vec<&str> = MetricKey::ALL.iter().map(|k| k.as_str()).collect();
            CliError::Usage(format!(
                "unknown metric {name:?}; expected one of {}",
                valid.join(", ")
            ))
        })
}

fn load_graph(path: &Path) -> Result<KnowledgeGraph, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read graph {}: {e}", path.display())))?;
    KnowledgeGraph::from_jsonl(&raw).map_err(usage)
}

// ====== run ======

fn cmd_run(config_path: &Path, questions_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let config = Config::load(config_path).map_err(usage)?;
    let out_dir: PathBuf = match out {
        Some(dir) => dir.to_path_buf(),
        None => config.logs_path().ok_or_else(|| {
            CliError::Usage("no output directory: pass --out or set paths.logs".to_string())
        })?,
    };

    let raw_questions = std::fs::read_to_string(questions_path)
        .map_err(|e| usage(format!("cannot read questions {}: {e}", questions_path.display())))?;
    let question_set = QuestionSet::from_jsonl(&raw_questions).map_err(usage)?;

    let set = ProviderSet::from_config(&config).map_err(usage)?;
    let templates = match config.templates_path() {
        Some(dir) => Templates::from_dir(&dir).map_err(usage)?,
        None => Templates::builtin(),
    };
    let pipeline = Pipeline::new(set, templates, PipelineOptions::from_config(&config));

    let output = pipeline
        .run_set(&question_set)
        .map_err(|e| CliError::Aborted(e.to_string()))?;

    let write = |path: &Path, contents: &str| -> Result<(), CliError> {
        std::fs::write(path, contents)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
    };
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let report_json = output.report_json();
    write(&out_dir.join("report.json"), &report_json)?;
    write(&out_dir.join("events.jsonl"), &output.events_jsonl())?;
    write(&out_dir.join("snippets.jsonl"), &output.snippets_jsonl())?;
    let graphs_dir = out_dir.join("graphs");
    std::fs::create_dir_all(&graphs_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", graphs_dir.display())))?;
    for (query_id, jsonl) in &output.graphs {
        write(&graphs_dir.join(format!("{query_id}.jsonl")), jsonl)?;
    }

    emit(&report_json);
    eprintln!(
        "wrote report.json, events.jsonl, snippets.jsonl, graphs/ to {}",
        out_dir.display()
    );
    Ok(())
}

// ====== metrics ======

#[derive(Serialize)]
struct ScoreRow {
    node: NodeId,
    score: f64,
}

#[derive(Serialize)]
struct MetricDump {
    metric: MetricKey,
    scores: Vec<ScoreRow>,
    sparse: Vec<SparseEntry>,
}

#[derive(Serialize)]
struct MetricsOutput {
    metrics: Vec<MetricDump>,
}

fn dump_metric(projection: &Projection, key: MetricKey) -> MetricDump {
    let scores = metrics::compute(projection, key, 0);
    let sparse = if scores.is_empty() {
        Vec::new()
    } else {
        detect_sparse(&scores, key, projection, Orientation::Below)
            .expect("non-empty scores")
            .entries
    };
    MetricDump {
        metric: key,
        scores: scores
            .iter()
            .map(|(id, score)| ScoreRow {
                node: id.clone(),
                score,
            })
            .collect(),
        sparse,
    }
}

fn cmd_metrics(graph_path: &Path, metric: Option<&str>) -> Result<(), CliError> {
    let graph = load_graph(graph_path)?;
    let projection = graph.undirected_projection();
    let keys: Vec<MetricKey> = match metric {
        Some(name) => vec![parse_metric_key(name)?],
        None => MetricKey::ALL.to_vec(),
    };
    let output = MetricsOutput {
        metrics: keys.into_iter().map(|k| dump_metric(&projection, k)).collect(),
    };
    let mut dump = serde_json::to_string_pretty(&output).expect("metric dump serializes");
    dump.push('\n');
    emit(&dump);
    Ok(())
}

// ====== export ======

fn escape_label(text: &str) -> String {
    let truncated: String = text.chars().take(48).collect();
    let mut out = String::with_capacity(truncated.len());
    for c in truncated.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

fn render_dot(graph: &KnowledgeGraph, sparse_ids: &[NodeId]) -> String {
    let projection = graph.undirected_projection();
    let mut out = String::from("graph knowledge {\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    for i in 0..projection.node_count() {
        let id = projection.id(i);
        let kind = graph
            .node(id)
            .map(|n| match n.kind {
                NodeKind::Chunk => "box",
                NodeKind::Entity => "ellipse",
            })
            .unwrap_or("ellipse");
        let mut attrs = format!(
            "label=\"{}\", shape={kind}",
            escape_label(projection.text(i))
        );
        if sparse_ids.contains(id) {
            attrs.push_str(", style=filled, fillcolor=\"#f4d35e\"");
        }
        out.push_str(&format!("  \"{}\" [{attrs}];\n", id.as_str()));
    }
    for i in 0..projection.node_count() {
        for &j in projection.neighbors(i) {
            if i < j {
                out.push_str(&format!(
                    "  \"{}\" -- \"{}\";\n",
                    projection.id(i).as_str(),
                    projection.id(j).as_str()
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn cmd_export(graph_path: &Path, format: &str, highlight: Option<&str>) -> Result<(), CliError> {
    if format != "dot" {
        return Err(CliError::Usage(format!(
            "unsupported format {format:?}; only dot is available"
        )));
    }
    let graph = load_graph(graph_path)?;
    let sparse_ids: Vec<NodeId> = match highlight {
        Some(name) => {
            let key = parse_metric_key(name)?;
            let projection = graph.undirected_projection();
            let scores = metrics::compute(&projection, key, 0);
            if scores.is_empty() {
                Vec::new()
            } else {
                detect_sparse(&scores, key, &projection, Orientation::Below)
                    .expect("non-empty scores")
                    .entries
                    .into_iter()
                    .map(|e| e.id)
                    .collect()
            }
        }
        None => Vec::new(),
    };
    emit(&render_dot(&graph, &sparse_ids));
    Ok(())
}
