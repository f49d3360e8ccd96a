//! TOML run configuration.
//!
//! Unknown keys are rejected rather than ignored, so typos fail fast.
//! Secrets never live here: live-mode API keys come exclusively from the
//! `MKGE_*_API_KEY` environment variables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::metrics::{MetricKey, Orientation};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    #[default]
    Offline,
    Live,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub providers: ProvidersConfig,
    pub metrics: MetricsConfig,
    pub judge: JudgeConfig,
    pub embed: EmbedConfig,
    pub louvain: LouvainConfig,
    pub paths: PathsConfig,
    pub pipeline: PipelineConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ProvidersConfig {
    pub mode: ProviderMode,
    pub chat: ChatConfig,
    pub search: SearchConfig,
    pub embed: EmbedProviderConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChatConfig {
    /// Default model id for every chat role.
    pub model: String,
    pub endpoint: Option<String>,
    /// Optional per-role overrides.
    pub question_model: Option<String>,
    pub answer_model: Option<String>,
    pub judge_model: Option<String>,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            model: "gpt-4o-mini".to_string(),
            endpoint: None,
            question_model: None,
            answer_model: None,
            judge_model: None,
        }
    }
}

/// Response field names vary by search vendor; these remap them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchFieldNames {
    pub results: String,
    pub title: String,
    pub url: String,
    pub content: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub endpoint: Option<String>,
    pub results_field: String,
    pub title_field: String,
    pub url_field: String,
    pub content_field: String,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            endpoint: None,
            results_field: "results".to_string(),
            title_field: "title".to_string(),
            url_field: "url".to_string(),
            content_field: "content".to_string(),
        }
    }
}

impl SearchConfig {
    pub fn fields(&self) -> SearchFieldNames {
        SearchFieldNames {
            results: self.results_field.clone(),
            title: self.title_field.clone(),
            url: self.url_field.clone(),
            content: self.content_field.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedProviderConfig {
    pub model: String,
    pub endpoint: Option<String>,
}

impl Default for EmbedProviderConfig {
    fn default() -> Self {
        EmbedProviderConfig {
            model: "all-MiniLM-L6-v2".to_string(),
            endpoint: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Per-metric overrides of which side of the median gets flagged.
    pub orientation: BTreeMap<MetricKey, Orientation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JudgeConfig {
    /// F1 deltas within this band count as unchanged.
    pub f1_deadband: f64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig { f1_deadband: 0.05 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedConfig {
    pub dimension: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig { dimension: 256 }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LouvainConfig {
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Directory of prompt template files; embedded defaults when unset.
    pub templates: Option<PathBuf>,
    /// Offline search corpus (JSONL); embedded default when unset.
    pub fixtures: Option<PathBuf>,
    /// Default output directory when the CLI gets no `--out`.
    pub logs: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Run queries on isolated graphs in parallel (needs the `parallel`
    /// feature; output is identical either way).
    pub parallel: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config = Self::parse(&raw)?;
        config.base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(config)
    }

    pub fn parse(raw: &str) -> Result<Self, ConfigError> {
        let config: Config =
            toml::from_str(raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.embed.dimension == 0 {
            return Err(ConfigError::Invalid("embed.dimension must be >= 1".into()));
        }
        if self.judge.f1_deadband.is_nan() || self.judge.f1_deadband < 0.0 {
            return Err(ConfigError::Invalid(
                "judge.f1_deadband must be >= 0".into(),
            ));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn templates_path(&self) -> Option<PathBuf> {
        self.paths.templates.as_deref().map(|p| self.resolve(p))
    }

    pub fn fixtures_path(&self) -> Option<PathBuf> {
        self.paths.fixtures.as_deref().map(|p| self.resolve(p))
    }

    pub fn logs_path(&self) -> Option<PathBuf> {
        self.paths.logs.as_deref().map(|p| self.resolve(p))
    }

    pub fn orientation_for(&self, key: MetricKey) -> Orientation {
        self.metrics
            .orientation
            .get(&key)
            .copied()
            .unwrap_or_default()
    }
}
