//! Chat, search, and embedding backends.
//!
//! Offline backends are pure functions of their inputs so whole runs are
//! reproducible; live backends speak plain HTTP and are only constructed in
//! live mode. The pipeline counts every call through [`CallCounters`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
pub use crate::config::ProviderMode;

pub mod live;
pub mod offline;

pub use offline::{FixtureDoc, FixtureSearch, HashedEmbed, ScriptedChat};

/// Environment variables holding live-mode secrets. Secrets never appear in
/// config files.
pub const CHAT_KEY_VAR: &str = "MKGE_CHAT_API_KEY";
pub const SEARCH_KEY_VAR: &str = "MKGE_SEARCH_API_KEY";
pub const EMBED_KEY_VAR: &str = "MKGE_EMBED_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A chat call: the rendered prompt plus the structured pieces it was
/// rendered from, so deterministic backends can key on content rather than
/// prose.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub template_id: String,
    pub slots: BTreeMap<String, String>,
    pub prompt: String,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(
        template_id: impl Into<String>,
        slots: BTreeMap<String, String>,
        prompt: impl Into<String>,
    ) -> Self {
        ChatRequest {
            template_id: template_id.into(),
            slots,
            prompt: prompt.into(),
            temperature: 0.0,
        }
    }

    /// Stable digest of `(template_id, slots)`; scripted backends key their
    /// replies on this, never on the raw prompt text.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.template_id.as_bytes());
        for (k, v) in &self.slots {
            hasher.update([0x1e]);
            hasher.update(k.as_bytes());
            hasher.update([0x1f]);
            hasher.update(v.as_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }

    fn validate(&self) -> Result<(), ProviderError> {
        if self.prompt.is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ProviderError::InvalidRequest(
                "temperature must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub title: String,
    pub url: String,
    pub content: String,
}

pub trait ChatProvider: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

pub trait SearchProvider: Send + Sync {
    /// Empty result lists are a valid outcome, not an error.
    fn search(&self, query: &str, max_results: usize)
        -> Result<Vec<SearchResult>, ProviderError>;
}

pub trait EmbedProvider: Send + Sync {
    /// Returns a unit-norm vector, or the zero vector for empty input.
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    fn dimension(&self) -> usize;
}

fn validate_search(query: &str, max_results: usize) -> Result<(), ProviderError> {
    if query.is_empty() {
        return Err(ProviderError::InvalidRequest("empty query".into()));
    }
    if max_results == 0 {
        return Err(ProviderError::InvalidRequest(
            "max_results must be >= 1".into(),
        ));
    }
    Ok(())
}

/// Single access point for provider calls so one place can observe every
/// call (the pipeline counts and logs through this).
pub trait ProviderGateway {
    fn chat(&mut self, request: &ChatRequest) -> Result<String, ProviderError>;
    fn search(
        &mut self,
        query: &str,
        max_results: usize,
    ) -> Result<Vec<SearchResult>, ProviderError>;
    fn embed(&mut self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

/// Pass-through gateway with no accounting; handy in tests and library use.
pub struct PlainGateway<'a> {
    pub set: &'a ProviderSet,
}

impl ProviderGateway for PlainGateway<'_> {
    fn chat(&mut self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.set.chat.chat(request)
    }

    fn search(
        &mut self,
        query: &str,
        max_results: usize,
    ) -> Result<Vec<SearchResult>, ProviderError> {
        self.set.search.search(query, max_results)
    }

    fn embed(&mut self, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.set.embed.embed(text)
    }
}

/// Per-run call totals; shared across worker threads.
#[derive(Debug, Default)]
pub struct CallCounters {
    pub chat: AtomicU64,
    pub search: AtomicU64,
    pub embed: AtomicU64,
}

impl CallCounters {
    pub fn snapshot(&self) -> (u64, u64, u64) {
        (
            self.chat.load(Ordering::Relaxed),
            self.search.load(Ordering::Relaxed),
            self.embed.load(Ordering::Relaxed),
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("missing required environment variable {0}")]
    MissingSecret(&'static str),
    #[error("fixture corpus error: {0}")]
    Fixture(String),
    #[error("invalid provider configuration: {0}")]
    Invalid(String),
}

/// The three backends for one run, tagged with the mode they were built in.
pub struct ProviderSet {
    pub mode: ProviderMode,
    pub chat: Box<dyn ChatProvider>,
    pub search: Box<dyn SearchProvider>,
    pub embed: Box<dyn EmbedProvider>,
}

impl ProviderSet {
    /// Builds the backends the config asks for. Live mode requires the
    /// `MKGE_*_API_KEY` environment variables and never falls back to
    /// offline silently.
    pub fn from_config(config: &Config) -> Result<Self, BuildError> {
        match config.providers.mode {
            ProviderMode::Offline => {
                let corpus = match config.fixtures_path() {
                    Some(path) => std::fs::read_to_string(&path).map_err(|e| {
                        BuildError::Fixture(format!("{}: {e}", path.display()))
                    })?,
                    None => offline::DEFAULT_CORPUS.to_string(),
                };
                let search = FixtureSearch::from_jsonl(&corpus)
                    .map_err(BuildError::Fixture)?;
                Ok(ProviderSet {
                    mode: ProviderMode::Offline,
                    chat: Box::new(ScriptedChat::new()),
                    search: Box::new(search),
                    embed: Box::new(HashedEmbed::new(config.embed.dimension)),
                })
            }
            ProviderMode::Live => {
                let chat_key = require_env(CHAT_KEY_VAR)?;
                let search_key = require_env(SEARCH_KEY_VAR)?;
                let embed_key = require_env(EMBED_KEY_VAR)?;
                let chat = live::LiveChat::new(
                    config.providers.chat.endpoint.clone().ok_or(
                        BuildError::Invalid("providers.chat.endpoint is required in live mode".into()),
                    )?,
                    chat_key,
                    live::ChatModels::from_config(&config.providers.chat),
                );
                let search = live::LiveSearch::new(
                    config.providers.search.endpoint.clone().ok_or(
                        BuildError::Invalid(
                            "providers.search.endpoint is required in live mode".into(),
                        ),
                    )?,
                    search_key,
                    config.providers.search.fields(),
                );
                let embed = live::LiveEmbed::new(
                    config.providers.embed.endpoint.clone().ok_or(
                        BuildError::Invalid(
                            "providers.embed.endpoint is required in live mode".into(),
                        ),
                    )?,
                    embed_key,
                    config.providers.embed.model.clone(),
                    config.embed.dimension,
                );
                Ok(ProviderSet {
                    mode: ProviderMode::Live,
                    chat: Box::new(chat),
                    search: Box::new(search),
                    embed: Box::new(embed),
                })
            }
        }
    }
}

fn require_env(var: &'static str) -> Result<String, BuildError> {
    match std::env::var(var) {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(BuildError::MissingSecret(var)),
    }
}
