//! Live HTTP adapters: a chat-completions endpoint, a JSON search endpoint,
//! and an embedding endpoint.
//!
//! All three POST JSON with a bearer token, retry transport failures twice
//! (0.5 s then 2 s), and surface the third failure as
//! [`ProviderError::Unavailable`]. Malformed responses fail immediately.
//! These are only constructed in live mode; the test suite never builds
//! them.

use std::time::Duration;

use serde_json::{json, Value};

use crate::config::{ChatConfig, SearchFieldNames};

use super::{validate_search, ChatProvider, ChatRequest, EmbedProvider, ProviderError, SearchProvider, SearchResult};

const BACKOFFS: [Duration; 2] = [Duration::from_millis(500), Duration::from_millis(2000)];

/// Runs `op`, retrying `Unavailable` failures per the backoff schedule.
/// `sleep` is injectable so tests can observe the schedule without waiting.
pub(crate) fn with_retries<T>(
    mut op: impl FnMut() -> Result<T, ProviderError>,
    sleep: impl Fn(Duration),
) -> Result<T, ProviderError> {
    let mut backoffs = BACKOFFS.iter();
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(e @ ProviderError::Unavailable(_)) => match backoffs.next() {
                Some(delay) => sleep(*delay),
                None => return Err(e),
            },
            Err(e) => return Err(e),
        }
    }
}

fn http_client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(60))
        .build()
        .expect("client builds")
}

fn post_json(
    client: &reqwest::blocking::Client,
    endpoint: &str,
    api_key: &str,
    body: &Value,
) -> Result<Value, ProviderError> {
    let response = client
        .post(endpoint)
        .bearer_auth(api_key)
        .json(body)
        .send()
        .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
    let status = response.status();
    if !status.is_success() {
        return Err(ProviderError::Unavailable(format!("http {status}")));
    }
    response
        .json::<Value>()
        .map_err(|e| ProviderError::Malformed(e.to_string()))
}

/// Model ids per chat role; unset roles fall back to the default model.
#[derive(Debug, Clone)]
pub struct ChatModels {
    pub default: String,
    pub question: Option<String>,
    pub answer: Option<String>,
    pub judge: Option<String>,
}

impl ChatModels {
    pub fn from_config(cfg: &ChatConfig) -> Self {
        ChatModels {
            default: cfg.model.clone(),
            question: cfg.question_model.clone(),
            answer: cfg.answer_model.clone(),
            judge: cfg.judge_model.clone(),
        }
    }

    fn for_template(&self, template_id: &str) -> &str {
        let role = match template_id {
            "question_gen" => &self.question,
            "answer" => &self.answer,
            "judge" => &self.judge,
            _ => &None,
        };
        role.as_deref().unwrap_or(&self.default)
    }
}

pub struct LiveChat {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    models: ChatModels,
}

impl LiveChat {
    pub fn new(endpoint: String, api_key: String, models: ChatModels) -> Self {
        LiveChat {
            client: http_client(),
            endpoint,
            api_key,
            models,
        }
    }

    pub(crate) fn request_body(&self, request: &ChatRequest) -> Value {
        json!({
            "model": self.models.for_template(&request.template_id),
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        })
    }

    pub(crate) fn parse_response(value: &Value) -> Result<String, ProviderError> {
        value
            .get("choices")
            .and_then(Value::as_array)
            .and_then(|c| c.first())
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::Malformed("missing choices[0].message.content".into())
            })
    }
}

impl ChatProvider for LiveChat {
    fn chat(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        request.validate()?;
        let body = self.request_body(request);
        with_retries(
            || {
                let value = post_json(&self.client, &self.endpoint, &self.api_key, &body)?;
                Self::parse_response(&value)
            },
            std::thread::sleep,
        )
    }
}

pub struct LiveSearch {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    fields: SearchFieldNames,
}

impl LiveSearch {
    pub fn new(endpoint: String, api_key: String, fields: SearchFieldNames) -> Self {
        LiveSearch {
            client: http_client(),
            endpoint,
            api_key,
            fields,
        }
    }

    pub(crate) fn parse_response(
        value: &Value,
        fields: &SearchFieldNames,
    ) -> Result<Vec<SearchResult>, ProviderError> {
        let rows = value
            .get(&fields.results)
            .and_then(Value::as_array)
            .ok_or_else(|| {
                ProviderError::Malformed(format!("missing '{}' array", fields.results))
            })?;
        rows.iter()
            .map(|row| {
                let content = row
                    .get(&fields.content)
                    .and_then(Value::as_str)
                    .ok_or_else(|| {
                        ProviderError::Malformed(format!(
                            "result missing '{}'",
                            fields.content
                        ))
                    })?;
                Ok(SearchResult {
                    title: row
                        .get(&fields.title)
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string(),
                    url: row
                        .get(&fields.url)
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string(),
                    content: content.to_string(),
                })
            })
            .collect()
    }
}

impl SearchProvider for LiveSearch {
    fn search(
        &self,
        query: &str,
        max_results: usize,
    ) -> Result<Vec<SearchResult>, ProviderError> {
        validate_search(query, max_results)?;
        let body = json!({"query": query, "max_results": max_results});
        with_retries(
            || {
                let value = post_json(&self.client, &self.endpoint, &self.api_key, &body)?;
                Self::parse_response(&value, &self.fields)
            },
            std::thread::sleep,
        )
    }
}

pub struct LiveEmbed {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    model: String,
    dimension: usize,
}

impl LiveEmbed {
    pub fn new(endpoint: String, api_key: String, model: String, dimension: usize) -> Self {
        LiveEmbed {
            client: http_client(),
            endpoint,
            api_key,
            model,
            dimension,
        }
    }

    pub(crate) fn parse_response(
        value: &Value,
        dimension: usize,
    ) -> Result<Vec<f64>, ProviderError> {
        let raw = value
            .get("data")
            .and_then(Value::as_array)
            .and_then(|d| d.first())
            .and_then(|d| d.get("embedding"))
            .and_then(Value::as_array)
            .ok_or_else(|| {
                ProviderError::Malformed("missing data[0].embedding".into())
            })?;
        let mut vector: Vec<f64> = raw
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    ProviderError::Malformed("non-numeric embedding entry".into())
                })
            })
            .collect::<Result<_, _>>()?;
        if vector.len() != dimension {
            return Err(ProviderError::Malformed(format!(
                "embedding length {} does not match configured dimension {}",
                vector.len(),
                dimension
            )));
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        Ok(vector)
    }
}

impl EmbedProvider for LiveEmbed {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if text.is_empty() {
            return Ok(vec![0.0; self.dimension]);
        }
        let body = json!({"model": self.model, "input": text});
        with_retries(
            || {
                let value = post_json(&self.client, &self.endpoint, &self.api_key, &body)?;
                Self::parse_response(&value, self.dimension)
            },
            std::thread::sleep,
        )
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
