//! Language-model clients: HTTP chat completions, scripted responses, and
//! record/replay of transcripts keyed by prompt hash.
//!
//! A transcript file is a JSON array of
//! `{"prompt_hash": "<sha256 hex>", "response": "..."}` records. Responses
//! for the same hash are served in file order; the last one repeats.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("language model unavailable: {0}")]
    Unavailable(String),
    #[error("language model returned an empty response")]
    EmptyResponse,
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub prompt_hash: String,
    pub response: String,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, LlmError> {
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::Unavailable(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LlmError::Unavailable(format!("{}: {e}", path.display())))
}

pub fn write_transcript(path: &Path, records: &[TranscriptRecord]) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(records).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}

/// Serves recorded responses. Prompts with no record are reported as an
/// unavailable model.
#[derive(Debug, Default)]
pub struct ReplayClient {
    queues: Mutex<HashMap<String, (Vec<String>, usize)>>,
}

impl ReplayClient {
    pub fn new(records: impl IntoIterator<Item = TranscriptRecord>) -> Self {
        let mut map: HashMap<String, (Vec<String>, usize)> = HashMap::new();
        for r in records {
            map.entry(r.prompt_hash).or_default().0.push(r.response);
        }
        ReplayClient { queues: Mutex::new(map) }
    }

    /// Every `*.json` file in `dir`, in file-name order.
    pub fn from_dir(dir: &Path) -> Result<Self, LlmError> {
        let entries = std::fs::read_dir(dir).map_err(|e| LlmError::Unavailable(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut records = Vec::new();
        for p in paths {
            records.extend(read_transcript(&p)?);
        }
        Ok(ReplayClient::new(records))
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        Ok(ReplayClient::new(read_transcript(path)?))
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let hash = prompt_hash(prompt);
        let mut q = self.queues.lock().expect("replay lock poisoned");
        let Some((responses, next)) = q.get_mut(&hash) else {
            return Err(LlmError::Unavailable(format!("no recorded response for prompt {hash}")));
        };
        let r = responses[(*next).min(responses.len() - 1)].clone();
        *next += 1;
        Ok(r)
    }
}

/// Returns canned responses in order regardless of the prompt.
#[derive(Debug, Default)]
pub struct ScriptedClient {
    responses: Mutex<VecDeque<String>>,
}

impl ScriptedClient {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        ScriptedClient {
            responses: Mutex::new(responses.into_iter().map(Into::into).collect()),
        }
    }
}

impl LlmClient for ScriptedClient {
    fn complete(&self, _prompt: &str) -> Result<String, LlmError> {
        self.responses
            .lock()
            .expect("script lock poisoned")
            .pop_front()
            .ok_or_else(|| LlmError::Unavailable("script exhausted".into()))
    }
}

/// Wraps another client and keeps every exchange for [`write_transcript`].
#[derive(Debug, Default)]
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<Vec<TranscriptRecord>>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<TranscriptRecord> {
        self.log.lock().expect("record lock poisoned").clone()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        write_transcript(path, &self.records())
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let response = self.inner.complete(prompt)?;
        self.log.lock().expect("record lock poisoned").push(TranscriptRecord {
            prompt_hash: prompt_hash(prompt),
            response: response.clone(),
        });
        Ok(response)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// e.g. `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: "LTLNAV_API_KEY".into(),
            temperature: 0.0,
            timeout_secs: 120,
        }
    }
}

/// OpenAI-compatible chat-completion endpoint; one user message per call.
#[cfg(feature = "http")]
pub struct HttpClient {
    config: HttpConfig,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        HttpClient { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }
}

#[cfg(feature = "http")]
impl LlmClient for HttpClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&url);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let reply: serde_json::Value = req
            .send_json(&body)
            .map_err(|e| LlmError::Unavailable(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Unavailable(e.to_string()))?;
        let text = reply["choices"][0]["message"]["content"].as_str().unwrap_or_default();
        if text.trim().is_empty() {
            return Err(LlmError::EmptyResponse);
        }
        Ok(text.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            prompt_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn replay_serves_in_order_then_repeats() {
        let h = prompt_hash("p");
        let c = ReplayClient::new([
            TranscriptRecord {
                prompt_hash: h.clone(),
                response: "one".into(),
            },
            TranscriptRecord {
                prompt_hash: h,
                response: "two".into(),
            },
        ]);
        assert_eq!(c.complete("p").unwrap(), "one");
        assert_eq!(c.complete("p").unwrap(), "two");
        assert_eq!(c.complete("p").unwrap(), "two");
        assert!(matches!(c.complete("other"), Err(LlmError::Unavailable(_))));
    }

    #[test]
    fn record_then_replay_round_trip() {
        let rec = RecordingClient::new(ScriptedClient::new(["a", "b"]));
        assert_eq!(rec.complete("x").unwrap(), "a");
        assert_eq!(rec.complete("y").unwrap(), "b");
        assert!(rec.complete("z").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        rec.save(&path).unwrap();
        let replay = ReplayClient::from_dir(dir.path()).unwrap();
        assert_eq!(replay.complete("y").unwrap(), "b");
        assert_eq!(replay.complete("x").unwrap(), "a");
        let again = ReplayClient::from_file(&path).unwrap();
        assert_eq!(again.complete("x").unwrap(), "a");
    }
}
