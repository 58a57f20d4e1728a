//! Base-LM clients: an HTTP chat-completions client for real endpoints
//! and deterministic local stubs for tests and offline runs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexer;
use crate::priority::Task;
use crate::prompt::{extract_question_block, normalize_ws};

pub trait BaseLmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;

    fn name(&self) -> &str {
        "lm"
    }
}

/// JSON-over-HTTP chat-completions client. Temperature is pinned to 0.
/// The API key is read from an environment variable at call time.
pub struct HttpLmClient {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

impl HttpLmClient {
    pub fn new(endpoint: &str, model: &str, api_key_env: &str) -> Self {
        HttpLmClient {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key_env: api_key_env.to_string(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl BaseLmClient for HttpLmClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let key = std::env::var(&self.api_key_env).map_err(|_| {
            Error::Lm(format!(
                "api key environment variable {} is not set",
                self.api_key_env
            ))
        })?;
        let body = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
        };
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| Error::Lm(format!("transport: {e}")))?;
        if !response.status().is_success() {
            return Err(Error::Lm(format!("http status {}", response.status())));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| Error::Lm(format!("bad response body: {e}")))?;
        parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| Error::Lm("response had no choices".into()))
    }

    fn name(&self) -> &str {
        &self.model
    }
}

/// Deterministic stub that returns the stored gold answer for whichever
/// known question appears in the prompt's question block.
pub struct EchoStubLm {
    task: Task,
    /// (normalized question needle, gold answer)
    gold: Vec<(String, String)>,
}

impl EchoStubLm {
    pub fn new(task: Task, items: impl IntoIterator<Item = (String, String)>) -> Self {
        let gold = items
            .into_iter()
            .map(|(needle, answer)| (normalize_ws(&needle), answer))
            .collect();
        EchoStubLm { task, gold }
    }

    fn lookup(&self, prompt: &str) -> Result<&str> {
        let block = extract_question_block(prompt, self.task)
            .ok_or_else(|| Error::Lm("prompt has no question block".into()))?;
        let block = normalize_ws(block);
        for (needle, answer) in &self.gold {
            if block.contains(needle.as_str()) {
                return Ok(answer);
            }
        }
        Err(Error::Lm("no stored answer matches the prompt".into()))
    }
}

impl BaseLmClient for EchoStubLm {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.lookup(prompt).map(str::to_string)
    }

    fn name(&self) -> &str {
        "echo-stub"
    }
}

/// Deterministic stub whose answer quality degrades with the prompt: it
/// emits the gold tokens that literally occur somewhere in the prompt, so
/// ablating tokens the gold depends on lowers the score.
pub struct OverlapStubLm {
    task: Task,
    gold: Vec<(String, String)>,
}

impl OverlapStubLm {
    pub fn new(task: Task, items: impl IntoIterator<Item = (String, String)>) -> Self {
        let gold = items
            .into_iter()
            .map(|(needle, answer)| (normalize_ws(&needle), answer))
            .collect();
        OverlapStubLm { task, gold }
    }
}

impl BaseLmClient for OverlapStubLm {
    fn complete(&self, prompt: &str) -> Result<String> {
        let block = extract_question_block(prompt, self.task)
            .ok_or_else(|| Error::Lm("prompt has no question block".into()))?;
        let block_norm = normalize_ws(block);
        let gold = self
            .gold
            .iter()
            .find(|(needle, _)| block_norm.contains(needle.as_str()))
            .map(|(_, answer)| answer.as_str())
            .ok_or_else(|| Error::Lm("no stored answer matches the prompt".into()))?;

        let prompt_tokens: std::collections::HashSet<String> = lexer::lex(prompt)
            .countable_texts()
            .into_iter()
            .collect();
        let kept: Vec<String> = lexer::lex(gold)
            .countable_texts()
            .into_iter()
            .filter(|t| prompt_tokens.contains(t))
            .collect();
        Ok(kept.join(" "))
    }

    fn name(&self) -> &str {
        "overlap-stub"
    }
}

/// Always answers with a constant; occasionally useful as a null model.
pub struct ConstStubLm(pub String);

impl BaseLmClient for ConstStubLm {
    fn complete(&self, _prompt: &str) -> Result<String> {
        Ok(self.0.clone())
    }

    fn name(&self) -> &str {
        "const-stub"
    }
}

/// Fails a fixed number of times per distinct prompt before succeeding;
/// exercises the retry path deterministically.
pub struct FlakyStubLm {
    inner: EchoStubLm,
    failures_before_success: usize,
    seen: std::sync::Mutex<HashMap<String, usize>>,
}

impl FlakyStubLm {
    pub fn new(inner: EchoStubLm, failures_before_success: usize) -> Self {
        FlakyStubLm {
            inner,
            failures_before_success,
            seen: std::sync::Mutex::new(HashMap::new()),
        }
    }
}

impl BaseLmClient for FlakyStubLm {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut seen = self.seen.lock().unwrap();
        let count = seen.entry(prompt.to_string()).or_insert(0);
        if *count < self.failures_before_success {
            *count += 1;
            return Err(Error::Lm("simulated transport failure".into()));
        }
        drop(seen);
        self.inner.complete(prompt)
    }

    fn name(&self) -> &str {
        "flaky-stub"
    }
}
