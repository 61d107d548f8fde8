use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{ScoringError, SemanticRequest, SemanticScorer, SemanticScores, SemanticSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalScorerConfig {
    pub url: String,
    pub timeout_ms: u64,
    /// Additional attempts after the first failure.
    pub retries: u32,
    pub retry_backoff_ms: u64,
}

impl Default for ExternalScorerConfig {
    fn default() -> Self {
        Self { url: String::new(), timeout_ms: 30_000, retries: 2, retry_backoff_ms: 250 }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    image_png_b64: String,
}

/// Blocking HTTP client for a remote judge. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    config: ExternalScorerConfig,
    agent: ureq::Agent,
}

impl ExternalScorer {
    pub fn new(config: ExternalScorerConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Self { config, agent }
    }

    fn attempt(&self, body: &WireRequest<'_>) -> Result<SemanticScores, String> {
        let mut response = self.agent.post(&self.config.url).send_json(body).map_err(|e| e.to_string())?;
        response.body_mut().read_json::<SemanticScores>().map_err(|e| e.to_string())
    }
}

impl SemanticScorer for ExternalScorer {
    fn score(&self, request: &SemanticRequest<'_>) -> Result<SemanticScores, ScoringError> {
        let body = WireRequest {
            prompt: request.prompt,
            image_png_b64: base64::engine::general_purpose::STANDARD.encode(request.raster_png),
        };
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms * u64::from(attempt)));
            }
            match self.attempt(&body) {
                Ok(scores) => return scores.checked(),
                Err(e) => last = e,
            }
        }
        Err(ScoringError::ExternalScorerUnavailable(last))
    }

    fn source(&self) -> SemanticSource {
        SemanticSource::External
    }
}
