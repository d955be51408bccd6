//! HTTP client for a hosted language model.
//!
//! Wire format: `POST {system_header, prompt}` answered by `{text}`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{PlanFailure, Planner, PlannerKind, PlannerRequest, PlannerResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    /// Simulated decode time charged to the task, independent of wall time.
    #[serde(default = "default_latency")]
    pub latency_sim_s: f64,
}

fn default_path() -> String {
    "/v1/plan".into()
}

fn default_timeout_s() -> f64 {
    30.0
}

fn default_latency() -> f64 {
    crate::metrics::ResourceProfile::default().latency_cloud_s
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            path: default_path(),
            timeout_s: default_timeout_s(),
            latency_sim_s: default_latency(),
        }
    }

    pub fn url(&self) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), self.path.trim_start_matches('/'))
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    system_header: &'a str,
    prompt: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

pub struct RemotePlanner {
    config: RemoteConfig,
    agent: ureq::Agent,
    last_wall_latency: Option<Duration>,
}

impl RemotePlanner {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .build()
            .into();
        RemotePlanner { config, agent, last_wall_latency: None }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Wall time taken by the most recent request.
    pub fn last_wall_latency(&self) -> Option<Duration> {
        self.last_wall_latency
    }

    fn fetch(&self, request: &PlannerRequest) -> Result<String, PlanFailure> {
        let body = WireRequest { system_header: &request.system_header, prompt: &request.user_prompt };
        let mut resp = self.agent.post(&self.config.url()).send_json(&body).map_err(map_error)?;
        let wire: WireResponse = resp.body_mut().read_json().map_err(map_error)?;
        Ok(wire.text)
    }
}

fn map_error(err: ureq::Error) -> PlanFailure {
    match err {
        ureq::Error::StatusCode(status) => PlanFailure::HttpStatus { status },
        ureq::Error::Timeout(_) => PlanFailure::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => PlanFailure::Timeout,
        other => PlanFailure::Network { message: other.to_string() },
    }
}

impl Planner for RemotePlanner {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Remote
    }

    fn plan(&mut self, request: &PlannerRequest) -> PlannerResponse {
        let started = Instant::now();
        let result = self.fetch(request);
        self.last_wall_latency = Some(started.elapsed());
        match result {
            Ok(text) => PlannerResponse::from_text(text, self.config.latency_sim_s),
            Err(failure) => PlannerResponse::failed(failure, self.config.latency_sim_s),
        }
    }
}
