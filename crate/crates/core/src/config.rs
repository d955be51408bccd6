//! Run configuration and headless execution of a prompt script.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{Agent, AgentConfig, ExecMode, TaskResult};
use crate::kb::{KbError, KbMode};
use crate::metrics::{Deployment, MetricsSample, ProfileError, ResourceProfile};
use crate::nav::NavConfig;
use crate::planner::{Planner, RemoteConfig, RemotePlanner, TemplatePlanner};
use crate::world::{builtin_scenario, load_scenario, ScenarioError, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerChoice {
    Template,
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Name of a built-in scenario or path to a scenario file.
    pub scenario: String,
    pub planner: PlannerChoice,
    pub kb_mode: KbMode,
    pub exec_mode: ExecMode,
    pub config: Deployment,
    pub seed: u64,
    pub profile: ResourceProfile,
    pub nav: NavConfig,
    pub spin_after_task: bool,
    pub metrics_rate_hz: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let agent = AgentConfig::default();
        RunConfig {
            scenario: "home".into(),
            planner: PlannerChoice::Template,
            kb_mode: agent.kb_mode,
            exec_mode: agent.exec_mode,
            config: agent.deployment,
            seed: 0,
            profile: agent.profile,
            nav: agent.nav,
            spin_after_task: agent.spin_after_task,
            metrics_rate_hz: agent.metrics_rate_hz,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read scenario {path}: {source}")]
    ScenarioIo { path: String, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("invalid run configuration: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        self.profile.validate()?;
        if let PlannerChoice::Remote(remote) = &self.planner {
            if remote.endpoint.trim().is_empty() {
                return Err(RunError::Invalid("remote planner requires an endpoint".into()));
            }
            if remote.timeout_s.is_nan() || remote.timeout_s <= 0.0 {
                return Err(RunError::Invalid("remote timeout must be positive".into()));
            }
        }
        if self.metrics_rate_hz.is_nan() || self.metrics_rate_hz <= 0.0 {
            return Err(RunError::Invalid("metrics rate must be positive".into()));
        }
        Ok(())
    }

    pub fn load_world(&self) -> Result<World, RunError> {
        let text = match builtin_scenario(&self.scenario) {
            Some(text) => text.to_string(),
            None => std::fs::read_to_string(Path::new(&self.scenario))
                .map_err(|source| RunError::ScenarioIo { path: self.scenario.clone(), source })?,
        };
        Ok(load_scenario(&text)?.with_seed(self.seed))
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            kb_mode: self.kb_mode,
            exec_mode: self.exec_mode,
            deployment: self.config,
            profile: self.profile.clone(),
            nav: self.nav.clone(),
            spin_after_task: self.spin_after_task,
            metrics_rate_hz: self.metrics_rate_hz,
        }
    }

    pub fn planner(&self) -> Box<dyn Planner> {
        match &self.planner {
            PlannerChoice::Template => Box::new(TemplatePlanner::new(self.profile.clone(), self.config)),
            PlannerChoice::Remote(remote) => Box::new(RemotePlanner::new(remote.clone())),
        }
    }

    pub fn build_agent(&self) -> Result<Agent, RunError> {
        self.validate()?;
        Ok(Agent::new(self.load_world()?, self.agent_config(), self.planner())?)
    }
}

/// Prompts from a script: one per line, blank lines and `#` comments skipped.
pub fn parse_prompt_script(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub results: Vec<TaskResult>,
    pub metrics: Vec<MetricsSample>,
}

impl RunOutput {
    pub fn results_jsonl(&self) -> String {
        jsonl(&self.results)
    }

    pub fn metrics_jsonl(&self) -> String {
        jsonl(&self.metrics)
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Run every prompt in order on a fresh agent.
pub fn run_prompts(cfg: &RunConfig, prompts: &[String]) -> Result<RunOutput, RunError> {
    let mut agent = cfg.build_agent()?;
    let ids: Vec<u64> = prompts.iter().map(|p| agent.submit(p)).collect();
    agent.run_until_idle();
    agent.finish_metrics();
    Ok(RunOutput {
        results: ids.iter().map(|id| agent.result(*id).expect("finished").clone()).collect(),
        metrics: agent.metrics().samples().to_vec(),
    })
}
