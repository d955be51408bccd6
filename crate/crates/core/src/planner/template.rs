//! Rule-based decomposition of the two task skeletons.

use std::sync::LazyLock;

use regex::Regex;

use super::{PlanFailure, Planner, PlannerKind, PlannerRequest, PlannerResponse};
use crate::metrics::{decode_duration, Deployment, PlanKind, ResourceProfile};
use crate::plan::{EntityName, Plan, SubTask};

/// Words that end an entity mention in free text.
pub(crate) const STOP_WORDS: [&str; 9] = ["to", "and", "then", "so", "for", "if", "because", "please", "now"];

/// Words the patterns themselves use; entities containing them would be ambiguous.
pub(crate) const PATTERN_WORDS: [&str; 9] = ["go", "navigate", "grab", "bring", "take", "move", "carry", "it", "to"];

static FETCH_FROM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\bgo to (.+?) grab (?:a|an|the) (.+?) and bring it to (.+)$").unwrap()
});
static CARRY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:bring|take|move|carry) the (.+?) to (.+)$").unwrap());
static GO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:go|navigate) to (.+)$").unwrap());

fn normalize_prompt(prompt: &str) -> String {
    let lowered = prompt.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'");
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Cut a captured span at the first punctuation mark or stop word.
fn clip_entity(span: &str) -> Option<EntityName> {
    let mut kept = Vec::new();
    for word in span.split(' ') {
        if STOP_WORDS.contains(&word) {
            break;
        }
        match word.find([',', '.', ';', '!', '?']) {
            Some(i) => {
                kept.push(&word[..i]);
                break;
            }
            None => kept.push(word),
        }
    }
    EntityName::new(&kept.join(" ")).ok()
}

/// Decompose a prompt into subtasks, or `None` if no skeleton matches.
pub(crate) fn decompose(prompt: &str) -> Option<Plan> {
    let text = normalize_prompt(prompt);
    if let Some(c) = FETCH_FROM.captures(&text) {
        if let (Some(a), Some(b), Some(dest)) = (clip_entity(&c[1]), clip_entity(&c[2]), clip_entity(&c[3])) {
            return Some(Plan::new(vec![SubTask::Navigate(a), SubTask::Grab(b), SubTask::Navigate(dest), SubTask::Drop]));
        }
    }
    if let Some(c) = CARRY.captures(&text) {
        if let (Some(b), Some(dest)) = (clip_entity(&c[1]), clip_entity(&c[2])) {
            return Some(Plan::new(vec![
                SubTask::Navigate(b.clone()),
                SubTask::Grab(b),
                SubTask::Navigate(dest),
                SubTask::Drop,
            ]));
        }
    }
    if let Some(c) = GO.captures(&text) {
        if let Some(a) = clip_entity(&c[1]) {
            return Some(Plan::new(vec![SubTask::Navigate(a)]));
        }
    }
    None
}

/// Stateless planner form: decompose the request and charge the decode time
/// the resource model assigns to the resulting plan.
pub fn template_plan(request: &PlannerRequest, profile: &ResourceProfile, config: Deployment) -> PlannerResponse {
    match decompose(&request.user_prompt) {
        Some(plan) => {
            let latency = decode_duration(profile, PlanKind::of(&plan), config);
            PlannerResponse::from_text(plan.to_string(), latency)
        }
        None => PlannerResponse::failed(
            PlanFailure::NoPatternMatch,
            decode_duration(profile, PlanKind::Navigation, config),
        ),
    }
}

#[derive(Debug, Clone)]
pub struct TemplatePlanner {
    pub profile: ResourceProfile,
    pub config: Deployment,
}

impl TemplatePlanner {
    pub fn new(profile: ResourceProfile, config: Deployment) -> Self {
        TemplatePlanner { profile, config }
    }
}

impl Planner for TemplatePlanner {
    fn kind(&self) -> PlannerKind {
        PlannerKind::Template
    }

    fn plan(&mut self, request: &PlannerRequest) -> PlannerResponse {
        template_plan(request, &self.profile, self.config)
    }
}
