//! Executor invariants over scripted plans on the shipped scenarios.

use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use taskbot_core::planner::{PlannerKind, PlannerRequest, PlannerResponse};
use taskbot_core::world::{builtin_scenario, load_scenario};
use taskbot_core::{Agent, AgentConfig, EventBody, ExecMode, KbMode, Plan, Planner, SubTask, SubTaskStatus, TaskResult};

/// Answers each request with the next scripted plan.
pub struct Scripted {
    plans: VecDeque<String>,
    kind: PlannerKind,
    latency: f64,
}

impl Scripted {
    pub fn new(plans: &[Plan], kind: PlannerKind, latency: f64) -> Self {
        Scripted { plans: plans.iter().map(|p| p.to_string()).collect(), kind, latency }
    }
}

impl Planner for Scripted {
    fn kind(&self) -> PlannerKind {
        self.kind
    }

    fn plan(&mut self, _: &PlannerRequest) -> PlannerResponse {
        PlannerResponse::from_text(self.plans.pop_front().unwrap_or_default(), self.latency)
    }
}

const HOME_TARGETS: [&str; 10] =
    ["kitchen", "kids room", "living room", "banana", "laptop", "teddy bear", "cup", "bed", "garage", "zebra"];
const OFFICE_TARGETS: [&str; 9] =
    ["lounge", "lobby", "office", "meeting room", "teddy bear", "bottle", "laptop", "tv", "vending machine"];

fn subtask(targets: &'static [&'static str]) -> impl Strategy<Value = SubTask> {
    prop_oneof![
        3 => prop::sample::select(targets).prop_map(SubTask::navigate),
        2 => prop::sample::select(targets).prop_map(SubTask::grab),
        1 => Just(SubTask::Drop),
    ]
}

fn plans(targets: &'static [&'static str]) -> impl Strategy<Value = Vec<Plan>> {
    prop::collection::vec(prop::collection::vec(subtask(targets), 1..5).prop_map(Plan::new), 1..4)
}

/// A shipped scenario with a short sequence of plans over its vocabulary
/// plus a few names it does not contain.
pub fn scenario_plans() -> impl Strategy<Value = (&'static str, Vec<Plan>)> {
    prop_oneof![
        plans(&HOME_TARGETS).prop_map(|p| ("home", p)),
        plans(&OFFICE_TARGETS).prop_map(|p| ("office", p)),
    ]
}

pub fn agent(scenario: &str, cfg: AgentConfig, planner: Box<dyn Planner>) -> Agent {
    let world = load_scenario(builtin_scenario(scenario).unwrap()).unwrap();
    Agent::new(world, cfg, planner).unwrap()
}

fn scripted_agent(scenario: &str, cfg: AgentConfig, plans: &[Plan]) -> Agent {
    agent(scenario, cfg, Box::new(Scripted::new(plans, PlannerKind::Remote, 0.1)))
}

pub fn run_all(agent: &mut Agent, n: usize) -> Vec<TaskResult> {
    let ids: Vec<u64> = (0..n).map(|i| agent.submit(&format!("task {i}"))).collect();
    agent.run_until_idle();
    ids.iter().map(|id| agent.result(*id).unwrap().clone()).collect()
}

/// A navigate or grab succeeds only if its target was in the knowledge base
/// when the subtask started, reconstructed from the event stream.
pub fn check_gate(scenario: &str, plans: &[Plan], mode: KbMode) -> Result<(), TestCaseError> {
    let mut a = scripted_agent(scenario, AgentConfig { kb_mode: mode, ..AgentConfig::default() }, plans);
    let mut known: HashSet<String> = a.kb().snapshot().iter().map(|n| n.to_string()).collect();
    let initial = known.len();
    run_all(&mut a, plans.len());
    let mut started_known = Vec::new();
    for e in a.take_events() {
        match e.body {
            EventBody::KbUpdate { entry } => {
                known.insert(entry.name.to_string());
            }
            EventBody::SubtaskStarted { subtask, .. } => {
                started_known.push(subtask.target().is_none_or(|t| known.contains(t.as_str())));
            }
            EventBody::SubtaskFinished { outcome, .. } => {
                let was_known = started_known.pop().expect("started before finished");
                if outcome.status == SubTaskStatus::Success {
                    prop_assert!(was_known, "{:?} succeeded without a KB entry", outcome.subtask);
                }
            }
            _ => {}
        }
    }
    if mode == KbMode::Fixed {
        prop_assert_eq!(a.kb().len(), initial);
    }
    Ok(())
}

/// A drop succeeds iff the hand holds something from an earlier successful
/// grab with no successful drop since. The hand carries over between tasks.
pub fn check_drop_causality(scenario: &str, plans: &[Plan]) -> Result<(), TestCaseError> {
    let mut a = scripted_agent(scenario, AgentConfig::default(), plans);
    let results = run_all(&mut a, plans.len());
    let mut holding = false;
    for o in results.iter().flat_map(|r| &r.outcomes) {
        let ok = o.status == SubTaskStatus::Success;
        match o.subtask {
            SubTask::Grab(_) => {
                prop_assert!(!(holding && ok), "grab succeeded with a full hand");
                holding |= ok;
            }
            SubTask::Drop => {
                prop_assert_eq!(ok, holding);
                holding = false;
            }
            SubTask::Navigate(_) => {}
        }
    }
    prop_assert_eq!(holding, a.world().robot.holding.is_some());
    Ok(())
}

/// From the same initial state, strict outcomes are a prefix of lenient ones
/// ending at the first failure.
pub fn check_strict_prefix(scenario: &str, plan: &Plan) -> Result<(), TestCaseError> {
    let run = |mode| {
        let mut a = scripted_agent(scenario, AgentConfig { exec_mode: mode, ..AgentConfig::default() }, std::slice::from_ref(plan));
        run_all(&mut a, 1).remove(0)
    };
    let strict = run(ExecMode::Strict);
    let lenient = run(ExecMode::Lenient);
    prop_assert_eq!(lenient.outcomes.len(), plan.len());
    prop_assert!(strict.outcomes.len() <= lenient.outcomes.len());
    prop_assert_eq!(&strict.outcomes[..], &lenient.outcomes[..strict.outcomes.len()]);
    match strict.outcomes.iter().position(|o| o.status == SubTaskStatus::Failed) {
        Some(i) => prop_assert_eq!(i, strict.outcomes.len() - 1),
        None => prop_assert_eq!(strict.outcomes.len(), plan.len()),
    }
    Ok(())
}

/// A fully successful plan ending in navigate(X) leaves the robot at X.
pub fn check_post_position(scenario: &str, plans: &[Plan]) -> Result<(), TestCaseError> {
    let mut a = scripted_agent(scenario, AgentConfig::default(), plans);
    for i in 0..plans.len() {
        let r = a.run_task(&format!("task {i}"));
        let plan = r.plan.as_ref().unwrap();
        if let (Some(SubTask::Navigate(x)), true) = (plan.iter().last(), r.score.matched == r.score.total) {
            let pose = a.kb().lookup(x).unwrap();
            prop_assert!(a.world().robot.pose.distance_to(&pose) <= a.config().nav.arrival_tolerance);
        }
    }
    Ok(())
}
