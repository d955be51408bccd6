//! The task loop: receive a prompt, plan it, execute the subtasks against the
//! knowledge base and the world, then spin to look around.
//!
//! The detection process and the executor share one deterministic tick. In
//! every tick the detector phase runs first and feeds the knowledge base, then
//! the executor phase advances the current task by at most one control step.
//! The world is stepped exactly once per tick.

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::events::{Event, EventBody, EventLog};
use crate::geometry::Pose;
use crate::kb::{KbError, KbMode, KnowledgeBase};
use crate::metrics::{Deployment, MetricsRecorder, MetricsSample, PlanKind, ProcessEvent, ResourceProfile};
use crate::nav::{NavConfig, Navigator, SpinScan};
use crate::plan::{EntityName, Plan, SubTask};
use crate::planner::{build_prompt, PlanFailure, Planner, PlannerResponse, Score};
use crate::world::{sense, ArmCommand, ArmError, Detection, DetectorConfig, OccupancyGrid, VelocityCommand, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    /// Stop at the first failed subtask.
    Strict,
    /// Attempt every subtask regardless of earlier failures.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubTaskStatus {
    Success,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    #[serde(rename = "not_in_kb")]
    NotInKb,
    Unreachable,
    OutOfReach,
    NotHolding,
    PlanError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTaskOutcome {
    pub subtask: SubTask,
    pub status: SubTaskStatus,
    pub reason: Option<FailureReason>,
    pub elapsed_sim_s: f64,
}

impl SubTaskOutcome {
    fn new(subtask: SubTask, reason: Option<FailureReason>, elapsed: Duration) -> Self {
        let status = if reason.is_some() { SubTaskStatus::Failed } else { SubTaskStatus::Success };
        SubTaskOutcome { subtask, status, reason, elapsed_sim_s: elapsed.as_secs_f64() }
    }

    pub fn succeeded(&self) -> bool {
        self.status == SubTaskStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: u64,
    pub prompt: String,
    pub raw_text: String,
    pub plan: Option<Plan>,
    pub plan_error: Option<PlanFailure>,
    /// Set when no plan could be executed.
    pub failure: Option<FailureReason>,
    pub outcomes: Vec<SubTaskOutcome>,
    pub score: Score,
    pub mode: ExecMode,
    pub latency_sim_s: f64,
    pub started_at: f64,
    pub finished_at: f64,
}

impl TaskResult {
    pub fn elapsed_sim_s(&self) -> f64 {
        self.finished_at - self.started_at
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub kb_mode: KbMode,
    pub exec_mode: ExecMode,
    pub deployment: Deployment,
    pub profile: ResourceProfile,
    pub nav: NavConfig,
    /// Spin in place after each task to sweep the surroundings.
    pub spin_after_task: bool,
    pub metrics_rate_hz: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            kb_mode: KbMode::Growing,
            exec_mode: ExecMode::Lenient,
            deployment: Deployment::Onboard,
            profile: ResourceProfile::default(),
            nav: NavConfig::default(),
            spin_after_task: true,
            metrics_rate_hz: MetricsRecorder::DEFAULT_RATE_HZ,
        }
    }
}

/// Feed detections taken from `robot` at `time` into the knowledge base.
/// Returns every accepted name and whether its stored pose changed.
fn absorb(kb: &mut KnowledgeBase, robot: Pose, time: f64, detections: &[Detection]) -> Vec<(EntityName, bool)> {
    let mut out = Vec::new();
    for d in detections {
        let before = kb.lookup(&d.class_name);
        if kb.insert(&d.class_name, robot, time) {
            out.push((d.class_name.clone(), before != Some(robot)));
        }
    }
    out
}

/// One detector pass: sense, and store the robot's current pose for every
/// detected class. Returns the names the knowledge base accepted.
pub fn kb_process_tick(world: &World, kb: &mut KnowledgeBase, detector: &DetectorConfig) -> Vec<EntityName> {
    let dets = sense(world, detector);
    absorb(kb, world.robot.pose, world.clock_s(), &dets).into_iter().map(|(n, _)| n).collect()
}

enum Step {
    Navigate(Navigator),
    /// Moving to the knowledge-base pose of an object before grabbing it.
    Approach { nav: Navigator, target: EntityName, reference: Pose },
}

enum Stage {
    Decoding { remaining: Duration },
    Executing { index: usize, step: Option<Step>, started: Duration },
    Spinning(SpinScan),
}

struct ActiveTask {
    id: u64,
    prompt: String,
    started_at: Duration,
    response: PlannerResponse,
    outcomes: Vec<SubTaskOutcome>,
    stage: Stage,
}

impl ActiveTask {
    fn plan(&self) -> Option<&Plan> {
        self.response.plan.as_ref().ok()
    }
}

enum Progress {
    Stepped,
    Continue,
    Finished,
}

pub struct Agent {
    world: World,
    kb: KnowledgeBase,
    planner: Box<dyn Planner>,
    cfg: AgentConfig,
    planning_grid: OccupancyGrid,
    queue: VecDeque<(u64, String)>,
    next_task_id: u64,
    active: Option<ActiveTask>,
    results: BTreeMap<u64, TaskResult>,
    metrics: MetricsRecorder,
    events: EventLog,
    last_pose: Pose,
}

impl Agent {
    pub fn new(world: World, cfg: AgentConfig, planner: Box<dyn Planner>) -> Result<Self, KbError> {
        let kb = KnowledgeBase::new(world.initial_kb(), cfg.kb_mode)?;
        let planning_grid = cfg.nav.planning_grid(&world.grid);
        let mut metrics = MetricsRecorder::new(cfg.deployment, cfg.profile.clone(), cfg.metrics_rate_hz);
        metrics
            .transition(ProcessEvent::DetectorStarted, world.clock_s())
            .expect("detector starts once");
        let last_pose = world.robot.pose;
        Ok(Agent {
            world,
            kb,
            planner,
            cfg,
            planning_grid,
            queue: VecDeque::new(),
            next_task_id: 1,
            active: None,
            results: BTreeMap::new(),
            metrics,
            events: EventLog::default(),
            last_pose,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn metrics(&self) -> &MetricsRecorder {
        &self.metrics
    }

    pub fn result(&self, task_id: u64) -> Option<&TaskResult> {
        self.results.get(&task_id)
    }

    pub fn results(&self) -> impl Iterator<Item = &TaskResult> {
        self.results.values()
    }

    /// Whether a task is running or waiting.
    pub fn is_busy(&self) -> bool {
        self.active.is_some() || !self.queue.is_empty()
    }

    pub fn active_task(&self) -> Option<u64> {
        self.active.as_ref().map(|t| t.id)
    }

    pub fn queued_tasks(&self) -> Vec<u64> {
        self.queue.iter().map(|(id, _)| *id).collect()
    }

    /// Use `seq` as the first sequence number of subsequent events.
    pub fn continue_events_from(&mut self, seq: u64) {
        self.events = EventLog::starting_at(seq);
    }

    /// Announce that this agent replaces a previous run.
    pub fn emit_reset(&mut self, scenario: &str, seed: u64) {
        self.emit(EventBody::Reset { scenario: scenario.to_string(), seed });
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.events.drain()
    }

    fn emit(&mut self, body: EventBody) {
        self.events.push(self.world.clock_s(), body);
    }

    /// Queue a prompt. Tasks run one at a time in submission order.
    pub fn submit(&mut self, prompt: &str) -> u64 {
        let id = self.next_task_id;
        self.next_task_id += 1;
        self.queue.push_back((id, prompt.to_string()));
        self.emit(EventBody::TaskQueued { task_id: id, prompt: prompt.to_string() });
        id
    }

    /// Advance the simulation by one tick.
    pub fn tick(&mut self) {
        self.detector_phase();
        if !self.executor_phase() {
            self.world.step_robot(VelocityCommand::stop(), self.cfg.nav.control_period);
        }
        let samples = self.metrics.advance(self.world.clock_s());
        self.emit_samples(samples);
        if self.world.robot.pose != self.last_pose {
            self.last_pose = self.world.robot.pose;
            self.emit(EventBody::RobotPose { pose: self.last_pose, holding: self.world.robot.holding.clone() });
        }
    }

    /// Tick until every queued task has finished.
    pub fn run_until_idle(&mut self) {
        while self.is_busy() {
            self.tick();
        }
    }

    /// Submit one prompt and run it to completion.
    pub fn run_task(&mut self, prompt: &str) -> TaskResult {
        let id = self.submit(prompt);
        self.run_until_idle();
        self.results[&id].clone()
    }

    /// Flush metrics samples up to and including the current clock.
    pub fn finish_metrics(&mut self) -> Vec<MetricsSample> {
        let samples = self.metrics.finish(self.world.clock_s());
        self.emit_samples(samples.clone());
        samples
    }

    fn emit_samples(&mut self, samples: Vec<MetricsSample>) {
        for sample in samples {
            self.events.push(sample.t, EventBody::MetricsSample { sample });
        }
    }

    fn transition(&mut self, event: ProcessEvent) {
        let samples = self
            .metrics
            .transition(event, self.world.clock_s())
            .expect("executor issues transitions in order");
        self.emit_samples(samples);
    }

    fn absorb_detections(&mut self, robot: Pose, time: f64, dets: &[Detection]) {
        if dets.is_empty() {
            return;
        }
        self.events.push(time, EventBody::Detection { robot, detections: dets.to_vec() });
        for (name, changed) in absorb(&mut self.kb, robot, time, dets) {
            if changed {
                let entry = self.kb.entry(&name).expect("just inserted").clone();
                self.events.push(time, EventBody::KbUpdate { entry });
            }
        }
    }

    fn detector_phase(&mut self) {
        let dets = sense(&self.world, &self.world.detector);
        self.absorb_detections(self.world.robot.pose, self.world.clock_s(), &dets);
    }

    /// Returns whether the world was stepped.
    fn executor_phase(&mut self) -> bool {
        loop {
            let mut task = match self.active.take() {
                Some(t) => t,
                None => match self.queue.pop_front() {
                    Some((id, prompt)) => self.start_task(id, prompt),
                    None => return false,
                },
            };
            match self.progress(&mut task) {
                Progress::Stepped => {
                    self.active = Some(task);
                    return true;
                }
                Progress::Continue => self.active = Some(task),
                Progress::Finished => self.finish_task(task),
            }
        }
    }

    fn start_task(&mut self, id: u64, prompt: String) -> ActiveTask {
        let response = match build_prompt(&self.kb, &prompt, self.planner.kind()) {
            Ok(request) => self.planner.plan(&request),
            Err(_) => PlannerResponse::failed(PlanFailure::EmptyPrompt, 0.0),
        };
        self.transition(ProcessEvent::PromptReceived);
        let remaining = Duration::from_secs_f64(response.latency_sim_s.max(0.0));
        ActiveTask {
            id,
            prompt,
            started_at: self.world.clock,
            response,
            outcomes: Vec::new(),
            stage: Stage::Decoding { remaining },
        }
    }

    fn progress(&mut self, task: &mut ActiveTask) -> Progress {
        match &mut task.stage {
            Stage::Decoding { remaining } => {
                if !remaining.is_zero() {
                    let dt = (*remaining).min(self.cfg.nav.control_period);
                    *remaining -= dt;
                    self.world.step_robot(VelocityCommand::stop(), dt);
                    return Progress::Stepped;
                }
                self.transition(ProcessEvent::DecodeFinished);
                let kind = task.plan().map_or(PlanKind::Navigation, PlanKind::of);
                self.metrics.record_latency(task.id, kind, task.response.latency_sim_s);
                self.emit(EventBody::PlanGenerated {
                    task_id: task.id,
                    raw_text: task.response.raw_text.clone(),
                    subtasks: task.plan().map(|p| p.iter().cloned().collect()),
                    error: task.response.plan.as_ref().err().map(|e| e.to_string()),
                    latency_sim_s: task.response.latency_sim_s,
                });
                task.stage = Stage::Executing { index: 0, step: None, started: self.world.clock };
                if task.plan().is_none() {
                    return self.after_execution(task);
                }
                Progress::Continue
            }
            Stage::Executing { .. } => self.execute(task),
            Stage::Spinning(scan) => {
                let detector = self.world.detector.clone();
                let mut seen = Vec::new();
                let stepped = scan.advance(&mut self.world, &detector, |w, dets| {
                    seen.push((w.robot.pose, w.clock_s(), dets.to_vec()));
                });
                for (robot, time, dets) in seen {
                    self.absorb_detections(robot, time, &dets);
                }
                if stepped {
                    Progress::Stepped
                } else {
                    Progress::Finished
                }
            }
        }
    }

    fn after_execution(&mut self, task: &mut ActiveTask) -> Progress {
        let failed = task.plan().is_none() || task.outcomes.iter().any(|o| !o.succeeded());
        let skip = self.cfg.exec_mode == ExecMode::Strict && failed;
        if self.cfg.spin_after_task && !skip {
            task.stage = Stage::Spinning(SpinScan::new(&self.world, self.cfg.nav.spin_steps, &self.cfg.nav));
            Progress::Continue
        } else {
            Progress::Finished
        }
    }

    fn execute(&mut self, task: &mut ActiveTask) -> Progress {
        let Stage::Executing { index, step, started } = &mut task.stage else {
            unreachable!("execute called outside the executing stage")
        };
        let plan = task.response.plan.as_ref().expect("executing requires a plan");
        let i = *index;
        let reason = match step {
            Some(Step::Navigate(nav)) => {
                if nav.advance(&mut self.world) {
                    return Progress::Stepped;
                }
                (!nav.outcome().reached).then_some(FailureReason::Unreachable)
            }
            Some(Step::Approach { nav, target, reference }) => {
                if nav.advance(&mut self.world) {
                    return Progress::Stepped;
                }
                let (target, reference) = (target.clone(), *reference);
                self.grab(target, reference)
            }
            None => {
                let Some(subtask) = plan.iter().nth(i) else {
                    return self.after_execution(task);
                };
                *started = self.world.clock;
                self.events.push(
                    self.world.clock_s(),
                    EventBody::SubtaskStarted { task_id: task.id, index: i, subtask: subtask.clone() },
                );
                match subtask {
                    SubTask::Navigate(target) => match self.kb.lookup(target) {
                        None => Some(FailureReason::NotInKb),
                        Some(goal) => {
                            *step = Some(Step::Navigate(Navigator::new(
                                &self.planning_grid,
                                &self.world,
                                goal,
                                &self.cfg.nav,
                            )));
                            return Progress::Continue;
                        }
                    },
                    SubTask::Grab(target) => match self.kb.lookup(target) {
                        None => Some(FailureReason::NotInKb),
                        Some(reference) if self.world.robot.pose.distance_to(&reference) <= self.world.grab_radius => {
                            self.grab(target.clone(), reference)
                        }
                        Some(reference) => {
                            let nav = Navigator::new(&self.planning_grid, &self.world, reference, &self.cfg.nav);
                            *step = Some(Step::Approach { nav, target: target.clone(), reference });
                            return Progress::Continue;
                        }
                    },
                    SubTask::Drop => match self.world.arm_action(ArmCommand::Drop) {
                        Ok(_) => None,
                        Err(_) => Some(FailureReason::NotHolding),
                    },
                }
            }
        };

        let subtask = plan.iter().nth(i).expect("index in range").clone();
        let outcome = SubTaskOutcome::new(subtask, reason, self.world.clock - *started);
        self.events.push(
            self.world.clock_s(),
            EventBody::SubtaskFinished { task_id: task.id, index: i, outcome: outcome.clone() },
        );
        *index += 1;
        *step = None;
        let stop = self.cfg.exec_mode == ExecMode::Strict && !outcome.succeeded();
        task.outcomes.push(outcome);
        if stop {
            return self.after_execution(task);
        }
        Progress::Continue
    }

    fn grab(&mut self, target: EntityName, reference: Pose) -> Option<FailureReason> {
        match self.world.arm_action(ArmCommand::Grab { target, reference }) {
            Ok(_) => None,
            Err(ArmError::NotHolding) => Some(FailureReason::NotHolding),
            Err(ArmError::OutOfReach | ArmError::UnknownObject(_) | ArmError::HandFull(_)) => {
                Some(FailureReason::OutOfReach)
            }
        }
    }

    fn finish_task(&mut self, task: ActiveTask) {
        let (plan, plan_error) = match task.response.plan {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e)),
        };
        let score = Score {
            matched: task.outcomes.iter().filter(|o| o.succeeded()).count(),
            total: plan.as_ref().map_or(0, Plan::len),
        };
        let result = TaskResult {
            task_id: task.id,
            prompt: task.prompt,
            raw_text: task.response.raw_text,
            failure: plan_error.as_ref().map(|_| FailureReason::PlanError),
            plan,
            plan_error,
            outcomes: task.outcomes,
            score,
            mode: self.cfg.exec_mode,
            latency_sim_s: task.response.latency_sim_s,
            started_at: task.started_at.as_secs_f64(),
            finished_at: self.world.clock_s(),
        };
        self.emit(EventBody::TaskFinished { result: result.clone() });
        self.results.insert(result.task_id, result);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{PlannerKind, PlannerRequest, TemplatePlanner};
    use crate::world::{builtin_scenario, load_scenario, DetectorConfig};

    fn agent(scenario: &str, cfg: AgentConfig) -> Agent {
        let world = load_scenario(builtin_scenario(scenario).unwrap()).unwrap();
        let planner = TemplatePlanner::new(cfg.profile.clone(), cfg.deployment);
        Agent::new(world, cfg, Box::new(planner)).unwrap()
    }

    fn fixed() -> AgentConfig {
        AgentConfig { kb_mode: KbMode::Fixed, ..Default::default() }
    }

    /// Planner that always answers with the same text.
    struct Canned(&'static str);

    impl Planner for Canned {
        fn kind(&self) -> PlannerKind {
            PlannerKind::Remote
        }

        fn plan(&mut self, _: &PlannerRequest) -> PlannerResponse {
            PlannerResponse::from_text(self.0.to_string(), 0.02)
        }
    }

    #[test]
    fn office_meeting_room_then_teddy_bear() {
        let mut a = agent("office", AgentConfig::default());
        let r = a.run_task("Go to the meeting room");
        assert_eq!(r.score, Score { matched: 1, total: 1 });
        assert_eq!(a.world().room_at(a.world().robot.pose.x, a.world().robot.pose.y).unwrap().name, "meeting room");
        assert!(a.kb().contains(&EntityName::new("teddy bear").unwrap()));
        let r = a.run_task("I'm feeling lonely, bring the teddy bear to the office");
        assert_eq!(r.score, Score { matched: 4, total: 4 }, "{:#?}", r.outcomes);
        let bear = a.world().objects.iter().find(|o| o.class == "teddy bear").unwrap();
        assert_eq!(a.world().room_at(bear.pose.x, bear.pose.y).unwrap().name, "office");
    }

    #[test]
    fn fixed_kb_fails_unknown_objects() {
        let mut a = agent("home", fixed());
        let r = a.run_task("I'm hungry bring the banana to the laptop");
        let reasons: Vec<_> = r.outcomes.iter().map(|o| o.reason).collect();
        assert_eq!(
            reasons,
            [
                Some(FailureReason::NotInKb),
                Some(FailureReason::NotInKb),
                Some(FailureReason::NotInKb),
                Some(FailureReason::NotHolding)
            ]
        );
        let r = a.run_task("take the teddy bear to the kids room");
        assert_eq!(r.score, Score { matched: 1, total: 4 });
        assert!(r.outcomes[2].succeeded());
        assert_eq!(a.kb().len(), 3);
    }

    #[test]
    fn strict_mode_stops_early() {
        let cfg = AgentConfig { exec_mode: ExecMode::Strict, ..fixed() };
        let mut a = agent("home", cfg);
        let (clock, pose) = (a.world().clock, a.world().robot.pose);
        let r = a.run_task("take the teddy bear to the kids room");
        assert_eq!(r.outcomes.len(), 1);
        assert_eq!(r.score, Score { matched: 0, total: 4 });
        // decode time plus the idle tick that found the failure; no spin
        assert_eq!(a.world().clock - clock, Duration::from_millis(10_100));
        assert_eq!(a.world().robot.pose, pose);
    }

    #[test]
    fn plan_error_is_empty_failure() {
        let world = load_scenario(builtin_scenario("home").unwrap()).unwrap();
        let mut a = Agent::new(world, AgentConfig::default(), Box::new(Canned("I am not able to perform tasks"))).unwrap();
        let r = a.run_task("Go to the kitchen");
        assert_eq!(r.score, Score { matched: 0, total: 0 });
        assert!(r.outcomes.is_empty());
        assert_eq!(r.failure, Some(FailureReason::PlanError));
        assert!(matches!(r.plan_error, Some(PlanFailure::Parse(_))));
    }

    #[test]
    fn kb_tick_semantics() {
        let mut world = load_scenario(builtin_scenario("home").unwrap()).unwrap();
        // face the laptop in the living room
        let laptop = world.objects.iter().find(|o| o.class == "laptop").unwrap().pose;
        let (x, y) = (laptop.x + 0.3, laptop.y - 1.0);
        world.robot.pose = Pose::new(x, y, (laptop.y - y).atan2(laptop.x - x));
        let det = DetectorConfig::default();
        let mut growing = KnowledgeBase::new(world.initial_kb(), KbMode::Growing).unwrap();
        let mut frozen = KnowledgeBase::new(world.initial_kb(), KbMode::Fixed).unwrap();
        assert!(kb_process_tick(&world, &mut growing, &det).contains(&EntityName::new("laptop").unwrap()));
        assert_eq!(growing.lookup(&EntityName::new("laptop").unwrap()), Some(world.robot.pose));
        assert!(kb_process_tick(&world, &mut frozen, &det).is_empty());
        world.objects.clear();
        assert!(kb_process_tick(&world, &mut growing, &det).is_empty());
    }

    #[test]
    fn decode_windows_and_events() {
        let mut a = agent("office", AgentConfig::default());
        let r = a.run_task("Go to the lobby");
        assert!(r.elapsed_sim_s() >= 8.0);
        a.finish_metrics();
        let windows = a.metrics().decode_intervals().to_vec();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].end - windows[0].start, 8.0);
        let events = a.take_events();
        assert!(events.windows(2).all(|w| w[1].seq == w[0].seq + 1));
        assert!(events.windows(2).all(|w| w[0].t <= w[1].t));
        let types: Vec<&str> = events
            .iter()
            .map(|e| e.body.type_name())
            .filter(|t| !matches!(*t, "robot_pose" | "metrics_sample" | "detection" | "kb_update"))
            .collect();
        assert_eq!(types, ["task_queued", "plan_generated", "subtask_started", "subtask_finished", "task_finished"]);
    }

    #[test]
    fn queue_is_sequential() {
        let mut a = agent("office", AgentConfig::default());
        let first = a.submit("Go to the lobby");
        let second = a.submit("Go to the lounge");
        a.tick();
        assert_eq!(a.active_task(), Some(first));
        assert_eq!(a.queued_tasks(), [second]);
        a.run_until_idle();
        let r1 = a.result(first).unwrap().clone();
        let r2 = a.result(second).unwrap().clone();
        assert!(r1.finished_at <= r2.started_at);
        assert_eq!((r1.score.matched, r2.score.matched), (1, 1));
    }
}
