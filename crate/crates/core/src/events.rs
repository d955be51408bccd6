//! Typed events emitted by the agent while it runs.

use serde::{Deserialize, Serialize};

use crate::exec::{SubTaskOutcome, TaskResult};
use crate::geometry::Pose;
use crate::kb::KbEntry;
use crate::metrics::MetricsSample;
use crate::plan::{EntityName, SubTask};
use crate::world::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    TaskQueued {
        task_id: u64,
        prompt: String,
    },
    PlanGenerated {
        task_id: u64,
        raw_text: String,
        subtasks: Option<Vec<SubTask>>,
        error: Option<String>,
        latency_sim_s: f64,
    },
    SubtaskStarted {
        task_id: u64,
        index: usize,
        subtask: SubTask,
    },
    SubtaskFinished {
        task_id: u64,
        index: usize,
        outcome: SubTaskOutcome,
    },
    Detection {
        robot: Pose,
        detections: Vec<Detection>,
    },
    KbUpdate {
        entry: KbEntry,
    },
    TaskFinished {
        result: TaskResult,
    },
    RobotPose {
        pose: Pose,
        holding: Option<EntityName>,
    },
    MetricsSample {
        sample: MetricsSample,
    },
    Reset {
        scenario: String,
        seed: u64,
    },
}

impl EventBody {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventBody::TaskQueued { .. } => "task_queued",
            EventBody::PlanGenerated { .. } => "plan_generated",
            EventBody::SubtaskStarted { .. } => "subtask_started",
            EventBody::SubtaskFinished { .. } => "subtask_finished",
            EventBody::Detection { .. } => "detection",
            EventBody::KbUpdate { .. } => "kb_update",
            EventBody::TaskFinished { .. } => "task_finished",
            EventBody::RobotPose { .. } => "robot_pose",
            EventBody::MetricsSample { .. } => "metrics_sample",
            EventBody::Reset { .. } => "reset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// Simulation time in seconds.
    pub t: f64,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Append-only buffer with consecutive sequence numbers.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    next_seq: u64,
    pending: Vec<Event>,
}

impl EventLog {
    pub fn starting_at(seq: u64) -> Self {
        EventLog { next_seq: seq, pending: Vec::new() }
    }

    pub fn push(&mut self, t: f64, body: EventBody) {
        self.pending.push(Event { seq: self.next_seq, t, body });
        self.next_seq += 1;
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Remove and return everything pushed since the last drain.
    pub fn drain(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.pending)
    }
}
