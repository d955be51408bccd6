//! Core of the task planner: plan language, knowledge base, simulated world,
//! grid navigation, planners, executor and resource model.

pub mod config;
pub mod events;
pub mod exec;
pub mod geometry;
pub mod kb;
pub mod metrics;
pub mod nav;
pub mod plan;
pub mod planner;
pub mod replicate;
pub mod world;

pub use config::{run_prompts, PlannerChoice, RunConfig, RunError, RunOutput};
pub use events::{Event, EventBody};
pub use exec::{Agent, AgentConfig, ExecMode, FailureReason, SubTaskOutcome, SubTaskStatus, TaskResult};
pub use geometry::Pose;
pub use kb::{EntrySource, KbEntry, KbMode, KnowledgeBase, SharedKnowledgeBase};
pub use metrics::{Deployment, MetricsSample, ResourceProfile};
pub use plan::{parse_plan, serialize_plan, EntityName, ParseError, Plan, SubTask};
pub use planner::{grade, Planner, PlannerKind, PlannerRequest, PlannerResponse, Score};
pub use world::{Detection, OccupancyGrid, World};
