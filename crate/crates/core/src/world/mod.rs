//! Deterministic 2D world: occupancy grid, rooms, objects and a unicycle robot
//! with a simple pick-and-place arm.

mod grid;
mod scenario;
mod sensor;
pub mod vocabulary;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Pose};
use crate::kb::KbEntry;
use crate::plan::EntityName;

pub use grid::{Cell, OccupancyGrid, Rect};
pub use scenario::{
    builtin_prompts, builtin_scenario, load_scenario, LandmarkDoc, ObjectDoc, PoseDoc, RoomDoc, ScenarioDoc,
    ScenarioError, BUILTIN_SCENARIOS,
};
pub use sensor::{default_allowlist, sense, Detection, DetectorConfig, DetectorConfigError};

pub const DEFAULT_GRAB_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: EntityName,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: EntityName,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub class: EntityName,
    pub pose: Pose,
    pub carried: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub pose: Pose,
    pub holding: Option<EntityName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    /// m/s along the heading.
    pub linear: f64,
    /// rad/s, counter-clockwise positive.
    pub angular: f64,
}

impl VelocityCommand {
    pub fn new(linear: f64, angular: f64) -> Self {
        VelocityCommand { linear, angular }
    }

    pub fn stop() -> Self {
        VelocityCommand::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArmCommand {
    /// Grab `target`; the robot must be within the grab radius of `reference`,
    /// the knowledge-base pose it navigated to.
    Grab { target: EntityName, reference: Pose },
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmEvent {
    pub action: crate::plan::ActionKind,
    pub object: EntityName,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArmError {
    #[error("target is out of reach")]
    OutOfReach,
    #[error("no {0:?} object exists in the world")]
    UnknownObject(String),
    #[error("already holding {0:?}")]
    HandFull(String),
    #[error("nothing to drop")]
    NotHolding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub name: String,
    pub grid: OccupancyGrid,
    pub rooms: Vec<Room>,
    pub landmarks: Vec<Landmark>,
    pub objects: Vec<WorldObject>,
    pub robot: Robot,
    pub detector: DetectorConfig,
    pub grab_radius: f64,
    pub clock: Duration,
    pub tick: u64,
    pub rng_seed: u64,
}

impl World {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn clock_s(&self) -> f64 {
        self.clock.as_secs_f64()
    }

    /// Landmarks as initial knowledge-base entries, in scenario order.
    pub fn initial_kb(&self) -> Vec<KbEntry> {
        self.landmarks.iter().map(|l| KbEntry::initial(l.name.clone(), l.pose)).collect()
    }

    pub fn room_at(&self, x: f64, y: f64) -> Option<&Room> {
        self.rooms.iter().find(|r| r.rect.contains(x, y))
    }

    /// Sorted multiset of object classes; constant under grab and drop.
    pub fn object_classes(&self) -> Vec<EntityName> {
        let mut classes: Vec<_> = self.objects.iter().map(|o| o.class.clone()).collect();
        classes.sort();
        classes
    }

    /// Advance by one unicycle integration step. Translation is rejected when
    /// the swept segment enters an occupied cell; rotation always applies.
    pub fn step_robot(&mut self, cmd: VelocityCommand, dt: Duration) {
        let dt_s = dt.as_secs_f64();
        let pose = self.robot.pose;
        let heading_mid = pose.theta + cmd.angular * dt_s / 2.0;
        let mut next = Pose::new(pose.x, pose.y, pose.theta + cmd.angular * dt_s);
        if cmd.linear != 0.0 {
            let nx = pose.x + cmd.linear * heading_mid.cos() * dt_s;
            let ny = pose.y + cmd.linear * heading_mid.sin() * dt_s;
            if self.grid.line_of_sight((pose.x, pose.y), (nx, ny)) {
                next.x = nx;
                next.y = ny;
            }
        }
        self.robot.pose = next;
        if let Some(obj) = self.objects.iter_mut().find(|o| o.carried) {
            obj.pose = next;
        }
        self.clock += dt;
        self.tick += 1;
    }

    pub fn arm_action(&mut self, cmd: ArmCommand) -> Result<ArmEvent, ArmError> {
        match cmd {
            ArmCommand::Grab { target, reference } => self.grab(target, reference),
            ArmCommand::Drop => self.drop_held(),
        }
    }

    fn grab(&mut self, target: EntityName, reference: Pose) -> Result<ArmEvent, ArmError> {
        if let Some(held) = &self.robot.holding {
            return Err(ArmError::HandFull(held.to_string()));
        }
        let robot = self.robot.pose;
        if robot.distance_to(&reference) > self.grab_radius {
            return Err(ArmError::OutOfReach);
        }
        let obj = self
            .objects
            .iter_mut()
            .filter(|o| o.class == target && !o.carried)
            .min_by(|a, b| robot.distance_to(&a.pose).total_cmp(&robot.distance_to(&b.pose)))
            .ok_or_else(|| ArmError::UnknownObject(target.to_string()))?;
        obj.carried = true;
        obj.pose = robot;
        self.robot.holding = Some(target.clone());
        Ok(ArmEvent { action: crate::plan::ActionKind::Grab, object: target, pose: robot })
    }

    fn drop_held(&mut self) -> Result<ArmEvent, ArmError> {
        let held = self.robot.holding.take().ok_or(ArmError::NotHolding)?;
        let robot = self.robot.pose;
        if let Some(obj) = self.objects.iter_mut().find(|o| o.carried) {
            obj.carried = false;
            obj.pose = robot;
        }
        Ok(ArmEvent { action: crate::plan::ActionKind::Drop, object: held, pose: robot })
    }

    pub fn heading(&self) -> f64 {
        normalize_angle(self.robot.pose.theta)
    }
}
