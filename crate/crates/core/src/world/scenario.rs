//! Scenario documents: the JSON description of a world.
//!
//! ```json
//! {
//!   "name": "home",
//!   "grid": {"width_m": 9.0, "height_m": 4.0, "resolution_m": 0.05,
//!            "obstacles": [{"x0": 0.0, "y0": 0.0, "x1": 9.0, "y1": 0.1}]},
//!   "rooms": [{"name": "kitchen", "rect": {"x0": 3.0, "y0": 0.0, "x1": 6.0, "y1": 4.0}}],
//!   "landmarks": [{"name": "kitchen", "x": 4.5, "y": 2.0, "theta": 0.0}],
//!   "objects": [{"class": "banana", "x": 3.8, "y": 0.7}],
//!   "robot_start": {"x": 1.0, "y": 1.0, "theta": 0.0},
//!   "detector": {"fov_degrees": 60.0, "max_range_m": 2.5, "detection_probability": 1.0}
//! }
//! ```

use std::collections::{BTreeSet, HashSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sensor::{default_allowlist, DetectorConfig};
use super::vocabulary::is_known_class;
use super::{Landmark, OccupancyGrid, Rect, Robot, Room, World, WorldObject, DEFAULT_GRAB_RADIUS};
use crate::geometry::Pose;
use crate::plan::EntityName;

/// Scenarios shipped with the repository, by short name.
pub const BUILTIN_SCENARIOS: [&str; 2] = ["home", "office"];

pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    match name {
        "home" => Some(include_str!("../../../../scenarios/home.scenario")),
        "office" => Some(include_str!("../../../../scenarios/office.scenario")),
        _ => None,
    }
}

/// Prompt script for a shipped scenario, one prompt per line.
pub fn builtin_prompts(name: &str) -> Option<&'static str> {
    match name {
        "home" => Some(include_str!("../../../../scenarios/home.prompts")),
        "office" => Some(include_str!("../../../../scenarios/office.prompts")),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema error: {0}")]
    Schema(String),
    #[error("{0} lies in an occupied cell")]
    Overlap(String),
    #[error("object class {0:?} is not in the detector vocabulary")]
    UnknownClass(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub width_m: f64,
    pub height_m: f64,
    pub resolution_m: f64,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomDoc {
    pub name: EntityName,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkDoc {
    pub name: EntityName,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub class: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDoc {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

fn default_fov() -> f64 {
    60.0
}

fn default_range() -> f64 {
    2.5
}

fn default_probability() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorDoc {
    #[serde(default = "default_fov")]
    pub fov_degrees: f64,
    #[serde(default = "default_range")]
    pub max_range_m: f64,
    /// Defaults to the full detector vocabulary.
    #[serde(default)]
    pub allowlist: Option<Vec<String>>,
    #[serde(default = "default_probability")]
    pub detection_probability: f64,
}

impl Default for DetectorDoc {
    fn default() -> Self {
        DetectorDoc {
            fov_degrees: default_fov(),
            max_range_m: default_range(),
            allowlist: None,
            detection_probability: default_probability(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub grid: GridDoc,
    #[serde(default)]
    pub rooms: Vec<RoomDoc>,
    #[serde(default)]
    pub landmarks: Vec<LandmarkDoc>,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    pub robot_start: PoseDoc,
    #[serde(default)]
    pub detector: DetectorDoc,
}

fn schema(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema(msg.into())
}

fn canonical_class(raw: &str) -> Result<EntityName, ScenarioError> {
    let name = EntityName::new(raw).map_err(|e| schema(format!("object class {raw:?}: {e}")))?;
    if !is_known_class(name.as_str()) {
        return Err(ScenarioError::UnknownClass(name.to_string()));
    }
    Ok(name)
}

impl ScenarioDoc {
    pub fn into_world(self) -> Result<World, ScenarioError> {
        let g = &self.grid;
        if !(g.resolution_m > 0.0 && g.width_m > 0.0 && g.height_m > 0.0) {
            return Err(schema("grid dimensions and resolution must be positive"));
        }
        let mut grid = OccupancyGrid::with_extent(g.width_m, g.height_m, g.resolution_m);
        for rect in &g.obstacles {
            grid.fill_rect(rect);
        }

        let detector = DetectorConfig {
            fov_degrees: self.detector.fov_degrees,
            max_range: self.detector.max_range_m,
            allowlist: match &self.detector.allowlist {
                None => default_allowlist(),
                Some(list) => list.iter().map(|c| canonical_class(c)).collect::<Result<BTreeSet<_>, _>>()?,
            },
            detection_probability: self.detector.detection_probability,
        };
        detector.validate().map_err(|e| schema(e.to_string()))?;

        let mut seen = HashSet::new();
        let mut landmarks = Vec::with_capacity(self.landmarks.len());
        for l in self.landmarks {
            if !seen.insert(l.name.clone()) {
                return Err(schema(format!("duplicate landmark {:?}", l.name.as_str())));
            }
            if !grid.is_free_at(l.x, l.y) {
                return Err(ScenarioError::Overlap(format!("landmark {:?}", l.name.as_str())));
            }
            landmarks.push(Landmark { name: l.name, pose: Pose::new(l.x, l.y, l.theta) });
        }

        let mut objects = Vec::with_capacity(self.objects.len());
        for o in &self.objects {
            let class = canonical_class(&o.class)?;
            if !grid.is_free_at(o.x, o.y) {
                return Err(ScenarioError::Overlap(format!("object {:?} at ({}, {})", class.as_str(), o.x, o.y)));
            }
            objects.push(WorldObject { class, pose: Pose::new(o.x, o.y, 0.0), carried: false });
        }

        let start = self.robot_start;
        if !grid.is_free_at(start.x, start.y) {
            return Err(ScenarioError::Overlap("robot start".into()));
        }

        Ok(World {
            name: self.name,
            grid,
            rooms: self.rooms.into_iter().map(|r| Room { name: r.name, rect: r.rect }).collect(),
            landmarks,
            objects,
            robot: Robot { pose: Pose::new(start.x, start.y, start.theta), holding: None },
            detector,
            grab_radius: DEFAULT_GRAB_RADIUS,
            clock: Duration::ZERO,
            tick: 0,
            rng_seed: 0,
        })
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(document: &str) -> Result<World, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(document).map_err(|e| schema(e.to_string()))?;
    doc.into_world()
}
