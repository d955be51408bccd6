//! Geometric stand-in for the camera and object detector.
//!
//! An object is reported iff its class is allowlisted, it lies within range
//! and inside the field of view, the segment from the robot to it crosses no
//! occupied cell, and a seeded coin with the configured probability succeeds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vocabulary::COCO_CLASSES;
use super::World;
use crate::plan::EntityName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_name: EntityName,
    pub range: f64,
    pub bearing: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorConfigError {
    #[error("fov_degrees must be in (0, 360], got {0}")]
    Fov(f64),
    #[error("max_range must be positive, got {0}")]
    Range(f64),
    #[error("detection_probability must be in [0, 1], got {0}")]
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub fov_degrees: f64,
    pub max_range: f64,
    pub allowlist: BTreeSet<EntityName>,
    pub detection_probability: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            fov_degrees: 60.0,
            max_range: 2.5,
            allowlist: default_allowlist(),
            detection_probability: 1.0,
        }
    }
}

pub fn default_allowlist() -> BTreeSet<EntityName> {
    COCO_CLASSES.iter().map(|c| EntityName::new(c).expect("vocabulary is canonical")).collect()
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectorConfigError> {
        if !(self.fov_degrees > 0.0 && self.fov_degrees <= 360.0) {
            return Err(DetectorConfigError::Fov(self.fov_degrees));
        }
        if self.max_range.is_nan() || self.max_range <= 0.0 {
            return Err(DetectorConfigError::Range(self.max_range));
        }
        if !(0.0..=1.0).contains(&self.detection_probability) {
            return Err(DetectorConfigError::Probability(self.detection_probability));
        }
        Ok(())
    }

    pub fn half_fov(&self) -> f64 {
        self.fov_degrees.to_radians() / 2.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) that depends only on (seed, tick, object index).
pub(crate) fn coin(seed: u64, tick: u64, object: usize) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ tick) ^ object as u64);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Run the detector against the current world state. Carried objects are not
/// reported. Results are sorted by range, ties by class name.
pub fn sense(world: &World, cfg: &DetectorConfig) -> Vec<Detection> {
    let robot = world.robot.pose;
    let half_fov = cfg.half_fov();
    let mut out: Vec<Detection> = world
        .objects
        .iter()
        .enumerate()
        .filter(|(_, obj)| !obj.carried && cfg.allowlist.contains(&obj.class))
        .filter_map(|(idx, obj)| {
            let range = robot.distance_to(&obj.pose);
            if !(range > 0.0 && range <= cfg.max_range) {
                return None;
            }
            let bearing = robot.bearing_to(&obj.pose);
            if bearing.abs() > half_fov {
                return None;
            }
            if !world.grid.line_of_sight((robot.x, robot.y), (obj.pose.x, obj.pose.y)) {
                return None;
            }
            if coin(world.rng_seed, world.tick, idx) >= cfg.detection_probability {
                return None;
            }
            Some(Detection { class_name: obj.class.clone(), range, bearing, confidence: 1.0 })
        })
        .collect();
    out.sort_by(|a, b| a.range.total_cmp(&b.range).then_with(|| a.class_name.cmp(&b.class_name)));
    out
}
