//! The detector against an independent geometric model: an object is visible
//! iff it is in range, inside the field of view, and the straight segment to
//! it misses every occupied cell square.

use std::time::Duration;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskbot_core::world::{
    sense, vocabulary::COCO_CLASSES, DetectorConfig, OccupancyGrid, Rect, Robot, WorldObject, DEFAULT_GRAB_RADIUS,
};
use taskbot_core::{EntityName, Pose, World};

/// Closed segment against closed axis-aligned box, by slab clipping.
fn segment_hits_box(a: (f64, f64), b: (f64, f64), lo: (f64, f64), hi: (f64, f64)) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, d, l, h) in [(a.0, b.0 - a.0, lo.0, hi.0), (a.1, b.1 - a.1, lo.1, hi.1)] {
        if d == 0.0 {
            if p < l || p > h {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((l - p) / d, (h - p) / d);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

fn clear_segment(grid: &OccupancyGrid, a: (f64, f64), b: (f64, f64)) -> bool {
    let r = grid.resolution();
    grid.cells().filter(|c| grid.is_occupied(*c)).all(|c| {
        let lo = (c.col as f64 * r, c.row as f64 * r);
        !segment_hits_box(a, b, lo, (lo.0 + r, lo.1 + r))
    })
}

pub fn visible(world: &World, cfg: &DetectorConfig, obj: &WorldObject) -> bool {
    let robot = world.robot.pose;
    let (dx, dy) = (obj.pose.x - robot.x, obj.pose.y - robot.y);
    let range = (dx * dx + dy * dy).sqrt();
    let mut bearing = dy.atan2(dx) - robot.theta;
    while bearing > std::f64::consts::PI {
        bearing -= std::f64::consts::TAU;
    }
    while bearing <= -std::f64::consts::PI {
        bearing += std::f64::consts::TAU;
    }
    !obj.carried
        && cfg.allowlist.contains(&obj.class)
        && range > 0.0
        && range <= cfg.max_range
        && bearing.abs() <= cfg.fov_degrees.to_radians() / 2.0
        && clear_segment(&world.grid, (robot.x, robot.y), (obj.pose.x, obj.pose.y))
}

fn random_free_point(grid: &OccupancyGrid, rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let (x, y) = (rng.random_range(0.0..grid.width_m()), rng.random_range(0.0..grid.height_m()));
        if grid.is_free_at(x, y) {
            return (x, y);
        }
    }
}

pub fn random_world(seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = OccupancyGrid::with_extent(6.0, 6.0, 0.1);
    for _ in 0..rng.random_range(0..6) {
        let (x, y) = (rng.random_range(0.0..5.5), rng.random_range(0.0..5.5));
        let (w, h) = (rng.random_range(0.1..1.5), rng.random_range(0.1..1.5));
        grid.fill_rect(&Rect::new(x, y, (x + w).min(6.0), (y + h).min(6.0)));
    }
    let (rx, ry) = random_free_point(&grid, &mut rng);
    let mut objects = Vec::new();
    for _ in 0..rng.random_range(1..25) {
        let (x, y) = random_free_point(&grid, &mut rng);
        let class = EntityName::new(COCO_CLASSES[rng.random_range(0..COCO_CLASSES.len())]).unwrap();
        objects.push(WorldObject { class, pose: Pose::new(x, y, 0.0), carried: rng.random_bool(0.1) });
    }
    World {
        name: "random".into(),
        grid,
        rooms: vec![],
        landmarks: vec![],
        objects,
        robot: Robot { pose: Pose::new(rx, ry, rng.random_range(-3.2..3.2)), holding: None },
        detector: DetectorConfig::default(),
        grab_radius: DEFAULT_GRAB_RADIUS,
        clock: Duration::ZERO,
        tick: rng.random_range(0..1000),
        rng_seed: seed,
    }
}

/// Detections equal the oracle set, sorted by range, within the cone.
pub fn check_oracle_set(seed: u64, fov: f64, range: f64) -> Result<(), TestCaseError> {
    let world = random_world(seed);
    let cfg = DetectorConfig { fov_degrees: fov, max_range: range, ..DetectorConfig::default() };
    let got = sense(&world, &cfg);
    let mut want: Vec<&str> = world.objects.iter().filter(|o| visible(&world, &cfg, o)).map(|o| o.class.as_str()).collect();
    let mut have: Vec<&str> = got.iter().map(|d| d.class_name.as_str()).collect();
    want.sort();
    have.sort();
    prop_assert_eq!(have, want);
    prop_assert!(got.windows(2).all(|w| w[0].range <= w[1].range));
    for d in &got {
        prop_assert!(d.range > 0.0 && d.range <= range);
        prop_assert!(d.bearing.abs() <= fov.to_radians() / 2.0);
    }
    Ok(())
}

/// With dropout every report is still visible, and sensing is repeatable.
pub fn check_dropout(seed: u64, p: f64) -> Result<(), TestCaseError> {
    let world = random_world(seed);
    let cfg = DetectorConfig { detection_probability: p, ..DetectorConfig::default() };
    let visible_classes: Vec<&str> = world.objects.iter().filter(|o| visible(&world, &cfg, o)).map(|o| o.class.as_str()).collect();
    for d in sense(&world, &cfg) {
        prop_assert!(visible_classes.contains(&d.class_name.as_str()));
    }
    prop_assert_eq!(sense(&world, &cfg), sense(&world, &cfg));
    Ok(())
}

pub fn check_allowlist(seed: u64) -> Result<(), TestCaseError> {
    let world = random_world(seed);
    let cfg = DetectorConfig { allowlist: [EntityName::new("cup").unwrap()].into_iter().collect(), ..DetectorConfig::default() };
    prop_assert!(sense(&world, &cfg).iter().all(|d| d.class_name == "cup"));
    Ok(())
}
