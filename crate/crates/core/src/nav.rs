//! Grid path planning and the motion services built on it: point-to-point
//! navigation and the in-place spin scan.
//!
//! Planning is A* over an 8-connected grid (unit orthogonal cost, √2 diagonal,
//! no corner cutting) with the octile heuristic. Navigation plans on a copy of
//! the map inflated by the robot radius, then drives cell-center to
//! cell-center: turn in place, then translate.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::f64::consts::{SQRT_2, TAU};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Pose};
use crate::plan::EntityName;
use crate::world::{sense, Cell, Detection, DetectorConfig, OccupancyGrid, VelocityCommand, World};

const POSITION_EPS: f64 = 1e-6;
const HEADING_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub length_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathError {
    #[error("start pose is not in a free cell")]
    StartOccupied,
    #[error("goal pose is not in a free cell")]
    GoalOccupied,
    #[error("no free path to the goal")]
    Unreachable,
}

/// The eight grid moves with their cost in cells. Diagonals are only legal
/// when both orthogonal neighbours are free.
pub fn neighbors(grid: &OccupancyGrid, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
    const MOVES: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    let free = move |dc: isize, dr: isize| -> Option<Cell> {
        let c = cell.col as isize + dc;
        let r = cell.row as isize + dr;
        if c < 0 || r < 0 {
            return None;
        }
        let n = Cell::new(c as usize, r as usize);
        grid.is_free(n).then_some(n)
    };
    MOVES.iter().filter_map(move |&(dc, dr)| {
        let n = free(dc, dr)?;
        if dc != 0 && dr != 0 {
            free(dc, 0)?;
            free(0, dr)?;
            Some((n, SQRT_2))
        } else {
            Some((n, 1.0))
        }
    })
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.col.abs_diff(b.col) as f64;
    let dy = a.row.abs_diff(b.row) as f64;
    dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(Debug, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    seq: u64,
    cell: Cell,
}

impl Eq for Open {}

impl Ord for Open {
    // min-heap on f, then prefer deeper nodes, then FIFO
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* between the cells containing `start` and `goal`.
pub fn plan_path(grid: &OccupancyGrid, start: Pose, goal: Pose) -> Result<Path, PathError> {
    let start_cell = grid.cell_at(start.x, start.y).filter(|c| grid.is_free(*c)).ok_or(PathError::StartOccupied)?;
    let goal_cell = grid.cell_at(goal.x, goal.y).filter(|c| grid.is_free(*c)).ok_or(PathError::GoalOccupied)?;
    plan_cells(grid, start_cell, goal_cell)
}

pub fn plan_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Path, PathError> {
    let idx = |c: Cell| c.row * grid.cols() + c.col;
    let n = grid.cols() * grid.rows();
    let mut best = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    best[idx(start)] = 0.0;
    open.push(Open { f: octile(start, goal), g: 0.0, seq, cell: start });

    while let Some(Open { g, cell, .. }) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        if cell == goal {
            let mut cells = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            return Ok(Path { cells, length_m: g * grid.resolution() });
        }
        for (next, step) in neighbors(grid, cell) {
            let i = idx(next);
            let cand = g + step;
            if !closed[i] && cand < best[i] {
                best[i] = cand;
                parent[i] = Some(cell);
                seq += 1;
                open.push(Open { f: cand + octile(next, goal), g: cand, seq, cell: next });
            }
        }
    }
    Err(PathError::Unreachable)
}

/// Corner points of a cell path: the first cell center, every center where
/// the direction changes, and the last center.
fn waypoints(grid: &OccupancyGrid, cells: &[Cell]) -> VecDeque<(f64, f64)> {
    let mut out = VecDeque::new();
    let Some(first) = cells.first() else {
        return out;
    };
    out.push_back(grid.center(*first));
    let dir = |a: Cell, b: Cell| (b.col as isize - a.col as isize, b.row as isize - a.row as isize);
    for w in cells.windows(3) {
        if dir(w[0], w[1]) != dir(w[1], w[2]) {
            out.push_back(grid.center(w[1]));
        }
    }
    if cells.len() > 1 {
        out.push_back(grid.center(*cells.last().unwrap()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    pub max_linear: f64,
    pub max_angular: f64,
    pub control_period: Duration,
    pub arrival_tolerance: f64,
    pub robot_radius: f64,
    pub step_budget: u32,
    pub spin_steps: usize,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            max_linear: 0.5,
            max_angular: 1.0,
            control_period: Duration::from_millis(100),
            arrival_tolerance: 0.15,
            robot_radius: 0.18,
            step_budget: 10_000,
            spin_steps: 12,
        }
    }
}

impl NavConfig {
    /// The map used for planning: obstacles grown by the robot radius.
    pub fn planning_grid(&self, grid: &OccupancyGrid) -> OccupancyGrid {
        grid.inflate(self.robot_radius)
    }

    fn dt_s(&self) -> f64 {
        self.control_period.as_secs_f64()
    }

    fn turn_command(&self, err: f64) -> VelocityCommand {
        let limit = self.max_angular;
        VelocityCommand::new(0.0, (err / self.dt_s()).clamp(-limit, limit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavFailure {
    Path(PathError),
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationOutcome {
    pub reached: bool,
    pub failure: Option<NavFailure>,
    pub trajectory: Vec<Pose>,
    pub elapsed_sim_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NavPhase {
    Translate,
    Rotate,
    Done,
}

/// Incremental path follower. Each call to [`Navigator::advance`] issues at
/// most one control step, so the caller can interleave other work per tick.
#[derive(Debug, Clone)]
pub struct Navigator {
    goal: Pose,
    cfg: NavConfig,
    waypoints: VecDeque<(f64, f64)>,
    phase: NavPhase,
    failure: Option<NavFailure>,
    ticks: u32,
    trajectory: Vec<Pose>,
    elapsed: Duration,
}

impl Navigator {
    pub fn new(planning_grid: &OccupancyGrid, world: &World, goal: Pose, cfg: &NavConfig) -> Self {
        let mut nav = Navigator {
            goal,
            cfg: cfg.clone(),
            waypoints: VecDeque::new(),
            phase: NavPhase::Translate,
            failure: None,
            ticks: 0,
            trajectory: Vec::new(),
            elapsed: Duration::ZERO,
        };
        let robot = world.robot.pose;
        if robot.distance_to(&goal) <= cfg.arrival_tolerance {
            nav.phase = NavPhase::Rotate;
            return nav;
        }
        match plan_path(planning_grid, robot, goal) {
            Ok(path) => {
                nav.waypoints = waypoints(planning_grid, &path.cells);
                nav.waypoints.push_back((goal.x, goal.y));
            }
            Err(e) => nav.finish(Some(NavFailure::Path(e))),
        }
        nav
    }

    fn finish(&mut self, failure: Option<NavFailure>) {
        self.phase = NavPhase::Done;
        self.failure = failure;
    }

    pub fn is_done(&self) -> bool {
        self.phase == NavPhase::Done
    }

    pub fn goal(&self) -> Pose {
        self.goal
    }

    fn next_command(&mut self, robot: Pose) -> Option<VelocityCommand> {
        if self.phase == NavPhase::Translate {
            if robot.distance_to(&self.goal) <= self.cfg.arrival_tolerance {
                self.phase = NavPhase::Rotate;
            } else {
                while let Some(&(x, y)) = self.waypoints.front() {
                    if (x - robot.x).hypot(y - robot.y) < POSITION_EPS {
                        self.waypoints.pop_front();
                    } else {
                        break;
                    }
                }
                let Some(&(x, y)) = self.waypoints.front() else {
                    self.phase = NavPhase::Rotate;
                    return self.next_command(robot);
                };
                let dist = (x - robot.x).hypot(y - robot.y);
                let err = normalize_angle((y - robot.y).atan2(x - robot.x) - robot.theta);
                return Some(if err.abs() > HEADING_EPS {
                    self.cfg.turn_command(err)
                } else {
                    VelocityCommand::new(self.cfg.max_linear.min(dist / self.cfg.dt_s()), 0.0)
                });
            }
        }
        if self.phase == NavPhase::Rotate {
            let err = normalize_angle(self.goal.theta - robot.theta);
            if err.abs() > HEADING_EPS {
                return Some(self.cfg.turn_command(err));
            }
            self.finish(None);
        }
        None
    }

    /// Issue one control step. Returns false once navigation has finished, in
    /// which case the world was not touched.
    pub fn advance(&mut self, world: &mut World) -> bool {
        if self.is_done() {
            return false;
        }
        if self.ticks >= self.cfg.step_budget {
            self.finish(Some(NavFailure::BudgetExhausted));
            return false;
        }
        let Some(cmd) = self.next_command(world.robot.pose) else {
            return false;
        };
        world.step_robot(cmd, self.cfg.control_period);
        self.ticks += 1;
        self.elapsed += self.cfg.control_period;
        self.trajectory.push(world.robot.pose);
        true
    }

    pub fn outcome(&self) -> NavigationOutcome {
        let final_ok = self.trajectory.last().is_none_or(|p| p.distance_to(&self.goal) <= self.cfg.arrival_tolerance);
        NavigationOutcome {
            reached: self.is_done() && self.failure.is_none() && final_ok,
            failure: self.failure,
            trajectory: self.trajectory.clone(),
            elapsed_sim_s: self.elapsed.as_secs_f64(),
        }
    }
}

/// Plan and drive to `goal`, returning once arrived or failed.
pub fn navigate_to(world: &mut World, goal: Pose, cfg: &NavConfig) -> NavigationOutcome {
    let planning = cfg.planning_grid(&world.grid);
    let mut nav = Navigator::new(&planning, world, goal, cfg);
    while nav.advance(world) {}
    nav.outcome()
}

/// Full in-place rotation in equal increments, sensing at each heading.
#[derive(Debug, Clone)]
pub struct SpinScan {
    start_heading: f64,
    increment: f64,
    steps: usize,
    sensed: usize,
    target: Option<f64>,
    cfg: NavConfig,
    found: BTreeMap<EntityName, Detection>,
}

impl SpinScan {
    pub fn new(world: &World, steps: usize, cfg: &NavConfig) -> Self {
        let steps = steps.max(1);
        SpinScan {
            start_heading: world.robot.pose.theta,
            increment: TAU / steps as f64,
            steps,
            sensed: 0,
            target: None,
            cfg: cfg.clone(),
            found: BTreeMap::new(),
        }
    }

    fn merge(&mut self, detections: Vec<Detection>) {
        for d in detections {
            match self.found.get(&d.class_name) {
                Some(prev) if prev.range <= d.range => {}
                _ => {
                    self.found.insert(d.class_name.clone(), d);
                }
            }
        }
    }

    /// Sense and rotate; returns false when the scan is complete. `on_sense`
    /// sees every raw sensor reading.
    pub fn advance(
        &mut self,
        world: &mut World,
        detector: &DetectorConfig,
        mut on_sense: impl FnMut(&World, &[Detection]),
    ) -> bool {
        loop {
            if let Some(target) = self.target {
                let err = normalize_angle(target - world.robot.pose.theta);
                if err.abs() > HEADING_EPS {
                    world.step_robot(self.cfg.turn_command(err), self.cfg.control_period);
                    return true;
                }
                self.target = None;
            }
            if self.sensed == self.steps {
                return false;
            }
            let dets = sense(world, detector);
            on_sense(world, &dets);
            self.merge(dets);
            self.sensed += 1;
            self.target = Some(normalize_angle(self.start_heading + self.sensed as f64 * self.increment));
        }
    }

    pub fn is_done(&self) -> bool {
        self.sensed == self.steps && self.target.is_none()
    }

    /// Deduplicated detections, nearest range per class, sorted by range.
    pub fn detections(&self) -> Vec<Detection> {
        let mut out: Vec<Detection> = self.found.values().cloned().collect();
        out.sort_by(|a, b| a.range.total_cmp(&b.range).then_with(|| a.class_name.cmp(&b.class_name)));
        out
    }
}

pub fn spin_scan(world: &mut World, steps: usize, cfg: &NavConfig) -> Vec<Detection> {
    let detector = world.detector.clone();
    let mut scan = SpinScan::new(world, steps, cfg);
    while scan.advance(world, &detector, |_, _| {}) {}
    scan.detections()
}
