//! Shortest paths by exhaustive relaxation, sharing no code with the planner.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskbot_core::nav::plan_cells;
use taskbot_core::world::{Cell, OccupancyGrid};

fn free(grid: &OccupancyGrid, c: isize, r: isize) -> bool {
    c >= 0 && r >= 0 && (c as usize) < grid.cols() && (r as usize) < grid.rows() && !grid.is_occupied(Cell::new(c as usize, r as usize))
}

/// Cost of a single move, if legal: orthogonal 1, diagonal √2 with both
/// side cells free.
pub fn step_cost(grid: &OccupancyGrid, a: Cell, b: Cell) -> Option<f64> {
    let (ac, ar, bc, br) = (a.col as isize, a.row as isize, b.col as isize, b.row as isize);
    let (dc, dr) = (bc - ac, br - ar);
    if dc.abs() > 1 || dr.abs() > 1 || (dc, dr) == (0, 0) || !free(grid, ac, ar) || !free(grid, bc, br) {
        return None;
    }
    if dc != 0 && dr != 0 {
        (free(grid, ac + dc, ar) && free(grid, ac, ar + dr)).then_some(SQRT_2)
    } else {
        Some(1.0)
    }
}

/// Bellman-Ford style sweeps over every cell until nothing improves.
/// Cost in cells, or None when the goal is unreachable.
pub fn oracle_cost(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    let (cols, rows) = (grid.cols(), grid.rows());
    let mut dist = vec![f64::INFINITY; cols * rows];
    dist[start.row * cols + start.col] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for row in 0..rows {
            for col in 0..cols {
                let d = dist[row * cols + col];
                if d.is_infinite() {
                    continue;
                }
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let (c, r) = (col as isize + dc, row as isize + dr);
                        if c < 0 || r < 0 || c as usize >= cols || r as usize >= rows {
                            continue;
                        }
                        let next = Cell::new(c as usize, r as usize);
                        if let Some(w) = step_cost(grid, Cell::new(col, row), next) {
                            let i = next.row * cols + next.col;
                            if d + w < dist[i] - 1e-12 {
                                dist[i] = d + w;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
    }
    let d = dist[goal.row * cols + goal.col];
    d.is_finite().then_some(d)
}

pub struct GridCase {
    pub grid: OccupancyGrid,
    pub start: Cell,
    pub goal: Cell,
}

/// A 20×20 grid with each cell blocked with probability `density`, and
/// start and goal drawn from the free cells.
pub fn random_case(seed: u64, density: f64) -> GridCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = OccupancyGrid::new(20, 20, 1.0);
    let cells: Vec<Cell> = grid.cells().collect();
    for c in &cells {
        grid.set(*c, rng.random_bool(density));
    }
    let free: Vec<Cell> = cells.iter().copied().filter(|c| grid.is_free(*c)).collect();
    if free.is_empty() {
        grid.set(cells[0], false);
        return GridCase { grid, start: cells[0], goal: cells[0] };
    }
    let start = free[rng.random_range(0..free.len())];
    let goal = free[rng.random_range(0..free.len())];
    GridCase { grid, start, goal }
}

/// A* against the oracle: same reachability, same cost, and the returned
/// path is a chain of legal moves from start to goal whose cost matches.
pub fn check_case(case: &GridCase) -> Result<(), String> {
    let oracle = oracle_cost(&case.grid, case.start, case.goal);
    match (plan_cells(&case.grid, case.start, case.goal), oracle) {
        (Err(_), None) => Ok(()),
        (Err(e), Some(c)) => Err(format!("A* failed ({e}) but the oracle found cost {c}")),
        (Ok(p), None) => Err(format!("A* found {} cells but the oracle says unreachable", p.cells.len())),
        (Ok(p), Some(c)) => {
            if p.cells.first() != Some(&case.start) || p.cells.last() != Some(&case.goal) {
                return Err("path does not join start and goal".into());
            }
            let mut walked = 0.0;
            for w in p.cells.windows(2) {
                walked += step_cost(&case.grid, w[0], w[1]).ok_or_else(|| format!("illegal move {:?} -> {:?}", w[0], w[1]))?;
            }
            let length = p.length_m / case.grid.resolution();
            if (walked - c).abs() > 1e-9 || (length - c).abs() > 1e-9 {
                return Err(format!("cost {length} (walked {walked}) but optimum is {c}"));
            }
            Ok(())
        }
    }
}
