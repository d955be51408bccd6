//! Workload generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taskbot_core::world::{Cell, OccupancyGrid};

/// A square grid with each cell blocked with probability `density`, and
/// two free cells to plan between. Corners are kept free.
pub fn random_grid(seed: u64, size: usize, density: f64) -> (OccupancyGrid, Cell, Cell) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = OccupancyGrid::new(size, size, 0.1);
    let cells: Vec<Cell> = grid.cells().collect();
    for c in cells {
        grid.set(c, rng.random_bool(density));
    }
    let (start, goal) = (Cell::new(0, 0), Cell::new(size - 1, size - 1));
    grid.set(start, false);
    grid.set(goal, false);
    (grid, start, goal)
}

pub const PROMPTS: [&str; 4] = [
    "Navigate to the garage to check if the delivery truck is still here",
    "Go to the vending machine grab a bottle and bring it to the office",
    "I'm feeling lonely, bring the teddy bear to the office",
    "please tell me a joke",
];
