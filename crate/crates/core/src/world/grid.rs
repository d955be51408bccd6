use serde::{Deserialize, Serialize};

// Absorbs representation error when a rectangle edge sits on a cell boundary.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0: x0.min(x1), y0: y0.min(y1), x1: x0.max(x1), y1: y0.max(y1) }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Binary occupancy grid with its origin at (0, 0). Cell `(col, row)` covers
/// `[col·res, (col+1)·res) × [row·res, (row+1)·res)`. Everything outside the
/// grid counts as occupied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    cols: usize,
    rows: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(cols: usize, rows: usize, resolution: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        OccupancyGrid { cols, rows, resolution, occupied: vec![false; cols * rows] }
    }

    /// Grid covering `width_m × height_m`, rounded to whole cells.
    pub fn with_extent(width_m: f64, height_m: f64, resolution: f64) -> Self {
        let cols = (width_m / resolution).round().max(1.0) as usize;
        let rows = (height_m / resolution).round().max(1.0) as usize;
        OccupancyGrid::new(cols, rows, resolution)
    }

    /// Build from rows of text, top row first; `#` marks an occupied cell.
    pub fn from_ascii(rows: &[&str], resolution: f64) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut grid = OccupancyGrid::new(width, height, resolution);
        for (i, line) in rows.iter().enumerate() {
            let row = height - 1 - i;
            for (col, ch) in line.chars().enumerate() {
                if ch == '#' {
                    grid.set(Cell::new(col, row), true);
                }
            }
        }
        grid
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width_m(&self) -> f64 {
        self.cols as f64 * self.resolution
    }

    pub fn height_m(&self) -> f64 {
        self.rows as f64 * self.resolution
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.col < self.cols && cell.row < self.rows
    }

    pub fn set(&mut self, cell: Cell, occupied: bool) {
        assert!(self.in_bounds(cell), "cell {cell:?} outside grid");
        let i = self.index(cell);
        self.occupied[i] = occupied;
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.occupied[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_occupied(cell)
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let cell = Cell::new((x / self.resolution) as usize, (y / self.resolution) as usize);
        self.in_bounds(cell).then_some(cell)
    }

    pub fn is_free_at(&self, x: f64, y: f64) -> bool {
        self.cell_at(x, y).is_some_and(|c| self.is_free(c))
    }

    pub fn center(&self, cell: Cell) -> (f64, f64) {
        ((cell.col as f64 + 0.5) * self.resolution, (cell.row as f64 + 0.5) * self.resolution)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.cols).map(move |col| Cell::new(col, row)))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    /// Mark every cell overlapping `rect` as occupied.
    pub fn fill_rect(&mut self, rect: &Rect) {
        let res = self.resolution;
        let c0 = ((rect.x0 / res) + EDGE_EPS).floor().max(0.0) as usize;
        let r0 = ((rect.y0 / res) + EDGE_EPS).floor().max(0.0) as usize;
        let c1 = (((rect.x1 / res) - EDGE_EPS).ceil().max(0.0) as usize).min(self.cols);
        let r1 = (((rect.y1 / res) - EDGE_EPS).ceil().max(0.0) as usize).min(self.rows);
        for row in r0..r1 {
            for col in c0..c1 {
                self.set(Cell::new(col, row), true);
            }
        }
    }

    /// Copy of the grid where every cell whose center lies within `radius` of
    /// an occupied cell's center is occupied too.
    pub fn inflate(&self, radius: f64) -> OccupancyGrid {
        if radius <= 0.0 {
            return self.clone();
        }
        let reach = (radius / self.resolution).floor() as isize;
        let limit = (radius / self.resolution).powi(2) + EDGE_EPS;
        let mut out = self.clone();
        for cell in self.cells().filter(|c| self.is_occupied(*c)) {
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    if ((dr * dr + dc * dc) as f64) > limit {
                        continue;
                    }
                    let col = cell.col as isize + dc;
                    let row = cell.row as isize + dr;
                    if col >= 0 && row >= 0 && (col as usize) < self.cols && (row as usize) < self.rows {
                        out.set(Cell::new(col as usize, row as usize), true);
                    }
                }
            }
        }
        out
    }

    /// True iff the straight segment between the two points crosses no
    /// occupied cell. Cells are walked exactly with a DDA traversal.
    pub fn line_of_sight(&self, from: (f64, f64), to: (f64, f64)) -> bool {
        let (Some(start), Some(end)) = (self.cell_at(from.0, from.1), self.cell_at(to.0, to.1)) else {
            return false;
        };
        let res = self.resolution;
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let step_c: isize = if dx > 0.0 { 1 } else { -1 };
        let step_r: isize = if dy > 0.0 { 1 } else { -1 };
        let t_delta_x = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
        let next_boundary = |pos: f64, idx: usize, step: isize| {
            let edge = if step > 0 { (idx + 1) as f64 * res } else { idx as f64 * res };
            edge - pos
        };
        let mut t_max_x = if dx != 0.0 { next_boundary(from.0, start.col, step_c) / dx } else { f64::INFINITY };
        let mut t_max_y = if dy != 0.0 { next_boundary(from.1, start.row, step_r) / dy } else { f64::INFINITY };

        let (mut col, mut row) = (start.col as isize, start.row as isize);
        let total = (end.col as isize - col).abs() + (end.row as isize - row).abs();
        for _ in 0..=total {
            if col < 0 || row < 0 || self.is_occupied(Cell::new(col as usize, row as usize)) {
                return false;
            }
            if col == end.col as isize && row == end.row as isize {
                return true;
            }
            if t_max_x < t_max_y {
                t_max_x += t_delta_x;
                col += step_c;
            } else {
                t_max_y += t_delta_y;
                row += step_r;
            }
        }
        // Rounding walked off the exact cell sequence; the end cell decides.
        self.is_free(end)
    }
}
