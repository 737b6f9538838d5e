//! Grid worlds: ground-truth maps, the robot's belief, lidar-like sensing and
//! frontier bookkeeping.
//!
//! Cells are addressed by integer `(x, y)` with `y` growing downwards (row
//! index). Positions in meters place cell `(x, y)` on the square
//! `[x·res, (x+1)·res) × [y·res, (y+1)·res)`; a cell's center is the canonical
//! position of anything standing "on" it.

mod dungeon;
mod frontier;
mod pgm;
mod sensing;

use std::collections::VecDeque;

pub use dungeon::{generate_dungeon, DungeonParams};
pub use frontier::{detect_frontiers, is_complete};
pub use pgm::{read_pgm, write_pgm, PgmImage};
pub use sensing::{cast_rays, sense, visible_cells, RayStep, SensorModel};

use crate::error::{Error, Result};

/// Integer grid coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// The 8-neighborhood, row-major from the top-left.
    pub fn neighbors8(self) -> impl Iterator<Item = Cell> {
        const OFFSETS: [(i32, i32); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFSETS
            .into_iter()
            .map(move |(dx, dy)| Cell::new(self.x + dx, self.y + dy))
    }

    pub fn neighbors4(self) -> impl Iterator<Item = Cell> {
        const OFFSETS: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        OFFSETS
            .into_iter()
            .map(move |(dx, dy)| Cell::new(self.x + dx, self.y + dy))
    }
}

/// Continuous position in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Ground-truth cell content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terrain {
    Free,
    Occupied,
}

/// Belief cell content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Knowledge {
    Unknown,
    Free,
    Occupied,
}

impl From<Terrain> for Knowledge {
    fn from(t: Terrain) -> Self {
        match t {
            Terrain::Free => Knowledge::Free,
            Terrain::Occupied => Knowledge::Occupied,
        }
    }
}

/// A rectangular occupancy grid with a metric resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid<C> {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<C>,
}

/// The environment `M`: every cell Free or Occupied.
pub type GroundTruthMap = OccupancyGrid<Terrain>;

/// The robot belief `B`: Unknown, Free or Occupied per cell.
pub type BeliefMap = OccupancyGrid<Knowledge>;

impl<C: Copy> OccupancyGrid<C> {
    pub fn filled(width: usize, height: usize, resolution: f64, value: C) -> Self {
        Self {
            width,
            height,
            resolution,
            cells: vec![value; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, resolution: f64, cells: Vec<C>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "{} cells do not fill a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Meters per cell.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c));
        c.y as usize * self.width + c.x as usize
    }

    /// Cell content, or `None` outside the grid.
    pub fn get(&self, c: Cell) -> Option<C> {
        self.contains(c).then(|| self.cells[self.index(c)])
    }

    pub fn set(&mut self, c: Cell, value: C) {
        let i = self.index(c);
        self.cells[i] = value;
    }

    pub fn cells(&self) -> &[C] {
        &self.cells
    }

    /// All coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
    }

    pub fn cell_center(&self, c: Cell) -> Point {
        Point::new(
            (c.x as f64 + 0.5) * self.resolution,
            (c.y as f64 + 0.5) * self.resolution,
        )
    }

    /// The cell containing a metric position (may lie outside the grid).
    pub fn cell_at(&self, p: Point) -> Cell {
        Cell::new(
            (p.x / self.resolution).floor() as i32,
            (p.y / self.resolution).floor() as i32,
        )
    }

    pub fn same_shape<D>(&self, other: &OccupancyGrid<D>) -> bool {
        self.width == other.width && self.height == other.height && self.resolution == other.resolution
    }
}

impl GroundTruthMap {
    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == Some(Terrain::Free)
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&t| t == Terrain::Free).count()
    }

    pub fn free_fraction(&self) -> f64 {
        self.free_count() as f64 / self.cells.len() as f64
    }

    /// Number of free cells 4-connected to `start` (0 when `start` is not free).
    pub fn flood_fill_count(&self, start: Cell) -> usize {
        if !self.is_free(start) {
            return 0;
        }
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([start]);
        seen[self.index(start)] = true;
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for n in c.neighbors4() {
                if self.is_free(n) && !seen[self.index(n)] {
                    seen[self.index(n)] = true;
                    queue.push_back(n);
                }
            }
        }
        count
    }

    /// Whether all free cells form a single 4-connected component.
    pub fn is_connected(&self) -> bool {
        match self.coords().find(|&c| self.is_free(c)) {
            Some(c) => self.flood_fill_count(c) == self.free_count(),
            None => false,
        }
    }

    /// Whether the outermost ring of cells is entirely occupied.
    pub fn has_closed_boundary(&self) -> bool {
        self.coords()
            .filter(|c| {
                c.x == 0 || c.y == 0 || c.x as usize == self.width - 1 || c.y as usize == self.height - 1
            })
            .all(|c| !self.is_free(c))
    }
}

impl BeliefMap {
    /// An all-Unknown belief shaped like `truth`.
    pub fn unknown_like(truth: &GroundTruthMap) -> Self {
        Self::filled(truth.width, truth.height, truth.resolution, Knowledge::Unknown)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.get(c) == Some(Knowledge::Free)
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&k| k == Knowledge::Free).count()
    }

    /// Count of cells marked Free or Occupied.
    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|&&k| k != Knowledge::Unknown).count()
    }

    /// Every known cell agrees with the ground truth.
    pub fn consistent_with(&self, truth: &GroundTruthMap) -> bool {
        self.same_shape(truth)
            && self
                .cells
                .iter()
                .zip(&truth.cells)
                .all(|(&k, &t)| k == Knowledge::Unknown || k == Knowledge::from(t))
    }

    /// A belief where every cell is known and equal to the truth.
    pub fn fully_known(truth: &GroundTruthMap) -> Self {
        Self {
            width: truth.width,
            height: truth.height,
            resolution: truth.resolution,
            cells: truth.cells.iter().map(|&t| t.into()).collect(),
        }
    }
}

/// An ordered list of metric waypoints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Point>) -> Self {
        Self { waypoints }
    }

    /// Sum of segment lengths.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

/// Cells intersected by the closed segment joining two cell centers.
///
/// When the segment passes exactly through a grid corner both side cells
/// are included, so a straight move can never squeeze between two
/// diagonally touching obstacles.
pub fn supercover_line(a: Cell, b: Cell) -> Vec<Cell> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (nx, ny) = (dx.abs() as i64, dy.abs() as i64);
    let (sx, sy) = (dx.signum(), dy.signum());
    let mut cells = Vec::with_capacity((nx + ny + 1) as usize);
    let mut cur = a;
    cells.push(cur);
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            cells.push(Cell::new(cur.x + sx, cur.y));
            cells.push(Cell::new(cur.x, cur.y + sy));
            cur = Cell::new(cur.x + sx, cur.y + sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            cur.x += sx;
            ix += 1;
        } else {
            cur.y += sy;
            iy += 1;
        }
        cells.push(cur);
    }
    cells
}
