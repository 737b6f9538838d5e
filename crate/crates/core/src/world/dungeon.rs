//! Rooms-and-corridors dungeon generator.
//!
//! Rooms are axis-aligned rectangles, each anchored on a lattice point that
//! lies inside it. Corridors run along lattice rows and columns between
//! anchors (L-shaped), so every corridor carries graph nodes at the lattice
//! spacing. Optional dead-end spurs and extra loops make maps less tree-like.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Cell, GroundTruthMap, Terrain};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DungeonParams {
    pub min_rooms: usize,
    pub max_rooms: usize,
    /// Room side length range in cells (inclusive).
    pub min_room_size: usize,
    pub max_room_size: usize,
    /// Corridor width in cells, odd.
    pub corridor_width: usize,
    /// Straight spurs leaving a room and ending nowhere.
    pub dead_ends: usize,
    /// Extra corridors between random room pairs.
    pub loops: usize,
    /// Lattice the corridors are aligned to (cells).
    pub lattice_spacing: usize,
    pub lattice_offset: usize,
    /// Meters per cell.
    pub resolution: f64,
    pub max_attempts: usize,
}

impl Default for DungeonParams {
    fn default() -> Self {
        Self {
            min_rooms: 5,
            max_rooms: 8,
            min_room_size: 8,
            max_room_size: 16,
            corridor_width: 3,
            dead_ends: 2,
            loops: 1,
            lattice_spacing: 4,
            lattice_offset: 2,
            resolution: 0.4,
            max_attempts: 16,
        }
    }
}

impl DungeonParams {
    fn validate(&self, width: usize, height: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if width < 20 || height < 20 {
            return bad(format!("map must be at least 20x20 cells, got {width}x{height}"));
        }
        if self.min_rooms > self.max_rooms {
            return bad("min_rooms exceeds max_rooms".into());
        }
        if self.lattice_spacing == 0 || self.lattice_offset >= self.lattice_spacing {
            return bad("lattice offset must be below a positive spacing".into());
        }
        if self.min_room_size < self.lattice_spacing || self.min_room_size > self.max_room_size {
            return bad("room sizes must span at least one lattice spacing".into());
        }
        if self.max_room_size + 2 >= width.min(height) {
            return bad("rooms do not fit in the map".into());
        }
        if self.corridor_width % 2 == 0 {
            return bad("corridor width must be odd".into());
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Room {
    x0: i32,
    y0: i32,
    w: i32,
    h: i32,
    anchor: Cell,
}

impl Room {
    fn overlaps(&self, other: &Room, margin: i32) -> bool {
        self.x0 - margin < other.x0 + other.w
            && other.x0 - margin < self.x0 + self.w
            && self.y0 - margin < other.y0 + other.h
            && other.y0 - margin < self.y0 + self.h
    }
}

struct Carver {
    map: GroundTruthMap,
    half_width: i32,
}

impl Carver {
    fn interior(&self, c: Cell) -> bool {
        c.x >= 1 && c.y >= 1 && c.x < self.map.width() as i32 - 1 && c.y < self.map.height() as i32 - 1
    }

    fn carve(&mut self, c: Cell) {
        if self.interior(c) {
            self.map.set(c, Terrain::Free);
        }
    }

    fn room(&mut self, r: &Room) {
        for y in r.y0..r.y0 + r.h {
            for x in r.x0..r.x0 + r.w {
                self.carve(Cell::new(x, y));
            }
        }
    }

    /// Straight corridor between two cells sharing a row or a column.
    fn straight(&mut self, a: Cell, b: Cell) {
        debug_assert!(a.x == b.x || a.y == b.y);
        let hw = self.half_width;
        let (xs, xe) = (a.x.min(b.x), a.x.max(b.x));
        let (ys, ye) = (a.y.min(b.y), a.y.max(b.y));
        for y in ys - hw..=ye + hw {
            for x in xs - hw..=xe + hw {
                self.carve(Cell::new(x, y));
            }
        }
    }

    fn elbow(&mut self, a: Cell, b: Cell, horizontal_first: bool) {
        let corner = if horizontal_first { Cell::new(b.x, a.y) } else { Cell::new(a.x, b.y) };
        self.straight(a, corner);
        self.straight(corner, b);
    }
}

/// Lattice coordinates inside `[lo, hi)` along one axis.
fn lattice_in(lo: i32, hi: i32, spacing: i32, offset: i32) -> Vec<i32> {
    let first = if lo <= offset { offset } else { offset + (lo - offset + spacing - 1) / spacing * spacing };
    (0..).map(|i| first + i * spacing).take_while(|&v| v < hi).collect()
}

/// Generates a connected dungeon with a closed boundary ring.
///
/// Identical `(seed, width, height, params)` always yield the identical map.
pub fn generate_dungeon(seed: u64, width: usize, height: usize, params: &DungeonParams) -> Result<GroundTruthMap> {
    params.validate(width, height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_reason = String::new();
    for _ in 0..params.max_attempts {
        match attempt(&mut rng, width, height, params) {
            Ok(map) => return Ok(map),
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::GenerationFailed {
        seed,
        attempts: params.max_attempts,
        reason: last_reason,
    })
}

fn attempt(rng: &mut ChaCha8Rng, width: usize, height: usize, p: &DungeonParams) -> std::result::Result<GroundTruthMap, String> {
    let (w, h) = (width as i32, height as i32);
    let (spacing, offset) = (p.lattice_spacing as i32, p.lattice_offset as i32);
    let target = rng.random_range(p.min_rooms..=p.max_rooms);
    let mut rooms: Vec<Room> = Vec::with_capacity(target);
    for _ in 0..target * 40 {
        if rooms.len() == target {
            break;
        }
        let rw = rng.random_range(p.min_room_size..=p.max_room_size) as i32;
        let rh = rng.random_range(p.min_room_size..=p.max_room_size) as i32;
        let x0 = rng.random_range(1..=w - 1 - rw);
        let y0 = rng.random_range(1..=h - 1 - rh);
        let xs = lattice_in(x0, (x0 + rw).min(w - 1), spacing, offset);
        let ys = lattice_in(y0, (y0 + rh).min(h - 1), spacing, offset);
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let cx = x0 as f64 + rw as f64 / 2.0;
        let cy = y0 as f64 + rh as f64 / 2.0;
        let nearest = |vals: &[i32], c: f64| {
            *vals
                .iter()
                .min_by(|a, b| (**a as f64 - c).abs().total_cmp(&(**b as f64 - c).abs()))
                .expect("nonempty")
        };
        let room = Room {
            x0,
            y0,
            w: rw,
            h: rh,
            anchor: Cell::new(nearest(&xs, cx), nearest(&ys, cy)),
        };
        if rooms.iter().any(|r| r.overlaps(&room, 2)) {
            continue;
        }
        rooms.push(room);
    }
    if rooms.is_empty() {
        return Err("no room could be placed".into());
    }

    let mut carver = Carver {
        map: GroundTruthMap::filled(width, height, p.resolution, Terrain::Occupied),
        half_width: (p.corridor_width / 2) as i32,
    };
    for room in &rooms {
        carver.room(room);
    }
    for i in 1..rooms.len() {
        let a = rooms[i].anchor;
        let j = (0..i)
            .min_by_key(|&j| {
                let b = rooms[j].anchor;
                ((a.x - b.x).abs() + (a.y - b.y).abs(), j)
            })
            .expect("i >= 1");
        let horizontal_first = rng.random_bool(0.5);
        carver.elbow(a, rooms[j].anchor, horizontal_first);
    }
    if rooms.len() >= 2 {
        for _ in 0..p.loops {
            let i = rng.random_range(0..rooms.len());
            let j = rng.random_range(0..rooms.len());
            if i != j {
                let horizontal_first = rng.random_bool(0.5);
                carver.elbow(rooms[i].anchor, rooms[j].anchor, horizontal_first);
            }
        }
    }
    let lattice_max_x = lattice_in(1, w - 1, spacing, offset);
    let lattice_max_y = lattice_in(1, h - 1, spacing, offset);
    for _ in 0..p.dead_ends {
        let start = rooms[rng.random_range(0..rooms.len())].anchor;
        let len = rng.random_range(2..=5) * spacing;
        let end = match rng.random_range(0..4) {
            0 => Cell::new(start.x + len, start.y),
            1 => Cell::new(start.x - len, start.y),
            2 => Cell::new(start.x, start.y + len),
            _ => Cell::new(start.x, start.y - len),
        };
        let end = Cell::new(
            end.x.clamp(lattice_max_x[0], *lattice_max_x.last().unwrap()),
            end.y.clamp(lattice_max_y[0], *lattice_max_y.last().unwrap()),
        );
        carver.straight(start, end);
    }

    let map = carver.map;
    if !map.is_connected() {
        return Err("free space is not 4-connected".into());
    }
    Ok(map)
}
