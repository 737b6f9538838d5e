//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

pub mod checks;
pub mod gradcheck;
pub mod oracles;

use std::f64::consts::TAU;

use explore_core::world::{BeliefMap, Cell, GroundTruthMap, Knowledge, Point, Terrain};
use rand::Rng;

/// Map with an occupied border, random occupied rectangles and speckles.
pub fn random_truth(w: usize, h: usize, rng: &mut impl Rng) -> GroundTruthMap {
    let mut m = GroundTruthMap::filled(w, h, 0.4, Terrain::Free);
    for c in m.coords().collect::<Vec<_>>() {
        let border = c.x == 0 || c.y == 0 || c.x == w as i32 - 1 || c.y == h as i32 - 1;
        if border || rng.random_bool(0.04) {
            m.set(c, Terrain::Occupied);
        }
    }
    for _ in 0..rng.random_range(2..7) {
        let (x0, y0) = (rng.random_range(1..w as i32 - 1), rng.random_range(1..h as i32 - 1));
        let (len, horizontal) = (rng.random_range(2..12), rng.random_bool(0.5));
        for k in 0..len {
            let c = if horizontal { Cell::new(x0 + k, y0) } else { Cell::new(x0, y0 + k) };
            if m.contains(c) {
                m.set(c, Terrain::Occupied);
            }
        }
    }
    m
}

/// Belief made of free rectangles over an unknown background, with occupied
/// and unknown speckles.
pub fn random_belief(w: usize, h: usize, rng: &mut impl Rng) -> BeliefMap {
    let mut b = BeliefMap::filled(w, h, 0.4, Knowledge::Unknown);
    for _ in 0..rng.random_range(2..6) {
        let (x0, y0) = (rng.random_range(0..w as i32), rng.random_range(0..h as i32));
        let (rw, rh) = (rng.random_range(3..w as i32 / 2), rng.random_range(3..h as i32 / 2));
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                if b.contains(Cell::new(x, y)) {
                    b.set(Cell::new(x, y), Knowledge::Free);
                }
            }
        }
    }
    for c in b.coords().collect::<Vec<_>>() {
        let r: f64 = rng.random();
        if r < 0.06 {
            b.set(c, Knowledge::Occupied);
        } else if r < 0.09 {
            b.set(c, Knowledge::Unknown);
        }
    }
    b
}

pub fn free_cells<C: Copy>(cells: impl Iterator<Item = (Cell, C)>, is_free: impl Fn(C) -> bool) -> Vec<Cell> {
    cells.filter(|&(_, v)| is_free(v)).map(|(c, _)| c).collect()
}

/// Whether the closed segment between the centers of `a` and `b` meets the
/// closed unit square of cell `c` (separating-axis test in doubled integer
/// coordinates, so it is exact).
pub fn segment_meets_cell(a: Cell, b: Cell, c: Cell) -> bool {
    let (ax, ay) = (2 * a.x as i64 + 1, 2 * a.y as i64 + 1);
    let (bx, by) = (2 * b.x as i64 + 1, 2 * b.y as i64 + 1);
    let (x0, x1, y0, y1) = (2 * c.x as i64, 2 * c.x as i64 + 2, 2 * c.y as i64, 2 * c.y as i64 + 2);
    if ax.max(bx) < x0 || ax.min(bx) > x1 || ay.max(by) < y0 || ay.min(by) > y1 {
        return false;
    }
    let side = |px: i64, py: i64| ((bx - ax) * (py - ay) - (by - ay) * (px - ax)).signum();
    let s = [side(x0, y0), side(x1, y0), side(x0, y1), side(x1, y1)];
    !(s.iter().all(|&v| v > 0) || s.iter().all(|&v| v < 0))
}

/// Every cell of `grid` the closed center-to-center segment touches.
pub fn segment_cells(a: Cell, b: Cell, w: usize, h: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if segment_meets_cell(a, b, Cell::new(x, y)) {
                out.push(Cell::new(x, y));
            }
        }
    }
    out
}

/// Cells crossed by one ray, ordered by entry parameter, computed by
/// intersecting the ray with every cell square (slab method). Only cells
/// crossed over a positive length count; the range limit applies to the
/// entry point. `t` is in cells.
pub fn ray_cells(origin: (f64, f64), theta: f64, reach: f64, w: usize, h: usize) -> Vec<Cell> {
    let (dx, dy) = (theta.cos(), theta.sin());
    let slab = |o: f64, d: f64, lo: f64| -> (f64, f64) {
        if d == 0.0 {
            if o >= lo && o <= lo + 1.0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (f64::INFINITY, f64::NEG_INFINITY)
            }
        } else {
            let (t0, t1) = ((lo - o) / d, (lo + 1.0 - o) / d);
            (t0.min(t1), t0.max(t1))
        }
    };
    let mut hits: Vec<(f64, Cell)> = Vec::new();
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let (tx0, tx1) = slab(origin.0, dx, x as f64);
            let (ty0, ty1) = slab(origin.1, dy, y as f64);
            let t_in = tx0.max(ty0);
            let t_out = tx1.min(ty1);
            if t_out > t_in.max(0.0) && t_in <= reach {
                hits.push((t_in, Cell::new(x, y)));
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    hits.into_iter().map(|(_, c)| c).collect()
}

/// Ray angles used by a sensor with `n` rays.
pub fn ray_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| TAU * k as f64 / n as f64)
}

/// Random pose strictly inside a random free cell, away from cell borders.
pub fn generic_pose(free: &[Cell], resolution: f64, rng: &mut impl Rng) -> Point {
    let c = free[rng.random_range(0..free.len())];
    let (fx, fy): (f64, f64) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
    Point::new((c.x as f64 + fx) * resolution, (c.y as f64 + fy) * resolution)
}

use explore_core::oracle::{GroundTruthOracle, OracleProblem};
use explore_core::sim::SimConfig;
use explore_core::world::DungeonParams;

/// Small two-to-three room maps whose ground-truth graphs stay tiny.
pub fn micro_config() -> SimConfig {
    SimConfig {
        width: 24,
        height: 24,
        dungeon: DungeonParams {
            min_rooms: 2,
            max_rooms: 3,
            min_room_size: 4,
            max_room_size: 8,
            dead_ends: 0,
            loops: 0,
            ..DungeonParams::default()
        },
        ..SimConfig::default()
    }
}

/// Every permutation of `items` (Heap's algorithm).
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    heap(items.len(), &mut items.to_vec(), &mut out);
    out
}

/// Cheapest open path from `start` through all of `set`, by enumeration.
pub fn brute_open_path(dist: impl Fn(usize, usize) -> f64, start: usize, set: &[usize]) -> f64 {
    permutations(set)
        .into_iter()
        .map(|p| {
            let mut cur = start;
            let mut cost = 0.0;
            for n in p {
                cost += dist(cur, n);
                cur = n;
            }
            cost
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive coverage optimum: every inclusion-minimal set of reachable
/// nodes that, together with the robot node, sees all frontiers, times every
/// visiting order. Returns `(cost, smallest cover size)`, or `None` when the
/// graph has more than `max_candidates` candidate nodes.
pub fn exhaustive_coverage(oracle: &GroundTruthOracle, problem: &OracleProblem, max_candidates: usize) -> Option<(f64, usize)> {
    let g = oracle.graph();
    let r = problem.robot;
    let cand: Vec<usize> = (0..g.len()).filter(|&j| j != r && oracle.distance(r, j).is_finite()).collect();
    if cand.len() > max_candidates {
        return None;
    }
    let nf = problem.frontiers.len();
    let sees = |node: usize| -> Vec<bool> {
        let vis = oracle.visible_from(node);
        problem.frontiers.iter().map(|f| vis.contains(f)).collect()
    };
    let base = sees(r);
    let masks: Vec<Vec<bool>> = cand.iter().map(|&c| sees(c)).collect();
    let mut subsets: Vec<u32> = (0..1u32 << cand.len()).collect();
    subsets.sort_by_key(|s| s.count_ones());
    let mut covers: Vec<u32> = Vec::new();
    let mut best = f64::INFINITY;
    let mut smallest = usize::MAX;
    for s in subsets {
        if covers.iter().any(|&c| c & s == c) {
            continue;
        }
        let ok = (0..nf).all(|k| base[k] || (0..cand.len()).any(|i| s >> i & 1 == 1 && masks[i][k]));
        if !ok {
            continue;
        }
        covers.push(s);
        let set: Vec<usize> = (0..cand.len()).filter(|&i| s >> i & 1 == 1).map(|i| cand[i]).collect();
        smallest = smallest.min(set.len());
        best = best.min(brute_open_path(|a, b| oracle.distance(a, b), r, &set));
    }
    Some((best, smallest))
}
