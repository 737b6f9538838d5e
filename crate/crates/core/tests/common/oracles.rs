//! Randomized suites comparing geometry routines with brute-force oracles.
//! Each returns the number of mismatches it found.

use std::collections::{BTreeSet, HashSet};

use explore_core::graph::{annotate, line_of_sight, revealable_cells, CollisionFreeGraph, Lattice};
use explore_core::world::{detect_frontiers, BeliefMap, Cell, Knowledge, Point, SensorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_belief, segment_cells};

pub fn belief_free_cells(b: &BeliefMap) -> Vec<Cell> {
    b.coords().filter(|&c| b.is_free(c)).collect()
}

/// Every cell the segment between the two centers touches is known free.
pub fn clear(b: &BeliefMap, a: Cell, c: Cell) -> bool {
    segment_cells(a, c, b.width(), b.height()).iter().all(|&x| b.is_free(x))
}

/// Mostly free belief with scattered occupied and unknown cells.
pub fn sparse_belief(rng: &mut ChaCha8Rng) -> BeliefMap {
    let mut b = BeliefMap::filled(32, 32, 0.4, Knowledge::Free);
    for c in b.coords().collect::<Vec<_>>() {
        let r: f64 = rng.random();
        if r < 0.015 {
            b.set(c, Knowledge::Occupied);
        } else if r < 0.025 {
            b.set(c, Knowledge::Unknown);
        }
    }
    b
}

pub fn brute_frontiers(b: &BeliefMap) -> HashSet<Cell> {
    let mut out = HashSet::new();
    for y in 0..b.height() as i32 {
        for x in 0..b.width() as i32 {
            if b.get(Cell::new(x, y)) != Some(Knowledge::Free) {
                continue;
            }
            let mut unknown_near = false;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy) != (0, 0) && b.get(Cell::new(x + dx, y + dy)) == Some(Knowledge::Unknown) {
                        unknown_near = true;
                    }
                }
            }
            if unknown_near {
                out.insert(Cell::new(x, y));
            }
        }
    }
    out
}

/// All-pairs shortest distances by Floyd–Warshall.
pub fn floyd(g: &CollisionFreeGraph) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for &(j, w) in g.neighbors(i) {
            d[i][j] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn frontier_mismatches(count: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .filter(|_| {
            let b = random_belief(32, 32, &mut rng);
            let got: HashSet<Cell> = detect_frontiers(&b).into_iter().collect();
            got != brute_frontiers(&b)
        })
        .count()
}

/// `(mismatches, blocked pairs)` over random segment endpoints.
pub fn line_of_sight_mismatches(count: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bad, mut blocked) = (0, 0);
    for _ in 0..count {
        let b = sparse_belief(&mut rng);
        let cells: Vec<Cell> = b.coords().collect();
        let a = cells[rng.random_range(0..cells.len())];
        let c = if rng.random_bool(0.5) {
            cells[rng.random_range(0..cells.len())]
        } else {
            Cell::new((a.x + rng.random_range(-8..=8)).clamp(0, 31), (a.y + rng.random_range(-8..=8)).clamp(0, 31))
        };
        let jitter = |c: Cell, rng: &mut ChaCha8Rng| {
            Point::new((c.x as f64 + rng.random_range(0.0..1.0)) * 0.4, (c.y as f64 + rng.random_range(0.0..1.0)) * 0.4)
        };
        let (pa, pc) = (jitter(a, &mut rng), jitter(c, &mut rng));
        let expected = clear(&b, a, c);
        blocked += usize::from(!expected);
        bad += usize::from(line_of_sight(&b, pa, pc) != expected);
    }
    (bad, blocked)
}

/// Whether the built graph has exactly the brute-force nodes and edges.
pub fn edges_match(b: &BeliefMap, robot: Cell, lattice: Lattice) -> bool {
    let g = CollisionFreeGraph::build(b, b.cell_center(robot), lattice).unwrap();
    let mut nodes: BTreeSet<(i32, i32)> = belief_free_cells(b)
        .into_iter()
        .filter(|c| lattice.contains(*c))
        .map(|c| (c.y, c.x))
        .collect();
    nodes.insert((robot.y, robot.x));
    let got_nodes: BTreeSet<(i32, i32)> = g.cells().iter().map(|c| (c.y, c.x)).collect();
    if got_nodes != nodes || g.cell(g.current()) != robot {
        return false;
    }
    let r = 2 * lattice.spacing as i32;
    let mut expected = HashSet::new();
    let cells = g.cells();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let (a, c) = (cells[i], cells[j]);
            if (a.x - c.x).abs() <= r && (a.y - c.y).abs() <= r && clear(b, a, c) {
                expected.insert((i, j));
            }
        }
    }
    let got: HashSet<(usize, usize)> = g.edges().map(|(i, j)| (i.min(j), i.max(j))).collect();
    got == expected
}

pub fn edge_mismatches(count: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lattice = Lattice::default();
    let mut done = 0;
    let mut bad = 0;
    while done < count {
        let b = random_belief(32, 32, &mut rng);
        let free = belief_free_cells(&b);
        if free.is_empty() {
            continue;
        }
        bad += usize::from(!edges_match(&b, free[rng.random_range(0..free.len())], lattice));
        done += 1;
    }
    bad
}

/// `(mismatching scenes, nodes with positive utility)`. A scene mismatches
/// when any utility, guidepost or occupancy flag differs from the oracle.
pub fn utility_mismatches(count: usize, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sensor = SensorModel::default();
    let lattice = Lattice::default();
    let (mut done, mut bad, mut positive) = (0, 0, 0);
    while done < count {
        let b = random_belief(48, 48, &mut rng);
        let free = belief_free_cells(&b);
        if free.is_empty() {
            continue;
        }
        let robot = free[rng.random_range(0..free.len())];
        let g = CollisionFreeGraph::build(&b, b.cell_center(robot), lattice).unwrap();
        let frontiers = detect_frontiers(&b);
        let ig = annotate(g.clone(), &b, &frontiers, &sensor);
        let reach = sensor.range / b.resolution();
        let mut ok = ig.base == g;
        for i in 0..g.len() {
            let node = g.cell(i);
            let seen = revealable_cells(&b, g.position(i), &sensor);
            let mut u = 0;
            for f in b.coords() {
                let is_frontier = b.get(f) == Some(Knowledge::Free)
                    && f.neighbors8().any(|n| b.get(n) == Some(Knowledge::Unknown));
                let near = ((f.x - node.x) as f64).hypot((f.y - node.y) as f64) <= reach;
                if is_frontier && near && f.neighbors8().any(|n| seen.contains(&n)) {
                    u += 1;
                }
            }
            ok &= ig.utility[i] == u;
            positive += usize::from(u > 0);
        }
        let d = floyd(&g);
        let r = g.current();
        let target = (0..g.len())
            .filter(|&i| ig.utility[i] > 0 && d[r][i].is_finite())
            .min_by(|&a, &c| d[r][a].total_cmp(&d[r][c]).then(a.cmp(&c)));
        for i in 0..g.len() {
            let expected = target.is_some_and(|t| (d[r][i] + d[i][t] - d[r][t]).abs() <= 1e-6);
            ok &= ig.guidepost[i] == expected;
        }
        ok &= (0..ig.len()).filter(|&i| ig.occupancy(i)).count() == 1;
        bad += usize::from(!ok);
        done += 1;
    }
    (bad, positive)
}
