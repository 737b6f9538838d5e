mod common;

use common::{oracles, random_belief};
use explore_core::graph::{line_of_sight, CollisionFreeGraph, Lattice};
use explore_core::world::{BeliefMap, Cell, Knowledge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;

#[test]
fn line_of_sight_matches_separating_axis_oracle_on_500_pairs() {
    let (bad, blocked) = oracles::line_of_sight_mismatches(500, 21);
    assert_eq!(bad, 0);
    assert!(blocked > 25 && blocked < 475, "oracle exercised both outcomes: {blocked} blocked");
}

#[test]
fn line_of_sight_trivial_cases() {
    let mut b = BeliefMap::filled(10, 10, 0.4, Knowledge::Free);
    let p = b.cell_center(Cell::new(3, 3));
    assert!(line_of_sight(&b, p, p));
    b.set(Cell::new(5, 3), Knowledge::Occupied);
    assert!(!line_of_sight(&b, p, b.cell_center(Cell::new(7, 3))));
}

#[test]
fn edges_match_brute_force_on_500_beliefs() {
    assert_eq!(oracles::edge_mismatches(500, 22), 0);
}

#[test]
fn l_shaped_corridor_edges() {
    let mut b = BeliefMap::filled(32, 32, 0.4, Knowledge::Occupied);
    for x in 1..28 {
        for y in 1..5 {
            b.set(Cell::new(x, y), Knowledge::Free);
        }
    }
    for y in 1..30 {
        for x in 24..28 {
            b.set(Cell::new(x, y), Knowledge::Free);
        }
    }
    assert!(oracles::edges_match(&b, Cell::new(2, 2), Lattice::default()));
}

#[test]
fn degenerate_and_open_graphs() {
    let mut b = BeliefMap::filled(16, 16, 0.4, Knowledge::Occupied);
    b.set(Cell::new(5, 5), Knowledge::Free);
    let g = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(5, 5)), Lattice::default()).unwrap();
    assert_eq!((g.len(), g.edge_count()), (1, 0));

    let open = BeliefMap::filled(40, 40, 0.4, Knowledge::Free);
    let g = CollisionFreeGraph::build(&open, open.cell_center(Cell::new(18, 18)), Lattice::default()).unwrap();
    assert_eq!(g.neighbors(g.current()).len(), 24);

    let err = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(3, 3)), Lattice::default());
    assert!(err.is_err());
}

#[test]
fn rebuilding_is_deterministic_and_lattice_anchored() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let b = random_belief(32, 32, &mut rng);
    let lattice = Lattice::default();
    let free: Vec<Cell> = oracles::belief_free_cells(&b).into_iter().filter(|c| lattice.contains(*c)).collect();
    let g1 = CollisionFreeGraph::build(&b, b.cell_center(free[0]), lattice).unwrap();
    let g2 = CollisionFreeGraph::build(&b, b.cell_center(free[0]), lattice).unwrap();
    assert_eq!(g1, g2);
    let g3 = CollisionFreeGraph::build(&b, b.cell_center(free[free.len() - 1]), lattice).unwrap();
    assert_eq!(g1.cells(), g3.cells());
    let e1: Vec<_> = g1.edges().collect();
    let e3: Vec<_> = g3.edges().collect();
    assert_eq!(e1, e3);
}

#[test]
fn utilities_and_guideposts_match_brute_force_on_500_scenes() {
    let (bad, positive) = oracles::utility_mismatches(500, 24);
    assert_eq!(bad, 0);
    assert!(positive > 500);
}

fn all_simple_paths(g: &CollisionFreeGraph, from: usize, to: usize) -> Vec<(f64, Vec<usize>)> {
    fn go(g: &CollisionFreeGraph, path: &mut Vec<usize>, len: f64, to: usize, out: &mut Vec<(f64, Vec<usize>)>) {
        let cur = *path.last().unwrap();
        if cur == to {
            out.push((len, path.clone()));
            return;
        }
        for &(n, w) in g.neighbors(cur) {
            if !path.contains(&n) {
                path.push(n);
                go(g, path, len + w, to, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut vec![from], 0.0, to, &mut out);
    out
}

#[test]
fn shortest_paths_match_exhaustive_search_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut graphs = 0;
    let mut pairs = 0;
    while graphs < 60 {
        let b = random_belief(14, 14, &mut rng);
        let free = oracles::belief_free_cells(&b);
        if free.is_empty() {
            continue;
        }
        let g = CollisionFreeGraph::build(&b, b.cell_center(free[rng.random_range(0..free.len())]), Lattice::default())
            .unwrap();
        if g.len() < 3 || g.len() > 10 {
            continue;
        }
        graphs += 1;
        for from in 0..g.len() {
            for to in 0..g.len() {
                let paths = all_simple_paths(&g, from, to);
                let got = g.shortest_path(from, to);
                let Some(best) = paths.iter().map(|p| p.0).min_by(f64::total_cmp) else {
                    assert!(got.is_none());
                    continue;
                };
                let lex = paths
                    .iter()
                    .filter(|p| p.0 <= best + EPS)
                    .map(|p| p.1.clone())
                    .min()
                    .unwrap();
                let got = got.expect("reachable pair has a path");
                assert!((got.length - best).abs() <= EPS);
                assert_eq!(got.nodes, lex);
                pairs += 1;
            }
        }
    }
    assert!(pairs > 200);
}

#[test]
fn corridor_path_is_the_corridor() {
    let mut b = BeliefMap::filled(20, 5, 0.4, Knowledge::Occupied);
    for x in 1..15 {
        b.set(Cell::new(x, 2), Knowledge::Free);
    }
    let g = CollisionFreeGraph::build(&b, b.cell_center(Cell::new(2, 2)), Lattice::default()).unwrap();
    assert_eq!(g.len(), 4);
    let p = g.shortest_path(0, 3).unwrap();
    // every route along the corridor is 4.8 m; the smallest sequence wins
    assert_eq!(p.nodes, vec![0, 1, 2, 3]);
    assert!((p.length - 4.8).abs() < EPS);
    assert_eq!(g.shortest_path(1, 1).unwrap().length, 0.0);
}
