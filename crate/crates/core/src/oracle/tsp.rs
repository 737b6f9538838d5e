//! Open-path travelling salesman over a small distance matrix: the tour
//! starts at a fixed index and does not return.

use crate::error::{Error, Result};

/// Largest instance (including the start) solved exactly by Held-Karp.
pub const EXACT_LIMIT: usize = 13;

const IMPROVE_EPS: f64 = 1e-12;

/// A visiting order over matrix indices, starting with the start index.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

/// Solves the open-path TSP over `dist` (square, symmetric, meters) from `start`.
///
/// Instances up to [`EXACT_LIMIT`] points use exact dynamic programming;
/// larger ones use nearest-neighbor construction then 2-opt to a local optimum.
pub fn solve_open_tsp(dist: &[Vec<f64>], start: usize) -> Result<Tour> {
    let n = dist.len();
    assert!(start < n, "start index out of range");
    for i in 0..n {
        for j in 0..n {
            if !dist[i][j].is_finite() {
                return Err(Error::NoPath { from: i, to: j });
            }
        }
    }
    if n <= EXACT_LIMIT {
        Ok(held_karp(dist, start))
    } else {
        let mut order = nearest_neighbor(dist, start);
        two_opt(dist, &mut order);
        let cost = tour_cost(dist, &order);
        Ok(Tour { order, cost })
    }
}

pub fn tour_cost(dist: &[Vec<f64>], order: &[usize]) -> f64 {
    order.windows(2).map(|w| dist[w[0]][w[1]]).sum()
}

fn held_karp(dist: &[Vec<f64>], start: usize) -> Tour {
    let n = dist.len();
    let others: Vec<usize> = (0..n).filter(|&i| i != start).collect();
    let m = others.len();
    if m == 0 {
        return Tour {
            order: vec![start],
            cost: 0.0,
        };
    }
    let full = (1usize << m) - 1;
    // cost[mask][j]: shortest path from start through `mask`, ending at others[j]
    let mut cost = vec![f64::INFINITY; (full + 1) * m];
    let mut parent = vec![usize::MAX; (full + 1) * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = dist[start][others[j]];
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = here + dist[others[j]][others[k]];
                if c < cost[next * m + k] {
                    cost[next * m + k] = c;
                    parent[next * m + k] = j;
                }
            }
        }
    }
    let (mut last, mut best) = (0, f64::INFINITY);
    for j in 0..m {
        if cost[full * m + j] < best {
            best = cost[full * m + j];
            last = j;
        }
    }
    let mut rev = Vec::with_capacity(m);
    let mut mask = full;
    let mut j = last;
    loop {
        rev.push(others[j]);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    let mut order = vec![start];
    order.extend(rev.into_iter().rev());
    Tour { order, cost: best }
}

fn nearest_neighbor(dist: &[Vec<f64>], start: usize) -> Vec<usize> {
    let n = dist.len();
    let mut visited = vec![false; n];
    let mut order = vec![start];
    visited[start] = true;
    let mut cur = start;
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| dist[cur][a].total_cmp(&dist[cur][b]).then(a.cmp(&b)))
            .expect("unvisited node remains");
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// 2-opt for open paths: reverse `order[i..=j]` (i ≥ 1) while it helps.
fn two_opt(dist: &[Vec<f64>], order: &mut [usize]) {
    let n = order.len();
    let mut improved = true;
    while improved {
        improved = false;
        for i in 1..n.saturating_sub(1) {
            for j in i + 1..n {
                let (a, b) = (order[i - 1], order[i]);
                let c = order[j];
                let before = dist[a][b] + if j + 1 < n { dist[c][order[j + 1]] } else { 0.0 };
                let after = dist[a][c] + if j + 1 < n { dist[b][order[j + 1]] } else { 0.0 };
                if after < before - IMPROVE_EPS {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}
