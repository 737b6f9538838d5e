use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::CollisionFreeGraph;
use crate::world::Trajectory;

/// Path lengths closer than this (meters) are treated as equal.
pub(crate) const LENGTH_EPS: f64 = 1e-9;

/// A node sequence through the graph with its metric length.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPath {
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl CollisionFreeGraph {
    /// Graph distances (meters) from `src`; unreachable nodes are infinite.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Entry { dist: 0.0, node: src });
        while let Some(Entry { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for &(next, w) in self.neighbors(node) {
                let nd = d + w;
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(Entry { dist: nd, node: next });
                }
            }
        }
        dist
    }

    /// Minimum-length path; among equal lengths the lexicographically
    /// smallest node sequence wins. `None` when `to` is unreachable.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<GraphPath> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut route: Vec<Option<Vec<usize>>> = vec![None; self.len()];
        let mut done = vec![false; self.len()];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        route[from] = Some(vec![from]);
        heap.push(Entry { dist: 0.0, node: from });
        while let Some(Entry { node, .. }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if node == to {
                break;
            }
            let base = route[node].clone().expect("settled node has a route");
            for &(next, w) in self.neighbors(node) {
                if done[next] {
                    continue;
                }
                let nd = dist[node] + w;
                let better = if nd < dist[next] - LENGTH_EPS {
                    true
                } else if (nd - dist[next]).abs() <= LENGTH_EPS {
                    let current = route[next].as_ref().expect("finite distance has a route");
                    base.iter().chain(std::iter::once(&next)).lt(current.iter())
                } else {
                    false
                };
                if better {
                    dist[next] = dist[next].min(nd);
                    let mut r = base.clone();
                    r.push(next);
                    route[next] = Some(r);
                    heap.push(Entry { dist: nd, node: next });
                }
            }
        }
        route[to].take().map(|nodes| GraphPath {
            length: path_length(self, &nodes),
            nodes,
        })
    }

    /// Metric waypoints of a node sequence.
    pub fn trajectory(&self, nodes: &[usize]) -> Trajectory {
        Trajectory::new(nodes.iter().map(|&i| self.position(i)).collect())
    }
}

fn path_length(g: &CollisionFreeGraph, nodes: &[usize]) -> f64 {
    nodes
        .windows(2)
        .map(|w| g.edge_length(w[0], w[1]).expect("consecutive path nodes share an edge"))
        .sum()
}
