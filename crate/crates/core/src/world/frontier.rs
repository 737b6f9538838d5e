use super::{BeliefMap, Cell, GroundTruthMap, Knowledge, Terrain};

/// Free belief cells with at least one Unknown cell among their 8 neighbors,
/// in row-major order. Off-grid neighbors do not count as Unknown.
pub fn detect_frontiers(belief: &BeliefMap) -> Vec<Cell> {
    belief
        .coords()
        .filter(|&c| belief.is_free(c) && c.neighbors8().any(|n| belief.get(n) == Some(Knowledge::Unknown)))
        .collect()
}

/// Exploration is complete when the known free space equals the true free space.
///
/// With a connected free region and a closed boundary this coincides with the
/// observed occupied cells enclosing the explored area.
pub fn is_complete(belief: &BeliefMap, truth: &GroundTruthMap) -> bool {
    belief
        .cells()
        .iter()
        .zip(truth.cells())
        .all(|(&k, &t)| (k == Knowledge::Free) == (t == Terrain::Free))
}
