use std::f64::consts::TAU;

use super::{BeliefMap, Cell, GroundTruthMap, Knowledge, OccupancyGrid, Point, Terrain};
use crate::error::{Error, Result};

/// 360° range sensor.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SensorModel {
    /// Maximum range `d_s` in meters.
    pub range: f64,
    /// Number of evenly spaced rays over a full turn.
    pub ray_count: usize,
}

impl SensorModel {
    pub fn new(range: f64, ray_count: usize) -> Result<Self> {
        let s = Self { range, ray_count };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(Error::InvalidConfig(format!("sensor range must be positive, got {}", self.range)));
        }
        if self.ray_count < 8 {
            return Err(Error::InvalidConfig(format!("need at least 8 rays, got {}", self.ray_count)));
        }
        Ok(())
    }
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            range: 6.0,
            ray_count: 360,
        }
    }
}

/// What a ray does after visiting a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayStep {
    Continue,
    Stop,
}

/// Traces every sensor ray from `pose` through the grid.
///
/// `visit` sees each traversed cell in order, starting with the pose cell,
/// and decides whether the ray goes on. Rays end at the sensor range (a cell
/// is entered only if its entry point lies within range) or at the grid edge.
/// Exact corner crossings step along x first.
pub fn cast_rays<C: Copy>(
    grid: &OccupancyGrid<C>,
    pose: Point,
    sensor: &SensorModel,
    mut visit: impl FnMut(Cell, C) -> RayStep,
) {
    if !(sensor.range > 0.0) {
        return;
    }
    let res = grid.resolution();
    let (ox, oy) = (pose.x / res, pose.y / res);
    let reach = sensor.range / res;
    let start = Cell::new(ox.floor() as i32, oy.floor() as i32);
    let Some(start_value) = grid.get(start) else {
        return;
    };
    for k in 0..sensor.ray_count {
        let theta = TAU * k as f64 / sensor.ray_count as f64;
        let (dx, dy) = (theta.cos(), theta.sin());
        let mut cell = start;
        if visit(cell, start_value) == RayStep::Stop {
            continue;
        }
        let step_x = if dx > 0.0 { 1 } else { -1 };
        let step_y = if dy > 0.0 { 1 } else { -1 };
        let delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
        let delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
        let mut t_max_x = if dx > 0.0 {
            (cell.x as f64 + 1.0 - ox) * delta_x
        } else if dx < 0.0 {
            (ox - cell.x as f64) * delta_x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy > 0.0 {
            (cell.y as f64 + 1.0 - oy) * delta_y
        } else if dy < 0.0 {
            (oy - cell.y as f64) * delta_y
        } else {
            f64::INFINITY
        };
        loop {
            let t_entry;
            if t_max_x <= t_max_y {
                t_entry = t_max_x;
                cell.x += step_x;
                t_max_x += delta_x;
            } else {
                t_entry = t_max_y;
                cell.y += step_y;
                t_max_y += delta_y;
            }
            if t_entry > reach {
                break;
            }
            let Some(value) = grid.get(cell) else {
                break;
            };
            if visit(cell, value) == RayStep::Stop {
                break;
            }
        }
    }
}

/// Cells the sensor would reveal from `pose` on the ground truth: every
/// traversed free cell plus the first occupied hit of each ray. Sorted, unique.
pub fn visible_cells(truth: &GroundTruthMap, pose: Point, sensor: &SensorModel) -> Vec<Cell> {
    let mut out = Vec::new();
    cast_rays(truth, pose, sensor, |c, t| {
        out.push(c);
        match t {
            Terrain::Free => RayStep::Continue,
            Terrain::Occupied => RayStep::Stop,
        }
    });
    out.sort_unstable_by_key(|c| (c.y, c.x));
    out.dedup();
    out
}

/// Updates `belief` with one sensor sweep taken at `pose`.
pub fn sense(truth: &GroundTruthMap, belief: &mut BeliefMap, pose: Point, sensor: &SensorModel) -> Result<()> {
    let cell = truth.cell_at(pose);
    if !truth.is_free(cell) {
        return Err(Error::InvalidPose(cell));
    }
    cast_rays(truth, pose, sensor, |c, t| {
        belief.set(c, Knowledge::from(t));
        match t {
            Terrain::Free => RayStep::Continue,
            Terrain::Occupied => RayStep::Stop,
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_room(n: usize) -> GroundTruthMap {
        let mut m = GroundTruthMap::filled(n, n, 0.4, Terrain::Occupied);
        for y in 1..n as i32 - 1 {
            for x in 1..n as i32 - 1 {
                m.set(Cell::new(x, y), Terrain::Free);
            }
        }
        m
    }

    #[test]
    fn zero_range_leaves_belief_unchanged() {
        let truth = open_room(20);
        let mut belief = BeliefMap::unknown_like(&truth);
        let before = belief.clone();
        let sensor = SensorModel {
            range: 0.0,
            ray_count: 360,
        };
        sense(&truth, &mut belief, truth.cell_center(Cell::new(10, 10)), &sensor).unwrap();
        assert_eq!(belief, before);
    }

    #[test]
    fn pose_in_wall_is_rejected() {
        let truth = open_room(20);
        let mut belief = BeliefMap::unknown_like(&truth);
        let err = sense(&truth, &mut belief, truth.cell_center(Cell::new(0, 3)), &SensorModel::default());
        assert!(matches!(err, Err(Error::InvalidPose(_))));
        let outside = sense(&truth, &mut belief, Point::new(-3.0, 2.0), &SensorModel::default());
        assert!(matches!(outside, Err(Error::InvalidPose(_))));
    }

    #[test]
    fn open_disk_is_fully_revealed_within_one_cell_tolerance() {
        let truth = open_room(64);
        let mut belief = BeliefMap::unknown_like(&truth);
        let sensor = SensorModel::default();
        let center = Cell::new(32, 32);
        let pose = truth.cell_center(center);
        sense(&truth, &mut belief, pose, &sensor).unwrap();
        let reach = sensor.range / truth.resolution();
        for c in truth.coords() {
            let d = ((c.x - center.x) as f64).hypot((c.y - center.y) as f64);
            if d <= reach - 1.0 {
                assert_eq!(belief.get(c), Some(Knowledge::Free), "cell {c:?} at {d}");
            }
            if d > reach + 1.0 {
                assert_eq!(belief.get(c), Some(Knowledge::Unknown), "cell {c:?} at {d}");
            }
        }
    }

    #[test]
    fn validate_rejects_bad_sensors() {
        assert!(SensorModel::new(0.0, 360).is_err());
        assert!(SensorModel::new(5.0, 4).is_err());
        assert!(SensorModel::new(5.0, 8).is_ok());
    }
}
