//! Full-circle symbolic raycast sensing.
//!
//! Replaces the panorama + point-cloud sensor stack with a cell-level
//! observation: every cell with line of sight from the agent's cell within
//! sensor range, plus detections for object instances with at least one
//! visible footprint cell. Rays are cast between cell centers, so the
//! observation depends only on the agent's grid cell; a pose is quantized
//! to its cell center before casting.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SensorConfig;
use crate::geom::{line_of_sight, Cell, Pose};
use crate::world::map::{CellLabel, InstanceId, World};

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("sensing pose ({0:.3}, {1:.3}) is out of bounds or occupied")]
    BadPose(f64, f64),
}

/// One detected instance: category, confidence and the visible part of the
/// footprint. `gt_instance` exists for evaluation and oracle lookups only;
/// agent-side association must stay geometric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Detection {
    pub category: String,
    pub confidence: f64,
    pub cells: Vec<Cell>,
    pub gt_instance: InstanceId,
}

/// Symbolic stand-in for one panoramic capture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Observation {
    pub pose: Pose,
    pub origin: Cell,
    pub visible: Vec<(Cell, CellLabel)>,
    pub detections: Vec<Detection>,
}

impl Observation {
    pub fn sees(&self, cell: Cell) -> bool {
        self.visible.binary_search_by(|(c, _)| c.cmp(&cell)).is_ok()
    }
}

/// Cast a full-circle observation from `pose`.
///
/// A cell is visible when its center is within `range` of the origin cell
/// center and no cell strictly between them (exact segment walk) is
/// occupied. Occupied cells are themselves visible at the boundary: the
/// first occupied cell on a ray is seen, everything beyond it is not.
pub fn sense(
    world: &World,
    pose: Pose,
    range: f64,
    sensor: &SensorConfig,
    rng: &mut impl Rng,
) -> Result<Observation, SenseError> {
    let dims = world.map.dims;
    let origin = pose.cell(dims.resolution);
    if !world.map.is_free(origin) {
        return Err(SenseError::BadPose(pose.x, pose.y));
    }
    let r_cells = range / dims.resolution;
    let r_int = r_cells.floor() as i32;
    let mut visible: Vec<(Cell, CellLabel)> = Vec::new();
    for dy in -r_int..=r_int {
        for dx in -r_int..=r_int {
            if (dx * dx + dy * dy) as f64 > r_cells * r_cells {
                continue;
            }
            let c = Cell::new(origin.x + dx, origin.y + dy);
            if !dims.contains(c) {
                continue;
            }
            if line_of_sight(origin, c, |m| world.map.is_occupied(m)) {
                let label = if world.map.is_occupied(c) {
                    CellLabel::Occupied
                } else {
                    CellLabel::Free
                };
                visible.push((c, label));
            }
        }
    }
    visible.sort_by(|(a, _), (b, _)| a.cmp(b));

    let mut detections = Vec::new();
    for obj in &world.objects {
        let cells: Vec<Cell> = obj
            .cells
            .iter()
            .copied()
            .filter(|&c| {
                visible
                    .binary_search_by(|(v, _)| v.cmp(&c))
                    .is_ok()
            })
            .collect();
        if cells.is_empty() {
            continue;
        }
        if sensor.p_false_negative > 0.0 && rng.gen::<f64>() < sensor.p_false_negative {
            continue;
        }
        let (lo, hi) = sensor.confidence_range;
        let confidence = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        detections.push(Detection {
            category: obj.category.clone(),
            confidence,
            cells,
            gt_instance: obj.id,
        });
    }

    Ok(Observation {
        pose,
        origin,
        visible,
        detections,
    })
}
