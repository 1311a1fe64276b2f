//! Grid geometry primitives: cells, poses, and exact line-of-sight traversal.
//!
//! All visibility logic in the crate is built on [`for_cells_between`], an
//! integer walk over the cells whose *interiors* are crossed by the segment
//! between two cell centers. Corner touches are exact (no floating point), so
//! visibility decisions are bit-for-bit reproducible.

use serde::{Deserialize, Serialize};

/// Integer grid cell coordinate (column `x`, row `y`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Center of the cell in world meters.
    pub fn center(self, resolution: f64) -> (f64, f64) {
        (
            (self.x as f64 + 0.5) * resolution,
            (self.y as f64 + 0.5) * resolution,
        )
    }

    /// Euclidean center-to-center distance in cell units.
    pub fn dist_cells(self, other: Cell) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

/// Continuous planar pose in meters / radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    /// Cell containing this pose.
    pub fn cell(&self, resolution: f64) -> Cell {
        Cell::new(
            (self.x / resolution).floor() as i32,
            (self.y / resolution).floor() as i32,
        )
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Pose at the center of a cell, heading 0.
    pub fn at_cell(cell: Cell, resolution: f64) -> Self {
        let (x, y) = cell.center(resolution);
        Pose::new(x, y, 0.0)
    }
}

/// Normalize an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    } else if a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

/// Grid extent plus meters-per-cell scale. Maps cells to flat indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDims {
    pub width: u32,
    pub height: u32,
    pub resolution: f64,
}

impl GridDims {
    pub fn new(width: u32, height: u32, resolution: f64) -> Self {
        GridDims {
            width,
            height,
            resolution,
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c));
        c.y as usize * self.width as usize + c.x as usize
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        Cell::new(
            (idx % self.width as usize) as i32,
            (idx / self.width as usize) as i32,
        )
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major iteration over all cells.
    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width as i32;
        let h = self.height as i32;
        (0..h).flat_map(move |y| (0..w).map(move |x| Cell::new(x, y)))
    }

    /// 4-neighbors inside the grid.
    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        const D: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let dims = *self;
        D.iter()
            .map(move |&(dx, dy)| Cell::new(c.x + dx, c.y + dy))
            .filter(move |&n| dims.contains(n))
    }
}

/// Visits every cell whose interior is crossed by the open segment between
/// the centers of `a` and `b`, excluding both endpoints, in order from `a`.
///
/// Exact integer arithmetic: when the segment passes exactly through a cell
/// corner the walk steps diagonally, skipping the two cells that are merely
/// touched at that corner. Returns early if the visitor returns `false`.
pub fn for_cells_between(a: Cell, b: Cell, mut visit: impl FnMut(Cell) -> bool) -> bool {
    if a == b {
        return true;
    }
    let dxc = (b.x - a.x).abs() as i64;
    let dyc = (b.y - a.y).abs() as i64;
    let sx = (b.x - a.x).signum();
    let sy = (b.y - a.y).signum();
    let mut cx = a.x;
    let mut cy = a.y;
    // k/m index the next vertical/horizontal boundary crossing; crossing
    // parameters compare as (2k-1)*dyc vs (2m-1)*dxc.
    let mut k: i64 = 1;
    let mut m: i64 = 1;
    loop {
        if dyc == 0 {
            cx += sx;
        } else if dxc == 0 {
            cy += sy;
        } else {
            let tx = (2 * k - 1) * dyc;
            let ty = (2 * m - 1) * dxc;
            if tx < ty {
                cx += sx;
                k += 1;
            } else if ty < tx {
                cy += sy;
                m += 1;
            } else {
                // Exact corner crossing: step diagonally.
                cx += sx;
                cy += sy;
                k += 1;
                m += 1;
            }
        }
        if cx == b.x && cy == b.y {
            return true;
        }
        if !visit(Cell::new(cx, cy)) {
            return false;
        }
    }
}

/// True when no cell strictly between `a` and `b` is blocked.
pub fn line_of_sight(a: Cell, b: Cell, blocked: impl Fn(Cell) -> bool) -> bool {
    for_cells_between(a, b, |c| !blocked(c))
}
