//! Ground-truth shortest-path oracle for SPL and reachability checks.
//!
//! 8-connected Dijkstra over free cells with sqrt(2)-cost diagonals;
//! diagonal moves are forbidden when either orthogonal neighbor is
//! occupied (no corner cutting).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::{Cell, GridDims, Pose};
use crate::priors::PriorsTable;
use crate::world::map::World;
use crate::world::{instance_satisfies, Goal};

/// Shortest free-space path length from `start` to the nearest cell within
/// `eps_succ` of any goal-satisfying instance. `None` when no satisfying
/// instance is reachable.
pub fn shortest_path_len(
    world: &World,
    start: Pose,
    goal: &Goal,
    eps_succ: f64,
    priors: &PriorsTable,
) -> Option<f64> {
    let dims = world.map.dims;
    let goal_cells = goal_region(world, goal, eps_succ, priors);
    if goal_cells.iter().all(|g| !*g) {
        return None;
    }
    let start_cell = start.cell(dims.resolution);
    if !world.map.is_free(start_cell) {
        return None;
    }
    dijkstra_to_region(&dims, |c| world.map.is_free(c), start_cell, &goal_cells)
}

/// Free cells whose center is within `eps_succ` of a footprint cell center
/// of some instance satisfying `goal`.
pub fn goal_region(world: &World, goal: &Goal, eps_succ: f64, priors: &PriorsTable) -> Vec<bool> {
    let dims = world.map.dims;
    let mut region = vec![false; dims.len()];
    let r_cells = (eps_succ / dims.resolution).floor() as i32 + 1;
    for inst in &world.objects {
        if !instance_satisfies(world, inst, goal, priors) {
            continue;
        }
        for &f in &inst.cells {
            for dy in -r_cells..=r_cells {
                for dx in -r_cells..=r_cells {
                    let c = Cell::new(f.x + dx, f.y + dy);
                    if dims.contains(c)
                        && world.map.is_free(c)
                        && c.dist_cells(f) * dims.resolution <= eps_succ
                    {
                        region[dims.index(c)] = true;
                    }
                }
            }
        }
    }
    region
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    cell: Cell,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost; ties broken on cell for determinism.
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const MOVES: [(i32, i32); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Dijkstra from `start` to the cheapest cell of `region` over cells where
/// `passable` holds. Returns the metric length in meters.
pub fn dijkstra_to_region(
    dims: &GridDims,
    passable: impl Fn(Cell) -> bool,
    start: Cell,
    region: &[bool],
) -> Option<f64> {
    let res = dims.resolution;
    let diag = res * std::f64::consts::SQRT_2;
    let mut dist = vec![f64::INFINITY; dims.len()];
    let mut heap = BinaryHeap::new();
    dist[dims.index(start)] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        cell: start,
    });
    while let Some(HeapEntry { cost, cell }) = heap.pop() {
        let idx = dims.index(cell);
        if cost > dist[idx] {
            continue;
        }
        if region[idx] {
            return Some(cost);
        }
        for (dx, dy) in MOVES {
            let n = Cell::new(cell.x + dx, cell.y + dy);
            if !dims.contains(n) || !passable(n) {
                continue;
            }
            if dx != 0 && dy != 0 {
                // No corner cutting.
                let a = Cell::new(cell.x + dx, cell.y);
                let b = Cell::new(cell.x, cell.y + dy);
                if !(dims.contains(a) && passable(a) && dims.contains(b) && passable(b)) {
                    continue;
                }
            }
            let step = if dx != 0 && dy != 0 { diag } else { res };
            let next = cost + step;
            let nidx = dims.index(n);
            if next < dist[nidx] {
                dist[nidx] = next;
                heap.push(HeapEntry {
                    cost: next,
                    cell: n,
                });
            }
        }
    }
    None
}

/// Distance map variant: shortest distance from `start` to every passable
/// cell (infinity where unreachable).
pub fn dijkstra_all(
    dims: &GridDims,
    passable: impl Fn(Cell) -> bool,
    start: Cell,
) -> Vec<f64> {
    let res = dims.resolution;
    let diag = res * std::f64::consts::SQRT_2;
    let mut dist = vec![f64::INFINITY; dims.len()];
    if !dims.contains(start) || !passable(start) {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[dims.index(start)] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        cell: start,
    });
    while let Some(HeapEntry { cost, cell }) = heap.pop() {
        let idx = dims.index(cell);
        if cost > dist[idx] {
            continue;
        }
        for (dx, dy) in MOVES {
            let n = Cell::new(cell.x + dx, cell.y + dy);
            if !dims.contains(n) || !passable(n) {
                continue;
            }
            if dx != 0 && dy != 0 {
                let a = Cell::new(cell.x + dx, cell.y);
                let b = Cell::new(cell.x, cell.y + dy);
                if !(dims.contains(a) && passable(a) && dims.contains(b) && passable(b)) {
                    continue;
                }
            }
            let step = if dx != 0 && dy != 0 { diag } else { res };
            let next = cost + step;
            let nidx = dims.index(n);
            if next < dist[nidx] {
                dist[nidx] = next;
                heap.push(HeapEntry {
                    cost: next,
                    cell: n,
                });
            }
        }
    }
    dist
}
