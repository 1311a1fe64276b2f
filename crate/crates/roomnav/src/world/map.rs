//! Ground-truth grid map: occupancy, room regions, doors, object instances,
//! and the versioned JSON file format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Cell, GridDims};

pub type InstanceId = u32;
pub type GtRoomId = u32;

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum CellLabel {
    Free,
    Occupied,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("unsupported map format {0} (expected {MAP_FORMAT_VERSION})")]
    Format(u32),
    #[error("invariant violation at cell ({x}, {y}): {msg}", x = cell.x, y = cell.y)]
    Invariant { cell: Cell, msg: String },
    #[error("map invariant violation: {0}")]
    Structure(String),
}

impl MapError {
    fn at(cell: Cell, msg: impl Into<String>) -> Self {
        MapError::Invariant {
            cell,
            msg: msg.into(),
        }
    }
}

/// Axis-aligned cell rectangle `[x, y, w, h]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect(pub i32, pub i32, pub i32, pub i32);

impl Rect {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.0 && c.x < self.0 + self.2 && c.y >= self.1 && c.y < self.1 + self.3
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoomDef {
    pub id: GtRoomId,
    pub label: String,
    pub rects: Vec<Rect>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Door {
    pub cells: Vec<Cell>,
}

/// A physical object: category, named attributes, and an occupied footprint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: InstanceId,
    pub category: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub cells: Vec<Cell>,
    /// Ground-truth room containing the footprint centroid. Derived on load.
    #[serde(skip)]
    pub room_id: GtRoomId,
}

impl ObjectInstance {
    pub fn centroid_cell(&self) -> Cell {
        let n = self.cells.len().max(1) as f64;
        let sx: f64 = self.cells.iter().map(|c| c.x as f64).sum();
        let sy: f64 = self.cells.iter().map(|c| c.y as f64).sum();
        Cell::new((sx / n).round() as i32, (sy / n).round() as i32)
    }
}

/// Static ground truth: walls, room regions and doors.
#[derive(Clone, Debug)]
pub struct GridMap {
    pub dims: GridDims,
    /// Structural walls ('#' in the file).
    walls: Vec<bool>,
    /// Walls plus object footprints.
    occupied: Vec<bool>,
    /// Room id per cell from the room rectangles (covers non-free cells too).
    rooms_gt: Vec<Option<GtRoomId>>,
    pub rooms: Vec<RoomDef>,
    pub doors: Vec<Door>,
}

impl GridMap {
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.dims.contains(c) || self.occupied[self.dims.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.dims.contains(c) && !self.occupied[self.dims.index(c)]
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        !self.dims.contains(c) || self.walls[self.dims.index(c)]
    }

    pub fn gt_room_at(&self, c: Cell) -> Option<GtRoomId> {
        if self.dims.contains(c) {
            self.rooms_gt[self.dims.index(c)]
        } else {
            None
        }
    }

    pub fn room_label(&self, id: GtRoomId) -> Option<&str> {
        self.rooms
            .iter()
            .find(|r| r.id == id)
            .map(|r| r.label.as_str())
    }

    /// True when every cell whose center lies strictly within `radius`
    /// meters of `(x, y)` is free. Open-disc semantics: contact exactly at
    /// the radius does not collide.
    pub fn clearance_ok(&self, x: f64, y: f64, radius: f64) -> bool {
        let res = self.dims.resolution;
        let r_cells = (radius / res).ceil() as i32 + 1;
        let cx = (x / res).floor() as i32;
        let cy = (y / res).floor() as i32;
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                let c = Cell::new(cx + dx, cy + dy);
                let (ccx, ccy) = c.center(res);
                let d2 = (ccx - x).powi(2) + (ccy - y).powi(2);
                if d2 < radius * radius && self.is_occupied(c) {
                    return false;
                }
            }
        }
        true
    }
}

/// Complete simulation substrate: map plus object instances.
#[derive(Clone, Debug)]
pub struct World {
    pub map: GridMap,
    pub objects: Vec<ObjectInstance>,
}

impl World {
    pub fn object(&self, id: InstanceId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn resolution(&self) -> f64 {
        self.map.dims.resolution
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MapFile {
    format: u32,
    resolution: f64,
    grid: Vec<String>,
    rooms: Vec<RoomDef>,
    doors: Vec<Door>,
    objects: Vec<ObjectInstance>,
}

/// Parse and validate a map file.
pub fn load_map(path: &Path) -> Result<World, MapError> {
    let text = std::fs::read_to_string(path)?;
    load_map_str(&text)
}

/// Parse and validate map JSON.
pub fn load_map_str(text: &str) -> Result<World, MapError> {
    let file: MapFile = serde_json::from_str(text).map_err(|e| MapError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    build_world(file)
}

/// Serialize a world back to the versioned JSON format.
pub fn save_map_string(world: &World) -> String {
    let dims = world.map.dims;
    let mut grid = Vec::with_capacity(dims.height as usize);
    for y in 0..dims.height as i32 {
        let mut row = String::with_capacity(dims.width as usize);
        for x in 0..dims.width as i32 {
            row.push(if world.map.is_wall(Cell::new(x, y)) {
                '#'
            } else {
                '.'
            });
        }
        grid.push(row);
    }
    let file = MapFile {
        format: MAP_FORMAT_VERSION,
        resolution: dims.resolution,
        grid,
        rooms: world.map.rooms.clone(),
        doors: world.map.doors.clone(),
        objects: world.objects.clone(),
    };
    serde_json::to_string_pretty(&file).expect("map serializes")
}

fn build_world(file: MapFile) -> Result<World, MapError> {
    if file.format != MAP_FORMAT_VERSION {
        return Err(MapError::Format(file.format));
    }
    let height = file.grid.len() as u32;
    if height == 0 {
        return Err(MapError::Structure("empty grid".into()));
    }
    let width = file.grid[0].chars().count() as u32;
    if file.grid.iter().any(|r| r.chars().count() as usize != width as usize) {
        return Err(MapError::Structure("ragged grid rows".into()));
    }
    if file.resolution <= 0.0 {
        return Err(MapError::Structure("resolution must be positive".into()));
    }
    let dims = GridDims::new(width, height, file.resolution);

    let mut walls = vec![false; dims.len()];
    for (y, row) in file.grid.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let cell = Cell::new(x as i32, y as i32);
            match ch {
                '#' => walls[dims.index(cell)] = true,
                '.' => {}
                other => {
                    return Err(MapError::at(cell, format!("unknown grid char {other:?}")));
                }
            }
        }
    }

    // Room membership: every cell covered by at most one room's rects.
    let mut rooms_gt: Vec<Option<GtRoomId>> = vec![None; dims.len()];
    {
        let mut seen = std::collections::BTreeSet::new();
        for room in &file.rooms {
            if !seen.insert(room.id) {
                return Err(MapError::Structure(format!("duplicate room id {}", room.id)));
            }
            for rect in &room.rects {
                for y in rect.1..rect.1 + rect.3 {
                    for x in rect.0..rect.0 + rect.2 {
                        let c = Cell::new(x, y);
                        if !dims.contains(c) {
                            return Err(MapError::at(c, "room rect leaves the grid"));
                        }
                        let slot = &mut rooms_gt[dims.index(c)];
                        match slot {
                            Some(prev) if *prev != room.id => {
                                return Err(MapError::at(
                                    c,
                                    format!("cell in rooms {prev} and {}", room.id),
                                ));
                            }
                            _ => *slot = Some(room.id),
                        }
                    }
                }
            }
        }
    }

    // Objects: validate footprints, derive occupancy and room membership.
    let mut occupied = walls.clone();
    {
        let mut owner: Vec<Option<InstanceId>> = vec![None; dims.len()];
        let mut ids = std::collections::BTreeSet::new();
        for obj in &file.objects {
            if !ids.insert(obj.id) {
                return Err(MapError::Structure(format!("duplicate object id {}", obj.id)));
            }
            if obj.cells.is_empty() {
                return Err(MapError::Structure(format!(
                    "object {} has an empty footprint",
                    obj.id
                )));
            }
            for &c in &obj.cells {
                if !dims.contains(c) {
                    return Err(MapError::at(c, format!("object {} leaves the grid", obj.id)));
                }
                if walls[dims.index(c)] {
                    return Err(MapError::at(c, format!("object {} overlaps a wall", obj.id)));
                }
                if let Some(prev) = owner[dims.index(c)] {
                    return Err(MapError::at(
                        c,
                        format!("objects {prev} and {} overlap", obj.id),
                    ));
                }
                owner[dims.index(c)] = Some(obj.id);
                occupied[dims.index(c)] = true;
            }
        }
    }

    let mut map = GridMap {
        dims,
        walls,
        occupied,
        rooms_gt,
        rooms: file.rooms,
        doors: file.doors,
    };

    // Free-cell room cover: exactly one room per free cell.
    for c in dims.iter_cells() {
        if !map.occupied[dims.index(c)] && map.rooms_gt[dims.index(c)].is_none() {
            return Err(MapError::at(c, "free cell outside every room"));
        }
    }

    // Door cells must be free.
    for door in &map.doors {
        for &c in &door.cells {
            if !map.is_free(c) {
                return Err(MapError::at(c, "door cell is not free"));
            }
        }
    }

    // Doors are the only free passages crossing room boundaries.
    let door_cells: std::collections::BTreeSet<Cell> = map
        .doors
        .iter()
        .flat_map(|d| d.cells.iter().copied())
        .collect();
    for c in dims.iter_cells() {
        if !map.is_free(c) {
            continue;
        }
        let rc = map.gt_room_at(c);
        for n in [Cell::new(c.x + 1, c.y), Cell::new(c.x, c.y + 1)] {
            if map.is_free(n) && map.gt_room_at(n) != rc && !door_cells.contains(&c) && !door_cells.contains(&n)
            {
                return Err(MapError::at(
                    c,
                    "free passage crosses a room boundary without a door",
                ));
            }
        }
    }

    // Per-room free-space connectivity (4-connected).
    for room in &map.rooms {
        let cells: Vec<Cell> = dims
            .iter_cells()
            .filter(|&c| map.is_free(c) && map.gt_room_at(c) == Some(room.id))
            .collect();
        if cells.is_empty() {
            return Err(MapError::Structure(format!(
                "room {} has no free cells",
                room.id
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![cells[0]];
        seen.insert(cells[0]);
        while let Some(c) = stack.pop() {
            for n in dims.neighbors4(c) {
                if map.is_free(n) && map.gt_room_at(n) == Some(room.id) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        if let Some(&stray) = cells.iter().find(|c| !seen.contains(c)) {
            return Err(MapError::at(
                stray,
                format!("room {} free space is disconnected", room.id),
            ));
        }
    }

    // Derive object room ids from footprint centroids.
    let mut objects = file.objects;
    for obj in &mut objects {
        let centroid = obj.centroid_cell();
        obj.room_id = map.gt_room_at(centroid).ok_or_else(|| {
            MapError::at(centroid, format!("object {} centroid outside all rooms", obj.id))
        })?;
    }
    // rooms_gt is evaluation-only; keep it out of agent-facing accessors.
    let _ = &mut map;

    Ok(World { map, objects })
}
