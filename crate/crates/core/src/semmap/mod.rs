//! Semantic occupancy grids, 3D voxel projection and label maps.
//!
//! Cell `(x, y)` is column `x`, row `y`; row 0 is the first grid line of a map
//! file. The world position of a cell center is
//! `origin + (index + 0.5) * resolution` along each axis.

mod edt;
pub mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ltl::{Letter, Word};

pub use edt::squared_edt;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("voxel map contains no voxels")]
    EmptyMap,
    #[error("invalid vertical bounds: z_ground {z_ground} must be below z_ceiling {z_ceiling}")]
    InvalidBounds { z_ground: f64, z_ceiling: f64 },
    #[error("cell ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("negative distance threshold {value} for class `{class}`")]
    NegativeThreshold { class: String, value: f64 },
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

pub type ClassId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    Free,
    /// Occupied, semantic category unknown.
    Null,
    /// Never observed.
    Unknown,
    Object(ClassId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    classes: Vec<String>,
    cells: Vec<CellClass>,
}

impl SemanticGrid {
    /// A grid filled with `fill`. `classes` names the object classes referenced
    /// by [`CellClass::Object`] ids.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        classes: Vec<String>,
        fill: CellClass,
    ) -> Result<Self, MapError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(MapError::BadResolution(resolution));
        }
        Ok(SemanticGrid {
            width,
            height,
            resolution,
            origin: [0.0, 0.0],
            classes,
            cells: vec![fill; width * height],
        })
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c == name).map(|i| i as ClassId)
    }

    /// Register a class name, returning its id.
    pub fn intern_class(&mut self, name: &str) -> ClassId {
        match self.class_id(name) {
            Some(id) => id,
            None => {
                self.classes.push(name.to_string());
                (self.classes.len() - 1) as ClassId
            }
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn get(&self, cell: Cell) -> CellClass {
        self.cells[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, class: CellClass) {
        let i = self.index(cell);
        self.cells[i] = class;
    }

    pub fn cells(&self) -> &[CellClass] {
        &self.cells
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.contains(cell) && self.get(cell) == CellClass::Free
    }

    pub fn check(&self, cell: Cell) -> Result<(), MapError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(MapError::OutOfBounds {
                x: cell.x,
                y: cell.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    pub fn cell_center(&self, cell: Cell) -> [f64; 2] {
        [
            self.origin[0] + (cell.x as f64 + 0.5) * self.resolution,
            self.origin[1] + (cell.y as f64 + 0.5) * self.resolution,
        ]
    }

    /// Cell containing a world point, clamped to the grid.
    pub fn cell_of_point(&self, p: [f64; 2]) -> Cell {
        let clamp = |v: f64, n: usize| {
            let i = v.floor();
            if i < 0.0 {
                0
            } else {
                (i as usize).min(n - 1)
            }
        };
        Cell::new(
            clamp((p[0] - self.origin[0]) / self.resolution, self.width),
            clamp((p[1] - self.origin[1]) / self.resolution, self.height),
        )
    }

    pub fn class_name(&self, class: CellClass) -> &str {
        match class {
            CellClass::Free => "FREE",
            CellClass::Null => "NULL",
            CellClass::Unknown => "UNKNOWN",
            CellClass::Object(id) => &self.classes[id as usize],
        }
    }

    /// Object classes that occupy at least one cell.
    pub fn present_classes(&self) -> BTreeSet<ClassId> {
        self.cells
            .iter()
            .filter_map(|c| match c {
                CellClass::Object(id) => Some(*id),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VoxelState {
    Free,
    Null,
    Class(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Voxel {
    pub x: usize,
    pub y: usize,
    pub z: f64,
    pub state: VoxelState,
}

/// Sparse voxel map. Listed voxels are observed; absent ones are not.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMap {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: [f64; 2],
    pub z_ground: f64,
    pub z_ceiling: f64,
    pub voxels: Vec<Voxel>,
}

/// Collapse a voxel map onto the ground plane, keeping only voxels with
/// `z_ground < z < z_ceiling`. Per column:
///
/// 1. no observed voxel: UNKNOWN
/// 2. only free voxels: FREE
/// 3. every occupied voxel is NULL: NULL
/// 4. otherwise the object class of the highest occupied voxel; equal
///    heights resolve to the lexicographically smallest class name.
pub fn project(map: &VoxelMap) -> Result<SemanticGrid, MapError> {
    if !(map.z_ground < map.z_ceiling) {
        return Err(MapError::InvalidBounds {
            z_ground: map.z_ground,
            z_ceiling: map.z_ceiling,
        });
    }
    if map.voxels.is_empty() {
        return Err(MapError::EmptyMap);
    }

    let class_names: BTreeSet<&str> = map
        .voxels
        .iter()
        .filter_map(|v| match &v.state {
            VoxelState::Class(c) => Some(c.as_str()),
            _ => None,
        })
        .collect();
    let classes: Vec<String> = class_names.into_iter().map(String::from).collect();
    let mut grid = SemanticGrid::new(map.width, map.height, map.resolution, classes, CellClass::Unknown)?
        .with_origin(map.origin);

    #[derive(Default, Clone)]
    struct Column<'a> {
        observed: bool,
        occupied: bool,
        top: Option<(f64, &'a str)>,
    }
    let mut columns: Vec<Column> = vec![Column::default(); map.width * map.height];
    for v in &map.voxels {
        grid.check(Cell::new(v.x, v.y))?;
        if !(v.z > map.z_ground && v.z < map.z_ceiling) {
            continue;
        }
        let col = &mut columns[v.y * map.width + v.x];
        col.observed = true;
        match &v.state {
            VoxelState::Free => {}
            VoxelState::Null => col.occupied = true,
            VoxelState::Class(name) => {
                col.occupied = true;
                let better = match col.top {
                    None => true,
                    Some((z, n)) => v.z > z || (v.z == z && name.as_str() < n),
                };
                if better {
                    col.top = Some((v.z, name));
                }
            }
        }
    }

    for (i, col) in columns.iter().enumerate() {
        let class = match (col.observed, col.occupied, col.top) {
            (false, _, _) => CellClass::Unknown,
            (true, false, _) => CellClass::Free,
            (true, true, None) => CellClass::Null,
            (true, true, Some((_, name))) => CellClass::Object(grid.class_id(name).expect("interned above")),
        };
        grid.cells[i] = class;
    }
    Ok(grid)
}

/// Default proximity threshold when a class has none: 1.5 cells, so that
/// diagonal neighbours of an object count as near it.
pub fn default_threshold(resolution: f64) -> f64 {
    1.5 * resolution
}

/// Whether a squared cell distance lies within `radius` meters.
pub fn within_radius(squared_cells: f64, radius: f64, resolution: f64) -> bool {
    squared_cells.sqrt() * resolution <= radius
}

/// Per-cell sets of atomic propositions. Proposition `c` holds at a cell iff
/// the Euclidean distance between its center and the center of some cell of
/// class `c` is at most `r_c`.
#[derive(Debug, Clone)]
pub struct LabelGrid {
    width: usize,
    height: usize,
    resolution: f64,
    props: Vec<String>,
    thresholds: Vec<f64>,
    /// Squared distance in cells to the nearest cell of each class.
    fields: Vec<Vec<f64>>,
    sets: Vec<Letter>,
    cell_sets: Vec<u32>,
}

impl LabelGrid {
    pub fn build(grid: &SemanticGrid, thresholds: &BTreeMap<String, f64>) -> Result<Self, MapError> {
        Self::build_with(grid, thresholds, Execution::default())
    }

    pub fn build_with(
        grid: &SemanticGrid,
        thresholds: &BTreeMap<String, f64>,
        exec: Execution,
    ) -> Result<Self, MapError> {
        let res = grid.resolution();
        let mut radii = Vec::with_capacity(grid.classes().len());
        for name in grid.classes() {
            let r = thresholds.get(name).copied().unwrap_or_else(|| default_threshold(res));
            if r < 0.0 || r.is_nan() {
                return Err(MapError::NegativeThreshold {
                    class: name.clone(),
                    value: r,
                });
            }
            radii.push(r);
        }

        let class_ids: Vec<ClassId> = (0..grid.classes().len() as ClassId).collect();
        let fields = exec.map(&class_ids, |&id| {
            squared_edt(grid.width(), grid.height(), |i| grid.cells()[i] == CellClass::Object(id))
        });

        let mut interned: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut sets: Vec<Letter> = Vec::new();
        let mut cell_sets = Vec::with_capacity(grid.len());
        let mut members = Vec::new();
        for i in 0..grid.len() {
            members.clear();
            members.extend(
                class_ids
                    .iter()
                    .copied()
                    .filter(|&c| within_radius(fields[c as usize][i], radii[c as usize], res)),
            );
            let id = match interned.get(&members) {
                Some(&id) => id,
                None => {
                    let id = sets.len() as u32;
                    sets.push(members.iter().map(|&c| grid.classes()[c as usize].clone()).collect());
                    interned.insert(members.clone(), id);
                    id
                }
            };
            cell_sets.push(id);
        }

        Ok(LabelGrid {
            width: grid.width(),
            height: grid.height(),
            resolution: res,
            props: grid.classes().to_vec(),
            thresholds: radii,
            fields,
            sets,
            cell_sets,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn threshold(&self, prop: &str) -> Option<f64> {
        self.props.iter().position(|p| p == prop).map(|i| self.thresholds[i])
    }

    fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    /// Label set `l(x)` of a cell.
    pub fn labels(&self, cell: Cell) -> &Letter {
        &self.sets[self.cell_sets[self.index(cell)] as usize]
    }

    /// Euclidean distance in meters from a cell to the nearest cell of the
    /// class behind `prop`; infinite when the class is absent.
    pub fn distance(&self, prop: &str, cell: Cell) -> Option<f64> {
        let c = self.props.iter().position(|p| p == prop)?;
        Some(self.fields[c][self.index(cell)].sqrt() * self.resolution)
    }

    /// Distinct label sets in order of first occurrence (row-major scan).
    pub fn distinct_sets(&self) -> &[Letter] {
        &self.sets
    }

    pub fn word_of_path(&self, path: &[Cell]) -> Result<Word, MapError> {
        path.iter()
            .map(|&c| {
                if self.contains(c) {
                    Ok(self.labels(c).clone())
                } else {
                    Err(MapError::OutOfBounds {
                        x: c.x,
                        y: c.y,
                        width: self.width,
                        height: self.height,
                    })
                }
            })
            .collect()
    }
}
