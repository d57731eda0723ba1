//! Map file formats.
//!
//! ASCII grid:
//!
//! ```text
//! resolution=0.5
//! origin=0,0
//! ro=0.25
//! legend: c=chair,r=1.0
//! legend: k=teddy bear,id=object_36
//! ..c.
//! ##..
//! ?...
//! ```
//!
//! `.` is FREE, `#` NULL, `?` UNKNOWN; other characters come from the legend.
//! The JSON variant carries the same data plus objective coordinates.
//!
//! Voxel text: `key=value` header lines (`width`, `height`, `resolution`,
//! `origin`, `z_ground`, `z_ceiling`) followed by `x y z class` lines where
//! class is `free`, `null` or an object class name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, CellClass, MapError, SemanticGrid, Voxel, VoxelMap, VoxelState};

const SYMBOLS: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub cell: Cell,
}

/// A semantic grid together with the per-map settings stored alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDocument {
    pub grid: SemanticGrid,
    /// Proximity thresholds `r_c` in meters, by class name.
    pub thresholds: BTreeMap<String, f64>,
    /// Collision margin `r_o` in meters.
    pub safety_margin: Option<f64>,
    /// Explicit object ids, by class name.
    pub object_ids: BTreeMap<String, String>,
    pub objectives: Vec<Objective>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LegendEntry {
    class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonMap {
    resolution: f64,
    #[serde(default)]
    origin: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ro: Option<f64>,
    legend: BTreeMap<char, LegendEntry>,
    rows: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    objectives: Vec<Objective>,
}

fn parse_err(line: usize, message: impl Into<String>) -> MapError {
    MapError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, MapError> {
    v.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number for {key}: `{v}`")))
}

fn parse_pair(line: usize, key: &str, v: &str) -> Result<[f64; 2], MapError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(parse_err(line, format!("{key} expects `x,y`")));
    }
    Ok([parse_f64(line, key, parts[0])?, parse_f64(line, key, parts[1])?])
}

impl MapDocument {
    pub fn from_grid(grid: SemanticGrid) -> Self {
        MapDocument {
            grid,
            thresholds: BTreeMap::new(),
            safety_margin: None,
            object_ids: BTreeMap::new(),
            objectives: Vec::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::parse_json(&text)
        } else {
            Self::parse_ascii(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e == "json") {
            self.to_json()
        } else {
            self.to_ascii()
        };
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn parse_ascii(text: &str) -> Result<Self, MapError> {
        let mut resolution = None;
        let mut origin = [0.0, 0.0];
        let mut ro = None;
        let mut legend: Vec<(char, LegendEntry)> = Vec::new();
        let mut rows: Vec<(usize, &str)> = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end();
            if !rows.is_empty() {
                if !line.is_empty() {
                    rows.push((line_no, line));
                }
                continue;
            }
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("//") {
                continue;
            }
            if let Some(v) = trimmed.strip_prefix("resolution=") {
                resolution = Some(parse_f64(line_no, "resolution", v)?);
            } else if let Some(v) = trimmed.strip_prefix("origin=") {
                origin = parse_pair(line_no, "origin", v)?;
            } else if let Some(v) = trimmed.strip_prefix("ro=") {
                ro = Some(parse_f64(line_no, "ro", v)?);
            } else if let Some(v) = trimmed.strip_prefix("legend:") {
                legend.push(parse_legend(line_no, v)?);
            } else {
                rows.push((line_no, line));
            }
        }

        let resolution = resolution.ok_or_else(|| parse_err(1, "missing `resolution=` header"))?;
        let rows = rows.into_iter().map(|(n, r)| (n, r.to_string())).collect();
        build_document(resolution, origin, ro, legend, rows, Vec::new())
    }

    pub fn parse_json(text: &str) -> Result<Self, MapError> {
        let m: JsonMap = serde_json::from_str(text)?;
        let legend = m.legend.into_iter().collect();
        let rows = m.rows.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
        build_document(m.resolution, m.origin, m.ro, legend, rows, m.objectives)
    }

    fn legend(&self) -> Vec<(char, LegendEntry)> {
        self.grid
            .classes()
            .iter()
            .zip(SYMBOLS.chars())
            .map(|(class, sym)| {
                (
                    sym,
                    LegendEntry {
                        class: class.clone(),
                        r: self.thresholds.get(class).copied(),
                        id: self.object_ids.get(class).cloned(),
                    },
                )
            })
            .collect()
    }

    /// Grid rows as written in the ASCII format.
    pub fn rows(&self) -> Vec<String> {
        let symbols: Vec<char> = SYMBOLS.chars().collect();
        (0..self.grid.height())
            .map(|y| {
                (0..self.grid.width())
                    .map(|x| match self.grid.get(Cell::new(x, y)) {
                        CellClass::Free => '.',
                        CellClass::Null => '#',
                        CellClass::Unknown => '?',
                        CellClass::Object(id) => symbols[id as usize],
                    })
                    .collect()
            })
            .collect()
    }

    /// ASCII rendering; supports up to 62 object classes.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "resolution={}", self.grid.resolution());
        let [ox, oy] = self.grid.origin();
        if ox != 0.0 || oy != 0.0 {
            let _ = writeln!(out, "origin={ox},{oy}");
        }
        if let Some(ro) = self.safety_margin {
            let _ = writeln!(out, "ro={ro}");
        }
        for (sym, entry) in self.legend() {
            let _ = write!(out, "legend: {sym}={}", entry.class);
            if let Some(r) = entry.r {
                let _ = write!(out, ",r={r}");
            }
            if let Some(id) = entry.id {
                let _ = write!(out, ",id={id}");
            }
            out.push('\n');
        }
        for row in self.rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let m = JsonMap {
            resolution: self.grid.resolution(),
            origin: self.grid.origin(),
            ro: self.safety_margin,
            legend: self.legend().into_iter().collect(),
            rows: self.rows(),
            objectives: self.objectives.clone(),
        };
        serde_json::to_string_pretty(&m).expect("map serializes")
    }
}

fn parse_legend(line: usize, spec: &str) -> Result<(char, LegendEntry), MapError> {
    let spec = spec.trim();
    let (sym, rest) = spec
        .split_once('=')
        .ok_or_else(|| parse_err(line, "legend expects `<char>=<class>`"))?;
    let mut chars = sym.trim().chars();
    let (Some(sym), None) = (chars.next(), chars.next()) else {
        return Err(parse_err(line, format!("legend symbol `{sym}` must be one character")));
    };
    let mut parts = rest.split(',');
    let class = parts.next().unwrap_or_default().trim().to_string();
    let mut entry = LegendEntry { class, r: None, id: None };
    for part in parts {
        match part.trim().split_once('=') {
            Some(("r", v)) => entry.r = Some(parse_f64(line, "r", v)?),
            Some(("id", v)) => entry.id = Some(v.trim().to_string()),
            _ => return Err(parse_err(line, format!("unknown legend attribute `{part}`"))),
        }
    }
    Ok((sym, entry))
}

fn build_document(
    resolution: f64,
    origin: [f64; 2],
    ro: Option<f64>,
    legend: Vec<(char, LegendEntry)>,
    rows: Vec<(usize, String)>,
    objectives: Vec<Objective>,
) -> Result<MapDocument, MapError> {
    let height = rows.len();
    let width = rows.first().map(|(_, r)| r.chars().count()).unwrap_or(0);
    if width == 0 {
        return Err(parse_err(1, "map has no grid rows"));
    }

    let mut grid = SemanticGrid::new(width, height, resolution, Vec::new(), CellClass::Free)?.with_origin(origin);
    let mut doc_thresholds = BTreeMap::new();
    let mut object_ids = BTreeMap::new();
    let mut symbols: BTreeMap<char, u32> = BTreeMap::new();
    for (sym, entry) in legend {
        if matches!(sym, '.' | '#' | '?') {
            return Err(parse_err(1, format!("legend symbol `{sym}` is reserved")));
        }
        if entry.class.is_empty() {
            return Err(parse_err(1, format!("legend symbol `{sym}` has no class name")));
        }
        let id = grid.intern_class(&entry.class);
        symbols.insert(sym, id);
        if let Some(r) = entry.r {
            doc_thresholds.insert(entry.class.clone(), r);
        }
        if let Some(oid) = entry.id {
            object_ids.insert(entry.class, oid);
        }
    }

    for (y, (line_no, row)) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != width {
            return Err(parse_err(
                *line_no,
                format!("row has {} cells, expected {width}", chars.len()),
            ));
        }
        for (x, ch) in chars.into_iter().enumerate() {
            let class = match ch {
                '.' => CellClass::Free,
                '#' => CellClass::Null,
                '?' => CellClass::Unknown,
                c => match symbols.get(&c) {
                    Some(&id) => CellClass::Object(id),
                    None => return Err(parse_err(*line_no, format!("symbol `{c}` not in legend"))),
                },
            };
            grid.set(Cell::new(x, y), class);
        }
    }

    for o in &objectives {
        grid.check(o.cell)?;
    }

    Ok(MapDocument {
        grid,
        thresholds: doc_thresholds,
        safety_margin: ro,
        object_ids,
        objectives,
    })
}

impl VoxelMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut width = None;
        let mut height = None;
        let mut resolution = None;
        let mut origin = [0.0, 0.0];
        let mut z_ground = None;
        let mut z_ceiling = None;
        let mut voxels = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "width" => width = Some(parse_usize(line_no, value)?),
                    "height" => height = Some(parse_usize(line_no, value)?),
                    "resolution" => resolution = Some(parse_f64(line_no, "resolution", value)?),
                    "origin" => origin = parse_pair(line_no, "origin", value)?,
                    "z_ground" => z_ground = Some(parse_f64(line_no, "z_ground", value)?),
                    "z_ceiling" => z_ceiling = Some(parse_f64(line_no, "z_ceiling", value)?),
                    other => return Err(parse_err(line_no, format!("unknown header `{other}`"))),
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(x), Some(y), Some(z)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(line_no, "expected `x y z class`"));
            };
            let class: Vec<&str> = fields.collect();
            if class.is_empty() {
                return Err(parse_err(line_no, "expected `x y z class`"));
            }
            let class = class.join(" ");
            let state = match class.as_str() {
                "free" | "FREE" => VoxelState::Free,
                "null" | "NULL" => VoxelState::Null,
                _ => VoxelState::Class(class),
            };
            voxels.push(Voxel {
                x: parse_usize(line_no, x)?,
                y: parse_usize(line_no, y)?,
                z: parse_f64(line_no, "z", z)?,
                state,
            });
        }

        let missing = |k: &str| parse_err(1, format!("missing `{k}=` header"));
        Ok(VoxelMap {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            resolution: resolution.ok_or_else(|| missing("resolution"))?,
            origin,
            z_ground: z_ground.ok_or_else(|| missing("z_ground"))?,
            z_ceiling: z_ceiling.ok_or_else(|| missing("z_ceiling"))?,
            voxels,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "width={}", self.width);
        let _ = writeln!(out, "height={}", self.height);
        let _ = writeln!(out, "resolution={}", self.resolution);
        let _ = writeln!(out, "origin={},{}", self.origin[0], self.origin[1]);
        let _ = writeln!(out, "z_ground={}", self.z_ground);
        let _ = writeln!(out, "z_ceiling={}", self.z_ceiling);
        for v in &self.voxels {
            let class = match &v.state {
                VoxelState::Free => "free",
                VoxelState::Null => "null",
                VoxelState::Class(c) => c,
            };
            let _ = writeln!(out, "{} {} {} {}", v.x, v.y, v.z, class);
        }
        out
    }
}

fn parse_usize(line: usize, v: &str) -> Result<usize, MapError> {
    v.parse().map_err(|_| parse_err(line, format!("invalid index `{v}`")))
}
