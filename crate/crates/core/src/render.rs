//! Path records and map/path overlays (SVG and text).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::automaton::StateId;
use crate::ltl::Word;
use crate::pipeline::PlanOutcome;
use crate::semmap::io::MapDocument;
use crate::semmap::{Cell, CellClass};

/// Everything `plan` writes about a solved task; read back by `render`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    /// Prefix formula over object ids.
    pub formula: String,
    /// Prefix formula over class names.
    pub resolved: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grounded: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    pub start: Cell,
    pub cells: Vec<Cell>,
    pub states: Vec<StateId>,
    pub word: Word,
    pub cost: f64,
    pub expansions: usize,
    pub verified: bool,
}

impl PathRecord {
    pub fn from_outcome(out: &PlanOutcome) -> Self {
        PathRecord {
            formula: out.formula.to_prefix(),
            resolved: out.resolved.to_prefix(),
            grounded: out.translation.as_ref().map(|t| t.grounded.clone()),
            attempts: out.translation.as_ref().map(|t| t.attempts),
            start: out.path.cells[0],
            cells: out.path.cells.clone(),
            states: out.path.states.clone(),
            word: out.path.word.clone(),
            cost: out.path.cost,
            expansions: out.path.expansions,
            verified: out.verified,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path record serializes") + "\n"
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

const PALETTE: [&str; 10] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45", "#469990", "#9a6324",
];
const PX: usize = 16;

/// SVG of the map with an optional path. Row 0 is drawn at the top.
pub fn render_svg(doc: &MapDocument, path: &[Cell]) -> String {
    let g = &doc.grid;
    let (w, h) = (g.width() * PX, g.height() * PX);
    let legend_h = 18 * g.classes().len() + 8;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{}\" viewBox=\"0 0 {w} {}\">",
        h + legend_h,
        h + legend_h
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>");
    for y in 0..g.height() {
        for x in 0..g.width() {
            let fill = match g.get(Cell::new(x, y)) {
                CellClass::Free => continue,
                CellClass::Null => "#222222",
                CellClass::Unknown => "#aaaaaa",
                CellClass::Object(id) => PALETTE[id as usize % PALETTE.len()],
            };
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{PX}\" height=\"{PX}\" fill=\"{fill}\"/>",
                x * PX,
                y * PX
            );
        }
    }
    if !path.is_empty() {
        let center = |c: &Cell| (c.x * PX + PX / 2, c.y * PX + PX / 2);
        let points: Vec<String> = path
            .iter()
            .map(|c| {
                let (x, y) = center(c);
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"2\"/>",
            points.join(" ")
        );
        let (sx, sy) = center(&path[0]);
        let _ = writeln!(s, "<circle cx=\"{sx}\" cy=\"{sy}\" r=\"5\" fill=\"#00aa00\"/>");
        let (ex, ey) = center(path.last().expect("non-empty"));
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#cc0000\"/>",
            ex - 5,
            ey - 5
        );
    }
    for (i, class) in g.classes().iter().enumerate() {
        let y = h + 8 + 18 * i;
        let label = match doc.object_ids.get(class) {
            Some(id) => format!("{class} ({id})"),
            None => class.clone(),
        };
        let _ = writeln!(
            s,
            "<rect x=\"4\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"22\" y=\"{}\" font-size=\"12\" font-family=\"monospace\">{}</text>",
            PALETTE[i % PALETTE.len()],
            y + 11,
            xml_escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Map rows with the path drawn as `*`, start `S` and end `E`.
pub fn render_ascii(doc: &MapDocument, path: &[Cell]) -> String {
    let mut rows: Vec<Vec<char>> = doc.rows().into_iter().map(|r| r.chars().collect()).collect();
    for c in path {
        rows[c.y][c.x] = '*';
    }
    if let (Some(first), Some(last)) = (path.first(), path.last()) {
        rows[last.y][last.x] = 'E';
        rows[first.y][first.x] = 'S';
    }
    rows.into_iter().map(|r| r.into_iter().collect::<String>() + "\n").collect()
}
