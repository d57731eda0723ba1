//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::{Path, PathBuf};

use ltlnav::automaton::StateId;
use ltlnav::ltl::{Formula, Letter};
use ltlnav::planner::edge_valid;
use ltlnav::semmap::io::MapDocument;
use ltlnav::semmap::{Cell, CellClass, LabelGrid, SemanticGrid};
use ltlnav::TaskAutomaton;
use rand::rngs::StdRng;
use rand::Rng;

// ---------------------------------------------------------------- formulas

pub fn random_formula(rng: &mut StdRng, props: &[&str], depth: usize) -> Formula {
    let leaf = depth == 0 || rng.random_bool(0.25);
    if leaf {
        return match rng.random_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::prop(props[rng.random_range(0..props.len())]),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..11) {
        0 => Formula::not(random_formula(rng, props, d)),
        1 => Formula::and(random_formula(rng, props, d), random_formula(rng, props, d)),
        2 => Formula::or(random_formula(rng, props, d), random_formula(rng, props, d)),
        3 => Formula::imply(random_formula(rng, props, d), random_formula(rng, props, d)),
        4 => Formula::next(random_formula(rng, props, d)),
        5 => Formula::weak_next(random_formula(rng, props, d)),
        6 | 7 => Formula::until(random_formula(rng, props, d), random_formula(rng, props, d)),
        8 => Formula::eventually(random_formula(rng, props, d)),
        _ => Formula::always(random_formula(rng, props, d)),
    }
}

/// Every subset of `props`.
pub fn all_letters(props: &[&str]) -> Vec<Letter> {
    (0..1usize << props.len())
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.to_string())
                .collect()
        })
        .collect()
}

/// Every word over `letters` of length `0..=max_len`, shortest first.
pub fn all_words(letters: &[Letter], max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * letters.len());
        for w in &frontier {
            for l in letters {
                let mut v = w.clone();
                v.push(l.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Textbook recursive LTLf satisfaction at position `i`.
pub fn holds(f: &Formula, w: &[Letter], i: usize) -> bool {
    let n = w.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => i < n && w[i].contains(p),
        Formula::Not(a) => !holds(a, w, i),
        Formula::And(a, b) => holds(a, w, i) && holds(b, w, i),
        Formula::Or(a, b) => holds(a, w, i) || holds(b, w, i),
        Formula::Imply(a, b) => !holds(a, w, i) || holds(b, w, i),
        Formula::Next(a) => i + 1 < n && holds(a, w, i + 1),
        Formula::WeakNext(a) => i + 1 >= n || holds(a, w, i + 1),
        Formula::Until(a, b) => (i..n).any(|j| holds(b, w, j) && (i..j).all(|k| holds(a, w, k))),
        Formula::Eventually(a) => (i..n).any(|j| holds(a, w, j)),
        Formula::Always(a) => (i..n).all(|j| holds(a, w, j)),
    }
}

pub fn oracle_accepts(f: &Formula, w: &[Letter]) -> bool {
    holds(f, w, 0)
}

// ---------------------------------------------------------------- grids

/// Random grid with up to `n_classes` classes, sprinkled objects and walls.
pub fn random_grid(rng: &mut StdRng, max_side: usize, n_classes: usize) -> SemanticGrid {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let res = [0.1, 0.25, 0.5, 1.0][rng.random_range(0..4)];
    let names: Vec<String> = (0..n_classes).map(|k| format!("c{k}")).collect();
    let mut g = SemanticGrid::new(w, h, res, names, CellClass::Free).unwrap();
    let density = rng.random_range(0.0..0.2);
    for y in 0..h {
        for x in 0..w {
            let c = Cell::new(x, y);
            if rng.random_bool(density) {
                g.set(c, CellClass::Object(rng.random_range(0..n_classes) as u32));
            } else if rng.random_bool(0.1) {
                g.set(c, CellClass::Null);
            }
        }
    }
    g
}

/// Label sets by all-pairs nearest-object search.
pub fn brute_force_labels(grid: &SemanticGrid, thresholds: &BTreeMap<String, f64>) -> Vec<Letter> {
    let res = grid.resolution();
    let cells: Vec<Cell> = (0..grid.len()).map(|i| grid.cell_at(i)).collect();
    cells
        .iter()
        .map(|&x| {
            grid.classes()
                .iter()
                .enumerate()
                .filter(|(k, name)| {
                    let r = thresholds.get(*name).copied().unwrap_or(1.5 * res);
                    cells
                        .iter()
                        .filter(|y| grid.get(**y) == CellClass::Object(*k as u32))
                        .any(|y| {
                            let dx = x.x as f64 - y.x as f64;
                            let dy = x.y as f64 - y.y as f64;
                            (dx * dx + dy * dy).sqrt() * res <= r
                        })
                })
                .map(|(_, name)| name.clone())
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- maps

/// Data directory of the core crate, also when included from another crate.
pub fn core_data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

/// The generated benchmark maps `mapNN.txt`.
pub fn bundled_maps() -> Vec<(String, MapDocument)> {
    let dir = core_data().join("maps");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("map") && n.ends_with(".txt"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let doc = MapDocument::load(dir.join(&n)).unwrap();
            (n, doc)
        })
        .collect()
}

/// Classes actually placed on the map, in class order.
pub fn present_classes(grid: &SemanticGrid) -> Vec<String> {
    grid.present_classes()
        .into_iter()
        .map(|k| grid.classes()[k as usize].clone())
        .collect()
}

/// Tier 1: single goal. Tier 2: two goals or a goal with an avoid
/// constraint. Tier 3: ordered sequences, until and implication.
pub fn tiered_formulas(classes: &[String]) -> Vec<(u8, Formula)> {
    let p = |i: usize| Formula::prop(classes[i % classes.len()].clone());
    let f = Formula::eventually;
    let g = Formula::always;
    let not = Formula::not;
    let mut out = vec![(1, f(p(0))), (1, f(p(1)))];
    out.push((2, Formula::and(f(p(0)), f(p(1)))));
    out.push((2, Formula::and(f(p(1)), g(not(p(2))))));
    out.push((2, f(Formula::and(p(0), f(p(2))))));
    out.push((3, f(Formula::and(p(0), f(Formula::and(p(1), f(p(2))))))));
    out.push((3, Formula::and(Formula::until(not(p(1)), p(0)), f(p(1)))));
    out.push((
        3,
        Formula::and(f(Formula::and(p(2), f(p(0)))), g(not(p(1)))),
    ));
    out.push((3, Formula::and(f(p(2)), g(Formula::imply(p(0), f(p(1)))))));
    out
}

pub fn first_free(grid: &SemanticGrid) -> Cell {
    (0..grid.len())
        .map(|i| grid.cell_at(i))
        .find(|&c| grid.is_free(c))
        .expect("map has a free cell")
}

/// A free cell near the middle of the map.
pub fn central_free(grid: &SemanticGrid) -> Cell {
    let (cx, cy) = (grid.width() as f64 / 2.0, grid.height() as f64 / 2.0);
    (0..grid.len())
        .map(|i| grid.cell_at(i))
        .filter(|&c| grid.is_free(c))
        .min_by(|a, b| {
            let da = (a.x as f64 - cx).powi(2) + (a.y as f64 - cy).powi(2);
            let db = (b.x as f64 - cx).powi(2) + (b.y as f64 - cy).powi(2);
            da.total_cmp(&db).then(a.cmp(b))
        })
        .expect("map has a free cell")
}

// ---------------------------------------------------------------- product graph

/// Explicitly materialised product graph: node `cell_index * n_states + q`.
pub struct ExplicitProduct {
    pub n_states: usize,
    pub width: usize,
    pub edges: Vec<Vec<(usize, f64)>>,
    pub goal: Vec<bool>,
}

const MOVES: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

impl ExplicitProduct {
    pub fn build(grid: &SemanticGrid, labels: &LabelGrid, automaton: &TaskAutomaton, margin: f64) -> Self {
        let n_states = automaton.num_states();
        let n = grid.len() * n_states;
        let mut edges = vec![Vec::new(); n];
        let mut goal = vec![false; n];
        let res = grid.resolution();
        for i in 0..grid.len() {
            let cell = grid.cell_at(i);
            if !grid.is_free(cell) {
                continue;
            }
            for q in 0..n_states {
                let q2 = automaton.step_letter(q, labels.labels(cell)).expect("letter declared");
                let node = i * n_states + q;
                goal[node] = automaton.is_accepting(q2);
                for (dx, dy) in MOVES {
                    let (x, y) = (cell.x as i64 + dx, cell.y as i64 + dy);
                    if x < 0 || y < 0 || x >= grid.width() as i64 || y >= grid.height() as i64 {
                        continue;
                    }
                    let next = Cell::new(x as usize, y as usize);
                    if !grid.is_free(next) || !edge_valid(grid, cell, next, margin) {
                        continue;
                    }
                    let cost = if dx != 0 && dy != 0 { 2f64.sqrt() * res } else { res };
                    edges[node].push((grid.index(next) * n_states + q2, cost));
                }
            }
        }
        ExplicitProduct {
            n_states,
            width: grid.width(),
            edges,
            goal,
        }
    }

    pub fn node(&self, cell: Cell, q: StateId) -> usize {
        (cell.y * self.width + cell.x) * self.n_states + q
    }

    /// Cost of the cheapest path from `source` to any goal node.
    pub fn forward_cost(&self, source: usize) -> Option<f64> {
        let dist = dijkstra(&self.edges, &[source]);
        (0..dist.len())
            .filter(|&v| self.goal[v])
            .map(|v| dist[v])
            .filter(|d| d.is_finite())
            .min_by(f64::total_cmp)
    }

    /// Exact cost-to-accept for every node.
    pub fn cost_to_accept(&self) -> Vec<f64> {
        let mut reverse = vec![Vec::new(); self.edges.len()];
        for (u, out) in self.edges.iter().enumerate() {
            for &(v, c) in out {
                reverse[v].push((u, c));
            }
        }
        let sources: Vec<usize> = (0..self.goal.len()).filter(|&v| self.goal[v]).collect();
        dijkstra(&reverse, &sources)
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn dijkstra(edges: &[Vec<(usize, f64)>], sources: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; edges.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Item(0.0, s));
    }
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, c) in &edges[u] {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    dist
}

// ---------------------------------------------------------------- dsl

const UNARY: [&str; 4] = ["ltl_not", "ltl_next", "ltl_eventually", "ltl_always"];
const BINARY: [&str; 4] = ["ltl_and", "ltl_or", "ltl_until", "ltl_imply"];

fn random_expr(rng: &mut StdRng, vars: &[String], ids: &[&str], depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.3) {
        if !vars.is_empty() && rng.random_bool(0.6) {
            return vars[rng.random_range(0..vars.len())].clone();
        }
        let quote = if rng.random_bool(0.5) { '"' } else { '\'' };
        return format!("ap({quote}{}{quote})", ids[rng.random_range(0..ids.len())]);
    }
    if rng.random_bool(0.45) {
        let f = UNARY[rng.random_range(0..UNARY.len())];
        format!("{f}({})", random_expr(rng, vars, ids, depth - 1))
    } else {
        let f = BINARY[rng.random_range(0..BINARY.len())];
        let a = random_expr(rng, vars, ids, depth - 1);
        let b = random_expr(rng, vars, ids, depth - 1);
        if rng.random_bool(0.2) {
            format!("{f}(\n        {a},\n        {b},  # split\n    )")
        } else {
            format!("{f}({a}, {b})")
        }
    }
}

/// A well-formed program in the answer style: docstring, comments,
/// assignments, and a final return.
pub fn random_dsl_program(rng: &mut StdRng, ids: &[&str]) -> String {
    let mut out = format!("def program_{}():\n", rng.random_range(0..1000));
    if rng.random_bool(0.7) {
        out.push_str("    \"\"\"\n    Reach the goal\n    \"\"\"\n");
    }
    let mut vars: Vec<String> = Vec::new();
    for k in 0..rng.random_range(0..6) {
        if rng.random_bool(0.3) {
            out.push_str("    # describe the constraints\n");
        }
        let name = format!("v{k}");
        let value = random_expr(rng, &vars, ids, 3);
        let trailer = if rng.random_bool(0.3) { "  # note" } else { "" };
        out.push_str(&format!("    {name} = {value}{trailer}\n"));
        vars.push(name);
    }
    out.push_str(&format!("    return {}\n", random_expr(rng, &vars, ids, 2)));
    if rng.random_bool(0.2) {
        out = format!("```python\n{out}```\n");
    }
    out
}

/// Random byte-level damage: drop, duplicate or swap a character.
pub fn mutate(rng: &mut StdRng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return String::new();
    }
    let i = rng.random_range(0..chars.len());
    match rng.random_range(0..3) {
        0 => {
            chars.remove(i);
        }
        1 => chars.insert(i, chars[i]),
        _ => {
            let j = rng.random_range(0..chars.len());
            chars.swap(i, j);
        }
    }
    chars.into_iter().collect()
}
