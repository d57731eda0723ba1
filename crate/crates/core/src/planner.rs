//! A* over the implicit product of the 8-connected free-space grid and a
//! task automaton.
//!
//! A product node `(x, q)` is a free cell together with the automaton state
//! reached before consuming `l(x)`. Moving to a neighbour `x'` consumes the
//! source label: `(x, q) -> (x', T(q, l(x)))`. The search stops at the first
//! node with `T(q, l(x))` accepting, i.e. when the labels of every cell on the
//! path, including the last one, form an accepted word.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{StateId, TaskAutomaton};
use crate::heuristic::Heuristic;
use crate::ltl::{Formula, Word};
use crate::semmap::{Cell, LabelGrid, SemanticGrid};

const DIRECTIONS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("start cell {0} is not free")]
    StartOccupied(Cell),
    #[error("start cell {0} is outside the map")]
    StartOutOfBounds(Cell),
    #[error("no path satisfies the task ({expansions} nodes expanded)")]
    NoPath { expansions: usize },
    #[error("label set at cell {0} is missing from the automaton alphabet")]
    UndeclaredLetter(Cell),
}

/// In-bounds 8-neighbours of `cell` with their step costs: `resolution` for
/// cardinal moves, `sqrt(2) * resolution` for diagonal ones.
pub fn neighbors(grid: &SemanticGrid, cell: Cell) -> Vec<(Cell, f64)> {
    let res = grid.resolution();
    DIRECTIONS
        .iter()
        .filter_map(|&(dx, dy)| {
            let x = cell.x.checked_add_signed(dx)?;
            let y = cell.y.checked_add_signed(dy)?;
            let next = Cell::new(x, y);
            grid.contains(next).then(|| {
                let cost = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 * res } else { res };
                (next, cost)
            })
        })
        .collect()
}

/// Collision check for the straight move `from -> to`, with the segment
/// extended by `margin` meters past both endpoints. Samples are spaced at
/// most half a cell apart; points beyond the map are clamped to it.
pub fn edge_valid(grid: &SemanticGrid, from: Cell, to: Cell, margin: f64) -> bool {
    let a = grid.cell_center(from);
    let b = grid.cell_center(to);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let alpha = dx.hypot(dy);
    if alpha == 0.0 {
        return grid.is_free(from);
    }
    let (ux, uy) = (dx / alpha, dy / alpha);
    // keep the extended endpoints off cell boundaries
    let eps = 1e-9 * grid.resolution();
    let lo = -margin + eps;
    let hi = alpha + margin - eps;
    let length = (hi - lo).max(0.0);
    let samples = (length / (grid.resolution() / 2.0)).ceil().max(1.0) as usize;
    (0..=samples).all(|k| {
        let t = lo + length * k as f64 / samples as f64;
        let p = [a[0] + ux * t, a[1] + uy * t];
        grid.is_free(grid.cell_of_point(p))
    })
}

/// The implicit product graph for one map, label grid and automaton.
#[derive(Debug, Clone)]
pub struct ProductGraph<'a> {
    grid: &'a SemanticGrid,
    automaton: &'a TaskAutomaton,
    cell_letters: Vec<usize>,
    /// Valid move directions per cell, one bit per entry of `DIRECTIONS`.
    moves: Vec<u8>,
}

impl<'a> ProductGraph<'a> {
    pub fn new(
        grid: &'a SemanticGrid,
        labels: &LabelGrid,
        automaton: &'a TaskAutomaton,
        safety_margin: f64,
    ) -> Result<Self, PlanError> {
        let mut cell_letters = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let cell = grid.cell_at(i);
            let l = automaton
                .letter_id(labels.labels(cell))
                .ok_or(PlanError::UndeclaredLetter(cell))?;
            cell_letters.push(l);
        }
        let moves = (0..grid.len())
            .map(|i| {
                let cell = grid.cell_at(i);
                if !grid.is_free(cell) {
                    return 0;
                }
                let mut bits = 0u8;
                for (k, &(dx, dy)) in DIRECTIONS.iter().enumerate() {
                    let (Some(x), Some(y)) = (cell.x.checked_add_signed(dx), cell.y.checked_add_signed(dy)) else {
                        continue;
                    };
                    let next = Cell::new(x, y);
                    if grid.is_free(next) && edge_valid(grid, cell, next, safety_margin) {
                        bits |= 1 << k;
                    }
                }
                bits
            })
            .collect();
        Ok(ProductGraph {
            grid,
            automaton,
            cell_letters,
            moves,
        })
    }

    pub fn grid(&self) -> &SemanticGrid {
        self.grid
    }

    pub fn automaton(&self) -> &TaskAutomaton {
        self.automaton
    }

    /// `T(q, l(cell))`.
    pub fn consume(&self, cell: Cell, q: StateId) -> StateId {
        self.automaton.step(q, self.cell_letters[self.grid.index(cell)])
    }

    pub fn is_goal(&self, cell: Cell, q: StateId) -> bool {
        self.automaton.is_accepting(self.consume(cell, q))
    }

    /// Product edges out of `(cell, q)`: target cell, target state, cost.
    pub fn successors(&self, cell: Cell, q: StateId) -> impl Iterator<Item = (Cell, StateId, f64)> + '_ {
        let next_q = self.consume(cell, q);
        let bits = self.moves[self.grid.index(cell)];
        let res = self.grid.resolution();
        DIRECTIONS.iter().enumerate().filter_map(move |(k, &(dx, dy))| {
            if bits >> k & 1 == 0 {
                return None;
            }
            let next = Cell::new(cell.x.wrapping_add_signed(dx), cell.y.wrapping_add_signed(dy));
            let cost = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 * res } else { res };
            Some((next, next_q, cost))
        })
    }

    fn node(&self, cell: Cell, q: StateId) -> usize {
        self.grid.index(cell) * self.automaton.num_states() + q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPath {
    pub cells: Vec<Cell>,
    /// Automaton states along the path: `states[t]` is the state before
    /// consuming `l(cells[t])`; the extra last entry is the final state.
    pub states: Vec<StateId>,
    pub cost: f64,
    pub word: Word,
    pub expansions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    cell: Cell,
    q: StateId,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl Ord for Open {
    /// Max-heap order: smallest f first, then largest g, then smallest
    /// `(cell, q)`.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| (other.cell, other.q).cmp(&(self.cell, self.q)))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost path from `(start, q1)` whose word is accepted.
pub fn plan(
    graph: &ProductGraph<'_>,
    labels: &LabelGrid,
    heuristic: &impl Heuristic,
    start: Cell,
) -> Result<ProductPath, PlanError> {
    let grid = graph.grid;
    if !grid.contains(start) {
        return Err(PlanError::StartOutOfBounds(start));
    }
    if !grid.is_free(start) {
        return Err(PlanError::StartOccupied(start));
    }
    let n_states = graph.automaton.num_states();
    let n_nodes = grid.len() * n_states;
    let mut best = vec![f64::INFINITY; n_nodes];
    let mut parent = vec![usize::MAX; n_nodes];
    let mut closed = vec![false; n_nodes];
    let mut heap = BinaryHeap::new();
    let mut expansions = 0;

    let q0 = graph.automaton.initial();
    let h0 = heuristic.estimate(start, q0);
    if h0.is_finite() {
        best[graph.node(start, q0)] = 0.0;
        heap.push(Open {
            f: h0,
            g: 0.0,
            cell: start,
            q: q0,
        });
    }

    while let Some(Open { g, cell, q, .. }) = heap.pop() {
        let node = graph.node(cell, q);
        if closed[node] {
            continue;
        }
        closed[node] = true;
        expansions += 1;

        if graph.is_goal(cell, q) {
            return Ok(reconstruct(graph, labels, &parent, node, g, expansions));
        }

        for (next, next_q, step) in graph.successors(cell, q) {
            let target = graph.node(next, next_q);
            if closed[target] {
                continue;
            }
            let cand = g + step;
            if cand < best[target] {
                let h = heuristic.estimate(next, next_q);
                if !h.is_finite() {
                    continue;
                }
                best[target] = cand;
                parent[target] = node;
                heap.push(Open {
                    f: cand + h,
                    g: cand,
                    cell: next,
                    q: next_q,
                });
            }
        }
    }
    Err(PlanError::NoPath { expansions })
}

fn reconstruct(
    graph: &ProductGraph<'_>,
    labels: &LabelGrid,
    parent: &[usize],
    goal: usize,
    cost: f64,
    expansions: usize,
) -> ProductPath {
    let n_states = graph.automaton.num_states();
    let mut nodes = vec![goal];
    while let Some(&p) = nodes.last().map(|n| &parent[*n]) {
        if p == usize::MAX {
            break;
        }
        nodes.push(p);
    }
    nodes.reverse();
    let cells: Vec<Cell> = nodes.iter().map(|&n| graph.grid.cell_at(n / n_states)).collect();
    let mut states: Vec<StateId> = nodes.iter().map(|&n| n % n_states).collect();
    let last = *cells.last().expect("path has a start");
    states.push(graph.consume(last, *states.last().expect("path has a start")));
    let word = cells.iter().map(|&c| labels.labels(c).clone()).collect();
    ProductPath {
        cells,
        states,
        cost,
        word,
        expansions,
    }
}

/// Check a path against the formula directly, without the automaton.
pub fn verify(path: &[Cell], formula: &Formula, labels: &LabelGrid) -> bool {
    match labels.word_of_path(path) {
        Ok(word) => formula.eval_finite(&word),
        Err(_) => false,
    }
}
