//! Consistent LTL heuristic for the product-graph search.
//!
//! With `D_l(x)` the straight-line distance from `x` to the nearest cell whose
//! label set is `l`, and `c_l(l1, l2)` the smallest straight-line distance
//! between a cell labelled `l1` and a cell labelled `l2`:
//!
//! ```text
//! g(l, q) = 0                                         if q accepting
//! g(l, q) = min_l' c_l(l, l') + g(l', T(q, l'))      otherwise
//! h(x, q) = 0                                         if q accepting
//! h(x, q) = min_l' D_l'(x) + g(l', T(q, l'))         otherwise
//! ```
//!
//! `g(l, q)` bounds the remaining cost from a cell labelled `l` after the
//! automaton has consumed that label and reached `q`. Label sets are those
//! occurring in the map after projection onto the formula's propositions;
//! any other set has no cells and contributes nothing to the minimum.
//! Straight-line distance never exceeds the 8-connected path length, so the
//! estimate is admissible, and the triangle inequality makes it consistent.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::automaton::{letter_key, project, StateId, TaskAutomaton};
use crate::exec::Execution;
use crate::ltl::Letter;
use crate::semmap::{squared_edt, Cell, LabelGrid};

pub trait Heuristic {
    fn estimate(&self, cell: Cell, q: StateId) -> f64;
}

/// `h = 0`; turns A* into Dijkstra.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn estimate(&self, _cell: Cell, _q: StateId) -> f64 {
        0.0
    }
}

/// Distinct (projected) label sets of a label grid with a distance field per
/// set. Set 0 is always the empty set, even when no cell carries it.
#[derive(Debug, Clone)]
pub struct LabelSetIndex {
    width: usize,
    resolution: f64,
    sets: Vec<Letter>,
    cell_sets: Vec<usize>,
    counts: Vec<usize>,
    /// Distance in meters from each cell to the nearest cell with the set.
    fields: Vec<Vec<f64>>,
}

impl LabelSetIndex {
    /// Index the label sets of `lg`, restricted to `props` when given.
    pub fn build(lg: &LabelGrid, props: Option<&BTreeSet<String>>, exec: Execution) -> Self {
        let mut sets = vec![Letter::new()];
        let mut ids: HashMap<Letter, usize> = HashMap::from([(Letter::new(), 0)]);
        let n = lg.width() * lg.height();
        let mut cell_sets = Vec::with_capacity(n);
        for i in 0..n {
            let cell = Cell::new(i % lg.width(), i / lg.width());
            let l = match props {
                Some(p) => project(lg.labels(cell), p),
                None => lg.labels(cell).clone(),
            };
            let id = *ids.entry(l.clone()).or_insert_with(|| {
                sets.push(l);
                sets.len() - 1
            });
            cell_sets.push(id);
        }
        let mut counts = vec![0; sets.len()];
        for &s in &cell_sets {
            counts[s] += 1;
        }
        let res = lg.resolution();
        let fields = exec.map_range(sets.len(), |s| {
            squared_edt(lg.width(), lg.height(), |i| cell_sets[i] == s)
                .into_iter()
                .map(|d2| d2.sqrt() * res)
                .collect()
        });
        LabelSetIndex {
            width: lg.width(),
            resolution: res,
            sets,
            cell_sets,
            counts,
            fields,
        }
    }

    pub fn sets(&self) -> &[Letter] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn set_of(&self, cell: Cell) -> usize {
        self.cell_sets[cell.y * self.width + cell.x]
    }

    pub fn occurs(&self, set: usize) -> bool {
        self.counts[set] > 0
    }

    pub fn distance(&self, set: usize, cell: Cell) -> f64 {
        self.fields[set][cell.y * self.width + cell.x]
    }

    pub fn id_of(&self, letter: &Letter) -> Option<usize> {
        self.sets.iter().position(|s| s == letter)
    }
}

/// Pairwise lower-bound distances `c_l` between label sets.
#[derive(Debug, Clone)]
pub struct LabelDistances {
    n: usize,
    table: Vec<f64>,
}

impl LabelDistances {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.n + b]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

pub fn label_set_distances(index: &LabelSetIndex, exec: Execution) -> LabelDistances {
    let n = index.len();
    let rows = exec.map_range(n, |a| {
        let mut row = vec![f64::INFINITY; n];
        for (i, &b) in index.cell_sets.iter().enumerate() {
            let d = index.fields[a][i];
            if d < row[b] {
                row[b] = d;
            }
        }
        row
    });
    LabelDistances {
        n,
        table: rows.into_iter().flatten().collect(),
    }
}

/// `g(l, q)` for every label set and automaton state; `+inf` where no
/// accepting state can be reached.
#[derive(Debug, Clone)]
pub struct GTable {
    n_states: usize,
    values: Vec<f64>,
}

impl GTable {
    pub fn get(&self, set: usize, q: StateId) -> f64 {
        self.values[set * self.n_states + q]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn to_csv(&self, index: &LabelSetIndex) -> String {
        let mut out = String::from("label_set,state,g\n");
        for (s, letter) in index.sets().iter().enumerate() {
            for q in 0..self.n_states {
                let _ = writeln!(out, "\"{}\",{q},{}", letter_key(letter), self.get(s, q));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Letter id in `automaton` for each label set of `index`.
pub fn set_letters(automaton: &TaskAutomaton, index: &LabelSetIndex) -> Vec<usize> {
    index
        .sets()
        .iter()
        .map(|l| {
            automaton
                .letter_id(l)
                .expect("automaton must be compiled over the label sets of the index")
        })
        .collect()
}

/// Least fixed point of the `g` recursion by Dijkstra over `(label set,
/// state)` nodes, seeded with zero at every accepting state.
pub fn compute_g(automaton: &TaskAutomaton, c_l: &LabelDistances, index: &LabelSetIndex) -> GTable {
    let n_states = automaton.num_states();
    let n_sets = index.len();
    let letters = set_letters(automaton, index);

    // preds[l'][p'] = states p with T(p, l') = p'
    let mut preds: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); n_states]; n_sets];
    for (s, &l) in letters.iter().enumerate() {
        for p in 0..n_states {
            preds[s][automaton.step(p, l)].push(p);
        }
    }

    let mut values = vec![f64::INFINITY; n_sets * n_states];
    let mut heap = BinaryHeap::new();
    for q in automaton.accepting_states() {
        for s in 0..n_sets {
            values[s * n_states + q] = 0.0;
            heap.push(Entry {
                cost: 0.0,
                node: s * n_states + q,
            });
        }
    }
    let mut done = vec![false; n_sets * n_states];
    while let Some(Entry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        let (s2, q2) = (node / n_states, node % n_states);
        if !index.occurs(s2) {
            continue;
        }
        for &p in &preds[s2][q2] {
            if automaton.is_accepting(p) {
                continue;
            }
            for s in 0..n_sets {
                let step = c_l.get(s, s2);
                if !step.is_finite() {
                    continue;
                }
                let cand = step + cost;
                let idx = s * n_states + p;
                if cand < values[idx] {
                    values[idx] = cand;
                    heap.push(Entry { cost: cand, node: idx });
                }
            }
        }
    }
    GTable { n_states, values }
}

/// The LTL heuristic over a frozen automaton and label-set index.
#[derive(Debug, Clone)]
pub struct LtlHeuristic {
    index: LabelSetIndex,
    g: GTable,
    /// `(set, T(q, set))` pairs worth scanning per state.
    candidates: Vec<Vec<(usize, StateId)>>,
    accepting: Vec<bool>,
}

impl LtlHeuristic {
    pub fn new(automaton: &TaskAutomaton, index: LabelSetIndex, exec: Execution) -> Self {
        let c_l = label_set_distances(&index, exec);
        let g = compute_g(automaton, &c_l, &index);
        let letters = set_letters(automaton, &index);
        let candidates = (0..automaton.num_states())
            .map(|q| {
                letters
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| index.occurs(s))
                    .map(|(s, &l)| (s, automaton.step(q, l)))
                    .filter(|&(s, q2)| g.get(s, q2).is_finite())
                    .collect()
            })
            .collect();
        LtlHeuristic {
            index,
            g,
            candidates,
            accepting: (0..automaton.num_states()).map(|q| automaton.is_accepting(q)).collect(),
        }
    }

    pub fn index(&self) -> &LabelSetIndex {
        &self.index
    }

    pub fn g_table(&self) -> &GTable {
        &self.g
    }
}

impl Heuristic for LtlHeuristic {
    fn estimate(&self, cell: Cell, q: StateId) -> f64 {
        if self.accepting[q] {
            return 0.0;
        }
        self.candidates[q]
            .iter()
            .map(|&(s, q2)| self.index.distance(s, cell) + self.g.get(s, q2))
            .fold(f64::INFINITY, f64::min)
    }
}
