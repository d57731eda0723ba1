//! Deterministic finite-trace automata built by formula progression.
//!
//! Every state is a normalised residual formula. Consuming a letter rewrites
//! the residual so that `letter . w |= f` iff `w |= progress(f, letter)`. A
//! state accepts when its residual holds on the empty word.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::ltl::{Formula, Letter};

pub type StateId = usize;

pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("automaton exceeded {cap} states")]
    StateExplosion { cap: usize },
}

/// One progression step, normalised. `f` should be in negation normal form;
/// other shapes are normalised on the fly.
pub fn progress(f: &Formula, letter: &Letter) -> Formula {
    canonical(&step(f, letter))
}

fn step(f: &Formula, letter: &Letter) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Prop(p) => constant(letter.contains(p)),
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Prop(p) => constant(!letter.contains(p)),
            _ => step(&normalize(&f.nnf()), letter),
        },
        Formula::Imply(..) => step(&normalize(&f.nnf()), letter),
        Formula::And(a, b) => conjunction(vec![step(a, letter), step(b, letter)]),
        Formula::Or(a, b) => disjunction(vec![step(a, letter), step(b, letter)]),
        Formula::Next(g) => {
            if holds_on_empty(g) {
                // the residual must also demand a non-empty continuation
                conjunction(vec![(**g).clone(), Formula::eventually(Formula::True)])
            } else {
                (**g).clone()
            }
        }
        Formula::WeakNext(g) => {
            if holds_on_empty(g) {
                (**g).clone()
            } else {
                disjunction(vec![(**g).clone(), Formula::always(Formula::False)])
            }
        }
        Formula::Eventually(g) => disjunction(vec![step(g, letter), f.clone()]),
        Formula::Always(g) => conjunction(vec![step(g, letter), f.clone()]),
        Formula::Until(a, b) => disjunction(vec![
            step(b, letter),
            conjunction(vec![step(a, letter), f.clone()]),
        ]),
    }
}

fn constant(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn holds_on_empty(f: &Formula) -> bool {
    f.eval_finite(&[])
}

/// NNF in canonical disjunctive form: a sorted disjunction of sorted
/// conjunctions of atoms (literals and temporal subformulas), with
/// contradictory and subsumed clauses removed. Residuals that are equal as
/// boolean combinations of the same atoms normalise to the same formula,
/// which keeps the reachable state set finite.
pub fn normalize(f: &Formula) -> Formula {
    fn go(f: &Formula) -> Formula {
        match f {
            Formula::True | Formula::False | Formula::Prop(_) | Formula::Not(_) => f.clone(),
            Formula::And(a, b) => conjunction(vec![go(a), go(b)]),
            Formula::Or(a, b) => disjunction(vec![go(a), go(b)]),
            Formula::Imply(..) => go(&f.nnf()),
            Formula::Next(g) => Formula::next(go(g)),
            Formula::WeakNext(g) => Formula::weak_next(go(g)),
            Formula::Eventually(g) => Formula::eventually(go(g)),
            Formula::Always(g) => Formula::always(go(g)),
            Formula::Until(a, b) => Formula::until(go(a), go(b)),
        }
    }
    canonical(&go(&f.nnf()))
}

type Clause = BTreeSet<Formula>;

fn clauses(f: &Formula) -> Vec<Clause> {
    match f {
        Formula::True => vec![Clause::new()],
        Formula::False => Vec::new(),
        Formula::Or(a, b) => {
            let mut out = clauses(a);
            out.extend(clauses(b));
            out
        }
        Formula::And(a, b) => {
            let right = clauses(b);
            let mut out = Vec::new();
            for l in clauses(a) {
                for r in &right {
                    let mut c = l.clone();
                    c.extend(r.iter().cloned());
                    if !contradictory(&c) {
                        out.push(c);
                    }
                }
            }
            out
        }
        atom => vec![Clause::from([atom.clone()])],
    }
}

fn contradictory(c: &Clause) -> bool {
    c.iter().any(|x| match x {
        Formula::Prop(_) => c.contains(&Formula::not(x.clone())),
        _ => false,
    })
}

fn canonical(f: &Formula) -> Formula {
    let all: BTreeSet<Clause> = clauses(f).into_iter().collect();
    let mut kept: Vec<Clause> = Vec::new();
    // shortest first, so a clause is only dropped for a subset already kept
    let mut by_len: Vec<Clause> = all.into_iter().collect();
    by_len.sort_by_key(|c| c.len());
    for c in by_len {
        if !kept.iter().any(|k| k.is_subset(&c)) {
            kept.push(c);
        }
    }
    let terms: BTreeSet<Formula> = kept
        .into_iter()
        .map(|c| fold_right(c, Formula::True, Formula::and))
        .collect();
    fold_right(terms, Formula::False, Formula::or)
}

fn conjunction(parts: Vec<Formula>) -> Formula {
    let mut flat = BTreeSet::new();
    for p in parts {
        match p {
            Formula::False => return Formula::False,
            Formula::True => {}
            Formula::And(..) => {
                let mut stack = vec![p];
                while let Some(x) = stack.pop() {
                    match x {
                        Formula::And(a, b) => {
                            stack.push(*a);
                            stack.push(*b);
                        }
                        other => {
                            flat.insert(other);
                        }
                    }
                }
            }
            other => {
                flat.insert(other);
            }
        }
    }
    fold_right(flat, Formula::True, Formula::and)
}

fn disjunction(parts: Vec<Formula>) -> Formula {
    let mut flat = BTreeSet::new();
    for p in parts {
        match p {
            Formula::True => return Formula::True,
            Formula::False => {}
            Formula::Or(..) => {
                let mut stack = vec![p];
                while let Some(x) = stack.pop() {
                    match x {
                        Formula::Or(a, b) => {
                            stack.push(*a);
                            stack.push(*b);
                        }
                        other => {
                            flat.insert(other);
                        }
                    }
                }
            }
            other => {
                flat.insert(other);
            }
        }
    }
    fold_right(flat, Formula::False, Formula::or)
}

fn fold_right(
    items: BTreeSet<Formula>,
    unit: Formula,
    join: fn(Formula, Formula) -> Formula,
) -> Formula {
    let mut items: Vec<Formula> = items.into_iter().collect();
    let Some(mut acc) = items.pop() else {
        return unit;
    };
    while let Some(x) = items.pop() {
        acc = join(x, acc);
    }
    acc
}

/// Restrict a letter to the propositions an automaton cares about.
pub fn project(letter: &Letter, props: &BTreeSet<String>) -> Letter {
    letter.intersection(props).cloned().collect()
}

/// Canonical text form of a letter, used in dumps and table keys.
pub fn letter_key(letter: &Letter) -> String {
    let names: Vec<&str> = letter.iter().map(String::as_str).collect();
    format!("{{{}}}", names.join(","))
}

/// Lazily expanded automaton. Transitions are computed on first use and
/// memoised by `(state, projected letter)`.
#[derive(Debug, Clone)]
pub struct AutomatonBuilder {
    formula: Formula,
    props: BTreeSet<String>,
    states: Vec<Formula>,
    index: HashMap<Formula, StateId>,
    memo: HashMap<(StateId, Letter), StateId>,
    cap: usize,
}

impl AutomatonBuilder {
    pub fn new(formula: &Formula) -> Self {
        Self::with_cap(formula, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(formula: &Formula, cap: usize) -> Self {
        let initial = normalize(formula);
        let mut index = HashMap::new();
        index.insert(initial.clone(), 0);
        AutomatonBuilder {
            formula: formula.clone(),
            props: formula.atomic_props(),
            states: vec![initial],
            index,
            memo: HashMap::new(),
            cap,
        }
    }

    pub fn props(&self) -> &BTreeSet<String> {
        &self.props
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_formula(&self, q: StateId) -> &Formula {
        &self.states[q]
    }

    pub fn transition(&mut self, q: StateId, letter: &Letter) -> Result<StateId, AutomatonError> {
        let letter = project(letter, &self.props);
        if let Some(&next) = self.memo.get(&(q, letter.clone())) {
            return Ok(next);
        }
        let residual = progress(&self.states[q], &letter);
        let next = match self.index.get(&residual) {
            Some(&id) => id,
            None => {
                if self.states.len() >= self.cap {
                    return Err(AutomatonError::StateExplosion { cap: self.cap });
                }
                let id = self.states.len();
                self.index.insert(residual.clone(), id);
                self.states.push(residual);
                id
            }
        };
        self.memo.insert((q, letter), next);
        Ok(next)
    }

    /// Expand every state reachable over `letters` (the empty letter is always
    /// included) and produce an immutable transition table.
    pub fn freeze<'a, I>(mut self, letters: I) -> Result<TaskAutomaton, AutomatonError>
    where
        I: IntoIterator<Item = &'a Letter>,
    {
        let mut alphabet: Vec<Letter> = vec![Letter::new()];
        let mut letter_index: HashMap<Letter, usize> = HashMap::new();
        letter_index.insert(Letter::new(), 0);
        for l in letters {
            let l = project(l, &self.props);
            if !letter_index.contains_key(&l) {
                letter_index.insert(l.clone(), alphabet.len());
                alphabet.push(l);
            }
        }

        let mut queue = VecDeque::from([0]);
        let mut seen = vec![true];
        while let Some(q) = queue.pop_front() {
            for l in &alphabet {
                let next = self.transition(q, l)?;
                if next >= seen.len() {
                    seen.resize(next + 1, false);
                }
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }

        let n_letters = alphabet.len();
        let mut table = vec![0; self.states.len() * n_letters];
        for q in 0..self.states.len() {
            for (li, l) in alphabet.iter().enumerate() {
                table[q * n_letters + li] = self.memo[&(q, l.clone())];
            }
        }
        let accepting = self.states.iter().map(holds_on_empty).collect();
        Ok(TaskAutomaton {
            formula: self.formula,
            props: self.props,
            letters: alphabet,
            letter_index,
            states: self.states,
            index: self.index,
            accepting,
            table,
        })
    }
}

enum Cursor {
    State(StateId),
    Residual(Formula),
}

/// A fully expanded, immutable automaton over a declared alphabet.
#[derive(Debug, Clone)]
pub struct TaskAutomaton {
    formula: Formula,
    props: BTreeSet<String>,
    letters: Vec<Letter>,
    letter_index: HashMap<Letter, usize>,
    states: Vec<Formula>,
    index: HashMap<Formula, StateId>,
    accepting: Vec<bool>,
    table: Vec<StateId>,
}

impl TaskAutomaton {
    pub fn compile<'a, I>(formula: &Formula, letters: I) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = &'a Letter>,
    {
        AutomatonBuilder::new(formula).freeze(letters)
    }

    pub fn compile_with_cap<'a, I>(formula: &Formula, letters: I, cap: usize) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = &'a Letter>,
    {
        AutomatonBuilder::with_cap(formula, cap).freeze(letters)
    }

    /// Compile over every subset of the formula's propositions.
    pub fn compile_full(formula: &Formula) -> Result<Self, AutomatonError> {
        let props: Vec<String> = formula.atomic_props().into_iter().collect();
        let letters: Vec<Letter> = (0u64..1 << props.len())
            .map(|mask| {
                props
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        Self::compile(formula, &letters)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn props(&self) -> &BTreeSet<String> {
        &self.props
    }

    pub fn initial(&self) -> StateId {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(|&q| self.accepting[q])
    }

    pub fn state_formula(&self, q: StateId) -> &Formula {
        &self.states[q]
    }

    /// Index of a letter in the declared alphabet, after projection.
    pub fn letter_id(&self, letter: &Letter) -> Option<usize> {
        self.letter_index.get(&project(letter, &self.props)).copied()
    }

    pub fn step(&self, q: StateId, letter_id: usize) -> StateId {
        self.table[q * self.letters.len() + letter_id]
    }

    /// Transition on an arbitrary letter. `None` if the projected letter was
    /// not declared at compile time and its successor is not a known state.
    pub fn step_letter(&self, q: StateId, letter: &Letter) -> Option<StateId> {
        match self.letter_id(letter) {
            Some(l) => Some(self.step(q, l)),
            None => self
                .index
                .get(&progress(&self.states[q], &project(letter, &self.props)))
                .copied(),
        }
    }

    /// Run from the initial state; accept iff the final state accepts.
    ///
    /// Letters outside the declared alphabet are handled by progressing the
    /// residual formula directly.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cursor = Cursor::State(self.initial());
        for letter in word {
            let letter = project(letter, &self.props);
            cursor = match cursor {
                Cursor::State(q) => match self.letter_index.get(&letter) {
                    Some(&l) => Cursor::State(self.step(q, l)),
                    None => self.resume(progress(&self.states[q], &letter)),
                },
                Cursor::Residual(f) => self.resume(progress(&f, &letter)),
            };
        }
        match cursor {
            Cursor::State(q) => self.accepting[q],
            Cursor::Residual(f) => holds_on_empty(&f),
        }
    }

    fn resume(&self, f: Formula) -> Cursor {
        match self.index.get(&f) {
            Some(&q) => Cursor::State(q),
            None => Cursor::Residual(f),
        }
    }

    /// States from which some accepting state is reachable.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.states.len();
        let nl = self.letters.len();
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for q in 0..n {
            for l in 0..nl {
                preds[self.step(q, l)].push(q);
            }
        }
        let mut live = self.accepting.clone();
        let mut stack: Vec<StateId> = self.accepting_states().collect();
        while let Some(q) = stack.pop() {
            for &p in &preds[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        live
    }

    /// Graphviz rendering: accepting states are double circles, parallel
    /// edges are merged into one guard listing their letters.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph automaton {\n  rankdir=LR;\n  init [shape=point];\n");
        for (q, f) in self.states.iter().enumerate() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            let label = f.to_infix().replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "  q{q} [shape={shape}, label=\"q{q}\", tooltip=\"{label}\"];");
        }
        let _ = writeln!(out, "  init -> q0;");
        for q in 0..self.states.len() {
            let mut grouped: Vec<(StateId, Vec<String>)> = Vec::new();
            for (li, l) in self.letters.iter().enumerate() {
                let to = self.step(q, li);
                match grouped.iter_mut().find(|(t, _)| *t == to) {
                    Some((_, ls)) => ls.push(letter_key(l)),
                    None => grouped.push((to, vec![letter_key(l)])),
                }
            }
            for (to, ls) in grouped {
                let _ = writeln!(out, "  q{q} -> q{to} [label=\"{}\"];", ls.join(" | "));
            }
        }
        out.push_str("}\n");
        out
    }
}
