//! End-to-end planning and batch evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{AutomatonError, TaskAutomaton, DEFAULT_STATE_CAP};
use crate::codegen::{
    translate, LlmClient, ObjectTable, ObjectTableError, TranslateError, TranslateOptions, TranslationResult,
};
use crate::exec::Execution;
use crate::heuristic::{LabelSetIndex, LtlHeuristic, ZeroHeuristic};
use crate::ltl::{Formula, Notation, ParseError};
use crate::planner::{plan, verify, PlanError, ProductGraph, ProductPath};
use crate::semmap::io::MapDocument;
use crate::semmap::{default_threshold, Cell, LabelGrid, MapError, SemanticGrid};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Objects(#[from] ObjectTableError),
    #[error("formula: {0}")]
    Formula(#[from] ParseError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("an instruction needs a language model client")]
    NoLlm,
    #[error("task needs either an instruction or a formula")]
    NoTask,
    #[error("{path}: {message}")]
    Task { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    #[default]
    Ltl,
    /// `h = 0`.
    Dijkstra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub exec: Execution,
    pub search: SearchMode,
    pub state_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            exec: Execution::default(),
            search: SearchMode::Ltl,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Automaton and heuristic for one formula over one label grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub automaton: TaskAutomaton,
    pub heuristic: LtlHeuristic,
}

impl Problem {
    /// `formula` must use the label grid's proposition names.
    pub fn new(labels: &LabelGrid, formula: &Formula, options: SolveOptions) -> Result<Self, AutomatonError> {
        let index = LabelSetIndex::build(labels, Some(&formula.atomic_props()), options.exec);
        let automaton = TaskAutomaton::compile_with_cap(formula, index.sets(), options.state_cap)?;
        let heuristic = LtlHeuristic::new(&automaton, index, options.exec);
        Ok(Problem { automaton, heuristic })
    }

    pub fn plan(
        &self,
        grid: &SemanticGrid,
        labels: &LabelGrid,
        start: Cell,
        margin: f64,
        search: SearchMode,
    ) -> Result<ProductPath, PlanError> {
        let graph = ProductGraph::new(grid, labels, &self.automaton, margin)?;
        match search {
            SearchMode::Ltl => plan(&graph, labels, &self.heuristic, start),
            SearchMode::Dijkstra => plan(&graph, labels, &ZeroHeuristic, start),
        }
    }
}

/// Compile, precompute and search in one call.
pub fn solve(
    grid: &SemanticGrid,
    labels: &LabelGrid,
    formula: &Formula,
    start: Cell,
    margin: f64,
    options: SolveOptions,
) -> Result<ProductPath, PipelineError> {
    let problem = Problem::new(labels, formula, options)?;
    Ok(problem.plan(grid, labels, start, margin, options.search)?)
}

pub fn default_margin(resolution: f64) -> f64 {
    0.5 * resolution
}

/// Per-class thresholds: map defaults, then `overrides`, then
/// `1.5 * resolution` for any class left unset.
pub fn thresholds(doc: &MapDocument, overrides: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    for class in doc.grid.classes() {
        t.insert(class.clone(), default_threshold(doc.grid.resolution()));
    }
    t.extend(doc.thresholds.iter().map(|(k, v)| (k.clone(), *v)));
    t.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    t
}

#[derive(Debug, Clone)]
pub enum TaskInput {
    Instruction(String),
    /// Over object ids (or class names that are valid identifiers).
    Formula(Formula),
}

pub struct PlanRequest<'a> {
    pub doc: &'a MapDocument,
    pub input: TaskInput,
    pub start: Cell,
    pub rc: BTreeMap<String, f64>,
    pub ro: Option<f64>,
    pub llm: Option<&'a dyn LlmClient>,
    pub translate: TranslateOptions,
    pub solve: SolveOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanOutcome {
    pub translation: Option<TranslationResult>,
    /// Formula over object ids.
    #[serde(serialize_with = "prefix")]
    pub formula: Formula,
    /// Formula over class names, as planned.
    #[serde(serialize_with = "prefix")]
    pub resolved: Formula,
    pub path: ProductPath,
    pub verified: bool,
    pub automaton_states: usize,
    pub planning_time: Duration,
}

fn prefix<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_prefix())
}

/// Formula for the request, translating the instruction when needed.
pub fn formula_for(
    req: &PlanRequest<'_>,
    table: &ObjectTable,
) -> Result<(Formula, Option<TranslationResult>), PipelineError> {
    match &req.input {
        TaskInput::Formula(f) => Ok((f.clone(), None)),
        TaskInput::Instruction(text) => {
            let llm = req.llm.ok_or(PipelineError::NoLlm)?;
            let t = translate(text, table, llm, &req.translate)?;
            Ok((t.formula.clone(), Some(t)))
        }
    }
}

/// Everything needed to search, before searching.
pub struct Prepared {
    pub table: ObjectTable,
    pub translation: Option<TranslationResult>,
    pub formula: Formula,
    pub resolved: Formula,
    pub labels: LabelGrid,
    pub margin: f64,
    pub problem: Problem,
}

impl Prepared {
    pub fn g_table_csv(&self) -> String {
        self.problem.heuristic.g_table().to_csv(self.problem.heuristic.index())
    }
}

/// Ground/translate, build labels, compile and precompute the heuristic.
pub fn prepare(req: &PlanRequest<'_>) -> Result<Prepared, PipelineError> {
    let table = ObjectTable::from_map(req.doc)?;
    let (formula, translation) = formula_for(req, &table)?;
    let resolved = table.resolve(&formula);
    let grid = &req.doc.grid;
    grid.check(req.start)?;
    let labels = LabelGrid::build_with(grid, &thresholds(req.doc, &req.rc), req.solve.exec)?;
    let margin = req
        .ro
        .or(req.doc.safety_margin)
        .unwrap_or_else(|| default_margin(grid.resolution()));
    let problem = Problem::new(&labels, &resolved, req.solve)?;
    Ok(Prepared {
        table,
        translation,
        formula,
        resolved,
        labels,
        margin,
        problem,
    })
}

pub fn search(req: &PlanRequest<'_>, prepared: Prepared) -> Result<PlanOutcome, PipelineError> {
    let started = Instant::now();
    let grid = &req.doc.grid;
    let p = &prepared;
    let path = p.problem.plan(grid, &p.labels, req.start, p.margin, req.solve.search)?;
    let verified = verify(&path.cells, &p.resolved, &p.labels);
    Ok(PlanOutcome {
        automaton_states: p.problem.automaton.num_states(),
        translation: prepared.translation,
        formula: prepared.formula,
        resolved: prepared.resolved,
        path,
        verified,
        planning_time: started.elapsed(),
    })
}

pub fn run_plan(req: &PlanRequest<'_>) -> Result<PlanOutcome, PipelineError> {
    let prepared = prepare(req)?;
    search(req, prepared)
}

/// One task of an evaluation suite, stored as JSON. Relative map paths are
/// resolved against the task file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub map: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    /// Bypasses translation when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ltl: Option<String>,
    #[serde(default, skip_serializing_if = "is_prefix")]
    pub ltl_format: LtlFormat,
    pub start: Cell,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rc: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ro: Option<f64>,
    /// Expected objective coordinates, in visiting order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<Cell>,
    /// Distance in meters at which an objective counts as reached; defaults
    /// to `1.5 * resolution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LtlFormat {
    #[default]
    Prefix,
    Infix,
}

fn is_prefix(f: &LtlFormat) -> bool {
    *f == LtlFormat::Prefix
}

impl From<LtlFormat> for Notation {
    fn from(f: LtlFormat) -> Self {
        match f {
            LtlFormat::Prefix => Notation::Prefix,
            LtlFormat::Infix => Notation::Infix,
        }
    }
}

impl TaskSpec {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Task {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Task {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn input(&self) -> Result<TaskInput, PipelineError> {
        match (&self.ltl, &self.instruction) {
            (Some(l), _) => Ok(TaskInput::Formula(Formula::parse(l, self.ltl_format.into())?)),
            (None, Some(i)) => Ok(TaskInput::Instruction(i.clone())),
            (None, None) => Err(PipelineError::NoTask),
        }
    }
}

/// Index in `path` at which each objective is reached, matching objectives
/// in order; `None` if some objective is never reached after the previous
/// one.
pub fn objective_hits(path: &[Cell], objectives: &[Cell], radius: f64, resolution: f64) -> Option<Vec<usize>> {
    let mut hits = Vec::with_capacity(objectives.len());
    let mut t = 0;
    for goal in objectives {
        let reached = (t..path.len()).find(|&i| {
            let dx = path[i].x as f64 - goal.x as f64;
            let dy = path[i].y as f64 - goal.y as f64;
            dx.hypot(dy) * resolution <= radius + 1e-9 * resolution
        })?;
        hits.push(reached);
        t = reached;
    }
    Some(hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    SemanticFailure,
    SyntacticFailure,
    NoPath,
    Error,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::SemanticFailure => "semantic_failure",
            Outcome::SyntacticFailure => "syntactic_failure",
            Outcome::NoPath => "no_path",
            Outcome::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub outcome: Outcome,
    pub formula: Option<String>,
    /// Path cost in meters.
    pub path_length: Option<f64>,
    pub path_cells: Option<usize>,
    pub expansions: Option<usize>,
    pub attempts: Option<usize>,
    /// Seconds spent producing the formula.
    pub llm_runtime: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: Vec<TaskRecord>,
    /// Successful tasks over all tasks, in percent.
    pub accuracy: f64,
    /// Mean path length in meters over successful tasks.
    pub mpl: Option<f64>,
    pub syntactic_failure_rate: f64,
    pub mean_llm_runtime: Option<f64>,
}

impl EvalReport {
    pub fn from_records(tasks: Vec<TaskRecord>) -> Self {
        let n = tasks.len().max(1) as f64;
        let ok: Vec<&TaskRecord> = tasks.iter().filter(|t| t.outcome == Outcome::Success).collect();
        let lengths: Vec<f64> = ok.iter().filter_map(|t| t.path_length).collect();
        let runtimes: Vec<f64> = tasks.iter().filter_map(|t| t.llm_runtime).collect();
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let syntactic = tasks.iter().filter(|t| t.outcome == Outcome::SyntacticFailure).count();
        EvalReport {
            accuracy: if tasks.is_empty() { 0.0 } else { 100.0 * ok.len() as f64 / n },
            mpl: mean(&lengths),
            syntactic_failure_rate: if tasks.is_empty() { 0.0 } else { 100.0 * syntactic as f64 / n },
            mean_llm_runtime: mean(&runtimes),
            tasks,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("task,outcome,formula,path_length,path_cells,expansions,attempts,llm_runtime,message\n");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for t in &self.tasks {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&t.name),
                t.outcome.as_str(),
                csv_field(&opt(t.formula.clone())),
                opt(t.path_length.map(|v| format!("{v:.6}"))),
                opt(t.path_cells.map(|v| v.to_string())),
                opt(t.expansions.map(|v| v.to_string())),
                opt(t.attempts.map(|v| v.to_string())),
                opt(t.llm_runtime.map(|v| format!("{v:.6}"))),
                csv_field(&opt(t.message.clone())),
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let counts = |o: Outcome| self.tasks.iter().filter(|t| t.outcome == o).count();
        let mpl = self.mpl.map_or("n/a".to_string(), |m| format!("{m:.4}"));
        format!(
            "tasks: {}  success: {}  semantic failures: {}  syntactic failures: {}  no path: {}  errors: {}\naccuracy: {:.2}%  MPL: {}  syntactic failure rate: {:.2}%",
            self.tasks.len(),
            counts(Outcome::Success),
            counts(Outcome::SemanticFailure),
            counts(Outcome::SyntacticFailure),
            counts(Outcome::NoPath),
            counts(Outcome::Error),
            self.accuracy,
            mpl,
            self.syntactic_failure_rate,
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct EvalConfig<'a> {
    pub llm: Option<&'a dyn LlmClient>,
    pub translate: TranslateOptions,
    pub solve: SolveOptions,
    /// Parallelism across tasks.
    pub exec: Execution,
}

/// Run one task, never failing: errors are recorded in the outcome.
pub fn run_task(spec: &TaskSpec, base: &Path, name: &str, cfg: &EvalConfig<'_>) -> TaskRecord {
    let mut rec = TaskRecord {
        name: name.to_string(),
        outcome: Outcome::Error,
        formula: None,
        path_length: None,
        path_cells: None,
        expansions: None,
        attempts: None,
        llm_runtime: None,
        message: None,
    };
    let doc = match MapDocument::load(base.join(&spec.map)) {
        Ok(d) => d,
        Err(e) => {
            rec.message = Some(e.to_string());
            return rec;
        }
    };
    let input = match spec.input() {
        Ok(i) => i,
        Err(e) => {
            rec.outcome = match e {
                PipelineError::Formula(_) => Outcome::SyntacticFailure,
                _ => Outcome::Error,
            };
            rec.message = Some(e.to_string());
            return rec;
        }
    };
    let req = PlanRequest {
        doc: &doc,
        input,
        start: spec.start,
        rc: spec.rc.clone(),
        ro: spec.ro,
        llm: cfg.llm,
        translate: cfg.translate.clone(),
        solve: SolveOptions {
            exec: Execution::Sequential,
            ..cfg.solve
        },
    };
    match run_plan(&req) {
        Ok(out) => {
            rec.formula = Some(out.formula.to_prefix());
            rec.path_length = Some(out.path.cost);
            rec.path_cells = Some(out.path.cells.len());
            rec.expansions = Some(out.path.expansions);
            if let Some(t) = &out.translation {
                rec.attempts = Some(t.attempts);
                rec.llm_runtime = Some(t.runtime.as_secs_f64());
            }
            let res = doc.grid.resolution();
            let radius = spec.objective_radius.unwrap_or_else(|| default_threshold(res));
            let reached = objective_hits(&out.path.cells, &spec.objectives, radius, res).is_some();
            rec.outcome = if out.verified && reached {
                Outcome::Success
            } else {
                Outcome::SemanticFailure
            };
            if !reached {
                rec.message = Some("objectives not reached in order".into());
            }
        }
        Err(e) => {
            rec.outcome = match &e {
                PipelineError::Plan(PlanError::NoPath { .. }) => Outcome::NoPath,
                PipelineError::Translate(TranslateError::SyntacticFailure { attempts, .. }) => {
                    rec.attempts = Some(*attempts);
                    Outcome::SyntacticFailure
                }
                _ => Outcome::Error,
            };
            rec.message = Some(e.to_string());
        }
    }
    rec
}

/// Task files (`*.json`) of a suite directory, in name order.
pub fn suite_tasks(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::Task {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Evaluate every task file under `dir`.
pub fn run_suite(dir: &Path, cfg: &EvalConfig<'_>) -> Result<EvalReport, PipelineError> {
    let paths = suite_tasks(dir)?;
    let records = cfg.exec.map(&paths, |p| {
        let name = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        match TaskSpec::load(p) {
            Ok(spec) => {
                let name = spec.name.clone().unwrap_or(name);
                run_task(&spec, p.parent().unwrap_or(Path::new(".")), &name, cfg)
            }
            Err(e) => TaskRecord {
                name,
                outcome: Outcome::Error,
                formula: None,
                path_length: None,
                path_cells: None,
                expansions: None,
                attempts: None,
                llm_runtime: None,
                message: Some(e.to_string()),
            },
        }
    });
    Ok(EvalReport::from_records(records))
}

/// Instruction for an ordered multi-objective task.
pub fn compose_instruction(objectives: &[&str]) -> String {
    match objectives {
        [] => String::new(),
        [one] => format!("Complete {one}."),
        [first, second] => format!("Complete {first}, then complete {second}."),
        [first, second, rest @ ..] => {
            let mut s = format!("Complete {first}, then complete {second}");
            for o in rest {
                s.push_str(&format!(", and then {o}"));
            }
            s.push('.');
            s
        }
    }
}

/// Classes referenced by a formula but absent from the map.
pub fn missing_classes(doc: &MapDocument, resolved: &Formula) -> BTreeSet<String> {
    let known: BTreeSet<&String> = doc.grid.classes().iter().collect();
    resolved
        .atomic_props()
        .into_iter()
        .filter(|p| !known.contains(p))
        .collect()
}
