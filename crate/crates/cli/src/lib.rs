//! Command implementations behind the `ltlnav` binary.
//!
//! Exit codes: 0 success, 1 usage or other error, 2 no satisfying path,
//! 3 syntactic failure (malformed formula or translation budget exhausted),
//! 4 I/O, parse or language-model transport error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ltlnav::automaton::TaskAutomaton;
use ltlnav::codegen::{
    prompt_hash, GroundingMode, HttpClient, HttpConfig, LlmClient, ObjectTable, PromptTemplates, RecordingClient,
    ReplayClient, TranslateError, TranslateOptions,
};
use ltlnav::exec::Execution;
use ltlnav::ltl::{Formula, Notation};
use ltlnav::pipeline::{
    prepare, run_suite, search, EvalConfig, EvalReport, PipelineError, PlanOutcome, PlanRequest, SearchMode,
    SolveOptions, TaskInput,
};
use ltlnav::planner::PlanError;
use ltlnav::render::{render_ascii, render_svg, PathRecord};
use ltlnav::semmap::io::MapDocument;
use ltlnav::semmap::{project, Cell, MapError, VoxelMap};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_NO_PATH: i32 = 2;
pub const EXIT_SYNTAX: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn other(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_OTHER,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Plan(PlanError::NoPath { .. }) => EXIT_NO_PATH,
            PipelineError::Formula(_) | PipelineError::Translate(TranslateError::SyntacticFailure { .. }) => {
                EXIT_SYNTAX
            }
            PipelineError::Map(MapError::OutOfBounds { .. }) => EXIT_OTHER,
            PipelineError::Map(_)
            | PipelineError::Task { .. }
            | PipelineError::NoLlm
            | PipelineError::Translate(TranslateError::LlmUnavailable(_)) => EXIT_IO,
            _ => EXIT_OTHER,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ltlnav", version, about = "Instruction-driven LTL path planning on semantic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Project a voxel map onto a 2D semantic grid.
    Project(ProjectArgs),
    /// Translate (or take) a formula and plan a path.
    Plan(PlanArgs),
    /// Translate an instruction into a formula.
    Translate(TranslateArgs),
    /// Evaluate a directory of task files.
    Eval(EvalArgs),
    /// Draw a map with a planned path.
    Render(RenderArgs),
    /// Print the automaton of a formula in DOT.
    AutomatonDump(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Prefix,
    Infix,
}

impl From<Format> for Notation {
    fn from(f: Format) -> Self {
        match f {
            Format::Prefix => Notation::Prefix,
            Format::Infix => Notation::Infix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Grounding {
    #[default]
    Llm,
    Fallback,
    Verbatim,
}

#[derive(Debug, Clone, Args, Default)]
pub struct LlmArgs {
    /// Chat-completion base URL; the key is read from LTLNAV_API_KEY.
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    #[arg(long)]
    pub llm_model: Option<String>,
    #[arg(long, default_value_t = 120)]
    pub llm_timeout: u64,
    /// Serve responses from transcripts in this directory.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Save the exchanges of this run as a transcript in this directory.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Grounding::Llm)]
    pub grounding: Grounding,
    #[arg(long, default_value_t = 3)]
    pub max_retries: usize,
    /// Directory overriding the bundled prompt templates / example bank.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectArgs {
    pub voxels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub z_ground: Option<f64>,
    #[arg(long)]
    pub z_ceiling: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, conflicts_with = "ltl")]
    pub instruction: Option<String>,
    #[arg(long)]
    pub ltl: Option<String>,
    /// `x,y`
    #[arg(long, value_parser = parse_cell)]
    pub start: Cell,
    #[arg(long)]
    pub ro: Option<f64>,
    /// `class=meters` (class name or object id); repeatable.
    #[arg(long, value_parser = parse_rc)]
    pub rc: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value_t = Format::Prefix)]
    pub format: Format,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Write the g table as CSV.
    #[arg(long)]
    pub dump_g: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Write the path record (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Search without the heuristic.
    #[arg(long)]
    pub dijkstra: bool,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TranslateArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub instruction: String,
    #[arg(long, value_enum, default_value_t = Format::Prefix)]
    pub format: Format,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Print the full translation result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of task files (`*.json`).
    pub suite: PathBuf,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub dijkstra: bool,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Path record written by `plan --out`.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub ltl: String,
    #[arg(long, value_enum, default_value_t = Format::Prefix)]
    pub format: Format,
    /// Restrict the alphabet to the label sets of this map.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_cell(s: &str) -> Result<Cell, String> {
    let (x, y) = s.split_once(',').ok_or("expected `x,y`")?;
    let x = x.trim().parse().map_err(|_| format!("bad x in `{s}`"))?;
    let y = y.trim().parse().map_err(|_| format!("bad y in `{s}`"))?;
    Ok(Cell::new(x, y))
}

pub fn parse_rc(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected `class=meters`")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad distance in `{s}`"))?;
    Ok((k.trim().to_string(), v))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<MapDocument, CliError> {
    MapDocument::load(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// The configured client, if any: replay, then HTTP.
pub fn make_client(args: &LlmArgs) -> Result<Option<Box<dyn LlmClient>>, CliError> {
    if let Some(dir) = &args.replay {
        let c = ReplayClient::from_dir(dir).map_err(|e| CliError::io(e.to_string()))?;
        return Ok(Some(Box::new(c)));
    }
    if args.llm_endpoint.is_some() || args.llm_model.is_some() {
        let mut cfg = HttpConfig::default();
        if let Some(u) = &args.llm_endpoint {
            cfg.base_url = u.clone();
        }
        if let Some(m) = &args.llm_model {
            cfg.model = m.clone();
        }
        cfg.timeout_secs = args.llm_timeout;
        return Ok(Some(Box::new(HttpClient::new(cfg))));
    }
    Ok(None)
}

fn translate_options(args: &LlmArgs) -> Result<TranslateOptions, CliError> {
    let templates = match &args.prompts {
        Some(dir) => PromptTemplates::load(dir).map_err(|e| CliError::io(e.to_string()))?,
        None => PromptTemplates::default(),
    };
    Ok(TranslateOptions {
        max_retries: args.max_retries,
        grounding: match args.grounding {
            Grounding::Llm => GroundingMode::Llm,
            Grounding::Fallback => GroundingMode::Fallback,
            Grounding::Verbatim => GroundingMode::Verbatim,
        },
        templates,
    })
}

fn save_recording(rec: &RecordingClient<Box<dyn LlmClient>>, dir: &Path, key: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("{}.json", &prompt_hash(key)[..16]));
    rec.save(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Run `f` with the configured client, recording the exchanges if asked.
fn with_client<T>(
    args: &LlmArgs,
    key: &str,
    f: impl FnOnce(Option<&dyn LlmClient>) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let client = make_client(args)?;
    match (&args.record, client) {
        (Some(dir), Some(c)) => {
            let rec = RecordingClient::new(c);
            let out = f(Some(&rec));
            save_recording(&rec, dir, key)?;
            out
        }
        (_, c) => f(c.as_deref()),
    }
}

fn rc_map(doc: &MapDocument, rc: &[(String, f64)]) -> Result<BTreeMap<String, f64>, CliError> {
    let table = ObjectTable::from_map(doc).map_err(|e| CliError::io(e.to_string()))?;
    Ok(rc
        .iter()
        .map(|(k, v)| (table.class_of(k).unwrap_or(k).to_string(), *v))
        .collect())
}

pub fn summary_line(out: &PlanOutcome, notation: Notation) -> String {
    let attempts = out.translation.as_ref().map_or(0, |t| t.attempts);
    format!(
        "formula: {}\ncost={:.6} cells={} expansions={} attempts={} states={} verified={}",
        out.formula.render(notation),
        out.path.cost,
        out.path.cells.len(),
        out.path.expansions,
        attempts,
        out.automaton_states,
        out.verified
    )
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(PlanOutcome, String), CliError> {
    let doc = load_map(&args.map)?;
    let input = match (&args.ltl, &args.instruction) {
        (Some(l), _) => TaskInput::Formula(Formula::parse(l, args.format.into()).map_err(|e| CliError {
            code: EXIT_SYNTAX,
            message: format!("formula: {e}"),
        })?),
        (None, Some(i)) => TaskInput::Instruction(i.clone()),
        (None, None) => return Err(CliError::other("either --ltl or --instruction is required")),
    };
    let rc = rc_map(&doc, &args.rc)?;
    let key = format!("{}\n{:?}", args.map.display(), args.instruction);
    let translate = translate_options(&args.llm)?;
    let outcome = with_client(&args.llm, &key, |llm| {
        let req = PlanRequest {
            doc: &doc,
            input,
            start: args.start,
            rc,
            ro: args.ro,
            llm,
            translate,
            solve: SolveOptions {
                exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
                search: if args.dijkstra { SearchMode::Dijkstra } else { SearchMode::Ltl },
                ..Default::default()
            },
        };
        let prepared = prepare(&req)?;
        if let Some(p) = &args.dump_g {
            write(p, &prepared.g_table_csv())?;
        }
        Ok(search(&req, prepared)?)
    })?;
    if let Some(p) = &args.out {
        PathRecord::from_outcome(&outcome)
            .save(p)
            .map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &args.svg {
        write(p, &render_svg(&doc, &outcome.path.cells))?;
    }
    let line = summary_line(&outcome, args.format.into());
    Ok((outcome, line))
}

pub fn cmd_translate(args: &TranslateArgs) -> Result<String, CliError> {
    let doc = load_map(&args.map)?;
    let table = ObjectTable::from_map(&doc).map_err(|e| CliError::io(e.to_string()))?;
    let options = translate_options(&args.llm)?;
    let key = format!("{}\n{:?}", args.map.display(), Some(&args.instruction));
    let result = with_client(&args.llm, &key, |llm| {
        let llm = llm.ok_or_else(|| CliError::from(PipelineError::NoLlm))?;
        ltlnav::codegen::translate(&args.instruction, &table, llm, &options)
            .map_err(|e| CliError::from(PipelineError::Translate(e)))
    })?;
    if args.json {
        Ok(serde_json::to_string_pretty(&result).expect("translation serializes"))
    } else {
        Ok(format!(
            "{}\ngrounded: {}\nattempts: {}",
            result.formula.render(args.format.into()),
            result.grounded,
            result.attempts
        ))
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport, CliError> {
    let options = translate_options(&args.llm)?;
    let key = format!("eval\n{}", args.suite.display());
    let report = with_client(&args.llm, &key, |llm| {
        let cfg = EvalConfig {
            llm,
            translate: options,
            solve: SolveOptions {
                search: if args.dijkstra { SearchMode::Dijkstra } else { SearchMode::Ltl },
                ..Default::default()
            },
            exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
        };
        Ok(run_suite(&args.suite, &cfg)?)
    })?;
    if let Some(p) = &args.csv {
        write(p, &report.to_csv())?;
    }
    if let Some(p) = &args.json {
        write(p, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    }
    Ok(report)
}

pub fn cmd_project(args: &ProjectArgs) -> Result<String, CliError> {
    let mut voxels = VoxelMap::load(&args.voxels)?;
    if let Some(z) = args.z_ground {
        voxels.z_ground = z;
    }
    if let Some(z) = args.z_ceiling {
        voxels.z_ceiling = z;
    }
    let grid = project(&voxels)?;
    let doc = MapDocument::from_grid(grid);
    doc.save(&args.out)?;
    Ok(format!(
        "{}x{} grid with {} classes written to {}",
        doc.grid.width(),
        doc.grid.height(),
        doc.grid.classes().len(),
        args.out.display()
    ))
}

pub fn cmd_render(args: &RenderArgs) -> Result<String, CliError> {
    let doc = load_map(&args.map)?;
    let cells = match &args.path {
        Some(p) => {
            PathRecord::load(p)
                .map_err(|e| CliError::io(format!("{}: {e}", p.display())))?
                .cells
        }
        None => Vec::new(),
    };
    if let Some(c) = cells.iter().find(|c| !doc.grid.contains(**c)) {
        return Err(CliError::other(format!("path cell {c} is outside the map")));
    }
    if let Some(p) = &args.svg {
        write(p, &render_svg(&doc, &cells))?;
    }
    Ok(render_ascii(&doc, &cells))
}

pub fn cmd_automaton_dump(args: &DumpArgs) -> Result<String, CliError> {
    let f = Formula::parse(&args.ltl, args.format.into()).map_err(|e| CliError {
        code: EXIT_SYNTAX,
        message: format!("formula: {e}"),
    })?;
    let automaton = match &args.map {
        Some(m) => {
            let doc = load_map(m)?;
            let table = ObjectTable::from_map(&doc).map_err(|e| CliError::io(e.to_string()))?;
            let resolved = table.resolve(&f);
            let labels = ltlnav::semmap::LabelGrid::build(
                &doc.grid,
                &ltlnav::pipeline::thresholds(&doc, &BTreeMap::new()),
            )?;
            let index = ltlnav::heuristic::LabelSetIndex::build(
                &labels,
                Some(&resolved.atomic_props()),
                Execution::Sequential,
            );
            TaskAutomaton::compile(&resolved, index.sets())
        }
        None => TaskAutomaton::compile_full(&f),
    }
    .map_err(|e| CliError::other(e.to_string()))?;
    let dot = automaton.to_dot();
    if let Some(p) = &args.out {
        write(p, &dot)?;
    }
    Ok(dot)
}

/// Run a parsed command line; returns the text for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Project(a) => cmd_project(a),
        Command::Plan(a) => cmd_plan(a).map(|(_, line)| line),
        Command::Translate(a) => cmd_translate(a),
        Command::Eval(a) => cmd_eval(a).map(|r| r.summary()),
        Command::Render(a) => cmd_render(a),
        Command::AutomatonDump(a) => cmd_automaton_dump(a),
    }
}
