//! Natural-language instruction to LTL: object grounding, prompting, and a
//! retry loop around the restricted formula-building language.

pub mod dsl;
pub mod llm;
pub mod prompt;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ltl::Formula;
pub use dsl::{eval_dsl, parse_dsl, to_dsl, Builtin, DslError, DslProgram, Expr, Statement};
pub use llm::{
    prompt_hash, read_transcript, write_transcript, HttpConfig, LlmClient, LlmError, RecordingClient, ReplayClient,
    ScriptedClient, TranscriptRecord,
};
#[cfg(feature = "http")]
pub use llm::HttpClient;
pub use prompt::{Example, PromptError, PromptTemplates};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectTableError {
    #[error("`{0}` is not of the form object_<k>")]
    BadId(String),
    #[error("id `{0}` is assigned to more than one class")]
    DuplicateId(String),
}

/// Class name to `object_<k>` id, both ways.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ObjectTable {
    by_class: BTreeMap<String, String>,
    by_id: BTreeMap<String, String>,
}

fn id_number(id: &str) -> Option<u64> {
    let digits = id.strip_prefix("object_")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

impl ObjectTable {
    /// `explicit` ids are kept; remaining classes get the smallest unused
    /// `object_<k>`, `k >= 1`, in the order given.
    pub fn new<S: AsRef<str>>(
        classes: impl IntoIterator<Item = S>,
        explicit: &BTreeMap<String, String>,
    ) -> Result<Self, ObjectTableError> {
        let mut t = ObjectTable::default();
        let mut used = BTreeSet::new();
        for (class, id) in explicit {
            let k = id_number(id).ok_or_else(|| ObjectTableError::BadId(id.clone()))?;
            if !used.insert(k) {
                return Err(ObjectTableError::DuplicateId(id.clone()));
            }
            t.by_class.insert(class.clone(), id.clone());
            t.by_id.insert(id.clone(), class.clone());
        }
        let mut next = 1;
        for class in classes {
            let class = class.as_ref();
            if t.by_class.contains_key(class) {
                continue;
            }
            while used.contains(&next) {
                next += 1;
            }
            used.insert(next);
            let id = format!("object_{next}");
            t.by_class.insert(class.to_string(), id.clone());
            t.by_id.insert(id, class.to_string());
        }
        Ok(t)
    }

    pub fn from_map(doc: &crate::semmap::io::MapDocument) -> Result<Self, ObjectTableError> {
        ObjectTable::new(doc.grid.classes(), &doc.object_ids)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn id_of(&self, class: &str) -> Option<&str> {
        self.by_class.get(class).map(String::as_str)
    }

    pub fn class_of(&self, id: &str) -> Option<&str> {
        self.by_id.get(id).map(String::as_str)
    }

    /// `(id, class)` pairs ordered by id number.
    pub fn entries(&self) -> Vec<(&str, &str)> {
        let mut v: Vec<_> = self.by_id.iter().map(|(i, c)| (i.as_str(), c.as_str())).collect();
        v.sort_by_key(|(i, _)| id_number(i));
        v
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.by_id.keys().cloned().collect()
    }

    /// One `    'object_k' : 'class'` line per entry.
    pub fn correspondence(&self) -> String {
        self.entries()
            .iter()
            .map(|(i, c)| format!("    '{i}' : '{c}'"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Rewrite object ids in `f` to class names; unknown ids are kept.
    pub fn resolve(&self, f: &Formula) -> Formula {
        f.map_props(&|p: &str| self.class_of(p).unwrap_or(p).to_string())
    }
}

/// `object_<k>` tokens in `text`, in order of first appearance.
pub fn mentioned_ids(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while let Some(off) = text[i..].find("object_") {
        let start = i + off;
        let mut end = start + "object_".len();
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let before_ok = start == 0 || !is_word_byte(bytes[start - 1]);
        let after_ok = end == bytes.len() || !is_word_byte(bytes[end]);
        if end > start + "object_".len() && before_ok && after_ok {
            let id = &text[start..end];
            if !out.iter().any(|x| x == id) {
                out.push(id.to_string());
            }
        }
        i = end;
    }
    out
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grounded {
    pub text: String,
    /// Ids mentioned in `text` that exist in the table.
    pub objects: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("object table is empty")]
    EmptyTable,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

fn collect_objects(text: &str, table: &ObjectTable) -> BTreeSet<String> {
    let mut objects = BTreeSet::new();
    for id in mentioned_ids(text) {
        if table.class_of(&id).is_some() {
            objects.insert(id);
        } else {
            log::warn!("grounding produced unknown id {id}; dropped");
        }
    }
    objects
}

/// Ground with the language model.
pub fn ground(
    instruction: &str,
    table: &ObjectTable,
    llm: &dyn LlmClient,
    templates: &PromptTemplates,
) -> Result<Grounded, GroundError> {
    if table.is_empty() {
        return Err(GroundError::EmptyTable);
    }
    let reply = llm.complete(&templates.grounding_prompt(&table.correspondence(), instruction))?;
    let reply = match reply.rfind("Output text:") {
        Some(i) => &reply[i + "Output text:".len()..],
        None => reply.as_str(),
    };
    let text = reply
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or(LlmError::EmptyResponse)?
        .to_string();
    let objects = collect_objects(&text, table);
    Ok(Grounded { text, objects })
}

/// Ground without a model: case-insensitive, longest-match replacement of
/// class names (also with `_` or `-` read as spaces, plural `s`/`es`
/// allowed) by their ids.
pub fn ground_fallback(instruction: &str, table: &ObjectTable) -> Grounded {
    let mut names: Vec<(Vec<char>, &str)> = Vec::new();
    for (id, class) in table.entries() {
        let mut variants = vec![class.to_string(), class.replace(['_', '-'], " ")];
        variants.dedup();
        for v in variants {
            let v: Vec<char> = v.chars().flat_map(char::to_lowercase).collect();
            if !v.is_empty() {
                names.push((v, id));
            }
        }
    }
    names.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));

    let src: Vec<char> = instruction.chars().collect();
    let lower: Vec<char> = src
        .iter()
        .map(|c| {
            let mut l = c.to_lowercase();
            match (l.next(), l.next()) {
                (Some(x), None) => x,
                _ => *c,
            }
        })
        .collect();
    let word = |c: char| c.is_alphanumeric() || c == '_';
    let boundary = |i: usize| i >= lower.len() || !word(lower[i]);

    let mut out = String::with_capacity(instruction.len());
    let mut i = 0;
    'scan: while i < src.len() {
        if i == 0 || !word(lower[i - 1]) {
            for (name, id) in &names {
                let end = i + name.len();
                if end > lower.len() || lower[i..end] != name[..] {
                    continue;
                }
                let consumed = if boundary(end) {
                    Some(end)
                } else if lower[end] == 's' && boundary(end + 1) {
                    Some(end + 1)
                } else if lower[end] == 'e' && lower.get(end + 1) == Some(&'s') && boundary(end + 2) {
                    Some(end + 2)
                } else {
                    None
                };
                if let Some(next) = consumed {
                    out.push_str(id);
                    i = next;
                    continue 'scan;
                }
            }
        }
        out.push(src[i]);
        i += 1;
    }
    let objects = collect_objects(&out, table);
    Grounded { text: out, objects }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundingMode {
    /// Ask the model.
    #[default]
    Llm,
    /// Deterministic substring replacement.
    Fallback,
    /// The instruction already uses ids.
    Verbatim,
}

#[derive(Debug, Clone)]
pub struct TranslateOptions {
    pub max_retries: usize,
    pub grounding: GroundingMode,
    pub templates: PromptTemplates,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions {
            max_retries: 3,
            grounding: GroundingMode::Llm,
            templates: PromptTemplates::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationResult {
    #[serde(serialize_with = "serialize_prefix")]
    pub formula: Formula,
    pub grounded: String,
    pub objects: BTreeSet<String>,
    pub attempts: usize,
    /// Failure message of each unsuccessful attempt, in order.
    pub errors: Vec<String>,
    pub runtime: Duration,
}

fn serialize_prefix<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_prefix())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("no valid formula after {attempts} attempt(s); last error: {}", errors.last().map(String::as_str).unwrap_or(""))]
    SyntacticFailure {
        grounded: String,
        attempts: usize,
        errors: Vec<String>,
        runtime: Duration,
    },
    #[error(transparent)]
    LlmUnavailable(LlmError),
    #[error("object table is empty")]
    EmptyTable,
}

impl From<GroundError> for TranslateError {
    fn from(e: GroundError) -> Self {
        match e {
            GroundError::EmptyTable => TranslateError::EmptyTable,
            GroundError::Llm(e) => TranslateError::LlmUnavailable(e),
        }
    }
}

/// Check one model answer: parse, evaluate, and restrict the vocabulary.
pub fn check_answer(answer: &str, table: &ObjectTable) -> Result<Formula, String> {
    let program = parse_dsl(answer).map_err(|e| e.to_string())?;
    let formula = eval_dsl(&program);
    let unknown: Vec<String> = formula
        .atomic_props()
        .into_iter()
        .filter(|p| table.class_of(p).is_none())
        .collect();
    if !unknown.is_empty() {
        let known: Vec<&str> = table.entries().into_iter().map(|(i, _)| i).collect();
        return Err(format!(
            "unknown object id(s) {}; use only: {}",
            unknown.join(", "),
            known.join(", ")
        ));
    }
    Ok(formula)
}

/// Ground, then ask for formula-building code until it parses, evaluates and
/// mentions only known ids, feeding each failure back into the next prompt.
pub fn translate(
    instruction: &str,
    table: &ObjectTable,
    llm: &dyn LlmClient,
    options: &TranslateOptions,
) -> Result<TranslationResult, TranslateError> {
    let started = Instant::now();
    let grounded = match options.grounding {
        GroundingMode::Llm => ground(instruction, table, llm, &options.templates)?,
        GroundingMode::Fallback => ground_fallback(instruction, table),
        GroundingMode::Verbatim => Grounded {
            text: instruction.to_string(),
            objects: collect_objects(instruction, table),
        },
    };

    let mut errors = Vec::new();
    let mut previous: Option<String> = None;
    for attempt in 1..=options.max_retries + 1 {
        let prompt = options
            .templates
            .build_prompt(&grounded.text, previous.as_deref(), errors.last().map(String::as_str));
        let answer = match llm.complete(&prompt) {
            Ok(a) => a,
            Err(LlmError::EmptyResponse) => String::new(),
            Err(e) => return Err(TranslateError::LlmUnavailable(e)),
        };
        let outcome = if answer.trim().is_empty() {
            Err(LlmError::EmptyResponse.to_string())
        } else {
            check_answer(&answer, table)
        };
        match outcome {
            Ok(formula) => {
                return Ok(TranslationResult {
                    formula,
                    grounded: grounded.text,
                    objects: grounded.objects,
                    attempts: attempt,
                    errors,
                    runtime: started.elapsed(),
                })
            }
            Err(msg) => {
                log::info!("attempt {attempt} rejected: {msg}");
                errors.push(msg);
                previous = Some(answer);
            }
        }
    }
    Err(TranslateError::SyntacticFailure {
        grounded: grounded.text,
        attempts: options.max_retries + 1,
        errors,
        runtime: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INSTRUCTION: &str = "Take the teddy bear, then pick the bottle. Always avoid the refrigerator.";
    const GROUNDED: &str = "Take object_36, then pick object_31. Always avoid the object_28.";

    fn kitchen() -> ObjectTable {
        let ids = BTreeMap::from([
            ("refrigerator".to_string(), "object_28".to_string()),
            ("bottle".to_string(), "object_31".to_string()),
            ("teddy bear".to_string(), "object_36".to_string()),
        ]);
        ObjectTable::new(["refrigerator", "bottle", "teddy bear", "chair"], &ids).unwrap()
    }

    fn drop_articles(s: &str) -> String {
        s.replace("the ", "")
    }

    #[test]
    fn table_assigns_free_ids_in_order() {
        let t = kitchen();
        assert_eq!(t.id_of("chair"), Some("object_1"));
        assert_eq!(t.class_of("object_36"), Some("teddy bear"));
        assert_eq!(t.len(), 4);
        assert_eq!(t.entries()[0], ("object_1", "chair"));
        assert!(t.correspondence().contains("    'object_36' : 'teddy bear'"));
        let bad = BTreeMap::from([("a".to_string(), "thing_1".to_string())]);
        assert_eq!(ObjectTable::new(["a"], &bad), Err(ObjectTableError::BadId("thing_1".into())));
        let dup = BTreeMap::from([("a".to_string(), "object_1".into()), ("b".to_string(), "object_1".into())]);
        assert!(matches!(ObjectTable::new(["a", "b"], &dup), Err(ObjectTableError::DuplicateId(_))));
    }

    #[test]
    fn llm_grounding_of_the_kitchen_example() {
        let llm = ScriptedClient::new([format!("Output text: {GROUNDED}\n")]);
        let g = ground(INSTRUCTION, &kitchen(), &llm, &PromptTemplates::default()).unwrap();
        assert_eq!(g.text, GROUNDED);
        assert_eq!(
            g.objects,
            BTreeSet::from(["object_28".into(), "object_31".into(), "object_36".into()])
        );
    }

    #[test]
    fn llm_grounding_drops_unknown_ids() {
        let llm = ScriptedClient::new(["Go to object_99 and object_1"]);
        let g = ground("Go", &kitchen(), &llm, &PromptTemplates::default()).unwrap();
        assert_eq!(g.objects, BTreeSet::from(["object_1".into()]));
        let empty = ScriptedClient::new(["  \n "]);
        assert_eq!(
            ground("Go", &kitchen(), &empty, &PromptTemplates::default()),
            Err(GroundError::Llm(LlmError::EmptyResponse))
        );
        assert_eq!(
            ground("Go", &ObjectTable::default(), &empty, &PromptTemplates::default()),
            Err(GroundError::EmptyTable)
        );
    }

    #[test]
    fn fallback_grounding_matches_the_kitchen_example() {
        let g = ground_fallback(INSTRUCTION, &kitchen());
        assert_eq!(drop_articles(&g.text), drop_articles(GROUNDED));
        assert_eq!(g.objects.len(), 3);
    }

    #[test]
    fn fallback_details() {
        let t = ObjectTable::new(["dining_table", "table", "cup"], &BTreeMap::new()).unwrap();
        let g = ground_fallback("Put the CUPS on the Dining Table, not the table; avoid cupboard", &t);
        assert_eq!(g.text, "Put the object_3 on the object_1, not the object_2; avoid cupboard");
        let none = ground_fallback("Wander around", &t);
        assert_eq!(none.text, "Wander around");
        assert!(none.objects.is_empty());
    }

    #[test]
    fn fallback_is_idempotent() {
        let t = kitchen();
        let once = ground_fallback(INSTRUCTION, &t);
        assert_eq!(ground_fallback(&once.text, &t), once);
    }

    #[test]
    fn mentioned_ids_respects_word_boundaries() {
        assert_eq!(
            mentioned_ids("object_1, object_12 xobject_3 object_ object_1"),
            vec!["object_1".to_string(), "object_12".into()]
        );
    }

    const GOOD: &str = "def question():\n    a = ap(\"object_36\")\n    return ltl_eventually(a)\n";
    const BAD: &str = "def question():\n    return ltl_eventually(a)\n";

    #[test]
    fn first_answer_correct() {
        let llm = ScriptedClient::new([GOOD]);
        let opts = TranslateOptions {
            grounding: GroundingMode::Verbatim,
            ..Default::default()
        };
        let r = translate("Reach object_36", &kitchen(), &llm, &opts).unwrap();
        assert_eq!(r.attempts, 1);
        assert!(r.errors.is_empty());
        assert_eq!(r.formula.to_prefix(), "F object_36");
    }

    #[test]
    fn retry_feeds_back_the_error() {
        let rec = RecordingClient::new(ScriptedClient::new([BAD, GOOD]));
        let opts = TranslateOptions {
            grounding: GroundingMode::Verbatim,
            ..Default::default()
        };
        let r = translate("Reach object_36", &kitchen(), &rec, &opts).unwrap();
        assert_eq!(r.attempts, 2);
        let second = opts
            .templates
            .build_prompt("Reach object_36", Some(BAD), Some(&r.errors[0]));
        assert!(second.contains(&format!("# failure reason:\n{}", r.errors[0])));
        assert!(r.errors[0].contains("`a`"));
        assert_eq!(rec.records()[1].prompt_hash, prompt_hash(&second));
    }

    #[test]
    fn budget_exhaustion_is_a_syntactic_failure() {
        let llm = ScriptedClient::new([BAD, BAD, BAD, BAD, GOOD]);
        let opts = TranslateOptions {
            grounding: GroundingMode::Verbatim,
            ..Default::default()
        };
        match translate("Reach object_36", &kitchen(), &llm, &opts) {
            Err(TranslateError::SyntacticFailure { attempts, errors, .. }) => {
                assert_eq!(attempts, 4);
                assert_eq!(errors.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_ids_are_retried() {
        let wrong = "def q():\n    return ltl_eventually(ap(\"object_7\"))";
        let llm = ScriptedClient::new([wrong, GOOD]);
        let opts = TranslateOptions {
            grounding: GroundingMode::Verbatim,
            ..Default::default()
        };
        let r = translate("Reach object_36", &kitchen(), &llm, &opts).unwrap();
        assert_eq!(r.attempts, 2);
        assert!(r.errors[0].starts_with("unknown object id(s) object_7"));
    }

    #[test]
    fn unavailable_model_aborts() {
        let llm = ScriptedClient::new(Vec::<String>::new());
        assert!(matches!(
            translate("x", &kitchen(), &llm, &TranslateOptions::default()),
            Err(TranslateError::LlmUnavailable(_))
        ));
    }

    #[test]
    fn resolve_maps_ids_to_classes() {
        let f = Formula::parse_prefix("& F object_36 G ! object_28").unwrap();
        let r = kitchen().resolve(&f);
        assert_eq!(
            r.atomic_props(),
            BTreeSet::from(["teddy bear".to_string(), "refrigerator".to_string()])
        );
    }
}
