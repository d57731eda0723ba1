//! Prompt templates and the few-shot example bank.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

const GROUNDING: &str = include_str!("../../data/prompts/grounding.txt");
const HEADER: &str = include_str!("../../data/prompts/header.txt");
const QUESTION: &str = include_str!("../../data/prompts/question.txt");
const EXAMPLES: &str = include_str!("../../data/examples.toml");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("example bank: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Example {
    pub name: String,
    pub code: String,
}

#[derive(Debug, Deserialize)]
struct Bank {
    #[serde(default)]
    example: Vec<Example>,
}

/// Grounding template, code-generation header, example bank and question
/// block. Templates use `{slot}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub grounding: String,
    pub header: String,
    pub question: String,
    pub examples: Vec<Example>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            grounding: GROUNDING.to_string(),
            header: HEADER.to_string(),
            question: QUESTION.to_string(),
            examples: parse_examples(EXAMPLES).expect("bundled example bank is valid"),
        }
    }
}

pub fn parse_examples(text: &str) -> Result<Vec<Example>, PromptError> {
    Ok(toml::from_str::<Bank>(text)?.example)
}

impl PromptTemplates {
    /// Bundled templates with any of `grounding.txt`, `header.txt`,
    /// `question.txt` and `examples.toml` found in `dir` substituted.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let mut t = PromptTemplates::default();
        let read = |name: &str| -> Result<Option<String>, PromptError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            std::fs::read_to_string(&path).map(Some).map_err(|source| PromptError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        if let Some(s) = read("grounding.txt")? {
            t.grounding = s;
        }
        if let Some(s) = read("header.txt")? {
            t.header = s;
        }
        if let Some(s) = read("question.txt")? {
            t.question = s;
        }
        if let Some(s) = read("examples.toml")? {
            t.examples = parse_examples(&s)?;
        }
        Ok(t)
    }

    /// Grounding request for `instruction` given the id correspondence lines.
    pub fn grounding_prompt(&self, correspondence: &str, instruction: &str) -> String {
        fill(&self.grounding, &[("object_ids", correspondence), ("instruction", instruction)])
    }

    /// Code-generation request. Empty slots render as nothing.
    pub fn build_prompt(&self, grounded: &str, previous_answer: Option<&str>, failure_reason: Option<&str>) -> String {
        let prev = previous_answer.map_or(String::new(), |p| format!("\n# previous answer:\n{}", p.trim_end()));
        let why = failure_reason.map_or(String::new(), |r| format!("\n# failure reason:\n{}", r.trim_end()));
        let mut out = self.header.trim_end().to_string();
        out.push_str("\n\n");
        for ex in &self.examples {
            out.push_str(ex.code.trim());
            out.push_str("\n\n");
        }
        out.push_str(&fill(
            &self.question,
            &[("instruction", grounded), ("previous_answer", &prev), ("failure_reason", &why)],
        ));
        out
    }
}

/// Single left-to-right pass so slot values are never re-expanded.
fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        for (name, value) in slots {
            if let Some(tail) = after.strip_prefix(name).and_then(|t| t.strip_prefix('}')) {
                out.push_str(value);
                rest = tail;
                continue 'outer;
            }
        }
        out.push('{');
        rest = after;
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::dsl::parse_dsl;

    #[test]
    fn bundled_examples_are_valid_programs() {
        let t = PromptTemplates::default();
        assert!(t.examples.len() >= 4);
        assert_eq!(t.examples[0].name, "example_1");
        for ex in &t.examples {
            parse_dsl(&ex.code).unwrap();
        }
    }

    #[test]
    fn first_attempt_has_no_retry_text() {
        let t = PromptTemplates::default();
        let p = t.build_prompt("Reach object_1", None, None);
        assert!(p.starts_with("# Please help write code"));
        assert!(p.contains("def example_1():"));
        assert!(p.contains("    Reach object_1\n    \"\"\""));
        assert!(!p.contains("# previous answer:"));
        assert!(!p.contains("# failure reason:"));
        assert!(!p.contains("{instruction}"));
    }

    #[test]
    fn retry_fills_both_slots() {
        let t = PromptTemplates::default();
        let p = t.build_prompt("Reach object_1", Some("def q():\n    return x\n"), Some("variable `x` is undefined"));
        assert!(p.contains("Reach object_1\n# previous answer:\ndef q():\n    return x\n# failure reason:\nvariable `x` is undefined\n"));
    }

    #[test]
    fn prompt_is_byte_stable() {
        let t = PromptTemplates::default();
        assert_eq!(
            t.build_prompt("go {instruction}", Some("a"), None),
            PromptTemplates::default().build_prompt("go {instruction}", Some("a"), None)
        );
        assert!(t.build_prompt("go {instruction}", None, None).contains("go {instruction}"));
    }

    #[test]
    fn grounding_prompt_fills_slots() {
        let t = PromptTemplates::default();
        let p = t.grounding_prompt("    'object_1' : 'chair'", "Go to the chair");
        assert!(p.contains("Object ID correspondence:\n    'object_1' : 'chair'\nInput text: Go to the chair\nOutput text:"));
    }

    #[test]
    fn load_overrides_example_bank() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("examples.toml"),
            "[[example]]\nname = \"only\"\ncode = '''\ndef only():\n    return ap(\"object_1\")\n'''\n",
        )
        .unwrap();
        let t = PromptTemplates::load(dir.path()).unwrap();
        assert_eq!(t.examples.len(), 1);
        assert_eq!(t.header, PromptTemplates::default().header);
    }
}
