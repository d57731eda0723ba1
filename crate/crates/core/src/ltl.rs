//! LTL formulas over atomic propositions, interpreted over finite traces.
//!
//! Two text encodings are supported:
//!
//! * prefix: whitespace separated tokens, e.g. `& F object_1 G ! object_2`
//! * infix: fully parenthesised operands, e.g. `(F(object_1)) & (G(!(object_2)))`
//!
//! Operator tokens are `&`, `|`, `!`, `=>`, `X` (strong next), `N` (weak next),
//! `U`, `F` and `G`, plus the constants `true` and `false`.  Weak next only
//! arises from negation normal form: with finite traces `!X f` is not
//! expressible with strong next alone.
//!
//! Satisfaction is the usual finite-trace (LTLf) semantics. Positions range
//! over the word; a formula evaluated past the end of the word (only possible
//! on the empty word) treats `true`, `G` and `N` as satisfied and everything
//! else as violated.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A set of proposition names that hold at one step of a trace.
pub type Letter = BTreeSet<String>;

/// A finite trace of letters.
pub type Word = Vec<Letter>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    /// Strong next: fails at the last position.
    Next(Box<Formula>),
    /// Weak next: holds at the last position.
    WeakNext(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected token `{token}` at position {position}")]
    UnexpectedToken { token: String, position: usize },
    #[error("missing operand at position {position}")]
    MissingOperand { position: usize },
    #[error("trailing input starting at position {position}")]
    TrailingInput { position: usize },
    #[error("unbalanced parentheses at position {position}")]
    UnbalancedParens { position: usize },
}

impl Formula {
    pub fn prop(name: impl Into<String>) -> Self {
        Formula::Prop(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imply(a: Formula, b: Formula) -> Self {
        Formula::Imply(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn weak_next(f: Formula) -> Self {
        Formula::WeakNext(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }

    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    /// Names of all atomic propositions occurring in the formula.
    pub fn atomic_props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::WeakNext(f)
            | Formula::Eventually(f)
            | Formula::Always(f) => f.collect_props(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Until(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// Rename every proposition through `f`.
    pub fn map_props(&self, f: &impl Fn(&str) -> String) -> Formula {
        let m = |x: &Formula| Box::new(x.map_props(f));
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Prop(p) => Formula::Prop(f(p)),
            Formula::Not(a) => Formula::Not(m(a)),
            Formula::Next(a) => Formula::Next(m(a)),
            Formula::WeakNext(a) => Formula::WeakNext(m(a)),
            Formula::Eventually(a) => Formula::Eventually(m(a)),
            Formula::Always(a) => Formula::Always(m(a)),
            Formula::And(a, b) => Formula::And(m(a), m(b)),
            Formula::Or(a, b) => Formula::Or(m(a), m(b)),
            Formula::Imply(a, b) => Formula::Imply(m(a), m(b)),
            Formula::Until(a, b) => Formula::Until(m(a), m(b)),
        }
    }

    /// Nesting depth; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => 0,
            Formula::Not(f)
            | Formula::Next(f)
            | Formula::WeakNext(f)
            | Formula::Eventually(f)
            | Formula::Always(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Until(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Negation normal form: implications are eliminated and negations only
    /// wrap atomic propositions.
    ///
    /// Finite-trace duals used here: `!X f = N !f`, `!N f = X !f`,
    /// `!(a U b) = G !b | (!b U (!a & !b))`.
    pub fn nnf(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Not(f) => f.negated_nnf(),
            Formula::And(a, b) => Formula::and(a.nnf(), b.nnf()),
            Formula::Or(a, b) => Formula::or(a.nnf(), b.nnf()),
            Formula::Imply(a, b) => Formula::or(a.negated_nnf(), b.nnf()),
            Formula::Next(f) => Formula::next(f.nnf()),
            Formula::WeakNext(f) => Formula::weak_next(f.nnf()),
            Formula::Until(a, b) => Formula::until(a.nnf(), b.nnf()),
            Formula::Eventually(f) => Formula::eventually(f.nnf()),
            Formula::Always(f) => Formula::always(f.nnf()),
        }
    }

    /// NNF of `!self`.
    fn negated_nnf(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Prop(_) => Formula::not(self.clone()),
            Formula::Not(f) => f.nnf(),
            Formula::And(a, b) => Formula::or(a.negated_nnf(), b.negated_nnf()),
            Formula::Or(a, b) => Formula::and(a.negated_nnf(), b.negated_nnf()),
            Formula::Imply(a, b) => Formula::and(a.nnf(), b.negated_nnf()),
            Formula::Next(f) => Formula::weak_next(f.negated_nnf()),
            Formula::WeakNext(f) => Formula::next(f.negated_nnf()),
            Formula::Until(a, b) => {
                let not_a = a.negated_nnf();
                let not_b = b.negated_nnf();
                Formula::or(
                    Formula::always(not_b.clone()),
                    Formula::until(not_b.clone(), Formula::and(not_a, not_b)),
                )
            }
            Formula::Eventually(f) => Formula::always(f.negated_nnf()),
            Formula::Always(f) => Formula::eventually(f.negated_nnf()),
        }
    }

    /// True iff the negation normal form contains no `G`.
    pub fn is_syntactically_cosafe(&self) -> bool {
        fn no_always(f: &Formula) -> bool {
            match f {
                Formula::Always(_) => false,
                Formula::True | Formula::False | Formula::Prop(_) => true,
                Formula::Not(a) | Formula::Next(a) | Formula::WeakNext(a) | Formula::Eventually(a) => {
                    no_always(a)
                }
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) | Formula::Until(a, b) => {
                    no_always(a) && no_always(b)
                }
            }
        }
        no_always(&self.nnf())
    }

    /// Finite-trace satisfaction `w |= self`.
    pub fn eval_finite(&self, word: &[Letter]) -> bool {
        if word.len() < 64 {
            self.positions_small(word) & 1 == 1
        } else {
            self.positions(word)[0]
        }
    }

    /// Bit `i` is set iff the formula holds at position `i` (0..=len).
    fn positions_small(&self, word: &[Letter]) -> u64 {
        let n = word.len();
        let full: u64 = (1u64 << (n + 1)) - 1;
        let bit = |i: usize| 1u64 << i;
        match self {
            Formula::True => full,
            Formula::False => 0,
            Formula::Prop(p) => word
                .iter()
                .enumerate()
                .filter(|(_, l)| l.contains(p))
                .fold(0, |m, (i, _)| m | bit(i)),
            Formula::Not(f) => !f.positions_small(word) & full,
            Formula::And(a, b) => a.positions_small(word) & b.positions_small(word),
            Formula::Or(a, b) => a.positions_small(word) | b.positions_small(word),
            Formula::Imply(a, b) => (!a.positions_small(word) | b.positions_small(word)) & full,
            Formula::Next(f) => {
                // i + 1 < n
                let inner = f.positions_small(word) >> 1;
                if n == 0 {
                    0
                } else {
                    inner & ((1u64 << (n - 1)) - 1)
                }
            }
            Formula::WeakNext(f) => {
                let inner = f.positions_small(word) >> 1;
                let tail = full & !((1u64 << n.saturating_sub(1)) - 1);
                (inner | tail) & full
            }
            Formula::Eventually(f) => {
                let m = f.positions_small(word);
                let mut acc = 0u64;
                let mut r = false;
                for i in (0..n).rev() {
                    r = r || m & bit(i) != 0;
                    if r {
                        acc |= bit(i);
                    }
                }
                acc
            }
            Formula::Always(f) => {
                let m = f.positions_small(word);
                let mut acc = bit(n);
                let mut r = true;
                for i in (0..n).rev() {
                    r = r && m & bit(i) != 0;
                    if r {
                        acc |= bit(i);
                    }
                }
                acc
            }
            Formula::Until(a, b) => {
                let ma = a.positions_small(word);
                let mb = b.positions_small(word);
                let mut acc = 0u64;
                let mut r = false;
                for i in (0..n).rev() {
                    r = mb & bit(i) != 0 || (ma & bit(i) != 0 && r);
                    if r {
                        acc |= bit(i);
                    }
                }
                acc
            }
        }
    }

    /// Truth value at every position `0..=len`.
    fn positions(&self, word: &[Letter]) -> Vec<bool> {
        let n = word.len();
        match self {
            Formula::True => vec![true; n + 1],
            Formula::False => vec![false; n + 1],
            Formula::Prop(p) => {
                let mut v: Vec<bool> = word.iter().map(|l| l.contains(p)).collect();
                v.push(false);
                v
            }
            Formula::Not(f) => f.positions(word).into_iter().map(|x| !x).collect(),
            Formula::And(a, b) => zip_with(a.positions(word), b.positions(word), |x, y| x && y),
            Formula::Or(a, b) => zip_with(a.positions(word), b.positions(word), |x, y| x || y),
            Formula::Imply(a, b) => zip_with(a.positions(word), b.positions(word), |x, y| !x || y),
            Formula::Next(f) => {
                let m = f.positions(word);
                (0..=n).map(|i| i + 1 < n && m[i + 1]).collect()
            }
            Formula::WeakNext(f) => {
                let m = f.positions(word);
                (0..=n).map(|i| i + 1 >= n || m[i + 1]).collect()
            }
            Formula::Eventually(f) => {
                let m = f.positions(word);
                let mut out = vec![false; n + 1];
                for i in (0..n).rev() {
                    out[i] = m[i] || out[i + 1];
                }
                out
            }
            Formula::Always(f) => {
                let m = f.positions(word);
                let mut out = vec![true; n + 1];
                for i in (0..n).rev() {
                    out[i] = m[i] && out[i + 1];
                }
                out
            }
            Formula::Until(a, b) => {
                let ma = a.positions(word);
                let mb = b.positions(word);
                let mut out = vec![false; n + 1];
                for i in (0..n).rev() {
                    out[i] = mb[i] || (ma[i] && out[i + 1]);
                }
                out
            }
        }
    }

    pub fn to_prefix(&self) -> String {
        let mut out = String::new();
        self.write_prefix(&mut out);
        out
    }

    fn write_prefix(&self, out: &mut String) {
        if !out.is_empty() {
            out.push(' ');
        }
        match self {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Prop(p) => out.push_str(p),
            Formula::Not(f) => unary_prefix(out, "!", f),
            Formula::Next(f) => unary_prefix(out, "X", f),
            Formula::WeakNext(f) => unary_prefix(out, "N", f),
            Formula::Eventually(f) => unary_prefix(out, "F", f),
            Formula::Always(f) => unary_prefix(out, "G", f),
            Formula::And(a, b) => binary_prefix(out, "&", a, b),
            Formula::Or(a, b) => binary_prefix(out, "|", a, b),
            Formula::Imply(a, b) => binary_prefix(out, "=>", a, b),
            Formula::Until(a, b) => binary_prefix(out, "U", a, b),
        }
    }

    pub fn to_infix(&self) -> String {
        match self {
            Formula::True => "true".to_string(),
            Formula::False => "false".to_string(),
            Formula::Prop(p) => p.clone(),
            Formula::Not(f) => format!("!({})", f.to_infix()),
            Formula::Next(f) => format!("X({})", f.to_infix()),
            Formula::WeakNext(f) => format!("N({})", f.to_infix()),
            Formula::Eventually(f) => format!("F({})", f.to_infix()),
            Formula::Always(f) => format!("G({})", f.to_infix()),
            Formula::And(a, b) => format!("({}) & ({})", a.to_infix(), b.to_infix()),
            Formula::Or(a, b) => format!("({}) | ({})", a.to_infix(), b.to_infix()),
            Formula::Imply(a, b) => format!("({}) => ({})", a.to_infix(), b.to_infix()),
            Formula::Until(a, b) => format!("({}) U ({})", a.to_infix(), b.to_infix()),
        }
    }

    pub fn parse_prefix(text: &str) -> Result<Formula, ParseError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut pos = 0;
        let f = parse_prefix_at(&tokens, &mut pos)?;
        if pos < tokens.len() {
            return Err(ParseError::TrailingInput { position: pos });
        }
        Ok(f)
    }

    pub fn parse_infix(text: &str) -> Result<Formula, ParseError> {
        let tokens = tokenize_infix(text)?;
        let mut parser = InfixParser { tokens, pos: 0 };
        let f = parser.implication()?;
        match parser.peek() {
            None => Ok(f),
            Some(")") => Err(ParseError::UnbalancedParens { position: parser.pos }),
            Some(_) => Err(ParseError::TrailingInput { position: parser.pos }),
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn unary_prefix(out: &mut String, op: &str, f: &Formula) {
    out.push_str(op);
    f.write_prefix(out);
}

fn binary_prefix(out: &mut String, op: &str, a: &Formula, b: &Formula) {
    out.push_str(op);
    a.write_prefix(out);
    b.write_prefix(out);
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_infix())
    }
}

/// Text encodings understood by [`Formula::parse`] and [`Formula::render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Notation {
    #[default]
    Prefix,
    Infix,
}

impl Formula {
    pub fn parse(text: &str, notation: Notation) -> Result<Formula, ParseError> {
        match notation {
            Notation::Prefix => Formula::parse_prefix(text),
            Notation::Infix => Formula::parse_infix(text),
        }
    }

    pub fn render(&self, notation: Notation) -> String {
        match notation {
            Notation::Prefix => self.to_prefix(),
            Notation::Infix => self.to_infix(),
        }
    }
}

const KEYWORDS: &[&str] = &["&", "|", "!", "=>", "X", "N", "U", "F", "G", "true", "false", "(", ")"];

pub(crate) fn is_prop_name(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !KEYWORDS.contains(&token)
}

fn parse_prefix_at(tokens: &[&str], pos: &mut usize) -> Result<Formula, ParseError> {
    let Some(&tok) = tokens.get(*pos) else {
        return Err(ParseError::MissingOperand { position: *pos });
    };
    let at = *pos;
    *pos += 1;
    let operand = |pos: &mut usize| parse_prefix_at(tokens, pos);
    Ok(match tok {
        "true" => Formula::True,
        "false" => Formula::False,
        "!" => Formula::not(operand(pos)?),
        "X" => Formula::next(operand(pos)?),
        "N" => Formula::weak_next(operand(pos)?),
        "F" => Formula::eventually(operand(pos)?),
        "G" => Formula::always(operand(pos)?),
        "&" | "|" | "=>" | "U" => {
            let a = operand(pos)?;
            let b = operand(pos)?;
            match tok {
                "&" => Formula::and(a, b),
                "|" => Formula::or(a, b),
                "=>" => Formula::imply(a, b),
                _ => Formula::until(a, b),
            }
        }
        t if is_prop_name(t) => Formula::prop(t),
        t => {
            return Err(ParseError::UnexpectedToken {
                token: t.to_string(),
                position: at,
            })
        }
    })
}

fn tokenize_infix(text: &str) -> Result<Vec<String>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if matches!(c, '(' | ')' | '&' | '|' | '!') {
            tokens.push(c.to_string());
            i += 1;
        } else if c == '=' && chars.get(i + 1) == Some(&'>') {
            tokens.push("=>".to_string());
            i += 2;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
        } else {
            return Err(ParseError::UnexpectedToken {
                token: c.to_string(),
                position: tokens.len(),
            });
        }
    }
    Ok(tokens)
}

/// Precedence, loosest first: `=>` (right assoc), `|`, `&`, `U` (left assoc),
/// then the unary operators.
struct InfixParser {
    tokens: Vec<String>,
    pos: usize,
}

impl InfixParser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some("=>") {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::imply(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some("|") {
            self.pos += 1;
            lhs = Formula::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.peek() == Some("&") {
            self.pos += 1;
            lhs = Formula::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some("U") {
            self.pos += 1;
            lhs = Formula::until(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let at = self.pos;
        let Some(tok) = self.peek().map(str::to_owned) else {
            return Err(ParseError::MissingOperand { position: at });
        };
        self.pos += 1;
        match tok.as_str() {
            "!" => Ok(Formula::not(self.unary()?)),
            "X" => Ok(Formula::next(self.unary()?)),
            "N" => Ok(Formula::weak_next(self.unary()?)),
            "F" => Ok(Formula::eventually(self.unary()?)),
            "G" => Ok(Formula::always(self.unary()?)),
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            "(" => {
                let inner = self.implication()?;
                if self.peek() != Some(")") {
                    return Err(ParseError::UnbalancedParens { position: at });
                }
                self.pos += 1;
                Ok(inner)
            }
            ")" => Err(ParseError::UnbalancedParens { position: at }),
            t if is_prop_name(t) => Ok(Formula::prop(t)),
            "&" | "|" | "=>" | "U" => Err(ParseError::MissingOperand { position: at }),
            t => Err(ParseError::UnexpectedToken {
                token: t.to_string(),
                position: at,
            }),
        }
    }
}

/// Convenience for building letters in tests and fixtures.
pub fn letter<I, S>(props: I) -> Letter
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    props.into_iter().map(Into::into).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        Formula::prop(s)
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(Formula::parse_prefix("& a b").unwrap(), Formula::and(p("a"), p("b")));
        assert_eq!(Formula::parse_prefix("p").unwrap(), p("p"));
        assert_eq!(
            Formula::parse_prefix("F & object_1 X object_2").unwrap(),
            Formula::eventually(Formula::and(p("object_1"), Formula::next(p("object_2"))))
        );
        assert_eq!(Formula::parse_prefix("  &   a\n b ").unwrap().to_prefix(), "& a b");
    }

    #[test]
    fn prefix_errors() {
        assert_eq!(
            Formula::parse_prefix("& a"),
            Err(ParseError::MissingOperand { position: 2 })
        );
        assert_eq!(
            Formula::parse_prefix("a b"),
            Err(ParseError::TrailingInput { position: 1 })
        );
        assert_eq!(
            Formula::parse_prefix("& a )"),
            Err(ParseError::UnexpectedToken {
                token: ")".into(),
                position: 2
            })
        );
        assert_eq!(Formula::parse_prefix(""), Err(ParseError::MissingOperand { position: 0 }));
    }

    #[test]
    fn infix_examples() {
        assert_eq!(Formula::parse_infix("(a) & (b)").unwrap(), Formula::and(p("a"), p("b")));
        assert_eq!(
            Formula::parse_infix("F(a) & G(!(b))").unwrap(),
            Formula::and(Formula::eventually(p("a")), Formula::always(Formula::not(p("b"))))
        );
        assert_eq!(Formula::parse_infix("a").unwrap(), p("a"));
    }

    #[test]
    fn infix_precedence_and_associativity() {
        // => is right associative
        assert_eq!(
            Formula::parse_infix("a => b => c").unwrap(),
            Formula::imply(p("a"), Formula::imply(p("b"), p("c")))
        );
        // U is left associative and binds tighter than &
        assert_eq!(
            Formula::parse_infix("a U b U c & d").unwrap(),
            Formula::and(Formula::until(Formula::until(p("a"), p("b")), p("c")), p("d"))
        );
        assert_eq!(
            Formula::parse_infix("a | b & c => d").unwrap(),
            Formula::imply(Formula::or(p("a"), Formula::and(p("b"), p("c"))), p("d"))
        );
        assert_eq!(
            Formula::parse_infix("F a U b").unwrap(),
            Formula::until(Formula::eventually(p("a")), p("b"))
        );
    }

    #[test]
    fn infix_errors() {
        assert!(matches!(
            Formula::parse_infix("(a & b"),
            Err(ParseError::UnbalancedParens { .. })
        ));
        assert!(matches!(
            Formula::parse_infix("a & b)"),
            Err(ParseError::UnbalancedParens { .. })
        ));
        assert!(matches!(
            Formula::parse_infix("a $ b"),
            Err(ParseError::UnexpectedToken { .. })
        ));
        assert!(matches!(
            Formula::parse_infix("a &"),
            Err(ParseError::MissingOperand { .. })
        ));
    }

    #[test]
    fn serialization_examples() {
        let ab = Formula::and(p("a"), p("b"));
        assert_eq!(ab.to_prefix(), "& a b");
        assert_eq!(ab.to_infix(), "(a) & (b)");
        assert_eq!(Formula::eventually(p("a")).to_prefix(), "F a");
    }

    #[test]
    fn nnf_examples() {
        assert_eq!(
            Formula::not(Formula::and(p("a"), p("b"))).nnf(),
            Formula::or(Formula::not(p("a")), Formula::not(p("b")))
        );
        assert_eq!(
            Formula::not(Formula::eventually(p("a"))).nnf(),
            Formula::always(Formula::not(p("a")))
        );
        assert_eq!(
            Formula::imply(p("a"), p("b")).nnf(),
            Formula::or(Formula::not(p("a")), p("b"))
        );
    }

    #[test]
    fn cosafety_examples() {
        assert!(Formula::eventually(Formula::and(p("a"), Formula::eventually(p("b")))).is_syntactically_cosafe());
        assert!(!Formula::always(Formula::not(p("a"))).is_syntactically_cosafe());
        assert!(Formula::until(Formula::not(p("a")), p("b")).is_syntactically_cosafe());
        // !F a is G !a once normalised
        assert!(!Formula::not(Formula::eventually(p("a"))).is_syntactically_cosafe());
    }

    #[test]
    fn eval_examples() {
        let w = vec![letter(["a"]), letter(["b"])];
        assert!(Formula::eventually(p("b")).eval_finite(&w));
        assert!(!Formula::always(Formula::not(p("a"))).eval_finite(&[letter(["a"])]));
        let w = vec![letter(["a"]), letter(["a"]), letter(["b"])];
        assert!(Formula::until(p("a"), p("b")).eval_finite(&w));
        let w = vec![letter(["a"]), letter(Vec::<String>::new()), letter(["b"])];
        assert!(!Formula::until(p("a"), p("b")).eval_finite(&w));
    }

    #[test]
    fn empty_word() {
        let w: Word = vec![];
        assert!(Formula::True.eval_finite(&w));
        assert!(!p("a").eval_finite(&w));
        assert!(!Formula::eventually(Formula::True).eval_finite(&w));
        assert!(!Formula::until(Formula::True, Formula::True).eval_finite(&w));
        assert!(!Formula::next(Formula::True).eval_finite(&w));
        assert!(Formula::always(Formula::False).eval_finite(&w));
        assert!(Formula::weak_next(Formula::False).eval_finite(&w));
    }

    #[test]
    fn strong_and_weak_next_at_last_position() {
        let w = vec![letter(["a"])];
        assert!(!Formula::next(Formula::True).eval_finite(&w));
        assert!(Formula::weak_next(Formula::False).eval_finite(&w));
        let w = vec![letter(["a"]), letter(["b"])];
        assert!(Formula::next(p("b")).eval_finite(&w));
        assert!(!Formula::weak_next(p("a")).eval_finite(&w));
    }

    #[test]
    fn long_words_use_vector_path() {
        let mut w: Word = vec![Letter::new(); 100];
        w[99].insert("a".into());
        assert!(Formula::eventually(p("a")).eval_finite(&w));
        assert!(!Formula::always(Formula::not(p("a"))).eval_finite(&w));
        assert!(Formula::until(Formula::not(p("a")), p("a")).eval_finite(&w));
        let short = &w[90..];
        let f = Formula::and(Formula::eventually(p("a")), Formula::next(Formula::True));
        assert_eq!(f.eval_finite(short), f.positions(short)[0]);
    }

    #[test]
    fn atomic_props_examples() {
        assert_eq!(Formula::and(p("a"), p("b")).atomic_props(), letter(["a", "b"]));
        assert!(Formula::True.atomic_props().is_empty());
        assert_eq!(Formula::eventually(p("a")).atomic_props(), letter(["a"]));
    }
}
