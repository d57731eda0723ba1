//! Restricted interpreter for formula-building code.
//!
//! Accepted programs look like
//!
//! ```text
//! def example_1():
//!     """
//!     Reach object_2 and object_1
//!     """
//!     reach_obj_2 = ap("object_2")  # reach(object_2)
//!     c1 = ltl_eventually(reach_obj_2)
//!     return c1
//! ```
//!
//! Leading `import`/`from` lines and surrounding markdown fences are skipped.
//! Nothing outside this grammar is executed.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::ltl::{is_prop_name, Formula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Ap,
    And,
    Or,
    Not,
    Until,
    Eventually,
    Always,
    Imply,
    Next,
}

impl Builtin {
    pub const ALL: [Builtin; 9] = [
        Builtin::Ap,
        Builtin::And,
        Builtin::Or,
        Builtin::Not,
        Builtin::Until,
        Builtin::Eventually,
        Builtin::Always,
        Builtin::Imply,
        Builtin::Next,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Ap => "ap",
            Builtin::And => "ltl_and",
            Builtin::Or => "ltl_or",
            Builtin::Not => "ltl_not",
            Builtin::Until => "ltl_until",
            Builtin::Eventually => "ltl_eventually",
            Builtin::Always => "ltl_always",
            Builtin::Imply => "ltl_imply",
            Builtin::Next => "ltl_next",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::And | Builtin::Or | Builtin::Until | Builtin::Imply => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Str(String),
    Call { func: Builtin, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Assign { target: String, value: Expr },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DslProgram {
    pub name: String,
    pub docstring: Option<String>,
    pub comments: Vec<String>,
    pub statements: Vec<Statement>,
}

impl DslProgram {
    pub fn return_expr(&self) -> &Expr {
        match self.statements.last() {
            Some(Statement::Return(e)) => e,
            _ => unreachable!("parse_dsl guarantees a trailing return"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("unknown function `{0}`; allowed: ap, ltl_and, ltl_or, ltl_not, ltl_until, ltl_eventually, ltl_always, ltl_imply, ltl_next")]
    UnknownFunction(String),
    #[error("variable `{0}` is used before it is defined")]
    UndefinedVariable(String),
    #[error("`{name}` takes {expected} argument(s) but {got} were given")]
    ArityError { name: String, expected: usize, got: usize },
    #[error("ap() takes a single string literal, e.g. ap(\"object_1\")")]
    NonStringApArgument,
    #[error("`{0}` is not a valid proposition name; use object ids such as \"object_1\"")]
    InvalidProposition(String),
    #[error("the function has no return statement")]
    MissingReturn,
    #[error("syntax error at {position}: {message}")]
    SyntaxError { position: Position, message: String },
}

fn syntax(position: Position, message: impl Into<String>) -> DslError {
    DslError::SyntaxError {
        position,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Equals,
    Dot,
    Star,
    Newline,
    Comment(String),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Position,
}

/// Drop everything outside the first fenced block, if there is one.
fn strip_fences(code: &str) -> String {
    let lines: Vec<&str> = code.lines().collect();
    let Some(start) = lines.iter().position(|l| l.trim_start().starts_with("```")) else {
        return code.to_string();
    };
    let end = lines[start + 1..]
        .iter()
        .position(|l| l.trim_start().starts_with("```"))
        .map_or(lines.len(), |e| start + 1 + e);
    let mut out = String::new();
    for _ in 0..=start {
        out.push('\n');
    }
    for l in &lines[start + 1..end] {
        out.push_str(l);
        out.push('\n');
    }
    out
}

fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut depth = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column: col };
        let advance = |n: usize, i: &mut usize, line: &mut usize, col: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        match c {
            '\n' => {
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, pos });
                }
                advance(1, &mut i, &mut line, &mut col);
            }
            ' ' | '\t' | '\r' => advance(1, &mut i, &mut line, &mut col),
            '\\' if chars.get(i + 1) == Some(&'\n') => advance(2, &mut i, &mut line, &mut col),
            '#' => {
                let end = chars[i..].iter().position(|&c| c == '\n').map_or(chars.len(), |e| i + e);
                let text: String = chars[i + 1..end].iter().collect();
                if depth == 0 {
                    out.push(Token {
                        tok: Tok::Comment(text.trim().to_string()),
                        pos,
                    });
                }
                advance(end - i, &mut i, &mut line, &mut col);
            }
            '"' | '\'' => {
                let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                let open = if triple { 3 } else { 1 };
                let mut j = i + open;
                let mut text = String::new();
                loop {
                    if j >= chars.len() {
                        return Err(syntax(pos, "unterminated string literal"));
                    }
                    if triple {
                        if chars[j] == c && chars.get(j + 1) == Some(&c) && chars.get(j + 2) == Some(&c) {
                            j += 3;
                            break;
                        }
                    } else if chars[j] == c {
                        j += 1;
                        break;
                    } else if chars[j] == '\n' {
                        return Err(syntax(pos, "unterminated string literal"));
                    }
                    if chars[j] == '\\' && j + 1 < chars.len() {
                        text.push(chars[j + 1]);
                        j += 2;
                        continue;
                    }
                    text.push(chars[j]);
                    j += 1;
                }
                out.push(Token { tok: Tok::Str(text), pos });
                advance(j - i, &mut i, &mut line, &mut col);
            }
            '(' | ')' | ',' | ':' | '=' | '.' | '*' => {
                let tok = match c {
                    '(' => {
                        depth += 1;
                        Tok::LParen
                    }
                    ')' => {
                        depth = depth.saturating_sub(1);
                        Tok::RParen
                    }
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '=' => Tok::Equals,
                    '.' => Tok::Dot,
                    _ => Tok::Star,
                };
                out.push(Token { tok, pos });
                advance(1, &mut i, &mut line, &mut col);
            }
            c if c.is_alphanumeric() || c == '_' => {
                let end = chars[i..]
                    .iter()
                    .position(|&c| !(c.is_alphanumeric() || c == '_'))
                    .map_or(chars.len(), |e| i + e);
                out.push(Token {
                    tok: Tok::Ident(chars[i..end].iter().collect()),
                    pos,
                });
                advance(end - i, &mut i, &mut line, &mut col);
            }
            other => return Err(syntax(pos, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Newline,
        pos: Position { line, column: col },
    });
    out.push(Token {
        tok: Tok::Eof,
        pos: Position { line, column: col },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    comments: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Position {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), DslError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    /// Skip blank lines and collect comments.
    fn skip_blank(&mut self) {
        loop {
            match self.peek().clone() {
                Tok::Newline => {
                    self.bump();
                }
                Tok::Comment(c) => {
                    self.comments.push(c);
                    self.bump();
                }
                _ => return,
            }
        }
    }

    fn end_of_line(&mut self) -> Result<(), DslError> {
        if let Tok::Comment(c) = self.peek().clone() {
            self.comments.push(c);
            self.bump();
        }
        match self.peek() {
            Tok::Newline | Tok::Eof => {
                self.bump();
                Ok(())
            }
            _ => Err(syntax(self.pos(), "expected end of line")),
        }
    }

    fn skip_line(&mut self) {
        while !matches!(self.peek(), Tok::Newline | Tok::Eof) {
            self.bump();
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(syntax(self.pos(), format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let pos = self.pos();
        match self.bump().tok {
            Tok::Str(s) => Ok(Expr::Str(s)),
            Tok::Ident(name) => {
                if *self.peek() != Tok::LParen {
                    if is_keyword(&name) {
                        return Err(syntax(pos, format!("unexpected keyword `{name}`")));
                    }
                    return Ok(Expr::Var(name));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        match self.peek() {
                            Tok::Comma => {
                                self.bump();
                                if *self.peek() == Tok::RParen {
                                    break;
                                }
                            }
                            Tok::RParen => break,
                            Tok::Equals => return Err(syntax(self.pos(), "keyword arguments are not supported")),
                            _ => return Err(syntax(self.pos(), "expected `,` or `)`")),
                        }
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                let func = Builtin::from_name(&name).ok_or(DslError::UnknownFunction(name.clone()))?;
                if args.len() != func.arity() {
                    return Err(DslError::ArityError {
                        name,
                        expected: func.arity(),
                        got: args.len(),
                    });
                }
                Ok(Expr::Call { func, args })
            }
            _ => Err(syntax(pos, "expected an expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "def" | "return" | "import" | "from" | "if" | "for" | "while" | "lambda" | "class")
}

/// Parse and validate a program.
pub fn parse_dsl(code: &str) -> Result<DslProgram, DslError> {
    let src = strip_fences(code);
    let mut p = Parser {
        toks: lex(&src)?,
        at: 0,
        comments: Vec::new(),
    };

    // preamble: imports and comments
    loop {
        p.skip_blank();
        match p.peek() {
            Tok::Ident(k) if k == "import" || k == "from" => p.skip_line(),
            _ => break,
        }
    }
    if !matches!(p.peek(), Tok::Ident(k) if k == "def") {
        return Err(syntax(p.pos(), "expected `def`"));
    }
    p.bump();
    let name = p.ident("function name")?;
    p.expect(Tok::LParen, "`(`")?;
    p.expect(Tok::RParen, "`)`")?;
    p.expect(Tok::Colon, "`:`")?;
    p.end_of_line()?;

    let mut docstring = None;
    let mut statements = Vec::new();
    let mut defined: HashSet<String> = HashSet::new();
    loop {
        p.skip_blank();
        let pos = p.pos();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Str(s) => {
                p.bump();
                if docstring.is_none() && statements.is_empty() {
                    docstring = Some(s.trim().to_string());
                }
                p.end_of_line()?;
            }
            Tok::Ident(k) if k == "return" => {
                p.bump();
                let e = p.expr()?;
                check(&e, &defined, true)?;
                p.end_of_line()?;
                statements.push(Statement::Return(e));
                p.skip_blank();
                if *p.peek() != Tok::Eof {
                    return Err(syntax(p.pos(), "nothing may follow the return statement"));
                }
                break;
            }
            Tok::Ident(k) if k == "def" => return Err(syntax(pos, "only one function definition is allowed")),
            Tok::Ident(k) if is_keyword(&k) => return Err(syntax(pos, format!("unsupported statement `{k}`"))),
            Tok::Ident(target) => {
                p.bump();
                if *p.peek() != Tok::Equals {
                    return Err(syntax(p.pos(), "expected `=` after variable name"));
                }
                p.bump();
                let value = p.expr()?;
                check(&value, &defined, true)?;
                p.end_of_line()?;
                defined.insert(target.clone());
                statements.push(Statement::Assign { target, value });
            }
            _ => return Err(syntax(pos, "expected a statement")),
        }
    }
    if !matches!(statements.last(), Some(Statement::Return(_))) {
        return Err(DslError::MissingReturn);
    }
    Ok(DslProgram {
        name,
        docstring,
        comments: p.comments,
        statements,
    })
}

/// Scope, `ap` argument and formula-typing checks.
fn check(e: &Expr, defined: &HashSet<String>, top: bool) -> Result<(), DslError> {
    match e {
        Expr::Var(v) if defined.contains(v) => Ok(()),
        Expr::Var(v) => Err(DslError::UndefinedVariable(v.clone())),
        Expr::Str(s) if top => Err(DslError::InvalidProposition(s.clone())),
        Expr::Str(_) => Err(DslError::NonStringApArgument),
        Expr::Call { func: Builtin::Ap, args } => match &args[0] {
            Expr::Str(s) if is_prop_name(s) => Ok(()),
            Expr::Str(s) => Err(DslError::InvalidProposition(s.clone())),
            _ => Err(DslError::NonStringApArgument),
        },
        Expr::Call { args, .. } => {
            for a in args {
                match a {
                    Expr::Str(s) => {
                        return Err(syntax(
                            Position { line: 0, column: 0 },
                            format!("string literal \"{s}\" must be wrapped in ap(...)"),
                        ))
                    }
                    _ => check(a, defined, false)?,
                }
            }
            Ok(())
        }
    }
}

/// Execute a validated program. Cannot fail.
pub fn eval_dsl(p: &DslProgram) -> Formula {
    let mut env: std::collections::HashMap<&str, Formula> = std::collections::HashMap::new();
    for s in &p.statements {
        match s {
            Statement::Assign { target, value } => {
                let v = eval_expr(value, &env);
                env.insert(target, v);
            }
            Statement::Return(e) => return eval_expr(e, &env),
        }
    }
    unreachable!("parse_dsl guarantees a trailing return")
}

fn eval_expr(e: &Expr, env: &std::collections::HashMap<&str, Formula>) -> Formula {
    match e {
        Expr::Var(v) => env[v.as_str()].clone(),
        Expr::Str(s) => Formula::prop(s),
        Expr::Call { func, args } => {
            let a = |i: usize| eval_expr(&args[i], env);
            match func {
                Builtin::Ap => a(0),
                Builtin::And => Formula::and(a(0), a(1)),
                Builtin::Or => Formula::or(a(0), a(1)),
                Builtin::Not => Formula::not(a(0)),
                Builtin::Until => Formula::until(a(0), a(1)),
                Builtin::Eventually => Formula::eventually(a(0)),
                Builtin::Always => Formula::always(a(0)),
                Builtin::Imply => Formula::imply(a(0), a(1)),
                Builtin::Next => Formula::next(a(0)),
            }
        }
    }
}

/// Render a formula back into the program form accepted by [`parse_dsl`].
/// `None` when it contains a constant, which the language cannot express.
pub fn to_dsl(f: &Formula, name: &str) -> Option<String> {
    fn go(f: &Formula, lines: &mut Vec<String>) -> Option<String> {
        let call = match f {
            Formula::True | Formula::False => return None,
            Formula::Prop(p) => format!("ap(\"{p}\")"),
            Formula::Not(a) => format!("ltl_not({})", go(a, lines)?),
            Formula::Next(a) => format!("ltl_next({})", go(a, lines)?),
            Formula::WeakNext(a) => format!("ltl_not(ltl_next(ltl_not({})))", go(a, lines)?),
            Formula::Eventually(a) => format!("ltl_eventually({})", go(a, lines)?),
            Formula::Always(a) => format!("ltl_always({})", go(a, lines)?),
            Formula::And(a, b) => format!("ltl_and({}, {})", go(a, lines)?, go(b, lines)?),
            Formula::Or(a, b) => format!("ltl_or({}, {})", go(a, lines)?, go(b, lines)?),
            Formula::Imply(a, b) => format!("ltl_imply({}, {})", go(a, lines)?, go(b, lines)?),
            Formula::Until(a, b) => format!("ltl_until({}, {})", go(a, lines)?, go(b, lines)?),
        };
        let var = format!("c{}", lines.len() + 1);
        lines.push(format!("    {var} = {call}"));
        Some(var)
    }
    let mut lines = Vec::new();
    let last = go(f, &mut lines)?;
    Some(format!("def {name}():\n{}\n    return {last}\n", lines.join("\n")))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_1: &str = r#"def example_1():
    """
    Reach object_2 and object_1
    """
    # explanation of the instruction:
    # object_1 and object_2 are both reached at some point in the future, but no specific order is mentioned explicitly or implicitly.
    # create atomic propositions for objects
    reach_obj_2 = ap("object_2")  # reach(object_2)
    reach_obj_1 = ap("object_1")  # reach(object_1)
    # describe the constraints in the instruction
    c1 = ltl_eventually(reach_obj_2) # Reach object_2...
    c2 = ltl_eventually(reach_obj_1) # Reach object_1...
    c3 = ltl_and(c1, c2)  # Reach object_2 and object_1
    return c3
"#;

    #[test]
    fn example_1_parses_and_evaluates() {
        let p = parse_dsl(EXAMPLE_1).unwrap();
        assert_eq!(p.name, "example_1");
        assert_eq!(p.docstring.as_deref(), Some("Reach object_2 and object_1"));
        assert_eq!(p.statements.len(), 6);
        assert_eq!(p.statements.iter().filter(|s| matches!(s, Statement::Assign { .. })).count(), 5);
        assert_eq!(p.return_expr(), &Expr::Var("c3".into()));
        assert!(p.comments.len() >= 5);
        let f = eval_dsl(&p);
        assert_eq!(
            f,
            Formula::and(
                Formula::eventually(Formula::prop("object_2")),
                Formula::eventually(Formula::prop("object_1"))
            )
        );
        assert_eq!(f.to_prefix(), "& F object_2 F object_1");
    }

    #[test]
    fn minimal_program() {
        let p = parse_dsl("def q():\n  return ap(\"object_1\")").unwrap();
        assert_eq!(eval_dsl(&p), Formula::prop("object_1"));
        assert!(p.docstring.is_none());
    }

    #[test]
    fn nested_calls() {
        let p = parse_dsl("def q():\n    return ltl_eventually(ltl_and(ap(\"a\"), ap(\"b\")))\n").unwrap();
        assert_eq!(
            eval_dsl(&p),
            Formula::eventually(Formula::and(Formula::prop("a"), Formula::prop("b")))
        );
    }

    #[test]
    fn fences_imports_and_multiline_calls() {
        let code = "Here you go:\n```python\nfrom ltl_operators import ap\ndef q():\n    x = ltl_until(\n        ltl_not(ap('b')),\n        ap('a'),\n    )\n    return x\n```\nDone.";
        let f = eval_dsl(&parse_dsl(code).unwrap());
        assert_eq!(f.to_prefix(), "U ! b a");
    }

    #[test]
    fn next_is_accepted() {
        let f = eval_dsl(&parse_dsl("def q():\n    return ltl_next(ap(\"a\"))").unwrap());
        assert_eq!(f, Formula::next(Formula::prop("a")));
    }

    #[test]
    fn errors() {
        let e = |code: &str| parse_dsl(code).unwrap_err();
        assert_eq!(
            e("def q():\n    a = ap(\"x\")\n    return ltl_and(a)"),
            DslError::ArityError {
                name: "ltl_and".into(),
                expected: 2,
                got: 1
            }
        );
        assert_eq!(
            e("def q():\n    return ltl_xor(ap(\"a\"), ap(\"b\"))"),
            DslError::UnknownFunction("ltl_xor".into())
        );
        assert_eq!(e("def q():\n    return ltl_not(c9)"), DslError::UndefinedVariable("c9".into()));
        assert_eq!(e("def q():\n    a = ap(\"x\")\n    return ap(a)"), DslError::NonStringApArgument);
        assert_eq!(e("def q():\n    a = ap(\"x\")\n"), DslError::MissingReturn);
        assert_eq!(
            e("def q():\n    return ap(\"teddy bear\")"),
            DslError::InvalidProposition("teddy bear".into())
        );
        assert!(matches!(
            e("def q():\n    return ap(\"a\") + ap(\"b\")"),
            DslError::SyntaxError { position: Position { line: 2, column: 20 }, .. }
        ));
        assert!(matches!(e("import os\nos.system('x')"), DslError::SyntaxError { .. }));
        assert!(matches!(e("def q():\n    return c\n    x = ap('a')"), DslError::UndefinedVariable(_)));
        assert!(matches!(
            e("def q():\n    x = ap('a')\n    return x\n    y = x"),
            DslError::SyntaxError { .. }
        ));
        assert!(matches!(e("def q():\n    return ltl_not(\"a\")"), DslError::SyntaxError { .. }));
        assert!(matches!(e("def q():\n    return \"a\""), DslError::InvalidProposition(_)));
        assert!(matches!(e("def q():\n    s = 'unterminated\n"), DslError::SyntaxError { .. }));
    }

    #[test]
    fn use_before_definition_is_rejected() {
        let code = "def q():\n    c1 = ltl_eventually(c2)\n    c2 = ap(\"a\")\n    return c1";
        assert_eq!(parse_dsl(code).unwrap_err(), DslError::UndefinedVariable("c2".into()));
    }

    #[test]
    fn rebinding_uses_latest_value() {
        let code = "def q():\n    c = ap('a')\n    c = ltl_eventually(c)\n    return c";
        assert_eq!(eval_dsl(&parse_dsl(code).unwrap()).to_prefix(), "F a");
    }

    #[test]
    fn to_dsl_round_trips() {
        let f = Formula::parse_prefix("& F & a F b G ! c").unwrap();
        let back = eval_dsl(&parse_dsl(&to_dsl(&f, "q").unwrap()).unwrap());
        assert_eq!(back, f);
    }

    #[test]
    fn error_messages_are_short() {
        for e in [
            DslError::NonStringApArgument,
            DslError::MissingReturn,
            DslError::UndefinedVariable("x".into()),
        ] {
            assert!(e.to_string().len() < 120);
        }
    }
}
