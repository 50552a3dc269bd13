//! Text ↔ tree conversion for the three syntax families.
//!
//! The concrete grammar is plain ASCII and LL(1):
//!
//! * modal — variables `[a-z][a-zA-Z0-9_]*` (`p<k>_<i>` spells the ranked
//!   variable directly), `T`, `F`, `~`, `&`, `|`, `->`, `[k]` / `<k>` with
//!   integer modality `k` (`[]` and `<>` default to modality 1).
//!   `~` and modalities bind tightest, then `&`, then `|`, then
//!   right-associative `->`.
//! * expr — object variables `x<i>` (other identifiers are accepted and
//!   numbered by first appearance), set variables `P<rank>_<idx>`, `#`,
//!   `T`, `F`, `&` for intersection, `|` for union, `inv<k>(E)`,
//!   `ibox<k>(E)`, `img<k>(E)`.
//! * fo — `y in E`, `x R<k> y`, `x = y`, `all y <k x . body`,
//!   `ex y <k x . body`, `forall y . body`, `exists y . body`, `T`, `F`,
//!   `~`, `&`, `|`. Quantifier bodies extend as far right as possible.
//!
//! Printing is the inverse: `parse(print(t))` is structurally `t`, and
//! `print(parse(s))` is a fixpoint of reprinting.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{FOFormula, LExpr, Label, ModalFormula, ObjVar, PropVar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SyntaxKind {
    Modal,
    Expr,
    Fo,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: expected {}, found {found}", self.expected_display())]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl SyntaxError {
    fn new(tok: &Token, expected: Vec<&'static str>) -> Self {
        SyntaxError {
            line: tok.line,
            col: tok.col,
            expected,
            found: tok.describe(),
        }
    }
}

// The error message joins the expected set; keep it stable and readable.
struct ExpectedList<'a>(&'a [&'static str]);
impl fmt::Display for ExpectedList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " or ")?;
            }
            write!(f, "{}", e)?;
        }
        Ok(())
    }
}

impl SyntaxError {
    pub fn expected_display(&self) -> String {
        ExpectedList(&self.expected).to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    /// `P<rank>_<idx>`
    SetVar(u32, u32),
    /// `R<k>` relation token (fo only)
    RelSym(u32),
    Hash,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Eq,
    Dot,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

impl Token {
    fn describe(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Int(n) => format!("integer `{}`", n),
            Tok::SetVar(r, i) => format!("set variable `P{}_{}`", r, i),
            Tok::RelSym(k) => format!("`R{}`", k),
            Tok::Hash => "`#`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let bytes = text.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: tline,
                col: tcol,
            })
        };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                push(Tok::Hash);
                i += 1;
                col += 1;
            }
            '~' => {
                push(Tok::Tilde);
                i += 1;
                col += 1;
            }
            '&' => {
                push(Tok::Amp);
                i += 1;
                col += 1;
            }
            '|' => {
                push(Tok::Pipe);
                i += 1;
                col += 1;
            }
            '=' => {
                push(Tok::Eq);
                i += 1;
                col += 1;
            }
            '.' => {
                push(Tok::Dot);
                i += 1;
                col += 1;
            }
            '(' => {
                push(Tok::LParen);
                i += 1;
                col += 1;
            }
            ')' => {
                push(Tok::RParen);
                i += 1;
                col += 1;
            }
            '[' => {
                push(Tok::LBracket);
                i += 1;
                col += 1;
            }
            ']' => {
                push(Tok::RBracket);
                i += 1;
                col += 1;
            }
            '<' => {
                push(Tok::Lt);
                i += 1;
                col += 1;
            }
            '>' => {
                push(Tok::Gt);
                i += 1;
                col += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    push(Tok::Arrow);
                    i += 2;
                    col += 2;
                } else {
                    return Err(SyntaxError {
                        line,
                        col,
                        expected: vec!["`->`"],
                        found: "`-`".into(),
                    });
                }
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: u32 = text[start..i].parse().map_err(|_| SyntaxError {
                    line,
                    col,
                    expected: vec!["an integer"],
                    found: text[start..i].to_string(),
                })?;
                col += (i - start) as u32;
                push(Tok::Int(n));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &text[start..i];
                col += (i - start) as u32;
                if let Some(tok) = classify_word(word) {
                    push(tok);
                } else {
                    return Err(SyntaxError {
                        line,
                        col: tcol,
                        expected: vec!["an identifier"],
                        found: format!("`{}`", word),
                    });
                }
            }
            other => {
                return Err(SyntaxError {
                    line,
                    col,
                    expected: vec!["a token"],
                    found: format!("`{}`", other),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn classify_word(word: &str) -> Option<Tok> {
    if let Some(rest) = word.strip_prefix('P') {
        if let Some((r, i)) = rest.split_once('_') {
            if let (Ok(r), Ok(i)) = (r.parse(), i.parse()) {
                return Some(Tok::SetVar(r, i));
            }
        }
    }
    if let Some(rest) = word.strip_prefix('R') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            return Some(Tok::RelSym(rest.parse().ok()?));
        }
    }
    Some(Tok::Ident(word.to_string()))
}

/// Spellings `x<i>` (object) and `p<k>_<i>` (ranked propositional) are
/// canonical: they parse back to exactly that variable. Every other
/// identifier is a surface name and receives the next unclaimed index.
fn canonical_obj(name: &str) -> Option<u32> {
    let rest = name.strip_prefix('x')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

fn canonical_prop(name: &str) -> Option<(u32, u32)> {
    let rest = name.strip_prefix('p')?;
    let (r, i) = rest.split_once('_')?;
    if r.is_empty() || i.is_empty() {
        return None;
    }
    if !r.bytes().all(|b| b.is_ascii_digit()) || !i.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((r.parse().ok()?, i.parse().ok()?))
}

/// Name resolution shared by a whole parse: surface names are interned and
/// indexed by first appearance, skipping indices claimed by canonical
/// spellings anywhere in the input.
struct Scope {
    obj: BTreeMap<String, ObjVar>,
    obj_claimed: Vec<u32>,
    obj_next: u32,
    prop: BTreeMap<String, PropVar>,
    prop_claimed: Vec<(u32, u32)>,
    prop_next: u32,
}

impl Scope {
    fn new(tokens: &[Token]) -> Self {
        let mut obj_claimed = Vec::new();
        let mut prop_claimed = Vec::new();
        for t in tokens {
            if let Tok::Ident(name) = &t.tok {
                if let Some(i) = canonical_obj(name) {
                    obj_claimed.push(i);
                }
                if let Some((r, i)) = canonical_prop(name) {
                    prop_claimed.push((r, i));
                }
            }
        }
        Scope {
            obj: BTreeMap::new(),
            obj_claimed,
            obj_next: 0,
            prop: BTreeMap::new(),
            prop_claimed,
            prop_next: 0,
        }
    }

    fn obj_var(&mut self, name: &str) -> ObjVar {
        if let Some(i) = canonical_obj(name) {
            return ObjVar(i);
        }
        if let Some(v) = self.obj.get(name) {
            return *v;
        }
        while self.obj_claimed.contains(&self.obj_next) {
            self.obj_next += 1;
        }
        let v = ObjVar(self.obj_next);
        self.obj_next += 1;
        self.obj.insert(name.to_string(), v);
        v
    }

    fn prop_var(&mut self, name: &str) -> PropVar {
        if let Some((r, i)) = canonical_prop(name) {
            return PropVar::new(r, i);
        }
        if let Some(v) = self.prop.get(name) {
            return v.clone();
        }
        while self.prop_claimed.contains(&(0, self.prop_next)) {
            self.prop_next += 1;
        }
        let v = PropVar::named(0, self.prop_next, name);
        self.prop_next += 1;
        self.prop.insert(name.to_string(), v.clone());
        v
    }
}

// Recursive descent; guard the nesting so adversarial input fails with a
// parse error instead of exhausting the stack.
const MAX_NESTING: u32 = 2_000;

struct P {
    tokens: Vec<Token>,
    pos: usize,
    scope: Scope,
    depth: u32,
}

impl P {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        let tokens = lex(text)?;
        let scope = Scope::new(&tokens);
        Ok(P {
            tokens,
            pos: 0,
            scope,
            depth: 0,
        })
    }

    fn descend(&mut self) -> Result<(), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            let here = self.here();
            return Err(SyntaxError {
                line: here.line,
                col: here.col,
                expected: vec!["shallower nesting"],
                found: format!("nesting deeper than {}", MAX_NESTING),
            });
        }
        Ok(())
    }

    fn ascend(&mut self) {
        self.depth -= 1;
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(SyntaxError::new(self.here(), vec![what]))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(SyntaxError::new(self.here(), vec!["end of input"]))
        }
    }

    fn int(&mut self, what: &'static str) -> Result<u32, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(SyntaxError::new(self.here(), vec![what])),
        }
    }

    // ---- modal formulas ----

    fn modal(&mut self) -> Result<ModalFormula, SyntaxError> {
        let lhs = self.modal_or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.modal()?;
            Ok(ModalFormula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn modal_or(&mut self) -> Result<ModalFormula, SyntaxError> {
        let mut f = self.modal_and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            f = ModalFormula::or(f, self.modal_and()?);
        }
        Ok(f)
    }

    fn modal_and(&mut self) -> Result<ModalFormula, SyntaxError> {
        let mut f = self.modal_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            f = ModalFormula::and(f, self.modal_unary()?);
        }
        Ok(f)
    }

    fn modal_unary(&mut self) -> Result<ModalFormula, SyntaxError> {
        self.descend()?;
        let result = self.modal_unary_inner();
        self.ascend();
        result
    }

    fn modal_unary_inner(&mut self) -> Result<ModalFormula, SyntaxError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(ModalFormula::not(self.modal_unary()?))
            }
            Tok::LBracket => {
                self.bump();
                let k = if *self.peek() == Tok::RBracket {
                    1
                } else {
                    self.int("a modality index")?
                };
                self.expect(Tok::RBracket, "`]`")?;
                Ok(ModalFormula::boxed(Label(k), self.modal_unary()?))
            }
            Tok::Lt => {
                self.bump();
                let k = if *self.peek() == Tok::Gt {
                    1
                } else {
                    self.int("a modality index")?
                };
                self.expect(Tok::Gt, "`>`")?;
                Ok(ModalFormula::dia(Label(k), self.modal_unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.modal()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                if name == "T" {
                    self.bump();
                    Ok(ModalFormula::Top)
                } else if name == "F" {
                    self.bump();
                    Ok(ModalFormula::Bot)
                } else if name.starts_with(|c: char| c.is_ascii_lowercase()) {
                    self.bump();
                    Ok(ModalFormula::Var(self.scope.prop_var(&name)))
                } else {
                    Err(SyntaxError::new(
                        self.here(),
                        vec!["a variable", "`T`", "`F`"],
                    ))
                }
            }
            _ => Err(SyntaxError::new(
                self.here(),
                vec!["a variable", "`T`", "`F`", "`~`", "`[`", "`<`", "`(`"],
            )),
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<LExpr, SyntaxError> {
        let mut e = self.expr_cap()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            e = LExpr::cup(e, self.expr_cap()?);
        }
        Ok(e)
    }

    fn expr_cap(&mut self) -> Result<LExpr, SyntaxError> {
        let mut e = self.expr_atom()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            e = LExpr::cap(e, self.expr_atom()?);
        }
        Ok(e)
    }

    fn expr_atom(&mut self) -> Result<LExpr, SyntaxError> {
        self.descend()?;
        let result = self.expr_atom_inner();
        self.ascend();
        result
    }

    fn expr_atom_inner(&mut self) -> Result<LExpr, SyntaxError> {
        match self.peek().clone() {
            Tok::Hash => {
                self.bump();
                Ok(LExpr::Hole)
            }
            Tok::SetVar(r, i) => {
                self.bump();
                Ok(LExpr::SetVar(PropVar::new(r, i)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "T" {
                    self.bump();
                    return Ok(LExpr::Top);
                }
                if name == "F" {
                    self.bump();
                    return Ok(LExpr::Bot);
                }
                for (prefix, ctor) in [
                    ("inv", LExpr::Inv as fn(Label, Box<LExpr>) -> LExpr),
                    ("ibox", LExpr::IBox as fn(Label, Box<LExpr>) -> LExpr),
                    ("img", LExpr::Img as fn(Label, Box<LExpr>) -> LExpr),
                ] {
                    if let Some(rest) = name.strip_prefix(prefix) {
                        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                            let k: u32 = rest.parse().unwrap();
                            self.bump();
                            self.expect(Tok::LParen, "`(`")?;
                            let inner = self.expr()?;
                            self.expect(Tok::RParen, "`)`")?;
                            return Ok(ctor(Label(k), Box::new(inner)));
                        }
                    }
                }
                self.bump();
                Ok(LExpr::ObjVar(self.scope.obj_var(&name)))
            }
            _ => Err(SyntaxError::new(
                self.here(),
                vec![
                    "an object variable",
                    "a set variable",
                    "`#`",
                    "`T`",
                    "`F`",
                    "`inv<k>(`",
                    "`ibox<k>(`",
                    "`img<k>(`",
                    "`(`",
                ],
            )),
        }
    }

    // ---- first-order formulas ----

    fn fo(&mut self) -> Result<FOFormula, SyntaxError> {
        let mut f = self.fo_and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            f = FOFormula::or(f, self.fo_and()?);
        }
        Ok(f)
    }

    fn fo_and(&mut self) -> Result<FOFormula, SyntaxError> {
        let mut f = self.fo_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            f = FOFormula::and(f, self.fo_unary()?);
        }
        Ok(f)
    }

    fn fo_unary(&mut self) -> Result<FOFormula, SyntaxError> {
        self.descend()?;
        let result = self.fo_unary_inner();
        self.ascend();
        result
    }

    fn fo_unary_inner(&mut self) -> Result<FOFormula, SyntaxError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(FOFormula::not(self.fo_unary()?))
            }
            Tok::LParen => {
                self.bump();
                let f = self.fo()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) if name == "all" || name == "ex" => {
                self.bump();
                let y = self.fo_objvar()?;
                self.expect(Tok::Lt, "`<`")?;
                let k = self.int("a modality index")?;
                let x = self.fo_objvar()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.fo()?;
                Ok(if name == "all" {
                    FOFormula::rforall(y, Label(k), x, body)
                } else {
                    FOFormula::rexists(y, Label(k), x, body)
                })
            }
            Tok::Ident(name) if name == "forall" || name == "exists" => {
                self.bump();
                let y = self.fo_objvar()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.fo()?;
                Ok(if name == "forall" {
                    FOFormula::forall(y, body)
                } else {
                    FOFormula::exists(y, body)
                })
            }
            Tok::Ident(name) if name == "T" => {
                self.bump();
                Ok(FOFormula::Top)
            }
            Tok::Ident(name) if name == "F" => {
                self.bump();
                Ok(FOFormula::Bot)
            }
            Tok::Ident(_) => {
                let subject = self.fo_objvar()?;
                match self.peek().clone() {
                    Tok::Ident(word) if word == "in" => {
                        self.bump();
                        // Atom-level expression: a compound expression after
                        // `in` must be parenthesized, so the formula-level
                        // `&`/`|` stay unambiguous.
                        let e = self.expr_atom()?;
                        Ok(FOFormula::Member(subject, e))
                    }
                    Tok::RelSym(k) => {
                        self.bump();
                        let other = self.fo_objvar()?;
                        Ok(FOFormula::Rel(Label(k), subject, other))
                    }
                    Tok::Eq => {
                        self.bump();
                        let other = self.fo_objvar()?;
                        Ok(FOFormula::Eq(subject, other))
                    }
                    _ => Err(SyntaxError::new(
                        self.here(),
                        vec!["`in`", "`R<k>`", "`=`"],
                    )),
                }
            }
            _ => Err(SyntaxError::new(
                self.here(),
                vec![
                    "an atom",
                    "`all`",
                    "`ex`",
                    "`forall`",
                    "`exists`",
                    "`~`",
                    "`(`",
                    "`T`",
                    "`F`",
                ],
            )),
        }
    }

    fn fo_objvar(&mut self) -> Result<ObjVar, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(name)
                if !matches!(
                    name.as_str(),
                    "in" | "all" | "ex" | "forall" | "exists" | "T" | "F"
                ) =>
            {
                self.bump();
                Ok(self.scope.obj_var(&name))
            }
            _ => Err(SyntaxError::new(self.here(), vec!["an object variable"])),
        }
    }
}

pub fn parse_modal(text: &str) -> Result<ModalFormula, SyntaxError> {
    let mut p = P::new(text)?;
    let f = p.modal()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parse several modal formulas against one shared symbol table, so a name
/// denotes the same variable across the whole set.
pub fn parse_modal_set(texts: &[&str]) -> Result<Vec<ModalFormula>, SyntaxError> {
    let mut streams = Vec::with_capacity(texts.len());
    let mut all_tokens = Vec::new();
    for text in texts {
        let tokens = lex(text)?;
        all_tokens.extend(tokens.iter().cloned());
        streams.push(tokens);
    }
    let mut scope = Scope::new(&all_tokens);
    let mut out = Vec::with_capacity(texts.len());
    for tokens in streams {
        let mut p = P {
            tokens,
            pos: 0,
            scope,
            depth: 0,
        };
        let f = p.modal()?;
        p.expect_eof()?;
        scope = p.scope;
        out.push(f);
    }
    Ok(out)
}

pub fn parse_expr(text: &str) -> Result<LExpr, SyntaxError> {
    let mut p = P::new(text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_fo(text: &str) -> Result<FOFormula, SyntaxError> {
    let mut p = P::new(text)?;
    let f = p.fo()?;
    p.expect_eof()?;
    Ok(f)
}

// ---- printing ----

// Precedence levels; higher binds tighter.
const PREC_IMPLIES: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn modal_prec(f: &ModalFormula) -> u8 {
    match f {
        ModalFormula::Implies(_, _) => PREC_IMPLIES,
        ModalFormula::Or(_, _) => PREC_OR,
        ModalFormula::And(_, _) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn fmt_modal(f: &ModalFormula, min: u8, out: &mut String) {
    let prec = modal_prec(f);
    let parens = prec < min;
    if parens {
        out.push('(');
    }
    match f {
        ModalFormula::Var(p) => out.push_str(&p.to_string()),
        ModalFormula::Top => out.push('T'),
        ModalFormula::Bot => out.push('F'),
        ModalFormula::Not(a) => {
            out.push('~');
            fmt_modal(a, PREC_UNARY, out);
        }
        ModalFormula::Box(l, a) => {
            out.push('[');
            out.push_str(&l.to_string());
            out.push(']');
            fmt_modal(a, PREC_UNARY, out);
        }
        ModalFormula::Dia(l, a) => {
            out.push('<');
            out.push_str(&l.to_string());
            out.push('>');
            fmt_modal(a, PREC_UNARY, out);
        }
        ModalFormula::And(l, r) => {
            fmt_modal(l, PREC_AND, out);
            out.push_str(" & ");
            fmt_modal(r, PREC_AND + 1, out);
        }
        ModalFormula::Or(l, r) => {
            fmt_modal(l, PREC_OR, out);
            out.push_str(" | ");
            fmt_modal(r, PREC_OR + 1, out);
        }
        ModalFormula::Implies(l, r) => {
            fmt_modal(l, PREC_IMPLIES + 1, out);
            out.push_str(" -> ");
            fmt_modal(r, PREC_IMPLIES, out);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for ModalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_modal(self, 0, &mut s);
        f.write_str(&s)
    }
}

fn expr_prec(e: &LExpr) -> u8 {
    match e {
        LExpr::Cup(_, _) => PREC_OR,
        LExpr::Cap(_, _) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn fmt_expr(e: &LExpr, min: u8, out: &mut String) {
    let prec = expr_prec(e);
    let parens = prec < min;
    if parens {
        out.push('(');
    }
    match e {
        LExpr::ObjVar(x) => out.push_str(&x.to_string()),
        LExpr::SetVar(p) => out.push_str(&format!("P{}_{}", p.rank, p.index)),
        LExpr::Hole => out.push('#'),
        LExpr::Top => out.push('T'),
        LExpr::Bot => out.push('F'),
        LExpr::Cap(l, r) => {
            fmt_expr(l, PREC_AND, out);
            out.push_str(" & ");
            fmt_expr(r, PREC_AND + 1, out);
        }
        LExpr::Cup(l, r) => {
            fmt_expr(l, PREC_OR, out);
            out.push_str(" | ");
            fmt_expr(r, PREC_OR + 1, out);
        }
        LExpr::Inv(l, a) => {
            out.push_str(&format!("inv{}(", l));
            fmt_expr(a, 0, out);
            out.push(')');
        }
        LExpr::IBox(l, a) => {
            out.push_str(&format!("ibox{}(", l));
            fmt_expr(a, 0, out);
            out.push(')');
        }
        LExpr::Img(l, a) => {
            out.push_str(&format!("img{}(", l));
            fmt_expr(a, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for LExpr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_expr(self, 0, &mut s);
        out.write_str(&s)
    }
}

fn fo_prec(f: &FOFormula) -> u8 {
    match f {
        FOFormula::RForall(_, _, _, _)
        | FOFormula::RExists(_, _, _, _)
        | FOFormula::Forall(_, _)
        | FOFormula::Exists(_, _) => PREC_IMPLIES,
        FOFormula::Or(_, _) => PREC_OR,
        FOFormula::And(_, _) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn fmt_fo(f: &FOFormula, min: u8, out: &mut String) {
    let prec = fo_prec(f);
    let parens = prec < min;
    if parens {
        out.push('(');
    }
    match f {
        FOFormula::Member(s, e) => {
            out.push_str(&s.to_string());
            out.push_str(" in ");
            fmt_expr(e, PREC_UNARY, out);
        }
        FOFormula::Rel(l, a, b) => {
            out.push_str(&format!("{} R{} {}", a, l, b));
        }
        FOFormula::Eq(a, b) => {
            out.push_str(&format!("{} = {}", a, b));
        }
        FOFormula::Top => out.push('T'),
        FOFormula::Bot => out.push('F'),
        FOFormula::Not(a) => {
            out.push('~');
            // Parenthesize atoms with interior spaces for readability.
            if matches!(
                **a,
                FOFormula::Member(_, _) | FOFormula::Rel(_, _, _) | FOFormula::Eq(_, _)
            ) {
                out.push('(');
                fmt_fo(a, 0, out);
                out.push(')');
            } else {
                fmt_fo(a, PREC_UNARY, out);
            }
        }
        FOFormula::And(l, r) => {
            fmt_fo(l, PREC_AND, out);
            out.push_str(" & ");
            fmt_fo(r, PREC_AND + 1, out);
        }
        FOFormula::Or(l, r) => {
            fmt_fo(l, PREC_OR, out);
            out.push_str(" | ");
            fmt_fo(r, PREC_OR + 1, out);
        }
        FOFormula::RForall(y, l, x, b) => {
            out.push_str(&format!("all {} <{} {} . ", y, l, x));
            fmt_fo(b, 0, out);
        }
        FOFormula::RExists(y, l, x, b) => {
            out.push_str(&format!("ex {} <{} {} . ", y, l, x));
            fmt_fo(b, 0, out);
        }
        FOFormula::Forall(y, b) => {
            out.push_str(&format!("forall {} . ", y));
            fmt_fo(b, 0, out);
        }
        FOFormula::Exists(y, b) => {
            out.push_str(&format!("exists {} . ", y));
            fmt_fo(b, 0, out);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for FOFormula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_fo(self, 0, &mut s);
        out.write_str(&s)
    }
}

/// Parse result for [`parse`], covering all three syntax families.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parsed {
    Modal(ModalFormula),
    Expr(LExpr),
    Fo(FOFormula),
}

impl fmt::Display for Parsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parsed::Modal(m) => m.fmt(f),
            Parsed::Expr(e) => e.fmt(f),
            Parsed::Fo(a) => a.fmt(f),
        }
    }
}

pub fn parse(kind: SyntaxKind, text: &str) -> Result<Parsed, SyntaxError> {
    Ok(match kind {
        SyntaxKind::Modal => Parsed::Modal(parse_modal(text)?),
        SyntaxKind::Expr => Parsed::Expr(parse_expr(text)?),
        SyntaxKind::Fo => Parsed::Fo(parse_fo(text)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::free_vars;

    #[test]
    fn parses_ns() {
        let f = parse_modal("p & [1](<1>p -> [3]r) -> <2>(<2>p & <3>r)").unwrap();
        let p = ModalFormula::Var(PropVar::named(0, 0, "p"));
        let r = ModalFormula::Var(PropVar::named(0, 1, "r"));
        let expected = ModalFormula::implies(
            ModalFormula::and(
                p.clone(),
                ModalFormula::boxed(
                    Label(1),
                    ModalFormula::implies(
                        ModalFormula::dia(Label(1), p.clone()),
                        ModalFormula::boxed(Label(3), r.clone()),
                    ),
                ),
            ),
            ModalFormula::dia(Label(2), ModalFormula::and(
                ModalFormula::dia(Label(2), p),
                ModalFormula::dia(Label(3), r),
            )),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_safe_expression_example() {
        let e = parse_expr("img1(img1(x0) & inv1(img1(x0)))").unwrap();
        let r_x = LExpr::img(Label(1), LExpr::obj(0));
        let expected = LExpr::img(
            Label(1),
            LExpr::cap(r_x.clone(), LExpr::inv(Label(1), r_x)),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_restricted_forall() {
        let f = parse_fo("all y <1 x0 . y in x0").unwrap();
        assert_eq!(
            f,
            FOFormula::rforall(
                ObjVar(1),
                Label(1),
                ObjVar(0),
                FOFormula::Member(ObjVar(1), LExpr::obj(0))
            )
        );
        assert_eq!(free_vars(&f), [ObjVar(0)].into());
    }

    #[test]
    fn print_golden() {
        assert_eq!(ModalFormula::Top.to_string(), "T");
        let e = parse_expr("img3(inv2(P0_0) & img1(#))").unwrap();
        assert_eq!(e.to_string(), "img3(inv2(P0_0) & img1(#))");
    }

    #[test]
    fn modal_precedence() {
        // -> right-assoc, ~/modalities tightest, & over |.
        let f = parse_modal("a -> b -> c").unwrap();
        assert_eq!(f.to_string(), "a -> b -> c");
        match &f {
            ModalFormula::Implies(_, r) => {
                assert!(matches!(**r, ModalFormula::Implies(_, _)))
            }
            _ => panic!("shape"),
        }
        let g = parse_modal("~a & b | c & [2]d").unwrap();
        assert_eq!(g.to_string(), "~a & b | c & [2]d");
        assert!(matches!(g, ModalFormula::Or(_, _)));
        let h = parse_modal("(a | b) & c").unwrap();
        assert_eq!(h.to_string(), "(a | b) & c");
    }

    #[test]
    fn default_modality_brackets() {
        assert_eq!(
            parse_modal("[]p").unwrap(),
            parse_modal("[1]p").unwrap()
        );
        assert_eq!(
            parse_modal("<>p").unwrap(),
            parse_modal("<1>p").unwrap()
        );
    }

    #[test]
    fn ranked_variable_spelling_is_canonical() {
        let f = parse_modal("p1_0 & q").unwrap();
        match f {
            ModalFormula::And(l, r) => {
                assert_eq!(*l, ModalFormula::var(1, 0));
                // q avoids nothing at rank 0, gets index 0.
                assert_eq!(*r, ModalFormula::Var(PropVar::named(0, 0, "q")));
            }
            _ => panic!("shape"),
        }
        // Surface names skip indices claimed canonically at rank 0.
        let g = parse_modal("q & p0_0").unwrap();
        match g {
            ModalFormula::And(l, r) => {
                assert_eq!(*l, ModalFormula::Var(PropVar::named(0, 1, "q")));
                assert_eq!(*r, ModalFormula::var(0, 0));
            }
            _ => panic!("shape"),
        }
    }

    #[test]
    fn surface_object_names_allocate_fresh_indices() {
        let f = parse_fo("ex y <2 x0 . y R3 z").unwrap();
        // claimed: 0; y -> 1, z -> 2.
        assert_eq!(
            f,
            FOFormula::rexists(
                ObjVar(1),
                Label(2),
                ObjVar(0),
                FOFormula::Rel(Label(3), ObjVar(1), ObjVar(2))
            )
        );
    }

    #[test]
    fn roundtrip_on_parsed_trees() {
        let samples_modal = [
            "p & [1](<1>p -> [3]r) -> <2>(<2>p & <3>r)",
            "p & [](<>p -> []q) -> <>[][]q",
            "~(p | q) -> [2]~p",
            "T -> F | p0_0 & p1_0",
        ];
        for s in samples_modal {
            let t = parse_modal(s).unwrap();
            assert_eq!(parse_modal(&t.to_string()).unwrap(), t, "{}", s);
            let printed = t.to_string();
            assert_eq!(parse_modal(&printed).unwrap().to_string(), printed);
        }
        let samples_expr = [
            "img1(img1(x0) & inv1(img1(x0)))",
            "img3(inv2(P0_0) & img1(#))",
            "(# & T) | ibox2(x1 | F)",
        ];
        for s in samples_expr {
            let t = parse_expr(s).unwrap();
            assert_eq!(parse_expr(&t.to_string()).unwrap(), t, "{}", s);
        }
        let samples_fo = [
            "all y <1 x0 . y in x0",
            "ex y <1 x0 . (all z <1 y . all w <1 z . w in img1(inv1(x0) & img1(x0)))",
            "forall y . (y = x0 | ~(y R2 x0))",
            "x0 in (T & F) | x0 in F",
        ];
        for s in samples_fo {
            let t = parse_fo(s).unwrap();
            assert_eq!(parse_fo(&t.to_string()).unwrap(), t, "{}", s);
        }
    }

    #[test]
    fn error_carries_position_and_expectations() {
        let err = parse_modal("p &").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 4);
        assert!(!err.expected.is_empty());
        let err = parse_fo("all y 1 x . y in x").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.expected.contains(&"`<`"));
    }

    #[test]
    fn pathological_nesting_is_a_parse_error_not_a_crash() {
        let deep = format!("{}p{}", "~".repeat(60_000), "");
        let err = parse_modal(&deep).unwrap_err();
        assert!(err.found.contains("nesting"), "{}", err);
        let deep_expr = format!("{}x0{}", "img1(".repeat(60_000), ")".repeat(60_000));
        assert!(parse_expr(&deep_expr).is_err());
        // Inputs at reasonable depth still parse.
        let ok = format!("{}p{}", "~".repeat(500), "");
        assert!(parse_modal(&ok).is_ok());
    }
}
