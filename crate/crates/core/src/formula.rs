//! Model formulas: `y ~ a + b + a:b`, star products, aliases and an
//! explicitly marked residual term.
//!
//! ```text
//! formula := IDENT "~" item ("+" item)*
//! item    := "1" | alias | error | product
//! alias   := "alias" "(" colon "=" colon ")"
//! error   := "error" "(" colon ")"
//! product := colon ("*" colon)*
//! colon   := IDENT (":" IDENT)*
//! IDENT   := [A-Za-z_][A-Za-z0-9_.]*
//! ```
//!
//! `a*b*c` expands to every nonempty subset of its operands, smallest
//! subsets first and lexicographic (by operand position) within a size.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("empty formula")]
    EmptyFormula,
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax { position: usize, expected: &'static str, found: String },
    #[error("duplicate term `{0}`")]
    DuplicateTerm(String),
    #[error("factor `{0}` repeated within one term")]
    RepeatedFactor(String),
    #[error("response `{0}` used as a factor")]
    ResponseInTerms(String),
    #[error("more than one term marked as error")]
    MultipleResiduals,
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
}

/// One source of variation: an interaction of one or more factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub factors: Vec<String>,
    pub explicit_residual: bool,
}

impl Term {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = S>) -> Self {
        Self { factors: factors.into_iter().map(Into::into).collect(), explicit_residual: false }
    }

    /// Factor names in sorted order: the identity of the term as a set.
    pub fn key(&self) -> Vec<&str> {
        let mut k: Vec<&str> = self.factors.iter().map(String::as_str).collect();
        k.sort_unstable();
        k
    }

    pub fn label(&self) -> String {
        self.factors.join(":")
    }
}

/// `alias(coarse = fine)`: the coarse term's cells lie inside the fine term's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasDecl {
    pub coarse: Vec<String>,
    pub fine: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub response: String,
    pub terms: Vec<Term>,
    pub aliases: Vec<AliasDecl>,
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        let mut items: Vec<String> = self
            .terms
            .iter()
            .map(|t| if t.explicit_residual { format!("error({})", t.label()) } else { t.label() })
            .collect();
        if items.is_empty() {
            items.push("1".to_string());
        }
        items.extend(
            self.aliases
                .iter()
                .map(|a| format!("alias({} = {})", a.coarse.join(":"), a.fine.join(":"))),
        );
        f.write_str(&items.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    One,
    Tilde,
    Plus,
    Colon,
    Star,
    LParen,
    RParen,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::One => "`1`".to_string(),
            Tok::Tilde => "`~`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Eq => "`=`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match c {
            '~' => Some(Tok::Tilde),
            '+' => Some(Tok::Plus),
            ':' => Some(Tok::Colon),
            '*' => Some(Tok::Star),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            out.push((pos, tok));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                    ident.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Ident(ident)));
        } else if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_digit() {
                    digits.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            if digits != "1" {
                return Err(FormulaError::Syntax {
                    position: pos,
                    expected: "factor name or `1`",
                    found: format!("`{digits}`"),
                });
            }
            out.push((pos, Tok::One));
        } else {
            return Err(FormulaError::Syntax {
                position: pos,
                expected: "factor name or operator",
                found: format!("`{c}`"),
            });
        }
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

enum Item {
    Intercept,
    Alias(AliasDecl),
    Error(Vec<String>),
    Product(Vec<Vec<String>>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &'static str) -> Result<T, FormulaError> {
        let (position, tok) = &self.toks[self.at];
        Err(FormulaError::Syntax { position: *position, expected, found: tok.describe() })
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(expected)
        }
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("factor name"),
        }
    }

    fn colon(&mut self) -> Result<Vec<String>, FormulaError> {
        let mut factors = vec![self.ident()?];
        while *self.peek() == Tok::Colon {
            self.bump();
            let f = self.ident()?;
            if factors.contains(&f) {
                return Err(FormulaError::RepeatedFactor(f));
            }
            factors.push(f);
        }
        Ok(factors)
    }

    fn item(&mut self) -> Result<Item, FormulaError> {
        match (self.peek().clone(), self.peek2().clone()) {
            (Tok::One, _) => {
                self.bump();
                Ok(Item::Intercept)
            }
            (Tok::Ident(kw), Tok::LParen) if kw == "alias" => {
                self.bump();
                self.bump();
                let coarse = self.colon()?;
                self.expect(Tok::Eq, "`=`")?;
                let fine = self.colon()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Item::Alias(AliasDecl { coarse, fine }))
            }
            (Tok::Ident(kw), Tok::LParen) if kw == "error" => {
                self.bump();
                self.bump();
                let t = self.colon()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Item::Error(t))
            }
            (Tok::Ident(_), _) => {
                let mut ops = vec![self.colon()?];
                while *self.peek() == Tok::Star {
                    self.bump();
                    ops.push(self.colon()?);
                }
                Ok(Item::Product(ops))
            }
            _ => self.fail("term, `1`, `alias(...)` or `error(...)`"),
        }
    }
}

/// Nonempty subsets of `0..k`, by size then lexicographically.
fn subsets_by_size(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            // advance to the next combination in lexicographic order
            let mut i = size;
            while i > 0 && idx[i - 1] == k - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

fn expand_product(ops: &[Vec<String>]) -> Vec<Term> {
    subsets_by_size(ops.len())
        .into_iter()
        .map(|subset| {
            let mut factors: Vec<String> = Vec::new();
            for &i in &subset {
                for f in &ops[i] {
                    if !factors.contains(f) {
                        factors.push(f.clone());
                    }
                }
            }
            Term { factors, explicit_residual: false }
        })
        .collect()
}

/// Parse formula text into a [`ModelSpec`] with star products expanded.
pub fn parse_model(text: &str) -> Result<ModelSpec, FormulaError> {
    if text.trim().is_empty() {
        return Err(FormulaError::EmptyFormula);
    }
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let response = p.ident()?;
    p.expect(Tok::Tilde, "`~`")?;

    let mut terms: Vec<Term> = Vec::new();
    let mut aliases = Vec::new();
    let push = |terms: &mut Vec<Term>, t: Term, explicit: bool| -> Result<(), FormulaError> {
        if t.factors.contains(&response) {
            return Err(FormulaError::ResponseInTerms(response.clone()));
        }
        if terms.iter().any(|u| u.key() == t.key()) {
            return if explicit { Err(FormulaError::DuplicateTerm(t.label())) } else { Ok(()) };
        }
        terms.push(t);
        Ok(())
    };
    loop {
        match p.item()? {
            Item::Intercept => {}
            Item::Alias(a) => aliases.push(a),
            Item::Error(factors) => {
                if terms.iter().any(|t| t.explicit_residual) {
                    return Err(FormulaError::MultipleResiduals);
                }
                push(&mut terms, Term { factors, explicit_residual: true }, true)?;
            }
            Item::Product(ops) if ops.len() == 1 => {
                let t = Term { factors: ops.into_iter().next().unwrap(), explicit_residual: false };
                push(&mut terms, t, true)?;
            }
            Item::Product(ops) => {
                for t in expand_product(&ops) {
                    push(&mut terms, t, false)?;
                }
            }
        }
        match p.peek() {
            Tok::Plus => {
                p.bump();
            }
            Tok::Eof => break,
            _ => return p.fail("`+`, `*`, `:` or end of input"),
        }
    }
    Ok(ModelSpec { response, terms, aliases })
}

/// One row of the ANOVA table, with factors as indices into the declared list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchDef {
    pub label: String,
    pub factors: Vec<usize>,
    pub explicit_residual: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedAlias {
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
}

fn resolve(names: &[String], declared: &[&str]) -> Result<Vec<usize>, FormulaError> {
    names
        .iter()
        .map(|n| {
            declared
                .iter()
                .position(|d| d == n)
                .ok_or_else(|| FormulaError::UnknownFactor(n.clone()))
        })
        .collect()
}

/// The ordered batch list for `spec` over `declared` factor columns. The
/// grand mean is implicit and not part of the list.
pub fn expand_terms(spec: &ModelSpec, declared: &[&str]) -> Result<Vec<BatchDef>, FormulaError> {
    let mut out: Vec<BatchDef> = Vec::with_capacity(spec.terms.len());
    let mut seen: Vec<Vec<&str>> = Vec::new();
    for term in &spec.terms {
        let key = term.key();
        if seen.contains(&key) {
            return Err(FormulaError::DuplicateTerm(term.label()));
        }
        seen.push(key);
        out.push(BatchDef {
            label: term.label(),
            factors: resolve(&term.factors, declared)?,
            explicit_residual: term.explicit_residual,
        });
    }
    Ok(out)
}

pub fn resolve_aliases(spec: &ModelSpec, declared: &[&str]) -> Result<Vec<ResolvedAlias>, FormulaError> {
    spec.aliases
        .iter()
        .map(|a| Ok(ResolvedAlias { coarse: resolve(&a.coarse, declared)?, fine: resolve(&a.fine, declared)? }))
        .collect()
}

/// Every factor name referenced by terms or aliases, in first-use order.
pub fn referenced_factors(spec: &ModelSpec) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let names = spec
        .terms
        .iter()
        .flat_map(|t| t.factors.iter())
        .chain(spec.aliases.iter().flat_map(|a| a.coarse.iter().chain(a.fine.iter())));
    for n in names {
        if !out.contains(n) {
            out.push(n.clone());
        }
    }
    out
}
