//! First-order formulas for `ρ_{ā,S}(b̄, c̄) ≤ n`: emission and a small
//! recursive-descent parser.
//!
//! Syntax: `exists y1 y2 (φ)`, `φ & ψ`, `φ | ψ`, `~φ`, `x = y`,
//! `R(x, y)`, `true`, `false`; `&` binds tighter than `|`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::EdgeFamily;
use crate::error::{Error, Result};
use crate::structures::TypeCode;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Eq(String, String),
    Atom(String, Vec<String>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Atom(..) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::quantifier_depth).max().unwrap_or(0),
            Formula::Exists(vs, f) => vs.len() + f.quantifier_depth(),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        match self {
            Formula::True | Formula::False => BTreeSet::new(),
            Formula::Eq(a, b) => [a.clone(), b.clone()].into(),
            Formula::Atom(_, args) => args.iter().cloned().collect(),
            Formula::Not(f) => f.free_variables(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().flat_map(Formula::free_variables).collect(),
            Formula::Exists(vs, f) => {
                let mut free = f.free_variables();
                for v in vs {
                    free.remove(v);
                }
                free
            }
        }
    }

    /// Renames free variables; bound occurrences are left alone.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Formula {
        let r = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Eq(a, b) => Formula::Eq(r(a), r(b)),
            Formula::Atom(p, args) => Formula::Atom(p.clone(), args.iter().map(r).collect()),
            Formula::Not(f) => Formula::Not(Box::new(f.rename(map))),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.rename(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.rename(map)).collect()),
            Formula::Exists(vs, f) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(v);
                }
                Formula::Exists(vs.clone(), Box::new(f.rename(&inner)))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, x: &Formula, parent_and: bool) -> fmt::Result {
            match x {
                Formula::Or(_) if parent_and => write!(f, "({x})"),
                Formula::And(_) if !parent_and => write!(f, "({x})"),
                _ => write!(f, "{x}"),
            }
        }
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Atom(p, args) => write!(f, "{p}({})", args.join(", ")),
            Formula::Not(x) => match **x {
                Formula::Atom(..) | Formula::True | Formula::False | Formula::Not(_) => write!(f, "~{x}"),
                _ => write!(f, "~({x})"),
            },
            Formula::And(xs) | Formula::Or(xs) => {
                let is_and = matches!(self, Formula::And(_));
                if xs.is_empty() {
                    return f.write_str(if is_and { "true" } else { "false" });
                }
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(if is_and { " & " } else { " | " })?;
                    }
                    child(f, x, is_and)?;
                }
                Ok(())
            }
            Formula::Exists(vs, x) => write!(f, "exists {} ({x})", vs.join(" ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Ident(String),
    Open,
    Close,
    Comma,
    And,
    Or,
    Not,
    Equals,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | ',' | '&' | '|' | '~' | '=' => {
                chars.next();
                out.push(match c {
                    '(' => Token::Open,
                    ')' => Token::Close,
                    ',' => Token::Comma,
                    '&' => Token::And,
                    '|' => Token::Or,
                    '~' => Token::Not,
                    _ => Token::Equals,
                });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(s));
            }
            other => return Err(err(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: 1, msg: format!("{msg} at token {}", self.pos) }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {t:?}")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Token::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn or(&mut self) -> Result<Formula> {
        let mut xs = vec![self.and()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            xs.push(self.and()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Formula::Or(xs) })
    }

    fn and(&mut self) -> Result<Formula> {
        let mut xs = vec![self.unary()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            xs.push(self.unary()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Formula::And(xs) })
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let f = self.or()?;
                self.expect(Token::Close)?;
                Ok(f)
            }
            Some(Token::Ident(word)) => {
                self.pos += 1;
                match word.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    "exists" => {
                        let mut vars = Vec::new();
                        while let Some(Token::Ident(_)) = self.peek() {
                            vars.push(self.ident()?);
                        }
                        if vars.is_empty() {
                            return Err(self.err("quantifier without variables"));
                        }
                        self.expect(Token::Open)?;
                        let body = self.or()?;
                        self.expect(Token::Close)?;
                        Ok(Formula::Exists(vars, Box::new(body)))
                    }
                    _ => match self.peek() {
                        Some(Token::Equals) => {
                            self.pos += 1;
                            Ok(Formula::Eq(word, self.ident()?))
                        }
                        Some(Token::Open) => {
                            self.pos += 1;
                            let mut args = Vec::new();
                            if self.peek() != Some(&Token::Close) {
                                args.push(self.ident()?);
                                while self.peek() == Some(&Token::Comma) {
                                    self.pos += 1;
                                    args.push(self.ident()?);
                                }
                            }
                            self.expect(Token::Close)?;
                            Ok(Formula::Atom(word, args))
                        }
                        _ => Err(self.err("expected '=' or '('")),
                    },
                }
            }
            _ => Err(self.err("expected formula")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0 };
    let f = p.or()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

fn conj(mut xs: Vec<Formula>) -> Formula {
    if xs.len() == 1 {
        xs.pop().unwrap()
    } else {
        Formula::And(xs)
    }
}

fn disj(mut xs: Vec<Formula>) -> Formula {
    if xs.len() == 1 {
        xs.pop().unwrap()
    } else {
        Formula::Or(xs)
    }
}

fn block(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn equal_blocks(a: &[String], b: &[String]) -> Vec<Formula> {
    a.iter().zip(b).map(|(x, y)| Formula::Eq(x.clone(), y.clone())).collect()
}

/// The formula `ρ(b̄, c̄) ≤ n` for tuples of length `arity`, in free
/// variables `b1..bk, c1..ck`. Each code of `s` needs a defining formula
/// in the free variables `x1..xk, y1..yk`.
pub fn emit_distance_formula(
    s: &EdgeFamily,
    formulas: &BTreeMap<TypeCode, String>,
    n: usize,
    arity: usize,
) -> Result<String> {
    let mut phis = Vec::new();
    for code in &s.codes {
        let text = formulas.get(code).ok_or_else(|| Error::MissingFormula(code.digest()))?;
        phis.push(parse_formula(text)?);
    }
    let (b, c) = (block("b", arity), block("c", arity));
    let ys: Vec<Vec<String>> = (0..=n).map(|j| block(&format!("y{j}_"), arity)).collect();
    let edge = |from: &[String], to: &[String]| -> Formula {
        let mut map = BTreeMap::new();
        for (i, v) in block("x", arity).into_iter().enumerate() {
            map.insert(v, from[i].clone());
        }
        for (i, v) in block("y", arity).into_iter().enumerate() {
            map.insert(v, to[i].clone());
        }
        disj(phis.iter().map(|p| p.rename(&map)).collect())
    };
    let mut disjuncts = vec![conj(equal_blocks(&b, &c))];
    for m in 1..=n {
        let mut body: Vec<Formula> = (0..m).map(|j| edge(&ys[j], &ys[j + 1])).collect();
        body.extend(equal_blocks(&b, &ys[0]));
        body.extend(equal_blocks(&c, &ys[m]));
        let vars: Vec<String> = ys[..=m].iter().flatten().cloned().collect();
        disjuncts.push(Formula::Exists(vars, Box::new(conj(body))));
    }
    Ok(disj(disjuncts).to_string())
}
