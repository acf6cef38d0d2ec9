//! Plain-text structure documents.
//!
//! ```text
//! # comments start with '#'
//! signature
//!   relation E 2
//!   function theta 2
//!   constant root
//!   label mu            # invariant label key
//! end
//! size 4
//! relation E
//!   0 1
//!   1 0
//! end
//! function theta
//!   0 0 -> 0
//!   ...                 # every argument tuple exactly once
//! end
//! constant root 0
//! label 3 depth 2       # element key value (value runs to end of line)
//! ```
//!
//! Blocks after `size` may appear in any order; `size` must precede them.

use std::fmt::Write as _;
use std::sync::Arc;

use super::{for_each_tuple, table_len, Signature, Structure};
use crate::error::{Error, Result};

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| err(line, format!("expected a natural number, got {tok:?}")))
}

pub fn parse_structure(text: &str) -> Result<Structure> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (line_no, first) = lines.next().ok_or_else(|| err(1, "empty document"))?;
    if first != "signature" {
        return Err(err(line_no, "document must start with 'signature'"));
    }
    let mut sig = Signature::new();
    let mut sig_line = line_no;
    loop {
        let (ln, l) = lines.next().ok_or_else(|| err(sig_line, "unterminated signature block"))?;
        sig_line = ln;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["end"] => break,
            ["relation", name, arity] => sig.relations.push((name.to_string(), parse_usize(arity, ln)?)),
            ["function", name, arity] => sig.functions.push((name.to_string(), parse_usize(arity, ln)?)),
            ["constant", name] => sig.constants.push(name.to_string()),
            ["label", key] => sig.label_keys.push(key.to_string()),
            _ => return Err(err(ln, format!("unexpected signature line {l:?}"))),
        }
    }
    sig.validate().map_err(|e| err(sig_line, e.to_string()))?;
    let sig = Arc::new(sig);

    let (ln, l) = lines.next().ok_or_else(|| err(sig_line, "missing 'size' line"))?;
    let size = match l.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["size", n] => parse_usize(n, ln)?,
        _ => return Err(err(ln, "expected 'size N'")),
    };
    let mut m = Structure::new(sig.clone(), size);
    let mut constants_set = vec![false; sig.constants.len()];
    let mut functions_set = vec![false; sig.functions.len()];

    let element = |tok: &str, ln: usize| -> Result<usize> {
        let x = parse_usize(tok, ln)?;
        if x >= size {
            return Err(err(ln, format!("element {x} out of bounds for size {size}")));
        }
        Ok(x)
    };

    while let Some((ln, l)) = lines.next() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["relation", name] => {
                let r = sig.relation_index(name).ok_or_else(|| err(ln, format!("unknown relation {name}")))?;
                let arity = sig.relations[r].1;
                loop {
                    let (rl, row) = lines.next().ok_or_else(|| err(ln, "unterminated relation block"))?;
                    if row == "end" {
                        break;
                    }
                    let t = row.split_whitespace().map(|tok| element(tok, rl)).collect::<Result<Vec<_>>>()?;
                    if t.len() != arity {
                        return Err(err(rl, format!("{name} has arity {arity}, row has {}", t.len())));
                    }
                    m.add_tuple(r, t);
                }
            }
            ["function", name] => {
                let f = sig.function_index(name).ok_or_else(|| err(ln, format!("unknown function {name}")))?;
                let arity = sig.functions[f].1;
                let mut seen = vec![false; table_len(size, arity)];
                loop {
                    let (rl, row) = lines.next().ok_or_else(|| err(ln, "unterminated function block"))?;
                    if row == "end" {
                        break;
                    }
                    let (args, value) = row.split_once("->").ok_or_else(|| err(rl, "expected 'args -> value'"))?;
                    let args = args.split_whitespace().map(|tok| element(tok, rl)).collect::<Result<Vec<_>>>()?;
                    if args.len() != arity {
                        return Err(err(rl, format!("{name} has arity {arity}, row has {}", args.len())));
                    }
                    let value = element(value.trim(), rl)?;
                    let idx = m.fn_index(&args);
                    if std::mem::replace(&mut seen[idx], true) {
                        return Err(err(rl, format!("{name} defined twice at {args:?}")));
                    }
                    m.set_function(f, &args, value);
                }
                if seen.iter().any(|s| !s) {
                    return Err(err(ln, format!("function {name} is not total")));
                }
                functions_set[f] = true;
            }
            ["constant", name, value] => {
                let c = sig.constant_index(name).ok_or_else(|| err(ln, format!("unknown constant {name}")))?;
                m.set_constant(c, element(value, ln)?);
                constants_set[c] = true;
            }
            ["label", x, key, ..] => {
                let x = element(x, ln)?;
                let value = l
                    .splitn(4, char::is_whitespace)
                    .nth(3)
                    .map(str::trim)
                    .ok_or_else(|| err(ln, "expected 'label element key value'"))?;
                m.set_label(x, key, value);
            }
            _ => return Err(err(ln, format!("unexpected line {l:?}"))),
        }
    }
    let last = text.lines().count().max(1);
    if let Some(f) = functions_set.iter().position(|s| !s) {
        return Err(err(last, format!("function {} has no table", sig.functions[f].0)));
    }
    if let Some(c) = constants_set.iter().position(|s| !s) {
        return Err(err(last, format!("constant {} is unassigned", sig.constants[c])));
    }
    Ok(m)
}

pub fn write_structure(m: &Structure) -> String {
    let sig = m.signature();
    let mut out = String::from("signature\n");
    for (name, arity) in &sig.relations {
        let _ = writeln!(out, "  relation {name} {arity}");
    }
    for (name, arity) in &sig.functions {
        let _ = writeln!(out, "  function {name} {arity}");
    }
    for name in &sig.constants {
        let _ = writeln!(out, "  constant {name}");
    }
    for key in &sig.label_keys {
        let _ = writeln!(out, "  label {key}");
    }
    out.push_str("end\n");
    let _ = writeln!(out, "size {}", m.size());
    for (r, (name, _)) in sig.relations.iter().enumerate() {
        let _ = writeln!(out, "relation {name}");
        for t in m.relation(r) {
            let row: Vec<String> = t.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "  {}", row.join(" "));
        }
        out.push_str("end\n");
    }
    for (f, (name, arity)) in sig.functions.iter().enumerate() {
        let _ = writeln!(out, "function {name}");
        for_each_tuple(m.size(), *arity, |t| {
            let row: Vec<String> = t.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "  {} -> {}", row.join(" "), m.apply_function(f, t));
        });
        out.push_str("end\n");
    }
    for (c, name) in sig.constants.iter().enumerate() {
        let _ = writeln!(out, "constant {name} {}", m.constant(c));
    }
    for x in m.universe() {
        for (key, value) in m.labels(x) {
            let _ = writeln!(out, "label {x} {key} {value}");
        }
    }
    out
}
