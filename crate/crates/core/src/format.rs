//! Text format for structures.
//!
//! ```text
//! # comment lines start with '#'
//! signature
//!   predicate P 1 1 0 1        # name arity lipschitz lo hi
//!   constant c
//!   diameter 2
//! end
//! points x y z
//! dist
//!   1                          # d(y,x)
//!   2 1                        # d(z,x) d(z,y)
//! end
//! pred P
//!   x 0
//!   y 1/2
//!   z 1
//! end
//! const c = x
//! ```
//!
//! Numerals are integers or `p/q`. The `dist` block holds the strict lower
//! triangle, one row per point after the first. Each `pred` block lists
//! every tuple of the predicate's arity exactly once. Trailing `#` comments
//! are allowed on any line. [`serialize`] writes the sections in the order
//! above with lowest-terms numerals, two-space indentation, tuples in
//! lexicographic order and LF line endings, so `parse(serialize(s)) == s`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{fmt_rational, parse_rational, Rational};
use crate::structures::{tuple_index, tuples, validate, MetricStructure, PredicateSymbol, Signature, StructureError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: {source}")]
    Numeral {
        line: usize,
        column: usize,
        source: crate::rational::RationalParseError,
    },
    #[error("invalid structure: {0}")]
    Structure(#[from] StructureError),
}

struct Token<'a> {
    col: usize,
    text: &'a str,
}

struct Line<'a> {
    no: usize,
    tokens: Vec<Token<'a>>,
}

fn lex(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let mut tokens = Vec::new();
        let mut start = None;
        for (k, ch) in body.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push(Token {
                        col: s + 1,
                        text: &body[s..k],
                    });
                }
            } else if start.is_none() {
                start = Some(k);
            }
        }
        if let Some(s) = start {
            tokens.push(Token {
                col: s + 1,
                text: &body[s..],
            });
        }
        if !tokens.is_empty() {
            out.push(Line { no: i + 1, tokens });
        }
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn num(line: usize, tok: &Token<'_>) -> Result<Rational, FormatError> {
    parse_rational(tok.text).map_err(|source| FormatError::Numeral {
        line,
        column: tok.col,
        source,
    })
}

struct Cursor<'b, 'a> {
    lines: &'b [Line<'a>],
    pos: usize,
    last_line: usize,
}

impl<'b, 'a> Cursor<'b, 'a> {
    fn peek(&self) -> Option<&'b Line<'a>> {
        self.lines.get(self.pos)
    }

    fn next(&mut self) -> Result<&'b Line<'a>, FormatError> {
        let l = self
            .lines
            .get(self.pos)
            .ok_or_else(|| syntax(self.last_line + 1, 1, "unexpected end of input"))?;
        self.pos += 1;
        Ok(l)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<&'b Line<'a>, FormatError> {
        let l = self.next()?;
        if l.tokens[0].text != kw {
            return Err(syntax(
                l.no,
                l.tokens[0].col,
                format!("expected `{kw}`, found `{}`", l.tokens[0].text),
            ));
        }
        Ok(l)
    }
}

fn arity_check(l: &Line<'_>, n: usize) -> Result<(), FormatError> {
    if l.tokens.len() != n {
        let col = l
            .tokens
            .get(n)
            .map(|t| t.col)
            .unwrap_or_else(|| l.tokens.last().unwrap().col);
        return Err(syntax(
            l.no,
            col,
            format!("expected {n} fields, found {}", l.tokens.len()),
        ));
    }
    Ok(())
}

/// Parses and validates a structure document.
pub fn parse(text: &str) -> Result<MetricStructure, FormatError> {
    let s = parse_unchecked(text)?;
    let diags = validate(&s);
    if diags.is_empty() {
        Ok(s)
    } else {
        Err(StructureError::Invalid(diags).into())
    }
}

/// Parses a document, checking only shapes; axiom violations are left for
/// [`validate`].
pub fn parse_unchecked(text: &str) -> Result<MetricStructure, FormatError> {
    let lines = lex(text);
    let last_line = text.lines().count();
    let mut cur = Cursor {
        lines: &lines,
        pos: 0,
        last_line,
    };

    // signature
    let head = cur.expect_keyword("signature")?;
    arity_check(head, 1)?;
    let mut preds = Vec::new();
    let mut consts = Vec::new();
    let mut bound = None;
    loop {
        let l = cur.next()?;
        let kw = &l.tokens[0];
        match kw.text {
            "end" => {
                arity_check(l, 1)?;
                break;
            }
            "predicate" => {
                arity_check(l, 6)?;
                let arity: usize = l.tokens[2]
                    .text
                    .parse()
                    .map_err(|_| syntax(l.no, l.tokens[2].col, "arity must be a positive integer"))?;
                preds.push(PredicateSymbol::new(
                    l.tokens[1].text,
                    arity,
                    num(l.no, &l.tokens[3])?,
                    num(l.no, &l.tokens[4])?,
                    num(l.no, &l.tokens[5])?,
                ));
            }
            "constant" => {
                arity_check(l, 2)?;
                consts.push(l.tokens[1].text.to_string());
            }
            "diameter" => {
                arity_check(l, 2)?;
                if bound.is_some() {
                    return Err(syntax(l.no, kw.col, "duplicate `diameter`"));
                }
                bound = Some(num(l.no, &l.tokens[1])?);
            }
            other => return Err(syntax(l.no, kw.col, format!("unknown signature entry `{other}`"))),
        }
    }
    let signature = Signature::new(preds, consts, bound)?;

    // points
    let l = cur.expect_keyword("points")?;
    let labels: Vec<String> = l.tokens[1..].iter().map(|t| t.text.to_string()).collect();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for t in &l.tokens[1..] {
        if index.insert(t.text, index.len()).is_some() {
            return Err(syntax(l.no, t.col, format!("duplicate point `{}`", t.text)));
        }
    }
    let n = labels.len();

    // dist
    let head = cur.expect_keyword("dist")?;
    arity_check(head, 1)?;
    let mut dist = vec![vec![Rational::zero(); n]; n];
    for i in 1..n {
        let l = cur.next()?;
        arity_check(l, i)?;
        for (j, tok) in l.tokens.iter().enumerate() {
            let r = num(l.no, tok)?;
            dist[i][j] = r.clone();
            dist[j][i] = r;
        }
    }
    let l = cur.expect_keyword("end")?;
    arity_check(l, 1)?;

    // predicate tables
    let mut tables: Vec<Option<Vec<Rational>>> = vec![None; signature.predicates().len()];
    while cur.peek().is_some_and(|l| l.tokens[0].text == "pred") {
        let l = cur.next()?;
        arity_check(l, 2)?;
        let name = &l.tokens[1];
        let p = signature
            .predicate_index(name.text)
            .ok_or_else(|| syntax(l.no, name.col, format!("undeclared predicate `{}`", name.text)))?;
        if tables[p].is_some() {
            return Err(syntax(l.no, name.col, format!("duplicate table for `{}`", name.text)));
        }
        let arity = signature.predicates()[p].arity;
        let total = n.pow(arity as u32);
        let mut table: Vec<Option<Rational>> = vec![None; total];
        loop {
            let l = cur.next()?;
            if l.tokens[0].text == "end" {
                arity_check(l, 1)?;
                break;
            }
            arity_check(l, arity + 1)?;
            let mut tuple = Vec::with_capacity(arity);
            for t in &l.tokens[..arity] {
                tuple.push(
                    *index
                        .get(t.text)
                        .ok_or_else(|| syntax(l.no, t.col, format!("unknown point `{}`", t.text)))?,
                );
            }
            let k = tuple_index(&tuple, n);
            if table[k].is_some() {
                return Err(syntax(l.no, l.tokens[0].col, "duplicate tuple"));
            }
            table[k] = Some(num(l.no, &l.tokens[arity])?);
        }
        if let Some(k) = table.iter().position(Option::is_none) {
            let missing: Vec<&str> = tuples(n, arity)
                .nth(k)
                .unwrap()
                .iter()
                .map(|&i| labels[i].as_str())
                .collect();
            return Err(syntax(
                l.no,
                1,
                format!("table for `{}` misses tuple ({})", name.text, missing.join(",")),
            ));
        }
        tables[p] = Some(table.into_iter().map(Option::unwrap).collect());
    }
    for (p, t) in tables.iter().enumerate() {
        if t.is_none() {
            return Err(syntax(
                cur.last_line,
                1,
                format!("missing table for predicate `{}`", signature.predicates()[p].name),
            ));
        }
    }

    // constants
    let mut constants: Vec<Option<usize>> = vec![None; signature.constants().len()];
    while let Some(l) = cur.peek() {
        let no = l.no;
        let l = cur.next()?;
        if l.tokens[0].text != "const" {
            return Err(syntax(
                no,
                l.tokens[0].col,
                format!("unexpected `{}`", l.tokens[0].text),
            ));
        }
        arity_check(l, 4)?;
        if l.tokens[2].text != "=" {
            return Err(syntax(l.no, l.tokens[2].col, "expected `=`"));
        }
        let c = signature.constant_index(l.tokens[1].text).ok_or_else(|| {
            syntax(
                l.no,
                l.tokens[1].col,
                format!("undeclared constant `{}`", l.tokens[1].text),
            )
        })?;
        if constants[c].is_some() {
            return Err(syntax(l.no, l.tokens[1].col, "duplicate constant assignment"));
        }
        let p = *index
            .get(l.tokens[3].text)
            .ok_or_else(|| syntax(l.no, l.tokens[3].col, format!("unknown point `{}`", l.tokens[3].text)))?;
        constants[c] = Some(p);
    }
    if let Some(c) = constants.iter().position(Option::is_none) {
        return Err(syntax(
            cur.last_line,
            1,
            format!("constant `{}` is not assigned", signature.constants()[c]),
        ));
    }

    Ok(MetricStructure::from_parts(
        signature,
        labels,
        dist,
        tables.into_iter().map(Option::unwrap).collect(),
        constants.into_iter().map(Option::unwrap).collect(),
    )?)
}

pub fn serialize(s: &MetricStructure) -> String {
    let mut out = String::new();
    let sig = s.signature();
    out.push_str("signature\n");
    for p in sig.predicates() {
        let _ = writeln!(
            out,
            "  predicate {} {} {} {} {}",
            p.name,
            p.arity,
            fmt_rational(&p.lipschitz),
            fmt_rational(&p.lo),
            fmt_rational(&p.hi)
        );
    }
    for c in sig.constants() {
        let _ = writeln!(out, "  constant {c}");
    }
    if let Some(b) = sig.distance_bound() {
        let _ = writeln!(out, "  diameter {}", fmt_rational(b));
    }
    out.push_str("end\n");
    out.push_str("points");
    for l in s.labels() {
        out.push(' ');
        out.push_str(l);
    }
    out.push('\n');
    out.push_str("dist\n");
    for i in 1..s.len() {
        let row: Vec<String> = (0..i).map(|j| fmt_rational(s.dist(i, j))).collect();
        let _ = writeln!(out, "  {}", row.join(" "));
    }
    out.push_str("end\n");
    for (pi, p) in sig.predicates().iter().enumerate() {
        let _ = writeln!(out, "pred {}", p.name);
        for (k, t) in tuples(s.len(), p.arity).enumerate() {
            let labels: Vec<&str> = t.iter().map(|&i| s.label(i)).collect();
            let _ = writeln!(out, "  {} {}", labels.join(" "), fmt_rational(&s.table(pi)[k]));
        }
        out.push_str("end\n");
    }
    for (c, name) in sig.constants().iter().enumerate() {
        let _ = writeln!(out, "const {name} = {}", s.label(s.constants()[c]));
    }
    out
}
