//! Reading input files and flag values.

use std::io::ErrorKind;
use std::path::Path;

use fraisse::embeddings::Embedding;
use fraisse::format::{parse, parse_unchecked, FormatError};
use fraisse::rational::{parse_rational, Rational};
use fraisse::structures::{MetricStructure, PointedStructure};

use crate::{Failure, Status};

pub fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        status: if e.kind() == ErrorKind::InvalidData {
            Status::Data
        } else {
            Status::NoInput
        },
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn format_failure(path: &Path, e: FormatError) -> Failure {
    Failure::data(format!("{}: {e}", path.display()))
}

/// A structure file, checked against the axioms.
pub fn load(path: &Path) -> Result<MetricStructure, Failure> {
    parse(&read(path)?).map_err(|e| format_failure(path, e))
}

pub fn load_unchecked(path: &Path) -> Result<MetricStructure, Failure> {
    parse_unchecked(&read(path)?).map_err(|e| format_failure(path, e))
}

pub fn rational(flag: &str, text: &str) -> Result<Rational, Failure> {
    parse_rational(text.trim()).map_err(|e| Failure::usage(format!("--{flag}: {e}")))
}

pub fn positive(flag: &str, text: &str) -> Result<Rational, Failure> {
    let r = rational(flag, text)?;
    if r <= Rational::from_integer(0.into()) {
        return Err(Failure::usage(format!("--{flag} must be positive")));
    }
    Ok(r)
}

fn split_list(text: &str, sep: char) -> impl Iterator<Item = &str> {
    text.split(sep).map(str::trim).filter(|s| !s.is_empty())
}

/// `key:value` pairs separated by commas.
pub fn pairs<'a>(flag: &str, text: &'a str) -> Result<Vec<(&'a str, &'a str)>, Failure> {
    split_list(text, ',')
        .map(|item| {
            item.split_once(':')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Failure::usage(format!("--{flag}: expected `key:value`, got `{item}`")))
        })
        .collect()
}

/// A map `a:x,b:y` from the points of `source` to points of `target`.
/// With `fill`, unlisted points are sent to the point with the same label.
pub fn map(
    flag: &str,
    text: &str,
    source: &MetricStructure,
    target: &MetricStructure,
    fill: bool,
) -> Result<Embedding, Failure> {
    let mut image: Vec<Option<usize>> = vec![None; source.len()];
    for (k, v) in pairs(flag, text)? {
        let i = source
            .index_of(k)
            .ok_or_else(|| Failure::data(format!("--{flag}: unknown source point `{k}`")))?;
        let j = target
            .index_of(v)
            .ok_or_else(|| Failure::data(format!("--{flag}: unknown target point `{v}`")))?;
        if image[i].replace(j).is_some() {
            return Err(Failure::usage(format!("--{flag}: `{k}` mapped twice")));
        }
    }
    let mut out = Vec::with_capacity(source.len());
    for (i, m) in image.into_iter().enumerate() {
        let label = source.label(i);
        match m.or_else(|| if fill { target.index_of(label) } else { None }) {
            Some(j) => out.push(j),
            None => return Err(Failure::usage(format!("--{flag}: no image for `{label}`"))),
        }
    }
    Ok(Embedding::new(out))
}

/// Several maps separated by `;`.
pub fn maps(
    flag: &str,
    text: &str,
    source: &MetricStructure,
    target: &MetricStructure,
    fill: bool,
) -> Result<Vec<Embedding>, Failure> {
    let out = split_list(text, ';')
        .map(|m| map(flag, m, source, target, fill))
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(Failure::usage(format!("--{flag}: no maps given")));
    }
    Ok(out)
}

pub fn labels(text: &str) -> Vec<&str> {
    split_list(text, ',').collect()
}

/// `s` pointed by the listed generators, or by all of its points.
pub fn pointed(s: MetricStructure, gens: Option<&str>) -> Result<PointedStructure, Failure> {
    match gens {
        None => Ok(PointedStructure::whole(s)),
        Some(g) => {
            let ls = labels(g);
            PointedStructure::from_labels(s, &ls).map_err(Failure::data)
        }
    }
}

pub fn usizes(flag: &str, text: &str) -> Result<Vec<usize>, Failure> {
    let out = split_list(text, ',')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Failure::usage(format!("--{flag}: `{t}` is not a count")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(Failure::usage(format!("--{flag}: empty list")));
    }
    Ok(out)
}

/// `a:x,b:y` rendering of a map.
pub fn show_map(e: &Embedding, source: &MetricStructure, target: &MetricStructure) -> String {
    e.map()
        .iter()
        .enumerate()
        .map(|(i, &j)| format!("{}:{}", source.label(i), target.label(j)))
        .collect::<Vec<_>>()
        .join(",")
}
