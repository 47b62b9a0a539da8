//! Relational Lipschitz signatures and finite metric structures.
//!
//! A [`MetricStructure`] stores an exact rational distance matrix, one
//! table per predicate symbol (indexed by tuples of point indices in
//! lexicographic order) and the interpretation of every constant. Structures
//! built through [`MetricStructure::new`] always satisfy the metric and
//! Lipschitz axioms; [`MetricStructure::from_parts`] only checks shapes and is
//! what [`validate`] and [`canonicalize`] operate on.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::rational::{fmt_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateSymbol {
    pub name: String,
    pub arity: usize,
    pub lipschitz: Rational,
    pub lo: Rational,
    pub hi: Rational,
}

impl PredicateSymbol {
    pub fn new(name: impl Into<String>, arity: usize, lipschitz: Rational, lo: Rational, hi: Rational) -> Self {
        PredicateSymbol {
            name: name.into(),
            arity,
            lipschitz,
            lo,
            hi,
        }
    }

    pub fn unary(name: impl Into<String>, lipschitz: Rational, lo: Rational, hi: Rational) -> Self {
        Self::new(name, 1, lipschitz, lo, hi)
    }
}

/// Vocabulary of a class: predicates, constants and an optional diameter
/// cap. The distance symbol is implicit.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Signature {
    predicates: Vec<PredicateSymbol>,
    constants: Vec<String>,
    distance_bound: Option<Rational>,
}

impl Signature {
    pub fn new(
        predicates: Vec<PredicateSymbol>,
        constants: Vec<String>,
        distance_bound: Option<Rational>,
    ) -> Result<Self, StructureError> {
        let mut seen = std::collections::HashSet::new();
        for name in predicates.iter().map(|p| &p.name).chain(constants.iter()) {
            if !is_valid_name(name) {
                return Err(StructureError::InvalidSignature(format!(
                    "invalid symbol name `{name}`"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(StructureError::InvalidSignature(format!("duplicate symbol `{name}`")));
            }
        }
        for p in &predicates {
            if p.arity == 0 {
                return Err(StructureError::InvalidSignature(format!(
                    "predicate `{}` has arity 0",
                    p.name
                )));
            }
            if p.lipschitz.is_negative() {
                return Err(StructureError::InvalidSignature(format!(
                    "predicate `{}` has negative Lipschitz constant",
                    p.name
                )));
            }
            if p.lo > p.hi {
                return Err(StructureError::InvalidSignature(format!(
                    "predicate `{}` has empty range",
                    p.name
                )));
            }
        }
        if let Some(b) = &distance_bound {
            if !b.is_positive() {
                return Err(StructureError::InvalidSignature(
                    "diameter bound must be positive".into(),
                ));
            }
        }
        Ok(Signature {
            predicates,
            constants,
            distance_bound,
        })
    }

    /// Pure metric spaces: no predicates, no constants, no cap.
    pub fn metric() -> Self {
        Signature::default()
    }

    pub fn predicates(&self) -> &[PredicateSymbol] {
        &self.predicates
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn distance_bound(&self) -> Option<&Rational> {
        self.distance_bound.as_ref()
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c == name)
    }

    pub fn is_unary(&self) -> bool {
        self.predicates.iter().all(|p| p.arity == 1)
    }
}

pub(crate) fn is_valid_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '#' || c == '=')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid point label `{0}`")]
    InvalidLabel(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("structure violates {} constraint(s): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot merge indiscernible points `{a}` and `{b}`: predicate `{predicate}` disagrees")]
    MergeConflict { a: String, b: String, predicate: String },
    #[error("point `{0}` is neither a generator nor a constant")]
    NotGenerated(String),
}

/// One violated structure axiom. Points are reported by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    NonZeroDiagonal {
        point: String,
    },
    NegativeDistance {
        x: String,
        y: String,
    },
    Asymmetric {
        x: String,
        y: String,
    },
    Indiscernible {
        x: String,
        y: String,
    },
    Triangle {
        x: String,
        y: String,
        z: String,
    },
    DiameterExceeded {
        x: String,
        y: String,
        bound: Rational,
    },
    OutOfRange {
        predicate: String,
        tuple: Vec<String>,
    },
    Lipschitz {
        predicate: String,
        left: Vec<String>,
        right: Vec<String>,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NonZeroDiagonal { point } => write!(f, "nonzero self-distance at {point}"),
            Diagnostic::NegativeDistance { x, y } => write!(f, "negative distance between ({x},{y})"),
            Diagnostic::Asymmetric { x, y } => write!(f, "asymmetric distance between ({x},{y})"),
            Diagnostic::Indiscernible { x, y } => write!(f, "indiscernible points ({x},{y})"),
            Diagnostic::Triangle { x, y, z } => write!(f, "triangle inequality violated at ({x},{y},{z})"),
            Diagnostic::DiameterExceeded { x, y, bound } => {
                write!(f, "distance ({x},{y}) exceeds diameter bound {}", fmt_rational(bound))
            }
            Diagnostic::OutOfRange { predicate, tuple } => {
                write!(f, "value of {predicate} at ({}) outside its range", tuple.join(","))
            }
            Diagnostic::Lipschitz { predicate, left, right } => write!(
                f,
                "Lipschitz violated for {predicate} at ({}) / ({})",
                left.join(","),
                right.join(",")
            ),
        }
    }
}

/// Read access shared by materialized structures and implicit product spaces.
pub trait Space {
    fn signature(&self) -> &Signature;
    fn point_count(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> Cow<'_, Rational>;
    fn predicate_at(&self, predicate: usize, tuple: &[usize]) -> Cow<'_, Rational>;
    fn constant_point(&self, constant: usize) -> usize;
    fn point_label(&self, i: usize) -> String;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricStructure {
    signature: Signature,
    labels: Vec<String>,
    dist: Vec<Rational>,
    tables: Vec<Vec<Rational>>,
    constants: Vec<usize>,
}

impl MetricStructure {
    /// Assembles a structure, checking only shapes. The result may violate
    /// the metric axioms; see [`validate`].
    ///
    /// `tables[p]` lists the values of predicate `p` on all tuples of its
    /// arity in lexicographic order of point indices.
    pub fn from_parts(
        signature: Signature,
        labels: Vec<String>,
        dist: Vec<Vec<Rational>>,
        tables: Vec<Vec<Rational>>,
        constants: Vec<usize>,
    ) -> Result<Self, StructureError> {
        let n = labels.len();
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !is_valid_name(l) {
                return Err(StructureError::InvalidLabel(l.clone()));
            }
            if !seen.insert(l.as_str()) {
                return Err(StructureError::DuplicateLabel(l.clone()));
            }
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(StructureError::Shape(format!("distance matrix must be {n}x{n}")));
        }
        if tables.len() != signature.predicates.len() {
            return Err(StructureError::Shape(format!(
                "expected {} predicate tables, got {}",
                signature.predicates.len(),
                tables.len()
            )));
        }
        for (p, t) in signature.predicates.iter().zip(&tables) {
            let expected = n
                .checked_pow(p.arity as u32)
                .ok_or_else(|| StructureError::Shape("table too large".into()))?;
            if t.len() != expected {
                return Err(StructureError::Shape(format!(
                    "table for `{}` must have {expected} entries, got {}",
                    p.name,
                    t.len()
                )));
            }
        }
        if constants.len() != signature.constants.len() {
            return Err(StructureError::Shape("every constant needs an interpretation".into()));
        }
        if constants.iter().any(|&c| c >= n) {
            return Err(StructureError::Shape(
                "constant interpreted outside the point set".into(),
            ));
        }
        Ok(MetricStructure {
            signature,
            labels,
            dist: dist.into_iter().flatten().collect(),
            tables,
            constants,
        })
    }

    /// Assembles and validates a structure.
    pub fn new(
        signature: Signature,
        labels: Vec<String>,
        dist: Vec<Vec<Rational>>,
        tables: Vec<Vec<Rational>>,
        constants: Vec<usize>,
    ) -> Result<Self, StructureError> {
        let s = Self::from_parts(signature, labels, dist, tables, constants)?;
        s.checked()
    }

    /// Pure metric space with the given labels and distance matrix.
    pub fn metric_space<S: Into<String>>(
        labels: impl IntoIterator<Item = S>,
        dist: Vec<Vec<Rational>>,
    ) -> Result<Self, StructureError> {
        Self::new(
            Signature::metric(),
            labels.into_iter().map(Into::into).collect(),
            dist,
            vec![],
            vec![],
        )
    }

    pub(crate) fn checked(self) -> Result<Self, StructureError> {
        let diags = validate(&self);
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(StructureError::Invalid(diags))
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn point(&self, label: &str) -> Result<usize, StructureError> {
        self.index_of(label)
            .ok_or_else(|| StructureError::UnknownPoint(label.to_string()))
    }

    pub fn dist(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i * self.len() + j]
    }

    pub fn dist_rows(&self) -> Vec<Vec<Rational>> {
        let n = self.len();
        (0..n).map(|i| self.dist[i * n..(i + 1) * n].to_vec()).collect()
    }

    pub fn tables(&self) -> &[Vec<Rational>] {
        &self.tables
    }

    pub fn table(&self, predicate: usize) -> &[Rational] {
        &self.tables[predicate]
    }

    pub fn value(&self, predicate: usize, tuple: &[usize]) -> &Rational {
        &self.tables[predicate][tuple_index(tuple, self.len())]
    }

    /// Value of a unary predicate.
    pub fn unary(&self, predicate: usize, point: usize) -> &Rational {
        &self.tables[predicate][point]
    }

    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    pub fn is_constant(&self, point: usize) -> bool {
        self.constants.contains(&point)
    }

    pub fn diameter(&self) -> Rational {
        self.dist.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    /// Induced structure on `points` (distinct indices, in the given order).
    /// Every constant must be among them.
    pub fn induced(&self, points: &[usize]) -> Result<MetricStructure, StructureError> {
        let n = self.len();
        let mut pos = vec![usize::MAX; n];
        for (k, &p) in points.iter().enumerate() {
            if p >= n {
                return Err(StructureError::UnknownPoint(format!("#{p}")));
            }
            if pos[p] != usize::MAX {
                return Err(StructureError::DuplicateLabel(self.labels[p].clone()));
            }
            pos[p] = k;
        }
        let mut constants = Vec::with_capacity(self.constants.len());
        for &c in &self.constants {
            if pos[c] == usize::MAX {
                return Err(StructureError::NotGenerated(self.labels[c].clone()));
            }
            constants.push(pos[c]);
        }
        let m = points.len();
        let labels = points.iter().map(|&p| self.labels[p].clone()).collect();
        let dist = points
            .iter()
            .flat_map(|&i| points.iter().map(move |&j| self.dist(i, j).clone()))
            .collect();
        let tables = self
            .signature
            .predicates
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                tuples(m, p.arity)
                    .map(|t| {
                        let orig: Vec<usize> = t.iter().map(|&k| points[k]).collect();
                        self.value(pi, &orig).clone()
                    })
                    .collect()
            })
            .collect();
        Ok(MetricStructure {
            signature: self.signature.clone(),
            labels,
            dist,
            tables,
            constants,
        })
    }

    /// Same structure with relabelled points.
    pub fn relabel(&self, labels: Vec<String>) -> Result<MetricStructure, StructureError> {
        MetricStructure::from_parts(
            self.signature.clone(),
            labels,
            self.dist_rows(),
            self.tables.clone(),
            self.constants.clone(),
        )
    }
}

impl Space for MetricStructure {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn point_count(&self) -> usize {
        self.len()
    }

    fn distance(&self, i: usize, j: usize) -> Cow<'_, Rational> {
        Cow::Borrowed(self.dist(i, j))
    }

    fn predicate_at(&self, predicate: usize, tuple: &[usize]) -> Cow<'_, Rational> {
        Cow::Borrowed(self.value(predicate, tuple))
    }

    fn constant_point(&self, constant: usize) -> usize {
        self.constants[constant]
    }

    fn point_label(&self, i: usize) -> String {
        self.labels[i].clone()
    }
}

/// Index of a tuple of point indices (first coordinate most significant).
pub fn tuple_index(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * n + t)
}

/// All tuples of the given arity over `0..n`, in lexicographic order.
pub fn tuples(n: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if n == 0 && arity > 0 { 0 } else { n.pow(arity as u32) };
    (0..total).map(move |mut idx| {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = idx % n;
            idx /= n;
        }
        t
    })
}

/// Checks every structure axiom, returning one diagnostic per violation.
/// An empty list means the structure is valid.
pub fn validate(s: &MetricStructure) -> Vec<Diagnostic> {
    let n = s.len();
    let l = |i: usize| s.labels[i].clone();
    let mut out = Vec::new();
    for i in 0..n {
        if !s.dist(i, i).is_zero() {
            out.push(Diagnostic::NonZeroDiagonal { point: l(i) });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if s.dist(i, j) != s.dist(j, i) {
                out.push(Diagnostic::Asymmetric { x: l(i), y: l(j) });
            }
            if s.dist(i, j).is_negative() || s.dist(j, i).is_negative() {
                out.push(Diagnostic::NegativeDistance { x: l(i), y: l(j) });
            } else if s.dist(i, j).is_zero() {
                out.push(Diagnostic::Indiscernible { x: l(i), y: l(j) });
            }
            if let Some(b) = s.signature.distance_bound() {
                if s.dist(i, j) > b {
                    out.push(Diagnostic::DiameterExceeded {
                        x: l(i),
                        y: l(j),
                        bound: b.clone(),
                    });
                }
            }
        }
    }
    for (x, y, z) in triangle_violations(s) {
        out.push(Diagnostic::Triangle {
            x: l(x),
            y: l(y),
            z: l(z),
        });
    }
    for (pi, p) in s.signature.predicates.iter().enumerate() {
        let table = &s.tables[pi];
        let all: Vec<Vec<usize>> = tuples(n, p.arity).collect();
        for (k, t) in all.iter().enumerate() {
            if table[k] < p.lo || table[k] > p.hi {
                out.push(Diagnostic::OutOfRange {
                    predicate: p.name.clone(),
                    tuple: t.iter().map(|&i| l(i)).collect(),
                });
            }
        }
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                let gap = (&table[a] - &table[b]).abs();
                if gap.is_zero() {
                    continue;
                }
                let sup = all[a]
                    .iter()
                    .zip(&all[b])
                    .map(|(&x, &y)| s.dist(x, y))
                    .max()
                    .cloned()
                    .unwrap_or_else(Rational::zero);
                if gap > &p.lipschitz * sup {
                    out.push(Diagnostic::Lipschitz {
                        predicate: p.name.clone(),
                        left: all[a].iter().map(|&i| l(i)).collect(),
                        right: all[b].iter().map(|&i| l(i)).collect(),
                    });
                }
            }
        }
    }
    out
}

/// Triples `(x, y, z)` with `d(x,z) > d(x,y) + d(y,z)`, reported with
/// `x < z`. Uses scaled integer arithmetic when the common denominator
/// is small.
fn triangle_violations(s: &MetricStructure) -> Vec<(usize, usize, usize)> {
    let n = s.len();
    let mut out = Vec::new();
    if let Some(scaled) = scaled_matrix(s) {
        for x in 0..n {
            for z in x + 1..n {
                let dxz = scaled[x * n + z];
                for y in 0..n {
                    if y != x && y != z && dxz > scaled[x * n + y] + scaled[y * n + z] {
                        out.push((x, y, z));
                    }
                }
            }
        }
    } else {
        for x in 0..n {
            for z in x + 1..n {
                for y in 0..n {
                    if y != x && y != z && s.dist(x, z) > &(s.dist(x, y) + s.dist(y, z)) {
                        out.push((x, y, z));
                    }
                }
            }
        }
    }
    out
}

fn scaled_matrix(s: &MetricStructure) -> Option<Vec<i64>> {
    let mut lcm = num_bigint::BigInt::from(1);
    for d in &s.dist {
        lcm = lcm.lcm(d.denom());
    }
    s.dist
        .iter()
        .map(|d| {
            let v = d.numer() * (&lcm / d.denom());
            v.to_i64().filter(|x| x.abs() < (1 << 60))
        })
        .collect()
}

/// A structure together with an ordered generating tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointedStructure {
    structure: MetricStructure,
    generators: Vec<usize>,
}

impl PointedStructure {
    /// Every point must be a generator or a constant.
    pub fn new(structure: MetricStructure, generators: Vec<usize>) -> Result<Self, StructureError> {
        let n = structure.len();
        let mut covered = vec![false; n];
        for &g in &generators {
            if g >= n {
                return Err(StructureError::UnknownPoint(format!("#{g}")));
            }
            covered[g] = true;
        }
        for &c in structure.constants() {
            covered[c] = true;
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(StructureError::NotGenerated(structure.label(p).to_string()));
        }
        Ok(PointedStructure { structure, generators })
    }

    /// Generators listed by label.
    pub fn from_labels(structure: MetricStructure, labels: &[&str]) -> Result<Self, StructureError> {
        let gens = labels.iter().map(|l| structure.point(l)).collect::<Result<_, _>>()?;
        Self::new(structure, gens)
    }

    /// Generated by all points, in order.
    pub fn whole(structure: MetricStructure) -> Self {
        let generators = (0..structure.len()).collect();
        PointedStructure { structure, generators }
    }

    pub fn structure(&self) -> &MetricStructure {
        &self.structure
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn arity(&self) -> usize {
        self.generators.len()
    }

    pub fn into_structure(self) -> MetricStructure {
        self.structure
    }
}

/// Substructure generated by `tuple` (point indices of `s`): the tuple's
/// points followed by the constants, with the generator order preserved.
pub fn generated_substructure(s: &MetricStructure, tuple: &[usize]) -> Result<PointedStructure, StructureError> {
    let mut points: Vec<usize> = Vec::new();
    for &t in tuple {
        if t >= s.len() {
            return Err(StructureError::UnknownPoint(format!("#{t}")));
        }
        if !points.contains(&t) {
            points.push(t);
        }
    }
    for &c in s.constants() {
        if !points.contains(&c) {
            points.push(c);
        }
    }
    let sub = s.induced(&points)?;
    let generators = tuple
        .iter()
        .map(|t| points.iter().position(|p| p == t).expect("tuple point kept"))
        .collect();
    PointedStructure::new(sub, generators)
}

/// Label-based variant of [`generated_substructure`].
pub fn generated_by_labels(s: &MetricStructure, labels: &[&str]) -> Result<PointedStructure, StructureError> {
    let idx: Vec<usize> = labels.iter().map(|l| s.point(l)).collect::<Result<_, _>>()?;
    generated_substructure(s, &idx)
}

/// Quotients a structure by its zero-distance pairs. Points keep
/// first-occurrence order; the output is validated.
pub fn canonicalize(s: &MetricStructure) -> Result<MetricStructure, StructureError> {
    let n = s.len();
    let mut rep: Vec<usize> = (0..n).collect();
    // d = 0 is transitive only for valid pseudometrics; close the relation
    // explicitly so chains x~y~z always collapse onto x.
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if rep[i] != rep[j] && s.dist(i, j).is_zero() {
                    let (a, b) = (rep[i].min(rep[j]), rep[i].max(rep[j]));
                    for r in rep.iter_mut() {
                        if *r == b {
                            *r = a;
                        }
                    }
                    changed = true;
                }
            }
        }
    }
    if rep.iter().enumerate().all(|(i, &r)| i == r) {
        return s.clone().checked();
    }
    let keep: Vec<usize> = (0..n).filter(|&i| rep[i] == i).collect();
    for (pi, p) in s.signature.predicates.iter().enumerate() {
        for t in tuples(n, p.arity) {
            let r: Vec<usize> = t.iter().map(|&i| rep[i]).collect();
            if s.value(pi, &t) != s.value(pi, &r) {
                let moved = t.iter().zip(&r).find(|(a, b)| a != b).map(|(a, b)| (*a, *b)).unwrap();
                return Err(StructureError::MergeConflict {
                    a: s.label(moved.1).to_string(),
                    b: s.label(moved.0).to_string(),
                    predicate: p.name.clone(),
                });
            }
        }
    }
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let labels = keep.iter().map(|&p| s.labels[p].clone()).collect();
    let dist = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| s.dist(i, j).clone()).collect())
        .collect();
    let tables = s
        .signature
        .predicates
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            tuples(keep.len(), p.arity)
                .map(|t| {
                    let orig: Vec<usize> = t.iter().map(|&k| keep[k]).collect();
                    s.value(pi, &orig).clone()
                })
                .collect()
        })
        .collect();
    let constants = s.constants.iter().map(|&c| pos[&rep[c]]).collect();
    MetricStructure::new(s.signature.clone(), labels, dist, tables, constants)
}

/// Incremental construction by label, mostly for tests and examples.
#[derive(Clone, Debug)]
pub struct StructureBuilder {
    signature: Signature,
    labels: Vec<String>,
    dist: HashMap<(usize, usize), Rational>,
    values: HashMap<(usize, Vec<usize>), Rational>,
    constants: HashMap<usize, usize>,
}

impl StructureBuilder {
    pub fn new(signature: Signature) -> Self {
        StructureBuilder {
            signature,
            labels: Vec::new(),
            dist: HashMap::new(),
            values: HashMap::new(),
            constants: HashMap::new(),
        }
    }

    pub fn point(mut self, label: &str) -> Self {
        self.labels.push(label.to_string());
        self
    }

    pub fn points<'a>(mut self, labels: impl IntoIterator<Item = &'a str>) -> Self {
        self.labels.extend(labels.into_iter().map(str::to_string));
        self
    }

    fn idx(&self, label: &str) -> Result<usize, StructureError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| StructureError::UnknownPoint(label.to_string()))
    }

    pub fn dist(mut self, x: &str, y: &str, r: Rational) -> Result<Self, StructureError> {
        let (i, j) = (self.idx(x)?, self.idx(y)?);
        self.dist.insert((i.min(j), i.max(j)), r);
        Ok(self)
    }

    pub fn value(mut self, predicate: &str, tuple: &[&str], r: Rational) -> Result<Self, StructureError> {
        let p = self
            .signature
            .predicate_index(predicate)
            .ok_or_else(|| StructureError::UnknownPredicate(predicate.to_string()))?;
        let t = tuple.iter().map(|l| self.idx(l)).collect::<Result<Vec<_>, _>>()?;
        if t.len() != self.signature.predicates[p].arity {
            return Err(StructureError::Shape(format!("arity mismatch for `{predicate}`")));
        }
        self.values.insert((p, t), r);
        Ok(self)
    }

    pub fn constant(mut self, name: &str, point: &str) -> Result<Self, StructureError> {
        let c = self
            .signature
            .constant_index(name)
            .ok_or_else(|| StructureError::UnknownConstant(name.to_string()))?;
        let p = self.idx(point)?;
        self.constants.insert(c, p);
        Ok(self)
    }

    /// Missing distances and predicate values are errors; the result is
    /// validated.
    pub fn build(self) -> Result<MetricStructure, StructureError> {
        let n = self.labels.len();
        let mut dist = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let r = self.dist.get(&(i, j)).ok_or_else(|| {
                    StructureError::Shape(format!("missing distance ({},{})", self.labels[i], self.labels[j]))
                })?;
                dist[i][j] = r.clone();
                dist[j][i] = r.clone();
            }
        }
        let mut tables = Vec::new();
        for (pi, p) in self.signature.predicates.iter().enumerate() {
            let mut t = Vec::new();
            for tuple in tuples(n, p.arity) {
                let v = self
                    .values
                    .get(&(pi, tuple.clone()))
                    .ok_or_else(|| StructureError::Shape(format!("missing value of `{}` at {:?}", p.name, tuple)))?;
                t.push(v.clone());
            }
            tables.push(t);
        }
        let constants = (0..self.signature.constants.len())
            .map(|c| {
                self.constants
                    .get(&c)
                    .copied()
                    .ok_or_else(|| StructureError::UnknownConstant(self.signature.constants[c].clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        MetricStructure::new(self.signature, self.labels, dist, tables, constants)
    }
}
