//! Embedding sets `Emb(A, B)`, the generator metric on them, push-forwards,
//! oscillation and automorphism groups.

use std::collections::HashMap;

use num_traits::Zero;
use thiserror::Error;

use crate::ramsey::EmbeddingColoring;
use crate::rational::Rational;
use crate::structures::{tuples, MetricStructure, PointedStructure, Space};

/// Default cap on backtracking nodes per enumeration.
pub const DEFAULT_NODE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingError {
    #[error("source and target have different signatures")]
    SignatureMismatch,
    #[error("embeddings have different sources or targets")]
    SourceMismatch,
    #[error("cannot compose: {0}")]
    Composition(String),
    #[error("enumeration aborted after {explored} candidate nodes (cap {cap})")]
    ResourceCap { explored: u64, cap: u64 },
    #[error("embedding is not in the coloring's domain")]
    NotInDomain,
    #[error("not an embedding: {0}")]
    Invalid(String),
    #[error("oscillation of an empty set")]
    EmptySet,
}

/// A map from source points to target points, stored by index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding(Vec<usize>);

impl Embedding {
    pub fn new(map: Vec<usize>) -> Self {
        Embedding(map)
    }

    pub fn identity(n: usize) -> Self {
        Embedding((0..n).collect())
    }

    pub fn map(&self) -> &[usize] {
        &self.0
    }

    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn after(&self, inner: &Embedding) -> Result<Embedding, EmbeddingError> {
        inner
            .0
            .iter()
            .map(|&i| {
                self.0.get(i).copied().ok_or_else(|| {
                    EmbeddingError::Composition(format!("point #{i} outside a domain of size {}", self.0.len()))
                })
            })
            .collect::<Result<_, _>>()
            .map(Embedding)
    }

    /// Inverse of a permutation.
    pub fn inverse(&self) -> Embedding {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Embedding(inv)
    }

    /// Images of a tuple of source points.
    pub fn apply(&self, tuple: &[usize]) -> Vec<usize> {
        tuple.iter().map(|&i| self.0[i]).collect()
    }
}

/// Checks that `map` is injective and preserves distances, predicates and
/// constants exactly.
pub fn check_embedding<T: Space + ?Sized>(
    source: &MetricStructure,
    target: &T,
    map: &Embedding,
) -> Result<(), EmbeddingError> {
    if source.signature() != target.signature() {
        return Err(EmbeddingError::SignatureMismatch);
    }
    let n = source.len();
    if map.len() != n {
        return Err(EmbeddingError::Invalid(format!(
            "map has {} entries for {n} points",
            map.len()
        )));
    }
    if let Some(&t) = map.0.iter().find(|&&t| t >= target.point_count()) {
        return Err(EmbeddingError::Invalid(format!("image #{t} outside target")));
    }
    for i in 0..n {
        for j in i + 1..n {
            if map.0[i] == map.0[j] {
                return Err(EmbeddingError::Invalid(format!(
                    "{} and {} share an image",
                    source.label(i),
                    source.label(j)
                )));
            }
            if *target.distance(map.0[i], map.0[j]) != *source.dist(i, j) {
                return Err(EmbeddingError::Invalid(format!(
                    "distance ({},{}) not preserved",
                    source.label(i),
                    source.label(j)
                )));
            }
        }
    }
    for (p, sym) in source.signature().predicates().iter().enumerate() {
        for t in tuples(n, sym.arity) {
            if *target.predicate_at(p, &map.apply(&t)) != *source.value(p, &t) {
                return Err(EmbeddingError::Invalid(format!(
                    "predicate `{}` not preserved",
                    sym.name
                )));
            }
        }
    }
    for (c, &p) in source.constants().iter().enumerate() {
        if map.0[p] != target.constant_point(c) {
            return Err(EmbeddingError::Invalid(format!(
                "constant `{}` not preserved",
                source.signature().constants()[c]
            )));
        }
    }
    Ok(())
}

/// All embeddings of `source` into `target` in lexicographic order of the
/// image tuples, by backtracking over compatible partial maps.
pub fn enumerate_maps(
    source: &MetricStructure,
    target: &MetricStructure,
    cap: u64,
) -> Result<Vec<Embedding>, EmbeddingError> {
    if source.signature() != target.signature() {
        return Err(EmbeddingError::SignatureMismatch);
    }
    let n = source.len();
    // forced images of constant points
    let mut forced: Vec<Option<usize>> = vec![None; n];
    for (c, &p) in source.constants().iter().enumerate() {
        let t = target.constants()[c];
        match forced[p] {
            Some(prev) if prev != t => return Ok(Vec::new()),
            _ => forced[p] = Some(t),
        }
    }
    let mut search = Backtrack {
        source,
        target,
        forced,
        partial: Vec::with_capacity(n),
        used: vec![false; target.len()],
        out: Vec::new(),
        explored: 0,
        cap,
    };
    search.run()?;
    Ok(search.out)
}

struct Backtrack<'a> {
    source: &'a MetricStructure,
    target: &'a MetricStructure,
    forced: Vec<Option<usize>>,
    partial: Vec<usize>,
    used: Vec<bool>,
    out: Vec<Embedding>,
    explored: u64,
    cap: u64,
}

impl Backtrack<'_> {
    fn run(&mut self) -> Result<(), EmbeddingError> {
        let i = self.partial.len();
        if i == self.source.len() {
            self.out.push(Embedding(self.partial.clone()));
            return Ok(());
        }
        let candidates: Vec<usize> = match self.forced[i] {
            Some(t) => vec![t],
            None => (0..self.target.len()).collect(),
        };
        for t in candidates {
            self.explored += 1;
            if self.explored > self.cap {
                return Err(EmbeddingError::ResourceCap {
                    explored: self.explored,
                    cap: self.cap,
                });
            }
            if self.used[t] || !self.compatible(i, t) {
                continue;
            }
            self.used[t] = true;
            self.partial.push(t);
            self.run()?;
            self.partial.pop();
            self.used[t] = false;
        }
        Ok(())
    }

    fn compatible(&self, i: usize, t: usize) -> bool {
        for (j, &tj) in self.partial.iter().enumerate() {
            if self.target.dist(tj, t) != self.source.dist(j, i) {
                return false;
            }
        }
        let mut map = self.partial.clone();
        map.push(t);
        for (p, sym) in self.source.signature().predicates().iter().enumerate() {
            // tuples over 0..=i that mention i
            for tuple in tuples(i + 1, sym.arity) {
                if !tuple.contains(&i) {
                    continue;
                }
                let image: Vec<usize> = tuple.iter().map(|&k| map[k]).collect();
                if self.target.value(p, &image) != self.source.value(p, &tuple) {
                    return false;
                }
            }
        }
        true
    }
}

/// `Emb(A, B)` with the metric `ρ_ā` of the source's generator tuple.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    source: PointedStructure,
    target: MetricStructure,
    members: Vec<Embedding>,
    index: HashMap<Embedding, usize>,
}

impl EmbeddingSet {
    /// Wraps an explicit list; members are checked and deduplicated.
    pub fn from_members(
        source: PointedStructure,
        target: MetricStructure,
        members: Vec<Embedding>,
    ) -> Result<Self, EmbeddingError> {
        let mut kept = Vec::new();
        let mut index = HashMap::new();
        for m in members {
            check_embedding(source.structure(), &target, &m)?;
            if !index.contains_key(&m) {
                index.insert(m.clone(), kept.len());
                kept.push(m);
            }
        }
        Ok(EmbeddingSet {
            source,
            target,
            members: kept,
            index,
        })
    }

    pub fn source(&self) -> &PointedStructure {
        &self.source
    }

    pub fn target(&self) -> &MetricStructure {
        &self.target
    }

    pub fn members(&self) -> &[Embedding] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, i: usize) -> &Embedding {
        &self.members[i]
    }

    pub fn index_of(&self, e: &Embedding) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// `ρ_ā` between members `i` and `j`.
    pub fn rho(&self, i: usize, j: usize) -> Rational {
        rho_in(&self.source, &self.target, &self.members[i], &self.members[j])
    }

    /// Largest `ρ_ā` distance between members.
    pub fn diameter(&self) -> Rational {
        let mut best = Rational::zero();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let r = self.rho(i, j);
                if r > best {
                    best = r;
                }
            }
        }
        best
    }
}

pub fn enumerate_embeddings(a: &PointedStructure, b: &MetricStructure) -> Result<EmbeddingSet, EmbeddingError> {
    enumerate_embeddings_capped(a, b, DEFAULT_NODE_CAP)
}

pub fn enumerate_embeddings_capped(
    a: &PointedStructure,
    b: &MetricStructure,
    cap: u64,
) -> Result<EmbeddingSet, EmbeddingError> {
    let members = enumerate_maps(a.structure(), b, cap)?;
    let index = members.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    Ok(EmbeddingSet {
        source: a.clone(),
        target: b.clone(),
        members,
        index,
    })
}

/// `ρ_ā(α, β) = max_i d(α(a_i), β(a_i))`, zero for an empty tuple.
pub fn rho_in<T: Space + ?Sized>(
    source: &PointedStructure,
    target: &T,
    alpha: &Embedding,
    beta: &Embedding,
) -> Rational {
    source
        .generators()
        .iter()
        .map(|&g| target.distance(alpha.0[g], beta.0[g]).into_owned())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Checked variant of [`rho_in`].
pub fn rho<T: Space + ?Sized>(
    source: &PointedStructure,
    target: &T,
    alpha: &Embedding,
    beta: &Embedding,
) -> Result<Rational, EmbeddingError> {
    let n = source.structure().len();
    if alpha.len() != n || beta.len() != n {
        return Err(EmbeddingError::SourceMismatch);
    }
    let m = target.point_count();
    if alpha.0.iter().chain(&beta.0).any(|&t| t >= m) {
        return Err(EmbeddingError::SourceMismatch);
    }
    Ok(rho_in(source, target, alpha, beta))
}

/// `F(β) = {β ∘ δ : δ ∈ F}`, first occurrences kept in the order of `family`.
pub fn push_forward(family: &[Embedding], beta: &Embedding) -> Result<Vec<Embedding>, EmbeddingError> {
    let mut out: Vec<Embedding> = Vec::with_capacity(family.len());
    for delta in family {
        let c = beta.after(delta)?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// Largest pairwise gap among `values`.
pub fn spread<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    let mut it = values.into_iter();
    let first = it.next()?;
    let (mut lo, mut hi) = (first, first);
    for v in it {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    Some(hi - lo)
}

/// Oscillation of a coloring on a nonempty set of embeddings.
pub fn oscillation<G: EmbeddingColoring + ?Sized>(gamma: &G, set: &[Embedding]) -> Result<Rational, EmbeddingError> {
    let values = set
        .iter()
        .map(|e| gamma.color(e).ok_or(EmbeddingError::NotInDomain))
        .collect::<Result<Vec<_>, _>>()?;
    spread(&values).ok_or(EmbeddingError::EmptySet)
}

/// The automorphism group, identity first, then lexicographic.
pub fn automorphisms(b: &MetricStructure) -> Vec<Embedding> {
    automorphisms_capped(b, DEFAULT_NODE_CAP).expect("automorphism search exceeded the default cap")
}

pub fn automorphisms_capped(b: &MetricStructure, cap: u64) -> Result<Vec<Embedding>, EmbeddingError> {
    enumerate_maps(b, b, cap)
}
