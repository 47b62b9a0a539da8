//! Colorings of embedding sets and the exact approximate-Ramsey verifier.
//!
//! For an instance `(A, B, F, ε, C)` the verifier computes
//!
//! ```text
//! max over 1-Lipschitz γ: Emb(A,C) → [0,1] of  min over β ∈ Emb(B,C) of  osc(γ, F(β))
//! ```
//!
//! exactly. The inner oscillation is a maximum over ordered pairs, so the
//! problem is a disjunctive program: branching on which ordered pair of
//! `F(β)` realizes the oscillation for every `β` turns each leaf into an LP
//! over the Lipschitz polytope. LP relaxations of partial choices bound the
//! search, and the LP solution at every node is evaluated as a candidate
//! coloring to tighten the incumbent.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::embeddings::{
    check_embedding, enumerate_embeddings, enumerate_maps, oscillation, push_forward, rho_in, spread, Embedding,
    EmbeddingError, EmbeddingSet, DEFAULT_NODE_CAP,
};
use crate::rational::{fmt_rational, Rational};
use crate::ratlp::{self, Bounds, LinearProgram, LpError, Relation, Sense, VarId};
use crate::structures::{MetricStructure, PointedStructure};

/// Default number of LP nodes the worst-coloring search may solve.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

/// Environment variable overriding [`DEFAULT_NODE_BUDGET`].
pub const NODE_BUDGET_ENV: &str = "FRAISSE_NODE_BUDGET";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RamseyError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid coloring: {0}")]
    InvalidColoring(String),
    #[error("Emb(B, C) is empty")]
    NoEmbeddings,
    #[error("coloring domain is empty")]
    EmptyDomain,
    #[error("list lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("inconclusive after {nodes} nodes: worst value lies in [{}, {}]", fmt_rational(.lower), fmt_rational(.upper))]
    Inconclusive {
        lower: Rational,
        upper: Rational,
        nodes: u64,
    },
}

/// A 1-Lipschitz map from an embedding set (with its `ρ_ā` metric) to
/// `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Coloring {
    domain: Arc<EmbeddingSet>,
    values: Vec<Rational>,
}

impl Coloring {
    /// Checks range and the Lipschitz condition on all pairs.
    pub fn new(domain: Arc<EmbeddingSet>, values: Vec<Rational>) -> Result<Self, RamseyError> {
        if values.len() != domain.len() {
            return Err(RamseyError::LengthMismatch(values.len(), domain.len()));
        }
        if let Some(i) = values.iter().position(|v| v.is_negative() || v > &Rational::one()) {
            return Err(RamseyError::InvalidColoring(format!(
                "value {} outside [0,1]",
                fmt_rational(&values[i])
            )));
        }
        let c = Coloring { domain, values };
        if let Some((i, j)) = c.lipschitz_violations().first() {
            return Err(RamseyError::InvalidColoring(format!(
                "not 1-Lipschitz on members {i} and {j}"
            )));
        }
        Ok(c)
    }

    pub fn constant(domain: Arc<EmbeddingSet>, value: Rational) -> Result<Self, RamseyError> {
        let values = vec![value; domain.len()];
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &Arc<EmbeddingSet> {
        &self.domain
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Rational {
        &self.values[i]
    }

    pub fn value_of(&self, e: &Embedding) -> Option<&Rational> {
        self.domain.index_of(e).map(|i| &self.values[i])
    }

    /// Pairs `(i, j)`, `i < j`, with `|γ_i - γ_j| > ρ(i, j)`.
    pub fn lipschitz_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.values.len() {
            for j in i + 1..self.values.len() {
                if (&self.values[i] - &self.values[j]).abs() > self.domain.rho(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Anything assigning colors to embeddings; `None` outside the domain.
/// Lets huge domains be colored lazily.
pub trait EmbeddingColoring {
    fn color(&self, e: &Embedding) -> Option<Rational>;
}

impl EmbeddingColoring for Coloring {
    fn color(&self, e: &Embedding) -> Option<Rational> {
        self.value_of(e).cloned()
    }
}

/// An approximate-Ramsey instance: does `C` force every coloring of
/// `Emb(A, C)` to oscillate by at most `ε` on some copy `F(β)`?
#[derive(Debug, Clone)]
pub struct RamseyInstance {
    pub a: PointedStructure,
    pub b: MetricStructure,
    pub family: Vec<Embedding>,
    pub epsilon: Rational,
    pub c: MetricStructure,
}

impl RamseyInstance {
    pub fn new(
        a: PointedStructure,
        b: MetricStructure,
        family: Vec<Embedding>,
        epsilon: Rational,
        c: MetricStructure,
    ) -> Result<Self, RamseyError> {
        if family.is_empty() {
            return Err(RamseyError::InvalidInstance("F must be nonempty".into()));
        }
        if !epsilon.is_positive() {
            return Err(RamseyError::InvalidInstance("epsilon must be positive".into()));
        }
        if b.signature() != a.structure().signature() || c.signature() != b.signature() {
            return Err(RamseyError::InvalidInstance("A, B and C must share a signature".into()));
        }
        for (k, f) in family.iter().enumerate() {
            check_embedding(a.structure(), &b, f)?;
            if family[..k].contains(f) {
                return Err(RamseyError::InvalidInstance(format!(
                    "F member {k} repeats an earlier member"
                )));
            }
        }
        Ok(RamseyInstance {
            a,
            b,
            family,
            epsilon,
            c,
        })
    }
}

/// Value of the max-min problem; `Infinite` when `Emb(B, C)` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorstValue {
    Finite(Rational),
    Infinite,
}

impl WorstValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            WorstValue::Finite(r) => Some(r),
            WorstValue::Infinite => None,
        }
    }
}

impl std::fmt::Display for WorstValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorstValue::Finite(r) => f.write_str(&fmt_rational(r)),
            WorstValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifierReport {
    pub worst_value: WorstValue,
    /// Absent only when `Emb(B, C)` is empty.
    pub worst_coloring: Option<Coloring>,
    pub holds: bool,
    /// Best response to the worst coloring.
    pub best_beta: Option<Embedding>,
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub node_budget: u64,
    pub enumeration_cap: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_budget: DEFAULT_NODE_BUDGET,
            enumeration_cap: DEFAULT_NODE_CAP,
        }
    }
}

impl SearchConfig {
    /// Defaults, with the node budget taken from `FRAISSE_NODE_BUDGET` when
    /// it holds a positive integer.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        if let Some(b) = std::env::var(NODE_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
        {
            if b > 0 {
                c.node_budget = b;
            }
        }
        c
    }
}

/// The pieces of an instance the search works on: the domain `Emb(A, C)`,
/// all `β ∈ Emb(B, C)` and each `F(β)` as sorted domain indices.
struct Prepared {
    domain: Arc<EmbeddingSet>,
    betas: Vec<Embedding>,
    images: Vec<Vec<usize>>,
}

fn prepare(inst: &RamseyInstance, cfg: &SearchConfig) -> Result<Prepared, RamseyError> {
    let domain = Arc::new(crate::embeddings::enumerate_embeddings_capped(
        &inst.a,
        &inst.c,
        cfg.enumeration_cap,
    )?);
    let betas = enumerate_maps(&inst.b, &inst.c, cfg.enumeration_cap)?;
    let mut images = Vec::with_capacity(betas.len());
    for beta in &betas {
        let mut idx: Vec<usize> = push_forward(&inst.family, beta)?
            .iter()
            .map(|e| domain.index_of(e).expect("β∘α is an embedding of A into C"))
            .collect();
        idx.sort_unstable();
        images.push(idx);
    }
    Ok(Prepared { domain, betas, images })
}

/// Exact worst-case oscillation, with a coloring attaining it.
pub fn worst_coloring(inst: &RamseyInstance) -> Result<VerifierReport, RamseyError> {
    worst_coloring_with(inst, &SearchConfig::default())
}

pub fn worst_coloring_with(inst: &RamseyInstance, cfg: &SearchConfig) -> Result<VerifierReport, RamseyError> {
    let prep = prepare(inst, cfg)?;
    if prep.betas.is_empty() {
        return Ok(VerifierReport {
            worst_value: WorstValue::Infinite,
            worst_coloring: None,
            holds: false,
            best_beta: None,
            nodes_explored: 0,
        });
    }

    // Keep one β per distinct image set and drop sets containing another
    // set: a superset never gives the minimum.
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for s in &prep.images {
        if !sets.contains(s) {
            sets.push(s.clone());
        }
    }
    let minimal: Vec<Vec<usize>> = sets
        .iter()
        .filter(|s| {
            !sets
                .iter()
                .any(|t| t != *s && t.iter().all(|x| s.binary_search(x).is_ok()))
        })
        .cloned()
        .collect();

    let mut search = Search::new(&prep.domain, minimal, cfg.node_budget);
    let (value, values) = search.run()?;
    let gamma = Coloring::new(prep.domain.clone(), values)?;
    let (beta, achieved) = best_response(&gamma, &prep)?;
    debug_assert_eq!(achieved, value);
    Ok(VerifierReport {
        holds: value <= inst.epsilon,
        worst_value: WorstValue::Finite(value),
        worst_coloring: Some(gamma),
        best_beta: Some(beta),
        nodes_explored: search.nodes,
    })
}

/// `worst_value <= ε` (closed comparison).
pub fn check_arp_instance(inst: &RamseyInstance) -> Result<bool, RamseyError> {
    Ok(worst_coloring(inst)?.holds)
}

pub fn check_arp_instance_with(inst: &RamseyInstance, cfg: &SearchConfig) -> Result<bool, RamseyError> {
    Ok(worst_coloring_with(inst, cfg)?.holds)
}

fn best_response(gamma: &Coloring, prep: &Prepared) -> Result<(Embedding, Rational), RamseyError> {
    let mut best: Option<(usize, Rational)> = None;
    for (k, img) in prep.images.iter().enumerate() {
        let osc = spread(img.iter().map(|&i| gamma.value(i))).expect("F is nonempty");
        if best.as_ref().is_none_or(|(_, b)| osc < *b) {
            best = Some((k, osc));
        }
    }
    let (k, v) = best.ok_or(RamseyError::NoEmbeddings)?;
    Ok((prep.betas[k].clone(), v))
}

/// The `β ∈ Emb(B, C)` minimizing the oscillation of `γ` on `F(β)`; ties go
/// to the first in enumeration order.
pub fn best_beta(gamma: &Coloring, inst: &RamseyInstance) -> Result<(Embedding, Rational), RamseyError> {
    let dom = gamma.domain();
    if dom.source() != &inst.a || dom.target() != &inst.c {
        return Err(RamseyError::InvalidColoring(
            "domain is not Emb(A, C) of the instance".into(),
        ));
    }
    let betas = enumerate_maps(&inst.b, &inst.c, DEFAULT_NODE_CAP)?;
    let mut best: Option<(Embedding, Rational)> = None;
    for beta in betas {
        let image = push_forward(&inst.family, &beta)?;
        let osc = oscillation(gamma, &image)?;
        if best.as_ref().is_none_or(|(_, b)| osc < *b) {
            best = Some((beta, osc));
        }
    }
    best.ok_or(RamseyError::NoEmbeddings)
}

/// `γ(α) = min(1, ρ(α, S))` for a random nonempty subset `S` of the domain,
/// each member kept with probability 1/2. Deterministic per seed.
pub fn random_coloring(domain: Arc<EmbeddingSet>, seed: u64) -> Result<Coloring, RamseyError> {
    if domain.is_empty() {
        return Err(RamseyError::EmptyDomain);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subset = loop {
        let s: Vec<usize> = (0..domain.len()).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            break s;
        }
    };
    distance_coloring(domain, &subset)
}

/// `γ(α) = min(1, min_{s ∈ subset} ρ(α, s))`; 1-Lipschitz for any
/// nonempty subset.
pub fn distance_coloring(domain: Arc<EmbeddingSet>, subset: &[usize]) -> Result<Coloring, RamseyError> {
    if subset.is_empty() {
        return Err(RamseyError::InvalidColoring("empty anchor set".into()));
    }
    let one = Rational::one();
    let values = (0..domain.len())
        .map(|i| {
            let d = subset.iter().map(|&s| domain.rho(i, s)).min().expect("nonempty");
            std::cmp::min(d, one.clone())
        })
        .collect();
    Coloring::new(domain, values)
}

/// Whether `(B', α'_1..α'_m)` ε-approximates `(A, α_1..α_m)`: every pair
/// moves the generator tuple by at most `ε` in sup-distance. All maps are
/// embeddings of `A` into `bp`.
pub fn eps_approximates(
    bp: &MetricStructure,
    primes: &[Embedding],
    a: &PointedStructure,
    originals: &[Embedding],
    epsilon: &Rational,
) -> Result<bool, RamseyError> {
    if primes.len() != originals.len() {
        return Err(RamseyError::LengthMismatch(primes.len(), originals.len()));
    }
    let n = a.structure().len();
    for e in primes.iter().chain(originals) {
        if e.len() != n || e.map().iter().any(|&t| t >= bp.len()) {
            return Err(EmbeddingError::SourceMismatch.into());
        }
    }
    Ok(primes
        .iter()
        .zip(originals)
        .all(|(p, o)| &rho_in(a, bp, p, o) <= epsilon))
}

/// `Emb(A, C)` as shared coloring domain.
pub fn coloring_domain(a: &PointedStructure, c: &MetricStructure) -> Result<Arc<EmbeddingSet>, RamseyError> {
    Ok(Arc::new(enumerate_embeddings(a, c)?))
}

struct Search<'a> {
    domain: &'a EmbeddingSet,
    sets: Vec<Vec<usize>>,
    /// domain indices appearing in some set, in increasing order
    support: Vec<usize>,
    budget: u64,
    nodes: u64,
    incumbent: Rational,
    incumbent_values: Vec<Rational>,
    root_bound: Option<Rational>,
}

impl<'a> Search<'a> {
    fn new(domain: &'a EmbeddingSet, sets: Vec<Vec<usize>>, budget: u64) -> Self {
        let mut support: Vec<usize> = sets.iter().flatten().copied().collect();
        support.sort_unstable();
        support.dedup();
        Search {
            domain,
            sets,
            support,
            budget,
            nodes: 0,
            incumbent: Rational::zero(),
            incumbent_values: vec![Rational::zero(); domain.len()],
            root_bound: None,
        }
    }

    fn run(&mut self) -> Result<(Rational, Vec<Rational>), RamseyError> {
        if self.sets.iter().any(|s| s.len() < 2) {
            return Ok((Rational::zero(), vec![Rational::zero(); self.domain.len()]));
        }
        let mut chosen = Vec::with_capacity(self.sets.len());
        self.explore(&mut chosen)?;
        Ok((self.incumbent.clone(), self.incumbent_values.clone()))
    }

    /// Ordered pairs of a set, largest `ρ` first. The first set only needs
    /// unordered pairs: `γ ↦ 1 - γ` reverses every pair and preserves
    /// oscillations.
    fn pairs(&self, depth: usize) -> Vec<(usize, usize)> {
        let s = &self.sets[depth];
        let mut out = Vec::new();
        for &u in s {
            for &v in s {
                if u != v && (depth > 0 || u < v) {
                    out.push((u, v));
                }
            }
        }
        let mut keyed: Vec<(Rational, (usize, usize))> =
            out.into_iter().map(|p| (self.domain.rho(p.0, p.1), p)).collect();
        keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, p)| p).collect()
    }

    fn explore(&mut self, chosen: &mut Vec<(usize, usize)>) -> Result<(), RamseyError> {
        if self.nodes >= self.budget {
            return Err(RamseyError::Inconclusive {
                lower: self.incumbent.clone(),
                upper: self.root_bound.clone().unwrap_or_else(Rational::one),
                nodes: self.nodes,
            });
        }
        self.nodes += 1;
        let (bound, values) = self.relaxation(chosen)?;
        if self.root_bound.is_none() {
            self.root_bound = Some(bound.clone());
        }
        // the relaxation's coloring is feasible: its true value is a lower bound
        let actual = self
            .sets
            .iter()
            .map(|s| spread(s.iter().map(|&i| &values[i])).expect("nonempty"))
            .min()
            .expect("at least one set");
        if actual > self.incumbent {
            self.incumbent = actual;
            self.incumbent_values = values;
        }
        if bound <= self.incumbent || chosen.len() == self.sets.len() {
            return Ok(());
        }
        for pair in self.pairs(chosen.len()) {
            chosen.push(pair);
            let r = self.explore(chosen);
            chosen.pop();
            r?;
        }
        Ok(())
    }

    /// Maximizes `t` subject to the Lipschitz polytope and
    /// `γ_u - γ_v >= t` for every chosen pair. Returns the bound and the
    /// optimal coloring extended to the whole domain.
    fn relaxation(&self, chosen: &[(usize, usize)]) -> Result<(Rational, Vec<Rational>), RamseyError> {
        let mut lp = LinearProgram::new();
        let unit = || Bounds::between(Rational::zero(), Rational::one());
        let vars: Vec<VarId> = self
            .support
            .iter()
            .map(|i| lp.var_with(format!("g{i}"), unit()))
            .collect();
        let t = lp.var_with("t", unit());
        let pos = |i: usize| self.support.binary_search(&i).expect("support member");
        let one = Rational::one;
        for (a, &u) in self.support.iter().enumerate() {
            for (b, &v) in self.support.iter().enumerate() {
                if a == b {
                    continue;
                }
                let r = self.domain.rho(u, v);
                if r < one() {
                    lp.constrain(vec![(vars[a], one()), (vars[b], -one())], Relation::Le, r);
                }
            }
        }
        for &(u, v) in chosen {
            lp.constrain(
                vec![(vars[pos(u)], one()), (vars[pos(v)], -one()), (t, -one())],
                Relation::Ge,
                Rational::zero(),
            );
        }
        lp.set_objective(Sense::Maximize, vec![(t, one())]);
        let out = ratlp::solve(&lp)?;
        let asg = out.assignment.expect("the zero coloring is always feasible");
        let bound = asg[t.0].clone();
        let on_support: Vec<Rational> = vars.iter().map(|v| asg[v.0].clone()).collect();
        Ok((bound, self.extend(&on_support)))
    }

    /// McShane extension `min(1, min_u γ(u) + ρ(·, u))` off the support.
    fn extend(&self, on_support: &[Rational]) -> Vec<Rational> {
        (0..self.domain.len())
            .map(|i| match self.support.binary_search(&i) {
                Ok(k) => on_support[k].clone(),
                Err(_) => {
                    let m = self
                        .support
                        .iter()
                        .zip(on_support)
                        .map(|(&u, g)| g + self.domain.rho(i, u))
                        .min()
                        .unwrap_or_else(Rational::zero);
                    std::cmp::min(m, Rational::one())
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn point() -> PointedStructure {
        PointedStructure::whole(MetricStructure::metric_space(["a"], vec![vec![int(0)]]).unwrap())
    }

    fn pair(d: Rational) -> MetricStructure {
        MetricStructure::metric_space(["x", "y"], vec![vec![int(0), d.clone()], vec![d, int(0)]]).unwrap()
    }

    fn two_point_instance(eps: Rational) -> RamseyInstance {
        let b = pair(int(1));
        let family = vec![Embedding::new(vec![0]), Embedding::new(vec![1])];
        RamseyInstance::new(point(), b.clone(), family, eps, b).unwrap()
    }

    #[test]
    fn singleton_family_has_zero_worst_value() {
        let b = pair(int(1));
        let inst = RamseyInstance::new(point(), b.clone(), vec![Embedding::new(vec![0])], ratio(1, 10), b).unwrap();
        let r = worst_coloring(&inst).unwrap();
        assert_eq!(r.worst_value, WorstValue::Finite(int(0)));
        assert!(r.holds);
    }

    #[test]
    fn two_point_instance_is_one() {
        let r = worst_coloring(&two_point_instance(ratio(1, 2))).unwrap();
        assert_eq!(r.worst_value, WorstValue::Finite(int(1)));
        assert!(!r.holds);
        let g = r.worst_coloring.unwrap();
        assert_eq!(spread(g.values()), Some(int(1)));
    }

    #[test]
    fn small_rho_diameter_bounds_worst_value() {
        // B at distance 1/8 inside C: any coloring moves by at most 1/8
        let b = pair(ratio(1, 8));
        let family = vec![Embedding::new(vec![0]), Embedding::new(vec![1])];
        let inst = RamseyInstance::new(point(), b.clone(), family, ratio(1, 4), b).unwrap();
        let r = worst_coloring(&inst).unwrap();
        assert_eq!(r.worst_value, WorstValue::Finite(ratio(1, 8)));
        assert!(check_arp_instance(&inst).unwrap());
    }

    #[test]
    fn closed_comparison_at_epsilon() {
        let b = pair(ratio(1, 2));
        let family = vec![Embedding::new(vec![0]), Embedding::new(vec![1])];
        let inst = RamseyInstance::new(point(), b.clone(), family, ratio(1, 2), b).unwrap();
        assert!(check_arp_instance(&inst).unwrap());
    }

    #[test]
    fn empty_emb_b_c_is_infinite() {
        let b = pair(int(1));
        let c = pair(int(2));
        let family = vec![Embedding::new(vec![0])];
        let inst = RamseyInstance::new(point(), b, family, ratio(1, 2), c).unwrap();
        let r = worst_coloring(&inst).unwrap();
        assert_eq!(r.worst_value, WorstValue::Infinite);
        assert!(!r.holds);
    }

    #[test]
    fn budget_overrun_is_inconclusive() {
        let cfg = SearchConfig {
            node_budget: 1,
            ..SearchConfig::default()
        };
        let tri = MetricStructure::metric_space(
            ["x", "y", "z"],
            vec![
                vec![int(0), int(1), int(1)],
                vec![int(1), int(0), int(1)],
                vec![int(1), int(1), int(0)],
            ],
        )
        .unwrap();
        let family = vec![
            Embedding::new(vec![0]),
            Embedding::new(vec![1]),
            Embedding::new(vec![2]),
        ];
        let inst = RamseyInstance::new(point(), tri.clone(), family, ratio(1, 2), tri).unwrap();
        let err = worst_coloring_with(&inst, &cfg).unwrap_err();
        assert!(matches!(err, RamseyError::Inconclusive { .. }), "{err}");
    }

    #[test]
    fn best_beta_on_constant_coloring() {
        let inst = two_point_instance(ratio(1, 2));
        let dom = coloring_domain(&inst.a, &inst.c).unwrap();
        let g = Coloring::constant(dom, ratio(1, 3)).unwrap();
        let (beta, v) = best_beta(&g, &inst).unwrap();
        assert_eq!(beta, Embedding::new(vec![0, 1]));
        assert_eq!(v, int(0));
    }

    #[test]
    fn coloring_rejects_non_lipschitz() {
        let dom = coloring_domain(&point(), &pair(ratio(1, 2))).unwrap();
        assert!(Coloring::new(dom.clone(), vec![int(0), int(1)]).is_err());
        assert!(Coloring::new(dom.clone(), vec![int(0), int(2)]).is_err());
        assert!(Coloring::new(dom, vec![int(0)]).is_err());
    }

    #[test]
    fn random_coloring_properties() {
        let dom = coloring_domain(&point(), &pair(ratio(1, 2))).unwrap();
        let a = random_coloring(dom.clone(), 7).unwrap();
        let b = random_coloring(dom.clone(), 7).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.lipschitz_violations().is_empty());
        let all = distance_coloring(dom.clone(), &[0, 1]).unwrap();
        assert!(all.values().iter().all(|v| v.is_zero()));
        assert!(distance_coloring(dom, &[]).is_err());
    }

    #[test]
    fn eps_approximation_is_closed() {
        let bp = pair(ratio(1, 2));
        let a = point();
        let p = vec![Embedding::new(vec![0])];
        let o = vec![Embedding::new(vec![1])];
        assert!(eps_approximates(&bp, &p, &a, &p, &int(0)).unwrap());
        assert!(!eps_approximates(&bp, &p, &a, &o, &ratio(1, 4)).unwrap());
        assert!(eps_approximates(&bp, &p, &a, &o, &ratio(1, 2)).unwrap());
        assert!(eps_approximates(&bp, &p, &a, &[], &int(1)).is_err());
    }

    #[test]
    fn instance_validation() {
        let b = pair(int(1));
        assert!(RamseyInstance::new(point(), b.clone(), vec![], int(1), b.clone()).is_err());
        let f = vec![Embedding::new(vec![0]), Embedding::new(vec![0])];
        assert!(RamseyInstance::new(point(), b.clone(), f, int(1), b.clone()).is_err());
        let f = vec![Embedding::new(vec![0])];
        assert!(RamseyInstance::new(point(), b.clone(), f, int(0), b).is_err());
    }
}
