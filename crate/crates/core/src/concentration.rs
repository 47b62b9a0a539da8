//! ℓ1 powers, finite automorphism groups with their bi-invariant metric,
//! the concentration exponent, the witness pipeline built on it, empirical
//! concentration runs and brute-force extension-property search.

use std::borrow::Cow;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::embeddings::{
    check_embedding, enumerate_maps, oscillation, rho_in, Embedding, EmbeddingError, DEFAULT_NODE_CAP,
};
use crate::ramsey::{eps_approximates, EmbeddingColoring, RamseyError};
use crate::rational::{floor_int, fmt_rational, int, to_f64, Rational};
use crate::structures::{validate, MetricStructure, PointedStructure, Signature, Space, StructureError};

/// Largest power materialized by [`l1_power`].
pub const DEFAULT_POWER_CAP: usize = 4096;
/// Largest group [`group_closure`] builds.
pub const DEFAULT_GROUP_CAP: usize = 10_000;
/// `|H|^n` up to which exhaustive enumeration of `Hⁿ` is used.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConcentrationError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Ramsey(#[from] RamseyError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{what} has size {size}, over the cap {cap}")]
    ResourceCap { what: &'static str, size: u128, cap: u128 },
    #[error("map #{0} is not an automorphism")]
    NotAutomorphism(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no witness after {samples} samples; best oscillation {}", fmt_rational(.best))]
    NoWitness { best: Rational, samples: u64 },
    #[error("no extension found: {0}")]
    NotFound(EppaStats),
}

/// `Bⁿ` with the normalized ℓ1 metric, computed on demand. Points are
/// indexed in mixed radix, first coordinate most significant.
#[derive(Debug, Clone)]
pub struct PowerSpace {
    base: MetricStructure,
    n: usize,
    size: usize,
    scale: Rational,
}

impl PowerSpace {
    pub fn new(base: MetricStructure, n: usize) -> Result<Self, ConcentrationError> {
        if n == 0 {
            return Err(ConcentrationError::Parameter(
                "power exponent must be at least 1".into(),
            ));
        }
        if !base.signature().is_unary() {
            return Err(ConcentrationError::Unsupported(
                "ℓ1 powers need a unary signature".into(),
            ));
        }
        if base.is_empty() {
            return Err(ConcentrationError::Parameter("empty base".into()));
        }
        let size =
            u32::try_from(n)
                .ok()
                .and_then(|e| base.len().checked_pow(e))
                .ok_or(ConcentrationError::ResourceCap {
                    what: "power",
                    size: u128::MAX,
                    cap: usize::MAX as u128,
                })?;
        Ok(PowerSpace {
            base,
            n,
            size,
            scale: Rational::new(BigInt::one(), BigInt::from(n)),
        })
    }

    pub fn base(&self) -> &MetricStructure {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let m = self.base.len();
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = idx % m;
            idx /= m;
        }
        out
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        let m = self.base.len();
        coords.iter().fold(0, |acc, &c| acc * m + c)
    }

    fn coordinate_sum(&self, i: usize, j: usize) -> Rational {
        let (a, b) = (self.coords(i), self.coords(j));
        a.iter().zip(&b).map(|(&x, &y)| self.base.dist(x, y)).sum()
    }

    /// Builds the full structure, refusing more than `cap` points.
    pub fn materialize(&self, cap: usize) -> Result<MetricStructure, ConcentrationError> {
        if self.size > cap {
            return Err(ConcentrationError::ResourceCap {
                what: "power",
                size: self.size as u128,
                cap: cap as u128,
            });
        }
        let labels = (0..self.size).map(|i| self.point_label(i)).collect();
        let dist = (0..self.size)
            .map(|i| (0..self.size).map(|j| self.distance(i, j).into_owned()).collect())
            .collect();
        let tables = (0..self.base.signature().predicates().len())
            .map(|p| {
                (0..self.size)
                    .map(|i| self.predicate_at(p, &[i]).into_owned())
                    .collect()
            })
            .collect();
        let constants = (0..self.base.constants().len())
            .map(|c| self.constant_point(c))
            .collect();
        Ok(MetricStructure::from_parts(
            self.base.signature().clone(),
            labels,
            dist,
            tables,
            constants,
        )?)
    }

    /// `x ↦ (g_1(x), …, g_n(x))`.
    pub fn diagonal(&self, gs: &[&Embedding]) -> Result<Embedding, ConcentrationError> {
        if gs.len() != self.n {
            return Err(ConcentrationError::Parameter(format!(
                "{} maps for a power of {}",
                gs.len(),
                self.n
            )));
        }
        for (k, g) in gs.iter().enumerate() {
            if check_embedding(&self.base, &self.base, g).is_err() {
                return Err(ConcentrationError::NotAutomorphism(k));
            }
        }
        Ok(Embedding::new(
            (0..self.base.len())
                .map(|x| self.index(&gs.iter().map(|g| g.image(x)).collect::<Vec<_>>()))
                .collect(),
        ))
    }
}

impl Space for PowerSpace {
    fn signature(&self) -> &Signature {
        self.base.signature()
    }

    fn point_count(&self) -> usize {
        self.size
    }

    fn distance(&self, i: usize, j: usize) -> Cow<'_, Rational> {
        Cow::Owned(self.coordinate_sum(i, j) * &self.scale)
    }

    fn predicate_at(&self, predicate: usize, tuple: &[usize]) -> Cow<'_, Rational> {
        let s: Rational = self
            .coords(tuple[0])
            .iter()
            .map(|&x| self.base.unary(predicate, x))
            .sum();
        Cow::Owned(s * &self.scale)
    }

    fn constant_point(&self, constant: usize) -> usize {
        self.index(&vec![self.base.constants()[constant]; self.n])
    }

    fn point_label(&self, i: usize) -> String {
        let parts: Vec<&str> = self.coords(i).iter().map(|&x| self.base.label(x)).collect();
        format!("({})", parts.join(","))
    }
}

/// A materialized ℓ1 power.
#[derive(Debug, Clone)]
pub struct PowerStructure {
    pub base: MetricStructure,
    pub n: usize,
    pub structure: MetricStructure,
}

pub fn l1_power(b: &MetricStructure, n: usize) -> Result<PowerStructure, ConcentrationError> {
    l1_power_capped(b, n, DEFAULT_POWER_CAP)
}

pub fn l1_power_capped(b: &MetricStructure, n: usize, cap: usize) -> Result<PowerStructure, ConcentrationError> {
    let space = PowerSpace::new(b.clone(), n)?;
    let structure = space.materialize(cap)?;
    let diags = validate(&structure);
    if !diags.is_empty() {
        return Err(StructureError::Invalid(diags).into());
    }
    Ok(PowerStructure {
        base: b.clone(),
        n,
        structure,
    })
}

/// The diagonal of `gs` as an embedding of `b` into `l1_power(b, gs.len())`.
pub fn diagonal_embedding(b: &MetricStructure, gs: &[Embedding]) -> Result<Embedding, ConcentrationError> {
    let space = PowerSpace::new(b.clone(), gs.len())?;
    space.diagonal(&gs.iter().collect::<Vec<_>>())
}

/// A finite group of automorphisms of a carrier, with the metric
/// `δ(h1, h2) = max_{h ∈ H} d(h1 h(b̄), h2 h(b̄))`.
#[derive(Debug, Clone)]
pub struct GroupAction {
    carrier: MetricStructure,
    elements: Vec<Embedding>,
    index: HashMap<Embedding, usize>,
    generators: Vec<usize>,
    base_tuple: Vec<usize>,
    /// union of the H-orbits of the base tuple
    orbit: Vec<usize>,
    /// `right[i][h]` is the index of `h ∘ g_i`
    right: Vec<Vec<usize>>,
}

pub fn group_closure(b: &MetricStructure, generators: &[Embedding]) -> Result<GroupAction, ConcentrationError> {
    group_closure_with(b, generators, &(0..b.len()).collect::<Vec<_>>(), DEFAULT_GROUP_CAP)
}

/// Breadth-first closure under right multiplication by the generators,
/// identity first.
pub fn group_closure_with(
    b: &MetricStructure,
    generators: &[Embedding],
    base_tuple: &[usize],
    cap: usize,
) -> Result<GroupAction, ConcentrationError> {
    for (k, g) in generators.iter().enumerate() {
        if check_embedding(b, b, g).is_err() {
            return Err(ConcentrationError::NotAutomorphism(k));
        }
    }
    if let Some(&p) = base_tuple.iter().find(|&&p| p >= b.len()) {
        return Err(ConcentrationError::IndexOutOfRange { index: p, len: b.len() });
    }
    let mut elements = vec![Embedding::identity(b.len())];
    let mut index: HashMap<Embedding, usize> = HashMap::from([(elements[0].clone(), 0)]);
    let mut next = 0;
    while next < elements.len() {
        for g in generators {
            let p = elements[next].after(g)?;
            if !index.contains_key(&p) {
                if elements.len() >= cap {
                    return Err(ConcentrationError::ResourceCap {
                        what: "group",
                        size: elements.len() as u128 + 1,
                        cap: cap as u128,
                    });
                }
                index.insert(p.clone(), elements.len());
                elements.push(p);
            }
        }
        next += 1;
    }
    let gens: Vec<usize> = generators.iter().map(|g| index[g]).collect();
    let right = generators
        .iter()
        .map(|g| {
            elements
                .iter()
                .map(|h| index[&h.after(g).expect("same carrier")])
                .collect()
        })
        .collect();
    let mut seen = vec![false; b.len()];
    for &p in base_tuple {
        for h in &elements {
            seen[h.image(p)] = true;
        }
    }
    let orbit = (0..b.len()).filter(|&p| seen[p]).collect();
    Ok(GroupAction {
        carrier: b.clone(),
        elements,
        index,
        generators: gens,
        base_tuple: base_tuple.to_vec(),
        orbit,
        right,
    })
}

impl GroupAction {
    pub fn carrier(&self) -> &MetricStructure {
        &self.carrier
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Embedding] {
        &self.elements
    }

    pub fn element(&self, h: usize) -> &Embedding {
        &self.elements[h]
    }

    pub fn index_of(&self, e: &Embedding) -> Option<usize> {
        self.index.get(e).copied()
    }

    /// Element indices of `g_1..g_k`.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn base_tuple(&self) -> &[usize] {
        &self.base_tuple
    }

    /// Index of `a ∘ b`.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.index[&self.elements[a].after(&self.elements[b]).expect("same carrier")]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.index[&self.elements[a].inverse()]
    }

    /// Every `h(b_j)` ranges over the orbits of the base points, so the
    /// maximum over `h` reduces to a maximum over those orbits.
    pub fn delta(&self, a: usize, b: usize) -> Rational {
        let (x, y) = (&self.elements[a], &self.elements[b]);
        self.orbit
            .iter()
            .map(|&p| self.carrier.dist(x.image(p), y.image(p)))
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn delta_table(&self) -> Vec<Vec<Rational>> {
        (0..self.order())
            .map(|a| (0..self.order()).map(|b| self.delta(a, b)).collect())
            .collect()
    }

    /// `max_h δ(h, e)`, which by invariance is the diameter of `(H, δ)`.
    pub fn diameter(&self) -> Rational {
        (0..self.order())
            .map(|h| self.delta(h, 0))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Normalized ℓ1 metric on `Hⁿ`.
    pub fn delta_n(&self, a: &[usize], b: &[usize]) -> Rational {
        let s: Rational = a.iter().zip(b).map(|(&x, &y)| self.delta(x, y)).sum();
        s / int(a.len().max(1) as i64)
    }

    /// `Θ_i(h̄) = (h_1 g_i, …, h_n g_i)`, `i` counted from 0.
    pub fn theta(&self, i: usize, hs: &[usize]) -> Result<Vec<usize>, ConcentrationError> {
        let table = self.right.get(i).ok_or(ConcentrationError::IndexOutOfRange {
            index: i,
            len: self.generators.len(),
        })?;
        hs.iter()
            .map(|&h| {
                table.get(h).copied().ok_or(ConcentrationError::IndexOutOfRange {
                    index: h,
                    len: self.order(),
                })
            })
            .collect()
    }

    /// `|H|^n`, saturating.
    pub fn power_size(&self, n: usize) -> u128 {
        (0..n).fold(1u128, |acc, _| acc.saturating_mul(self.order() as u128))
    }
}

/// Uniform element of `Hⁿ`; the stream depends only on the seed.
pub fn sample_haar(group: &GroupAction, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw(group.order(), n, &mut rng)
}

fn draw(order: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..order)).collect()
}

// Certified logarithms: ln y = 2 atanh((y-1)/(y+1)) with the alternating-free
// series sum and a geometric tail bound.

fn atanh_bounds(z: &Rational, terms: usize) -> (Rational, Rational) {
    let z2 = z * z;
    let mut pow = z.clone();
    let mut sum = Rational::zero();
    for j in 0..terms {
        sum += &pow / int(2 * j as i64 + 1);
        pow = &pow * &z2;
    }
    let tail = &pow / (int(2 * terms as i64 + 1) * (Rational::one() - &z2));
    (sum.clone(), sum + tail)
}

/// `lo <= ln(m) <= hi` for an integer `m >= 1`.
pub fn ln_bounds(m: u64, terms: usize) -> (Rational, Rational) {
    assert!(m >= 1, "logarithm of zero");
    let e = 63 - m.leading_zeros() as i64;
    let r = Rational::new(BigInt::from(m), BigInt::from(2u8).pow(e as u32));
    let (l2lo, l2hi) = atanh_bounds(&Rational::new(1.into(), 3.into()), terms);
    let z = (&r - Rational::one()) / (&r + Rational::one());
    let (rlo, rhi) = atanh_bounds(&z, terms);
    let two = int(2);
    (&two * (int(e) * l2lo + rlo), &two * (int(e) * l2hi + rhi))
}

fn check_params(diam: &Rational, epsilon: &Rational, k: u64) -> Result<u64, ConcentrationError> {
    if !diam.is_positive() || !epsilon.is_positive() || k == 0 {
        return Err(ConcentrationError::Parameter(
            "need diam > 0, epsilon > 0 and k >= 1".into(),
        ));
    }
    k.checked_mul(2)
        .ok_or_else(|| ConcentrationError::Parameter("k too large".into()))
}

const MAX_TERMS: usize = 1 << 14;

/// Least `n` with `2·exp(-2nε²/diam²) < 1/k`, i.e. `n > diam²·ln(2k)/(2ε²)`.
pub fn concentration_n(diam: &Rational, epsilon: &Rational, k: u64) -> Result<u64, ConcentrationError> {
    let two_k = check_params(diam, epsilon, k)?;
    let coef = diam * diam / (int(2) * epsilon * epsilon);
    let mut terms = 8;
    while terms <= MAX_TERMS {
        let (lo, hi) = ln_bounds(two_k, terms);
        let (flo, fhi) = (floor_int(&(&coef * lo)), floor_int(&(&coef * hi)));
        if flo == fhi {
            return (flo + BigInt::one())
                .to_u64()
                .ok_or_else(|| ConcentrationError::Parameter("n does not fit in 64 bits".into()));
        }
        terms *= 2;
    }
    Err(ConcentrationError::Parameter("could not certify the ceiling".into()))
}

/// Whether `2·exp(-2nε²/diam²) < 1/k`, decided with certified bounds.
pub fn tail_below(diam: &Rational, epsilon: &Rational, k: u64, n: u64) -> Result<bool, ConcentrationError> {
    let two_k = check_params(diam, epsilon, k)?;
    let lhs = int(n as i64) * int(2) * epsilon * epsilon / (diam * diam);
    let mut terms = 8;
    while terms <= MAX_TERMS {
        let (lo, hi) = ln_bounds(two_k, terms);
        if lhs > hi {
            return Ok(true);
        }
        if lhs <= lo {
            return Ok(false);
        }
        terms *= 2;
    }
    Err(ConcentrationError::Parameter("could not certify the comparison".into()))
}

/// `min(1, 2·exp(-2nε²/diam²))`.
pub fn deviation_bound(diam: &Rational, epsilon: &Rational, n: usize) -> f64 {
    let (d, e) = (to_f64(diam), to_f64(epsilon));
    if d == 0.0 {
        return 0.0;
    }
    (2.0 * (-2.0 * n as f64 * e * e / (d * d)).exp()).min(1.0)
}

/// The result of [`find_witness`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// `β: B' → Bⁿ`, the diagonal of `hs`.
    pub beta: Embedding,
    pub hs: Vec<usize>,
    /// Exact oscillation of γ over `{β ∘ g_i ∘ ι}`.
    pub oscillation: Rational,
    pub samples: u64,
    pub exhaustive: bool,
}

/// `{β ∘ g_i ∘ ι : i ≤ k}` for the diagonal `β` of `hs`.
pub fn witness_family(
    group: &GroupAction,
    space: &PowerSpace,
    iota: &Embedding,
    hs: &[usize],
) -> Result<(Embedding, Vec<Embedding>), ConcentrationError> {
    let maps: Vec<&Embedding> = hs.iter().map(|&h| group.element(h)).collect();
    let beta = space.diagonal(&maps)?;
    let family = group
        .generators()
        .iter()
        .map(|&g| beta.after(&group.element(g).after(iota)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((beta, family))
}

/// Samples `h̄` uniformly from `Hⁿ` and returns the first diagonal `β`
/// whose oscillation over `{β ∘ g_i ∘ ι}` is at most `2ε`. When `budget`
/// samples fail and `|H|ⁿ <= 10^4`, all of `Hⁿ` is searched.
#[allow(clippy::too_many_arguments)]
pub fn find_witness<G: EmbeddingColoring + ?Sized>(
    gamma: &G,
    a: &PointedStructure,
    iota: &Embedding,
    group: &GroupAction,
    space: &PowerSpace,
    epsilon: &Rational,
    budget: u64,
    seed: u64,
) -> Result<Witness, ConcentrationError> {
    if space.base().labels() != group.carrier().labels() || space.base().dist_rows() != group.carrier().dist_rows() {
        return Err(ConcentrationError::Parameter(
            "power base differs from the group carrier".into(),
        ));
    }
    check_embedding(a.structure(), group.carrier(), iota)?;
    let k = group.generators().len();
    if k == 0 {
        return Err(ConcentrationError::Parameter("no generators".into()));
    }
    let diam = group.diameter();
    if diam.is_positive() {
        let need = concentration_n(&diam, epsilon, k as u64)?;
        if (space.n() as u64) < need {
            return Err(ConcentrationError::Parameter(format!(
                "power n = {} is below the concentration exponent {need}",
                space.n()
            )));
        }
    }
    let target = epsilon * int(2);
    let mut best: Option<Rational> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tried = 0u64;
    let mut attempt = |hs: Vec<usize>, exhaustive: bool, tried: u64| -> Result<Option<Witness>, ConcentrationError> {
        let (beta, family) = witness_family(group, space, iota, &hs)?;
        let osc = oscillation(gamma, &family)?;
        if osc <= target {
            check_embedding(group.carrier(), space, &beta)?;
            return Ok(Some(Witness {
                beta,
                hs,
                oscillation: osc,
                samples: tried,
                exhaustive,
            }));
        }
        if best.as_ref().is_none_or(|b| osc < *b) {
            best = Some(osc);
        }
        Ok(None)
    };
    while tried < budget {
        tried += 1;
        let hs = draw(group.order(), space.n(), &mut rng);
        if let Some(w) = attempt(hs, false, tried)? {
            return Ok(w);
        }
    }
    if group.power_size(space.n()) <= EXHAUSTIVE_LIMIT {
        let total = group.power_size(space.n()) as usize;
        for idx in 0..total {
            tried += 1;
            let mut hs = vec![0; space.n()];
            let mut rest = idx;
            for slot in hs.iter_mut().rev() {
                *slot = rest % group.order();
                rest /= group.order();
            }
            if let Some(w) = attempt(hs, true, tried)? {
                return Ok(w);
            }
        }
    }
    Err(ConcentrationError::NoWitness {
        best: best.unwrap_or_else(Rational::zero),
        samples: tried,
    })
}

/// `γ(α) = min(1, ρ(α, S))` on `Emb(A, Bⁿ)` for a one-point `A`, where
/// `S` is a uniform nonempty subset of the domain. Membership of each
/// point is read from a seeded ChaCha stream at the point's index, so the
/// domain is never materialized; nearest members are found by growing
/// Hamming spheres.
#[derive(Debug, Clone)]
pub struct SubsetColoring<'a> {
    a: &'a PointedStructure,
    space: &'a PowerSpace,
    seed: u64,
    stream: u64,
    min_step: Rational,
}

impl<'a> SubsetColoring<'a> {
    pub fn new(a: &'a PointedStructure, space: &'a PowerSpace, seed: u64) -> Result<Self, ConcentrationError> {
        if a.structure().len() != 1 {
            return Err(ConcentrationError::Unsupported(
                "lazy subset colorings need a one-point A".into(),
            ));
        }
        if a.structure().signature() != space.signature() {
            return Err(EmbeddingError::SignatureMismatch.into());
        }
        let base = space.base();
        let mut min = None::<Rational>;
        for i in 0..base.len() {
            for j in i + 1..base.len() {
                let d = base.dist(i, j);
                if d.is_positive() && min.as_ref().is_none_or(|m| d < m) {
                    min = Some(d.clone());
                }
            }
        }
        let min_step = min.map(|m| m / int(space.n() as i64)).unwrap_or_else(Rational::one);
        let mut c = SubsetColoring {
            a,
            space,
            seed,
            stream: 0,
            min_step,
        };
        // redraw the subset until it is nonempty
        loop {
            if (0..space.len()).any(|p| c.in_domain(p) && c.member(p)) {
                return Ok(c);
            }
            if (0..space.len()).all(|p| !c.in_domain(p)) {
                return Err(RamseyError::EmptyDomain.into());
            }
            c.stream += 1;
        }
    }

    fn in_domain(&self, p: usize) -> bool {
        check_embedding(self.a.structure(), self.space, &Embedding::new(vec![p])).is_ok()
    }

    pub fn member(&self, p: usize) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(p as u128);
        rng.next_u32() & 1 == 1
    }

    fn value_at(&self, p: usize) -> Rational {
        let n = self.space.n();
        let m = self.space.base().len();
        let centre = self.space.coords(p);
        let mut best: Option<Rational> = None;
        for r in 0..=n {
            let floor = &self.min_step * int(r as i64);
            if floor >= Rational::one() || best.as_ref().is_some_and(|b| *b <= floor) {
                break;
            }
            for positions in combinations(n, r) {
                let mut choice = vec![1usize; r];
                loop {
                    let mut q = centre.clone();
                    for (slot, &pos) in positions.iter().enumerate() {
                        q[pos] = (centre[pos] + choice[slot]) % m;
                    }
                    let qi = self.space.index(&q);
                    if self.member(qi) && self.in_domain(qi) {
                        let d = self.space.distance(p, qi).into_owned();
                        if best.as_ref().is_none_or(|b| d < *b) {
                            best = Some(d);
                        }
                    }
                    // next assignment of nonzero offsets
                    let mut s = 0;
                    while s < r && choice[s] == m - 1 {
                        choice[s] = 1;
                        s += 1;
                    }
                    if s == r {
                        break;
                    }
                    choice[s] += 1;
                }
            }
        }
        best.map_or_else(Rational::one, |b| b.min(Rational::one()))
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

impl EmbeddingColoring for SubsetColoring<'_> {
    fn color(&self, e: &Embedding) -> Option<Rational> {
        if e.len() != 1 || e.image(0) >= self.space.len() || !self.in_domain(e.image(0)) {
            return None;
        }
        Some(self.value_at(e.image(0)))
    }
}

/// 1-Lipschitz functions on `(Hⁿ, δ_n)` used by the concentration runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LipschitzFunction {
    Constant(Rational),
    /// `δ_n`-distance to a point of `Hⁿ`
    DistanceToPoint(Vec<usize>),
    /// `δ_n`-distance to a nonempty set of points of `Hⁿ`
    DistanceToSet(Vec<Vec<usize>>),
}

impl LipschitzFunction {
    pub fn eval(&self, group: &GroupAction, hs: &[usize]) -> Rational {
        match self {
            LipschitzFunction::Constant(c) => c.clone(),
            LipschitzFunction::DistanceToPoint(p) => group.delta_n(hs, p),
            LipschitzFunction::DistanceToSet(set) => {
                set.iter().map(|p| group.delta_n(hs, p)).min().expect("nonempty set")
            }
        }
    }

    fn check(&self, group: &GroupAction, n: usize) -> Result<(), ConcentrationError> {
        let ok = |p: &Vec<usize>| p.len() == n && p.iter().all(|&h| h < group.order());
        let valid = match self {
            LipschitzFunction::Constant(_) => true,
            LipschitzFunction::DistanceToPoint(p) => ok(p),
            LipschitzFunction::DistanceToSet(s) => !s.is_empty() && s.iter().all(ok),
        };
        if valid {
            Ok(())
        } else {
            Err(ConcentrationError::Parameter(
                "function anchors are not points of Hⁿ".into(),
            ))
        }
    }
}

/// Mean of `f` under the uniform measure: exact for constants, single
/// anchors (coordinates are independent) and small `Hⁿ`; otherwise a
/// sample mean from an independent stream.
pub fn expectation(f: &LipschitzFunction, group: &GroupAction, n: usize, samples: u64, seed: u64) -> Rational {
    match f {
        LipschitzFunction::Constant(c) => c.clone(),
        LipschitzFunction::DistanceToPoint(p) => {
            let order = int(group.order() as i64);
            let per: Rational = p
                .iter()
                .map(|&x| (0..group.order()).map(|h| group.delta(h, x)).sum::<Rational>() / &order)
                .sum();
            per / int(n as i64)
        }
        LipschitzFunction::DistanceToSet(set) if set.len() == 1 => expectation(
            &LipschitzFunction::DistanceToPoint(set[0].clone()),
            group,
            n,
            samples,
            seed,
        ),
        LipschitzFunction::DistanceToSet(_) => {
            let total = group.power_size(n);
            if total <= EXHAUSTIVE_LIMIT {
                let mut sum = Rational::zero();
                for idx in 0..total as usize {
                    let mut hs = vec![0; n];
                    let mut rest = idx;
                    for slot in hs.iter_mut().rev() {
                        *slot = rest % group.order();
                        rest /= group.order();
                    }
                    sum += f.eval(group, &hs);
                }
                sum / int(total as i64)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let count = samples.max(1);
                let sum: Rational = (0..count)
                    .map(|_| f.eval(group, &draw(group.order(), n, &mut rng)))
                    .sum();
                sum / int(count as i64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub group_size: usize,
    pub n: usize,
    pub epsilon: Rational,
    pub samples: u64,
    /// number of samples with `|f - E f| > ε`
    pub deviations: u64,
    pub empirical_mass: f64,
    pub bound: f64,
    pub seed: u64,
    pub mean: Rational,
}

impl ConcentrationReport {
    pub const CSV_HEADER: &'static str = "group_size,n,epsilon,samples,empirical_mass,bound,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.group_size,
            self.n,
            fmt_rational(&self.epsilon),
            self.samples,
            self.empirical_mass,
            self.bound,
            self.seed
        )
    }
}

pub fn concentration_csv(reports: &[ConcentrationReport]) -> String {
    let mut out = String::from(ConcentrationReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Fraction of `samples` uniform draws from `Hⁿ` on which `f` deviates
/// from its mean by more than `ε`, next to the bounded-differences bound.
pub fn empirical_concentration(
    group: &GroupAction,
    n: usize,
    f: &LipschitzFunction,
    samples: u64,
    epsilon: &Rational,
    seed: u64,
) -> Result<ConcentrationReport, ConcentrationError> {
    if n == 0 || samples == 0 || !epsilon.is_positive() {
        return Err(ConcentrationError::Parameter(
            "need n >= 1, samples >= 1, epsilon > 0".into(),
        ));
    }
    f.check(group, n)?;
    let mean = expectation(f, group, n, samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deviations = 0u64;
    for _ in 0..samples {
        let hs = draw(group.order(), n, &mut rng);
        if (f.eval(group, &hs) - &mean).abs() > *epsilon {
            deviations += 1;
        }
    }
    Ok(ConcentrationReport {
        group_size: group.order(),
        n,
        epsilon: epsilon.clone(),
        samples,
        deviations,
        empirical_mass: deviations as f64 / samples as f64,
        bound: deviation_bound(&group.diameter(), epsilon, n),
        seed,
        mean,
    })
}

/// One report per level of the chain `H ≤ H² ≤ …` given by `ns`, with `f`
/// the `δ_n`-distance to the identity. Levels run in parallel; output is in
/// the order of `ns`.
pub fn levy_chain(
    group: &GroupAction,
    ns: &[usize],
    samples: u64,
    epsilon: &Rational,
    seed: u64,
) -> Result<Vec<ConcentrationReport>, ConcentrationError> {
    ns.par_iter()
        .map(|&n| {
            empirical_concentration(
                group,
                n,
                &LipschitzFunction::DistanceToPoint(vec![0; n]),
                samples,
                epsilon,
                seed,
            )
        })
        .collect()
}

/// A partial isomorphism of a finite structure: `domain[i] ↦ image[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialIso {
    pub domain: Vec<usize>,
    pub image: Vec<usize>,
}

/// All isomorphisms between substructures of `a` (nonempty domains
/// containing every constant point).
pub fn partial_isomorphisms(a: &MetricStructure) -> Vec<PartialIso> {
    let n = a.len();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let domain: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if !a.constants().iter().all(|c| domain.contains(c)) {
            continue;
        }
        let sub = a.induced(&domain).expect("indices in range");
        let maps = enumerate_maps(&sub, a, DEFAULT_NODE_CAP).expect("tiny search");
        for m in maps {
            out.push(PartialIso {
                domain: domain.clone(),
                image: m.map().to_vec(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EppaCaps {
    /// points added beyond `A`
    pub max_extra: usize,
    pub max_denominator: u64,
    pub max_candidates: u64,
}

impl Default for EppaCaps {
    fn default() -> Self {
        EppaCaps {
            max_extra: 2,
            max_denominator: 12,
            max_candidates: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EppaStats {
    pub partial_isos: usize,
    pub candidates: u64,
    pub largest_size: usize,
    pub distance_values: usize,
    /// false when the candidate cap stopped the search
    pub exhausted: bool,
}

impl std::fmt::Display for EppaStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} partial isomorphisms, {} candidates up to {} points over {} distance values ({})",
            self.partial_isos,
            self.candidates,
            self.largest_size,
            self.distance_values,
            if self.exhausted {
                "space exhausted"
            } else {
                "candidate cap reached"
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct EppaWitness {
    pub b: MetricStructure,
    /// `A` sits in `B` as its first points.
    pub embedding: Embedding,
    pub extensions: Vec<(PartialIso, Embedding)>,
    pub stats: EppaStats,
}

#[derive(Debug, Clone)]
pub enum EppaOutcome {
    Found(EppaWitness),
    NotFound(EppaStats),
}

/// Smallest `B ⊇ A` found (fewest added points first) in which every
/// partial isomorphism of `A` extends to an automorphism.
pub fn eppa_search(a: &MetricStructure, caps: &EppaCaps) -> Result<EppaOutcome, ConcentrationError> {
    eppa_search_maps(a, &partial_isomorphisms(a), caps)
}

/// As [`eppa_search`], extending only the given partial maps.
pub fn eppa_search_maps(
    a: &MetricStructure,
    maps: &[PartialIso],
    caps: &EppaCaps,
) -> Result<EppaOutcome, ConcentrationError> {
    if !validate(a).is_empty() {
        return Err(StructureError::Invalid(validate(a)).into());
    }
    for m in maps {
        if m.domain.len() != m.image.len() || m.domain.iter().chain(&m.image).any(|&p| p >= a.len()) {
            return Err(ConcentrationError::Parameter("partial map outside A".into()));
        }
    }
    let distances = distance_closure(a, caps.max_denominator);
    let mut search = EppaSearch {
        a,
        maps,
        caps,
        distances,
        values: (0..a.signature().predicates().len())
            .map(|p| {
                let mut v: Vec<Rational> = (0..a.len()).map(|i| a.unary(p, i).clone()).collect();
                v.sort();
                v.dedup();
                v
            })
            .collect(),
        stats: EppaStats {
            partial_isos: maps.len(),
            ..EppaStats::default()
        },
    };
    search.stats.distance_values = search.distances.len();
    let max_extra = if a.signature().is_unary() && !a.is_empty() {
        caps.max_extra
    } else {
        0
    };
    for extra in 0..=max_extra {
        search.stats.largest_size = a.len() + extra;
        let size = a.len() + extra;
        let mut dist = vec![vec![Rational::zero(); size]; size];
        for i in 0..a.len() {
            for j in 0..a.len() {
                dist[i][j] = a.dist(i, j).clone();
            }
        }
        let mut vals: Vec<Vec<Rational>> = a.tables().to_vec();
        for t in vals.iter_mut() {
            t.resize(size, Rational::zero());
        }
        match search.place(a.len(), &mut dist, &mut vals)? {
            Step::Found(w) => return Ok(EppaOutcome::Found(w)),
            Step::Capped => return Ok(EppaOutcome::NotFound(search.stats)),
            Step::Continue => {}
        }
    }
    search.stats.exhausted = true;
    Ok(EppaOutcome::NotFound(search.stats))
}

/// Sums of nonzero distances of `a` up to its diameter (or the signature's
/// bound when smaller), with denominators at most `max_den`.
fn distance_closure(a: &MetricStructure, max_den: u64) -> Vec<Rational> {
    let mut cap = a.diameter();
    if let Some(b) = a.signature().distance_bound() {
        cap = cap.min(b.clone());
    }
    let mut base: Vec<Rational> = Vec::new();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            base.push(a.dist(i, j).clone());
        }
    }
    base.retain(|d| d.is_positive());
    base.sort();
    base.dedup();
    let mut set = base.clone();
    let mut frontier = base.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for x in &frontier {
            for y in &base {
                let s = x + y;
                if s <= cap && !set.contains(&s) {
                    set.push(s.clone());
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    set.retain(|d| d.denom() <= &BigInt::from(max_den));
    set.sort();
    set
}

enum Step {
    Found(EppaWitness),
    Capped,
    Continue,
}

struct EppaSearch<'a> {
    a: &'a MetricStructure,
    maps: &'a [PartialIso],
    caps: &'a EppaCaps,
    distances: Vec<Rational>,
    values: Vec<Vec<Rational>>,
    stats: EppaStats,
}

impl EppaSearch<'_> {
    /// Fills row `t` (distances to earlier points, then predicate values),
    /// extra points sorted by their rows against `A`.
    fn place(
        &mut self,
        t: usize,
        dist: &mut Vec<Vec<Rational>>,
        vals: &mut Vec<Vec<Rational>>,
    ) -> Result<Step, ConcentrationError> {
        if t == dist.len() {
            return self.finish(dist, vals);
        }
        self.place_distance(t, 0, dist, vals)
    }

    fn place_distance(
        &mut self,
        t: usize,
        u: usize,
        dist: &mut Vec<Vec<Rational>>,
        vals: &mut Vec<Vec<Rational>>,
    ) -> Result<Step, ConcentrationError> {
        if u == t {
            return self.place_value(t, 0, dist, vals);
        }
        for k in 0..self.distances.len() {
            let d = self.distances[k].clone();
            let fits = (0..u).all(|v| {
                let (dv, uv) = (&dist[t][v], &dist[u][v]);
                (&d - dv).abs() <= *uv && *uv <= &d + dv
            });
            if !fits {
                continue;
            }
            dist[t][u] = d.clone();
            dist[u][t] = d;
            match self.place_distance(t, u + 1, dist, vals)? {
                Step::Continue => {}
                other => return Ok(other),
            }
        }
        Ok(Step::Continue)
    }

    fn place_value(
        &mut self,
        t: usize,
        p: usize,
        dist: &mut Vec<Vec<Rational>>,
        vals: &mut Vec<Vec<Rational>>,
    ) -> Result<Step, ConcentrationError> {
        if p == vals.len() {
            if t > self.a.len() && self.row_key(t - 1, dist, vals) > self.row_key(t, dist, vals) {
                return Ok(Step::Continue);
            }
            return self.place(t + 1, dist, vals);
        }
        let lip = self.a.signature().predicates()[p].lipschitz.clone();
        for k in 0..self.values[p].len() {
            let v = self.values[p][k].clone();
            if (0..t).all(|u| (&v - &vals[p][u]).abs() <= &lip * &dist[t][u]) {
                vals[p][t] = v;
                match self.place_value(t, p + 1, dist, vals)? {
                    Step::Continue => {}
                    other => return Ok(other),
                }
            }
        }
        Ok(Step::Continue)
    }

    fn row_key(&self, t: usize, dist: &[Vec<Rational>], vals: &[Vec<Rational>]) -> Vec<Rational> {
        let mut key: Vec<Rational> = dist[t][..self.a.len()].to_vec();
        key.extend(vals.iter().map(|col| col[t].clone()));
        key
    }

    fn finish(&mut self, dist: &[Vec<Rational>], vals: &[Vec<Rational>]) -> Result<Step, ConcentrationError> {
        if self.stats.candidates >= self.caps.max_candidates {
            return Ok(Step::Capped);
        }
        self.stats.candidates += 1;
        let mut labels = self.a.labels().to_vec();
        let mut fresh = 0;
        while labels.len() < dist.len() {
            fresh += 1;
            let l = format!("e{fresh}");
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        let b = MetricStructure::from_parts(
            self.a.signature().clone(),
            labels,
            dist.to_vec(),
            vals.to_vec(),
            self.a.constants().to_vec(),
        )?;
        if !validate(&b).is_empty() {
            return Ok(Step::Continue);
        }
        let auts = enumerate_maps(&b, &b, DEFAULT_NODE_CAP)?;
        let mut extensions = Vec::with_capacity(self.maps.len());
        for m in self.maps {
            match auts
                .iter()
                .find(|s| m.domain.iter().zip(&m.image).all(|(&d, &i)| s.image(d) == i))
            {
                Some(s) => extensions.push((m.clone(), s.clone())),
                None => return Ok(Step::Continue),
            }
        }
        Ok(Step::Found(EppaWitness {
            b,
            embedding: Embedding::identity(self.a.len()),
            extensions,
            stats: self.stats.clone(),
        }))
    }
}

/// Output of [`weak_extension_witness`].
#[derive(Debug, Clone)]
pub struct WepWitness {
    pub bp: MetricStructure,
    pub gs: Vec<Embedding>,
    /// `A → B'`
    pub iota: Embedding,
    /// the given maps, read as embeddings into `B'`
    pub originals: Vec<Embedding>,
    pub group: GroupAction,
}

/// Finds `B' ⊇ K` and automorphisms `g_i` of `B'` with `g_i ∘ ι` within
/// `ε` of `α_i`, where `A` sits in the fragment `K` by matching labels.
/// Automorphisms of `K` itself are tried first; otherwise the partial maps
/// `ι(a) ↦ α_i(a)` are extended exactly by [`eppa_search_maps`].
pub fn weak_extension_witness(
    a: &PointedStructure,
    fragment: &MetricStructure,
    alphas: &[Embedding],
    epsilon: &Rational,
    caps: &EppaCaps,
) -> Result<WepWitness, ConcentrationError> {
    if alphas.is_empty() {
        return Err(ConcentrationError::Parameter("no maps given".into()));
    }
    let iota = Embedding::new(
        a.structure()
            .labels()
            .iter()
            .map(|l| fragment.point(l))
            .collect::<Result<Vec<_>, _>>()?,
    );
    check_embedding(a.structure(), fragment, &iota)?;
    for al in alphas {
        check_embedding(a.structure(), fragment, al)?;
    }
    let auts = enumerate_maps(fragment, fragment, DEFAULT_NODE_CAP)?;
    let close: Option<Vec<Embedding>> = alphas
        .iter()
        .map(|al| {
            auts.iter()
                .find(|g| g.after(&iota).is_ok_and(|gi| rho_in(a, fragment, &gi, al) <= *epsilon))
                .cloned()
        })
        .collect();
    let (bp, gs) = match close {
        Some(gs) => (fragment.clone(), gs),
        None => {
            let maps: Vec<PartialIso> = alphas
                .iter()
                .map(|al| PartialIso {
                    domain: iota.map().to_vec(),
                    image: al.map().to_vec(),
                })
                .collect();
            match eppa_search_maps(fragment, &maps, caps)? {
                EppaOutcome::Found(w) => (w.b, w.extensions.into_iter().map(|(_, g)| g).collect()),
                EppaOutcome::NotFound(stats) => return Err(ConcentrationError::NotFound(stats)),
            }
        }
    };
    let primes = gs.iter().map(|g| g.after(&iota)).collect::<Result<Vec<_>, _>>()?;
    if !eps_approximates(&bp, &primes, a, alphas, epsilon)? {
        return Err(ConcentrationError::Parameter("approximation check failed".into()));
    }
    let group = group_closure(&bp, &gs)?;
    Ok(WepWitness {
        bp,
        gs,
        iota,
        originals: alphas.to_vec(),
        group,
    })
}

/// Every partial isomorphism in `w` is extended by its automorphism, and
/// the automorphisms really are automorphisms of `w.b`.
pub fn verify_eppa(a: &MetricStructure, w: &EppaWitness) -> bool {
    check_embedding(a, &w.b, &w.embedding).is_ok()
        && w.extensions.iter().all(|(m, s)| {
            check_embedding(&w.b, &w.b, s).is_ok()
                && m.domain
                    .iter()
                    .zip(&m.image)
                    .all(|(&d, &i)| s.image(w.embedding.image(d)) == w.embedding.image(i))
        })
}
