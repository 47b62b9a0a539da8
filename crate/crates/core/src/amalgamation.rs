//! Exact amalgamation, joint embedding, the pseudometric on pointed
//! structures and one-point extensions.
//!
//! Only unary predicates are supported here: a free amalgam has no canonical
//! value for a higher-arity predicate on a tuple that mixes points of both
//! factors.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::embeddings::{check_embedding, Embedding, EmbeddingError};
use crate::rational::{abs_diff, fmt_rational, int, Rational};
use crate::ratlp::{self, LinearProgram, LpError, LpStatus, Relation, Sense, VarId};
use crate::structures::{generated_substructure, MetricStructure, PointedStructure, Signature, StructureError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("structures have different signatures")]
    SignatureMismatch,
    #[error("generator tuples have different lengths ({left} vs {right})")]
    ArityMismatch { left: usize, right: usize },
    #[error("amalgamation over an empty structure without constants; use joint embedding instead")]
    EmptyBase,
    #[error("distance {value} between ({x},{y}) exceeds the diameter bound")]
    DiameterExceeded { x: String, y: String, value: String },
    #[error("no admissible separation: {0}")]
    NoAdmissibleSeparation(String),
    #[error("the structures have no joint embedding (constants disagree)")]
    NoJointEmbedding,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("Katětov condition violated at ({x},{y})")]
    Katetov { x: String, y: String },
    #[error("Lipschitz condition of `{predicate}` violated against `{point}`")]
    Lipschitz { predicate: String, point: String },
    #[error("value of `{0}` outside its range")]
    OutOfRange(String),
    #[error("new point would be indiscernible from `{0}`")]
    ZeroDistance(String),
    #[error("label `{0}` already used")]
    LabelClash(String),
    #[error("request shape mismatch: {0}")]
    Shape(String),
}

fn require_unary(sig: &Signature) -> Result<(), AmalgamError> {
    match sig.predicates().iter().find(|p| p.arity != 1) {
        Some(p) => Err(AmalgamError::Unsupported(format!(
            "predicate `{}` has arity {}; amalgamation handles unary predicates only",
            p.name, p.arity
        ))),
        None => Ok(()),
    }
}

/// An amalgam `C` together with the embeddings of both factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamResult {
    pub amalgam: MetricStructure,
    pub left_arm: Embedding,
    pub right_arm: Embedding,
}

/// Labels for the right factor, primed until they no longer clash.
fn fresh_label(taken: &[String], wanted: &str) -> String {
    let mut l = wanted.to_string();
    while taken.contains(&l) {
        l.push('\'');
    }
    l
}

/// Assembles the union of `left` and the points of `right` listed in
/// `extra`, using `cross(i, k)` for the distance between left point `i` and
/// the `k`-th extra point.
fn union_structure(
    left: &MetricStructure,
    right: &MetricStructure,
    extra: &[usize],
    cross: &[Vec<Rational>],
) -> Result<MetricStructure, AmalgamError> {
    let n0 = left.len();
    let n = n0 + extra.len();
    let mut labels = left.labels().to_vec();
    for &k in extra {
        let l = fresh_label(&labels, right.label(k));
        labels.push(l);
    }
    let mut dist = vec![vec![Rational::zero(); n]; n];
    for i in 0..n0 {
        for j in 0..n0 {
            dist[i][j] = left.dist(i, j).clone();
        }
    }
    for (a, &ka) in extra.iter().enumerate() {
        for (b, &kb) in extra.iter().enumerate() {
            dist[n0 + a][n0 + b] = right.dist(ka, kb).clone();
        }
        for i in 0..n0 {
            dist[i][n0 + a] = cross[i][a].clone();
            dist[n0 + a][i] = cross[i][a].clone();
        }
    }
    if let Some(cap) = left.signature().distance_bound() {
        for i in 0..n0 {
            for a in 0..extra.len() {
                if &cross[i][a] > cap {
                    return Err(AmalgamError::DiameterExceeded {
                        x: labels[i].clone(),
                        y: labels[n0 + a].clone(),
                        value: fmt_rational(&cross[i][a]),
                    });
                }
            }
        }
    }
    let tables = (0..left.signature().predicates().len())
        .map(|p| {
            left.table(p)
                .iter()
                .cloned()
                .chain(extra.iter().map(|&k| right.unary(p, k).clone()))
                .collect()
        })
        .collect();
    Ok(MetricStructure::new(
        left.signature().clone(),
        labels,
        dist,
        tables,
        left.constants().to_vec(),
    )?)
}

/// Free amalgam `B0 ⊔_A B1` with the path metric
/// `D(b0, b1) = min_a d(b0, φ0 a) + d(φ1 a, b1)`. The arms agree exactly on
/// the image of `A`.
pub fn free_amalgam(
    a: &PointedStructure,
    b0: &MetricStructure,
    b1: &MetricStructure,
    phi0: &Embedding,
    phi1: &Embedding,
) -> Result<AmalgamResult, AmalgamError> {
    let sig = a.structure().signature();
    if b0.signature() != sig || b1.signature() != sig {
        return Err(AmalgamError::SignatureMismatch);
    }
    require_unary(sig)?;
    if a.structure().is_empty() {
        return Err(AmalgamError::EmptyBase);
    }
    check_embedding(a.structure(), b0, phi0)?;
    check_embedding(a.structure(), b1, phi1)?;

    let na = a.structure().len();
    let n0 = b0.len();
    // B1 points outside φ1(A), in order
    let extra: Vec<usize> = (0..b1.len()).filter(|k| !phi1.map().contains(k)).collect();
    let cross: Vec<Vec<Rational>> = (0..n0)
        .map(|i| {
            extra
                .iter()
                .map(|&k| {
                    (0..na)
                        .map(|p| b0.dist(i, phi0.image(p)) + b1.dist(phi1.image(p), k))
                        .min()
                        .expect("A is nonempty")
                })
                .collect()
        })
        .collect();
    let amalgam = union_structure(b0, b1, &extra, &cross)?;
    let right_arm = Embedding::new(
        (0..b1.len())
            .map(|k| match phi1.map().iter().position(|&t| t == k) {
                Some(p) => phi0.image(p),
                None => n0 + extra.iter().position(|&e| e == k).unwrap(),
            })
            .collect(),
    );
    let left_arm = Embedding::identity(n0);
    Ok(AmalgamResult {
        amalgam,
        left_arm,
        right_arm,
    })
}

/// Default separation used when the joint-embedding formula gives zero.
pub const DEFAULT_MIN_SEPARATION: i64 = 1;

pub fn jep(b0: &MetricStructure, b1: &MetricStructure) -> Result<AmalgamResult, AmalgamError> {
    jep_with_separation(b0, b1, &int(DEFAULT_MIN_SEPARATION))
}

/// Joint embedding. With constants this amalgamates over the substructure
/// they generate; otherwise it is the disjoint union with the constant
/// cross distance
/// `c = max(max(diam B0, diam B1)/2, max_P max |P(b0) - P(b1)| / L_P)`,
/// raised to `min_separation` when it would be zero.
pub fn jep_with_separation(
    b0: &MetricStructure,
    b1: &MetricStructure,
    min_separation: &Rational,
) -> Result<AmalgamResult, AmalgamError> {
    let sig = b0.signature();
    if b1.signature() != sig {
        return Err(AmalgamError::SignatureMismatch);
    }
    require_unary(sig)?;
    if !sig.constants().is_empty() {
        let base = generated_substructure(b0, &[])?;
        // base points are constant points of b0, in first-constant order
        let phi0 = Embedding::new(
            (0..base.structure().len())
                .map(|p| b0.point(base.structure().label(p)).expect("induced label"))
                .collect(),
        );
        let phi1 = Embedding::new(
            (0..base.structure().len())
                .map(|p| {
                    let c = base
                        .structure()
                        .constants()
                        .iter()
                        .position(|&q| q == p)
                        .expect("constant point");
                    b1.constants()[c]
                })
                .collect(),
        );
        if check_embedding(base.structure(), b1, &phi1).is_err() {
            return Err(AmalgamError::NoJointEmbedding);
        }
        return free_amalgam(&base, b0, b1, &phi0, &phi1);
    }
    if !min_separation.is_positive() {
        return Err(AmalgamError::NoAdmissibleSeparation(
            "minimum separation must be positive".into(),
        ));
    }

    let half = std::cmp::max(b0.diameter(), b1.diameter()) / int(2);
    let mut c = half;
    for (p, sym) in sig.predicates().iter().enumerate() {
        for i in 0..b0.len() {
            for k in 0..b1.len() {
                let gap = abs_diff(b0.unary(p, i), b1.unary(p, k));
                if gap.is_zero() {
                    continue;
                }
                if sym.lipschitz.is_zero() {
                    return Err(AmalgamError::NoAdmissibleSeparation(format!(
                        "`{}` is constant-Lipschitz but differs across the factors",
                        sym.name
                    )));
                }
                let need = gap / &sym.lipschitz;
                if need > c {
                    c = need;
                }
            }
        }
    }
    if c.is_zero() {
        c = min_separation.clone();
        if let Some(cap) = sig.distance_bound() {
            if &c > cap {
                c = cap.clone();
            }
        }
    }
    if let Some(cap) = sig.distance_bound() {
        if &c > cap {
            return Err(AmalgamError::NoAdmissibleSeparation(format!(
                "required separation {} exceeds the diameter bound {}",
                fmt_rational(&c),
                fmt_rational(cap)
            )));
        }
    }
    let extra: Vec<usize> = (0..b1.len()).collect();
    let cross = vec![vec![c; b1.len()]; b0.len()];
    let amalgam = union_structure(b0, b1, &extra, &cross)?;
    Ok(AmalgamResult {
        amalgam,
        left_arm: Embedding::identity(b0.len()),
        right_arm: Embedding::new((b0.len()..b0.len() + b1.len()).collect()),
    })
}

/// Optimal value of the pseudometric together with a cross-distance matrix
/// attaining it (`cross[a][b]` for points `a` of the left and `b` of the
/// right structure).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistWitness {
    pub value: Rational,
    pub cross: Vec<Vec<Rational>>,
}

/// Infimum over joint embeddings of the sup-distance between the two
/// generator tuples, computed as an exact LP over the cross distances.
pub fn dist_n(x: &PointedStructure, y: &PointedStructure) -> Result<DistWitness, AmalgamError> {
    let (sx, sy) = (x.structure(), y.structure());
    let sig = sx.signature();
    if sy.signature() != sig {
        return Err(AmalgamError::SignatureMismatch);
    }
    if x.arity() != y.arity() {
        return Err(AmalgamError::ArityMismatch {
            left: x.arity(),
            right: y.arity(),
        });
    }
    require_unary(sig)?;
    let (nx, ny) = (sx.len(), sy.len());
    let mut lp = LinearProgram::new();
    let vars: Vec<Vec<VarId>> = (0..nx)
        .map(|a| (0..ny).map(|b| lp.var(format!("D_{a}_{b}"))).collect())
        .collect();
    let t = lp.var("t");
    let one = Rational::one;
    for b in 0..ny {
        for a in 0..nx {
            for a2 in 0..nx {
                if a == a2 {
                    continue;
                }
                let d = sx.dist(a, a2).clone();
                if a < a2 {
                    lp.constrain(vec![(vars[a][b], one()), (vars[a2][b], one())], Relation::Ge, d.clone());
                }
                lp.constrain(vec![(vars[a][b], one()), (vars[a2][b], -one())], Relation::Le, d);
            }
        }
    }
    for a in 0..nx {
        for b in 0..ny {
            for b2 in 0..ny {
                if b == b2 {
                    continue;
                }
                let d = sy.dist(b, b2).clone();
                if b < b2 {
                    lp.constrain(vec![(vars[a][b], one()), (vars[a][b2], one())], Relation::Ge, d.clone());
                }
                lp.constrain(vec![(vars[a][b], one()), (vars[a][b2], -one())], Relation::Le, d);
            }
        }
    }
    for (p, sym) in sig.predicates().iter().enumerate() {
        for a in 0..nx {
            for b in 0..ny {
                let gap = abs_diff(sx.unary(p, a), sy.unary(p, b));
                if !gap.is_zero() {
                    lp.constrain(vec![(vars[a][b], sym.lipschitz.clone())], Relation::Ge, gap);
                }
            }
        }
    }
    for c in 0..sig.constants().len() {
        lp.constrain(
            vec![(vars[sx.constants()[c]][sy.constants()[c]], one())],
            Relation::Eq,
            Rational::zero(),
        );
    }
    if let Some(cap) = sig.distance_bound() {
        for row in &vars {
            for &v in row {
                lp.constrain(vec![(v, one())], Relation::Le, cap.clone());
            }
        }
    }
    for (&ga, &gb) in x.generators().iter().zip(y.generators()) {
        lp.constrain(vec![(vars[ga][gb], one()), (t, -one())], Relation::Le, Rational::zero());
    }
    lp.set_objective(Sense::Minimize, vec![(t, one())]);
    let out = ratlp::solve(&lp)?;
    match out.status {
        LpStatus::Optimal => {
            let asg = out.assignment.expect("optimal outcome has an assignment");
            let cross = vars
                .iter()
                .map(|row| row.iter().map(|v| asg[v.0].clone()).collect())
                .collect();
            // t is only bounded below by the generator entries
            let value = x
                .generators()
                .iter()
                .zip(y.generators())
                .map(|(&a, &b)| asg[vars[a][b].0].clone())
                .max()
                .unwrap_or_else(Rational::zero);
            debug_assert_eq!(Some(&value), out.optimum.as_ref());
            Ok(DistWitness { value, cross })
        }
        LpStatus::Infeasible => Err(AmalgamError::NoJointEmbedding),
        LpStatus::Unbounded => unreachable!("objective bounded below by zero"),
    }
}

/// Realizes a cross-distance matrix as a structure containing both sides.
/// Right points at distance zero from a left point are identified with it.
pub fn joint_structure(
    x: &MetricStructure,
    y: &MetricStructure,
    cross: &[Vec<Rational>],
) -> Result<AmalgamResult, AmalgamError> {
    if x.signature() != y.signature() {
        return Err(AmalgamError::SignatureMismatch);
    }
    require_unary(x.signature())?;
    if cross.len() != x.len() || cross.iter().any(|r| r.len() != y.len()) {
        return Err(AmalgamError::Shape("cross matrix dimensions".into()));
    }
    let merged: Vec<Option<usize>> = (0..y.len())
        .map(|b| (0..x.len()).find(|&a| cross[a][b].is_zero()))
        .collect();
    let extra: Vec<usize> = (0..y.len()).filter(|&b| merged[b].is_none()).collect();
    let sub: Vec<Vec<Rational>> = cross
        .iter()
        .map(|row| extra.iter().map(|&b| row[b].clone()).collect())
        .collect();
    let amalgam = union_structure(x, y, &extra, &sub)?;
    let right_arm = Embedding::new(
        (0..y.len())
            .map(|b| merged[b].unwrap_or_else(|| x.len() + extra.iter().position(|&e| e == b).unwrap()))
            .collect(),
    );
    check_embedding(y, &amalgam, &right_arm)?;
    Ok(AmalgamResult {
        amalgam,
        left_arm: Embedding::identity(x.len()),
        right_arm,
    })
}

/// Witness for `dist_n(x, z) <= dist_n(x, y) + dist_n(y, z)`: the optimal
/// joint structures for `(x, y)` and `(y, z)` amalgamated over `y`. Returns
/// the combined structure, the embeddings of `x` and `z`, and the
/// sup-distance between their generator tuples in it.
pub fn triangle_witness(
    x: &PointedStructure,
    y: &PointedStructure,
    z: &PointedStructure,
) -> Result<(AmalgamResult, Rational), AmalgamError> {
    let xy = dist_n(x, y)?;
    let yz = dist_n(y, z)?;
    let cxy = joint_structure(x.structure(), y.structure(), &xy.cross)?;
    let cyz = joint_structure(y.structure(), z.structure(), &yz.cross)?;
    // y sits in cxy via its right arm and in cyz via its left arm
    let glued = free_amalgam(y, &cxy.amalgam, &cyz.amalgam, &cxy.right_arm, &cyz.left_arm)?;
    let x_in = glued.left_arm.after(&cxy.left_arm)?;
    let z_in = glued.right_arm.after(&cyz.right_arm)?;
    check_embedding(x.structure(), &glued.amalgam, &x_in)?;
    check_embedding(z.structure(), &glued.amalgam, &z_in)?;
    let sup = x
        .generators()
        .iter()
        .zip(z.generators())
        .map(|(&a, &c)| glued.amalgam.dist(x_in.image(a), z_in.image(c)).clone())
        .max()
        .unwrap_or_else(Rational::zero);
    Ok((
        AmalgamResult {
            amalgam: glued.amalgam,
            left_arm: x_in,
            right_arm: z_in,
        },
        sup,
    ))
}

/// A one-point extension: distances from the new point to every base point
/// and its unary predicate values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionRequest {
    pub base: MetricStructure,
    pub label: String,
    pub distances: Vec<Rational>,
    pub predicate_values: Vec<Rational>,
}

pub fn extend_one_point(req: &ExtensionRequest) -> Result<MetricStructure, AmalgamError> {
    let base = &req.base;
    let sig = base.signature();
    require_unary(sig)?;
    let n = base.len();
    if req.distances.len() != n {
        return Err(AmalgamError::Shape(format!(
            "expected {n} distances, got {}",
            req.distances.len()
        )));
    }
    if req.predicate_values.len() != sig.predicates().len() {
        return Err(AmalgamError::Shape(format!(
            "expected {} predicate values, got {}",
            sig.predicates().len(),
            req.predicate_values.len()
        )));
    }
    if base.index_of(&req.label).is_some() {
        return Err(AmalgamError::LabelClash(req.label.clone()));
    }
    let f = &req.distances;
    for x in 0..n {
        if !f[x].is_positive() {
            return Err(AmalgamError::ZeroDistance(base.label(x).to_string()));
        }
        if let Some(cap) = sig.distance_bound() {
            if &f[x] > cap {
                return Err(AmalgamError::DiameterExceeded {
                    x: base.label(x).to_string(),
                    y: req.label.clone(),
                    value: fmt_rational(&f[x]),
                });
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            let d = base.dist(x, y);
            if &abs_diff(&f[x], &f[y]) > d || d > &(&f[x] + &f[y]) {
                return Err(AmalgamError::Katetov {
                    x: base.label(x).to_string(),
                    y: base.label(y).to_string(),
                });
            }
        }
    }
    for (p, sym) in sig.predicates().iter().enumerate() {
        let v = &req.predicate_values[p];
        if v < &sym.lo || v > &sym.hi {
            return Err(AmalgamError::OutOfRange(sym.name.clone()));
        }
        for x in 0..n {
            if abs_diff(v, base.unary(p, x)) > &sym.lipschitz * &f[x] {
                return Err(AmalgamError::Lipschitz {
                    predicate: sym.name.clone(),
                    point: base.label(x).to_string(),
                });
            }
        }
    }
    let mut labels = base.labels().to_vec();
    labels.push(req.label.clone());
    let mut dist = base.dist_rows();
    for (x, row) in dist.iter_mut().enumerate() {
        row.push(f[x].clone());
    }
    let mut last = f.clone();
    last.push(Rational::zero());
    dist.push(last);
    let tables = (0..sig.predicates().len())
        .map(|p| {
            let mut t = base.table(p).to_vec();
            t.push(req.predicate_values[p].clone());
            t
        })
        .collect();
    Ok(MetricStructure::new(
        sig.clone(),
        labels,
        dist,
        tables,
        base.constants().to_vec(),
    )?)
}
