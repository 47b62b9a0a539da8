#![allow(clippy::needless_range_loop, dead_code)]

use fraisse::rational::{int, ratio};
use fraisse::structures::{PredicateSymbol, Signature};
use fraisse::{MetricStructure, PointedStructure, Rational};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn metric(labels: &[&str], rows: Vec<Vec<Rational>>) -> MetricStructure {
    MetricStructure::metric_space(labels.iter().copied(), rows).unwrap()
}

pub fn point() -> PointedStructure {
    PointedStructure::whole(metric(&["a"], vec![vec![int(0)]]))
}

pub fn triangle() -> MetricStructure {
    metric(
        &["x", "y", "z"],
        vec![
            vec![int(0), int(1), int(1)],
            vec![int(1), int(0), int(1)],
            vec![int(1), int(1), int(0)],
        ],
    )
}

/// Shortest-path closure of a symmetric matrix with positive off-diagonal.
pub fn close_metric(d: &mut [Vec<Rational>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_points: usize,
    /// distances are multiples of 1/q for some q in 1..=max_den
    pub max_den: i64,
    /// largest distance numerator before closure
    pub max_num: i64,
    pub predicate: bool,
    pub constant: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_points: 6,
            max_den: 12,
            max_num: 12,
            predicate: true,
            constant: true,
        }
    }
}

pub fn signature(predicate: bool, constant: bool) -> Signature {
    let preds = if predicate {
        vec![PredicateSymbol::unary("P", int(1), int(0), int(1))]
    } else {
        vec![]
    };
    let consts = if constant { vec!["c".to_string()] } else { vec![] };
    Signature::new(preds, consts, None).unwrap()
}

/// A valid random structure; predicate and constant each present with
/// probability 1/2 when allowed by `shape`.
pub fn random_structure(rng: &mut ChaCha8Rng, shape: Shape) -> MetricStructure {
    let n = rng.gen_range(1..=shape.max_points);
    let q = rng.gen_range(1..=shape.max_den);
    let predicate = shape.predicate && rng.gen_bool(0.5);
    let constant = shape.constant && rng.gen_bool(0.5);
    structure_with(rng, n, q, shape.max_num, predicate, constant)
}

pub fn structure_with(
    rng: &mut ChaCha8Rng,
    n: usize,
    q: i64,
    max_num: i64,
    predicate: bool,
    constant: bool,
) -> MetricStructure {
    let mut d = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = ratio(rng.gen_range(1..=max_num.max(1)), q);
            d[i][j] = r.clone();
            d[j][i] = r;
        }
    }
    close_metric(&mut d);
    let sig = signature(predicate, constant);
    let mut tables = Vec::new();
    if predicate {
        // sequential McShane choice on the 1/q grid keeps P 1-Lipschitz
        let mut vals: Vec<Rational> = Vec::with_capacity(n);
        for i in 0..n {
            let mut lo = int(0);
            let mut hi = int(1);
            for (j, v) in vals.iter().enumerate() {
                lo = lo.max(v - &d[i][j]);
                hi = hi.min(v + &d[i][j]);
            }
            let steps = ((&hi - &lo) * int(q)).to_integer();
            let k: i64 = rng.gen_range(0..=steps.try_into().unwrap_or(0i64));
            vals.push(lo + ratio(k, q));
        }
        tables.push(vals);
    }
    let constants = if constant { vec![rng.gen_range(0..n)] } else { vec![] };
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    MetricStructure::new(sig, labels, d, tables, constants).unwrap()
}

/// A random generating tuple: every non-constant point, shuffled, with an
/// occasional repeat.
pub fn random_pointed(rng: &mut ChaCha8Rng, s: MetricStructure, arity: usize) -> Option<PointedStructure> {
    let mut free: Vec<usize> = (0..s.len()).filter(|p| !s.is_constant(*p)).collect();
    if free.len() > arity {
        return None;
    }
    for i in (1..free.len()).rev() {
        free.swap(i, rng.gen_range(0..=i));
    }
    while free.len() < arity {
        free.push(rng.gen_range(0..s.len()));
    }
    PointedStructure::new(s, free).ok()
}

/// Minimum over cross-distance matrices with entries on the grid
/// `{k·step : 0 <= k·step <= top}` of the largest generator-pair distance.
/// Exhaustive backtracking; `None` when no grid matrix is feasible.
pub fn dist_grid_oracle(
    x: &PointedStructure,
    y: &PointedStructure,
    step: &Rational,
    top: &Rational,
) -> Option<Rational> {
    let (sx, sy) = (x.structure(), y.structure());
    let grid: Vec<Rational> = {
        let mut g = vec![Rational::zero()];
        while g.last().unwrap() + step <= *top {
            let next = g.last().unwrap() + step;
            g.push(next);
        }
        g
    };
    let npred = sx.signature().predicates().len();
    let lips: Vec<Rational> = sx
        .signature()
        .predicates()
        .iter()
        .map(|p| p.lipschitz.clone())
        .collect();
    let mut forced = vec![vec![false; sy.len()]; sx.len()];
    for (c, &px) in sx.constants().iter().enumerate() {
        forced[px][sy.constants()[c]] = true;
    }
    let pairs: Vec<(usize, usize)> = x
        .generators()
        .iter()
        .copied()
        .zip(y.generators().iter().copied())
        .collect();
    let mut d = vec![vec![Rational::zero(); sy.len()]; sx.len()];
    let mut best: Option<Rational> = None;

    #[allow(clippy::too_many_arguments)]
    fn go(
        k: usize,
        sx: &MetricStructure,
        sy: &MetricStructure,
        grid: &[Rational],
        npred: usize,
        lips: &[Rational],
        forced: &[Vec<bool>],
        pairs: &[(usize, usize)],
        d: &mut Vec<Vec<Rational>>,
        best: &mut Option<Rational>,
    ) {
        let (nx, ny) = (sx.len(), sy.len());
        if k == nx * ny {
            let v = pairs
                .iter()
                .map(|&(a, b)| d[a][b].clone())
                .max()
                .unwrap_or_else(Rational::zero);
            if best.as_ref().is_none_or(|b| v < *b) {
                *best = Some(v);
            }
            return;
        }
        let (a, b) = (k / ny, k % ny);
        let is_pair = pairs.contains(&(a, b));
        for v in grid {
            if forced[a][b] && !v.is_zero() {
                break;
            }
            if is_pair && best.as_ref().is_some_and(|bb| v >= bb) {
                break;
            }
            let ok_col = (0..a).all(|a2| {
                let e = &sx.dist(a, a2);
                (v - &d[a2][b]).abs() <= **e && **e <= v + &d[a2][b]
            });
            let ok_row = (0..b).all(|b2| {
                let e = &sy.dist(b, b2);
                (v - &d[a][b2]).abs() <= **e && **e <= v + &d[a][b2]
            });
            let ok_pred = (0..npred).all(|p| (sx.unary(p, a) - sy.unary(p, b)).abs() <= &lips[p] * v);
            if ok_col && ok_row && ok_pred {
                d[a][b] = v.clone();
                go(k + 1, sx, sy, grid, npred, lips, forced, pairs, d, best);
            }
        }
    }
    go(0, sx, sy, &grid, npred, &lips, &forced, &pairs, &mut d, &mut best);
    best
}

use num_traits::Signed;

/// Largest min-oscillation over colorings with values on the grid
/// `{k·step} ∩ [0, 1]`, 1-Lipschitz for the domain's ρ. `images[β]` lists
/// the domain indices of `F(β)`.
pub fn ramsey_grid_oracle(rho: &[Vec<Rational>], images: &[Vec<usize>], step: &Rational) -> Rational {
    let m = rho.len();
    let mut grid = vec![Rational::zero()];
    while grid.last().unwrap() + step <= int(1) {
        let next = grid.last().unwrap() + step;
        grid.push(next);
    }
    let mut vals: Vec<Rational> = vec![Rational::zero(); m];
    let mut best = Rational::zero();

    fn go(
        k: usize,
        rho: &[Vec<Rational>],
        images: &[Vec<usize>],
        grid: &[Rational],
        vals: &mut Vec<Rational>,
        best: &mut Rational,
    ) {
        if k == rho.len() {
            let v = images
                .iter()
                .map(|img| {
                    let hi = img.iter().map(|&i| &vals[i]).max().unwrap();
                    let lo = img.iter().map(|&i| &vals[i]).min().unwrap();
                    hi - lo
                })
                .min()
                .unwrap();
            if v > *best {
                *best = v;
            }
            return;
        }
        for g in grid {
            if (0..k).all(|j| (g - &vals[j]).abs() <= rho[k][j]) {
                vals[k] = g.clone();
                go(k + 1, rho, images, grid, vals, best);
            }
        }
    }
    go(0, rho, images, &grid, &mut vals, &mut best);
    best
}

/// Cross-distance independent value of the pseudometric for pointed
/// structures whose points are all generators or constants: the least `t`
/// for which cross edges of length `t` (0 between constants) do not
/// shorten any distance and predicate gaps on paired points are covered.
pub fn dist_closed_form(x: &PointedStructure, y: &PointedStructure) -> Option<Rational> {
    let (sx, sy) = (x.structure(), y.structure());
    // anchored pairs (point of x, point of y, is_constant)
    let mut anchors: Vec<(usize, usize, bool)> = x
        .generators()
        .iter()
        .copied()
        .zip(y.generators().iter().copied())
        .map(|(a, b)| (a, b, false))
        .collect();
    for (c, &p) in sx.constants().iter().enumerate() {
        anchors.push((p, sy.constants()[c], true));
    }
    let mut t = Rational::zero();
    for &(a1, b1, c1) in &anchors {
        for (p, sym) in sx.signature().predicates().iter().enumerate() {
            let gap = (sx.unary(p, a1) - sy.unary(p, b1)).abs() / &sym.lipschitz;
            if c1 && !gap.is_zero() {
                return None;
            }
            if gap > t {
                t = gap;
            }
        }
        for &(a2, b2, c2) in &anchors {
            // crossing count weights: each non-constant crossing costs t
            let crossings = (!c1) as i64 + (!c2) as i64;
            let gx = sx.dist(a1, a2);
            let gy = sy.dist(b1, b2);
            for slack in [gx - gy, gy - gx] {
                if crossings == 0 {
                    if slack.is_positive() {
                        return None;
                    }
                    continue;
                }
                let need = slack / int(crossings);
                if need > t {
                    t = need;
                }
            }
        }
    }
    Some(t)
}

use fraisse::embeddings::{enumerate_embeddings, enumerate_maps, push_forward, Embedding};
use fraisse::ramsey::RamseyInstance;

/// A random instance with `|Emb(A,C)| <= 4` and `1 <= |Emb(B,C)| <= 6`,
/// distances multiples of 1/4, `B` an induced substructure of `C`.
pub fn random_ramsey_instance(rng: &mut ChaCha8Rng, epsilon: Rational) -> Option<RamseyInstance> {
    let n = rng.gen_range(2..=4);
    let predicate = rng.gen_bool(0.3);
    let c = structure_with(rng, n, 4, 4, predicate, false);
    let bsize = rng.gen_range(2..=n);
    let mut pts: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        pts.swap(i, rng.gen_range(0..=i));
    }
    pts.truncate(bsize);
    pts.sort();
    let b = c.induced(&pts).ok()?;
    let asize = if bsize >= 3 && rng.gen_bool(0.3) { 2 } else { 1 };
    let a_pts: Vec<usize> = (0..asize).collect();
    let a = PointedStructure::whole(b.induced(&a_pts).ok()?);
    let emb_ab = enumerate_maps(a.structure(), &b, 1_000_000).ok()?;
    let emb_ac = enumerate_embeddings(&a, &c).ok()?;
    let emb_bc = enumerate_maps(&b, &c, 1_000_000).ok()?;
    if emb_ac.len() > 4 || emb_bc.is_empty() || emb_bc.len() > 6 || emb_ab.len() < 2 {
        return None;
    }
    let mut family: Vec<Embedding> = emb_ab.into_iter().filter(|_| rng.gen_bool(0.7)).collect();
    if family.len() < 2 {
        return None;
    }
    family.truncate(4);
    RamseyInstance::new(a, b, family, epsilon, c).ok()
}

/// `ρ` matrix of `Emb(A,C)` and the index sets `F(β)` for an instance.
pub fn ramsey_tables(inst: &RamseyInstance) -> (Vec<Vec<Rational>>, Vec<Vec<usize>>) {
    let dom = enumerate_embeddings(&inst.a, &inst.c).unwrap();
    let rho = (0..dom.len())
        .map(|i| (0..dom.len()).map(|j| dom.rho(i, j)).collect())
        .collect();
    let images = enumerate_maps(&inst.b, &inst.c, 1_000_000)
        .unwrap()
        .iter()
        .map(|beta| {
            push_forward(&inst.family, beta)
                .unwrap()
                .iter()
                .map(|e| dom.index_of(e).unwrap())
                .collect()
        })
        .collect();
    (rho, images)
}

/// A pointed structure of the given arity whose points are its generators
/// plus possibly the constant; distances are multiples of `1/q`.
pub fn pointed_with(rng: &mut ChaCha8Rng, arity: usize, q: i64, predicate: bool, constant: bool) -> PointedStructure {
    loop {
        let n = rng.gen_range(1..=arity) + constant as usize;
        let s = structure_with(rng, n, q, q, predicate, constant);
        if let Some(p) = random_pointed(rng, s, arity) {
            return p;
        }
    }
}
