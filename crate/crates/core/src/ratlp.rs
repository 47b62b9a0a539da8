//! Exact linear programming over the rationals.
//!
//! Two-phase tableau simplex with Bland's rule. Columns are ordered as the
//! variables were declared, followed by slack and artificial columns in
//! constraint order, so the pivot sequence (and therefore the returned
//! vertex) depends only on the program as submitted.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Closed interval; `None` is an infinite end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bounds {
    pub fn nonnegative() -> Self {
        Bounds {
            lower: Some(Rational::zero()),
            upper: None,
        }
    }

    pub fn free() -> Self {
        Bounds {
            lower: None,
            upper: None,
        }
    }

    pub fn between(lower: Rational, upper: Rational) -> Self {
        Bounds {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    fn contains(&self, v: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|l| v >= l) && self.upper.as_ref().is_none_or(|u| v <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(VarId, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// A linear program. Variables are nonnegative unless declared otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    names: Vec<String>,
    bounds: Vec<Bounds>,
    objective: Vec<(VarId, Rational)>,
    sense: Sense,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub optimum: Option<Rational>,
    pub assignment: Option<Vec<Rational>>,
}

impl LpOutcome {
    fn bare(status: LpStatus) -> Self {
        LpOutcome {
            status,
            optimum: None,
            assignment: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> Option<&Rational> {
        self.assignment.as_ref().map(|a| &a[v.0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("term references undeclared variable #{0}")]
    UnknownVariable(usize),
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("variable `{0}` has an empty bound interval")]
    EmptyBounds(String),
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            names: Vec::new(),
            bounds: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Minimize,
            constraints: Vec::new(),
        }
    }

    /// Declares a nonnegative variable.
    pub fn var(&mut self, name: impl Into<String>) -> VarId {
        self.var_with(name, Bounds::nonnegative())
    }

    pub fn var_with(&mut self, name: impl Into<String>, bounds: Bounds) -> VarId {
        self.names.push(name.into());
        self.bounds.push(bounds);
        VarId(self.names.len() - 1)
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, Rational)>) {
        self.sense = sense;
        self.objective = terms;
    }

    pub fn constrain(&mut self, terms: Vec<(VarId, Rational)>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { terms, relation, rhs });
    }

    pub fn variable_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.names.len();
        let mut seen = std::collections::HashSet::new();
        for name in &self.names {
            if !seen.insert(name) {
                return Err(LpError::DuplicateName(name.clone()));
            }
        }
        for (name, b) in self.names.iter().zip(&self.bounds) {
            if let (Some(l), Some(u)) = (&b.lower, &b.upper) {
                if l > u {
                    return Err(LpError::EmptyBounds(name.clone()));
                }
            }
        }
        let terms = self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.terms.iter()));
        for (v, _) in terms {
            if v.0 >= n {
                return Err(LpError::UnknownVariable(v.0));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        eval(&self.objective, x)
    }

    /// Exact check of every constraint and bound.
    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.names.len()
            && self.bounds.iter().zip(x).all(|(b, v)| b.contains(v))
            && self.constraints.iter().all(|c| {
                let lhs = eval(&c.terms, x);
                match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                }
            })
    }
}

fn eval(terms: &[(VarId, Rational)], x: &[Rational]) -> Rational {
    terms.iter().fold(Rational::zero(), |acc, (v, c)| acc + c * &x[v.0])
}

/// Solves to exact optimality.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return Ok(LpOutcome::bare(LpStatus::Infeasible));
    }
    let mut cost = vec![Rational::zero(); t.cols];
    let flip = lp.sense == Sense::Maximize;
    for (v, c) in &lp.objective {
        for (col, sign) in t.map[v.0].columns() {
            let c = if flip { -c } else { c.clone() };
            if sign {
                cost[col] += c;
            } else {
                cost[col] -= c;
            }
        }
    }
    if !t.optimize(&cost) {
        return Ok(LpOutcome::bare(LpStatus::Unbounded));
    }
    let x = t.assignment(lp.variable_count());
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        optimum: Some(lp.objective_value(&x)),
        assignment: Some(x),
    })
}

/// Phase one only: any feasible point, or infeasibility.
pub fn feasible(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return Ok(LpOutcome::bare(LpStatus::Infeasible));
    }
    let x = t.assignment(lp.variable_count());
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        optimum: Some(lp.objective_value(&x)),
        assignment: Some(x),
    })
}

/// How an original variable is expressed in tableau columns.
#[derive(Clone)]
enum VarMap {
    /// x = offset + y
    Shift { col: usize, offset: Rational },
    /// x = offset - y
    Mirror { col: usize, offset: Rational },
    /// x = y+ - y-
    Split { pos: usize, neg: usize },
}

impl VarMap {
    fn columns(&self) -> Vec<(usize, bool)> {
        match self {
            VarMap::Shift { col, .. } => vec![(*col, true)],
            VarMap::Mirror { col, .. } => vec![(*col, false)],
            VarMap::Split { pos, neg } => vec![(*pos, true), (*neg, false)],
        }
    }

    fn offset(&self) -> Rational {
        match self {
            VarMap::Shift { offset, .. } | VarMap::Mirror { offset, .. } => offset.clone(),
            VarMap::Split { .. } => Rational::zero(),
        }
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
    artificial_start: usize,
    artificial_active: bool,
    map: Vec<VarMap>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut map = Vec::with_capacity(lp.variable_count());
        let mut structural = 0;
        // (column, upper bound) rows for doubly bounded variables
        let mut caps: Vec<(usize, Rational)> = Vec::new();
        for b in &lp.bounds {
            match (&b.lower, &b.upper) {
                (Some(l), u) => {
                    map.push(VarMap::Shift {
                        col: structural,
                        offset: l.clone(),
                    });
                    if let Some(u) = u {
                        caps.push((structural, u - l));
                    }
                    structural += 1;
                }
                (None, Some(u)) => {
                    map.push(VarMap::Mirror {
                        col: structural,
                        offset: u.clone(),
                    });
                    structural += 1;
                }
                (None, None) => {
                    map.push(VarMap::Split {
                        pos: structural,
                        neg: structural + 1,
                    });
                    structural += 2;
                }
            }
        }

        // Rows as (coefficients over structural columns, relation, rhs).
        let mut raw: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
        for c in &lp.constraints {
            let mut coef = vec![Rational::zero(); structural];
            let mut rhs = c.rhs.clone();
            for (v, a) in &c.terms {
                let m = &map[v.0];
                rhs -= a * m.offset();
                for (col, sign) in m.columns() {
                    if sign {
                        coef[col] += a;
                    } else {
                        coef[col] -= a;
                    }
                }
            }
            raw.push((coef, c.relation, rhs));
        }
        for (col, cap) in caps {
            let mut coef = vec![Rational::zero(); structural];
            coef[col] = Rational::one();
            raw.push((coef, Relation::Le, cap));
        }
        for r in raw.iter_mut() {
            if r.2.is_negative() {
                for a in r.0.iter_mut() {
                    *a = -&*a;
                }
                r.2 = -&r.2;
                r.1 = match r.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let slack_count = raw.iter().filter(|r| r.1 != Relation::Eq).count();
        let art_count = raw.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = structural + slack_count;
        let cols = artificial_start + art_count;
        let mut rows = Vec::with_capacity(raw.len());
        let mut rhs = Vec::with_capacity(raw.len());
        let mut basis = Vec::with_capacity(raw.len());
        let (mut s, mut a) = (structural, artificial_start);
        for (coef, rel, b) in raw {
            let mut row = coef;
            row.resize(cols, Rational::zero());
            match rel {
                Relation::Le => {
                    row[s] = Rational::one();
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -Rational::one();
                    s += 1;
                    row[a] = Rational::one();
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = Rational::one();
                    basis.push(a);
                    a += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Tableau {
            rows,
            rhs,
            basis,
            cols,
            artificial_start,
            artificial_active: true,
            map,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[r] *= &inv;
        let nz: Vec<usize> = (0..self.cols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.rows[i][j] -= d;
            }
            let d = &f * &prhs;
            self.rhs[i] -= d;
        }
        self.basis[r] = c;
    }

    fn eligible(&self, j: usize) -> bool {
        self.artificial_active || j < self.artificial_start
    }

    /// Minimizes `cost · y` from the current basic feasible solution.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational]) -> bool {
        // reduced costs d_j = c_j - sum_i c_B(i) a_ij, updated per pivot
        let mut reduced = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= &cost[b] * a;
                }
            }
        }
        loop {
            let entering = (0..self.cols).find(|&j| self.eligible(j) && reduced[j].is_negative());
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
            let f = reduced[c].clone();
            for (j, a) in self.rows[r].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= &f * a;
                }
            }
        }
    }

    fn phase_one(&mut self) -> bool {
        if self.artificial_start == self.cols {
            self.artificial_active = false;
            return true;
        }
        let mut cost = vec![Rational::zero(); self.cols];
        for c in cost.iter_mut().skip(self.artificial_start) {
            *c = Rational::one();
        }
        self.optimize(&cost);
        let infeasibility = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(b, _)| **b >= self.artificial_start)
            .fold(Rational::zero(), |acc, (_, v)| acc + v);
        if infeasibility.is_positive() {
            return false;
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.artificial_start {
                match (0..self.artificial_start).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        self.artificial_active = false;
        true
    }

    fn assignment(&self, n: usize) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); self.cols];
        for (i, &b) in self.basis.iter().enumerate() {
            y[b] = self.rhs[i].clone();
        }
        (0..n)
            .map(|v| match &self.map[v] {
                VarMap::Shift { col, offset } => offset + &y[*col],
                VarMap::Mirror { col, offset } => offset - &y[*col],
                VarMap::Split { pos, neg } => &y[*pos] - &y[*neg],
            })
            .collect()
    }
}
