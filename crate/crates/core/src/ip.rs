//! A small exact solver for integer programs with bounded variables.
//!
//! The LP relaxation is solved by a bounded-variable primal simplex over
//! exact rationals (two phases, Bland's rule), and integrality is enforced
//! by best-first branch-and-bound on the most fractional variable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{resource, Error, Result};

type Q = BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coefficients: Vec<i64>,
    pub relation: Relation,
    pub rhs: i64,
}

impl Constraint {
    fn holds(&self, values: &[i64]) -> bool {
        let lhs: i128 = self
            .coefficients
            .iter()
            .zip(values)
            .map(|(&a, &x)| a as i128 * x as i128)
            .sum();
        let rhs = self.rhs as i128;
        match self.relation {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

/// Integer variables with finite bounds, linear rows, and a linear objective.
///
/// Variables are declared first; every row and the objective are dense over
/// the declared variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerProgram {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<i64>,
    sense: Sense,
}

impl IntegerProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense,
        }
    }

    /// Adds a variable with objective coefficient zero and returns its index.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> Result<usize> {
        if lower > upper {
            return Err(Error::Model(format!("empty bounds [{lower}, {upper}]")));
        }
        if !self.constraints.is_empty() {
            return Err(Error::Model("variables must be declared before constraints".into()));
        }
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(0);
        Ok(self.variables.len() - 1)
    }

    pub fn add_constraint(&mut self, coefficients: Vec<i64>, relation: Relation, rhs: i64) -> Result<usize> {
        if coefficients.len() != self.variables.len() {
            return Err(Error::Model(format!(
                "row has {} coefficients, program has {} variables",
                coefficients.len(),
                self.variables.len()
            )));
        }
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Convenience wrapper taking `(variable, coefficient)` pairs.
    pub fn add_sparse_constraint(&mut self, terms: &[(usize, i64)], relation: Relation, rhs: i64) -> Result<usize> {
        let mut row = vec![0; self.variables.len()];
        for &(v, a) in terms {
            let slot = row
                .get_mut(v)
                .ok_or_else(|| Error::Model(format!("unknown variable {v}")))?;
            *slot += a;
        }
        self.add_constraint(row, relation, rhs)
    }

    pub fn set_objective_coefficient(&mut self, variable: usize, coefficient: i64) {
        self.objective[variable] = coefficient;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[i64] {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// The same program with columns reordered: new column `i` is old column `order[i]`.
    pub fn permute_variables(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.variables.len()];
        if order.len() != seen.len() || order.iter().any(|&o| o >= seen.len() || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::Model("not a permutation of the variables".into()));
        }
        Ok(Self {
            variables: order.iter().map(|&o| self.variables[o].clone()).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint {
                    coefficients: order.iter().map(|&o| c.coefficients[o]).collect(),
                    relation: c.relation,
                    rhs: c.rhs,
                })
                .collect(),
            objective: order.iter().map(|&o| self.objective[o]).collect(),
            sense: self.sense,
        })
    }

    /// The same program with row `row` multiplied by a positive factor.
    pub fn scale_constraint(&self, row: usize, factor: i64) -> Result<Self> {
        if factor <= 0 {
            return Err(Error::Model("scaling factor must be positive".into()));
        }
        let mut out = self.clone();
        let c = out
            .constraints
            .get_mut(row)
            .ok_or_else(|| Error::Model(format!("unknown row {row}")))?;
        for a in &mut c.coefficients {
            *a = a.checked_mul(factor).ok_or(Error::Overflow("constraint scaling"))?;
        }
        c.rhs = c.rhs.checked_mul(factor).ok_or(Error::Overflow("constraint scaling"))?;
        Ok(out)
    }
}

impl fmt::Display for IntegerProgram {
    /// LP-like text: `maximize`/`minimize`, `subject to`, `bounds`, `end`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |i: usize| {
            let n = &self.variables[i].name;
            if n.is_empty() {
                format!("v{i}")
            } else {
                n.clone()
            }
        };
        let linear = |row: &[i64]| -> String {
            let terms: Vec<String> = row
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != 0)
                .map(|(i, a)| format!("{a:+} {}", name(i)))
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" ")
            }
        };
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        writeln!(f, "{sense}")?;
        writeln!(f, "  obj: {}", linear(&self.objective))?;
        writeln!(f, "subject to")?;
        for (i, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(f, "  c{i}: {} {rel} {}", linear(&c.coefficients), c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (i, v) in self.variables.iter().enumerate() {
            writeln!(f, "  {} <= {} <= {}", v.lower, name(i), v.upper)?;
        }
        writeln!(f, "end")
    }
}

/// An integer point that satisfies every bound and row of its program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IpSolution {
    values: Vec<i64>,
    objective_value: i64,
}

impl IpSolution {
    /// Checks `values` against `program` and computes the objective.
    pub fn new(program: &IntegerProgram, values: Vec<i64>) -> Result<Self> {
        if values.len() != program.variables.len() {
            return Err(Error::Internal("solution length mismatch".into()));
        }
        for (v, x) in program.variables.iter().zip(&values) {
            if *x < v.lower || *x > v.upper {
                return Err(Error::Internal(format!("{} = {x} violates its bounds", v.name)));
            }
        }
        if let Some(i) = program.constraints.iter().position(|c| !c.holds(&values)) {
            return Err(Error::Internal(format!("solution violates row {i}")));
        }
        let objective: i128 = program
            .objective
            .iter()
            .zip(&values)
            .map(|(&c, &x)| c as i128 * x as i128)
            .sum();
        let objective_value = i64::try_from(objective).map_err(|_| Error::Overflow("objective value"))?;
        Ok(Self {
            values,
            objective_value,
        })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn objective_value(&self) -> i64 {
        self.objective_value
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOptions {
    pub max_nodes: usize,
    pub max_lp_iterations: usize,
    pub max_variables: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_nodes: 200_000,
            max_lp_iterations: 100_000,
            max_variables: 5_000,
        }
    }
}

enum Lp {
    Infeasible,
    Optimal { value: Q, x: Vec<Q> },
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    lo: Vec<Option<Q>>,
    hi: Vec<Option<Q>>,
    val: Vec<Q>,
}

fn q(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

impl Tableau {
    /// Runs the primal simplex maximizing `cost` from the current basis.
    fn maximize(&mut self, cost: &[Q], iterations: &mut usize) -> Result<()> {
        let cols = self.val.len();
        loop {
            if *iterations == 0 {
                return Err(resource("LP iteration limit reached"));
            }
            *iterations -= 1;
            // entering column: lowest index with an improving reduced cost
            let mut entering = None;
            for k in 0..cols {
                if self.is_basic[k] {
                    continue;
                }
                let mut d = cost[k].clone();
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if !row[k].is_zero() && !cost[b].is_zero() {
                        d -= &cost[b] * &row[k];
                    }
                }
                let up = d.is_positive() && self.hi[k].as_ref().is_none_or(|h| self.val[k] < *h);
                let down = d.is_negative() && self.lo[k].as_ref().is_none_or(|l| self.val[k] > *l);
                if up || down {
                    entering = Some((k, up));
                    break;
                }
            }
            let Some((k, up)) = entering else {
                return Ok(());
            };
            let dir = if up { Q::one() } else { -Q::one() };

            // ratio test; ties go to the lowest variable index
            let mut best: Option<(Q, usize, Option<usize>)> = None;
            let consider = |theta: Q, var: usize, row: Option<usize>, best: &mut Option<(Q, usize, Option<usize>)>| {
                let better = match best {
                    None => true,
                    Some((t, v, _)) => theta < *t || (theta == *t && var < *v),
                };
                if better {
                    *best = Some((theta, var, row));
                }
            };
            if let (Some(l), Some(h)) = (&self.lo[k], &self.hi[k]) {
                consider(h - l, k, None, &mut best);
            }
            for (i, row) in self.rows.iter().enumerate() {
                if row[k].is_zero() {
                    continue;
                }
                let b = self.basis[i];
                let rate = -(&row[k] * &dir);
                if rate.is_positive() {
                    if let Some(h) = &self.hi[b] {
                        consider((h - &self.val[b]) / &rate, b, Some(i), &mut best);
                    }
                } else if let Some(l) = &self.lo[b] {
                    consider((&self.val[b] - l) / -&rate, b, Some(i), &mut best);
                }
            }
            let Some((theta, _, leave)) = best else {
                return Err(Error::Internal("unbounded LP relaxation".into()));
            };

            if !theta.is_zero() {
                self.val[k] += &dir * &theta;
                for i in 0..self.rows.len() {
                    if !self.rows[i][k].is_zero() {
                        let b = self.basis[i];
                        let delta = -(&self.rows[i][k] * &dir) * &theta;
                        self.val[b] += delta;
                    }
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.val[k] = if up { self.hi[k].clone() } else { self.lo[k].clone() }.expect("finite");
                }
                Some(r) => {
                    let b = self.basis[r];
                    let rate_positive = (-(&self.rows[r][k] * &dir)).is_positive();
                    self.val[b] = if rate_positive { self.hi[b].clone() } else { self.lo[b].clone() }.expect("finite");
                    self.pivot(r, k);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let piv = self.rows[r][k].clone();
        if !piv.is_one() {
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a /= &piv;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[k].is_zero() {
                continue;
            }
            let factor = row[k].clone();
            for (a, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *a -= &factor * p;
                }
            }
        }
        self.rows[r] = pivot_row;
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[k] = true;
        self.basis[r] = k;
    }
}

/// Maximizes `cost · x` over the LP relaxation with the given variable bounds.
fn solve_lp(program: &IntegerProgram, cost: &[i64], lo: &[i64], hi: &[i64], iterations: &mut usize) -> Result<Lp> {
    let nv = program.variables.len();
    let nr = program.constraints.len();
    let cols = nv + 2 * nr;
    let mut t = Tableau {
        rows: Vec::with_capacity(nr),
        basis: Vec::with_capacity(nr),
        is_basic: vec![false; cols],
        lo: Vec::with_capacity(cols),
        hi: Vec::with_capacity(cols),
        val: Vec::with_capacity(cols),
    };
    for j in 0..nv {
        t.lo.push(Some(q(lo[j])));
        t.hi.push(Some(q(hi[j])));
        t.val.push(q(lo[j]));
    }
    // row slacks w_i = a_i x, bounded by the relation
    for c in &program.constraints {
        let b = q(c.rhs);
        let (l, h) = match c.relation {
            Relation::Le => (None, Some(b.clone())),
            Relation::Ge => (Some(b.clone()), None),
            Relation::Eq => (Some(b.clone()), Some(b.clone())),
        };
        t.lo.push(l);
        t.hi.push(h);
        t.val.push(b);
    }
    for (i, c) in program.constraints.iter().enumerate() {
        let ax: i128 = c
            .coefficients
            .iter()
            .zip(lo)
            .map(|(&a, &x)| a as i128 * x as i128)
            .sum();
        let gap = c.rhs as i128 - ax;
        let e: i64 = if gap >= 0 { 1 } else { -1 };
        let mut row = vec![Q::zero(); cols];
        for (j, &a) in c.coefficients.iter().enumerate() {
            if a != 0 {
                row[j] = q(a * e);
            }
        }
        row[nv + i] = q(-e);
        row[nv + nr + i] = Q::one();
        t.rows.push(row);
        t.basis.push(nv + nr + i);
        t.is_basic[nv + nr + i] = true;
        t.lo.push(Some(Q::zero()));
        t.hi.push(None);
        t.val.push(Q::from_integer(BigInt::from(gap.abs())));
    }

    let mut phase1 = vec![Q::zero(); cols];
    for c in phase1.iter_mut().skip(nv + nr) {
        *c = -Q::one();
    }
    t.maximize(&phase1, iterations)?;
    if t.val[nv + nr..].iter().any(|v| !v.is_zero()) {
        return Ok(Lp::Infeasible);
    }
    for a in nv + nr..cols {
        t.hi[a] = Some(Q::zero());
    }
    let mut phase2 = vec![Q::zero(); cols];
    for (j, &c) in cost.iter().enumerate() {
        phase2[j] = q(c);
    }
    t.maximize(&phase2, iterations)?;
    let x: Vec<Q> = t.val[..nv].to_vec();
    let value = x
        .iter()
        .zip(cost)
        .filter(|(_, &c)| c != 0)
        .fold(Q::zero(), |acc, (x, &c)| acc + x * q(c));
    Ok(Lp::Optimal { value, x })
}

struct Node {
    bound: Q,
    seq: u64,
    lo: Vec<i64>,
    hi: Vec<i64>,
    x: Vec<Q>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // best bound first, then earliest created
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn floor_i128(x: &Q) -> Result<i128> {
    x.floor()
        .to_integer()
        .to_i128()
        .ok_or(Error::Overflow("LP bound"))
}

pub fn solve_ip(program: &IntegerProgram) -> Result<Option<IpSolution>> {
    solve_ip_with(program, &SolveOptions::default())
}

/// Optimal integer solution, `None` when the program is infeasible.
pub fn solve_ip_with(program: &IntegerProgram, options: &SolveOptions) -> Result<Option<IpSolution>> {
    let nv = program.variables.len();
    if nv > options.max_variables {
        return Err(resource(format!(
            "{nv} variables exceed the budget of {}",
            options.max_variables
        )));
    }
    let cost: Vec<i64> = match program.sense {
        Sense::Maximize => program.objective.clone(),
        Sense::Minimize => program
            .objective
            .iter()
            .map(|c| c.checked_neg().ok_or(Error::Overflow("objective")))
            .collect::<Result<_>>()?,
    };
    let mut iterations = options.max_lp_iterations;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut incumbent: Option<(i128, Vec<i64>)> = None;

    let lo: Vec<i64> = program.variables.iter().map(|v| v.lower).collect();
    let hi: Vec<i64> = program.variables.iter().map(|v| v.upper).collect();
    let mut push = |lo: Vec<i64>, hi: Vec<i64>, heap: &mut BinaryHeap<Node>, iterations: &mut usize| -> Result<()> {
        if let Lp::Optimal { value, x } = solve_lp(program, &cost, &lo, &hi, iterations)? {
            heap.push(Node {
                bound: value,
                seq,
                lo,
                hi,
                x,
            });
            seq += 1;
        }
        Ok(())
    };
    push(lo, hi, &mut heap, &mut iterations)?;

    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        let bound = floor_i128(&node.bound)?;
        if incumbent.as_ref().is_some_and(|(best, _)| bound <= *best) {
            // best-first: every remaining node is at most this bound
            break;
        }
        nodes += 1;
        if nodes > options.max_nodes {
            return Err(resource(format!("branch-and-bound exceeded {} nodes", options.max_nodes)));
        }
        let half = Q::new(BigInt::one(), BigInt::from(2));
        let mut branch: Option<(usize, Q)> = None;
        for (j, x) in node.x.iter().enumerate() {
            let frac = x - x.floor();
            if frac.is_zero() {
                continue;
            }
            let score = if frac > half { Q::one() - &frac } else { frac };
            if branch.as_ref().is_none_or(|(_, s)| score > *s) {
                branch = Some((j, score));
            }
        }
        match branch {
            None => {
                let values: Vec<i64> = node
                    .x
                    .iter()
                    .map(|x| x.to_integer().to_i64().ok_or(Error::Overflow("variable value")))
                    .collect::<Result<_>>()?;
                let value: i128 = values.iter().zip(&cost).map(|(&x, &c)| x as i128 * c as i128).sum();
                if incumbent.as_ref().is_none_or(|(best, _)| value > *best) {
                    incumbent = Some((value, values));
                }
            }
            Some((j, _)) => {
                let down = node.x[j].floor().to_integer().to_i64().ok_or(Error::Overflow("branch"))?;
                let mut hi_down = node.hi.clone();
                hi_down[j] = down;
                push(node.lo.clone(), hi_down, &mut heap, &mut iterations)?;
                let mut lo_up = node.lo;
                lo_up[j] = down + 1;
                push(lo_up, node.hi, &mut heap, &mut iterations)?;
            }
        }
    }
    incumbent
        .map(|(_, values)| IpSolution::new(program, values))
        .transpose()
}

/// The repeated blocks of an N-fold program.
///
/// `top` is the linking brick repeated horizontally over the first rows;
/// `bottom` is the brick placed on the block diagonal below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NFoldBrick {
    pub top: Vec<Vec<i64>>,
    pub bottom: Vec<Vec<i64>>,
}

impl NFoldBrick {
    fn width(&self) -> Option<usize> {
        let w = self.top.first().or(self.bottom.first())?.len();
        self.top
            .iter()
            .chain(&self.bottom)
            .all(|r| r.len() == w)
            .then_some(w)
    }
}

/// Whether the constraint matrix is `blocks` copies of `brick` in N-fold layout.
pub fn check_nfold_shape(program: &IntegerProgram, blocks: usize, brick: &NFoldBrick) -> bool {
    let Some(width) = brick.width() else {
        return false;
    };
    let s = brick.top.len();
    let r = brick.bottom.len();
    if program.variables.len() != blocks * width || program.constraints.len() != s + blocks * r {
        return false;
    }
    let rows = &program.constraints;
    for (i, top) in brick.top.iter().enumerate() {
        let row = &rows[i].coefficients;
        if (0..blocks).any(|b| row[b * width..(b + 1) * width] != top[..]) {
            return false;
        }
    }
    for b in 0..blocks {
        for (i, bottom) in brick.bottom.iter().enumerate() {
            let row = &rows[s + b * r + i].coefficients;
            for other in 0..blocks {
                let slice = &row[other * width..(other + 1) * width];
                let ok = if other == b {
                    slice == &bottom[..]
                } else {
                    slice.iter().all(|&a| a == 0)
                };
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}
