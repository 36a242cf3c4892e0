//! Algorithms for any number of services.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{inapplicable, resource, Error, Result};
use crate::ip::{solve_ip, IntegerProgram, IpSolution, NFoldBrick, Relation, Sense};
use crate::model::{Assignment, FamilyId, Instance};
use crate::single_service::count_objective_applies;

/// Default cap on `load states * max(n, 1)` for [`dp_maxutil`].
pub const DEFAULT_DP_BUDGET: u64 = 10_000_000;
/// Default cap on the number of distinct family types for [`typed_maxutil`].
pub const DEFAULT_TYPE_BUDGET: usize = 256;
/// Default cap on the number of pair subsets tried by [`xp_ustar_decide`].
pub const DEFAULT_SUBSET_BUDGET: u64 = 10_000_000;

/// Mixed-radix encoding of the loads of all places, places first, then services.
#[derive(Debug, Clone)]
struct LoadSpace {
    radix: Vec<u64>,
    stride: Vec<u64>,
    states: u64,
    t: usize,
}

impl LoadSpace {
    fn new(inst: &Instance) -> Option<Self> {
        let radix: Vec<u64> = inst
            .places()
            .iter()
            .flat_map(|p| p.upper.iter().map(|&c| c.checked_add(1)))
            .collect::<Option<_>>()?;
        let mut stride = vec![0u64; radix.len()];
        let mut acc = 1u64;
        for i in (0..radix.len()).rev() {
            stride[i] = acc;
            acc = acc.checked_mul(radix[i])?;
        }
        Some(Self {
            radix,
            stride,
            states: acc,
            t: inst.services(),
        })
    }

    fn digit(&self, state: u64, place: usize, service: usize) -> u64 {
        let i = place * self.t + service;
        (state / self.stride[i]) % self.radix[i]
    }

    /// State index offset of adding `req` to `place`.
    fn shift(&self, place: usize, req: &[u64]) -> u64 {
        req.iter()
            .enumerate()
            .map(|(k, &r)| r * self.stride[place * self.t + k])
            .sum()
    }

    fn fits_below(&self, state: u64, place: usize, req: &[u64]) -> bool {
        req.iter()
            .enumerate()
            .all(|(k, &r)| self.digit(state, place, k) >= r)
    }
}

struct DpTable {
    space: LoadSpace,
    /// `choice[i][state]`: 0 leaves family `i` unassigned, `j + 1` sends it to place `j`.
    choice: Vec<Vec<u16>>,
    last: Vec<Option<i64>>,
}

fn dp_table(inst: &Instance, budget: u64) -> Result<DpTable> {
    let n = inst.n();
    let m = inst.m();
    if m >= u16::MAX as usize {
        return Err(resource("too many places for the load-state table"));
    }
    let space = LoadSpace::new(inst).ok_or_else(|| resource("load-state space overflows"))?;
    if space.states.saturating_mul(n.max(1) as u64) > budget {
        return Err(resource(format!(
            "{} load states for {n} families exceed the budget of {budget}",
            space.states
        )));
    }
    let states = space.states as usize;
    let mut prev: Vec<Option<i64>> = vec![None; states];
    prev[0] = Some(0);
    let mut choice = Vec::with_capacity(n);
    for f in 0..n {
        let req = inst.requirement(f);
        let shifts: Vec<u64> = (0..m).map(|j| space.shift(j, req)).collect();
        let layer: Vec<(Option<i64>, u16)> = (0..states)
            .into_par_iter()
            .map(|s| {
                let mut best = (prev[s], 0u16);
                for j in 0..m {
                    if !space.fits_below(s as u64, j, req) {
                        continue;
                    }
                    let Some(before) = prev[s - shifts[j] as usize] else {
                        continue;
                    };
                    let value = before
                        .checked_add(inst.utility_or_zero(f, j))
                        .ok_or(Error::Overflow("dynamic program value"))?;
                    if best.0.is_none_or(|b| value > b) {
                        best = (Some(value), j as u16 + 1);
                    }
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        let (values, picks): (Vec<_>, Vec<_>) = layer.into_iter().unzip();
        prev = values;
        choice.push(picks);
    }
    Ok(DpTable {
        space,
        choice,
        last: prev,
    })
}

impl DpTable {
    fn reconstruct(&self, inst: &Instance, mut state: u64) -> Assignment {
        let mut out = Assignment::unassigned(self.choice.len());
        for f in (0..self.choice.len()).rev() {
            let c = self.choice[f][state as usize];
            if c > 0 {
                let j = c as usize - 1;
                out.set(f, Some(j));
                state -= self.space.shift(j, inst.requirement(f));
            }
        }
        debug_assert_eq!(state, 0);
        out
    }

    fn within_lower(&self, inst: &Instance, state: u64) -> bool {
        inst.places().iter().enumerate().all(|(j, p)| {
            p.lower
                .iter()
                .enumerate()
                .all(|(k, &lo)| self.space.digit(state, j, k) >= lo)
        })
    }
}

/// Exact maximum-utility feasible assignment by dynamic programming over
/// load states. Missing utilities count as zero.
pub fn dp_maxutil(inst: &Instance) -> Result<Option<(Assignment, i64)>> {
    dp_maxutil_with_budget(inst, DEFAULT_DP_BUDGET)
}

pub fn dp_maxutil_with_budget(inst: &Instance, budget: u64) -> Result<Option<(Assignment, i64)>> {
    let table = dp_table(inst, budget)?;
    let mut best: Option<(u64, i64)> = None;
    for (s, value) in table.last.iter().enumerate() {
        if let Some(v) = *value {
            if best.is_none_or(|(_, b)| v > b) && table.within_lower(inst, s as u64) {
                best = Some((s as u64, v));
            }
        }
    }
    Ok(best.map(|(s, v)| (table.reconstruct(inst, s), v)))
}

/// Decoding data for [`build_nfold`].
#[derive(Debug, Clone)]
pub struct NFoldContext {
    /// Distinct requirement vectors, sorted.
    pub requirement_vectors: Vec<Vec<u64>>,
    /// Families per requirement vector, in index order.
    pub families: Vec<Vec<FamilyId>>,
    pub places: usize,
    pub services: usize,
}

impl NFoldContext {
    /// Columns per place: one per requirement vector, then one slack per service.
    pub fn block_width(&self) -> usize {
        self.requirement_vectors.len() + self.services
    }

    /// The repeated brick `[I 0; A_R I]`.
    pub fn brick(&self) -> NFoldBrick {
        let d = self.requirement_vectors.len();
        let t = self.services;
        let top = (0..d)
            .map(|i| (0..d + t).map(|c| i64::from(c == i)).collect())
            .collect();
        let bottom = (0..t)
            .map(|k| {
                self.requirement_vectors
                    .iter()
                    .map(|r| r[k] as i64)
                    .chain((0..t).map(|c| i64::from(c == k)))
                    .collect()
            })
            .collect();
        NFoldBrick { top, bottom }
    }

    pub fn decode(&self, solution: &IpSolution) -> Assignment {
        let values = solution.values();
        let width = self.block_width();
        let mut out = Assignment::unassigned(self.families.iter().map(Vec::len).sum());
        for (v, pool) in self.families.iter().enumerate() {
            let mut next = pool.iter();
            for j in 0..self.places {
                for _ in 0..values[j * width + v] {
                    let f = next.next().expect("linking row bounds the count");
                    out.set(*f, Some(j));
                }
            }
        }
        out
    }
}

/// Block-structured program counting assigned families: per place, one
/// variable per distinct requirement vector plus one slack per service.
pub fn build_nfold(inst: &Instance) -> Result<(IntegerProgram, NFoldContext)> {
    if !count_objective_applies(inst) {
        return Err(inapplicable(
            "needs equal positive utilities, indifferent preferences, or no objective",
        ));
    }
    let mut groups: BTreeMap<Vec<u64>, Vec<FamilyId>> = BTreeMap::new();
    for (f, family) in inst.families().iter().enumerate() {
        groups.entry(family.requirements.clone()).or_default().push(f);
    }
    let (requirement_vectors, families): (Vec<_>, Vec<_>) = groups.into_iter().unzip();
    let t = inst.services();
    let as_i64 = |v: u64| i64::try_from(v).map_err(|_| Error::Overflow("quota"));

    let mut ip = IntegerProgram::new(Sense::Maximize);
    for (j, place) in inst.places().iter().enumerate() {
        for (v, pool) in families.iter().enumerate() {
            let x = ip.add_variable(format!("x_{j}_{v}"), 0, pool.len() as i64)?;
            ip.set_objective_coefficient(x, 1);
        }
        for k in 0..t {
            ip.add_variable(format!("y_{j}_{k}"), 0, as_i64(place.upper[k] - place.lower[k])?)?;
        }
    }
    let ctx = NFoldContext {
        requirement_vectors,
        families,
        places: inst.m(),
        services: t,
    };
    let width = ctx.block_width();
    for (v, pool) in ctx.families.iter().enumerate() {
        let terms: Vec<(usize, i64)> = (0..ctx.places).map(|j| (j * width + v, 1)).collect();
        ip.add_sparse_constraint(&terms, Relation::Le, pool.len() as i64)?;
    }
    for (j, place) in inst.places().iter().enumerate() {
        for k in 0..t {
            let mut terms: Vec<(usize, i64)> = ctx
                .requirement_vectors
                .iter()
                .enumerate()
                .map(|(v, r)| (j * width + v, r[k] as i64))
                .collect();
            terms.push((j * width + ctx.requirement_vectors.len() + k, 1));
            ip.add_sparse_constraint(&terms, Relation::Eq, as_i64(place.upper[k])?)?;
        }
    }
    Ok((ip, ctx))
}

/// Solves [`build_nfold`] and decodes it: the largest number of families a
/// feasible assignment can place.
pub fn solve_nfold(inst: &Instance) -> Result<Option<(Assignment, usize)>> {
    let (ip, ctx) = build_nfold(inst)?;
    let Some(solution) = solve_ip(&ip)? else {
        return Ok(None);
    };
    let assignment = ctx.decode(&solution);
    if !inst.is_feasible(&assignment) {
        return Err(Error::Internal("decoded block assignment is infeasible".into()));
    }
    let count = assignment.assigned_count();
    Ok(Some((assignment, count)))
}

/// Exact maximum-utility feasible assignment from an integer program over
/// family types (equal requirement and utility vectors).
pub fn typed_maxutil(inst: &Instance) -> Result<Option<(Assignment, i64)>> {
    typed_maxutil_with_budget(inst, DEFAULT_TYPE_BUDGET)
}

pub fn typed_maxutil_with_budget(inst: &Instance, max_types: usize) -> Result<Option<(Assignment, i64)>> {
    let m = inst.m();
    let mut groups: BTreeMap<(Vec<u64>, Vec<i64>), Vec<FamilyId>> = BTreeMap::new();
    for f in 0..inst.n() {
        let utilities: Vec<i64> = (0..m).map(|j| inst.utility_or_zero(f, j)).collect();
        groups
            .entry((inst.requirement(f).to_vec(), utilities))
            .or_default()
            .push(f);
    }
    if groups.len() > max_types {
        return Err(resource(format!(
            "{} family types exceed the budget of {max_types}",
            groups.len()
        )));
    }
    let types: Vec<((Vec<u64>, Vec<i64>), Vec<FamilyId>)> = groups.into_iter().collect();
    let d = types.len();
    let as_i64 = |v: u64| i64::try_from(v).map_err(|_| Error::Overflow("quota"));

    let mut ip = IntegerProgram::new(Sense::Maximize);
    for j in 0..m {
        for (tau, ((_, u), pool)) in types.iter().enumerate() {
            let x = ip.add_variable(format!("x_{j}_{tau}"), 0, pool.len() as i64)?;
            ip.set_objective_coefficient(x, u[j]);
        }
    }
    for (tau, (_, pool)) in types.iter().enumerate() {
        let terms: Vec<(usize, i64)> = (0..m).map(|j| (j * d + tau, 1)).collect();
        ip.add_sparse_constraint(&terms, Relation::Le, pool.len() as i64)?;
    }
    for (j, place) in inst.places().iter().enumerate() {
        for k in 0..inst.services() {
            let terms: Vec<(usize, i64)> = types
                .iter()
                .enumerate()
                .filter(|(_, ((r, _), _))| r[k] > 0)
                .map(|(tau, ((r, _), _))| (j * d + tau, r[k] as i64))
                .collect();
            ip.add_sparse_constraint(&terms, Relation::Le, as_i64(place.upper[k])?)?;
            if place.lower[k] > 0 {
                ip.add_sparse_constraint(&terms, Relation::Ge, as_i64(place.lower[k])?)?;
            }
        }
    }
    let Some(solution) = solve_ip(&ip)? else {
        return Ok(None);
    };
    let values = solution.values();
    let mut out = Assignment::unassigned(inst.n());
    for (tau, (_, pool)) in types.iter().enumerate() {
        let mut next = pool.iter();
        for j in 0..m {
            for _ in 0..values[j * d + tau] {
                let f = next.next().expect("type row bounds the count");
                out.set(*f, Some(j));
            }
        }
    }
    if !inst.is_feasible(&out) {
        return Err(Error::Internal("decoded type assignment is infeasible".into()));
    }
    let value = inst.total_utility(&out)?;
    if value != solution.objective_value() {
        return Err(Error::Internal("decoded utility differs from the program value".into()));
    }
    Ok(Some((out, value)))
}

/// Searches subsets of at most `u_star` positive-utility family-place pairs,
/// smallest first, for a feasible assignment with utility at least `u_star`.
pub fn xp_ustar_decide(inst: &Instance, u_star: i64) -> Result<Option<Assignment>> {
    xp_ustar_decide_with_budget(inst, u_star, DEFAULT_SUBSET_BUDGET)
}

pub fn xp_ustar_decide_with_budget(inst: &Instance, u_star: i64, budget: u64) -> Result<Option<Assignment>> {
    if inst.has_lower_quotas() {
        return Err(inapplicable("subset search needs an instance without lower quotas"));
    }
    let n = inst.n();
    if u_star <= 0 {
        return Ok(Some(Assignment::unassigned(n)));
    }
    let pairs: Vec<(FamilyId, usize)> = (0..n)
        .flat_map(|f| (0..inst.m()).map(move |j| (f, j)))
        .filter(|&(f, j)| inst.utility_or_zero(f, j) > 0)
        .collect();
    let max_size = (u_star as u64).min(n as u64) as usize;
    let mut total: u64 = 0;
    let mut binom: u64 = 1;
    for s in 0..=max_size.min(pairs.len()) {
        if s > 0 {
            binom = binom.saturating_mul((pairs.len() - s + 1) as u64) / s as u64;
        }
        total = total.saturating_add(binom);
    }
    if total > budget {
        return Err(resource(format!("{total} pair subsets exceed the budget of {budget}")));
    }

    for size in 1..=max_size.min(pairs.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut out = Assignment::unassigned(n);
            let mut distinct = true;
            let mut value = 0i64;
            for &i in &idx {
                let (f, j) = pairs[i];
                if out.get(f).is_some() {
                    distinct = false;
                    break;
                }
                out.set(f, Some(j));
                value += inst.utility_or_zero(f, j);
            }
            if distinct && value >= u_star && inst.is_feasible(&out) {
                return Ok(Some(out));
            }
            // next combination in lexicographic order
            let mut i = size;
            while i > 0 && idx[i - 1] == pairs.len() - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for k in i..size {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
    Ok(None)
}
