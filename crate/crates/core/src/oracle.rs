//! Reference solvers: exhaustive enumeration for tiny instances and the
//! partition-plus-matching algorithm that is exponential only in `n`.

use crate::error::{inapplicable, resource, Error, Result};
use crate::model::{Assignment, Instance, PlaceId};

/// Default cap on `(m+1)^n` for the enumeration oracles.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 9_765_625; // 5^10
/// Default cap on `n` for [`fptn_maxutil`].
pub const DEFAULT_FPTN_MAX_FAMILIES: usize = 9;

fn check_enumeration_budget(inst: &Instance, budget: u64) -> Result<()> {
    let base = inst.m() as u64 + 1;
    let mut total: u64 = 1;
    for _ in 0..inst.n() {
        total = total.saturating_mul(base);
        if total > budget {
            return Err(resource(format!(
                "enumeration of {}^{} assignments exceeds budget {budget}",
                base,
                inst.n()
            )));
        }
    }
    Ok(())
}

/// Depth-first walk over all assignments in lexicographic order
/// (unassigned first, then places by index), pruning on upper quotas.
/// Calls `visit` on every feasible (and, if requested, acceptable) leaf.
fn walk_feasible(
    inst: &Instance,
    acceptable_only: bool,
    visit: &mut dyn FnMut(&[Option<PlaceId>]) -> bool,
) {
    struct Walk<'a> {
        inst: &'a Instance,
        acceptable_only: bool,
        loads: Vec<Vec<u64>>,
        targets: Vec<Option<PlaceId>>,
    }
    impl Walk<'_> {
        // returns false to stop
        fn go(&mut self, f: usize, visit: &mut dyn FnMut(&[Option<PlaceId>]) -> bool) -> bool {
            if f == self.inst.n() {
                let ok = self
                    .inst
                    .places()
                    .iter()
                    .zip(&self.loads)
                    .all(|(p, l)| p.within_quotas(l));
                return !ok || visit(&self.targets);
            }
            self.targets[f] = None;
            if !self.go(f + 1, visit) {
                return false;
            }
            let req = self.inst.requirement(f).to_vec();
            for p in 0..self.inst.m() {
                if self.acceptable_only
                    && !self
                        .inst
                        .preferences()
                        .is_some_and(|prefs| prefs.is_acceptable(f, p))
                {
                    continue;
                }
                if !self.inst.places()[p].accommodates(&self.loads[p], &req) {
                    continue;
                }
                self.loads[p].iter_mut().zip(&req).for_each(|(l, r)| *l += r);
                self.targets[f] = Some(p);
                let cont = self.go(f + 1, visit);
                self.loads[p].iter_mut().zip(&req).for_each(|(l, r)| *l -= r);
                self.targets[f] = None;
                if !cont {
                    return false;
                }
            }
            true
        }
    }
    let mut walk = Walk {
        inst,
        acceptable_only,
        loads: vec![vec![0; inst.services()]; inst.m()],
        targets: vec![None; inst.n()],
    };
    walk.go(0, visit);
}

/// Every feasible assignment, in lexicographic order. Intended for tests.
pub fn feasible_assignments(inst: &Instance, acceptable_only: bool) -> Result<Vec<Assignment>> {
    check_enumeration_budget(inst, DEFAULT_ENUMERATION_BUDGET)?;
    let mut out = Vec::new();
    walk_feasible(inst, acceptable_only, &mut |t| {
        out.push(Assignment::new(t.to_vec()));
        true
    });
    Ok(out)
}

pub fn enumerate_maxutil(inst: &Instance) -> Result<Option<(Assignment, i64)>> {
    enumerate_maxutil_with_budget(inst, DEFAULT_ENUMERATION_BUDGET)
}

/// Maximum-utility feasible assignment by exhaustive search.
///
/// A missing utility matrix counts as all zeros, which turns this into a
/// feasibility search. Among optima the lexicographically smallest vector
/// wins (unassigned before place 0 before place 1, ...).
pub fn enumerate_maxutil_with_budget(
    inst: &Instance,
    budget: u64,
) -> Result<Option<(Assignment, i64)>> {
    check_enumeration_budget(inst, budget)?;
    let mut best: Option<(Vec<Option<PlaceId>>, i64)> = None;
    let mut overflow = false;
    walk_feasible(inst, false, &mut |t| {
        let mut value = 0i64;
        for (f, p) in t.iter().enumerate() {
            if let Some(p) = p {
                match value.checked_add(inst.utility_or_zero(f, *p)) {
                    Some(v) => value = v,
                    None => {
                        overflow = true;
                        return false;
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((t.to_vec(), value));
        }
        true
    });
    if overflow {
        return Err(Error::Overflow("total utility"));
    }
    Ok(best.map(|(t, v)| (Assignment::new(t), v)))
}

/// A feasible acceptable assignment that Pareto-improves `baseline`, if any.
pub fn find_pareto_improvement(inst: &Instance, baseline: &Assignment) -> Result<Option<Assignment>> {
    check_enumeration_budget(inst, DEFAULT_ENUMERATION_BUDGET)?;
    let prefs = inst
        .preferences()
        .ok_or_else(|| inapplicable("Pareto search needs preferences"))?;
    if !inst.is_feasible(baseline) || !inst.is_acceptable(baseline)? {
        return Err(Error::Precondition("baseline is not feasible and acceptable".into()));
    }
    let mut found = None;
    walk_feasible(inst, true, &mut |t| {
        let mut strict = false;
        for (f, &p) in t.iter().enumerate() {
            match prefs.compare(f, p, baseline.get(f)) {
                Some(std::cmp::Ordering::Less) | None => return true,
                Some(std::cmp::Ordering::Greater) => strict = true,
                Some(std::cmp::Ordering::Equal) => {}
            }
        }
        if strict {
            found = Some(Assignment::new(t.to_vec()));
            false
        } else {
            true
        }
    });
    Ok(found)
}

/// Pareto-optimal assignment by improvement search.
///
/// Starts from the first feasible acceptable assignment and follows
/// Pareto improvements until none exists.
pub fn enumerate_pareto(inst: &Instance) -> Result<Option<Assignment>> {
    check_enumeration_budget(inst, DEFAULT_ENUMERATION_BUDGET)?;
    if inst.preferences().is_none() {
        return Err(inapplicable("Pareto search needs preferences"));
    }
    let mut start = None;
    walk_feasible(inst, true, &mut |t| {
        start = Some(Assignment::new(t.to_vec()));
        false
    });
    let Some(mut current) = start else {
        return Ok(None);
    };
    while let Some(better) = find_pareto_improvement(inst, &current)? {
        current = better;
    }
    Ok(Some(current))
}

/// Weighted bipartite graph between groups (left) and places (right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingProblem {
    pub left: usize,
    pub right: usize,
    /// `(left, right, weight)`; parallel edges keep the heaviest.
    pub edges: Vec<(usize, usize, i64)>,
    /// Right nodes that must be matched.
    pub must_cover: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `(left, right)` pairs sorted by right node.
    pub pairs: Vec<(usize, usize)>,
    pub weight: i64,
}

/// Rectangular min-cost assignment; `cost` has `rows <= cols`.
/// Returns the column chosen for each row.
fn hungarian(cost: &[Vec<i128>], cols: usize) -> Vec<usize> {
    let rows = cost.len();
    let inf = i128::MAX / 4;
    let mut u = vec![0i128; rows + 1];
    let mut v = vec![0i128; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight matching that covers every `must_cover` node.
pub fn max_weight_matching(problem: &MatchingProblem) -> Option<Matching> {
    let (l, r) = (problem.left, problem.right);
    let mut weight: Vec<Vec<Option<i64>>> = vec![vec![None; l]; r];
    for &(a, b, w) in &problem.edges {
        let cell = &mut weight[b][a];
        *cell = Some(cell.map_or(w, |old| old.max(w)));
    }
    let scale: i128 = problem.edges.iter().map(|e| (e.2 as i128).abs()).sum::<i128>() + 1;
    let forbidden = 4 * scale;
    // rows: right nodes; columns: left nodes then one "stay unmatched" column per right node
    let cols = l + r;
    let cost: Vec<Vec<i128>> = (0..r)
        .map(|b| {
            (0..cols)
                .map(|c| {
                    if c < l {
                        weight[b][c].map_or(forbidden, |w| -(w as i128))
                    } else if c - l == b && !problem.must_cover[b] {
                        0
                    } else {
                        forbidden
                    }
                })
                .collect()
        })
        .collect();
    let choice = hungarian(&cost, cols);
    let mut pairs = Vec::new();
    let mut total = 0i64;
    for (b, &c) in choice.iter().enumerate() {
        if cost[b][c] >= forbidden {
            return None;
        }
        if c < l {
            pairs.push((c, b));
            total += weight[b][c].expect("allowed cell");
        }
    }
    Some(Matching { pairs, weight: total })
}

pub fn fptn_maxutil(inst: &Instance) -> Result<Option<(Assignment, i64)>> {
    fptn_maxutil_with_budget(inst, DEFAULT_FPTN_MAX_FAMILIES)
}

/// Maximum-utility feasible assignment via set partitions and matching.
///
/// Every partition of every subset of the families is tried; the groups
/// are matched to places by a maximum-weight matching that covers every
/// place with a nonzero lower quota.
pub fn fptn_maxutil_with_budget(
    inst: &Instance,
    max_families: usize,
) -> Result<Option<(Assignment, i64)>> {
    let n = inst.n();
    if n > max_families {
        return Err(resource(format!(
            "partition enumeration over {n} families exceeds budget {max_families}"
        )));
    }
    let t = inst.services();
    let must_cover: Vec<bool> = inst.places().iter().map(|p| p.has_lower_quota()).collect();
    // labels: None = unassigned, Some(g) = group g; groups open in order
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut best: Option<(Vec<Option<PlaceId>>, i64)> = None;

    fn evaluate(
        inst: &Instance,
        labels: &[Option<usize>],
        groups: usize,
        must_cover: &[bool],
        t: usize,
        best: &mut Option<(Vec<Option<PlaceId>>, i64)>,
    ) -> Result<()> {
        let mut sums = vec![vec![0u64; t]; groups];
        for (f, g) in labels.iter().enumerate() {
            if let Some(g) = g {
                for (s, r) in sums[*g].iter_mut().zip(inst.requirement(f)) {
                    *s = s.checked_add(*r).ok_or(Error::Overflow("group requirement"))?;
                }
            }
        }
        let mut edges = Vec::new();
        for (g, sum) in sums.iter().enumerate() {
            for (p, place) in inst.places().iter().enumerate() {
                if place.within_quotas(sum) {
                    let mut w = 0i64;
                    for (f, lg) in labels.iter().enumerate() {
                        if *lg == Some(g) {
                            w = w
                                .checked_add(inst.utility_or_zero(f, p))
                                .ok_or(Error::Overflow("group utility"))?;
                        }
                    }
                    edges.push((g, p, w));
                }
            }
        }
        let problem = MatchingProblem {
            left: groups,
            right: inst.m(),
            edges,
            must_cover: must_cover.to_vec(),
        };
        if let Some(matching) = max_weight_matching(&problem) {
            if best.as_ref().is_none_or(|(_, b)| matching.weight > *b) {
                let mut place_of = vec![None; groups];
                for &(g, p) in &matching.pairs {
                    place_of[g] = Some(p);
                }
                let targets = labels.iter().map(|g| g.and_then(|g| place_of[g])).collect();
                *best = Some((targets, matching.weight));
            }
        }
        Ok(())
    }

    fn rec(
        f: usize,
        groups: usize,
        inst: &Instance,
        labels: &mut Vec<Option<usize>>,
        must_cover: &[bool],
        t: usize,
        best: &mut Option<(Vec<Option<PlaceId>>, i64)>,
    ) -> Result<()> {
        if f == labels.len() {
            return evaluate(inst, labels, groups, must_cover, t, best);
        }
        labels[f] = None;
        rec(f + 1, groups, inst, labels, must_cover, t, best)?;
        for g in 0..groups {
            labels[f] = Some(g);
            rec(f + 1, groups, inst, labels, must_cover, t, best)?;
        }
        // a new group only helps if there is a place left to receive it
        if groups < inst.m() {
            labels[f] = Some(groups);
            rec(f + 1, groups + 1, inst, labels, must_cover, t, best)?;
        }
        labels[f] = None;
        Ok(())
    }

    rec(0, 0, inst, &mut labels, &must_cover, t, &mut best)?;
    Ok(best.map(|(t, v)| (Assignment::new(t), v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ex1;
    use crate::model::{Family, Place, PreferenceProfile, UtilityMatrix};

    fn one_service(reqs: &[u64], places: &[(u64, u64)], utils: Option<Vec<Vec<i64>>>) -> Instance {
        Instance::new(
            1,
            reqs.iter().enumerate().map(|(i, &r)| Family::new(i as u64, vec![r])).collect(),
            places
                .iter()
                .enumerate()
                .map(|(j, &(lo, hi))| Place::new(j as u64, vec![lo], vec![hi]))
                .collect(),
            utils.map(UtilityMatrix::new),
            None,
        )
        .unwrap()
    }

    #[test]
    fn enumerate_ex1() {
        let (a, u) = enumerate_maxutil(&ex1()).unwrap().unwrap();
        assert_eq!(u, 7);
        assert_eq!(a, Assignment::new(vec![Some(0), Some(1), Some(1), Some(0)]));
    }

    #[test]
    fn enumerate_unsatisfiable_lower_quota() {
        let inst = one_service(&[1, 1], &[(5, 6)], Some(vec![vec![1], vec![1]]));
        assert_eq!(enumerate_maxutil(&inst).unwrap(), None);
    }

    #[test]
    fn enumerate_single_family() {
        let inst = one_service(&[2], &[(0, 2)], Some(vec![vec![3]]));
        let (a, u) = enumerate_maxutil(&inst).unwrap().unwrap();
        assert_eq!((a.get(0), u), (Some(0), 3));
    }

    #[test]
    fn enumerate_budget() {
        let inst = one_service(&[1; 12], &[(0, 1); 4], None);
        assert!(matches!(enumerate_maxutil(&inst), Err(Error::Resource(_))));
    }

    #[test]
    fn pareto_on_ex1() {
        let inst = ex1();
        let a = enumerate_pareto(&inst).unwrap().unwrap();
        assert!(inst.is_feasible(&a));
        assert!(find_pareto_improvement(&inst, &a).unwrap().is_none());
        let sigma_prime = Assignment::new(vec![Some(0), Some(1), Some(1), Some(0)]);
        assert!(!inst.is_pareto_improvement(&sigma_prime, &a).unwrap());
        let sigma = Assignment::new(vec![Some(1), Some(0), Some(0), Some(1)]);
        assert!(find_pareto_improvement(&inst, &sigma).unwrap().is_none());
    }

    #[test]
    fn pareto_nothing_acceptable() {
        let inst = one_service(&[1, 1], &[(0, 3)], None)
            .with_preferences(Some(PreferenceProfile::from_groups(&[vec![], vec![]], 1).unwrap()))
            .unwrap();
        assert_eq!(enumerate_pareto(&inst).unwrap(), Some(Assignment::unassigned(2)));
    }

    #[test]
    fn fptn_ex1() {
        let (a, u) = fptn_maxutil(&ex1()).unwrap().unwrap();
        assert_eq!(u, 7);
        assert!(ex1().is_feasible(&a));
        assert_eq!(ex1().total_utility(&a).unwrap(), 7);
    }

    #[test]
    fn fptn_unsatisfiable() {
        let inst = one_service(&[2, 2], &[(0, 4), (3, 3)], Some(vec![vec![1, 1], vec![1, 1]]));
        assert_eq!(fptn_maxutil(&inst).unwrap(), None);
    }

    #[test]
    fn matching_single_edge() {
        let p = MatchingProblem { left: 1, right: 1, edges: vec![(0, 0, 5)], must_cover: vec![false] };
        assert_eq!(max_weight_matching(&p).unwrap().weight, 5);
    }

    #[test]
    fn matching_isolated_must_cover() {
        let p = MatchingProblem {
            left: 1,
            right: 2,
            edges: vec![(0, 0, 5)],
            must_cover: vec![false, true],
        };
        assert_eq!(max_weight_matching(&p), None);
    }

    #[test]
    fn matching_skips_negative_edges() {
        let p = MatchingProblem { left: 1, right: 1, edges: vec![(0, 0, -3)], must_cover: vec![false] };
        assert_eq!(max_weight_matching(&p).unwrap().weight, 0);
        let forced = MatchingProblem { must_cover: vec![true], ..p };
        assert_eq!(max_weight_matching(&forced).unwrap().weight, -3);
    }

    #[test]
    fn matching_three_by_three_against_permutations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let w: Vec<Vec<i64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(0..20)).collect()).collect();
            let edges = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| (a, b, w[a][b])).collect();
            let p = MatchingProblem { left: 3, right: 3, edges, must_cover: vec![true; 3] };
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let brute = perms.iter().map(|pi| (0..3).map(|a| w[a][pi[a]]).sum::<i64>()).max().unwrap();
            assert_eq!(max_weight_matching(&p).unwrap().weight, brute);
        }
    }
}
