//! Preference-side algorithms.

use crate::error::{inapplicable, Error, Result};
use crate::model::{Assignment, Instance, Place, PlaceId, UtilityMatrix};
use crate::multi_service::dp_maxutil;
use crate::oracle::fptn_maxutil;

/// Rank utilities: an acceptable place is worth the number of acceptable
/// places it is weakly preferred to; an unacceptable one is worth `-m * n`.
pub fn pareto_to_maxutil(inst: &Instance) -> Result<Instance> {
    let prefs = inst
        .preferences()
        .ok_or_else(|| inapplicable("the reduction needs preferences"))?;
    let (n, m) = (inst.n(), inst.m());
    let penalty = -(m as i64)
        .checked_mul(n as i64)
        .ok_or(Error::Overflow("unacceptable penalty"))?;
    let rows = (0..n)
        .map(|f| {
            let ranks = prefs.ranks(f);
            ranks
                .iter()
                .map(|rank| match rank {
                    Some(r) => ranks.iter().filter(|o| o.is_some_and(|o| o >= *r)).count() as i64,
                    None => penalty,
                })
                .collect()
        })
        .collect();
    inst.with_utilities(Some(UtilityMatrix::new(rows)))
}

/// Feasible, acceptable, Pareto-optimal assignment obtained from a
/// maximum-utility solver on the rank utilities, or `None` if no feasible
/// acceptable assignment exists.
pub fn solve_pareto<S>(inst: &Instance, maxutil: S) -> Result<Option<Assignment>>
where
    S: FnOnce(&Instance) -> Result<Option<(Assignment, i64)>>,
{
    let reduced = pareto_to_maxutil(inst)?;
    match maxutil(&reduced)? {
        Some((a, value)) if value >= 0 => Ok(Some(a)),
        _ => Ok(None),
    }
}

/// Exact maximum utility by load-state dynamic program, falling back to the
/// matching-based enumeration when the state space is too large.
pub fn default_maxutil(inst: &Instance) -> Result<Option<(Assignment, i64)>> {
    match dp_maxutil(inst) {
        Err(Error::Resource(_)) => fptn_maxutil(inst),
        other => other,
    }
}

fn require_no_lower_quotas(inst: &Instance, what: &str) -> Result<()> {
    if inst.has_lower_quotas() {
        return Err(inapplicable(format!("{what} needs an instance without lower quotas")));
    }
    Ok(())
}

/// Non-wasteful assignment for one place: families that accept it are
/// admitted in index order while they fit.
pub fn greedy_m1(inst: &Instance) -> Result<Assignment> {
    if inst.m() != 1 {
        return Err(inapplicable("needs exactly one place"));
    }
    require_no_lower_quotas(inst, "the greedy")?;
    let prefs = inst
        .preferences()
        .ok_or_else(|| inapplicable("the greedy needs preferences"))?;
    let place = &inst.places()[0];
    let mut load = vec![0u64; inst.services()];
    let mut out = Assignment::unassigned(inst.n());
    for f in (0..inst.n()).filter(|&f| prefs.is_acceptable(f, 0)) {
        let req = inst.requirement(f);
        if place.accommodates(&load, req) {
            load.iter_mut().zip(req).for_each(|(l, r)| *l += r);
            out.set(f, Some(0));
        }
    }
    Ok(out)
}

/// Families with strict preferences pick, in index order, their best
/// acceptable place that still fits; the families with ties are then placed
/// by [`solve_pareto`] on the remaining capacity.
pub fn serial_dictatorship_ties(inst: &Instance) -> Result<Option<Assignment>> {
    require_no_lower_quotas(inst, "serial dictatorship")?;
    let prefs = inst
        .preferences()
        .ok_or_else(|| inapplicable("serial dictatorship needs preferences"))?;
    let mut loads = vec![vec![0u64; inst.services()]; inst.m()];
    let mut out = Assignment::unassigned(inst.n());
    let mut tied = Vec::new();
    for f in 0..inst.n() {
        if prefs.has_ties(f) {
            tied.push(f);
            continue;
        }
        let req = inst.requirement(f);
        let choice = prefs
            .groups(f)
            .into_iter()
            .flatten()
            .find(|&p| inst.places()[p].accommodates(&loads[p], req));
        if let Some(p) = choice {
            loads[p].iter_mut().zip(req).for_each(|(l, r)| *l += r);
            out.set(f, Some(p));
        }
    }
    if tied.is_empty() {
        return Ok(Some(out));
    }
    let residual_places: Vec<Place> = inst
        .places()
        .iter()
        .zip(&loads)
        .map(|(p, load)| {
            let upper = p.upper.iter().zip(load).map(|(c, l)| c - l).collect();
            Place::new(p.id, p.lower.clone(), upper)
        })
        .collect();
    let residual = inst.restrict_families(&tied).with_places(residual_places)?;
    let Some(rest) = solve_pareto(&residual, fptn_maxutil)? else {
        return Ok(None);
    };
    for (k, &f) in tied.iter().enumerate() {
        out.set(f, rest.get(k));
    }
    Ok(Some(out))
}

/// Whether a feasible, acceptable and complete assignment exists, for
/// dichotomous preferences.
pub fn decide_complete_dichotomous(inst: &Instance) -> Result<bool> {
    decide_complete_dichotomous_with(inst, default_maxutil)
}

pub fn decide_complete_dichotomous_with<S>(inst: &Instance, maxutil: S) -> Result<bool>
where
    S: FnOnce(&Instance) -> Result<Option<(Assignment, i64)>>,
{
    if inst.preferences().is_none() || !inst.structural_params().dichotomous_preferences {
        return Err(inapplicable("needs dichotomous preferences"));
    }
    if inst.n() == 0 {
        return Ok(true);
    }
    Ok(solve_pareto(inst, maxutil)?.is_some_and(|a| inst.is_complete(&a)))
}

/// Best acceptable place for `family` among those it ranks, ties by index.
pub fn top_choice(inst: &Instance, family: usize) -> Option<PlaceId> {
    inst.preferences()?.groups(family).first()?.first().copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ex1;
    use crate::model::{Family, PreferenceProfile};
    use crate::oracle::find_pareto_improvement;

    fn one_service(reqs: &[u64], uppers: &[u64], groups: &[Vec<Vec<PlaceId>>]) -> Instance {
        Instance::new(
            1,
            reqs.iter().enumerate().map(|(i, &r)| Family::new(i as u64, vec![r])).collect(),
            uppers
                .iter()
                .enumerate()
                .map(|(j, &c)| Place::new(j as u64, vec![0], vec![c]))
                .collect(),
            None,
            Some(PreferenceProfile::from_groups(groups, uppers.len()).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn reduction_on_worked_example() {
        let reduced = pareto_to_maxutil(&ex1()).unwrap();
        assert_eq!(
            reduced.utilities().unwrap().rows(),
            &[vec![2, 1], vec![1, 2], vec![1, 2], vec![1, 2]]
        );
    }

    #[test]
    fn reduction_edge_cases() {
        let inst = one_service(&[1, 1], &[1, 1], &[vec![], vec![vec![0, 1]]]);
        let u = pareto_to_maxutil(&inst).unwrap();
        assert_eq!(u.utilities().unwrap().rows(), &[vec![-4, -4], vec![2, 2]]);
        let single = one_service(&[1], &[1], &[vec![vec![0]]]);
        assert_eq!(pareto_to_maxutil(&single).unwrap().utilities().unwrap().rows(), &[vec![1]]);
    }

    #[test]
    fn pareto_on_worked_example() {
        let inst = ex1();
        let a = solve_pareto(&inst, dp_maxutil).unwrap().unwrap();
        assert_eq!(a, Assignment::new(vec![Some(0), Some(1), Some(1), Some(0)]));
        assert_eq!(find_pareto_improvement(&inst, &a).unwrap(), None);
    }

    #[test]
    fn pareto_absent_and_empty() {
        let mut inst = one_service(&[2], &[1], &[vec![vec![0]]]);
        inst = inst
            .with_places(vec![Place::new(0, vec![1], vec![1])])
            .unwrap();
        assert_eq!(solve_pareto(&inst, dp_maxutil).unwrap(), None);
        let nothing = one_service(&[1, 1], &[2], &[vec![], vec![]]);
        assert_eq!(solve_pareto(&nothing, dp_maxutil).unwrap(), Some(Assignment::unassigned(2)));
    }

    #[test]
    fn greedy_single_place() {
        let inst = one_service(&[2, 2, 2], &[4], &[vec![vec![0]], vec![vec![0]], vec![vec![0]]]);
        let a = greedy_m1(&inst).unwrap();
        assert_eq!(a, Assignment::new(vec![Some(0), Some(0), None]));
        assert_eq!(find_pareto_improvement(&inst, &a).unwrap(), None);
        let nobody = one_service(&[1], &[4], &[vec![]]);
        assert_eq!(greedy_m1(&nobody).unwrap(), Assignment::unassigned(1));
        assert!(matches!(greedy_m1(&ex1()), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn dictatorship_strict_and_tied() {
        let strict = one_service(&[1, 1], &[1, 1], &[vec![vec![0], vec![1]], vec![vec![0], vec![1]]]);
        assert_eq!(
            serial_dictatorship_ties(&strict).unwrap().unwrap(),
            Assignment::new(vec![Some(0), Some(1)])
        );
        let tied = one_service(&[1, 1], &[1, 1], &[vec![vec![0, 1]], vec![vec![0, 1]]]);
        let a = serial_dictatorship_ties(&tied).unwrap().unwrap();
        assert!(tied.is_complete(&a));
        let mixed = one_service(&[1, 1, 1], &[1, 2], &[vec![vec![0, 1]], vec![vec![1], vec![0]], vec![vec![0]]]);
        let a = serial_dictatorship_ties(&mixed).unwrap().unwrap();
        assert_eq!(find_pareto_improvement(&mixed, &a).unwrap(), None);
    }

    #[test]
    fn completeness() {
        let empty = one_service(&[], &[1], &[]);
        assert!(decide_complete_dichotomous(&empty).unwrap());
        let stuck = one_service(&[3], &[2], &[vec![vec![0]]]);
        assert!(!decide_complete_dichotomous(&stuck).unwrap());
        assert!(matches!(decide_complete_dichotomous(&ex1()), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn top_choices() {
        assert_eq!(top_choice(&ex1(), 0), Some(0));
        assert_eq!(top_choice(&ex1(), 1), Some(1));
    }
}
