use proptest::prelude::*;

use resettle::io::{gen_random, parse_instance, serialize_instance, GenMode, GenParams};
use resettle::ip::{solve_ip, IntegerProgram, Relation, Sense};
use resettle::oracle::{
    enumerate_maxutil, enumerate_pareto, find_pareto_improvement, fptn_maxutil, max_weight_matching, Matching,
    MatchingProblem,
};
use resettle::single_service::res_argres;
use resettle::Instance;

fn params() -> impl Strategy<Value = GenParams> {
    (1usize..=6, 1usize..=3, 1usize..=2, 1u64..=3, 1u64..=8, 0usize..3, prop::bool::ANY).prop_map(
        |(n, m, t, rmax, cmax, mode, lower)| GenParams {
            n,
            m,
            t,
            rmax,
            cmax,
            mode: [GenMode::Utilities, GenMode::Preferences, GenMode::None][mode],
            lower_quota_density: if lower { 0.5 } else { 0.0 },
        },
    )
}

fn instance() -> impl Strategy<Value = Instance> {
    (any::<u64>(), params()).prop_map(|(seed, p)| gen_random(seed, &p).unwrap())
}

fn with_utilities() -> impl Strategy<Value = Instance> {
    (any::<u64>(), params()).prop_map(|(seed, p)| {
        gen_random(
            seed,
            &GenParams {
                mode: GenMode::Utilities,
                ..p
            },
        )
        .unwrap()
    })
}

fn with_preferences() -> impl Strategy<Value = Instance> {
    (any::<u64>(), params()).prop_map(|(seed, p)| {
        gen_random(
            seed,
            &GenParams {
                mode: GenMode::Preferences,
                ..p
            },
        )
        .unwrap()
    })
}

#[derive(Debug, Clone)]
struct SmallProgram {
    upper: Vec<i64>,
    objective: Vec<i64>,
    rows: Vec<(Vec<i64>, Relation, i64)>,
}

fn small_program() -> impl Strategy<Value = SmallProgram> {
    (1usize..=5).prop_flat_map(|vars| {
        let row = (
            prop::collection::vec(-3i64..=4, vars),
            prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)],
            -4i64..=12,
        );
        (
            prop::collection::vec(0i64..=4, vars),
            prop::collection::vec(-5i64..=6, vars),
            prop::collection::vec(row, 0..=4),
        )
            .prop_map(|(upper, objective, rows)| SmallProgram { upper, objective, rows })
    })
}

fn build(p: &SmallProgram, order: &[usize], scale: &[i64]) -> IntegerProgram {
    let mut ip = IntegerProgram::new(Sense::Maximize);
    for &v in order {
        let x = ip.add_variable(format!("x{v}"), 0, p.upper[v]).unwrap();
        ip.set_objective_coefficient(x, p.objective[v]);
    }
    for (k, (coefs, rel, rhs)) in p.rows.iter().enumerate() {
        let row = order.iter().map(|&v| coefs[v] * scale[k]).collect();
        ip.add_constraint(row, *rel, rhs * scale[k]).unwrap();
    }
    ip
}

fn grid_optimum(p: &SmallProgram) -> Option<i64> {
    let n = p.upper.len();
    let mut x = vec![0i64; n];
    let mut best = None;
    loop {
        let ok = p.rows.iter().all(|(c, rel, rhs)| {
            let lhs: i64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            match rel {
                Relation::Le => lhs <= *rhs,
                Relation::Ge => lhs >= *rhs,
                Relation::Eq => lhs == *rhs,
            }
        });
        if ok {
            let v: i64 = p.objective.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: i64| b.max(v)));
        }
        let mut i = 0;
        while i < n && x[i] == p.upper[i] {
            x[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        x[i] += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn files_round_trip(inst in instance()) {
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn residue_identity(x in 0u64..1_000_000, rmax in 1u64..=8) {
        let (res, arg) = res_argres(x, rmax).unwrap();
        let rho = (1..=rmax).fold(1u64, |a, k| a / gcd(a, k) * k);
        prop_assert_eq!(rho * arg + res, x);
        prop_assert!(res <= rmax * (rho - 1));
        prop_assert!(arg == 0 || res + rho > rmax * (rho - 1));
    }

    #[test]
    fn branch_and_bound_matches_grid(p in small_program()) {
        let ip = build(&p, &(0..p.upper.len()).collect::<Vec<_>>(), &vec![1; p.rows.len()]);
        let got = solve_ip(&ip).unwrap();
        if let Some(s) = &got {
            for c in ip.constraints() {
                let lhs: i64 = c.coefficients.iter().zip(s.values()).map(|(a, b)| a * b).sum();
                let holds = match c.relation {
                    Relation::Le => lhs <= c.rhs,
                    Relation::Ge => lhs >= c.rhs,
                    Relation::Eq => lhs == c.rhs,
                };
                prop_assert!(holds);
            }
        }
        prop_assert_eq!(got.map(|s| s.objective_value()), grid_optimum(&p));
    }

    #[test]
    fn objective_ignores_order_and_scaling(p in small_program(), seed in any::<u64>()) {
        let n = p.upper.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left((seed as usize) % n);
        if seed % 2 == 0 {
            order.reverse();
        }
        let scale: Vec<i64> = (0..p.rows.len()).map(|k| 1 + ((seed >> k) % 3) as i64).collect();
        let base = solve_ip(&build(&p, &(0..n).collect::<Vec<_>>(), &vec![1; p.rows.len()])).unwrap();
        let moved = solve_ip(&build(&p, &order, &scale)).unwrap();
        prop_assert_eq!(base.map(|s| s.objective_value()), moved.map(|s| s.objective_value()));
    }

    #[test]
    fn matching_equals_enumeration(inst in with_utilities()) {
        let brute = enumerate_maxutil(&inst).unwrap().map(|(_, v)| v);
        let fast = fptn_maxutil(&inst).unwrap();
        if let Some((a, v)) = &fast {
            prop_assert!(inst.is_feasible(a));
            prop_assert_eq!(inst.total_utility(a).unwrap(), *v);
        }
        prop_assert_eq!(fast.map(|(_, v)| v), brute);
    }

    #[test]
    fn matching_ignores_labels(weights in prop::collection::vec(-4i64..=9, 9), cover in prop::collection::vec(any::<bool>(), 3), shift in 0usize..3) {
        let edges: Vec<(usize, usize, i64)> = (0..3)
            .flat_map(|l| (0..3).map(move |r| (l, r)))
            .zip(&weights)
            .filter(|(_, &w)| w != 0)
            .map(|((l, r), &w)| (l, r, w))
            .collect();
        let base = MatchingProblem { left: 3, right: 3, edges: edges.clone(), must_cover: cover.clone() };
        let relabel = |x: usize| (x + shift) % 3;
        let moved = MatchingProblem {
            left: 3,
            right: 3,
            edges: edges.iter().map(|&(l, r, w)| (relabel(l), relabel(r), w)).collect(),
            must_cover: (0..3).map(|r| cover[(r + 3 - shift) % 3]).collect(),
        };
        let weight = |m: Option<Matching>| m.map(|m| m.weight);
        prop_assert_eq!(weight(max_weight_matching(&base)), weight(max_weight_matching(&moved)));
    }

    #[test]
    fn normalization_keeps_optimum(inst in with_utilities()) {
        let normalized = inst.normalize();
        let before = enumerate_maxutil(&inst).unwrap().map(|(_, v)| v);
        let after = enumerate_maxutil(&normalized.instance).unwrap();
        let lifted = after.as_ref().map(|(a, _)| normalized.lift(&inst, a));
        if let Some(a) = &lifted {
            prop_assert!(inst.is_feasible(a));
        }
        prop_assert_eq!(lifted.map(|a| inst.total_utility(&a).unwrap()), before);
    }

    #[test]
    fn improvements_are_strict(inst in with_preferences()) {
        if let Some(a) = enumerate_pareto(&inst).unwrap() {
            prop_assert!(inst.is_feasible(&a) && inst.is_acceptable(&a).unwrap());
            prop_assert!(!inst.is_pareto_improvement(&a, &a).unwrap());
            prop_assert_eq!(find_pareto_improvement(&inst, &a).unwrap(), None);
        }
    }

    #[test]
    fn unassigned_families_add_nothing(inst in with_utilities(), keep in any::<u64>()) {
        if let Some((a, v)) = enumerate_maxutil(&inst).unwrap() {
            let kept: Vec<usize> = (0..inst.n()).filter(|&f| a.get(f).is_some() || (keep >> f) & 1 == 1).collect();
            let smaller = inst.restrict_families(&kept);
            let b = resettle::Assignment::new(kept.iter().map(|&f| a.get(f)).collect());
            prop_assert_eq!(smaller.total_utility(&b).unwrap(), v);
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
