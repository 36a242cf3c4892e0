//! Acceptance checks, one line per criterion.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resettle::fixtures::ex1;
use resettle::io::{
    bench, gen_binpacking, gen_random, serialize_instance, write_csv, Algorithm, BinPackingVariant, DispatchOptions,
    GenMode, GenParams, Problem,
};
use resettle::ip::{check_nfold_shape, solve_ip};
use resettle::multi_service::{build_nfold, dp_maxutil, typed_maxutil, xp_ustar_decide};
use resettle::oracle::{enumerate_maxutil, enumerate_pareto, feasible_assignments, find_pareto_improvement, fptn_maxutil};
use resettle::pareto::{decide_complete_dichotomous, greedy_m1, serial_dictatorship_ties, solve_pareto};
use resettle::single_service::{
    build_ilp1, colorcode_maxutil, decode_ilp1, kernelize_ustar, res_argres, rho, solve_rmax_equal, KernelOutcome,
    DEFAULT_TRIALS,
};
use resettle::{Assignment, Instance, UtilityMatrix};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn unit_utilities(inst: &Instance) -> Instance {
    inst.with_preferences(None)
        .unwrap()
        .with_utilities(Some(UtilityMatrix::uniform(inst.n(), inst.m(), 1)))
        .unwrap()
}

/// Parameters of the random sweep: n <= 6, m <= 3, t <= 2, rmax <= 3, cmax <= 8.
fn sweep_params(index: u64, mode: GenMode) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_5500 + index);
    GenParams {
        n: rng.gen_range(1..=6),
        m: rng.gen_range(1..=3),
        t: rng.gen_range(1..=2),
        rmax: rng.gen_range(1..=3),
        cmax: rng.gen_range(1..=8),
        mode,
        lower_quota_density: if index.is_multiple_of(2) { 0.0 } else { 0.5 },
    }
}

fn sweep(count: u64, mode: GenMode) -> Vec<Instance> {
    (0..count)
        .map(|i| gen_random(i, &sweep_params(i, mode)).expect("generator parameters are valid"))
        .collect()
}

fn single_service(index: u64, max_n: usize, equal: bool, no_lower: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E_0000 + index);
    let params = GenParams {
        n: rng.gen_range(1..=max_n),
        m: rng.gen_range(1..=3),
        t: 1,
        rmax: rng.gen_range(1..=3),
        cmax: rng.gen_range(1..=10),
        mode: GenMode::Utilities,
        lower_quota_density: if no_lower || index.is_multiple_of(2) { 0.0 } else { 0.5 },
    };
    let inst = gen_random(index, &params).unwrap();
    if equal {
        let w = rng.gen_range(1..=3);
        inst.with_utilities(Some(UtilityMatrix::uniform(inst.n(), inst.m(), w))).unwrap()
    } else {
        inst
    }
}

fn criterion_1() -> Check {
    let inst = ex1();
    for (name, found) in [
        ("dp", dp_maxutil(&inst).map_err(err)?),
        ("typed", typed_maxutil(&inst).map_err(err)?),
        ("fptn", fptn_maxutil(&inst).map_err(err)?),
    ] {
        let (a, v) = found.ok_or_else(|| format!("{name} found nothing"))?;
        ensure(v == 7, || format!("{name} returned {v}"))?;
        ensure(inst.is_feasible(&a), || format!("{name} assignment infeasible"))?;
    }
    let sigma = Assignment::new(vec![Some(1), Some(0), Some(0), Some(1)]);
    let sigma_prime = Assignment::new(vec![Some(0), Some(1), Some(1), Some(0)]);
    ensure(inst.total_utility(&sigma).map_err(err)? == 5, || "utility of sigma".into())?;
    ensure(inst.total_utility(&sigma_prime).map_err(err)? == 7, || "utility of sigma prime".into())?;
    for (a, expected) in [(&sigma, [[8, 2], [7, 3]]), (&sigma_prime, [[7, 3], [8, 2]])] {
        ensure(inst.is_feasible(a), || "reference assignment infeasible".into())?;
        let loads = inst.loads(a).map_err(err)?;
        ensure(loads == expected.map(|l| l.to_vec()).to_vec(), || format!("loads {loads:?}"))?;
    }
    Ok("dp, typed and fptn all return 7; reference loads match".into())
}

fn criterion_2() -> Check {
    let instances = sweep(500, GenMode::Utilities);
    let mut comparisons = 0usize;
    let mut infeasible = 0usize;
    for (i, inst) in instances.iter().enumerate() {
        let oracle = enumerate_maxutil(inst).map_err(err)?.map(|(_, v)| v);
        infeasible += usize::from(oracle.is_none());
        let mut check = |name: &str, found: Option<(Assignment, i64)>| -> Result<(), String> {
            comparisons += 1;
            if let Some((a, v)) = &found {
                ensure(inst.is_feasible(a), || format!("instance {i}: {name} infeasible"))?;
                ensure(inst.total_utility(a).map_err(err)? == *v, || format!("instance {i}: {name} value"))?;
            }
            let got = found.map(|(_, v)| v);
            ensure(got == oracle, || format!("instance {i}: {name} gave {got:?}, oracle {oracle:?}"))
        };
        check("dp", dp_maxutil(inst).map_err(err)?)?;
        check("typed", typed_maxutil(inst).map_err(err)?)?;
        check("fptn", fptn_maxutil(inst).map_err(err)?)?;
        if inst.services() == 1 {
            check("colorcode", colorcode_maxutil(inst, DEFAULT_TRIALS, i as u64).map_err(err)?)?;
        }
        let unit = unit_utilities(inst);
        let unit_oracle = enumerate_maxutil(&unit).map_err(err)?.map(|(_, v)| v);
        if inst.services() == 1 {
            let got = solve_rmax_equal(&unit).map_err(err)?.map(|(_, c)| c as i64);
            comparisons += 1;
            ensure(got == unit_oracle, || format!("instance {i}: block ilp {got:?} vs {unit_oracle:?}"))?;
        }
        if !inst.has_lower_quotas() {
            if let Some(best) = oracle {
                for target in [best, best + 1] {
                    let found = xp_ustar_decide(inst, target).map_err(err)?;
                    comparisons += 1;
                    ensure(found.is_some() == (best >= target), || format!("instance {i}: pair subsets at {target}"))?;
                }
            }
        }
    }
    Ok(format!("{} instances, {comparisons} comparisons, {infeasible} infeasible, all equal", instances.len()))
}

fn criterion_3() -> Check {
    for rmax in 1..=6u64 {
        let brute_rho = (1..).find(|x: &u64| (1..=rmax).all(|k| x.is_multiple_of(k))).unwrap();
        let r = rho(rmax).map_err(err)?;
        ensure(r == brute_rho, || format!("rho({rmax}) = {r}, expected {brute_rho}"))?;
        let bound = rmax * (r - 1);
        for x in 0..=10_000u64 {
            let (res, arg) = res_argres(x, rmax).map_err(err)?;
            ensure(r * arg + res == x, || format!("identity fails at x={x}, rmax={rmax}"))?;
            let least = (0..=x / r).find(|a| x - a * r <= bound).unwrap();
            ensure(arg == least && res <= bound, || format!("argres({x}) for rmax={rmax}"))?;
        }
    }
    let mut multisets = 0u64;
    for rmax in 1..=3u64 {
        let r = rho(rmax).map_err(err)?;
        let mut counts = vec![0u64; rmax as usize];
        loop {
            let total: u64 = counts.iter().enumerate().map(|(i, c)| c * (i as u64 + 1)).sum();
            if total <= 30 {
                multisets += 1;
                if total > rmax * (r - 1) {
                    // some single requirement value must supply rho / value families
                    let block = counts.iter().enumerate().any(|(i, &c)| c * (i as u64 + 1) >= r);
                    ensure(block, || format!("no block in {counts:?}"))?;
                }
            }
            let mut k = 0;
            while k < counts.len() {
                counts[k] += 1;
                let total: u64 = counts.iter().enumerate().map(|(i, c)| c * (i as u64 + 1)).sum();
                if total <= 30 {
                    break;
                }
                counts[k] = 0;
                k += 1;
            }
            if k == counts.len() {
                break;
            }
        }
    }
    Ok(format!("identities hold on [0, 10000] for rmax 1..=6; {multisets} multisets checked"))
}

fn criterion_4() -> Check {
    for i in 0..200u64 {
        let inst = single_service(i, 7, true, false);
        let (ip, ctx) = build_ilp1(&inst).map_err(err)?;
        let oracle = enumerate_maxutil(&inst).map_err(err)?;
        let w = inst.utilities().unwrap().get(0, 0);
        match solve_ip(&ip).map_err(err)? {
            None => ensure(oracle.is_none(), || format!("instance {i}: program infeasible, oracle found one"))?,
            Some(solution) => {
                let a = decode_ilp1(&solution, &ctx).map_err(err)?;
                ensure(inst.is_feasible(&a), || format!("instance {i}: decoded assignment infeasible"))?;
                let aside = if inst.m() > 0 { ctx.zero_requirement_families().len() } else { 0 };
                let count = a.assigned_count() as i64;
                ensure(count == solution.objective_value() + aside as i64, || {
                    format!("instance {i}: count {count} vs program {}", solution.objective_value())
                })?;
                let best = oracle.map(|(_, v)| v / w);
                ensure(best == Some(count), || format!("instance {i}: count {count}, oracle {best:?}"))?;
            }
        }
    }
    Ok("200 equal-utility instances decode to optimal feasible assignments".into())
}

fn criterion_5() -> Check {
    let instances = sweep(500, GenMode::Utilities);
    for (i, inst) in instances.iter().enumerate() {
        let unit = unit_utilities(inst);
        let (ip, ctx) = build_nfold(&unit).map_err(err)?;
        ensure(check_nfold_shape(&ip, ctx.places, &ctx.brick()), || format!("instance {i}: shape"))?;
        let oracle = enumerate_maxutil(&unit).map_err(err)?.map(|(_, v)| v);
        let got = solve_ip(&ip).map_err(err)?.map(|s| {
            let a = ctx.decode(&s);
            assert!(unit.is_feasible(&a));
            s.objective_value()
        });
        ensure(got == oracle, || format!("instance {i}: {got:?} vs oracle {oracle:?}"))?;
    }
    Ok(format!("{} programs have block shape and match the oracle count", instances.len()))
}

fn criterion_6() -> Check {
    let (mut witnesses, mut reduced) = (0, 0);
    for i in 0..200u64 {
        let raw = single_service(i + 1000, 8, false, true);
        // small utilities keep most targets out of reach of a single family
        let capped = raw.utilities().unwrap().rows().iter().map(|r| r.iter().map(|&u| u.min(2)).collect()).collect();
        let inst = raw.with_utilities(Some(UtilityMatrix::new(capped))).unwrap();
        let u_star = (i % 6) as i64 + 1;
        let truth = enumerate_maxutil(&inst).map_err(err)?.is_some_and(|(_, v)| v >= u_star);
        let decided = match kernelize_ustar(&inst, u_star).map_err(err)? {
            KernelOutcome::Witness(a, v) => {
                witnesses += 1;
                ensure(inst.is_feasible(&a) && inst.total_utility(&a).map_err(err)? == v && v >= u_star, || {
                    format!("instance {i}: bad witness")
                })?;
                true
            }
            KernelOutcome::Reduced { instance, kept } => {
                reduced += 1;
                ensure(kept.len() as i64 <= u_star.pow(3), || format!("instance {i}: kernel of {}", kept.len()))?;
                fptn_maxutil(&instance).map_err(err)?.is_some_and(|(_, v)| v >= u_star)
            }
        };
        ensure(decided == truth, || format!("instance {i}, u*={u_star}: kernel says {decided}, oracle {truth}"))?;
    }
    Ok(format!("{witnesses} direct witnesses, {reduced} kernels, all decisions agree"))
}

fn criterion_7() -> Check {
    let mut absent = 0;
    for i in 0..200u64 {
        let inst = single_service(i + 2000, 8, false, false);
        let oracle = enumerate_maxutil(&inst).map_err(err)?.map(|(_, v)| v);
        let found = colorcode_maxutil(&inst, DEFAULT_TRIALS, i).map_err(err)?;
        if let Some((a, _)) = &found {
            ensure(inst.is_feasible(a), || format!("instance {i}: infeasible"))?;
        }
        absent += usize::from(found.is_none());
        let got = found.map(|(_, v)| v);
        ensure(got == oracle, || format!("instance {i}: colorcode {got:?}, oracle {oracle:?}"))?;
    }
    Ok(format!("200 instances match the oracle ({absent} without a feasible assignment), trials = {DEFAULT_TRIALS}"))
}

fn criterion_8() -> Check {
    let instances = sweep(500, GenMode::Preferences);
    let (mut pareto_runs, mut greedy_runs, mut dictator_runs) = (0, 0, 0);
    for (i, inst) in instances.iter().enumerate() {
        let survives = |name: &str, a: &Assignment| -> Result<(), String> {
            ensure(inst.is_feasible(a) && inst.is_acceptable(a).map_err(err)?, || {
                format!("instance {i}: {name} output not feasible and acceptable")
            })?;
            let improvement = find_pareto_improvement(inst, a).map_err(err)?;
            ensure(improvement.is_none(), || format!("instance {i}: {name} output is dominated"))
        };
        let exists = enumerate_pareto(inst).map_err(err)?.is_some();
        let found = solve_pareto(inst, dp_maxutil).map_err(err)?;
        ensure(found.is_some() == exists, || format!("instance {i}: existence differs"))?;
        if let Some(a) = &found {
            survives("solve_pareto", a)?;
        }
        pareto_runs += 1;
        if !inst.has_lower_quotas() {
            if inst.m() == 1 {
                survives("greedy_m1", &greedy_m1(inst).map_err(err)?)?;
                greedy_runs += 1;
            }
            let a = serial_dictatorship_ties(inst).map_err(err)?.ok_or_else(|| format!("instance {i}: none"))?;
            survives("serial dictatorship", &a)?;
            dictator_runs += 1;
        }
    }
    let mut packings = vec![(vec![1, 1, 2, 2], 2), (vec![3, 3, 3], 3), (vec![2, 2, 2], 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    while packings.len() < 30 {
        let k = rng.gen_range(1..=3);
        let sizes: Vec<u64> = (0..rng.gen_range(1..=6)).map(|_| rng.gen_range(1..=4)).collect();
        if sizes.iter().sum::<u64>() % k as u64 == 0 {
            packings.push((sizes, k));
        }
    }
    let mut infeasible = 0;
    for (sizes, k) in &packings {
        let inst = gen_binpacking(sizes, *k, BinPackingVariant::Pareto).map_err(err)?;
        let brute = feasible_assignments(&inst, true)
            .map_err(err)?
            .iter()
            .any(|a| inst.is_complete(a));
        let decided = decide_complete_dichotomous(&inst).map_err(err)?;
        ensure(decided == brute, || format!("packing {sizes:?}/{k}: {decided} vs {brute}"))?;
        infeasible += usize::from(!brute);
    }
    let stuck = gen_binpacking(&[2, 2, 2], 2, BinPackingVariant::Pareto).map_err(err)?;
    ensure(!decide_complete_dichotomous(&stuck).map_err(err)?, || "(2,2,2)/2 reported packable".into())?;
    Ok(format!(
        "{pareto_runs} reductions, {greedy_runs} greedy, {dictator_runs} dictatorship runs undominated; \
         {} packings ({infeasible} unpackable) agree",
        packings.len()
    ))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    for seed in 0..12u64 {
        let params = GenParams {
            t: 1,
            lower_quota_density: if seed % 3 == 0 { 0.5 } else { 0.0 },
            ..GenParams::default()
        };
        let inst = gen_random(seed, &params).map_err(err)?;
        std::fs::write(dir.path().join(format!("r{seed:03}.json")), serialize_instance(&inst)).map_err(err)?;
    }
    let algorithms = [Algorithm::Dp, Algorithm::Colorcode, Algorithm::TypedIlp, Algorithm::Fptn];
    let opts = DispatchOptions {
        seed: 5,
        ..DispatchOptions::default()
    };
    let run = || -> Result<Vec<u8>, String> {
        let rows = bench(dir.path(), &algorithms, Problem::MaxUtil, &opts).map_err(err)?;
        let mut out = Vec::new();
        write_csv(&rows, &mut out, false).map_err(err)?;
        Ok(out)
    };
    let (first, second) = (run()?, run()?);
    ensure(first == second, || "bench output differs between runs".into())?;
    let text = String::from_utf8(first).map_err(err)?;
    ensure(!text.contains(",false\n"), || "an oracle mismatch was reported".into())?;
    Ok(format!("{} identical bytes over {} rows", text.len(), text.lines().count() - 1))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 9] = [
        ("worked example reproduction", criterion_1, Duration::from_secs(1)),
        ("oracle equivalence sweep", criterion_2, Duration::from_secs(300)),
        ("block arithmetic identities", criterion_3, Duration::from_secs(30)),
        ("block program round trip", criterion_4, Duration::from_secs(180)),
        ("block-structured program shape", criterion_5, Duration::from_secs(300)),
        ("utility-target kernel", criterion_6, Duration::from_secs(300)),
        ("color-coding optimum", criterion_7, Duration::from_secs(300)),
        ("Pareto suite", criterion_8, Duration::from_secs(300)),
        ("bench determinism", criterion_9, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > *limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({elapsed:.2?}): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({elapsed:.2?}): {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
