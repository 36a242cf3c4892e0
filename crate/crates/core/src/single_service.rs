//! Algorithms for a single service (`t = 1`).
//!
//! Block arithmetic: with `rho = lcm(1..=rmax)`, any multiset of requirements
//! in `1..=rmax` whose total exceeds `rmax * (rho - 1)` contains a set of
//! equal-requirement families summing to exactly `rho` (a homogeneous block).
//! Places are typed by the residues of their quotas modulo such blocks, which
//! bounds the size of the integer program built by [`build_ilp1`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{inapplicable, resource, Error, Result};
use crate::ip::{solve_ip, IntegerProgram, IpSolution, Relation, Sense};
use crate::model::{Assignment, FamilyId, Instance, Place, PlaceId};

/// `lcm(1..=rmax)`.
pub fn rho(rmax: u64) -> Result<u64> {
    if rmax == 0 {
        return Err(Error::Parameter("rmax must be positive".into()));
    }
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=rmax).try_fold(1u64, |acc, k| {
        (acc / gcd(acc, k))
            .checked_mul(k)
            .ok_or_else(|| resource(format!("lcm(1..={rmax}) overflows")))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockArithmetic {
    pub rmax: u64,
    pub rho: u64,
    /// `rmax * (rho - 1)`, the largest possible residue.
    pub res_bound: u64,
}

impl BlockArithmetic {
    pub fn new(rmax: u64) -> Result<Self> {
        let rho = rho(rmax)?;
        let res_bound = rmax
            .checked_mul(rho - 1)
            .ok_or_else(|| resource("residue bound overflows"))?;
        Ok(Self {
            rmax,
            rho,
            res_bound,
        })
    }

    /// `(res(x), argres(x))` with `x = rho * argres(x) + res(x)` and `res(x) <= res_bound`.
    pub fn res_argres(&self, x: u64) -> (u64, u64) {
        if x <= self.res_bound {
            (x, 0)
        } else {
            let alpha = (x - self.res_bound).div_ceil(self.rho);
            (x - alpha * self.rho, alpha)
        }
    }

    /// Largest total requirement a place can hold outside homogeneous blocks.
    pub fn rho_hat(&self) -> u64 {
        2 * self.res_bound + self.rmax - 1
    }
}

pub fn res_argres(x: u64, rmax: u64) -> Result<(u64, u64)> {
    Ok(BlockArithmetic::new(rmax)?.res_argres(x))
}

/// Residual quota window of a place plus the blocks its quotas imply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceType {
    pub residual_lower: u64,
    pub residual_span: u64,
    pub compulsory_blocks: u64,
    pub optional_blocks: u64,
}

impl PlaceType {
    /// The pair the integer program groups places by.
    pub fn key(&self) -> (u64, u64) {
        (self.residual_lower, self.residual_span)
    }
}

fn classify(place: &Place, blocks: &BlockArithmetic) -> PlaceType {
    let (lo, hi) = (place.lower[0], place.upper[0]);
    let (residual_lower, compulsory_blocks) = blocks.res_argres(lo);
    let span = hi - lo;
    let (residual_span, optional_blocks) = if span + 1 >= blocks.rmax {
        let (res, arg) = blocks.res_argres(span + 1 - blocks.rmax);
        (res + blocks.rmax - 1, arg)
    } else {
        (span, 0)
    };
    PlaceType {
        residual_lower,
        residual_span,
        compulsory_blocks,
        optional_blocks,
    }
}

pub fn classify_place(place: &Place, rmax: u64) -> Result<PlaceType> {
    if place.lower.len() != 1 {
        return Err(inapplicable("place typing needs exactly one service"));
    }
    Ok(classify(place, &BlockArithmetic::new(rmax)?))
}

/// Whether a configuration (count of families per requirement `1..=rmax`)
/// fills the residual window of `place_type`.
pub fn suitable(place_type: (u64, u64), configuration: &[u64]) -> bool {
    let total: u64 = configuration
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (i as u64 + 1))
        .sum();
    place_type.0 <= total && total <= place_type.0 + place_type.1
}

fn require_single_service(inst: &Instance) -> Result<()> {
    if inst.services() != 1 {
        return Err(inapplicable(format!(
            "needs exactly one service, instance has {}",
            inst.services()
        )));
    }
    Ok(())
}

/// Whether assigning as many families as possible is the right objective.
pub(crate) fn count_objective_applies(inst: &Instance) -> bool {
    let equal_utilities = inst.utilities().map(|u| u.equal_value().is_some());
    let indifferent = inst
        .preferences()
        .map(|p| (0..inst.n()).all(|f| p.ranks(f).iter().all(|r| *r == Some(1))));
    match (equal_utilities, indifferent) {
        (None, None) => true,
        (Some(eq), None) => eq,
        (None, Some(ind)) => ind,
        (Some(eq), Some(ind)) => eq || ind,
    }
}

/// Everything [`decode_ilp1`] needs to turn an IP solution into an assignment.
#[derive(Debug, Clone)]
pub struct Ilp1Context {
    blocks: BlockArithmetic,
    m: usize,
    n: usize,
    /// Families of requirement `r` (index `r - 1`), in index order.
    by_requirement: Vec<Vec<FamilyId>>,
    zero_requirement: Vec<FamilyId>,
    place_types: Vec<PlaceType>,
    /// Distinct type keys, sorted.
    type_keys: Vec<(u64, u64)>,
    lower_block_vars: Vec<usize>,
    upper_block_vars: Vec<usize>,
    /// `(type index, configuration, variable)`.
    config_vars: Vec<(usize, Vec<u64>, usize)>,
}

impl Ilp1Context {
    pub fn blocks(&self) -> BlockArithmetic {
        self.blocks
    }

    pub fn place_types(&self) -> &[PlaceType] {
        &self.place_types
    }

    /// Families the program counts (zero-requirement families are handled aside).
    pub fn counted_families(&self) -> usize {
        self.by_requirement.iter().map(Vec::len).sum()
    }

    pub fn zero_requirement_families(&self) -> &[FamilyId] {
        &self.zero_requirement
    }
}

/// Default cap on the number of configuration variables.
pub const DEFAULT_CONFIGURATION_BUDGET: usize = 4_000;

fn configurations(window: (u64, u64), supply: &[u64], limit: usize) -> Result<Vec<Vec<u64>>> {
    fn rec(
        r: usize,
        remaining: u64,
        low: u64,
        supply: &[u64],
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
        limit: usize,
    ) -> Result<()> {
        if r == supply.len() {
            // remaining capacity = hi - total; total >= low
            if low == 0 {
                if out.len() >= limit {
                    return Err(resource("too many configurations"));
                }
                out.push(current.clone());
            }
            return Ok(());
        }
        let weight = r as u64 + 1;
        let max_count = supply[r].min(remaining / weight);
        for c in 0..=max_count {
            current.push(c);
            rec(
                r + 1,
                remaining - c * weight,
                low.saturating_sub(c * weight),
                supply,
                current,
                out,
                limit,
            )?;
            current.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(0, window.0 + window.1, window.0, supply, &mut Vec::new(), &mut out, limit)?;
    Ok(out)
}

/// Builds the block/configuration program whose optimum is the largest
/// number of families a feasible assignment can place.
pub fn build_ilp1(inst: &Instance) -> Result<(IntegerProgram, Ilp1Context)> {
    require_single_service(inst)?;
    if !count_objective_applies(inst) {
        return Err(inapplicable(
            "needs equal positive utilities, indifferent preferences, or no objective",
        ));
    }
    let rmax = inst.structural_params().rmax.max(1);
    let blocks = BlockArithmetic::new(rmax)?;
    let rho = blocks.rho;

    let mut by_requirement = vec![Vec::new(); rmax as usize];
    let mut zero_requirement = Vec::new();
    for f in 0..inst.n() {
        match inst.requirement(f)[0] {
            0 => zero_requirement.push(f),
            r => by_requirement[r as usize - 1].push(f),
        }
    }
    let supply: Vec<u64> = by_requirement.iter().map(|v| v.len() as u64).collect();
    let place_types: Vec<PlaceType> = inst.places().iter().map(|p| classify(p, &blocks)).collect();
    let mut type_keys: Vec<(u64, u64)> = place_types.iter().map(PlaceType::key).collect();
    type_keys.sort_unstable();
    type_keys.dedup();
    let type_count: Vec<i64> = type_keys
        .iter()
        .map(|k| place_types.iter().filter(|t| t.key() == *k).count() as i64)
        .collect();
    let sum_blocks = |f: fn(&PlaceType) -> u64| -> Result<i64> {
        place_types
            .iter()
            .try_fold(0u64, |acc, t| acc.checked_add(f(t)))
            .and_then(|v| i64::try_from(v).ok())
            .ok_or(Error::Overflow("block count"))
    };
    let compulsory_total = sum_blocks(|t| t.compulsory_blocks)?;
    let optional_total = sum_blocks(|t| t.optional_blocks)?;

    let mut ip = IntegerProgram::new(Sense::Maximize);
    let mut lower_block_vars = Vec::new();
    let mut upper_block_vars = Vec::new();
    for r in 1..=rmax {
        let most = (supply[r as usize - 1] * r / rho) as i64;
        let v = ip.add_variable(format!("bl{r}"), 0, most.min(compulsory_total))?;
        ip.set_objective_coefficient(v, (rho / r) as i64);
        lower_block_vars.push(v);
    }
    for r in 1..=rmax {
        let most = (supply[r as usize - 1] * r / rho) as i64;
        let v = ip.add_variable(format!("bu{r}"), 0, most.min(optional_total))?;
        ip.set_objective_coefficient(v, (rho / r) as i64);
        upper_block_vars.push(v);
    }
    let mut config_vars = Vec::new();
    for (k, key) in type_keys.iter().enumerate() {
        let remaining = DEFAULT_CONFIGURATION_BUDGET.saturating_sub(config_vars.len());
        for c in configurations(*key, &supply, remaining)? {
            let label = c.iter().map(u64::to_string).collect::<Vec<_>>().join("_");
            let v = ip.add_variable(format!("x_{}_{}_{label}", key.0, key.1), 0, type_count[k])?;
            ip.set_objective_coefficient(v, c.iter().sum::<u64>() as i64);
            config_vars.push((k, c, v));
        }
    }

    for k in 0..type_keys.len() {
        let terms: Vec<(usize, i64)> = config_vars
            .iter()
            .filter(|(t, _, _)| *t == k)
            .map(|(_, _, v)| (*v, 1))
            .collect();
        ip.add_sparse_constraint(&terms, Relation::Eq, type_count[k])?;
    }
    let lower_terms: Vec<(usize, i64)> = lower_block_vars.iter().map(|&v| (v, 1)).collect();
    ip.add_sparse_constraint(&lower_terms, Relation::Eq, compulsory_total)?;
    let upper_terms: Vec<(usize, i64)> = upper_block_vars.iter().map(|&v| (v, 1)).collect();
    ip.add_sparse_constraint(&upper_terms, Relation::Le, optional_total)?;
    for r in 1..=rmax {
        let idx = r as usize - 1;
        let per_block = (rho / r) as i64;
        let mut terms = vec![(lower_block_vars[idx], per_block), (upper_block_vars[idx], per_block)];
        terms.extend(
            config_vars
                .iter()
                .filter(|(_, c, _)| c[idx] > 0)
                .map(|(_, c, v)| (*v, c[idx] as i64)),
        );
        ip.add_sparse_constraint(&terms, Relation::Le, supply[idx] as i64)?;
    }

    let ctx = Ilp1Context {
        blocks,
        m: inst.m(),
        n: inst.n(),
        by_requirement,
        zero_requirement,
        place_types,
        type_keys,
        lower_block_vars,
        upper_block_vars,
        config_vars,
    };
    Ok((ip, ctx))
}

/// Turns a solution of [`build_ilp1`] into an assignment: compulsory blocks
/// first, optional blocks second, configurations last.
///
/// Zero-requirement families go to place 0 when there is one.
pub fn decode_ilp1(solution: &IpSolution, ctx: &Ilp1Context) -> Result<Assignment> {
    let values = solution.values();
    let rho = ctx.blocks.rho;
    let mut out = Assignment::unassigned(ctx.n);
    let mut next_family = vec![0usize; ctx.by_requirement.len()];
    let mut take = |r: usize, count: u64, place: PlaceId, out: &mut Assignment| -> Result<()> {
        for _ in 0..count {
            let pool = &ctx.by_requirement[r - 1];
            let f = *pool
                .get(next_family[r - 1])
                .ok_or_else(|| Error::Internal(format!("ran out of requirement-{r} families")))?;
            next_family[r - 1] += 1;
            out.set(f, Some(place));
        }
        Ok(())
    };

    for (vars, counter) in [
        (&ctx.lower_block_vars, (|t: &PlaceType| t.compulsory_blocks) as fn(&PlaceType) -> u64),
        (&ctx.upper_block_vars, |t: &PlaceType| t.optional_blocks),
    ] {
        let mut psi: Vec<u64> = ctx.place_types.iter().map(counter).collect();
        for (idx, &v) in vars.iter().enumerate() {
            let r = idx + 1;
            for _ in 0..values[v] {
                let j = psi
                    .iter()
                    .position(|&p| p > 0)
                    .ok_or_else(|| Error::Internal("more blocks than places can take".into()))?;
                psi[j] -= 1;
                take(r, rho / r as u64, j, &mut out)?;
            }
        }
    }

    for (k, key) in ctx.type_keys.iter().enumerate() {
        let mut places = (0..ctx.m).filter(|&j| ctx.place_types[j].key() == *key);
        for (_, c, v) in ctx.config_vars.iter().filter(|(t, _, _)| *t == k) {
            for _ in 0..values[*v] {
                let j = places
                    .next()
                    .ok_or_else(|| Error::Internal("more configurations than places".into()))?;
                for (idx, &count) in c.iter().enumerate() {
                    take(idx + 1, count, j, &mut out)?;
                }
            }
        }
        if places.next().is_some() {
            return Err(Error::Internal("a place received no configuration".into()));
        }
    }
    if ctx.m > 0 {
        for &f in &ctx.zero_requirement {
            out.set(f, Some(0));
        }
    }
    Ok(out)
}

/// Feasible assignment placing the largest number of families, or `None`
/// when no feasible assignment exists.
///
/// Returns the assignment with the number of assigned families.
pub fn solve_rmax_equal(inst: &Instance) -> Result<Option<(Assignment, usize)>> {
    let (ip, ctx) = build_ilp1(inst)?;
    let Some(solution) = solve_ip(&ip)? else {
        return Ok(None);
    };
    let assignment = decode_ilp1(&solution, &ctx)?;
    if !inst.is_feasible(&assignment) {
        return Err(Error::Internal("decoded assignment is infeasible".into()));
    }
    let count = assignment.assigned_count();
    let expected = solution.objective_value() as usize
        + if ctx.m > 0 { ctx.zero_requirement.len() } else { 0 };
    if count != expected {
        return Err(Error::Internal("decoded count differs from the program value".into()));
    }
    Ok(Some((assignment, count)))
}

/// Trials per step used when the caller does not choose.
pub const DEFAULT_TRIALS: usize = 512;
/// Cap on guesses enumerated per trial.
pub const DEFAULT_GUESS_BUDGET: u64 = 1 << 22;

/// Maximum-utility feasible assignment by incremental color-coding.
///
/// Families are added one at a time, then lower quotas are raised one unit
/// at a time; each step moves a guessed number of families of each
/// requirement between each pair of places, picking the families with the
/// largest gain among those whose random color matches the target place.
/// A dummy place with zero utility stands for "unassigned".
///
/// `None` means no feasible assignment was found in any trial of some
/// lower-quota step; this is a Monte-Carlo verdict.
pub fn colorcode_maxutil(inst: &Instance, trials: usize, seed: u64) -> Result<Option<(Assignment, i64)>> {
    require_single_service(inst)?;
    let utilities = inst
        .utilities()
        .ok_or_else(|| inapplicable("color-coding needs a utility matrix"))?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let n = inst.n();
    let m = inst.m();
    let total_places = m + 1;
    let dummy = m;
    let req: Vec<u64> = (0..n).map(|f| inst.requirement(f)[0]).collect();
    let total_req = req.iter().try_fold(0u64, |a, &r| a.checked_add(r)).ok_or(Error::Overflow("total requirement"))?;
    let mut upper: Vec<u64> = inst.places().iter().map(|p| p.upper[0]).collect();
    upper.push(total_req);
    let target_lower: Vec<u64> = inst.places().iter().map(|p| p.lower[0]).collect();
    let util = |f: FamilyId, p: PlaceId| if p == dummy { 0 } else { utilities.get(f, p) };

    let rmax = req.iter().copied().max().unwrap_or(0).max(1);
    let blocks = BlockArithmetic::new(rmax)?;
    let mm = total_places as u64;
    let rho_star = (0..mm)
        .fold(1u64, |a, _| a.saturating_mul(mm))
        .saturating_mul(blocks.rho)
        .saturating_mul(rmax);
    let move_cap = mm.saturating_mul(rho_star);

    // zero-requirement families never affect loads: park them at their best place
    let mut assignment: Vec<Option<PlaceId>> = vec![None; n];
    for f in (0..n).filter(|&f| req[f] == 0) {
        let best = (0..total_places).max_by_key(|&p| (util(f, p), std::cmp::Reverse(p))).expect("dummy exists");
        assignment[f] = Some(best);
    }
    let active: Vec<FamilyId> = (0..n).filter(|&f| req[f] > 0).collect();

    let mut lower = vec![0u64; total_places];
    let mut step: u64 = 0;
    let mut added: Vec<FamilyId> = Vec::new();
    for &f in &active {
        step += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let best = modification_step(
            &StepInput {
                current: &assignment,
                members: &added,
                new_family: Some(f),
                req: &req,
                lower: &lower,
                upper: &upper,
                places: total_places,
                move_cap,
            },
            &util,
            trials,
            &mut rng,
        )?;
        assignment = best.ok_or_else(|| Error::Internal("dummy place must admit every family".into()))?;
        added.push(f);
    }
    for j in 0..m {
        while lower[j] < target_lower[j] {
            lower[j] += 1;
            let load: u64 = active.iter().filter(|&&f| assignment[f] == Some(j)).map(|&f| req[f]).sum();
            if load >= lower[j] {
                continue;
            }
            step += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let best = modification_step(
                &StepInput {
                    current: &assignment,
                    members: &active,
                    new_family: None,
                    req: &req,
                    lower: &lower,
                    upper: &upper,
                    places: total_places,
                    move_cap,
                },
                &util,
                trials,
                &mut rng,
            )?;
            match best {
                Some(a) => assignment = a,
                None => return Ok(None),
            }
        }
    }
    let result = Assignment::new(assignment.into_iter().map(|p| p.filter(|&p| p != dummy)).collect());
    let value = inst.total_utility(&result)?;
    Ok(Some((result, value)))
}

struct StepInput<'a> {
    current: &'a [Option<PlaceId>],
    /// Families already placed by `current` that may move.
    members: &'a [FamilyId],
    new_family: Option<FamilyId>,
    req: &'a [u64],
    lower: &'a [u64],
    upper: &'a [u64],
    places: usize,
    move_cap: u64,
}

/// Best feasible assignment reachable from `current` over all trials and guesses.
fn modification_step(
    input: &StepInput<'_>,
    util: &dyn Fn(FamilyId, PlaceId) -> i64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<Option<PlaceId>>>> {
    let places = input.places;
    let mut base_load = vec![0u64; places];
    let mut base_util: i64 = 0;
    for &f in input.members {
        let p = input.current[f].expect("members are placed");
        base_load[p] += input.req[f];
        base_util = base_util.checked_add(util(f, p)).ok_or(Error::Overflow("utility"))?;
    }
    let new_targets: Vec<PlaceId> = match input.new_family {
        Some(_) => (0..places).collect(),
        None => vec![usize::MAX],
    };

    let mut best: Option<(i64, Vec<Option<PlaceId>>)> = None;
    for _ in 0..trials {
        let colors: Vec<PlaceId> = input.members.iter().map(|_| rng.gen_range(0..places)).collect();
        // one group per (from, to, requirement); families sorted by gain, then index
        let mut groups: Vec<((PlaceId, PlaceId, u64), Vec<FamilyId>)> = Vec::new();
        for (k, &f) in input.members.iter().enumerate() {
            let from = input.current[f].expect("members are placed");
            let to = colors[k];
            if from == to {
                continue;
            }
            let key = (from, to, input.req[f]);
            match groups.iter_mut().find(|(g, _)| *g == key) {
                Some((_, v)) => v.push(f),
                None => groups.push((key, vec![f])),
            }
        }
        groups.sort_by_key(|(k, _)| *k);
        let mut prefix_gain: Vec<Vec<i64>> = Vec::with_capacity(groups.len());
        for ((from, to, _), fams) in groups.iter_mut() {
            fams.sort_by_key(|&f| (std::cmp::Reverse(util(f, *to) - util(f, *from)), f));
            let mut acc = vec![0i64];
            for &f in fams.iter() {
                let last = *acc.last().expect("non-empty");
                acc.push(last + util(f, *to) - util(f, *from));
            }
            prefix_gain.push(acc);
        }
        let guesses = groups
            .iter()
            .fold(1u64, |acc, (_, v)| acc.saturating_mul(v.len() as u64 + 1));
        if guesses.saturating_mul(new_targets.len() as u64) > DEFAULT_GUESS_BUDGET {
            return Err(resource(format!("{guesses} guesses per trial exceed the budget")));
        }

        let mut counts = vec![0usize; groups.len()];
        loop {
            let moved: u64 = counts
                .iter()
                .zip(&groups)
                .map(|(&c, ((_, _, r), _))| c as u64 * r)
                .sum();
            if moved <= input.move_cap {
                let mut load = base_load.clone();
                let mut value = base_util;
                for (g, ((from, to, r), _)) in groups.iter().enumerate() {
                    let w = counts[g] as u64 * r;
                    load[*from] -= w;
                    load[*to] += w;
                    value += prefix_gain[g][counts[g]];
                }
                for &target in &new_targets {
                    let mut load = load.clone();
                    let mut value = value;
                    if let Some(f) = input.new_family {
                        load[target] += input.req[f];
                        value += util(f, target);
                    }
                    let feasible = (0..places).all(|p| input.lower[p] <= load[p] && load[p] <= input.upper[p]);
                    if feasible && best.as_ref().is_none_or(|(b, _)| value > *b) {
                        let mut next = input.current.to_vec();
                        for (g, ((_, to, _), fams)) in groups.iter().enumerate() {
                            for &f in &fams[..counts[g]] {
                                next[f] = Some(*to);
                            }
                        }
                        if let Some(f) = input.new_family {
                            next[f] = Some(target);
                        }
                        best = Some((value, next));
                    }
                }
            }
            // odometer
            let mut g = 0;
            loop {
                if g == counts.len() {
                    break;
                }
                if counts[g] < groups[g].1.len() {
                    counts[g] += 1;
                    break;
                }
                counts[g] = 0;
                g += 1;
            }
            if g == counts.len() {
                break;
            }
        }
    }
    Ok(best.map(|(_, a)| a))
}

/// Result of [`kernelize_ustar`].
#[derive(Debug, Clone, PartialEq)]
pub enum KernelOutcome {
    /// An assignment that already reaches the target.
    Witness(Assignment, i64),
    /// An equivalent instance on the kept families (original indices, ascending).
    Reduced { instance: Instance, kept: Vec<FamilyId> },
}

/// Shrinks a no-lower-quota, single-service instance to at most
/// `u_star^3` families without changing whether utility `u_star` is reachable.
pub fn kernelize_ustar(inst: &Instance, u_star: i64) -> Result<KernelOutcome> {
    require_single_service(inst)?;
    if inst.has_lower_quotas() {
        return Err(inapplicable("kernelization needs an instance without lower quotas"));
    }
    let utilities = inst
        .utilities()
        .ok_or_else(|| inapplicable("kernelization needs a utility matrix"))?;
    if u_star < 1 {
        return Err(Error::Parameter("target utility must be at least 1".into()));
    }
    let n = inst.n();
    let m = inst.m();
    let req = |f: FamilyId| inst.requirement(f)[0];
    let cap = |p: PlaceId| inst.places()[p].upper[0];

    for f in 0..n {
        for p in 0..m {
            if utilities.get(f, p) >= u_star && req(f) <= cap(p) {
                let mut a = Assignment::unassigned(n);
                a.set(f, Some(p));
                return Ok(KernelOutcome::Witness(a, utilities.get(f, p)));
            }
        }
    }

    let mut greedy = Assignment::unassigned(n);
    let mut load = vec![0u64; m];
    let mut value = 0i64;
    for f in 0..n {
        let choice = (0..m)
            .filter(|&p| utilities.get(f, p) >= 1 && load[p] + req(f) <= cap(p))
            .max_by_key(|&p| (utilities.get(f, p), std::cmp::Reverse(p)));
        if let Some(p) = choice {
            greedy.set(f, Some(p));
            load[p] += req(f);
            value += utilities.get(f, p);
        }
    }
    if value >= u_star {
        return Ok(KernelOutcome::Witness(greedy, value));
    }

    let mut marked = vec![false; n];
    let mut used_places = vec![false; m];
    for f in 0..n {
        if let Some(p) = greedy.get(f) {
            marked[f] = true;
            used_places[p] = true;
        }
    }
    for p in (0..m).filter(|&p| used_places[p]) {
        for gamma in 1..=u_star {
            let mut candidates: Vec<FamilyId> = (0..n).filter(|&f| utilities.get(f, p) == gamma).collect();
            candidates.sort_by_key(|&f| (req(f), f));
            for &f in candidates.iter().take(u_star as usize) {
                marked[f] = true;
            }
        }
    }
    let kept: Vec<FamilyId> = (0..n).filter(|&f| marked[f]).collect();
    let bound = (u_star as u128).pow(3);
    if kept.len() as u128 > bound {
        return Err(Error::Internal(format!("kernel has {} families, bound is {bound}", kept.len())));
    }
    Ok(KernelOutcome::Reduced {
        instance: inst.restrict_families(&kept),
        kept,
    })
}
