//! Algorithm selection, execution and verification.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::format::assignment_ids;
use crate::model::{Assignment, Instance, UtilityMatrix};
use crate::multi_service::{dp_maxutil, solve_nfold, typed_maxutil, xp_ustar_decide};
use crate::oracle::{
    enumerate_maxutil, enumerate_pareto, find_pareto_improvement, fptn_maxutil, DEFAULT_FPTN_MAX_FAMILIES,
};
use crate::pareto::{default_maxutil, greedy_m1, serial_dictatorship_ties, solve_pareto};
use crate::single_service::{colorcode_maxutil, kernelize_ustar, solve_rmax_equal, KernelOutcome, DEFAULT_TRIALS};

/// Instances with at most this many families go straight to enumeration.
pub const TINY_FAMILIES: usize = 3;
/// Largest instance the oracle cross-check and the Pareto check run on.
pub const ORACLE_MAX_FAMILIES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Feasible,
    MaxUtil,
    Pareto,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feasible" => Ok(Self::Feasible),
            "maxutil" => Ok(Self::MaxUtil),
            "pareto" => Ok(Self::Pareto),
            other => Err(Error::Parameter(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Enumerate,
    Fptn,
    Dp,
    TypedIlp,
    NFold,
    BlockIlp,
    Colorcode,
    Kernel,
    PairSubsets,
    GreedyM1,
    SerialDictatorship,
    RankReduction,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Self::Enumerate,
        Self::Fptn,
        Self::Dp,
        Self::TypedIlp,
        Self::NFold,
        Self::BlockIlp,
        Self::Colorcode,
        Self::Kernel,
        Self::PairSubsets,
        Self::GreedyM1,
        Self::SerialDictatorship,
        Self::RankReduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Enumerate => "enumerate",
            Self::Fptn => "fptn",
            Self::Dp => "dp",
            Self::TypedIlp => "typed-ilp",
            Self::NFold => "nfold",
            Self::BlockIlp => "block-ilp",
            Self::Colorcode => "colorcode",
            Self::Kernel => "kernel",
            Self::PairSubsets => "pair-subsets",
            Self::GreedyM1 => "greedy-m1",
            Self::SerialDictatorship => "serial-dictatorship",
            Self::RankReduction => "rank-reduction",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Optimal,
    FeasibleFound,
    Infeasible,
    AbsentProbabilistic,
    ResourceExceeded,
    Inapplicable,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::FeasibleFound => "feasible-found",
            Self::Infeasible => "infeasible",
            Self::AbsentProbabilistic => "absent-probabilistic",
            Self::ResourceExceeded => "resource-exceeded",
            Self::Inapplicable => "inapplicable",
        }
    }

    pub fn has_objective(self) -> bool {
        matches!(self, Self::Optimal | Self::FeasibleFound)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub algorithm: String,
    pub outcome: Outcome,
    pub objective: Option<i64>,
    pub assignment: Option<Assignment>,
    pub millis: u128,
    pub feasible_checked: bool,
    pub acceptable_checked: Option<bool>,
    pub pareto_checked: Option<bool>,
    pub oracle_match: Option<bool>,
    pub note: Option<String>,
}

impl SolveReport {
    fn empty(algorithm: &str, outcome: Outcome, note: Option<String>) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            outcome,
            objective: None,
            assignment: None,
            millis: 0,
            feasible_checked: false,
            acceptable_checked: None,
            pareto_checked: None,
            oracle_match: None,
            note,
        }
    }

    pub fn to_json(&self, inst: &Instance) -> Value {
        json!({
            "algorithm": self.algorithm,
            "outcome": self.outcome.name(),
            "objective": self.objective,
            "assignment": self.assignment.as_ref().map(|a| assignment_ids(inst, a)),
            "millis": self.millis as u64,
            "feasible_checked": self.feasible_checked,
            "acceptable_checked": self.acceptable_checked,
            "pareto_checked": self.pareto_checked,
            "oracle_match": self.oracle_match,
            "note": self.note,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOptions {
    pub algorithm: Option<Algorithm>,
    pub u_star: Option<i64>,
    pub trials: usize,
    pub seed: u64,
    /// Cross-check against exhaustive enumeration on small instances.
    pub oracle_check: bool,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self {
            algorithm: None,
            u_star: None,
            trials: DEFAULT_TRIALS,
            seed: 0,
            oracle_check: false,
        }
    }
}

enum Verdict {
    Found { assignment: Assignment, proven: bool },
    None,
    Absent,
}

fn maxutil_verdict(found: Option<(Assignment, i64)>) -> Verdict {
    match found {
        Some((assignment, _)) => Verdict::Found { assignment, proven: true },
        None => Verdict::None,
    }
}

/// Instance the algorithms actually run on for `problem`.
fn working_instance(inst: &Instance, problem: Problem) -> Result<Instance> {
    match problem {
        Problem::Feasible => inst
            .with_preferences(None)?
            .with_utilities(Some(UtilityMatrix::uniform(inst.n(), inst.m(), 1))),
        Problem::MaxUtil => {
            if inst.utilities().is_none() {
                return Err(Error::Inapplicable("maximizing utility needs a utility matrix".into()));
            }
            inst.with_preferences(None)
        }
        Problem::Pareto => {
            if inst.preferences().is_none() {
                return Err(Error::Inapplicable("Pareto optimality needs preferences".into()));
            }
            Ok(inst.clone())
        }
    }
}

fn run_utility(work: &Instance, algorithm: Algorithm, opts: &DispatchOptions) -> Result<Verdict> {
    let need_target = || {
        opts.u_star
            .ok_or_else(|| Error::Parameter(format!("{algorithm} needs a target utility")))
    };
    match algorithm {
        Algorithm::Enumerate => Ok(maxutil_verdict(enumerate_maxutil(work)?)),
        Algorithm::Fptn => Ok(maxutil_verdict(fptn_maxutil(work)?)),
        Algorithm::Dp => Ok(maxutil_verdict(dp_maxutil(work)?)),
        Algorithm::TypedIlp => Ok(maxutil_verdict(typed_maxutil(work)?)),
        Algorithm::BlockIlp => Ok(match solve_rmax_equal(work)? {
            Some((assignment, _)) => Verdict::Found { assignment, proven: true },
            None => Verdict::None,
        }),
        Algorithm::NFold => Ok(match solve_nfold(work)? {
            Some((assignment, _)) => Verdict::Found { assignment, proven: true },
            None => Verdict::None,
        }),
        Algorithm::Colorcode => Ok(match colorcode_maxutil(work, opts.trials, opts.seed)? {
            Some((assignment, _)) => Verdict::Found { assignment, proven: false },
            None => Verdict::Absent,
        }),
        Algorithm::Kernel => {
            let target = need_target()?;
            match kernelize_ustar(work, target)? {
                KernelOutcome::Witness(assignment, _) => Ok(Verdict::Found { assignment, proven: false }),
                KernelOutcome::Reduced { instance, kept } => match default_maxutil(&instance)? {
                    Some((reduced, value)) if value >= target => {
                        let mut assignment = Assignment::unassigned(work.n());
                        for (k, &f) in kept.iter().enumerate() {
                            assignment.set(f, reduced.get(k));
                        }
                        Ok(Verdict::Found { assignment, proven: false })
                    }
                    _ => Ok(Verdict::None),
                },
            }
        }
        Algorithm::PairSubsets => Ok(match xp_ustar_decide(work, need_target()?)? {
            Some(assignment) => Verdict::Found { assignment, proven: false },
            None => Verdict::None,
        }),
        Algorithm::GreedyM1 | Algorithm::SerialDictatorship | Algorithm::RankReduction => Err(Error::Inapplicable(
            format!("{algorithm} solves the Pareto problem only"),
        )),
    }
}

fn run_pareto(work: &Instance, algorithm: Algorithm) -> Result<Verdict> {
    let found = match algorithm {
        Algorithm::Enumerate => enumerate_pareto(work)?,
        Algorithm::GreedyM1 => Some(greedy_m1(work)?),
        Algorithm::SerialDictatorship => serial_dictatorship_ties(work)?,
        Algorithm::RankReduction => solve_pareto(work, default_maxutil)?,
        Algorithm::Dp => solve_pareto(work, dp_maxutil)?,
        Algorithm::Fptn => solve_pareto(work, fptn_maxutil)?,
        Algorithm::TypedIlp => solve_pareto(work, typed_maxutil)?,
        other => return Err(Error::Inapplicable(format!("{other} does not solve the Pareto problem"))),
    };
    Ok(match found {
        Some(assignment) => Verdict::Found { assignment, proven: true },
        None => Verdict::None,
    })
}

fn run(work: &Instance, problem: Problem, algorithm: Algorithm, opts: &DispatchOptions) -> Result<Verdict> {
    match problem {
        Problem::Pareto => run_pareto(work, algorithm),
        Problem::Feasible | Problem::MaxUtil => {
            if problem == Problem::Feasible && matches!(algorithm, Algorithm::Kernel | Algorithm::PairSubsets) {
                return Err(Error::Inapplicable(format!("{algorithm} needs a utility target")));
            }
            if problem == Problem::MaxUtil {
                let normalized = work.normalize();
                if normalized.removed.is_empty() {
                    return run_utility(work, algorithm, opts);
                }
                return Ok(match run_utility(&normalized.instance, algorithm, opts)? {
                    Verdict::Found { assignment, proven } => Verdict::Found {
                        assignment: normalized.lift(work, &assignment),
                        proven,
                    },
                    other => other,
                });
            }
            run_utility(work, algorithm, opts)
        }
    }
}

/// Candidate algorithms for `problem` on `work`, cheapest expected first.
pub fn candidates(work: &Instance, problem: Problem, opts: &DispatchOptions) -> Vec<Algorithm> {
    let p = work.structural_params();
    let mut out = Vec::new();
    if p.n <= TINY_FAMILIES {
        out.push(Algorithm::Enumerate);
    }
    match problem {
        Problem::Feasible => {
            if p.t == 1 {
                out.push(Algorithm::BlockIlp);
            }
            out.extend([Algorithm::Dp, Algorithm::NFold, Algorithm::Fptn]);
        }
        Problem::MaxUtil => {
            if p.t == 1 && p.equal_utilities {
                out.push(Algorithm::BlockIlp);
            }
            if p.t == 1 && opts.u_star.is_some() && !p.has_lower_quotas {
                out.push(Algorithm::Kernel);
            }
            out.extend([Algorithm::Dp, Algorithm::TypedIlp]);
            if p.t == 1 {
                out.push(Algorithm::Colorcode);
            }
            out.push(Algorithm::Fptn);
        }
        Problem::Pareto => {
            if !p.has_lower_quotas {
                if p.m == 1 {
                    out.push(Algorithm::GreedyM1);
                }
                if p.n_ties <= DEFAULT_FPTN_MAX_FAMILIES {
                    out.push(Algorithm::SerialDictatorship);
                }
            }
            out.push(Algorithm::RankReduction);
        }
    }
    out
}

/// Picks an algorithm (or uses the forced one), runs it and verifies the result.
///
/// Budget and applicability failures become report outcomes; an error is
/// returned only for bad parameters or a result that fails verification.
pub fn dispatch(inst: &Instance, problem: Problem, opts: &DispatchOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let work = match working_instance(inst, problem) {
        Ok(w) => w,
        Err(Error::Inapplicable(msg)) => return Ok(SolveReport::empty("none", Outcome::Inapplicable, Some(msg))),
        Err(e) => return Err(e),
    };
    let order = match opts.algorithm {
        Some(a) => vec![a],
        None => candidates(&work, problem, opts),
    };
    let mut last = SolveReport::empty("none", Outcome::ResourceExceeded, Some("no algorithm applies".into()));
    for algorithm in order {
        match run(&work, problem, algorithm, opts) {
            Ok(verdict) => {
                let mut report = finish(inst, &work, problem, algorithm, verdict, opts)?;
                report.millis = start.elapsed().as_millis();
                return Ok(report);
            }
            Err(Error::Resource(msg)) => {
                last = SolveReport::empty(algorithm.name(), Outcome::ResourceExceeded, Some(msg));
            }
            Err(Error::Inapplicable(msg)) => {
                last = SolveReport::empty(algorithm.name(), Outcome::Inapplicable, Some(msg));
            }
            Err(e) => return Err(e),
        }
    }
    last.millis = start.elapsed().as_millis();
    Ok(last)
}

fn objective_of(work: &Instance, problem: Problem, assignment: &Assignment) -> Result<i64> {
    match problem {
        Problem::MaxUtil => work.total_utility(assignment),
        Problem::Feasible | Problem::Pareto => Ok(assignment.assigned_count() as i64),
    }
}

fn finish(
    inst: &Instance,
    work: &Instance,
    problem: Problem,
    algorithm: Algorithm,
    verdict: Verdict,
    opts: &DispatchOptions,
) -> Result<SolveReport> {
    let small = inst.n() <= ORACLE_MAX_FAMILIES;
    let target = match (problem, algorithm) {
        (Problem::MaxUtil, Algorithm::Kernel | Algorithm::PairSubsets) => opts.u_star,
        _ => None,
    };
    let mut report = match verdict {
        Verdict::Found { assignment, proven } => {
            if !inst.is_feasible(&assignment) {
                return Err(Error::Internal(format!("{algorithm} returned an infeasible assignment")));
            }
            let mut report = SolveReport::empty(
                algorithm.name(),
                if proven { Outcome::Optimal } else { Outcome::FeasibleFound },
                None,
            );
            report.feasible_checked = true;
            if problem == Problem::Pareto {
                if !inst.is_acceptable(&assignment)? {
                    return Err(Error::Internal(format!("{algorithm} returned an unacceptable assignment")));
                }
                report.acceptable_checked = Some(true);
                if small {
                    if find_pareto_improvement(inst, &assignment)?.is_some() {
                        return Err(Error::Internal(format!("{algorithm} returned a dominated assignment")));
                    }
                    report.pareto_checked = Some(true);
                }
            }
            report.objective = Some(objective_of(work, problem, &assignment)?);
            if let (Some(t), Some(v)) = (target, report.objective) {
                if v < t {
                    return Err(Error::Internal(format!("{algorithm} missed the target utility")));
                }
            }
            report.assignment = Some(assignment);
            report
        }
        Verdict::None => {
            let note = target.map(|t| format!("no feasible assignment reaches utility {t}"));
            SolveReport::empty(algorithm.name(), Outcome::Infeasible, note)
        }
        Verdict::Absent => SolveReport::empty(
            algorithm.name(),
            Outcome::AbsentProbabilistic,
            Some("no feasible assignment found in any trial".into()),
        ),
    };
    if opts.oracle_check && small {
        report.oracle_match = oracle_agrees(work, problem, &report, target)?;
    }
    Ok(report)
}

fn oracle_agrees(work: &Instance, problem: Problem, report: &SolveReport, target: Option<i64>) -> Result<Option<bool>> {
    let exists = match problem {
        Problem::Pareto => match enumerate_pareto(work) {
            Ok(found) => return Ok(Some(found.is_some() == report.objective.is_some())),
            Err(Error::Resource(_)) => return Ok(None),
            Err(e) => return Err(e),
        },
        Problem::Feasible | Problem::MaxUtil => match enumerate_maxutil(work) {
            Ok(found) => found.map(|(_, v)| v),
            Err(Error::Resource(_)) => return Ok(None),
            Err(e) => return Err(e),
        },
    };
    Ok(Some(match (target, exists, report.objective) {
        (Some(t), best, objective) => best.is_some_and(|b| b >= t) == objective.is_some(),
        (None, best, objective) => best == objective,
    }))
}
