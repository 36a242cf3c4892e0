use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use resettle::io::{
    bench, dispatch, gen_binpacking, gen_random, parse_assignment, parse_instance, serialize_instance, write_csv,
    Algorithm, BinPackingVariant, DispatchOptions, GenMode, GenParams, Outcome, Problem, SolveReport,
};
use resettle::oracle::find_pareto_improvement;
use resettle::single_service::DEFAULT_TRIALS;
use resettle::{Error, Instance};

const EXIT_SOLVED: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_NO: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_INPUT: u8 = 4;

/// Families largest instance `verify` searches for Pareto improvements on.
const VERIFY_PARETO_FAMILIES: usize = 8;

#[derive(Parser)]
#[command(name = "resettle", version, about = "Assign families to places under service quotas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and print a JSON report.
    Solve(SolveArgs),
    /// Check an assignment against an instance.
    Verify {
        instance: PathBuf,
        /// JSON file with an "assignment" array of place ids (a solve report works).
        assignment: PathBuf,
    },
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run algorithms over a directory of instance files and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "maxutil")]
    problem: ProblemArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target utility for the kernel and pair-subset algorithms.
    #[arg(long = "u-star")]
    u_star: Option<i64>,
    /// Color-coding trials per step.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Run this algorithm instead of choosing one.
    #[arg(long)]
    algo: Option<String>,
    /// Give up after this many milliseconds.
    #[arg(long = "budget-ms")]
    budget_ms: Option<u64>,
    /// Cross-check small instances against exhaustive enumeration.
    #[arg(long)]
    oracle: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Comma-separated algorithm names; automatic selection when omitted.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// Fill the millis column (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Seeded random instances.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of instances; seeds run from `seed` upwards.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 3)]
        rmax: u64,
        #[arg(long, default_value_t = 6)]
        cmax: u64,
        #[arg(long, value_enum, default_value = "utilities")]
        mode: ModeArg,
        #[arg(long = "lower-density", default_value_t = 0.0)]
        lower_density: f64,
        /// Output directory; a single instance goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bin packing instance: one family per item, `k` places of equal size.
    Binpacking {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "feasibility")]
        variant: VariantArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Feasible,
    Maxutil,
    Pareto,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Feasible => Problem::Feasible,
            ProblemArg::Maxutil => Problem::MaxUtil,
            ProblemArg::Pareto => Problem::Pareto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Utilities,
    Preferences,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Feasibility,
    Pareto,
}

fn read_instance(path: &Path) -> Result<Instance, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn options(common: &Common) -> DispatchOptions {
    DispatchOptions {
        u_star: common.u_star,
        trials: common.trials,
        seed: common.seed,
        ..DispatchOptions::default()
    }
}

fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Optimal | Outcome::FeasibleFound => EXIT_SOLVED,
        Outcome::Infeasible => EXIT_NO,
        Outcome::AbsentProbabilistic | Outcome::ResourceExceeded => EXIT_RESOURCE,
        Outcome::Inapplicable => EXIT_INPUT,
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Parameter(_) | Error::Model(_) | Error::Inapplicable(_) => EXIT_INPUT,
        Error::Resource(_) | Error::Overflow(_) => EXIT_RESOURCE,
        Error::Precondition(_) | Error::Internal(_) => EXIT_INTERNAL,
    }
}

fn solve(args: SolveArgs) -> Result<u8, Error> {
    let inst = read_instance(&args.instance)?;
    let problem = Problem::from(args.common.problem);
    let mut opts = options(&args.common);
    opts.algorithm = args.algo.as_deref().map(str::parse).transpose()?;
    opts.oracle_check = args.oracle;
    let report = match args.budget_ms {
        None => dispatch(&inst, problem, &opts)?,
        Some(ms) => {
            let (tx, rx) = mpsc::channel();
            let worker_inst = inst.clone();
            std::thread::spawn(move || {
                let _ = tx.send(dispatch(&worker_inst, problem, &opts));
            });
            match rx.recv_timeout(Duration::from_millis(ms)) {
                Ok(result) => result?,
                Err(_) => SolveReport {
                    algorithm: "none".into(),
                    outcome: Outcome::ResourceExceeded,
                    objective: None,
                    assignment: None,
                    millis: u128::from(ms),
                    feasible_checked: false,
                    acceptable_checked: None,
                    pareto_checked: None,
                    oracle_match: None,
                    note: Some(format!("time budget of {ms} ms exceeded")),
                },
            }
        }
    };
    let text = serde_json::to_string_pretty(&report.to_json(&inst)).map_err(|e| Error::Internal(e.to_string()))?;
    write_output(args.out.as_deref(), &format!("{text}\n"))?;
    Ok(outcome_code(report.outcome))
}

fn verify(instance: &Path, assignment: &Path) -> Result<u8, Error> {
    let inst = read_instance(instance)?;
    let text = std::fs::read_to_string(assignment).map_err(|e| Error::Io(format!("{}: {e}", assignment.display())))?;
    let a = parse_assignment(&text, &inst)?;
    let feasible = inst.is_feasible(&a);
    let acceptable = inst.preferences().map(|_| inst.is_acceptable(&a)).transpose()?;
    let utility = inst.utilities().map(|_| inst.total_utility(&a)).transpose()?;
    let pareto_optimal = match acceptable {
        Some(true) if feasible && inst.n() <= VERIFY_PARETO_FAMILIES => Some(find_pareto_improvement(&inst, &a)?.is_none()),
        _ => None,
    };
    let report = json!({
        "feasible": feasible,
        "acceptable": acceptable,
        "complete": inst.is_complete(&a),
        "utility": utility,
        "loads": inst.loads(&a)?,
        "pareto_optimal": pareto_optimal,
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?);
    Ok(if feasible && acceptable != Some(false) { EXIT_SOLVED } else { EXIT_NO })
}

fn generate(cmd: GenCommand) -> Result<u8, Error> {
    match cmd {
        GenCommand::Random {
            seed,
            count,
            n,
            m,
            t,
            rmax,
            cmax,
            mode,
            lower_density,
            out,
        } => {
            let params = GenParams {
                n,
                m,
                t,
                rmax,
                cmax,
                mode: match mode {
                    ModeArg::Utilities => GenMode::Utilities,
                    ModeArg::Preferences => GenMode::Preferences,
                    ModeArg::None => GenMode::None,
                },
                lower_quota_density: lower_density,
            };
            match out {
                None if count == 1 => write_output(None, &serialize_instance(&gen_random(seed, &params)?))?,
                None => return Err(Error::Parameter("--out is required for more than one instance".into())),
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                    for s in seed..seed + count {
                        let path = dir.join(format!("random_{s:06}.json"));
                        write_output(Some(&path), &serialize_instance(&gen_random(s, &params)?))?;
                    }
                }
            }
        }
        GenCommand::Binpacking { sizes, k, variant, out } => {
            let variant = match variant {
                VariantArg::Feasibility => BinPackingVariant::Feasibility,
                VariantArg::Pareto => BinPackingVariant::Pareto,
            };
            write_output(out.as_deref(), &serialize_instance(&gen_binpacking(&sizes, k, variant)?))?;
        }
    }
    Ok(EXIT_SOLVED)
}

fn run_bench(args: BenchArgs) -> Result<u8, Error> {
    let algorithms = args
        .algo
        .iter()
        .map(|a| a.parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()?;
    let rows = bench(&args.corpus, &algorithms, args.common.problem.into(), &options(&args.common))?;
    let mut bytes = Vec::new();
    write_csv(&rows, &mut bytes, args.timing)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?;
    write_output(args.out.as_deref(), &text)?;
    Ok(EXIT_SOLVED)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Verify { instance, assignment } => verify(&instance, &assignment),
        Command::Gen(cmd) => generate(cmd),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("resettle: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
