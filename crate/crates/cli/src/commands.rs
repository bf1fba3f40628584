//! Subcommands. Each returns the text to print and the process exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apsfm_core::generate::random_problem;
use apsfm_core::oracles::{check_in_base, fw_project, variational_check};
use apsfm_core::projection::{project_component, project_generic};
use apsfm_core::solver::{run_ap, SolveOptions, SolveStatus};
use apsfm_core::spectral::spectral_report;
use apsfm_core::worstcase::{build_lb_instance, predicted_cf2, ratio_experiment, RatioInit, DEFAULT_INIT_SCALE};
use apsfm_core::{DecomposableProblem, ProjectionConfig, EXHAUSTIVE_PAIR_LIMIT};

use crate::error::{exit, CliError};
use crate::io::{face_spec_to_json, parse_face_spec, parse_problem, problem_to_json};

#[derive(Debug, Parser)]
#[command(name = "apsfm", version, about = "Decomposable submodular minimization by alternating projections")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize a problem by alternating projections.
    Solve(SolveArgs),
    /// Print the spectral report of a face.
    Spectral(SpectralArgs),
    /// Ratio experiment on the cycle lower-bound instance.
    Lowerbound(LowerboundArgs),
    /// Exhaustive minimum (N ≤ 20).
    Brute(ProblemArg),
    /// Certify every component's projector against the slow oracles.
    Check(CheckArgs),
    /// Write problem files.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Debug, Args)]
pub struct ProblemArg {
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_gap: f64,
    /// Start from a seeded random point instead of zero.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Project the components on the thread pool.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    pub problem: PathBuf,
    #[arg(long)]
    pub faces: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Random,
    Worst,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    #[arg(long = "n")]
    pub n: usize,
    #[arg(long = "r")]
    pub r: usize,
    #[arg(long, value_enum, default_value_t = InitKind::Random)]
    pub init: InitKind,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 500)]
    pub iters: usize,
    /// Seed of the first random trial; trial `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Norm of the starting point.
    #[arg(long, default_value_t = DEFAULT_INIT_SCALE)]
    pub scale: f64,
    /// Output CSV; with several trials `<stem>_trial<i>.<ext>` is written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub problem: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random directions for the variational check.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// The cycle lower-bound instance.
    Lb {
        #[arg(long = "n")]
        n: usize,
        #[arg(long = "r")]
        r: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the face spec of the instance's affine hull.
        #[arg(long)]
        faces_out: Option<PathBuf>,
    },
    /// A random instance with mixed component kinds.
    Random {
        #[arg(long = "n")]
        n: usize,
        #[arg(long = "r")]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_support: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Text for stdout and the exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<DecomposableProblem, CliError> {
    parse_problem(&read(path)?)
}

/// Parses arguments and runs the command. Argument errors exit with 2.
pub fn run_args<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { 0 };
            Ok(Outcome {
                stdout: e.render().to_string(),
                code,
            })
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Spectral(a) => spectral(&a),
        Command::Lowerbound(a) => lowerbound(&a),
        Command::Brute(a) => brute(&a.problem),
        Command::Check(a) => check(&a),
        Command::Generate(g) => generate(g),
    }
}

fn solve(args: &SolveArgs) -> Result<Outcome, CliError> {
    let p = load_problem(&args.problem)?;
    let opts = SolveOptions {
        max_iters: args.max_iters,
        tol_discrete_gap: args.tol_gap,
        seed: args.seed,
        parallel: args.parallel,
        record_trace: args.trace.is_some(),
        ..SolveOptions::default()
    };
    let res = run_ap(&p, &opts)?;
    if let Some(path) = &args.trace {
        write(path, &res.trace.to_csv())?;
    }
    let mut out = String::new();
    let _ = writeln!(out, "minimizer={}", res.minimizer_set);
    let _ = writeln!(out, "min_value={}", res.min_value + 0.0);
    let _ = writeln!(out, "discrete_gap={}", res.discrete_gap + 0.0);
    let _ = writeln!(out, "continuous_gap={}", res.continuous_gap);
    let _ = writeln!(out, "iterations={}", res.iterations);
    let _ = writeln!(out, "status={}", res.status.as_str());
    let _ = writeln!(out, "certified={}", res.certified);
    if let Some(e) = &res.error {
        let _ = writeln!(out, "error={e}");
    }
    let code = if res.status == SolveStatus::NumericError {
        exit::NUMERIC
    } else if res.certified {
        exit::CERTIFIED
    } else {
        exit::BUDGET
    };
    Ok(Outcome { stdout: out, code })
}

fn spectral(args: &SpectralArgs) -> Result<Outcome, CliError> {
    let p = load_problem(&args.problem)?;
    let spec = parse_face_spec(&read(&args.faces)?)?;
    if spec.ground_size() != p.ground_size() || spec.num_components() != p.num_components() {
        return Err(CliError::Input(format!(
            "face spec is for N={}, R={} but the problem has N={}, R={}",
            spec.ground_size(),
            spec.num_components(),
            p.ground_size(),
            p.num_components()
        )));
    }
    Ok(Outcome::ok(spectral_report(&spec)?.to_string()))
}

/// `<stem>_trial<i>.<ext>` next to `out`.
pub fn trial_path(out: &Path, i: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_trial{i}.{}", ext.to_string_lossy()),
        None => format!("{stem}_trial{i}"),
    };
    out.with_file_name(name)
}

fn lowerbound(args: &LowerboundArgs) -> Result<Outcome, CliError> {
    if args.trials == 0 {
        return Err(CliError::Input("trials must be at least 1".into()));
    }
    if !(args.scale > 0.0 && args.scale.is_finite()) {
        return Err(CliError::Input("scale must be positive".into()));
    }
    let inst = build_lb_instance(args.n, args.r)?;
    let mut out = String::new();
    let _ = writeln!(out, "predicted_cf2={}", predicted_cf2(args.n, args.r));
    for i in 0..args.trials {
        let init = match args.init {
            InitKind::Random => RatioInit::Random {
                seed: args.seed.wrapping_add(i as u64),
            },
            InitKind::Worst => RatioInit::WorstCase,
        };
        let series = ratio_experiment(&inst, init, args.iters, args.scale)?;
        let path = if args.trials == 1 {
            args.out.clone()
        } else {
            trial_path(&args.out, i)
        };
        write(&path, &series.to_csv())?;
        let late_max = series
            .rows
            .iter()
            .skip(5)
            .map(|r| r.ratio)
            .filter(|r| r.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let last = series.rows.last().map_or(f64::NAN, |r| r.ratio);
        let _ = writeln!(
            out,
            "trial={i} file={} max_ratio_after_5={late_max} last_ratio={last} left_box={}",
            path.display(),
            series.left_box
        );
    }
    Ok(Outcome::ok(out))
}

fn brute(path: &Path) -> Result<Outcome, CliError> {
    let p = load_problem(path)?;
    let (set, value) = p.brute_force_min()?;
    let fmax = p.brute_force_fmax()?;
    Ok(Outcome::ok(format!("minimizer={set}\nmin_value={}\nf_max={fmax}\n", value + 0.0)))
}

/// Tolerances used by `check`.
const MEMBERSHIP_TOL: f64 = 1e-9;
const VARIATIONAL_TOL: f64 = 1e-7;
const GENERIC_TOL: f64 = 1e-8;
const FW_TOL: f64 = 1e-6;
const FW_ITERS: usize = 100_000;

fn check(args: &CheckArgs) -> Result<Outcome, CliError> {
    let p = load_problem(&args.problem)?;
    let n = p.ground_size();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let cfg = ProjectionConfig::default();
    let mut out = String::new();
    let mut all_ok = true;
    for (r, c) in p.components().iter().enumerate() {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if c.support().len() > EXHAUSTIVE_PAIR_LIMIT {
            let _ = writeln!(out, "component={r} kind={} skipped=support_too_large", c.kind_name());
            continue;
        }
        let s = project_component(c, &z, &cfg).map_err(|e| CliError::Numeric(format!("component {r}: {e}")))?;
        let generic = project_generic(c, &z).map_err(|e| CliError::Numeric(format!("component {r}: {e}")))?;
        let fw = fw_project(c, &z, FW_ITERS)?;
        let base = check_in_base(c, &s, MEMBERSHIP_TOL)?;
        let vi = variational_check(c, &z, &s, args.trials).max(0.0);
        let linf = |a: &[f64]| s.iter().zip(a).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        let (dg, dfw) = (linf(&generic), linf(&fw.point));
        let ok = base.member && vi <= VARIATIONAL_TOL && dg <= GENERIC_TOL && dfw <= FW_TOL;
        all_ok &= ok;
        let _ = writeln!(
            out,
            "component={r} kind={} max_violation={} variational_residual={vi} generic_distance={dg} fw_distance={dfw} fw_gap={} fw_iterations={} result={}",
            c.kind_name(),
            base.violation,
            fw.gap,
            fw.iterations,
            if ok { "ok" } else { "FAIL" }
        );
    }
    Ok(Outcome {
        stdout: out,
        code: if all_ok { exit::CERTIFIED } else { exit::NUMERIC },
    })
}

fn generate(cmd: GenerateCommand) -> Result<Outcome, CliError> {
    match cmd {
        GenerateCommand::Lb { n, r, out, faces_out } => {
            let inst = build_lb_instance(n, r)?;
            write(&out, &problem_to_json(inst.problem())?)?;
            if let Some(path) = faces_out {
                write(&path, &face_spec_to_json(inst.face_spec()))?;
            }
            Ok(Outcome::ok(format!("wrote {}\n", out.display())))
        }
        GenerateCommand::Random {
            n,
            r,
            seed,
            max_support,
            out,
        } => {
            if n == 0 || r == 0 || max_support == 0 {
                return Err(CliError::Input("n, r and max-support must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, n, r, max_support);
            write(&out, &problem_to_json(&p)?)?;
            Ok(Outcome::ok(format!("wrote {}\n", out.display())))
        }
    }
}
