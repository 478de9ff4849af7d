//! `kcbs` — command-line front end for the sequential-measurement toolkit:
//! ideal predictions, noisy simulation, log analysis, the incompatibility
//! score game and the certification bounds.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kcbs_core::protocol::{
    analyze_log, run_incompatibility_game, CorrelationReport, DirectionReport, ExperimentConfig,
    ProtocolError, TrialLog,
};
use kcbs_core::qutrit::{
    build_kcbs_frame, dispersive_shifts, ideal_statistics, DensityMatrix, DispersiveShiftSet,
    IdealReport,
};
use kcbs_core::stats::{
    bentkus_deviation_bound, beta_win, epsilon_upper_bound, pvalue_bound, HypothesisInputs,
    StatsError,
};

#[derive(Parser)]
#[command(
    name = "kcbs",
    version,
    about = "Simulation and statistical certification of a state-dependent qutrit contextuality test"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ideal frame, per-context correlators and inequality sum.
    Ideal(IdealArgs),
    /// Run the sequential-measurement simulation and write a trial log.
    Simulate(SimulateArgs),
    /// Analyze a trial log: correlators, incompatibilities, verdict.
    Analyze(AnalyzeArgs),
    /// Run the incompatibility score game and certify an epsilon bound.
    Game(GameArgs),
    /// Hypothesis-test P-value bound from trial counts and epsilon.
    Pvalue(PvalueArgs),
    /// Two-sided concentration bound for bounded i.i.d. scores.
    Bentkus(BentkusArgs),
    /// State-dependent cavity frequency shifts of a three-level circuit.
    Shifts(ShiftsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum IdealState {
    /// Symmetry-axis state (maximal violation).
    #[default]
    Axis,
    /// Maximally mixed state I/3.
    Mixed,
}

#[derive(Args)]
struct IdealArgs {
    /// State the predictions are evaluated on.
    #[arg(long, value_enum, default_value_t = IdealState::Axis)]
    state: IdealState,
    /// Emit machine-readable JSON instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum LogFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (TOML). Omit to use the built-in noiseless preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in calibrated-noise preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    calibrated: bool,
    /// Trial-log output path.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = LogFormat::Csv)]
    format: LogFormat,
    /// Override the number of accepted trials from the config.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Output is identical regardless.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trial-log path (CSV or binary; detected from the file header).
    log: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GameArgs {
    /// Experiment config (TOML). Omit to use the built-in noiseless preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in calibrated-noise preset instead of a config file.
    #[arg(long, conflicts_with = "config")]
    calibrated: bool,
    /// Override the number of game trials from the config.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence margin t added to |G_avg| for the certified bound.
    #[arg(long, default_value_t = 0.005)]
    t: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PvalueArgs {
    /// Number of hypothesis-test trials.
    #[arg(long)]
    n: u64,
    /// Number of won trials (unequal outcome pairs).
    #[arg(long)]
    c: u64,
    /// Certified incompatibility bound (probability scale).
    #[arg(long, conflicts_with_all = ["g_avg"], required_unless_present = "g_avg")]
    epsilon: Option<f64>,
    /// Observed average game score; epsilon is then |g_avg| + t.
    #[arg(long)]
    g_avg: Option<f64>,
    /// Confidence margin t for the g_avg route.
    #[arg(long, default_value_t = 0.005)]
    t: f64,
    /// Number of game trials behind g_avg (defaults to --n).
    #[arg(long)]
    game_n: Option<u64>,
    /// Score range bound [-a, a] for the g_avg route.
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BentkusArgs {
    /// Number of i.i.d. scores.
    #[arg(long)]
    n: u64,
    /// Deviation from the mean.
    #[arg(long)]
    t: f64,
    /// Scores are bounded in [-a, a].
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ShiftsArgs {
    /// Coupling strength g (MHz).
    #[arg(long)]
    g: f64,
    /// Cavity frequency (MHz).
    #[arg(long)]
    nu_cavity: f64,
    /// 0-1 transition frequency (MHz).
    #[arg(long)]
    nu01: f64,
    /// 1-2 transition frequency (MHz).
    #[arg(long)]
    nu12: f64,
    /// 2-3 transition frequency (MHz).
    #[arg(long)]
    nu23: f64,
    #[arg(long)]
    json: bool,
}

/// Errors mapped onto the documented exit codes: 3 for input files,
/// 4 for numerical-domain failures.
enum CliError {
    Input(String),
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 3,
            CliError::Domain(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Domain(m) => write!(f, "{m}"),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Io { .. }
            | ProtocolError::Config(_)
            | ProtocolError::MalformedRow { .. }
            | ProtocolError::MissingContext(..)
            | ProtocolError::EmptyLog => CliError::Input(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ideal(args) => cmd_ideal(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Game(args) => cmd_game(&args),
        Command::Pvalue(args) => cmd_pvalue(&args),
        Command::Bentkus(args) => cmd_bentkus(&args),
        Command::Shifts(args) => cmd_shifts(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Domain(format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct IdealOutput {
    state: &'static str,
    vectors: Vec<[f64; 3]>,
    #[serde(flatten)]
    report: IdealReport,
}

fn cmd_ideal(args: &IdealArgs) -> Result<(), CliError> {
    let frame = build_kcbs_frame();
    let state = match args.state {
        IdealState::Axis => DensityMatrix::ground(),
        IdealState::Mixed => DensityMatrix::maximally_mixed(),
    };
    let report = ideal_statistics(&frame, &state);
    let vectors: Vec<[f64; 3]> = (1..=5)
        .map(|i| {
            let v = frame.vector(i).expect("index in range");
            [v[0].re, v[1].re, v[2].re]
        })
        .collect();
    let out = IdealOutput {
        state: match args.state {
            IdealState::Axis => "axis",
            IdealState::Mixed => "mixed",
        },
        vectors,
        report,
    };
    if args.json {
        return print_json(&out);
    }
    println!("Ideal predictions ({} state)", out.state);
    println!("\n  frame vectors |l_i> (real components):");
    for (i, v) in out.vectors.iter().enumerate() {
        println!("    l_{}: [{:+.6}, {:+.6}, {:+.6}]", i + 1, v[0], v[1], v[2]);
    }
    println!("\n  {:<10} {:>12} {:>16}", "context", "<A_i>", "<A_i A_j>");
    for i in 0..5 {
        let j = (i + 1) % 5;
        println!(
            "  ({}, {})     {:>12.6} {:>16.6}",
            i + 1,
            j + 1,
            out.report.expectations[i],
            out.report.correlators[i]
        );
    }
    println!("\n  inequality sum : {:+.6}", out.report.sum);
    println!("  win probability: {:.6}", out.report.win_probability);
    Ok(())
}

fn load_config(
    path: &Option<PathBuf>,
    calibrated: bool,
    trials: Option<u64>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None if calibrated => ExperimentConfig::calibrated(1_000_000, 0),
        None => ExperimentConfig::noiseless(1_000_000, 0),
    };
    if let Some(n) = trials {
        config.trials = n;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn with_thread_pool<T: Send>(
    threads: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Domain(format!("thread pool: {e}")))?
        .install(f)
}

#[derive(Serialize)]
struct SimulateSummary {
    output: String,
    accepted_trials: u64,
    rejected_attempts: u64,
    rejection_fraction: f64,
    win_fraction: f64,
    forward_sum: f64,
    forward_sum_se: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(&args.config, args.calibrated, args.trials, args.seed)?;
    let log = with_thread_pool(args.threads, || {
        let sim = kcbs_core::protocol::Simulator::new(config.clone())?;
        Ok(sim.run_experiment()?)
    })?;
    let file = File::create(&args.output)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.output.display())))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| CliError::Input(format!("{}: {e}", args.output.display()));
    match args.format {
        LogFormat::Csv => log.write_csv(&mut w).map_err(io_err)?,
        LogFormat::Binary => log.write_binary(&mut w).map_err(io_err)?,
    }
    let report = analyze_log(&log)?;
    let summary = SimulateSummary {
        output: args.output.display().to_string(),
        accepted_trials: report.accepted_trials,
        rejected_attempts: report.rejected_attempts,
        rejection_fraction: report.rejection_fraction,
        win_fraction: report.win_fraction,
        forward_sum: report.forward.correlation_sum,
        forward_sum_se: report.forward.correlation_sum_se,
    };
    if args.json {
        return print_json(&summary);
    }
    println!("wrote {}", summary.output);
    println!("  accepted trials   : {}", summary.accepted_trials);
    println!(
        "  rejected attempts : {} (rejection rate {:.1}%)",
        summary.rejected_attempts,
        100.0 * summary.rejection_fraction
    );
    println!("  win fraction      : {:.6}", summary.win_fraction);
    println!(
        "  forward sum       : {:+.4} +/- {:.4}",
        summary.forward_sum, summary.forward_sum_se
    );
    Ok(())
}

fn read_log(path: &Path) -> Result<TrialLog, CliError> {
    let file =
        File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut head = [0u8; 8];
    reader
        .read_exact(&mut head)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let binary = &head == b"KCBSLG01";
    let log = if binary {
        TrialLog::read_binary(head.chain(reader))
    } else {
        TrialLog::read_csv(head.chain(reader))
    };
    log.map_err(|e| CliError::from(e))
}

fn print_direction(title: &str, d: &DirectionReport) {
    println!("\n{title}");
    println!(
        "  {:<10} {:>8} {:>12} {:>10} {:>12}",
        "context", "n", "<A_i A_j>", "se", "epsilon"
    );
    for row in &d.contexts {
        let eps = row
            .epsilon
            .map(|e| format!("{:>12.4}", e.value))
            .unwrap_or_else(|| format!("{:>12}", "-"));
        println!(
            "  ({}, {})     {:>8} {:>12.4} {:>10.4} {eps}",
            row.first, row.second, row.stats.count, row.stats.correlation, row.stats.correlation_se
        );
    }
    println!(
        "  sum = {:+.4} +/- {:.4}",
        d.correlation_sum, d.correlation_sum_se
    );
    if let (Some(eps), Some(thr), Some(sig), Some(v)) =
        (&d.epsilon_sum, d.threshold, d.violation_sigmas, d.violated)
    {
        println!("  sum(epsilon) = {:.4} +/- {:.4}", eps.value, eps.se);
        println!("  bound -3 - sum(epsilon) = {thr:+.4}");
        println!(
            "  verdict: {} ({:.1} standard errors)",
            if v { "VIOLATED" } else { "not violated" },
            sig
        );
    } else {
        println!("  (no reversed-order data; epsilon columns unavailable)");
    }
}

fn print_analysis(report: &CorrelationReport) {
    println!(
        "accepted trials {} | rejected attempts {} ({:.1}%) | win fraction {:.6}",
        report.accepted_trials,
        report.rejected_attempts,
        100.0 * report.rejection_fraction,
        report.win_fraction
    );
    print_direction("forward contexts", &report.forward);
    if let Some(rev) = &report.reverse {
        print_direction("reversed contexts", rev);
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let log = read_log(&args.log)?;
    let report = analyze_log(&log)?;
    if args.json {
        return print_json(&report);
    }
    print_analysis(&report);
    Ok(())
}

#[derive(Serialize)]
struct GameOutput {
    trials: u64,
    g_avg: f64,
    g_avg_abs: f64,
    margin_t: f64,
    epsilon_bound: f64,
    confidence_failure_log10: f64,
    confidence_failure: String,
}

fn cmd_game(args: &GameArgs) -> Result<(), CliError> {
    let config = load_config(&args.config, args.calibrated, args.trials, args.seed)?;
    let log = with_thread_pool(args.threads, || Ok(run_incompatibility_game(&config)?))?;
    let estimate = epsilon_upper_bound(log.g_avg, args.t, config.trials, 2.0)?;
    let out = GameOutput {
        trials: config.trials,
        g_avg: log.g_avg,
        g_avg_abs: estimate.g_avg_abs,
        margin_t: estimate.margin_t,
        epsilon_bound: estimate.epsilon_bound,
        confidence_failure_log10: estimate.confidence_failure.log10(),
        confidence_failure: estimate.confidence_failure.scientific(),
    };
    if args.json {
        return print_json(&out);
    }
    println!("game trials        : {}", out.trials);
    println!("average score G_avg: {:+.6}", out.g_avg);
    println!(
        "epsilon bound      : |G_avg| + t = {:.6} + {:.6} = {:.6}",
        out.g_avg_abs, out.margin_t, out.epsilon_bound
    );
    println!(
        "failure probability: {} (log10 = {:.2})",
        out.confidence_failure, out.confidence_failure_log10
    );
    Ok(())
}

/// Certification report; `bentkus_prob` and `confidence_t` are null when
/// epsilon was supplied directly.
#[derive(Serialize)]
struct PvalueOutput {
    n: u64,
    c: u64,
    epsilon_bound: f64,
    beta_win: f64,
    p_value_log10: f64,
    p_value: String,
    bentkus_prob: Option<f64>,
    confidence_t: Option<f64>,
}

fn cmd_pvalue(args: &PvalueArgs) -> Result<(), CliError> {
    let (epsilon, bentkus_prob, confidence_t) = match (args.epsilon, args.g_avg) {
        (Some(e), _) => (e, None, None),
        (None, Some(g)) => {
            let est = epsilon_upper_bound(g, args.t, args.game_n.unwrap_or(args.n), args.a)?;
            (
                est.epsilon_bound,
                Some(est.confidence_failure.to_f64()),
                Some(args.t),
            )
        }
        (None, None) => unreachable!("clap enforces one of --epsilon/--g-avg"),
    };
    let inputs = HypothesisInputs::new(args.n, args.c, epsilon)?;
    let p = pvalue_bound(&inputs)?;
    let out = PvalueOutput {
        n: args.n,
        c: args.c,
        epsilon_bound: epsilon,
        beta_win: beta_win(epsilon)?,
        p_value_log10: p.log10(),
        p_value: p.scientific(),
        bentkus_prob,
        confidence_t,
    };
    if args.json {
        return print_json(&out);
    }
    println!("n = {}, c = {}, epsilon = {:.6}", out.n, out.c, out.epsilon_bound);
    println!("beta_win = {:.6}", out.beta_win);
    println!("P-value bound: {} (log10 = {:.4})", out.p_value, out.p_value_log10);
    if let (Some(b), Some(t)) = (out.bentkus_prob, out.confidence_t) {
        println!("epsilon confidence: fails with probability <= {b:.3e} (t = {t})");
    }
    Ok(())
}

#[derive(Serialize)]
struct BentkusOutput {
    n: u64,
    t: f64,
    a: f64,
    bound: f64,
    bound_log10: f64,
}

fn cmd_bentkus(args: &BentkusArgs) -> Result<(), CliError> {
    let bound = bentkus_deviation_bound(args.n, args.t, args.a)?;
    let out = BentkusOutput {
        n: args.n,
        t: args.t,
        a: args.a,
        bound: bound.to_f64(),
        bound_log10: bound.log10(),
    };
    if args.json {
        return print_json(&out);
    }
    println!(
        "Pr(|mean - E| >= {}) <= {} for n = {} scores in [-{}, {}]",
        out.t,
        bound.scientific(),
        out.n,
        out.a,
        out.a
    );
    Ok(())
}

#[derive(Serialize)]
struct ShiftsOutput {
    #[serde(flatten)]
    set: DispersiveShiftSet,
    degeneracy_mismatch: f64,
    near_degenerate: bool,
}

fn cmd_shifts(args: &ShiftsArgs) -> Result<(), CliError> {
    let set = dispersive_shifts(args.g, args.nu_cavity, args.nu01, args.nu12, args.nu23)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let mismatch = set.degeneracy_mismatch();
    let out = ShiftsOutput {
        set,
        degeneracy_mismatch: mismatch,
        near_degenerate: mismatch < 0.05,
    };
    if args.json {
        return print_json(&out);
    }
    println!("state-dependent cavity shifts (MHz):");
    for (j, (chi, s)) in out.set.chi.iter().zip(out.set.shifts.iter()).enumerate() {
        println!("  level {j}: chi = {chi:+.6}, shift s_{j} = {s:+.6}");
    }
    println!(
        "  |s_1 - s_2| relative mismatch: {:.4}{}",
        out.degeneracy_mismatch,
        if out.near_degenerate {
            "  (near-degenerate: binary-outcome readout regime)"
        } else {
            ""
        }
    );
    Ok(())
}
