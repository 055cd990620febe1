//! `safe`: synergy-area safety screening from the command line.
//!
//! Exit status: 0 on success (whether or not anything is flagged), 2 for
//! usage or validation errors, 3 for I/O errors.
//!
//! When `--out` is omitted, output goes to `$SAFE_OUTPUT_DIR/<default name>`
//! if that variable is set, and to stdout otherwise.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use safe_core::data_io::{
    dataset_to_groups, emit_comparison, emit_plot_table, emit_report, parse_dataset, Delimiter, ReportFormat,
};
use safe_core::engine::{
    compare_methods, safe_analyze, safe_analyze_adaptive, CrossSaMethod, SafeConfig, SmallSaPolicy,
};
use safe_core::sim::{
    format_scenario, parse_scenarios, render_reports_table, run_scenario, table1_grid, table2_grid, Scenario,
    DEFAULT_ITERATIONS, DEFAULT_SEED,
};
use safe_core::stats::Sidedness;
use safe_core::SafeError;

const OUTPUT_DIR_ENV: &str = "SAFE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "safe", version, about = "Two-layer synergy-area screening of adverse-event data with FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Screen an AE incidence table and write the per-SA / per-AE report.
    Analyze(AnalyzeArgs),
    /// Run Monte Carlo error-rate scenarios.
    Simulate(SimulateArgs),
    /// Compare the screening pipeline with direct Holm and direct BH.
    Compare(CompareArgs),
    /// Print the built-in scenario grids in scenario-file format.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Bh,
    By,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SidedArg {
    Two,
    Greater,
    Less,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SmallSaArg {
    PvalueOne,
    Error,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DelimiterArg {
    Comma,
    Tab,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Structured,
}

impl From<SidedArg> for Sidedness {
    fn from(s: SidedArg) -> Self {
        match s {
            SidedArg::Two => Sidedness::TwoSided,
            SidedArg::Greater => Sidedness::Greater,
            SidedArg::Less => Sidedness::Less,
        }
    }
}

impl From<DelimiterArg> for Delimiter {
    fn from(d: DelimiterArg) -> Self {
        match d {
            DelimiterArg::Comma => Delimiter::Comma,
            DelimiterArg::Tab => Delimiter::Tab,
        }
    }
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Structured => ReportFormat::Structured,
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// AE incidence table with columns sa, ae, events_1, subjects_1, events_2, subjects_2.
    input: PathBuf,
    /// Field delimiter of the input table.
    #[arg(long, value_enum, default_value = "comma")]
    delimiter: DelimiterArg,
    /// Direction of the two-proportion test (arm 1 vs arm 2).
    #[arg(long, value_enum, default_value = "two")]
    sided: SidedArg,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Synergy count: AE findings required to flag an SA.
    #[arg(long, default_value_t = 2)]
    l: usize,
    /// Use l = max(2, round(0.2 * n_AE)) per SA instead of a global --l.
    #[arg(long)]
    adaptive_l: bool,
    /// Nominal FDR level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Cross-SA q-value procedure.
    #[arg(long, value_enum, default_value = "bh")]
    method: MethodArg,
    /// Handling of SAs with fewer than l AE variables.
    #[arg(long, value_enum, default_value = "pvalue-one")]
    small_sa: SmallSaArg,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional tab-separated plot table (sa, log10_p1, log10_p2, q_value, flagged).
    #[arg(long)]
    plot_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["scenario", "table1", "table2"])))]
struct SimulateArgs {
    /// Scenario file in `key = value` format.
    scenario: Option<PathBuf>,
    /// Run the built-in 28-scenario grid with m = 5.
    #[arg(long)]
    table1: bool,
    /// Run the built-in 28-scenario grid with m = 10.
    #[arg(long)]
    table2: bool,
    /// Iterations per scenario [default: 100000, or the scenario file's value].
    #[arg(long)]
    iterations: Option<u64>,
    /// Master seed [default: 20240601, or the scenario file's value].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "structured")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Nominal level shared by all three methods.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Only the m = 5 grid.
    #[arg(long, conflicts_with = "table2")]
    table1: bool,
    /// Only the m = 10 grid.
    #[arg(long)]
    table2: bool,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<SafeError> for CliError {
    fn from(e: SafeError) -> Self {
        match e {
            SafeError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn read_input(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, default_name: &str, text: &str) -> Result<(), CliError> {
    let target = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUTPUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(default_name)),
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_groups(input: &InputArgs) -> Result<Vec<safe_core::engine::SaGroup>, CliError> {
    let ds = parse_dataset(read_input(&input.input)?, input.delimiter.into()).map_err(|e| match e {
        SafeError::Io(io) => CliError::Io(format!("cannot read {}: {io}", input.input.display())),
        other => CliError::Usage(format!("{}: {other}", input.input.display())),
    })?;
    Ok(dataset_to_groups(&ds, input.sided.into())?)
}

fn report_name(format: FormatArg, stem: &str) -> String {
    match format {
        FormatArg::Table => format!("{stem}.txt"),
        FormatArg::Structured => format!("{stem}.jsonl"),
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let groups = load_groups(&args.input)?;
    let config = SafeConfig {
        l: args.l,
        alpha: args.alpha,
        cross_sa_method: match args.method {
            MethodArg::Bh => CrossSaMethod::Bh,
            MethodArg::By => CrossSaMethod::By,
        },
        small_sa_policy: match args.small_sa {
            SmallSaArg::PvalueOne => SmallSaPolicy::PvalueOne,
            SmallSaArg::Error => SmallSaPolicy::Error,
        },
        ..SafeConfig::default()
    };
    let result =
        if args.adaptive_l { safe_analyze_adaptive(&groups, &config)? } else { safe_analyze(&groups, &config)? };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    write_output(
        args.out.as_deref(),
        &report_name(args.format, "safe_report"),
        &emit_report(&result, args.format.into()),
    )?;
    if let Some(path) = &args.plot_out {
        write_output(Some(path), "", &emit_plot_table(&result).to_tsv())?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut scenarios: Vec<Scenario> = Vec::new();
    if let Some(path) = &args.scenario {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        scenarios = parse_scenarios(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    let iterations = args.iterations.unwrap_or(DEFAULT_ITERATIONS);
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    if args.table1 {
        scenarios.extend(table1_grid(iterations, seed));
    }
    if args.table2 {
        scenarios.extend(table2_grid(iterations, seed));
    }
    for s in &mut scenarios {
        if let Some(n) = args.iterations {
            s.iterations = n;
        }
        if let Some(seed) = args.seed {
            s.seed = seed;
        }
        s.validate()?;
    }

    let run = || -> Result<Vec<_>, SafeError> { scenarios.iter().map(run_scenario).collect() };
    let reports = match args.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let text = match args.format {
        FormatArg::Structured => {
            reports.iter().map(|r| serde_json::to_string(r).expect("reports serialize") + "\n").collect()
        }
        FormatArg::Table => render_reports_table(&reports),
    };
    write_output(args.out.as_deref(), &report_name(args.format, "simulation"), &text)
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let groups = load_groups(&args.input)?;
    let cmp = compare_methods(&groups, args.alpha)?;
    write_output(
        args.out.as_deref(),
        &report_name(args.format, "comparison"),
        &emit_comparison(&cmp, args.format.into()),
    )
}

fn cmd_grid(args: &GridArgs) -> Result<(), CliError> {
    let mut grid = Vec::new();
    if !args.table2 {
        grid.extend(table1_grid(args.iterations, args.seed));
    }
    if !args.table1 {
        grid.extend(table2_grid(args.iterations, args.seed));
    }
    let text = grid.iter().map(format_scenario).collect::<Vec<_>>().join("---\n");
    write_output(args.out.as_deref(), "grid.txt", &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Grid(a) => cmd_grid(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            match e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Io(msg) => eprintln!("I/O error: {msg}"),
            }
            ExitCode::from(code)
        }
    }
}
