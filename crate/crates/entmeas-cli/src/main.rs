//! Command-line harness for the entanglement-measure library: single-state
//! summaries, JSON measure reports, PPT checks, the Smolin dual diagnostic,
//! and parallel CSV parameter scans.
//!
//! Every command takes a textual state spec, either inline
//! (`"ghz(n=3)"`) or as a path to a file holding one. Numeric parameters
//! accept `pi` literals such as `pi/4` or `0.5pi`. Global flags mirror
//! environment variables with the `ENTMEAS_` prefix.

mod scan;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entmeas::entropy::{canonical_entropy, purity};
use entmeas::measures::{
    physical_hierarchy, ppt_check, separability_measure, smolin_closed_form, HierarchyMode,
    HierarchyOptions,
};
use entmeas::states::{parse_number, StateSpec};
use entmeas::tensor::{min_eigenvalue, partial_trace, MultiState, SubsystemSet};
use entmeas::tolerances::{DEFAULT_ENTROPY_EPS, DEFAULT_MAX_TOTAL_DIM};
use entmeas::Error;

use scan::{run_scan, ScanContext, ScanSpec};

/// A failure message paired with the process exit code it maps to.
pub struct CliFailure {
    pub message: String,
    pub code: i32,
}

impl CliFailure {
    fn new(message: impl Into<String>) -> Self {
        CliFailure {
            message: message.into(),
            code: 1,
        }
    }
}

impl From<Error> for CliFailure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::PureStateRequired(_) => 2,
            _ => 1,
        };
        CliFailure {
            message: err.to_string(),
            code,
        }
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(err: std::io::Error) -> Self {
        CliFailure::new(err.to_string())
    }
}

impl From<csv::Error> for CliFailure {
    fn from(err: csv::Error) -> Self {
        CliFailure::new(err.to_string())
    }
}

impl From<serde_json::Error> for CliFailure {
    fn from(err: serde_json::Error) -> Self {
        CliFailure::new(err.to_string())
    }
}

type CliResult<T> = Result<T, CliFailure>;

#[derive(Parser)]
#[command(
    name = "entmeas",
    version,
    about = "Entanglement measures for multipartite qudit states"
)]
struct Cli {
    #[command(flatten)]
    globals: GlobalOptions,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOptions {
    /// Entropy tolerance below which a marginal counts as unentangled.
    #[arg(long, global = true, env = "ENTMEAS_EPS", default_value_t = DEFAULT_ENTROPY_EPS)]
    eps: f64,
    /// Physical-measure evaluation mode: bound, roof, or both.
    #[arg(long, global = true, env = "ENTMEAS_MODE", default_value = "bound",
          value_parser = parse_mode)]
    mode: HierarchyMode,
    /// Base seed for the convex-roof optimizer restarts.
    #[arg(long, global = true, env = "ENTMEAS_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for scans; 0 uses every available core.
    #[arg(long, global = true, env = "ENTMEAS_THREADS", default_value_t = 0)]
    threads: usize,
    /// Cap on the total Hilbert-space dimension of any evaluated state.
    #[arg(long = "max-dim", global = true, env = "ENTMEAS_MAX_DIM",
          default_value_t = DEFAULT_MAX_TOTAL_DIM)]
    max_dim: usize,
}

fn parse_mode(text: &str) -> Result<HierarchyMode, String> {
    HierarchyMode::from_str(text).map_err(|err| err.to_string())
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MeasureWhich {
    /// Separability-measure hierarchy (pure states only).
    Sep,
    /// Physical-measure hierarchy (any state).
    Phys,
}

#[derive(Subcommand)]
enum Command {
    /// Print a summary of a state: shape, purity, trace, spectrum floor,
    /// and every single-factor marginal entropy.
    State {
        /// Inline spec such as "ghz(n=3)", or a path to a file holding one.
        spec: String,
    },
    /// Evaluate a measure hierarchy and emit its JSON report.
    Measure {
        /// Which hierarchy to evaluate.
        which: MeasureWhich,
        /// Inline spec or spec-file path.
        spec: String,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sweep family parameters over a grid and emit one CSV row per point.
    Scan {
        /// State family to sweep, e.g. ghz_epr_mix or line2.
        family: String,
        /// Scan tokens: `param=lo..hi[:step]` sweeps, `step=x` default step,
        /// `param=value` fixed parameters, and quantity names (entropy,
        /// bound, sep-measure, phys-measure, ppt).
        #[arg(required = true)]
        args: Vec<String>,
        /// Write the CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Output format; only csv is supported.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Check the partial-transpose criterion for a bipartition.
    Ppt {
        /// Inline spec or spec-file path.
        spec: String,
        /// Comma-separated 1-based factors to transpose; defaults to the
        /// last factor.
        #[arg(long)]
        part: Option<String>,
    },
    /// Evaluate the Smolin-family dual diagnostic: the sign test and the
    /// numeric bound side by side.
    Smolin {
        /// Even number of qubit factors.
        factors: usize,
        /// Comma-separated coefficients cx,cy,cz; pi literals accepted.
        coeffs: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.globals.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.globals.threads)
            .build_global()
            .map_err(|err| CliFailure::new(err.to_string()))?;
    }
    match cli.command {
        Command::State { spec } => cmd_state(&spec),
        Command::Measure {
            which,
            spec,
            output,
        } => cmd_measure(&cli.globals, which, &spec, output.as_deref()),
        Command::Scan {
            family,
            args,
            output,
            format,
        } => cmd_scan(&cli.globals, &family, &args, output.as_deref(), &format),
        Command::Ppt { spec, part } => cmd_ppt(&spec, part.as_deref()),
        Command::Smolin { factors, coeffs } => cmd_smolin(factors, &coeffs),
    }
}

/// Reads the spec text from a file when the argument names one, otherwise
/// treats the argument as an inline spec.
fn load_spec(argument: &str) -> CliResult<(String, StateSpec)> {
    let text = if Path::new(argument).is_file() {
        fs::read_to_string(argument)?.trim().to_string()
    } else {
        argument.trim().to_string()
    };
    let spec = StateSpec::parse(&text)?;
    Ok((text, spec))
}

fn build_state(argument: &str) -> CliResult<(String, MultiState)> {
    let (text, spec) = load_spec(argument)?;
    Ok((text, spec.build()?))
}

fn hierarchy_options(globals: &GlobalOptions) -> HierarchyOptions {
    let mut options = HierarchyOptions::default();
    options.roof.seed = globals.seed;
    options.max_total_dim = globals.max_dim;
    options
}

fn emit(output: Option<&Path>, content: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_state(spec_argument: &str) -> CliResult<()> {
    let (text, state) = build_state(spec_argument)?;
    let shape = state.shape();
    let dims: Vec<String> = shape.dims().iter().map(|d| d.to_string()).collect();
    let dense = state.density_matrix();
    println!("spec: {text}");
    println!("shape: {}", dims.join("x"));
    println!("pure: {}", if state.is_pure() { "yes" } else { "no" });
    println!("trace: {:.12}", dense.trace().re);
    println!("purity: {:.12}", purity(&state));
    println!("min eigenvalue: {:.12}", min_eigenvalue(&dense)?);
    for factor in 1..=shape.factor_count() {
        let reduced = partial_trace(&state, &SubsystemSet::singleton(factor)?)?;
        println!("S({factor}): {:.12}", canonical_entropy(&reduced));
    }
    Ok(())
}

fn cmd_measure(
    globals: &GlobalOptions,
    which: MeasureWhich,
    spec_argument: &str,
    output: Option<&Path>,
) -> CliResult<()> {
    let (_, state) = build_state(spec_argument)?;
    let report = match which {
        MeasureWhich::Sep => separability_measure(&state, globals.eps)?,
        MeasureWhich::Phys => {
            physical_hierarchy(&state, globals.mode, &hierarchy_options(globals))?
        }
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(output, &json)
}

fn cmd_scan(
    globals: &GlobalOptions,
    family: &str,
    args: &[String],
    output: Option<&Path>,
    format: &str,
) -> CliResult<()> {
    if format != "csv" {
        return Err(CliFailure::new(format!(
            "unsupported output format `{format}`; only csv is available"
        )));
    }
    let spec = ScanSpec::parse(family, args)?;
    let context = ScanContext {
        eps: globals.eps,
        mode: globals.mode,
        seed: globals.seed,
        max_dim: globals.max_dim,
    };
    let bytes = run_scan(&spec, &context)?;
    let text = String::from_utf8(bytes)
        .map_err(|err| CliFailure::new(format!("CSV output was not UTF-8: {err}")))?;
    emit(output, &text)
}

fn cmd_ppt(spec_argument: &str, part: Option<&str>) -> CliResult<()> {
    let (_, state) = build_state(spec_argument)?;
    let part_set = match part {
        Some(text) => {
            let indices = text
                .split(',')
                .map(|token| {
                    token.trim().parse::<usize>().map_err(|_| {
                        CliFailure::new(format!(
                            "cannot parse factor index `{}` in --part",
                            token.trim()
                        ))
                    })
                })
                .collect::<CliResult<Vec<usize>>>()?;
            SubsystemSet::new(indices)?
        }
        None => SubsystemSet::singleton(state.shape().factor_count())?,
    };
    let report = ppt_check(&state, &part_set)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(None, &json)
}

fn cmd_smolin(factors: usize, coeffs: &str) -> CliResult<()> {
    let parts = coeffs
        .split(',')
        .map(parse_number)
        .collect::<entmeas::Result<Vec<f64>>>()?;
    if parts.len() != 3 {
        return Err(CliFailure::new(format!(
            "expected three comma-separated coefficients cx,cy,cz, got {}",
            parts.len()
        )));
    }
    let report = smolin_closed_form(factors, [parts[0], parts[1], parts[2]])?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(None, &json)
}
