//! `trigokit` command line.
//!
//! Exit codes: 0 success, 1 model-level failure, 2 usage, 3 generator
//! precondition, 4 file format or i/o.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trigokit::field::NormalChoice;

#[derive(Debug, Parser)]
#[command(name = "trigokit", version, about = "Stress-free cubic-to-trigonal strain fields on a periodic grid")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the four wells and the twin table.
    Wells {
        /// Diagonal parameters d1,d2,d3.
        #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
        d: [f64; 3],
    },
    /// Map the orthorhombic wells to trigonal coordinates.
    MapOrtho {
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
    },
    /// Generate a strain field and write it to disk.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Check compatibility and well inclusion of a strain file.
    Verify {
        path: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Largest accepted relative residual.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Classify a strain file.
    Classify {
        path: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Reconstruct the displacement of a compatible strain file.
    Reconstruct {
        path: PathBuf,
        /// Displacement output (`.dfield`).
        #[arg(long)]
        out: PathBuf,
        /// Largest accepted relative residual.
        #[arg(long, default_value_t = trigokit::compat::DEFAULT_RECONSTRUCT_TOL)]
        tol: f64,
    },
    /// Write one component on a coordinate slice as CSV.
    Export {
        path: PathBuf,
        /// Component name, e.g. e12.
        #[arg(long)]
        component: String,
        /// Slice as `x<axis>=<index>`, e.g. x2=0.
        #[arg(long)]
        slice: String,
        /// CSV output; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Well parameters d1,d2,d3; read off the field when absent.
    #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
    pub d: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Cells per axis.
    #[arg(long, value_parser = triple::<usize>, default_value = "16,16,16")]
    pub dims: [usize; 3],
    /// Side lengths of the periodic box.
    #[arg(long, value_parser = triple::<f64>, default_value = "1,1,1")]
    pub lengths: [f64; 3],
    /// Well parameters d1,d2,d3.
    #[arg(long, value_parser = triple::<f64>, default_value = "0,0,0", allow_hyphen_values = true)]
    pub d: [f64; 3],
    /// Strain output (`.sfield`).
    #[arg(long, default_value = "field.sfield")]
    pub out: PathBuf,
    /// Also write the generating displacement (`.dfield`).
    #[arg(long)]
    pub disp: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// A single well everywhere.
    Constant {
        #[command(flatten)]
        grid: GridArgs,
        /// Well index 1..4.
        #[arg(long, default_value_t = 1)]
        well: usize,
    },
    /// Two wells alternating across layers.
    Laminate {
        #[command(flatten)]
        grid: GridArgs,
        /// Well pair i,j.
        #[arg(long, value_parser = pair)]
        pair: (usize, usize),
        #[arg(long, value_enum, default_value_t = NormalArg::Axis)]
        normal: NormalArg,
        /// Layer profile over {+,-}; `+` selects the first well. Defaults to two halves.
        #[arg(long, allow_hyphen_values = true)]
        profile: Option<String>,
    },
    /// Crossing twin `e_AB = f`, `e_jB = g`, `e_jA = f g`.
    Crossing {
        #[command(flatten)]
        grid: GridArgs,
        /// Profile f over {+,-}, along --f-axis. Defaults to two halves.
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        /// Profile g over {+,-}, along --g-axis. Defaults to two halves.
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
        /// Invariant axis.
        #[arg(long, default_value_t = 2)]
        axis: usize,
        #[arg(long, default_value_t = 3)]
        f_axis: usize,
        #[arg(long, default_value_t = 1)]
        g_axis: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalArg {
    Axis,
    Diagonal,
}

impl From<NormalArg> for NormalChoice {
    fn from(n: NormalArg) -> Self {
        match n {
            NormalArg::Axis => NormalChoice::Axis,
            NormalArg::Diagonal => NormalChoice::Diagonal,
        }
    }
}

fn triple<T: FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got {}", parts.len()));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| format!("cannot parse {p:?}"))?);
    }
    out.try_into().map_err(|_| unreachable!())
}

fn pair(s: &str) -> Result<(usize, usize), String> {
    match s.split(',').map(|p| p.trim().parse::<usize>()).collect::<Vec<_>>()[..] {
        [Ok(a), Ok(b)] => Ok((a, b)),
        _ => Err(format!("expected two well indices like 1,3, got {s:?}")),
    }
}

fn configure_threads() -> Result<(), commands::CliError> {
    let Ok(value) = std::env::var("TRIGOKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| commands::CliError::usage(format!("TRIGOKIT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| commands::CliError::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<commands::Outcome, commands::CliError> {
    configure_threads()?;
    match cli.command {
        Command::Wells { d } => commands::wells(d),
        Command::MapOrtho { delta } => commands::map_ortho(delta),
        Command::Gen { kind } => commands::gen(kind),
        Command::Verify { path, params, tol } => commands::verify(&path, params.d, tol),
        Command::Classify { path, params } => commands::classify(&path, params.d),
        Command::Reconstruct { path, out, tol } => commands::reconstruct(&path, &out, tol),
        Command::Export { path, component, slice, out } => commands::export(&path, &component, &slice, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(outcome) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&outcome.report).expect("json")),
                Format::Text => print!("{}", outcome.text),
            }
            ExitCode::from(outcome.code)
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
