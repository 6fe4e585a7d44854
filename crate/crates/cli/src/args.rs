use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freeclt_core::pipeline::{GridSpec, Method, Path};

#[derive(Debug, Parser)]
#[command(name = "freeclt", version, about = "Densities and convergence diagnostics for free central limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the density of mu_n on a grid as CSV.
    Density(DensityArgs),
    /// Densities for a ladder of n plus the convergence report.
    Sweep(SweepArgs),
    /// Convergence report only.
    Functionals(FunctionalsArgs),
    /// Largest interior discrepancy between the two routes, per n.
    Compare(CompareArgs),
    /// Run the invariant suite and print one line per property.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Biane,
    Subordination,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Biane => Method::Biane,
            MethodArg::Subordination => Method::Subordination,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Biane,
    Subordination,
}

impl From<PathArg> for Path {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Biane => Path::Biane,
            PathArg::Subordination => Path::Subordination,
        }
    }
}

/// Options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Measure spec (JSON).
    #[arg(long, value_name = "PATH")]
    pub measure: PathBuf,

    /// Full pipeline configuration (JSON); flags below override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Evaluation grid as `lo,hi,points`.
    #[arg(long, value_name = "LO,HI,POINTS", value_parser = parse_grid)]
    pub grid: Option<GridSpec>,

    /// Tolerance override, e.g. `--tol mass=1e-7`. Repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub tol: Vec<(String, f64)>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub n: usize,

    #[arg(long, value_enum, default_value = "biane")]
    pub method: PathArg,

    /// Output CSV; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    #[arg(long = "p", value_delimiter = ',', default_value = "0.6,1,2")]
    pub p: Vec<f64>,

    /// Route used for the report; `both` also writes the second route's CSVs.
    #[arg(long, value_enum, default_value = "biane")]
    pub method: MethodArg,

    /// Report JSON.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    /// Directory for the per-n CSVs; defaults to the report's directory.
    #[arg(long, value_name = "DIR")]
    pub density_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FunctionalsArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    #[arg(long = "p", value_delimiter = ',', default_value = "0.6,1,2")]
    pub p: Vec<f64>,

    #[arg(long, value_enum, default_value = "biane")]
    pub method: PathArg,

    /// Exit with status 3 if any entropy, Fisher information, gap or L^p
    /// distance is infinite.
    #[arg(long)]
    pub require_finite: bool,

    /// Report JSON; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    /// CSV `n,discrepancy`; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    pub n: Vec<usize>,

    /// Also write the results as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, points] = parts[..] else {
        return Err("expected `lo,hi,points`".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let points: usize = points.parse().map_err(|e| format!("points: {e}"))?;
    GridSpec::new(lo, hi, points).map_err(|e| e.to_string())
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected KEY=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}
