use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Coupling-tensor analysis for ¹³C pairs in diamond-like clusters.
///
/// Every subcommand reads files and writes one output file. Diagnostics go
/// to standard error.
#[derive(Debug, Parser)]
#[command(name = "jcoupling", version)]
pub struct Cli {
    /// Flat key=value file; each key names a flag of the chosen subcommand.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert producer output or a canonical document to canonical JSON.
    Parse(ParseArgs),
    /// Tabulate atom pairs of a geometry with bond order and bond class.
    Pairs(PairsArgs),
    /// Bond-frame report joining a tensor document with a geometry.
    Report(ReportArgs),
    /// Two-spin stick spectrum of a spin-system document.
    Spectrum(SpectrumArgs),
    /// Generate an ideal diamond-lattice cluster.
    Lattice(LatticeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Producer,
    Canonical,
}

#[derive(Debug, clap::Args)]
pub struct ParseArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Input format; detected from the content when omitted.
    #[arg(long)]
    pub format: Option<InputFormat>,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, clap::Args)]
pub struct GeometryOptions {
    /// Bond cutoff, Å.
    #[arg(long, default_value_t = jcoupling::geometry::DEFAULT_MAX_BOND, allow_negative_numbers = true)]
    pub max_bond: f64,
    /// Cluster reference axis as x,y,z.
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    pub axis: String,
    /// Near-parallel tolerance, degrees.
    #[arg(long, default_value_t = 15.0)]
    pub parallel_tol: f64,
    /// Tolerance around the tetrahedral direction, degrees.
    #[arg(long, default_value_t = 15.0)]
    pub tetra_tol: f64,
    /// Keep only pairs with this bond order.
    #[arg(long)]
    pub order: Option<u32>,
}

#[derive(Debug, clap::Args)]
pub struct PairsArgs {
    #[arg(long, value_name = "FILE")]
    pub geometry: PathBuf,
    #[command(flatten)]
    pub geometry_options: GeometryOptions,
    /// Element whose pairs are listed.
    #[arg(long, default_value = "C")]
    pub element: String,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportStyle {
    Table1,
    Bars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    #[value(name = "j_iso")]
    Iso,
    #[value(name = "j_xx")]
    Xx,
    #[value(name = "j_yy")]
    Yy,
    #[value(name = "j_zz")]
    Zz,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Canonical JSON or producer output.
    #[arg(long, value_name = "FILE")]
    pub tensors: PathBuf,
    /// XYZ geometry; the document's own atom list is used when omitted.
    #[arg(long, value_name = "FILE")]
    pub geometry: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportStyle::Table1)]
    pub style: ReportStyle,
    #[arg(long, value_enum, default_value_t = QuantityArg::Iso)]
    pub quantity: QuantityArg,
    /// Vacancy position x,y,z in Å; adds proximity columns.
    #[arg(long, allow_hyphen_values = true)]
    pub vacancy: Option<String>,
    /// Keep only these bond classes (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub class: Vec<String>,
    #[command(flatten)]
    pub geometry_options: GeometryOptions,
    /// Output file; a `.json` extension selects full-precision JSON rows.
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SpectrumArgs {
    #[arg(long, value_name = "FILE")]
    pub system: PathBuf,
    #[arg(long = "field-mT", value_name = "MILLITESLA", allow_negative_numbers = true)]
    pub field_mt: f64,
    /// ZYZ Euler angles a,b,c in degrees.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    pub euler: String,
    /// Rotation sweep `axis:steps`, axis being x, y, z or a vector x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientArg {
    #[value(name = "001")]
    Cubic001,
    #[value(name = "111")]
    Bond111,
}

#[derive(Debug, clap::Args)]
pub struct LatticeArgs {
    /// Sites within this distance of the origin site are kept, Å.
    #[arg(long, allow_negative_numbers = true)]
    pub radius: f64,
    #[arg(long, value_enum, default_value_t = OrientArg::Bond111)]
    pub orient: OrientArg,
    /// Turn the origin site into a vacancy and its +Z neighbour into nitrogen.
    #[arg(long)]
    pub nv: bool,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}
