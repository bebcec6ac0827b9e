//! Batch front end over `meps-core`. Every command writes one CSV table:
//! `#`-prefixed metadata recording the configuration, a header row, then rows
//! of numbers printed with 17 significant digits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod table;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use meps_core::{DosModel, Spectrum};

pub use table::Table;

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_TOL_S: f64 = 1e-9;
pub const DEFAULT_TOL_ROOT: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "meps",
    version,
    about = "Most energetic passive states and work bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Most energetic passive state on an entropy (or energy) grid.
    Meps(MepsArgs),
    /// Thermal and passive boundaries of the entropy-energy region.
    Region(RegionArgs),
    /// Delta_max / ln d against S / ln d for a family of system sizes.
    Scaling(ScalingArgs),
    /// Ergotropy, activatable work and their bounds for one state.
    Bounds(BoundsArgs),
    /// Closed-form S(E) for a continuum density of states.
    Asymptotic(AsymptoticArgs),
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Meps(a) => &a.output,
            Command::Region(a) => &a.output,
            Command::Scaling(a) => &a.output,
            Command::Bounds(a) => &a.output,
            Command::Asymptotic(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
#[group(multiple = false)]
pub struct SpectrumArgs {
    /// Spectrum file with `energy degeneracy` lines.
    #[arg(long, value_name = "FILE")]
    pub spectrum: Option<PathBuf>,
    /// d levels spaced by gap.
    #[arg(long, value_name = "D,GAP")]
    pub equally_spaced: Option<String>,
    /// n non-interacting qubits with the given splitting.
    #[arg(long, value_name = "N,SPLIT")]
    pub qubits: Option<String>,
    /// Density c E^a on (0, Em] in `levels` shells.
    #[arg(long, value_name = "A,C,EM,LEVELS")]
    pub poly_dos: Option<String>,
    /// Density e^{bE} on (0, Em] in `levels` shells.
    #[arg(long, value_name = "B,EM,LEVELS")]
    pub exp_dos: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MepsArgs {
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Entropy range; defaults to [0, ln D].
    #[arg(long, value_name = "LO,HI")]
    pub s_range: Option<String>,
    /// Use an energy grid instead of an entropy grid.
    #[arg(long, value_name = "LO,HI", conflicts_with = "s_range")]
    pub e_range: Option<String>,
    /// Rows whose achieved entropy misses the target by more than this are
    /// flagged as plateau rows.
    #[arg(long, default_value_t = DEFAULT_TOL_S)]
    pub tol_s: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Defaults to four equally spaced levels with unit gap.
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Energy range; defaults to [ground, mean].
    #[arg(long, value_name = "LO,HI")]
    pub e_range: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    EquallySpaced,
    Qubits,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::EquallySpaced => "equally-spaced",
            Family::Qubits => "qubits",
        })
    }
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = Family::EquallySpaced)]
    pub mode: Family,
    /// Dimensions d (equally spaced) or qubit numbers n. Defaults to
    /// 50,100,200,400 or 10,50,100,200.
    #[arg(long, value_name = "LIST")]
    pub sizes: Option<String>,
    /// Level gap or qubit splitting.
    #[arg(long, default_value_t = 1.0)]
    pub gap: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Range of S / ln d.
    #[arg(long, value_name = "LO,HI", default_value = "0,1")]
    pub s_range: String,
    /// S / ln d of the inset rows.
    #[arg(long, default_value_t = 0.1)]
    pub inset: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
    /// Populations, one per level in ascending energy order.
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    /// Bath inverse temperature for the free-energy decomposition.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Entropy tolerance for the reported matched temperature.
    #[arg(long, default_value_t = DEFAULT_TOL_ROOT)]
    pub tol_root: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AsymptoticArgs {
    /// Density c E^a on (0, Em]; with levels > 0 the exact solver on that
    /// discretization is tabulated too.
    #[arg(long, value_name = "A,C,EM,LEVELS", group = "dos", required = true)]
    pub poly_dos: Option<String>,
    /// Density e^{bE} on (0, Em].
    #[arg(long, value_name = "B,EM,LEVELS", group = "dos", required = true)]
    pub exp_dos: Option<String>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Energy range; defaults to the whole family.
    #[arg(long, value_name = "LO,HI")]
    pub e_range: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Contract(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "error: {e:#}"),
            CliError::Contract(m) => write!(f, "contract violation: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Config(e)
    }
}

impl From<meps_core::Error> for CliError {
    fn from(e: meps_core::Error) -> Self {
        CliError::Config(e.into())
    }
}

pub(crate) fn parse_list<const N: usize>(flag: &str, text: &str) -> anyhow::Result<[f64; N]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != N {
        anyhow::bail!("--{flag} expects {N} comma-separated values, got `{text}`");
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| anyhow::anyhow!("--{flag}: `{p}` is not a number"))?;
    }
    Ok(out)
}

pub(crate) fn as_count(flag: &str, x: f64) -> anyhow::Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 && x < 1e9 {
        Ok(x as usize)
    } else {
        anyhow::bail!("--{flag}: expected a positive integer, got {x}")
    }
}

impl SpectrumArgs {
    pub(crate) fn is_empty(&self) -> bool {
        self.spectrum.is_none()
            && self.equally_spaced.is_none()
            && self.qubits.is_none()
            && self.poly_dos.is_none()
            && self.exp_dos.is_none()
    }

    /// The selected spectrum and a one-line description for the metadata.
    pub fn build(&self) -> anyhow::Result<(Spectrum, String)> {
        if let Some(path) = &self.spectrum {
            return Ok((Spectrum::load(path)?, format!("file {}", path.display())));
        }
        if let Some(t) = &self.equally_spaced {
            let [d, gap] = parse_list("equally-spaced", t)?;
            let d = as_count("equally-spaced", d)?;
            return Ok((
                Spectrum::equally_spaced(d, gap)?,
                format!("equally-spaced d={d} gap={gap}"),
            ));
        }
        if let Some(t) = &self.qubits {
            let [n, split] = parse_list("qubits", t)?;
            let n = as_count("qubits", n)?;
            return Ok((
                Spectrum::qubit_ensemble(n, split)?,
                format!("qubits n={n} split={split}"),
            ));
        }
        if let Some(t) = &self.poly_dos {
            let [a, c, em, levels] = parse_list("poly-dos", t)?;
            let levels = as_count("poly-dos", levels)?;
            return Ok((
                Spectrum::polynomial_dos(a, c, em, levels)?,
                format!("poly-dos a={a} c={c} Em={em} levels={levels}"),
            ));
        }
        if let Some(t) = &self.exp_dos {
            let [b, em, levels] = parse_list("exp-dos", t)?;
            let levels = as_count("exp-dos", levels)?;
            return Ok((
                Spectrum::exponential_dos(b, em, levels)?,
                format!("exp-dos b={b} Em={em} levels={levels}"),
            ));
        }
        anyhow::bail!(
            "no spectrum given; use --spectrum, --equally-spaced, --qubits, --poly-dos or --exp-dos"
        )
    }
}

impl AsymptoticArgs {
    /// The density model and the discretization size (0 when absent).
    pub fn model(&self) -> anyhow::Result<(DosModel, usize, String)> {
        if let Some(t) = &self.poly_dos {
            let parts = t.split(',').count();
            let (a, c, em, levels) = if parts == 3 {
                let [a, c, em] = parse_list("poly-dos", t)?;
                (a, c, em, 0.0)
            } else {
                let [a, c, em, l] = parse_list("poly-dos", t)?;
                (a, c, em, l)
            };
            let levels = if levels == 0.0 {
                0
            } else {
                as_count("poly-dos", levels)?
            };
            let desc = format!("poly-dos a={a} c={c} Em={em} levels={levels}");
            return Ok((DosModel::polynomial(a, c, em)?, levels, desc));
        }
        let t = self.exp_dos.as_deref().unwrap_or_default();
        let (b, em, levels) = if t.split(',').count() == 2 {
            let [b, em] = parse_list("exp-dos", t)?;
            (b, em, 0.0)
        } else {
            let [b, em, l] = parse_list("exp-dos", t)?;
            (b, em, l)
        };
        let levels = if levels == 0.0 {
            0
        } else {
            as_count("exp-dos", levels)?
        };
        let desc = format!("exp-dos b={b} Em={em} levels={levels}");
        Ok((DosModel::exponential(b, em)?, levels, desc))
    }
}

/// A rendered table and any contract violations found while building it.
#[derive(Debug)]
pub struct Report {
    pub csv: String,
    pub violations: Vec<String>,
}

/// Runs a parsed command. The table is written to `--out` when given, even if
/// a contract check failed.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let table = match &cli.command {
        Command::Meps(a) => commands::meps(a)?,
        Command::Region(a) => commands::region(a)?,
        Command::Scaling(a) => commands::scaling(a)?,
        Command::Bounds(a) => commands::bounds(a)?,
        Command::Asymptotic(a) => commands::asymptotic(a)?,
    };
    let csv = table.render();
    if let Some(path) = &cli.command.output().out {
        std::fs::write(path, &csv)
            .map_err(|e| CliError::Config(anyhow::anyhow!("writing {}: {e}", path.display())))?;
    }
    Ok(Report {
        csv,
        violations: table.violations,
    })
}

/// Parses `args` (program name first), runs the command and returns the CSV.
/// Contract violations become [`CliError::Contract`].
pub fn execute<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(anyhow::anyhow!("{e}")))?;
    let report = run(&cli)?;
    if report.violations.is_empty() {
        Ok(report.csv)
    } else {
        Err(CliError::Contract(report.violations.join("; ")))
    }
}
