//! Argument parsing and output writing for `shortcut-lab`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{
    cmd_fig_finite_sample, cmd_fig_population, cmd_optimize_det, cmd_optimize_noisy, cmd_phase,
    cmd_risk, cmd_sweep, Axis, FiniteSampleArgs, OptimizeDetArgs, OptimizeNoisyArgs, PhaseArgs,
    PopulationArgs, RiskArgs, RunOutput, Settings, SweepArgs, SweepAxis,
};
use crate::error::{AppError, EXIT_OK, EXIT_USAGE};
use crate::manifest::{RunManifest, TOOL_NAME, TOOL_VERSION};
use crate::preset::PresetName;

/// Directory used by the figure commands when `--out` is absent.
pub const DEFAULT_FIGURE_DIR: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    /// CSV plus a JSON mirror when writing files; JSON only on stdout.
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "shortcut-lab",
    version,
    about = "Exact risks, ridge-logistic solutions and Monte Carlo runs for the two-coordinate shortcut model"
)]
pub struct Cli {
    /// Parameter preset supplying every default.
    #[arg(long, global = true, value_enum, default_value_t = PresetName::Paper)]
    pub preset: PresetName,
    /// Master RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ridge strength.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Root tolerance on channel derivatives.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Magnitude below which a channel root counts as zero.
    #[arg(long = "tol-sign", global = true)]
    pub tol_sign: Option<f64>,
    /// Iteration budget per channel root.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
    /// Output directory. Without it, single-table commands print to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact 0-1 risk of a weight vector on deterministic families.
    Risk(RiskCli),
    /// Ridge-logistic minimizer of the deterministic population objective.
    OptimizeDet(OptimizeDetCli),
    /// Ridge-logistic minimizer of the noisy population objective.
    OptimizeNoisy(OptimizeNoisyCli),
    /// Sign of the v-channel root over a (gamma, rho_bar) grid.
    Phase(PhaseCli),
    /// Data for the population figure (weight curve and phase diagram).
    FigPopulation(PopulationCli),
    /// Data for the finite-sample figure (Monte Carlo ERM).
    FigFiniteSample(FiniteSampleCli),
    /// Evaluate statistics over a one- or two-parameter grid.
    Sweep(SweepCli),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RiskCli {
    #[arg(long, default_value_t = 0.0)]
    pub wz: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ws: f64,
    /// Shortcut correlation(s) of the evaluated family.
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub rho: Vec<f64>,
    /// Adds test margin and cone gap columns for this test correlation.
    #[arg(long = "rho-test")]
    pub rho_test: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OptimizeDetCli {
    /// Average training correlation(s); defaults to the preset mixture.
    #[arg(long = "rho-bar", value_delimiter = ',', num_args = 1..)]
    pub rho_bar: Vec<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OptimizeNoisyCli {
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub gamma: Vec<f64>,
    #[arg(long = "rho-bar", value_delimiter = ',', num_args = 1..)]
    pub rho_bar: Vec<f64>,
    #[arg(long = "rho-test", value_delimiter = ',', num_args = 1..)]
    pub rho_test: Vec<f64>,
}

#[derive(Debug, Args, Clone, Copy)]
#[command(allow_negative_numbers = true)]
pub struct GridCli {
    /// Points per axis of the phase grid.
    #[arg(long)]
    pub points: Option<usize>,
    /// Lower end of both phase axes.
    #[arg(long = "grid-min")]
    pub grid_min: Option<f64>,
    /// Upper end of both phase axes.
    #[arg(long = "grid-max")]
    pub grid_max: Option<f64>,
}

impl GridCli {
    fn phase_args(&self, default: (f64, f64, usize)) -> PhaseArgs {
        let axis = Axis::new(
            self.grid_min.unwrap_or(default.0),
            self.grid_max.unwrap_or(default.1),
            self.points.unwrap_or(default.2),
        );
        PhaseArgs {
            gamma_axis: axis,
            rho_axis: axis,
        }
    }
}

#[derive(Debug, Args)]
pub struct PhaseCli {
    #[command(flatten)]
    pub grid: GridCli,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PopulationCli {
    #[command(flatten)]
    pub grid: GridCli,
    /// Points on the deterministic rho_bar curve.
    #[arg(long = "det-points")]
    pub det_points: Option<usize>,
    #[arg(long = "det-min")]
    pub det_min: Option<f64>,
    #[arg(long = "det-max")]
    pub det_max: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FiniteSampleCli {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Shortcut correlations of the training families.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub families: Vec<f64>,
    /// Mixture weights, one per family; equal if omitted.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub weights: Vec<f64>,
    #[arg(long = "rho-test", value_delimiter = ',', num_args = 1..)]
    pub rho_test: Vec<f64>,
    /// Explicit sample sizes; overrides the linear size grid.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub sizes: Vec<usize>,
    #[arg(long = "size-min")]
    pub size_min: Option<usize>,
    #[arg(long = "size-max")]
    pub size_max: Option<usize>,
    #[arg(long = "size-count")]
    pub size_count: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepCli {
    /// First axis, `name=lo:hi:points` or `name=v1,v2,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Optional second axis, same syntax.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// Statistic(s) to report.
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub stat: Vec<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "rho-bar")]
    pub rho_bar: Option<f64>,
    #[arg(long = "rho-test")]
    pub rho_test: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

fn or_default(v: Vec<f64>, d: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        d.to_vec()
    } else {
        v
    }
}

/// Run a parsed command line; returns the files written.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Vec<PathBuf>, AppError> {
    let preset = cli.preset.values();
    let settings = Settings {
        lambda: cli.lambda.unwrap_or(preset.lambda),
        tol: cli.tol.unwrap_or(preset.tol),
        tol_sign: cli.tol_sign.unwrap_or(preset.tol_sign),
        max_iter: cli.max_iter.unwrap_or(preset.max_iter),
        seed: cli.seed.unwrap_or(preset.seed),
    };
    settings.ridge()?;
    let (output, default_dir) = match &cli.command {
        Command::Risk(a) => (
            cmd_risk(&RiskArgs {
                w_z: a.wz,
                w_s: a.ws,
                rhos: a.rho.clone(),
                rho_test: a.rho_test,
            })?,
            None,
        ),
        Command::OptimizeDet(a) => (
            cmd_optimize_det(
                &OptimizeDetArgs {
                    rho_bars: or_default(a.rho_bar.clone(), &[preset.rho_bar()]),
                },
                &settings,
            )?,
            None,
        ),
        Command::OptimizeNoisy(a) => (
            cmd_optimize_noisy(
                &OptimizeNoisyArgs {
                    gammas: or_default(a.gamma.clone(), &[preset.gamma]),
                    rho_bars: or_default(a.rho_bar.clone(), &[preset.rho_bar()]),
                    rho_tests: or_default(a.rho_test.clone(), preset.rho_tests),
                },
                &settings,
            )?,
            None,
        ),
        Command::Phase(a) => (
            cmd_phase(&a.grid.phase_args(preset.phase_axis), &settings)?,
            None,
        ),
        Command::FigPopulation(a) => {
            let d = preset.det_axis;
            let args = PopulationArgs {
                det_axis: Axis::new(
                    a.det_min.unwrap_or(d.0),
                    a.det_max.unwrap_or(d.1),
                    a.det_points.unwrap_or(d.2),
                ),
                phase: a.grid.phase_args(preset.phase_axis),
            };
            (
                cmd_fig_population(&args, &settings)?,
                Some(DEFAULT_FIGURE_DIR),
            )
        }
        Command::FigFiniteSample(a) => {
            let mut args = FiniteSampleArgs::from_preset(&preset);
            if let Some(g) = a.gamma {
                args.gamma = g;
            }
            if !a.families.is_empty() {
                args.families = a.families.clone();
                args.weights = vec![1.0; a.families.len()];
            }
            if !a.weights.is_empty() {
                args.weights = a.weights.clone();
            }
            if !a.rho_test.is_empty() {
                args.rho_tests = a.rho_test.clone();
            }
            if !a.sizes.is_empty() {
                args.sizes = a.sizes.clone();
            } else if a.size_min.is_some() || a.size_max.is_some() || a.size_count.is_some() {
                args.sizes = shortcut_core::linear_sizes(
                    a.size_min.unwrap_or(preset.size_min),
                    a.size_max.unwrap_or(preset.size_max),
                    a.size_count.unwrap_or(preset.size_count),
                );
            }
            if let Some(r) = a.reps {
                args.reps = r;
            }
            (
                cmd_fig_finite_sample(&args, &settings)?,
                Some(DEFAULT_FIGURE_DIR),
            )
        }
        Command::Sweep(a) => {
            let args = SweepArgs {
                x: SweepAxis::parse(&a.x)?,
                y: a.y.as_deref().map(SweepAxis::parse).transpose()?,
                stats: a.stat.clone(),
                gamma: a.gamma.unwrap_or(preset.gamma),
                rho_bar: a.rho_bar.unwrap_or(preset.rho_bar()),
                rho_test: a.rho_test.unwrap_or(preset.rho_tests[0]),
                n: a.n.unwrap_or(preset.size_max),
            };
            (cmd_sweep(&args, &settings)?, None)
        }
    };
    let dir = cli.out.clone().or_else(|| default_dir.map(PathBuf::from));
    match dir {
        Some(dir) => write_outputs(&dir, &output, cli, &settings, argv),
        None => {
            print_outputs(&output, cli.format)?;
            Ok(Vec::new())
        }
    }
}

fn print_outputs(output: &RunOutput, format: Format) -> Result<(), AppError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    for (_, table) in &output.tables {
        match format {
            Format::Csv => table.write_csv(&mut lock)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut lock, &table.to_json())?;
                writeln!(lock)?;
            }
        }
    }
    Ok(())
}

fn write_outputs(
    dir: &Path,
    output: &RunOutput,
    cli: &Cli,
    settings: &Settings,
    argv: &[String],
) -> Result<Vec<PathBuf>, AppError> {
    fs::create_dir_all(dir)?;
    let timestamp = RunManifest::now_unix();
    let mut written = Vec::new();
    for (stem, table) in &output.tables {
        let mut files = vec![format!("{stem}.csv")];
        fs::write(dir.join(&files[0]), table.to_csv_string())?;
        if cli.format == Format::Json {
            files.push(format!("{stem}.json"));
            fs::write(
                dir.join(&files[1]),
                serde_json::to_string_pretty(&table.to_json())?,
            )?;
        }
        let manifest = RunManifest {
            command: output.command.to_owned(),
            preset: cli.preset.as_str().to_owned(),
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            timestamp_unix: timestamp,
            argv: argv.to_vec(),
            seed: settings.seed,
            lambda: settings.lambda,
            tol: settings.tol,
            tol_sign: settings.tol_sign,
            max_iter: settings.max_iter,
            outputs: files.clone(),
            params: output.params.clone(),
        };
        let manifest_name = format!("{stem}.manifest.json");
        fs::write(dir.join(&manifest_name), manifest.to_json_pretty()? + "\n")?;
        files.push(manifest_name);
        written.extend(files.into_iter().map(|f| dir.join(f)));
    }
    Ok(written)
}

/// Parse `argv`, run, report errors on stderr, and return the exit status.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, &argv) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{TOOL_NAME}: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_values_parse() {
        let cli = Cli::try_parse_from(["x", "risk", "--wz", "0.5", "--ws", "1", "--rho", "-0.3"])
            .unwrap();
        match cli.command {
            Command::Risk(r) => assert_eq!(r.rho, vec![-0.3]),
            _ => panic!("wrong subcommand"),
        }
        let cli = Cli::try_parse_from([
            "x",
            "--seed",
            "5",
            "sweep",
            "--x",
            "rho_test=-1:1:3",
            "--stat",
            "noisy_test_gap",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(5));
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli =
            Cli::try_parse_from(["x", "phase", "--lambda", "0.5", "--format", "json"]).unwrap();
        assert_eq!(cli.lambda, Some(0.5));
        assert_eq!(cli.format, Format::Json);
    }
}
