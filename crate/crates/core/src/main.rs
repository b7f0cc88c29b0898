use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use waveinv::cli::{
    cmd_experiment, cmd_invert, cmd_reproduce, cmd_simulate, resolve_output_dir, RunConfig,
    SolverKind,
};
use waveinv::preprocess::{Interval, Medium, TargetContext};

/// Reconstruction of a one-dimensional dielectric profile from a
/// single-point time-domain wave record.
#[derive(Parser)]
#[command(name = "waveinv", version, about, max_term_width = 100)]
struct CliArgs {
    /// TOML configuration file; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (overrides WAVEINV_OUT and the config file).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write the boundary record.
    Simulate(SimulateArgs),
    /// Reconstruct a profile from a previously written boundary record.
    Invert(InvertArgs),
    /// Preprocess a raw measured trace and reconstruct the target.
    Experiment(ExperimentArgs),
    /// Run one benchmark end to end: simulate, invert, write everything.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Benchmark profile id.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    test: Option<u8>,

    /// CSV file with `x, c` rows describing a custom true profile.
    #[arg(long, value_name = "FILE", conflicts_with = "test")]
    profile: Option<PathBuf>,

    /// Relative noise amplitude.
    #[arg(long)]
    delta: Option<f64>,

    /// Noise generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InvertArgs {
    /// Directory containing g0.csv (and optionally g1.csv).
    #[arg(long, value_name = "DIR")]
    data: PathBuf,

    /// Sweep minimizer.
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// CSV file with the raw measured trace (`t, value` rows).
    #[arg(long, value_name = "FILE")]
    data: PathBuf,

    /// Medium the calibration factor corresponds to.
    #[arg(long, value_enum, default_value = "air")]
    medium: MediumChoice,

    /// Background dielectric constant as `lo,hi` (a single number is a
    /// point estimate).
    #[arg(long, value_parser = parse_interval, default_value = "1")]
    c_bckgr: Interval,

    /// Spatial interval `lo,hi` attributed to the target. Defaults to the
    /// whole reconstruction interval.
    #[arg(long, value_parser = parse_interval)]
    depth: Option<Interval>,

    /// Invert the calibrated trace as is, without envelope selection.
    #[arg(long)]
    skip_envelope: bool,

    /// Half-width of the window kept around the dominant extremum.
    #[arg(long, default_value_t = 0.5)]
    halfwidth: f64,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Benchmark profile id.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    test: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverChoice {
    Direct,
    Gd,
    Gp,
}

#[derive(Clone, Copy, ValueEnum)]
enum MediumChoice {
    Air,
    Ground,
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once(',') {
        Some((lo, hi)) => Interval::new(parse(lo)?, parse(hi)?).map_err(|e| e.to_string()),
        None => Interval::point(parse(s)?).map_err(|e| e.to_string()),
    }
}

fn load_config(args: &CliArgs) -> waveinv::Result<RunConfig> {
    match &args.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn run(args: CliArgs) -> waveinv::Result<()> {
    let mut cfg = load_config(&args)?;
    match args.command {
        Command::Simulate(sim) => {
            if let Some(test) = sim.test {
                cfg.test = Some(test);
            }
            if let Some(profile) = sim.profile {
                cfg.test = None;
                cfg.profile = Some(profile);
            }
            if let Some(delta) = sim.delta {
                cfg.noise.delta = delta;
            }
            if let Some(seed) = sim.seed {
                cfg.noise.seed = seed;
            }
            let out = resolve_output_dir(args.out.as_deref(), &cfg, "out/simulate");
            cmd_simulate(&cfg, &out)
        }
        Command::Invert(inv) => {
            if let Some(choice) = inv.solver {
                cfg.solver.kind = match choice {
                    SolverChoice::Direct => SolverKind::Direct,
                    SolverChoice::Gd => SolverKind::Gd,
                    SolverChoice::Gp => SolverKind::Gp,
                };
            }
            let out = resolve_output_dir(args.out.as_deref(), &cfg, "out/invert");
            cmd_invert(&cfg, &inv.data, &out)
        }
        Command::Experiment(exp) => {
            let medium = match exp.medium {
                MediumChoice::Air => Medium::Air,
                MediumChoice::Ground => Medium::Ground,
            };
            let d = match exp.depth {
                Some(d) => d,
                None => Interval::new(cfg.inversion.eps, cfg.inversion.xmax)?,
            };
            let context = TargetContext { c_bckgr: exp.c_bckgr, d };
            let out = resolve_output_dir(args.out.as_deref(), &cfg, "out/experiment");
            cmd_experiment(
                &cfg,
                &exp.data,
                medium,
                &context,
                exp.skip_envelope,
                exp.halfwidth,
                &out,
            )
        }
        Command::Reproduce(rep) => {
            let out =
                resolve_output_dir(args.out.as_deref(), &cfg, &format!("out/test{}", rep.test));
            cmd_reproduce(&cfg, rep.test, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let args = CliArgs::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
