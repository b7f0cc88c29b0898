//! Configuration files, CSV input and output, and the pipeline drivers
//! behind the `waveinv` binary's `simulate`, `invert`, `experiment` and
//! `reproduce` subcommands.
//!
//! Everything a run needs lives in one [`RunConfig`], loadable from a TOML
//! file; command-line flags override single fields. Defaults reproduce the
//! synthetic benchmark setup: impulse response recorded on `(-5, 5)` with a
//! 3001 x 301 grid over six time units, 5% multiplicative noise, and the
//! weighted least-squares inversion with `lambda = 2`, `alpha = 0.3`,
//! `beta = 1e-11`.

use std::env;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::carleman::{
    run_algorithm, CarlemanParams, IterationTrace, QClamp, RunOptions, SweepSolver, C_MAX_DEFAULT,
};
use crate::forward::{
    add_noise, correct_near_origin, extract_boundary_data, solve_forward, BoundaryData,
    CorrectionWindow,
};
use crate::model::{make_true_profile, CoefficientProfile, ForwardGrid, InversionGrid};
use crate::preprocess::{
    differentiate_boundary, envelope_truncate, relative_dielectric, scale_calibration,
    select_envelope, EnvelopeSide, Medium, TargetContext, TimeSeries,
};
use crate::{Error, Result};

/// Environment variable consulted for the output directory when neither a
/// flag nor the config file names one.
pub const OUTPUT_DIR_VAR: &str = "WAVEINV_OUT";

/// Forward-solver section of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    /// Half-width of the simulation interval `(-a, a)`.
    pub a: f64,
    /// Nominal record length; the solver extends it so the shifted field is
    /// covered up to the inversion horizon.
    pub t_final: f64,
    /// Number of spatial grid points.
    pub nx: usize,
    /// Number of time levels for the nominal record length.
    pub nt: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig { a: 5.0, t_final: 6.0, nx: 3001, nt: 301 }
    }
}

/// Inversion-domain section of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    /// Sensor offset: the left edge of the reconstruction interval.
    pub eps: f64,
    /// Right edge of the reconstruction interval.
    pub xmax: f64,
    /// Length of the time window entering the functional.
    pub t_final: f64,
    /// Spatial grid size of the space-time rectangle.
    pub mx: usize,
    /// Temporal grid size of the space-time rectangle.
    pub mt: usize,
    /// Depth bounding the consecutive-error measurement and the reported
    /// summary values. A record of length `t_final` pins the profile only
    /// where the round-trip travel time fits inside it; deeper values are
    /// extrapolation.
    pub trust_depth: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            eps: 1.0 / 150.0,
            xmax: 3.0,
            t_final: 6.0,
            mx: 361,
            mt: 301,
            trust_depth: 1.8,
        }
    }
}

/// Weight and iteration parameters of the inversion functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanConfig {
    /// Exponential weight rate.
    pub lambda: f64,
    /// Relative weight of time in the exponent.
    pub alpha: f64,
    /// Penalty strength on the Sobolev norm of the iterate.
    pub beta: f64,
    /// Sweep budget.
    pub n_iters: usize,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        let p = CarlemanParams::default();
        CarlemanConfig { lambda: p.lambda, alpha: p.alpha, beta: p.beta, n_iters: p.n_iters }
    }
}

/// Measurement-noise section of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Relative amplitude of the multiplicative uniform noise.
    pub delta: f64,
    /// Seed of the noise generator; fixed seeds make runs reproducible.
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { delta: 0.05, seed: 1 }
    }
}

/// Data-preparation and stopping-rule section of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Penalty strength of the stabilized differentiation of `g0`.
    pub derivative_reg: f64,
    /// Time extent of the near-origin window pinned to `1/2`.
    pub correction_t_window: f64,
    /// Spatial validity extent of that window.
    pub correction_x_window: f64,
    /// Stop when consecutive profiles agree to this relative sup-norm.
    pub tolerance: f64,
    /// Upper bound of the reconstructed coefficient.
    pub c_max: f64,
    /// Leave the frozen denominators unclamped, as long as they stay away
    /// from zero.
    pub relaxed_denominators: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let w = CorrectionWindow::default();
        PipelineConfig {
            derivative_reg: 1e-4,
            correction_t_window: w.t_window,
            correction_x_window: w.x_window,
            tolerance: 1e-3,
            c_max: C_MAX_DEFAULT,
            relaxed_denominators: false,
        }
    }
}

/// Which minimizer handles each sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Banded normal equations, factored directly.
    Direct,
    /// Fixed-step gradient descent.
    Gd,
    /// Gradient descent projected onto a Sobolev ball.
    Gp,
}

/// Solver section of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Minimizer choice.
    pub kind: SolverKind,
    /// Initial step size for the descent variants.
    pub eta: f64,
    /// Step budget per sweep for the descent variants.
    pub k_max: usize,
    /// Ball radius for the projected variant.
    pub radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { kind: SolverKind::Direct, eta: 1.0, k_max: 20_000, radius: 1e6 }
    }
}

/// Complete description of one run: which medium to simulate and every
/// numerical parameter of the pipeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Benchmark profile id (1 to 4) to simulate, unless a custom profile
    /// file is given.
    pub test: Option<u8>,
    /// CSV file with `x, c` rows describing a custom true profile.
    pub profile: Option<PathBuf>,
    /// Output directory; flags and the environment override it.
    pub output_dir: Option<PathBuf>,
    /// Forward-solver grid.
    pub forward: ForwardConfig,
    /// Inversion domain and grid.
    pub inversion: InversionConfig,
    /// Weight and iteration parameters.
    pub carleman: CarlemanConfig,
    /// Measurement noise.
    pub noise: NoiseConfig,
    /// Data preparation and stopping rule.
    pub pipeline: PipelineConfig,
    /// Sweep minimizer.
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Reads a configuration from a TOML file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(Error::Io)?;
        toml::from_str(&text).map_err(|err| {
            let line = err
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(1);
            Error::Parse { line, msg: err.message().to_string() }
        })
    }

    /// The forward grid, checked.
    pub fn forward_grid(&self) -> Result<ForwardGrid> {
        ForwardGrid::new(self.forward.a, self.forward.t_final, self.forward.nx, self.forward.nt)
    }

    /// The inversion grid, checked.
    pub fn inversion_grid(&self) -> Result<InversionGrid> {
        InversionGrid::new(
            self.inversion.eps,
            self.inversion.xmax,
            self.inversion.t_final,
            self.inversion.mx,
            self.inversion.mt,
        )
    }

    /// Weight parameters in the form the assembly expects, checked.
    pub fn carleman_params(&self) -> Result<CarlemanParams> {
        let params = CarlemanParams {
            lambda: self.carleman.lambda,
            alpha: self.carleman.alpha,
            beta: self.carleman.beta,
            n_iters: self.carleman.n_iters,
        };
        params.validate()?;
        Ok(params)
    }

    /// Near-origin correction window.
    pub fn correction_window(&self) -> CorrectionWindow {
        CorrectionWindow {
            t_window: self.pipeline.correction_t_window,
            x_window: self.pipeline.correction_x_window,
        }
    }

    /// Iteration options in the form the driver expects, checked.
    pub fn run_options(&self) -> Result<RunOptions> {
        let solver = match self.solver.kind {
            SolverKind::Direct => SweepSolver::Direct,
            SolverKind::Gd => {
                SweepSolver::GradientDescent { eta: self.solver.eta, k_max: self.solver.k_max }
            }
            SolverKind::Gp => SweepSolver::GradientProjection {
                eta: self.solver.eta,
                k_max: self.solver.k_max,
                radius: self.solver.radius,
            },
        };
        if !(self.pipeline.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pipeline.tolerance must be positive, got {}",
                self.pipeline.tolerance
            )));
        }
        if !(self.inversion.trust_depth > self.inversion.eps) {
            return Err(Error::InvalidInput(format!(
                "inversion.trust_depth must exceed eps = {}, got {}",
                self.inversion.eps, self.inversion.trust_depth
            )));
        }
        Ok(RunOptions {
            tol: self.pipeline.tolerance,
            clamp: QClamp::from_c_max(self.pipeline.c_max)?,
            relaxed_denominators: self.pipeline.relaxed_denominators,
            solver,
            trust_depth: self.inversion.trust_depth,
        })
    }

    /// Checks every section and reports the first violated constraint.
    pub fn validate(&self) -> Result<()> {
        self.forward_grid()?;
        self.inversion_grid()?;
        self.carleman_params()?;
        self.run_options()?;
        if !(self.noise.delta >= 0.0 && self.noise.delta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "noise.delta must lie in [0, 1), got {}",
                self.noise.delta
            )));
        }
        if !(self.pipeline.derivative_reg > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pipeline.derivative_reg must be positive, got {}",
                self.pipeline.derivative_reg
            )));
        }
        Ok(())
    }
}

/// Everything a finished synthetic run hands back: the medium that was
/// simulated, the data it produced, and the reconstruction record.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Grid the reconstruction lives on.
    pub grid: InversionGrid,
    /// The simulated true profile, on the forward axis.
    pub c_true: CoefficientProfile,
    /// The noisy, differentiated boundary record fed to the inversion.
    pub data: BoundaryData,
    /// Per-sweep reconstructions and statistics.
    pub trace: IterationTrace,
}

/// Synthesizes the boundary record for a given true profile: forward solve,
/// extraction at the sensor, noise, near-origin correction, stabilized
/// differentiation. The correction runs after the noise because the early
/// plateau is known analytically and overwrites whatever the record holds
/// there, exactly as with measured data.
pub fn synthesize_boundary_data(
    c_true: &CoefficientProfile,
    cfg: &RunConfig,
) -> Result<BoundaryData> {
    let horizon = cfg.inversion.t_final + cfg.inversion.eps;
    let fwd = cfg.forward_grid()?.extended_to(horizon);
    let field = solve_forward(c_true, &fwd)?;
    let raw = extract_boundary_data(&field, cfg.inversion.eps)?;
    let noisy = add_noise(&raw, cfg.noise.delta, cfg.noise.seed)?;
    let corrected = correct_near_origin(&noisy, &cfg.correction_window())?;
    differentiate_boundary(&corrected, cfg.pipeline.derivative_reg)
}

/// Reconstructs a profile from a prepared boundary record.
pub fn invert_boundary_data(
    data: &BoundaryData,
    cfg: &RunConfig,
) -> Result<(InversionGrid, IterationTrace)> {
    let grid = cfg.inversion_grid()?;
    let params = cfg.carleman_params()?;
    let opts = cfg.run_options()?;
    let trace = run_algorithm(data, &grid, &params, &opts)?;
    Ok((grid, trace))
}

/// The true profile a config describes: a benchmark id, a custom CSV, or
/// the homogeneous background when neither is given.
pub fn configured_profile(cfg: &RunConfig, kind: Option<u8>) -> Result<CoefficientProfile> {
    let axis = cfg.forward_grid()?.x_axis();
    match (kind.or(cfg.test), &cfg.profile) {
        (Some(k), _) => make_true_profile(k, &axis),
        (None, Some(path)) => profile_from_csv(path, &axis),
        (None, None) => CoefficientProfile::homogeneous(&axis),
    }
}

/// Synthesizes and inverts one benchmark end to end.
pub fn run_test_case(kind: u8, cfg: &RunConfig) -> Result<RunOutcome> {
    let c_true = configured_profile(cfg, Some(kind))?;
    let data = synthesize_boundary_data(&c_true, cfg)?;
    let (grid, trace) = invert_boundary_data(&data, cfg)?;
    Ok(RunOutcome { grid, c_true, data, trace })
}

/// Reads a custom true profile from a CSV with `x, c` rows and resamples it
/// onto the forward axis.
pub fn profile_from_csv(path: &Path, axis: &[f64]) -> Result<CoefficientProfile> {
    let cols = read_csv(path, 2)?;
    let given = CoefficientProfile::new(cols[0].clone(), cols[1].clone())?;
    let values: Vec<f64> = axis.iter().map(|&x| given.value_at(x)).collect();
    CoefficientProfile::new(axis.to_vec(), values)
}

/// Picks the output directory: explicit flag, then the `WAVEINV_OUT`
/// environment variable, then the config entry, then `fallback`.
pub fn resolve_output_dir(flag: Option<&Path>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Ok(dir) = env::var(OUTPUT_DIR_VAR) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    PathBuf::from(fallback)
}

/// Writes columns of equal length as CSV with 9 significant digits.
pub fn write_csv(path: &Path, header: &str, columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("csv columns differ in length".into()));
    }
    let file = fs::File::create(path).map_err(Error::Io)?;
    let mut out = BufWriter::new(file);
    let mut run = || -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for r in 0..n {
            for (k, col) in columns.iter().enumerate() {
                if k > 0 {
                    write!(out, ",")?;
                }
                write!(out, "{:.8e}", col[r])?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    run().map_err(Error::Io)
}

/// Reads a CSV of `ncols` numeric columns. A first line that does not parse
/// is taken as the header; any later malformed line is an error carrying
/// its 1-based line number.
pub fn read_csv(path: &Path, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(Error::Io)?;
    let reader = BufReader::new(file);
    let mut columns = vec![Vec::new(); ncols];
    let mut rows = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) if values.len() == ncols => {
                for (col, v) in columns.iter_mut().zip(values) {
                    col.push(v);
                }
                rows += 1;
            }
            Ok(values) => {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("expected {ncols} fields, found {}", values.len()),
                });
            }
            Err(err) => {
                if k == 0 {
                    continue; // header
                }
                return Err(Error::Parse { line: k + 1, msg: err.to_string() });
            }
        }
    }
    if rows == 0 {
        return Err(Error::Parse { line: 1, msg: "no data rows".into() });
    }
    Ok(columns)
}

fn write_trace_csv(path: &Path, trace: &IterationTrace) -> Result<()> {
    let iters: Vec<f64> = trace.rows.iter().map(|r| r.iter as f64).collect();
    let errs: Vec<f64> = trace.rows.iter().map(|r| r.consec_err).collect();
    let objs: Vec<f64> = trace.rows.iter().map(|r| r.objective).collect();
    let grads: Vec<f64> = trace.rows.iter().map(|r| r.grad_norm).collect();
    write_csv(path, "iter,consec_err,objective,grad_norm", &[&iters, &errs, &objs, &grads])
}

fn write_reconstruction(dir: &Path, grid: &InversionGrid, trace: &IterationTrace) -> Result<()> {
    let axis = grid.x_axis();
    for (n, profile) in trace.profiles.iter().enumerate() {
        write_csv(&dir.join(format!("c_iter{n}.csv")), "x,c", &[&axis, &profile.values])?;
    }
    write_csv(&dir.join("c_comp.csv"), "x,c", &[&axis, &trace.final_profile().values])?;
    write_trace_csv(&dir.join("trace.csv"), trace)
}

/// Largest reconstructed value within the trusted depth and its location.
fn trusted_max(profile: &CoefficientProfile, depth: f64) -> (f64, f64) {
    let mut best = (profile.values[0], profile.x[0]);
    for (x, v) in profile.x.iter().zip(&profile.values) {
        if *x <= depth && *v > best.0 {
            best = (*v, *x);
        }
    }
    (best.0, best.1)
}

fn report_inversion(cfg: &RunConfig, trace: &IterationTrace, seconds: f64) {
    let (cmax, at) = trusted_max(trace.final_profile(), cfg.inversion.trust_depth);
    let n = trace.rows.len();
    println!("sweeps run          {n}");
    println!("converged           {}", trace.converged);
    println!("max c (x <= {:.2})   {cmax:.4} at x = {at:.4}", cfg.inversion.trust_depth);
    println!("wall time           {seconds:.2} s");
    for row in &trace.rows {
        println!(
            "  sweep {:>2}: consecutive error {:.3e}, objective {:.6e}",
            row.iter, row.consec_err, row.objective
        );
    }
}

/// Synthesizes boundary data and writes `g0.csv`, `g1.csv`, `c_true.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(Error::Io)?;
    let c_true = configured_profile(cfg, None)?;
    let data = synthesize_boundary_data(&c_true, cfg)?;
    let g1 = data.g1.as_ref().expect("synthesis always differentiates");
    write_csv(&out_dir.join("g0.csv"), "t,g0", &[&data.times, &data.g0])?;
    write_csv(&out_dir.join("g1.csv"), "t,g1", &[&data.times, g1])?;
    write_csv(&out_dir.join("c_true.csv"), "x,c", &[&c_true.x, &c_true.values])?;
    println!("wrote g0.csv, g1.csv, c_true.csv to {}", out_dir.display());
    println!(
        "record: {} samples over [0, {:.3}], noise {:.1}%",
        data.times.len(),
        data.times.last().unwrap(),
        100.0 * cfg.noise.delta
    );
    Ok(())
}

/// Reads `g0.csv` (and `g1.csv` when present) from `data_dir`, reconstructs,
/// and writes the profile, the per-sweep profiles, and the convergence
/// record to `out_dir`.
pub fn cmd_invert(cfg: &RunConfig, data_dir: &Path, out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(Error::Io)?;
    let g0_cols = read_csv(&data_dir.join("g0.csv"), 2)?;
    let g1_path = data_dir.join("g1.csv");
    let mut data = BoundaryData {
        times: g0_cols[0].clone(),
        g0: g0_cols[1].clone(),
        g1: None,
        noise_level: cfg.noise.delta,
        corrected_until: None,
    };
    if g1_path.exists() {
        let g1_cols = read_csv(&g1_path, 2)?;
        if g1_cols[0].len() != data.times.len() {
            return Err(Error::InvalidInput(format!(
                "g0.csv has {} samples but g1.csv has {}",
                data.times.len(),
                g1_cols[0].len()
            )));
        }
        data.g1 = Some(g1_cols[1].clone());
    } else {
        data = differentiate_boundary(&data, cfg.pipeline.derivative_reg)?;
    }
    let start = Instant::now();
    let (grid, trace) = invert_boundary_data(&data, cfg)?;
    write_reconstruction(out_dir, &grid, &trace)?;
    report_inversion(cfg, &trace, start.elapsed().as_secs_f64());
    println!("wrote c_comp.csv and trace.csv to {}", out_dir.display());
    Ok(())
}

/// Runs one benchmark end to end with the configured parameters and writes
/// both the data and the reconstruction files.
pub fn cmd_reproduce(cfg: &RunConfig, test: u8, out_dir: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(Error::Io)?;
    let start = Instant::now();
    let outcome = run_test_case(test, cfg)?;
    let g1 = outcome.data.g1.as_ref().expect("synthesis always differentiates");
    write_csv(&out_dir.join("g0.csv"), "t,g0", &[&outcome.data.times, &outcome.data.g0])?;
    write_csv(&out_dir.join("g1.csv"), "t,g1", &[&outcome.data.times, g1])?;
    write_csv(
        &out_dir.join("c_true.csv"),
        "x,c",
        &[&outcome.c_true.x, &outcome.c_true.values],
    )?;
    write_reconstruction(out_dir, &outcome.grid, &outcome.trace)?;
    report_inversion(cfg, &outcome.trace, start.elapsed().as_secs_f64());
    println!("wrote benchmark {test} outputs to {}", out_dir.display());
    Ok(())
}

/// Preprocesses a raw measured trace (calibration, optional envelope,
/// truncation), inverts it, and reports the target's dielectric constant
/// relative to the supplied background interval.
pub fn cmd_experiment(
    cfg: &RunConfig,
    raw_path: &Path,
    medium: Medium,
    context: &TargetContext,
    skip_envelope: bool,
    halfwidth: f64,
    out_dir: &Path,
) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(Error::Io)?;
    let cols = read_csv(raw_path, 2)?;
    let raw = TimeSeries::new(cols[0].clone(), cols[1].clone())?;
    let scaled = scale_calibration(&raw, medium);

    let prepared = if skip_envelope {
        scaled
    } else {
        let side = select_envelope(&scaled).map_err(|err| match err {
            Error::InvalidInput(msg) => Error::InvalidInput(format!(
                "{msg}; pass --skip-envelope to invert the calibrated trace as is"
            )),
            other => other,
        })?;
        let name = match side {
            EnvelopeSide::Upper => "upper",
            EnvelopeSide::Lower => "lower",
        };
        println!("selected {name} envelope");
        envelope_truncate(&scaled, side, halfwidth)?
    };
    write_csv(&out_dir.join("g0_prepared.csv"), "t,g0", &[&prepared.times, &prepared.values])?;

    let data = BoundaryData {
        times: prepared.times.clone(),
        g0: prepared.values.clone(),
        g1: None,
        noise_level: 0.0,
        corrected_until: None,
    };
    let data = differentiate_boundary(&data, cfg.pipeline.derivative_reg)?;
    let start = Instant::now();
    let (grid, trace) = invert_boundary_data(&data, cfg)?;
    write_reconstruction(out_dir, &grid, &trace)?;
    report_inversion(cfg, &trace, start.elapsed().as_secs_f64());

    let (c_rel, c_comp) = relative_dielectric(trace.final_profile(), context)?;
    write_csv(&out_dir.join("c_rel.csv"), "x,c_rel", &[&c_rel.x, &c_rel.values])?;
    println!(
        "target dielectric constant: [{:.2}, {:.2}] (background [{:.2}, {:.2}])",
        c_comp.lo, c_comp.hi, context.c_bckgr.lo, context.c_bckgr.hi
    );
    println!("wrote experiment outputs to {}", out_dir.display());
    Ok(())
}
