//! Command-line harness for the factoring pipeline.
//!
//! Every command writes one artifact (CSV or JSON) and a sidecar
//! `<stem>.provenance.json` holding the fully resolved experiment spec.
//! Exit codes: 0 on success, 1 when factoring fails (contradiction, no
//! solution, no sampled solution), 2 on bad input.

pub mod angle;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;
use vqf_core::factoring::{BoundMode, FactoringError, RuleOptions, DEFAULT_MAX_PASSES};
use vqf_core::instances::{find_preset, Instance, InstancePreset};
use vqf_core::ising::MAX_QUBITS;
use vqf_core::qaoa::{
    noise_sweep, run_vqf, Evaluator, GradientMethod, NoiseSetting, OptimizerConfig, QaoaError, Schedule,
};
use vqf_core::scaling::scaling_study;
use vqf_core::sim::{CrScheme, DeviceModel, NoiseConfig, NoiseMode, DEFAULT_CNOT_NS};

/// Environment variable naming the default device file.
pub const DEVICE_ENV: &str = "VQF_DEVICE";

/// Largest bit length the scaling study enumerates.
pub const MAX_SCALING_BITS: u32 = 24;

#[derive(Debug, Parser)]
#[command(name = "vqf", version, about = "Variational quantum factoring experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and reduce the clauses of N.
    Preprocess(PreprocessArgs),
    /// Compile the cost Hamiltonian of N.
    Hamiltonian(PreprocessArgs),
    /// Train the ansatz layer by layer and report success rates.
    Factor(FactorArgs),
    /// Energy over the angle grid of one layer.
    Landscape(LandscapeArgs),
    /// Success rate against depth for a grid of noise settings.
    NoiseSweep(SweepArgs),
    /// Qubit and term counts for random biprimes.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Number to factor, or a preset name.
    #[arg(long = "n", value_name = "N")]
    pub n: String,
    /// Upper bound on rule passes.
    #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
    pub passes: usize,
    /// Pin surplus unknowns to the known factors until this many remain.
    /// Presets default to their register size.
    #[arg(long)]
    pub register: Option<usize>,
    /// Keep every unknown the rules leave, presets included.
    #[arg(long, conflicts_with = "register")]
    pub raw: bool,
    #[arg(long, value_enum, default_value_t = Bounds::Interval)]
    pub bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bounds {
    Literal,
    Interval,
    Exact,
    ExactRelations,
}

impl Bounds {
    pub fn options(self) -> RuleOptions {
        let bounds = match self {
            Bounds::Literal => BoundMode::Literal,
            Bounds::Interval => BoundMode::Interval,
            Bounds::Exact => BoundMode::Exact { max_vars: 16 },
            Bounds::ExactRelations => BoundMode::ExactRelations { max_vars: 16 },
        };
        RuleOptions { bounds, ..RuleOptions::default() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Artifact path. The sidecar is written next to it.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DeviceArgs {
    /// Device file; the bundled device when unset.
    #[arg(long, env = DEVICE_ENV)]
    pub device: Option<PathBuf>,
    /// Device qubit of each register qubit, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub mapping: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = Scheme::Single)]
    pub cr_scheme: Scheme,
    /// Include ZZ terms to neighbouring register qubits.
    #[arg(long)]
    pub spectators: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[arg(long, value_enum, default_value_t = Mode::Ideal)]
    pub mode: Mode,
    #[command(flatten)]
    pub device: DeviceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ideal,
    Damping,
    Zz,
    DampingZz,
}

impl From<Mode> for NoiseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ideal => NoiseMode::Ideal,
            Mode::Damping => NoiseMode::Damping,
            Mode::Zz => NoiseMode::Zz,
            Mode::DampingZz => NoiseMode::DampingAndZz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Single,
    Echoed,
}

impl From<Scheme> for CrScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Single => CrScheme::SinglePulse,
            Scheme::Echoed => CrScheme::EcrTwoPulse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Gradient {
    Adjoint,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Train {
    /// Train without noise, evaluate under the noise model.
    Ideal,
    /// Train under the noise model.
    Noisy,
}

#[derive(Debug, Clone, Args)]
pub struct OptArgs {
    /// Grid step for each new layer, e.g. pi/6 or 2pi/23.
    #[arg(long, default_value = "pi/6", value_parser = angle::parse_angle)]
    pub res: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub gtol: f64,
    #[arg(long, value_enum, default_value_t = Gradient::Adjoint)]
    pub gradient: Gradient,
    /// Step of the central-difference gradient.
    #[arg(long, default_value_t = 1e-5)]
    pub fd_step: f64,
    /// Measurement shots per layer; 0 reports exact probabilities only.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    /// Required whenever shots are taken.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub train: Option<Train>,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FactorArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub opt: OptArgs,
    #[arg(long, default_value_t = 8)]
    pub layers: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub opt: OptArgs,
    /// Layer to scan; earlier layers are trained first.
    #[arg(long, default_value_t = 1)]
    pub layer: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[command(flatten)]
    pub opt: OptArgs,
    #[arg(long, default_value_t = 20)]
    pub layers: usize,
    /// Phase damping: T2 values in microseconds, T1 infinite.
    #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0, 82.0])]
    pub t2: Vec<f64>,
    /// Amplitude damping: T1 values in microseconds, T2 = 2 T1.
    #[arg(long, value_delimiter = ',', default_values_t = [20.0, 40.0, 64.0])]
    pub t1: Vec<f64>,
    /// ZZ strengths in kHz.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 25.0, 50.0, 100.0])]
    pub xi: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_CNOT_NS)]
    pub cnot_ns: f64,
    /// Leave out the noiseless reference curve.
    #[arg(long)]
    pub no_ideal: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 6)]
    pub min_bits: u32,
    #[arg(long, default_value_t = 16)]
    pub max_bits: u32,
    /// Numbers per bit length; all of them when fewer exist.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
    pub passes: usize,
    #[arg(long, value_enum, default_value_t = Bounds::Interval)]
    pub bounds: Bounds,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] vqf_core::Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
core_error!(FactoringError, vqf_core::ising::IsingError, vqf_core::sim::SimError, QaoaError);

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let factoring = |e: &FactoringError| {
            matches!(
                e,
                FactoringError::Contradiction { .. } | FactoringError::NotASolution | FactoringError::OracleOutOfReach(_)
            )
        };
        match self {
            CliError::Core(vqf_core::Error::Factoring(e)) | CliError::Core(vqf_core::Error::Qaoa(QaoaError::Factoring(e)))
                if factoring(e) =>
            {
                1
            }
            _ => 2,
        }
    }
}

/// What the instance flags resolved to.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedInstance {
    pub n: String,
    pub preset: Option<String>,
    pub passes: usize,
    pub register: Option<usize>,
    pub rules: RuleOptions,
    pub unknowns_after_rules: usize,
    pub n_qubits: usize,
}

/// Everything needed to repeat a command.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub command: String,
    pub instance: Option<ResolvedInstance>,
    pub optimizer: Option<OptimizerConfig>,
    pub noise: Option<NoiseConfig>,
    pub params: serde_json::Value,
    pub output: String,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    artifact: String,
    rows: Option<usize>,
    spec: &'a ExperimentSpec,
    summary: serde_json::Value,
}

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifact: PathBuf,
    pub sidecar: PathBuf,
    /// Sampling found no solution; reported with exit code 1.
    pub no_solution: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.no_solution)
    }
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command, &mut std::io::stdout()) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command, writing the human-readable summary to `log`.
pub fn execute(command: &Command, log: &mut dyn Write) -> Result<Outcome, CliError> {
    match command {
        Command::Preprocess(a) => cmd_preprocess(a, log),
        Command::Hamiltonian(a) => cmd_hamiltonian(a, log),
        Command::Factor(a) => cmd_factor(a, log),
        Command::Landscape(a) => cmd_landscape(a, log),
        Command::NoiseSweep(a) => cmd_noise_sweep(a, log),
        Command::Scaling(a) => cmd_scaling(a, log),
    }
}

fn resolve_instance(a: &InstanceArgs) -> Result<(Instance, ResolvedInstance, Option<InstancePreset>), CliError> {
    let preset = find_preset(&a.n);
    let n: BigUint = match &preset {
        Some(p) => BigUint::from(p.n),
        None => a
            .n
            .parse()
            .map_err(|_| CliError::Usage(format!("--n {:?} is neither a number nor a preset", a.n)))?,
    };
    let register = if a.raw { None } else { a.register.or(preset.as_ref().map(|p| p.expected_unknowns)) };
    let rules = a.bounds.options();
    let instance = Instance::prepare_with(&n, register, a.passes, &rules)?;
    let resolved = ResolvedInstance {
        n: n.to_string(),
        preset: preset.as_ref().map(|p| p.name.clone()),
        passes: a.passes,
        register,
        rules,
        unknowns_after_rules: instance.unknowns_after_rules,
        n_qubits: instance.n_qubits(),
    };
    Ok((instance, resolved, preset))
}

fn load_device(args: &DeviceArgs) -> Result<DeviceModel, CliError> {
    Ok(match &args.device {
        Some(path) => DeviceModel::load(path)?,
        None => DeviceModel::bundled(),
    })
}

/// Explicit mapping, else the preset's when it fits, else the identity.
fn resolve_mapping(args: &DeviceArgs, preset: Option<&InstancePreset>, n_qubits: usize) -> Vec<usize> {
    if let Some(m) = &args.mapping {
        return m.clone();
    }
    match preset {
        Some(p) if p.mapping.len() == n_qubits => p.mapping.clone(),
        _ => (0..n_qubits).collect(),
    }
}

fn resolve_noise(args: &NoiseArgs, preset: Option<&InstancePreset>, n_qubits: usize) -> Result<NoiseConfig, CliError> {
    let mode = NoiseMode::from(args.mode);
    if mode == NoiseMode::Ideal {
        return Ok(NoiseConfig::ideal());
    }
    let mut noise = NoiseConfig::new(mode, load_device(&args.device)?, resolve_mapping(&args.device, preset, n_qubits));
    noise.cr_scheme = args.device.cr_scheme.into();
    noise.spectators = args.device.spectators;
    Ok(noise)
}

fn resolve_optimizer(args: &OptArgs, default_train: Train) -> Result<OptimizerConfig, CliError> {
    if args.shots > 0 && args.seed.is_none() {
        return Err(CliError::Usage("--seed is required when --shots is positive".into()));
    }
    let gradient = match args.gradient {
        Gradient::Adjoint => GradientMethod::ExactAdjoint,
        Gradient::Fd => GradientMethod::CentralDifference { h: args.fd_step },
    };
    Ok(OptimizerConfig {
        resolution: args.res,
        max_iterations: args.max_iter,
        gradient_tolerance: args.gtol,
        gradient,
        shots: args.shots,
        seed: args.seed.unwrap_or(0),
        train_ideal: args.train.unwrap_or(default_train) == Train::Ideal,
        ..OptimizerConfig::default()
    })
}

fn output_path(out: &OutArgs, default: String) -> PathBuf {
    out.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// `run.csv` -> `run.provenance.json`.
pub fn sidecar_path(artifact: &Path) -> PathBuf {
    artifact.with_extension("provenance.json")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e)),
        _ => Ok(()),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn finish(
    artifact: PathBuf,
    rows: Option<usize>,
    spec: &ExperimentSpec,
    summary: serde_json::Value,
    no_solution: bool,
) -> Result<Outcome, CliError> {
    let sidecar = sidecar_path(&artifact);
    let name = artifact.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let doc = Provenance { tool: "vqf", version: env!("CARGO_PKG_VERSION"), artifact: name, rows, spec, summary };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| io_error(&sidecar, e))?;
    write_text(&sidecar, &(text + "\n"))?;
    Ok(Outcome { artifact, sidecar, no_solution })
}

fn say(log: &mut dyn Write, line: impl std::fmt::Display) {
    let _ = writeln!(log, "{line}");
}

fn instance_key(resolved: &ResolvedInstance) -> String {
    resolved.preset.clone().unwrap_or_else(|| resolved.n.clone())
}

#[derive(Serialize)]
struct PreprocessDoc {
    system: vqf_core::factoring::ClauseSystemDoc,
    report: vqf_core::factoring::PreprocessReport,
    unknowns_after_rules: usize,
}

fn cmd_preprocess(a: &PreprocessArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let (inst, resolved, _) = resolve_instance(&a.instance)?;
    let path = output_path(&a.out, format!("preprocess-{}.json", instance_key(&resolved)));
    let doc = PreprocessDoc {
        system: inst.system.to_document(),
        report: inst.report.clone(),
        unknowns_after_rules: inst.unknowns_after_rules,
    };
    write_text(&path, &(serde_json::to_string_pretty(&doc).map_err(|e| io_error(&path, e))? + "\n"))?;
    let (n_p, n_q) = inst.system.split();
    say(log, format!("N = {}, split ({n_p}, {n_q})", resolved.n));
    say(
        log,
        format!(
            "rules: {} passes, {} -> {} unknowns{}",
            inst.report.passes,
            inst.report.unknowns_before,
            inst.unknowns_after_rules,
            if inst.report.converged { "" } else { " (pass budget spent)" }
        ),
    );
    let unknowns: Vec<String> = inst.system.unknowns().iter().map(|v| v.to_string()).collect();
    say(log, format!("register: {} [{}]", unknowns.len(), unknowns.join(", ")));
    let spec = ExperimentSpec {
        command: "preprocess".into(),
        instance: Some(resolved),
        optimizer: None,
        noise: None,
        params: serde_json::Value::Null,
        output: path.display().to_string(),
        seed: None,
    };
    let summary = serde_json::json!({ "unknowns": unknowns, "split": [n_p, n_q] });
    finish(path, None, &spec, summary, false)
}

fn cmd_hamiltonian(a: &PreprocessArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let (inst, resolved, _) = resolve_instance(&a.instance)?;
    let path = output_path(&a.out, format!("hamiltonian-{}.json", instance_key(&resolved)));
    let h = &inst.hamiltonian;
    write_text(&path, &(h.to_json() + "\n"))?;
    let hist = h.locality_histogram();
    say(log, format!("N = {}: {} qubits, {} terms, offset {}", resolved.n, h.n_qubits(), h.terms().len(), h.offset()));
    for (k, count) in &hist {
        say(log, format!("  {k}-local: {count}"));
    }
    let ground_states = if h.n_qubits() <= MAX_QUBITS { Some(h.ground_state_indices()?.len()) } else { None };
    if let Some(g) = ground_states {
        say(log, format!("zero-energy states: {g}"));
    }
    let spec = ExperimentSpec {
        command: "hamiltonian".into(),
        instance: Some(resolved),
        optimizer: None,
        noise: None,
        params: serde_json::Value::Null,
        output: path.display().to_string(),
        seed: None,
    };
    let summary = serde_json::json!({ "locality": hist, "ground_states": ground_states });
    finish(path, None, &spec, summary, false)
}

fn cmd_factor(a: &FactorArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let (inst, resolved, preset) = resolve_instance(&a.instance)?;
    let noise = resolve_noise(&a.noise, preset.as_ref(), inst.n_qubits())?;
    let config = resolve_optimizer(&a.opt, Train::Noisy)?;
    let key = instance_key(&resolved);
    let path = output_path(&a.out, format!("factor-{key}.csv"));
    let result = run_vqf(&inst, a.layers, &config, &noise)?;
    let rows = result.rows(&key);
    write_csv(&path, &rows)?;
    say(log, format!("N = {} on {} qubits, initial success {:.4}", resolved.n, result.n_qubits, result.initial_success));
    for l in &result.layers {
        let sampled = l.success_sampled.map(|s| format!(", sampled {s:.4}")).unwrap_or_default();
        say(log, format!("p = {:2}: energy {:.6}, success {:.4}{sampled}", l.p, l.energy, l.success_exact));
    }
    match &result.factors {
        Some((p, q)) => say(log, format!("factors: {} = {p} x {q}", resolved.n)),
        None => say(log, "factors: none found"),
    }
    let spec = ExperimentSpec {
        command: "factor".into(),
        instance: Some(resolved),
        optimizer: Some(config),
        noise: Some(noise),
        params: serde_json::json!({ "layers": a.layers }),
        output: path.display().to_string(),
        seed: a.opt.seed,
    };
    let summary = serde_json::json!({
        "factors": result.factors,
        "initial_success": result.initial_success,
        "no_solution_sampled": result.no_solution_sampled,
        "schedules": result.layers.iter().map(|l| &l.schedule).collect::<Vec<_>>(),
    });
    finish(path, Some(rows.len()), &spec, summary, result.no_solution_sampled)
}

fn cmd_landscape(a: &LandscapeArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    if a.layer == 0 {
        return Err(CliError::Usage("--layer counts from 1".into()));
    }
    let (inst, resolved, preset) = resolve_instance(&a.instance)?;
    let noise = resolve_noise(&a.noise, preset.as_ref(), inst.n_qubits())?;
    let config = resolve_optimizer(&a.opt, Train::Ideal)?;
    let key = instance_key(&resolved);
    let path = output_path(&a.out, format!("landscape-{key}-layer{}.csv", a.layer));
    let prefix = if a.layer == 1 {
        Schedule::default()
    } else {
        let trained = run_vqf(&inst, a.layer - 1, &config, &noise)?;
        trained.layers.last().map(|l| l.schedule.clone()).unwrap_or_default()
    };
    let grid = Evaluator::new(&inst.hamiltonian, &noise)?.layer_grid(&prefix, config.resolution)?;
    let rows = grid.rows();
    write_csv(&path, &rows)?;
    let (g, b, e) = grid.argmin();
    say(log, format!("layer {}: {} points, minimum {e:.6} at gamma {g:.6}, beta {b:.6}", a.layer, rows.len()));
    let spec = ExperimentSpec {
        command: "landscape".into(),
        instance: Some(resolved),
        optimizer: Some(config),
        noise: Some(noise),
        params: serde_json::json!({ "layer": a.layer, "prefix": prefix }),
        output: path.display().to_string(),
        seed: a.opt.seed,
    };
    let summary = serde_json::json!({ "points": grid.points, "argmin": [g, b, e] });
    finish(path, Some(rows.len()), &spec, summary, false)
}

fn cmd_noise_sweep(a: &SweepArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    let (inst, resolved, preset) = resolve_instance(&a.instance)?;
    let config = resolve_optimizer(&a.opt, Train::Ideal)?;
    let device = load_device(&a.device)?;
    let mapping = resolve_mapping(&a.device, preset.as_ref(), inst.n_qubits());
    let mut settings = Vec::new();
    if !a.no_ideal {
        settings.push(NoiseSetting::ideal());
    }
    for &t2 in &a.t2 {
        settings.push(NoiseSetting::phase_damping(&device, &mapping, t2, a.cnot_ns)?);
    }
    for &t1 in &a.t1 {
        settings.push(NoiseSetting::amplitude_damping(&device, &mapping, t1, a.cnot_ns)?);
    }
    for &xi in &a.xi {
        settings.push(NoiseSetting::zz(&device, &mapping, xi, a.cnot_ns)?);
    }
    for s in settings.iter_mut().filter(|s| s.noise.mode != NoiseMode::Ideal) {
        s.noise.cr_scheme = a.device.cr_scheme.into();
        s.noise.spectators = a.device.spectators;
    }
    let key = instance_key(&resolved);
    let path = output_path(&a.out, format!("noise-sweep-{key}.csv"));
    let rows = noise_sweep(&inst, a.layers, &config, &settings)?;
    write_csv(&path, &rows)?;
    for s in &settings {
        let curve: Vec<f64> =
            rows.iter().filter(|r| r.family == s.family && r.value == s.value).map(|r| r.success_exact).collect();
        let peak = curve.iter().cloned().fold(f64::NAN, f64::max);
        let last = curve.last().copied().unwrap_or(f64::NAN);
        say(log, format!("{} {}: peak {peak:.4}, final {last:.4}", s.family, s.value));
    }
    let spec = ExperimentSpec {
        command: "noise-sweep".into(),
        instance: Some(resolved),
        optimizer: Some(config),
        noise: None,
        params: serde_json::json!({
            "layers": a.layers,
            "cnot_ns": a.cnot_ns,
            "mapping": mapping,
            "settings": settings,
        }),
        output: path.display().to_string(),
        seed: a.opt.seed,
    };
    finish(path, Some(rows.len()), &spec, serde_json::Value::Null, false)
}

fn cmd_scaling(a: &ScalingArgs, log: &mut dyn Write) -> Result<Outcome, CliError> {
    if a.min_bits < 4 || a.max_bits > MAX_SCALING_BITS || a.min_bits > a.max_bits {
        return Err(CliError::Usage(format!("bit range must lie within 4..={MAX_SCALING_BITS}")));
    }
    let rules = a.bounds.options();
    let path = output_path(&a.out, "scaling.csv".into());
    let rows = scaling_study(a.min_bits, a.max_bits, a.samples, a.seed, a.passes, &rules)?;
    write_csv(&path, &rows)?;
    let mut over = 0;
    for bits in a.min_bits..=a.max_bits {
        let group: Vec<_> = rows.iter().filter(|r| r.bits == bits).collect();
        if group.is_empty() {
            continue;
        }
        let worst = group.iter().map(|r| r.qubits_after).max().unwrap_or(0);
        let mean = group.iter().map(|r| r.qubits_after as f64).sum::<f64>() / group.len() as f64;
        let above = group.iter().filter(|r| r.qubits_after > bits as usize).count();
        over += above;
        say(log, format!("n = {bits:2}: {:3} numbers, qubits mean {mean:5.2}, max {worst:2}, above n: {above}", group.len()));
    }
    let spec = ExperimentSpec {
        command: "scaling".into(),
        instance: None,
        optimizer: None,
        noise: None,
        params: serde_json::json!({
            "min_bits": a.min_bits,
            "max_bits": a.max_bits,
            "samples": a.samples,
            "passes": a.passes,
            "rules": rules,
        }),
        output: path.display().to_string(),
        seed: Some(a.seed),
    };
    finish(path, Some(rows.len()), &spec, serde_json::json!({ "above_bit_length": over }), false)
}
