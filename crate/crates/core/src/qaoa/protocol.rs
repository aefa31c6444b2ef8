use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ansatz::{build_ansatz_circuit, circuit_metrics, CircuitMetrics};
use super::engine::{Evaluator, LandscapeGrid};
use super::lbfgsb::{minimize_box, BoxOptions};
use super::{OptimizerConfig, QaoaError, Schedule};
use crate::factoring::ClauseSystem;
use crate::instances::Instance;
use crate::ising::Hamiltonian;
use crate::sim::{sample_indices, CrScheme, DeviceModel, NoiseConfig, NoiseMode};

pub fn layer_grid_sweep(eval: &Evaluator, prefix: &Schedule, resolution: f64) -> Result<LandscapeGrid, QaoaError> {
    eval.layer_grid(prefix, resolution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub schedule: Schedule,
    pub energy: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration cap stopped the search.
    pub converged: bool,
}

/// Box-constrained quasi-Newton descent over all `2p` angles from `s0`.
pub fn refine_parameters(eval: &Evaluator, s0: &Schedule, config: &OptimizerConfig) -> Result<Refinement, QaoaError> {
    let opts = BoxOptions {
        lower: config.lower,
        upper: config.upper,
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        memory: 10,
    };
    let r = minimize_box(
        |x| eval.energy_and_gradient(&Schedule::from_params(x)?, config.gradient),
        &s0.to_params(),
        &opts,
    )?;
    Ok(Refinement {
        schedule: Schedule::from_params(&r.x)?,
        energy: r.f,
        iterations: r.iterations,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Basis indices whose assignment solves the clause system.
pub fn solution_indices(system: &ClauseSystem, h: &Hamiltonian) -> Result<Vec<u64>, QaoaError> {
    if !h.qubit_map().keys().eq(system.unknowns().iter()) {
        return Err(QaoaError::MapMismatch);
    }
    let mut out = Vec::new();
    for i in 0..1u64 << h.n_qubits() {
        if system.verify_assignment(&h.assignment_of_index(i))? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Total probability on the solutions.
pub fn success_rate_exact(probs: &[f64], solutions: &[u64]) -> f64 {
    solutions.iter().map(|&i| probs[i as usize]).sum()
}

/// Fraction of samples that are solutions.
pub fn success_rate_sampled(samples: &[u64], solutions: &[u64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| solutions.binary_search(s).is_ok()).count() as f64 / samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub p: usize,
    pub schedule: Schedule,
    /// Best grid energy for the new layer, before refinement.
    pub grid_energy: f64,
    /// Energy under the evaluation noise model.
    pub energy: f64,
    pub success_exact: f64,
    pub success_sampled: Option<f64>,
    pub shots: usize,
    pub converged: bool,
    pub iterations: usize,
    pub metrics: CircuitMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub n: String,
    pub n_qubits: usize,
    pub mode: NoiseMode,
    pub cr_scheme: CrScheme,
    pub spectators: bool,
    pub seed: u64,
    /// Success rate of `|+>^n`.
    pub initial_success: f64,
    pub layers: Vec<LayerRecord>,
    pub factors: Option<(String, String)>,
    /// Sampling was on and no sample was a solution.
    pub no_solution_sampled: bool,
}

/// One line of the run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance: String,
    pub p: usize,
    pub mode: NoiseMode,
    pub cr_scheme: CrScheme,
    pub spectators: bool,
    pub energy: f64,
    pub success_exact: f64,
    pub success_sampled: Option<f64>,
    pub shots: usize,
    pub seed: u64,
    pub cnots: usize,
    pub depth: usize,
}

impl RunResult {
    pub fn rows(&self, instance: &str) -> Vec<RunRow> {
        self.layers
            .iter()
            .map(|l| RunRow {
                instance: instance.to_string(),
                p: l.p,
                mode: self.mode,
                cr_scheme: self.cr_scheme,
                spectators: self.spectators,
                energy: l.energy,
                success_exact: l.success_exact,
                success_sampled: l.success_sampled,
                shots: l.shots,
                seed: self.seed,
                cnots: l.metrics.cnots,
                depth: l.metrics.depth,
            })
            .collect()
    }
}

/// One line of the landscape CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub layer: usize,
    pub gamma: f64,
    pub beta: f64,
    pub energy: f64,
}

impl LandscapeGrid {
    pub fn rows(&self) -> Vec<LandscapeRow> {
        (0..self.points)
            .flat_map(|i| (0..self.points).map(move |j| (i, j)))
            .map(|(i, j)| LandscapeRow { layer: self.layer, gamma: self.angle(i), beta: self.angle(j), energy: self.energy(i, j) })
            .collect()
    }
}

fn most_likely(weights: &BTreeMap<u64, f64>) -> Option<u64> {
    // highest weight, smallest index on ties
    weights.iter().fold(None, |best: Option<(u64, f64)>, (&i, &w)| match best {
        Some((_, bw)) if bw >= w => best,
        _ => Some((i, w)),
    })
    .map(|(i, _)| i)
}

/// Layer-by-layer training: grid sweep of the new layer with earlier layers
/// fixed, grid argmin, then refinement of all angles, for `p = 1..=p_max`.
pub fn run_vqf(instance: &Instance, p_max: usize, config: &OptimizerConfig, noise: &NoiseConfig) -> Result<RunResult, QaoaError> {
    let schedules = train_schedules(instance, p_max, config, noise)?;
    let report = Evaluator::new(&instance.hamiltonian, noise)?;
    evaluate_schedules(instance, &schedules, config, noise, &report)
}

/// Trained schedules for `p = 0..=p_max` with the grid energy of each new
/// layer and the refinement outcome.
fn train_schedules(
    instance: &Instance,
    p_max: usize,
    config: &OptimizerConfig,
    noise: &NoiseConfig,
) -> Result<Vec<(Schedule, f64, bool, usize)>, QaoaError> {
    config.grid_points()?;
    let train_noise = if config.train_ideal { NoiseConfig::ideal() } else { noise.clone() };
    let train = Evaluator::new(&instance.hamiltonian, &train_noise)?;
    let mut out = vec![(Schedule::default(), f64::NAN, true, 0)];
    let mut prefix = Schedule::default();
    for p in 1..=p_max {
        let grid = train.layer_grid(&prefix, config.resolution)?;
        let (g, b, grid_energy) = grid.argmin();
        let mut refined = refine_parameters(&train, &prefix.extended(g, b), config)?;
        // A grid minimum on the lower wall is stationary: gamma = 0 only
        // extends the previous mixer and beta = 0 leaves the distribution
        // alone. Also start from the best point strictly inside the box.
        if g == 0.0 || b == 0.0 {
            if let Some((g2, b2, _)) = grid.argmin_where(|i, j| i != 0 && j != 0) {
                let other = refine_parameters(&train, &prefix.extended(g2, b2), config)?;
                if other.energy < refined.energy {
                    refined = other;
                }
            }
        }
        if !refined.converged {
            log::warn!("layer {p}: refinement stopped after {} iterations", refined.iterations);
        }
        prefix = refined.schedule.clone();
        out.push((refined.schedule, grid_energy, refined.converged, refined.iterations));
    }
    Ok(out)
}

fn evaluate_schedules(
    instance: &Instance,
    schedules: &[(Schedule, f64, bool, usize)],
    config: &OptimizerConfig,
    noise: &NoiseConfig,
    report: &Evaluator,
) -> Result<RunResult, QaoaError> {
    let h = &instance.hamiltonian;
    let solutions = solution_indices(&instance.system, h)?;
    let mut layers = Vec::new();
    let mut initial_success = 0.0;
    let mut last_weights = BTreeMap::new();
    let mut no_solution_sampled = false;
    for (p, (schedule, grid_energy, converged, iterations)) in schedules.iter().enumerate() {
        let probs = report.probabilities(schedule)?;
        let success_exact = success_rate_exact(&probs, &solutions);
        let mut weights: BTreeMap<u64, f64> = solutions.iter().map(|&i| (i, probs[i as usize])).collect();
        let success_sampled = if config.shots > 0 {
            let samples = sample_indices(&probs, config.shots, config.seed.wrapping_add(p as u64))?;
            weights = BTreeMap::new();
            for s in samples.iter().filter(|s| solutions.binary_search(s).is_ok()) {
                *weights.entry(*s).or_default() += 1.0;
            }
            Some(success_rate_sampled(&samples, &solutions))
        } else {
            None
        };
        no_solution_sampled = config.shots > 0 && weights.is_empty();
        last_weights = weights;
        if p == 0 {
            initial_success = success_exact;
            continue;
        }
        let energy = probs.iter().zip(report.diagonal()).map(|(a, e)| a * e).sum();
        layers.push(LayerRecord {
            p,
            schedule: schedule.clone(),
            grid_energy: *grid_energy,
            energy,
            success_exact,
            success_sampled,
            shots: config.shots,
            converged: *converged,
            iterations: *iterations,
            metrics: circuit_metrics(&build_ansatz_circuit(h, schedule)?),
        });
    }
    let factors = match most_likely(&last_weights) {
        Some(i) => {
            let (a, b) = instance.system.reconstruct_factors(&h.assignment_of_index(i))?;
            Some((a.to_string(), b.to_string()))
        }
        None => None,
    };
    Ok(RunResult {
        n: instance.n.to_string(),
        n_qubits: h.n_qubits(),
        mode: noise.mode,
        cr_scheme: noise.cr_scheme,
        spectators: noise.spectators,
        seed: config.seed,
        initial_success,
        layers,
        factors,
        no_solution_sampled,
    })
}

/// A named noise model in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSetting {
    /// Curve family, e.g. `phase_damping`.
    pub family: String,
    /// Swept value of the family (microseconds or kHz).
    pub value: f64,
    pub noise: NoiseConfig,
}

impl NoiseSetting {
    pub fn ideal() -> Self {
        NoiseSetting { family: "ideal".into(), value: 0.0, noise: NoiseConfig::ideal() }
    }

    /// Pure dephasing: `T1 = inf`, every qubit at `t2_us`.
    pub fn phase_damping(device: &DeviceModel, mapping: &[usize], t2_us: f64, cnot_ns: f64) -> Result<Self, QaoaError> {
        let dev = restamp(device, f64::INFINITY, t2_us, 0.0, cnot_ns)?;
        Ok(NoiseSetting { family: "phase_damping".into(), value: t2_us, noise: NoiseConfig::new(NoiseMode::Damping, dev, mapping.to_vec()) })
    }

    /// Pure relaxation: `T2 = 2 T1`, every qubit at `t1_us`.
    pub fn amplitude_damping(device: &DeviceModel, mapping: &[usize], t1_us: f64, cnot_ns: f64) -> Result<Self, QaoaError> {
        let dev = restamp(device, t1_us, 2.0 * t1_us, 0.0, cnot_ns)?;
        Ok(NoiseSetting { family: "amplitude_damping".into(), value: t1_us, noise: NoiseConfig::new(NoiseMode::Damping, dev, mapping.to_vec()) })
    }

    /// Residual ZZ of `xi_khz` on every coupled pair, no damping.
    pub fn zz(device: &DeviceModel, mapping: &[usize], xi_khz: f64, cnot_ns: f64) -> Result<Self, QaoaError> {
        let dev = restamp(device, f64::INFINITY, f64::INFINITY, xi_khz, cnot_ns)?;
        Ok(NoiseSetting { family: "zz".into(), value: xi_khz, noise: NoiseConfig::new(NoiseMode::Zz, dev, mapping.to_vec()) })
    }
}

/// `device` with the same coherence on every qubit and the same ZZ rate and
/// CNOT time on every edge.
fn restamp(device: &DeviceModel, t1_us: f64, t2_us: f64, xi_khz: f64, cnot_ns: f64) -> Result<DeviceModel, QaoaError> {
    let finite = |x: f64| x.is_finite().then_some(x);
    let mut dev = device.clone();
    for q in &mut dev.qubits {
        q.t1_us = finite(t1_us);
        q.t2_us = finite(t2_us);
    }
    for e in &mut dev.edges {
        e.xi_khz = Some(xi_khz);
        e.cnot_ns = Some(cnot_ns);
    }
    dev.validate()?;
    Ok(dev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: String,
    pub value: f64,
    pub p: usize,
    pub energy: f64,
    pub success_exact: f64,
}

/// Success rate for every setting and `p = 1..=p_max`. With
/// `config.train_ideal` the schedules are trained once without noise and
/// replayed under each setting; otherwise each setting is trained under its
/// own noise.
pub fn noise_sweep(
    instance: &Instance,
    p_max: usize,
    config: &OptimizerConfig,
    settings: &[NoiseSetting],
) -> Result<Vec<SweepRow>, QaoaError> {
    let shared = if config.train_ideal {
        Some(train_schedules(instance, p_max, config, &NoiseConfig::ideal())?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for setting in settings {
        let report = Evaluator::new(&instance.hamiltonian, &setting.noise)?;
        let result = match &shared {
            Some(schedules) => evaluate_schedules(instance, schedules, config, &setting.noise, &report)?,
            None => run_vqf(instance, p_max, config, &setting.noise)?,
        };
        rows.extend(result.layers.iter().map(|l| SweepRow {
            family: setting.family.clone(),
            value: setting.value,
            p: l.p,
            energy: l.energy,
            success_exact: l.success_exact,
        }));
    }
    Ok(rows)
}
