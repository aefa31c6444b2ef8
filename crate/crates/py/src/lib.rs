//! Python bindings. Structured results (runs, sweeps, scaling rows) come back
//! as plain dicts and lists.

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use vqf_core::factoring::{self, BoundMode, RuleOptions, DEFAULT_MAX_PASSES};
use vqf_core::instances::{find_preset, presets, Instance as CoreInstance};
use vqf_core::ising::{compile_hamiltonian, Hamiltonian as CoreHamiltonian};
use vqf_core::qaoa::{self, GradientMethod, OptimizerConfig, Schedule};
use vqf_core::scaling;
use vqf_core::sim::{CrScheme, DeviceModel, NoiseConfig as CoreNoise, NoiseMode};

create_exception!(vqf, VqfError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    VqfError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn rule_options(bounds: &str) -> PyResult<RuleOptions> {
    let bounds = match bounds {
        "literal" => BoundMode::Literal,
        "interval" => BoundMode::Interval,
        "exact" => BoundMode::Exact { max_vars: 16 },
        "exact-relations" => BoundMode::ExactRelations { max_vars: 16 },
        other => return Err(err(format!("unknown bound mode {other:?}"))),
    };
    Ok(RuleOptions { bounds, ..RuleOptions::default() })
}

fn schedule(gammas: Vec<f64>, betas: Vec<f64>) -> PyResult<Schedule> {
    Schedule::new(gammas, betas).map_err(err)
}

/// Trial-division factors `(p, q)` with `p <= q`.
#[pyfunction]
fn factor_oracle(n: BigUint) -> PyResult<(BigUint, BigUint)> {
    factoring::factor_oracle(&n).map_err(err)
}

/// Cost Hamiltonian over the residual unknowns.
#[pyclass(module = "vqf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Hamiltonian {
    inner: CoreHamiltonian,
}

#[pymethods]
impl Hamiltonian {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Hamiltonian { inner: CoreHamiltonian::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset()
    }

    /// `(qubits, coefficient)` pairs; an empty tuple is the identity.
    fn terms(&self) -> Vec<(Vec<usize>, f64)> {
        self.inner.terms().iter().map(|t| (t.qubits.clone(), t.coefficient)).collect()
    }

    /// Variable name of each qubit.
    fn qubit_map(&self) -> Vec<(String, usize)> {
        self.inner.qubit_map().iter().map(|(v, &q)| (v.to_string(), q)).collect()
    }

    fn energy(&self, bits: Vec<u8>) -> PyResult<f64> {
        self.inner.energy_of_bitstring(&bits).map_err(err)
    }

    fn diagonal(&self) -> PyResult<Vec<f64>> {
        if self.inner.n_qubits() > vqf_core::ising::MAX_QUBITS {
            return Err(err("register too large for a dense diagonal"));
        }
        Ok(self.inner.diagonal())
    }

    fn ground_states(&self) -> PyResult<Vec<Vec<u8>>> {
        self.inner.ground_states_bruteforce().map_err(err)
    }

    fn locality_histogram(&self) -> Vec<(usize, usize)> {
        self.inner.locality_histogram().into_iter().collect()
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian(n_qubits={}, terms={})", self.inner.n_qubits(), self.inner.terms().len())
    }
}

/// A preprocessed number with its cost Hamiltonian.
#[pyclass(module = "vqf", frozen)]
struct Instance {
    inner: CoreInstance,
    mapping: Option<Vec<usize>>,
}

#[pymethods]
impl Instance {
    /// Preprocess `n`. With `register`, surplus unknowns are pinned to the
    /// trial-division factors until that many remain.
    #[new]
    #[pyo3(signature = (n, register=None, passes=DEFAULT_MAX_PASSES, bounds="interval"))]
    fn new(n: BigUint, register: Option<usize>, passes: usize, bounds: &str) -> PyResult<Self> {
        let inner = CoreInstance::prepare_with(&n, register, passes, &rule_options(bounds)?).map_err(err)?;
        Ok(Instance { inner, mapping: None })
    }

    /// One of the hardware instances, at its register size.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p = find_preset(name).ok_or_else(|| err(format!("no preset {name:?}")))?;
        let inner = CoreInstance::from_preset(&p, DEFAULT_MAX_PASSES).map_err(err)?;
        Ok(Instance { inner, mapping: Some(p.mapping) })
    }

    #[getter]
    fn n(&self) -> BigUint {
        self.inner.n.clone()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn unknowns_after_rules(&self) -> usize {
        self.inner.unknowns_after_rules
    }

    /// Device qubits of the preset, if any.
    #[getter]
    fn mapping(&self) -> Option<Vec<usize>> {
        self.mapping.clone()
    }

    #[getter]
    fn split(&self) -> (u32, u32) {
        self.inner.system.split()
    }

    fn unknowns(&self) -> Vec<String> {
        self.inner.system.unknowns().iter().map(|v| v.to_string()).collect()
    }

    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.report)
    }

    fn clauses_json(&self) -> String {
        self.inner.system.to_json()
    }

    fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian { inner: self.inner.hamiltonian.clone() }
    }

    /// Indices of the basis states that satisfy every clause.
    fn solutions(&self) -> PyResult<Vec<u64>> {
        qaoa::solution_indices(&self.inner.system, &self.inner.hamiltonian).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, n_qubits={})", self.inner.n, self.inner.n_qubits())
    }
}

/// Noise model: `mode` is one of ideal, damping, zz, damping-zz.
#[pyclass(module = "vqf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct NoiseConfig {
    inner: CoreNoise,
}

#[pymethods]
impl NoiseConfig {
    #[new]
    #[pyo3(signature = (mode="ideal", mapping=None, device_json=None, echoed=false, spectators=false))]
    fn new(
        mode: &str,
        mapping: Option<Vec<usize>>,
        device_json: Option<&str>,
        echoed: bool,
        spectators: bool,
    ) -> PyResult<Self> {
        let mode = match mode {
            "ideal" => NoiseMode::Ideal,
            "damping" => NoiseMode::Damping,
            "zz" => NoiseMode::Zz,
            "damping-zz" => NoiseMode::DampingAndZz,
            other => return Err(err(format!("unknown noise mode {other:?}"))),
        };
        if mode == NoiseMode::Ideal {
            return Ok(NoiseConfig { inner: CoreNoise::ideal() });
        }
        let device = match device_json {
            Some(text) => DeviceModel::from_json(text).map_err(err)?,
            None => DeviceModel::bundled(),
        };
        let mut inner = CoreNoise::new(mode, device, mapping.unwrap_or_default());
        inner.cr_scheme = if echoed { CrScheme::EcrTwoPulse } else { CrScheme::SinglePulse };
        inner.spectators = spectators;
        Ok(NoiseConfig { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("noise config serializes")
    }
}

fn noise_or_ideal(noise: Option<&NoiseConfig>) -> CoreNoise {
    noise.map_or_else(CoreNoise::ideal, |n| n.inner.clone())
}

/// Energy, probabilities and gradients of the ansatz for one Hamiltonian.
#[pyclass(module = "vqf", frozen)]
struct Evaluator {
    inner: qaoa::Evaluator,
}

#[pymethods]
impl Evaluator {
    #[new]
    #[pyo3(signature = (hamiltonian, noise=None))]
    fn new(hamiltonian: &Hamiltonian, noise: Option<&NoiseConfig>) -> PyResult<Self> {
        let inner = qaoa::Evaluator::new(&hamiltonian.inner, &noise_or_ideal(noise)).map_err(err)?;
        Ok(Evaluator { inner })
    }

    fn energy(&self, gammas: Vec<f64>, betas: Vec<f64>) -> PyResult<f64> {
        self.inner.energy(&schedule(gammas, betas)?).map_err(err)
    }

    fn probabilities(&self, gammas: Vec<f64>, betas: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&schedule(gammas, betas)?).map_err(err)
    }

    /// Gradient ordered as all gammas, then all betas. `fd_step` switches to
    /// central differences.
    #[pyo3(signature = (gammas, betas, fd_step=None))]
    fn gradient(&self, gammas: Vec<f64>, betas: Vec<f64>, fd_step: Option<f64>) -> PyResult<Vec<f64>> {
        let method = fd_step.map_or(GradientMethod::ExactAdjoint, |h| GradientMethod::CentralDifference { h });
        self.inner.gradient(&schedule(gammas, betas)?, method).map_err(err)
    }

    /// Grid energies of the next layer as a list of `(gamma, beta, energy)`.
    fn layer_grid(&self, gammas: Vec<f64>, betas: Vec<f64>, resolution: f64) -> PyResult<Vec<(f64, f64, f64)>> {
        let grid = self.inner.layer_grid(&schedule(gammas, betas)?, resolution).map_err(err)?;
        Ok(grid.rows().into_iter().map(|r| (r.gamma, r.beta, r.energy)).collect())
    }
}

fn optimizer(resolution: f64, shots: usize, seed: u64, train_ideal: bool) -> OptimizerConfig {
    OptimizerConfig { resolution, shots, seed, train_ideal, ..OptimizerConfig::default() }
}

/// Layer-by-layer training up to `layers`; returns the run record as a dict.
#[pyfunction]
#[pyo3(signature = (instance, layers, noise=None, resolution=std::f64::consts::PI / 6.0, shots=0, seed=0, train_ideal=false))]
fn run_vqf(
    py: Python<'_>,
    instance: &Instance,
    layers: usize,
    noise: Option<&NoiseConfig>,
    resolution: f64,
    shots: usize,
    seed: u64,
    train_ideal: bool,
) -> PyResult<Py<PyAny>> {
    let config = optimizer(resolution, shots, seed, train_ideal);
    let result = qaoa::run_vqf(&instance.inner, layers, &config, &noise_or_ideal(noise)).map_err(err)?;
    to_py(py, &result)
}

/// Success rate against depth for the standard noise families on the
/// instance's device qubits. Each setting is `(family, value)` with family
/// phase_damping (T2, us), amplitude_damping (T1, us), zz (kHz) or ideal.
#[pyfunction]
#[pyo3(signature = (instance, layers, settings, cnot_ns=vqf_core::sim::DEFAULT_CNOT_NS))]
fn noise_sweep(
    py: Python<'_>,
    instance: &Instance,
    layers: usize,
    settings: Vec<(String, f64)>,
    cnot_ns: f64,
) -> PyResult<Py<PyAny>> {
    let device = DeviceModel::bundled();
    let mapping = instance.mapping.clone().unwrap_or_else(|| (0..instance.inner.n_qubits()).collect());
    let resolved = settings
        .iter()
        .map(|(family, value)| match family.as_str() {
            "ideal" => Ok(qaoa::NoiseSetting::ideal()),
            "phase_damping" => qaoa::NoiseSetting::phase_damping(&device, &mapping, *value, cnot_ns).map_err(err),
            "amplitude_damping" => {
                qaoa::NoiseSetting::amplitude_damping(&device, &mapping, *value, cnot_ns).map_err(err)
            }
            "zz" => qaoa::NoiseSetting::zz(&device, &mapping, *value, cnot_ns).map_err(err),
            other => Err(err(format!("unknown noise family {other:?}"))),
        })
        .collect::<PyResult<Vec<_>>>()?;
    let config = optimizer(std::f64::consts::PI / 6.0, 0, 0, true);
    let rows = qaoa::noise_sweep(&instance.inner, layers, &config, &resolved).map_err(err)?;
    to_py(py, &rows)
}

/// Qubit and term counts for sampled odd biprimes, one dict per number.
#[pyfunction]
#[pyo3(signature = (min_bits, max_bits, samples, seed, passes=DEFAULT_MAX_PASSES))]
fn scaling_study(
    py: Python<'_>,
    min_bits: u32,
    max_bits: u32,
    samples: usize,
    seed: u64,
    passes: usize,
) -> PyResult<Py<PyAny>> {
    if max_bits > 24 {
        return Err(err("bit lengths above 24 are not enumerated"));
    }
    let rows = scaling::scaling_study(min_bits, max_bits, samples, seed, passes, &RuleOptions::default()).map_err(err)?;
    to_py(py, &rows)
}

/// Compile the Hamiltonian of `n` without any conditioning.
#[pyfunction]
#[pyo3(signature = (n, passes=DEFAULT_MAX_PASSES))]
fn compile(n: BigUint, passes: usize) -> PyResult<Hamiltonian> {
    let (system, _) = factoring::preprocess_number(&n, passes, &RuleOptions::default()).map_err(err)?;
    Ok(Hamiltonian { inner: compile_hamiltonian(&system).map_err(err)? })
}

#[pyfunction]
fn preset_names() -> Vec<String> {
    presets().into_iter().map(|p| p.name).collect()
}

#[pyfunction]
fn bundled_device_json() -> String {
    DeviceModel::bundled().to_json()
}

#[pymodule]
fn vqf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VqfError", m.py().get_type::<VqfError>())?;
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Instance>()?;
    m.add_class::<NoiseConfig>()?;
    m.add_class::<Evaluator>()?;
    m.add_function(wrap_pyfunction!(factor_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(run_vqf, m)?)?;
    m.add_function(wrap_pyfunction!(noise_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_study, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_device_json, m)?)?;
    Ok(())
}
