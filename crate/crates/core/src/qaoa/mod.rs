//! Layered QAOA ansatz, its evaluation under noise, and the layer-by-layer
//! training protocol.

mod ansatz;
mod engine;
mod lbfgsb;
mod protocol;

pub use ansatz::{build_ansatz_circuit, circuit_metrics, CircuitMetrics};
pub use engine::{Backend, Evaluator, LandscapeGrid};
pub use lbfgsb::{minimize_box, BoxOptions, BoxResult};
pub use protocol::{
    layer_grid_sweep, noise_sweep, refine_parameters, run_vqf, solution_indices, success_rate_exact,
    success_rate_sampled, LandscapeRow, LayerRecord, NoiseSetting, Refinement, RunResult, RunRow, SweepRow,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factoring::FactoringError;
use crate::ising::IsingError;
use crate::sim::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QaoaError {
    #[error("schedule has {gammas} gammas and {betas} betas")]
    LengthMismatch { gammas: usize, betas: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("resolution {0} does not split 2 pi into at least 4 equal steps")]
    BadResolution(f64),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error("backend {0:?} cannot run this noise model")]
    Backend(Backend),
    #[error("qubit map does not match the unknowns of the clause system")]
    MapMismatch,
    #[error("{expected} probabilities expected, got {got}")]
    DistributionLength { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Factoring(#[from] FactoringError),
}

/// Angles of a `p`-layer ansatz.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Schedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, QaoaError> {
        if gammas.len() != betas.len() {
            return Err(QaoaError::LengthMismatch { gammas: gammas.len(), betas: betas.len() });
        }
        Ok(Schedule { gammas, betas })
    }

    pub fn zeros(p: usize) -> Self {
        Schedule { gammas: vec![0.0; p], betas: vec![0.0; p] }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub(crate) fn check(&self) -> Result<(), QaoaError> {
        if self.gammas.len() != self.betas.len() {
            return Err(QaoaError::LengthMismatch { gammas: self.gammas.len(), betas: self.betas.len() });
        }
        Ok(())
    }

    /// `(gamma_0 .. gamma_{p-1}, beta_0 .. beta_{p-1})`
    pub fn to_params(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_params(x: &[f64]) -> Result<Self, QaoaError> {
        if x.len() % 2 != 0 {
            return Err(QaoaError::ParameterCount { expected: x.len() + 1, got: x.len() });
        }
        let p = x.len() / 2;
        Ok(Schedule { gammas: x[..p].to_vec(), betas: x[p..].to_vec() })
    }

    /// This schedule with one more layer appended.
    pub fn extended(&self, gamma: f64, beta: f64) -> Self {
        let mut s = self.clone();
        s.gammas.push(gamma);
        s.betas.push(beta);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    ExactAdjoint,
    CentralDifference { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Grid step for each new layer, radians.
    pub resolution: f64,
    pub max_iterations: usize,
    /// Stop when the projected gradient is below this in every component.
    pub gradient_tolerance: f64,
    pub lower: f64,
    pub upper: f64,
    pub gradient: GradientMethod,
    /// Measurement shots per layer; 0 keeps exact probabilities only.
    pub shots: usize,
    pub seed: u64,
    /// Train without noise and only evaluate under the noise model.
    pub train_ideal: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            resolution: std::f64::consts::PI / 6.0,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            lower: 0.0,
            upper: TAU,
            gradient: GradientMethod::ExactAdjoint,
            shots: 0,
            seed: 0,
            train_ideal: false,
        }
    }
}

impl OptimizerConfig {
    /// Points per grid axis for this resolution.
    pub fn grid_points(&self) -> Result<usize, QaoaError> {
        grid_points(self.resolution)
    }
}

pub(crate) fn grid_points(resolution: f64) -> Result<usize, QaoaError> {
    if !(resolution > 0.0) {
        return Err(QaoaError::BadResolution(resolution));
    }
    let m = (TAU / resolution).round();
    if m < 4.0 || (m * resolution - TAU).abs() > 1e-9 {
        return Err(QaoaError::BadResolution(resolution));
    }
    Ok(m as usize)
}
