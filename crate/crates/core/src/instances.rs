//! Named problem instances with their device placement.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::factoring::{condition_on, factor_oracle, preprocess_number, ClauseSystem, PreprocessReport, RuleOptions};
use crate::ising::{compile_hamiltonian, Hamiltonian};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstancePreset {
    pub name: String,
    pub n: u64,
    /// Register size the instance is run at.
    pub expected_unknowns: usize,
    /// Physical device qubit for each logical qubit.
    pub mapping: Vec<usize>,
}

/// The four hardware instances.
pub fn presets() -> Vec<InstancePreset> {
    [
        ("1099551473989", 1099551473989u64, vec![0, 1, 2]),
        ("3127", 3127, vec![0, 1, 2, 3]),
        ("6557", 6557, vec![6, 7, 12, 8, 3]),
        ("297491", 297491, vec![6, 7, 8, 12]),
    ]
    .into_iter()
    .map(|(name, n, mapping)| InstancePreset { name: name.into(), n, expected_unknowns: mapping.len(), mapping })
    .collect()
}

/// Preset by name or by the number itself.
pub fn find_preset(key: &str) -> Option<InstancePreset> {
    presets().into_iter().find(|p| p.name == key || p.n.to_string() == key)
}

/// A preprocessed instance ready for simulation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: BigUint,
    pub system: ClauseSystem,
    pub report: PreprocessReport,
    /// Unknowns left by the rules, before any conditioning.
    pub unknowns_after_rules: usize,
    pub hamiltonian: Hamiltonian,
}

impl Instance {
    /// Preprocess `n` and, when `register` is given and the rules leave more
    /// unknowns than that, pin the surplus to the trial-division factors.
    pub fn prepare(n: &BigUint, register: Option<usize>, max_passes: usize) -> Result<Self, Error> {
        Self::prepare_with(n, register, max_passes, &RuleOptions::default())
    }

    pub fn prepare_with(
        n: &BigUint,
        register: Option<usize>,
        max_passes: usize,
        opts: &RuleOptions,
    ) -> Result<Self, Error> {
        let (mut system, report) = preprocess_number(n, max_passes, opts)?;
        let unknowns_after_rules = system.unknowns().len();
        if let Some(keep) = register {
            if unknowns_after_rules > keep {
                let (a, b) = factor_oracle(n)?;
                let truth = system
                    .encode_factors(&b, &a)
                    .or_else(|| system.encode_factors(&a, &b))
                    .ok_or(crate::factoring::FactoringError::NotASolution)?;
                system = condition_on(&system, &truth, keep)?;
            }
        }
        let hamiltonian = compile_hamiltonian(&system)?;
        Ok(Instance { n: n.clone(), system, report, unknowns_after_rules, hamiltonian })
    }

    pub fn from_preset(preset: &InstancePreset, max_passes: usize) -> Result<Self, Error> {
        Self::prepare(&BigUint::from(preset.n), Some(preset.expected_unknowns), max_passes)
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }
}
