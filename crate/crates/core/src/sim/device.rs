use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// CNOT duration used when an edge has none on record.
pub const DEFAULT_CNOT_NS: f64 = 315.0;
/// Single-qubit gate duration used when a model omits it.
pub const DEFAULT_SQ_GATE_NS: f64 = 35.0;

const BUNDLED: &str = include_str!("../../data/device_default.json");

/// Coherence times of one qubit; `null` means not characterized, which is
/// simulated as infinite coherence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub id: usize,
    #[serde(deserialize_with = "Option::deserialize")]
    pub t1_us: Option<f64>,
    #[serde(deserialize_with = "Option::deserialize")]
    pub t2_us: Option<f64>,
}

impl QubitSpec {
    pub fn t1(&self) -> f64 {
        self.t1_us.unwrap_or(f64::INFINITY)
    }

    pub fn t2(&self) -> f64 {
        self.t2_us.unwrap_or(f64::INFINITY)
    }
}

/// Coupler between two qubits. `xi_khz` is the residual ZZ rate `xi / 2 pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub a: usize,
    pub b: usize,
    #[serde(deserialize_with = "Option::deserialize")]
    pub xi_khz: Option<f64>,
    #[serde(deserialize_with = "Option::deserialize")]
    pub cnot_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub qubits: Vec<QubitSpec>,
    pub edges: Vec<EdgeSpec>,
    pub sq_gate_ns: f64,
}

/// `xi / 2 pi` in kHz to angular rate in rad/ns.
pub fn khz_to_rad_per_ns(khz: f64) -> f64 {
    2.0 * PI * khz * 1e-6
}

impl DeviceModel {
    /// The 20-qubit device the hardware runs used.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled device file is valid")
    }

    /// A model with no qubits, for runs that never consult the device.
    pub fn empty() -> Self {
        DeviceModel { qubits: Vec::new(), edges: Vec::new(), sq_gate_ns: DEFAULT_SQ_GATE_NS }
    }

    /// `n` identical, fully connected qubits.
    pub fn uniform(n: usize, t1_us: f64, t2_us: f64, xi_khz: f64, cnot_ns: f64, sq_gate_ns: f64) -> Result<Self, SimError> {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        let qubits = (0..n).map(|id| QubitSpec { id, t1_us: finite(t1_us), t2_us: finite(t2_us) }).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push(EdgeSpec { a, b, xi_khz: Some(xi_khz), cnot_ns: Some(cnot_ns) });
            }
        }
        let model = DeviceModel { qubits, edges, sq_gate_ns };
        model.validate()?;
        Ok(model)
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let model: DeviceModel = serde_json::from_str(s).map_err(schema_error)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device model serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mut ids = BTreeSet::new();
        for q in &self.qubits {
            if !ids.insert(q.id) {
                return Err(SimError::Schema(format!("qubits[{}].id", q.id)));
            }
            let (t1, t2) = (q.t1(), q.t2());
            if t1 <= 0.0 || t2 <= 0.0 || t2 > 2.0 * t1 {
                return Err(SimError::Coherence { qubit: q.id, t1_us: t1, t2_us: t2 });
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if e.a == e.b || !ids.contains(&e.a) || !ids.contains(&e.b) {
                return Err(SimError::Schema(format!("edges[{}-{}]", e.a, e.b)));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(SimError::Schema(format!("edges[{}-{}] duplicated", e.a, e.b)));
            }
            if e.cnot_ns.is_some_and(|t| !(t > 0.0)) {
                return Err(SimError::Schema(format!("edges[{}-{}].cnot_ns", e.a, e.b)));
            }
        }
        if !(self.sq_gate_ns >= 0.0) {
            return Err(SimError::Schema("sq_gate_ns".into()));
        }
        Ok(())
    }

    pub fn qubit(&self, id: usize) -> Option<&QubitSpec> {
        self.qubits.iter().find(|q| q.id == id)
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&EdgeSpec> {
        self.edges.iter().find(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a))
    }

    /// Coupled qubits, ascending.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| if e.a == q { Some(e.b) } else if e.b == q { Some(e.a) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    /// Residual ZZ rate in rad/ns; zero when there is no such coupler.
    pub fn xi_rad_per_ns(&self, a: usize, b: usize) -> f64 {
        self.edge(a, b).and_then(|e| e.xi_khz).map_or(0.0, khz_to_rad_per_ns)
    }

    pub fn cnot_ns(&self, a: usize, b: usize) -> f64 {
        self.edge(a, b).and_then(|e| e.cnot_ns).unwrap_or(DEFAULT_CNOT_NS)
    }
}

/// Name the offending key when serde reports one.
fn schema_error(e: serde_json::Error) -> SimError {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(start) = msg.find(marker) {
            let rest = &msg[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return SimError::Schema(rest[..end].to_string());
            }
        }
    }
    SimError::Schema(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_model() {
        let d = DeviceModel::bundled();
        assert_eq!(d.qubits.len(), 20);
        assert_eq!(d.edge(1, 0).unwrap().xi_khz, Some(275.1));
        assert_eq!(d.cnot_ns(7, 8), 412.0);
        assert_eq!(d.cnot_ns(0, 19), DEFAULT_CNOT_NS);
        assert_eq!(d.neighbors(7), vec![6, 8, 12]);
        assert_eq!(d.xi_rad_per_ns(0, 2), 0.0);
    }

    #[test]
    fn missing_key_is_named() {
        let bad = r#"{"qubits":[{"id":0,"t2_us":1.0}],"edges":[],"sq_gate_ns":35}"#;
        assert_eq!(DeviceModel::from_json(bad), Err(SimError::Schema("t1_us".into())));
    }

    #[test]
    fn coherence_violation_names_qubit() {
        let bad = r#"{"qubits":[{"id":4,"t1_us":10.0,"t2_us":25.0}],"edges":[],"sq_gate_ns":35}"#;
        assert!(matches!(DeviceModel::from_json(bad), Err(SimError::Coherence { qubit: 4, .. })));
    }

    #[test]
    fn round_trip() {
        let d = DeviceModel::bundled();
        assert_eq!(DeviceModel::from_json(&d.to_json()).unwrap(), d);
    }
}
