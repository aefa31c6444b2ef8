use num_complex::Complex64 as C;
use num_traits::Zero;

use super::kernel::M2;
use super::state::DensityMatrix;
use super::SimError;

const COMPLETENESS_TOL: f64 = 1e-12;

/// Single-qubit channel `rho -> sum_m E_m rho E_m^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<M2>,
    qubit: usize,
}

impl KrausChannel {
    pub fn new(operators: Vec<M2>, qubit: usize) -> Result<Self, SimError> {
        let ch = KrausChannel { operators, qubit };
        let err = ch.completeness_error();
        if !(err < COMPLETENESS_TOL) {
            return Err(SimError::InvalidChannel(format!("sum of E^dagger E deviates from identity by {err:e}")));
        }
        Ok(ch)
    }

    /// Relaxation toward `|0>` with probability `eps_r` and pure dephasing
    /// with probability `eps_d`.
    pub fn damping(qubit: usize, eps_r: f64, eps_d: f64) -> Result<Self, SimError> {
        if !(eps_r >= 0.0 && eps_d >= 0.0 && eps_r + eps_d <= 1.0 + 1e-15) {
            return Err(SimError::InvalidChannel(format!("eps_r = {eps_r}, eps_d = {eps_d}")));
        }
        let keep = (1.0 - eps_r - eps_d).max(0.0).sqrt();
        let z = C::zero();
        let r = |x: f64| C::new(x, 0.0);
        Self::new(
            vec![
                [[r(1.0), z], [z, r(keep)]],
                [[z, r(eps_r.sqrt())], [z, z]],
                [[z, z], [z, r(eps_d.sqrt())]],
            ],
            qubit,
        )
    }

    pub fn operators(&self) -> &[M2] {
        &self.operators
    }

    pub fn qubit(&self) -> usize {
        self.qubit
    }

    /// Max-norm distance of `sum E^dagger E` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let mut s = [[C::zero(); 2]; 2];
        for e in &self.operators {
            for i in 0..2 {
                for j in 0..2 {
                    s[i][j] += e[0][i].conj() * e[0][j] + e[1][i].conj() * e[1][j];
                }
            }
        }
        let mut worst = 0.0f64;
        for (i, row) in s.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - id).norm());
            }
        }
        worst
    }

    /// `sum_m E_m (x) conj(E_m)` on the (column bit, row bit) pair, local
    /// index `c + 2 r`.
    pub fn superoperator(&self) -> [C; 16] {
        let mut s = [C::zero(); 16];
        for e in &self.operators {
            for r in 0..2 {
                for c in 0..2 {
                    for r2 in 0..2 {
                        for c2 in 0..2 {
                            s[(c + 2 * r) * 4 + c2 + 2 * r2] += e[r][r2] * e[c][c2].conj();
                        }
                    }
                }
            }
        }
        s
    }
}

/// Per-gate relaxation and dephasing probabilities. Coherence times in
/// microseconds (infinite allowed), gate time in nanoseconds.
pub fn damping_params_from_coherence(t1_us: f64, t2_us: f64, t_gate_ns: f64) -> Result<(f64, f64), SimError> {
    let bad = |why: &str| Err(SimError::InvalidCoherence(format!("T1 = {t1_us}, T2 = {t2_us}, t = {t_gate_ns}: {why}")));
    if !(t1_us > 0.0 && t2_us > 0.0) {
        return bad("coherence times must be positive");
    }
    if !(t_gate_ns >= 0.0) || t_gate_ns.is_infinite() {
        return bad("gate time must be finite and non-negative");
    }
    // 1/T2 >= 1/(2 T1), with slack for rounding
    let rate_phi = 1.0 / t2_us - 0.5 / t1_us;
    if rate_phi < -1e-12 / t2_us.min(t1_us) {
        return bad("T2 exceeds 2 T1");
    }
    let t_us = t_gate_ns * 1e-3;
    let eps_r = -(-t_us / t1_us).exp_m1();
    let eps_d = -(-t_us * rate_phi.max(0.0)).exp_m1();
    Ok((eps_r, eps_d))
}

pub fn apply_damping_channel(rho: &mut DensityMatrix, qubit: usize, eps_r: f64, eps_d: f64) -> Result<(), SimError> {
    use super::state::QuantumState;
    rho.apply_channel(&KrausChannel::damping(qubit, eps_r, eps_d)?)
}
