//! Gate-level noise: damping after every gate and a cross-resonance CNOT
//! whose ZX rotation is tilted by residual ZZ couplings.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::channel::{damping_params_from_coherence, KrausChannel};
use super::device::DeviceModel;
use super::gates::{pauli_x, Gate};
use super::kernel::{self, M2};
use super::state::QuantumState;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    Ideal,
    Damping,
    Zz,
    DampingAndZz,
}

impl NoiseMode {
    pub fn damping(self) -> bool {
        matches!(self, NoiseMode::Damping | NoiseMode::DampingAndZz)
    }

    pub fn zz(self) -> bool {
        matches!(self, NoiseMode::Zz | NoiseMode::DampingAndZz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrScheme {
    #[default]
    SinglePulse,
    EcrTwoPulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub cr_scheme: CrScheme,
    pub spectators: bool,
    pub device: DeviceModel,
    /// Device qubit of each register qubit. Empty means the identity.
    pub mapping: Vec<usize>,
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        NoiseConfig {
            mode: NoiseMode::Ideal,
            cr_scheme: CrScheme::SinglePulse,
            spectators: false,
            device: DeviceModel::empty(),
            mapping: Vec::new(),
        }
    }

    pub fn new(mode: NoiseMode, device: DeviceModel, mapping: Vec<usize>) -> Self {
        NoiseConfig { mode, cr_scheme: CrScheme::SinglePulse, spectators: false, device, mapping }
    }

    pub fn physical(&self, q: usize) -> usize {
        self.mapping.get(q).copied().unwrap_or(q)
    }

    /// Register qubit sitting on device qubit `p`, if any.
    pub fn logical(&self, p: usize, n_qubits: usize) -> Option<usize> {
        (0..n_qubits).find(|&q| self.physical(q) == p)
    }

    /// The mapping must be injective and land on device qubits.
    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        if self.mode == NoiseMode::Ideal {
            return Ok(());
        }
        let phys: Vec<usize> = (0..n_qubits).map(|q| self.physical(q)).collect();
        for (i, p) in phys.iter().enumerate() {
            if phys[..i].contains(p) || self.device.qubit(*p).is_none() {
                return Err(SimError::BadMapping(phys.clone()));
            }
        }
        Ok(())
    }

    fn damping_channel(&self, q: usize, t_ns: f64) -> Result<KrausChannel, SimError> {
        let spec = self.device.qubit(self.physical(q)).ok_or(SimError::BadMapping(vec![self.physical(q)]))?;
        let (r, d) = damping_params_from_coherence(spec.t1(), spec.t2(), t_ns)?;
        KrausChannel::damping(q, r, d)
    }
}

/// One ZZ term of the perturbation, on register qubits, rate in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiTerm {
    pub pair: (usize, usize),
    pub xi: f64,
}

/// Evolution `exp(i (gamma Z_c X_t + Xi) t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrParams {
    /// ZX rate in rad/ns.
    pub gamma: f64,
    /// Duration in ns.
    pub duration: f64,
    pub xi: Vec<XiTerm>,
}

impl CrParams {
    /// Pulse calibrated so that `gamma * duration = pi / 4`.
    pub fn calibrated(duration: f64, xi: Vec<XiTerm>) -> Self {
        CrParams { gamma: FRAC_PI_4 / duration, duration, xi }
    }
}

/// Unitary on a list of register qubits, local bit `j` for `qubits[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    pub qubits: Vec<usize>,
    pub matrix: Vec<C>,
}

impl LocalUnitary {
    pub fn dim(&self) -> usize {
        1 << self.qubits.len()
    }

    /// `self` followed by `m1` on local bit `j`.
    fn then_1(&self, m1: &M2, j: usize) -> LocalUnitary {
        let k = self.qubits.len();
        LocalUnitary { qubits: self.qubits.clone(), matrix: kernel::matmul(&kernel::embed_1(m1, j, k), &self.matrix, self.dim()) }
    }

    fn then(&self, other: &LocalUnitary) -> LocalUnitary {
        debug_assert_eq!(self.qubits, other.qubits);
        LocalUnitary { qubits: self.qubits.clone(), matrix: kernel::matmul(&other.matrix, &self.matrix, self.dim()) }
    }

    pub fn apply<S: QuantumState + ?Sized>(&self, state: &mut S) -> Result<(), SimError> {
        state.apply_unitary(&self.qubits, &self.matrix)
    }
}

/// Local qubit order: target, control, then every other qubit named in `xi`.
fn cr_qubits(params: &CrParams, control: usize, target: usize) -> Result<Vec<usize>, SimError> {
    if control == target {
        return Err(SimError::BadPair(control, target));
    }
    let mut qs = vec![target, control];
    for t in &params.xi {
        let (a, b) = t.pair;
        let touches = a == control || a == target || b == control || b == target;
        if a == b || !touches {
            return Err(SimError::BadPair(a, b));
        }
        for q in [a, b] {
            if !qs.contains(&q) {
                qs.push(q);
            }
        }
    }
    Ok(qs)
}

/// `exp(i (gamma Z_c X_t + Xi) t)` in closed form. Every term but `X_t` is
/// diagonal, so each basis setting of the other qubits leaves a 2x2
/// rotation `exp(i t (a X + b Z + c))` on the target.
pub fn cr_unitary(params: &CrParams, control: usize, target: usize) -> Result<LocalUnitary, SimError> {
    let qubits = cr_qubits(params, control, target)?;
    let k = qubits.len();
    let dim = 1usize << k;
    let local = |q: usize| qubits.iter().position(|&x| x == q).expect("listed qubit");
    let t = params.duration;
    let mut matrix = vec![C::zero(); dim * dim];
    for rest in 0..dim / 2 {
        // local bit 0 is the target; `rest` fixes the others
        let sign = |q: usize| -> f64 {
            let j = local(q);
            if (rest << 1) >> j & 1 == 1 { -1.0 } else { 1.0 }
        };
        let a = params.gamma * sign(control);
        let mut b = 0.0;
        let mut c = 0.0;
        for term in &params.xi {
            let (p, q) = term.pair;
            if p == target {
                b += term.xi * sign(q);
            } else if q == target {
                b += term.xi * sign(p);
            } else {
                c += term.xi * sign(p) * sign(q);
            }
        }
        let r = a.hypot(b);
        let phase = C::from_polar(1.0, c * t);
        let (s, co) = (r * t).sin_cos();
        let (ax, bz) = if r > 0.0 { (a / r, b / r) } else { (0.0, 0.0) };
        // cos(rt) I + i sin(rt) (a X + b Z) / r
        let block = [
            [C::new(co, s * bz), C::new(0.0, s * ax)],
            [C::new(0.0, s * ax), C::new(co, -s * bz)],
        ];
        let base = rest << 1;
        for (i, row) in block.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                matrix[(base | i) * dim + (base | j)] = phase * x;
            }
        }
    }
    Ok(LocalUnitary { qubits, matrix })
}

pub fn cr_evolution<S: QuantumState + ?Sized>(
    state: &mut S,
    params: &CrParams,
    control: usize,
    target: usize,
) -> Result<(), SimError> {
    cr_unitary(params, control, target)?.apply(state)
}

/// `[XI] CR(-t/2) [XI] CR(t/2)`. The second segment reverses the drive, so
/// `gamma` flips sign while the static couplings in `xi` do not.
pub fn ecr_unitary(params: &CrParams, control: usize, target: usize) -> Result<LocalUnitary, SimError> {
    let half = CrParams { gamma: params.gamma, duration: params.duration / 2.0, xi: params.xi.clone() };
    let reversed = CrParams { gamma: -params.gamma, ..half.clone() };
    let first = cr_unitary(&half, control, target)?;
    let second = cr_unitary(&reversed, control, target)?;
    let x = pauli_x();
    Ok(first.then_1(&x, 1).then(&second).then_1(&x, 1))
}

pub fn ecr_two_pulse<S: QuantumState + ?Sized>(
    state: &mut S,
    params: &CrParams,
    control: usize,
    target: usize,
) -> Result<(), SimError> {
    ecr_unitary(params, control, target)?.apply(state)
}

/// ZZ terms felt during a CNOT on register qubits `control`, `target`, as
/// device-qubit pairs with rates in rad/ns. With spectators, every other
/// register qubit coupled to the control or the target adds a term.
pub fn build_xi_generator(
    config: &NoiseConfig,
    n_qubits: usize,
    control: usize,
    target: usize,
) -> Vec<((usize, usize), f64)> {
    let (pc, pt) = (config.physical(control), config.physical(target));
    let dev = &config.device;
    let mut out = Vec::new();
    if dev.edge(pc, pt).is_none() {
        log::warn!("CNOT between uncoupled device qubits {pc} and {pt}; no ZZ term");
    } else {
        out.push(((pc, pt), dev.xi_rad_per_ns(pc, pt)));
    }
    if config.spectators {
        for (hub, other) in [(pc, pt), (pt, pc)] {
            for s in dev.neighbors(hub) {
                if s != other && config.logical(s, n_qubits).is_some() {
                    out.push(((hub, s), dev.xi_rad_per_ns(hub, s)));
                }
            }
        }
    }
    out.retain(|(_, xi)| *xi != 0.0);
    out
}

/// The CNOT as realized under `config`, on register qubits. The ZX quarter
/// turn sits between `[IX]^(1/2)` and `[ZI]^(1/2)`.
pub fn noisy_cnot_unitary(
    config: &NoiseConfig,
    n_qubits: usize,
    control: usize,
    target: usize,
) -> Result<LocalUnitary, SimError> {
    if control == target || control >= n_qubits || target >= n_qubits {
        return Err(SimError::BadPair(control, target));
    }
    if !config.mode.zz() {
        return Ok(LocalUnitary { qubits: vec![control, target], matrix: Gate::Cnot { control, target }.matrix() });
    }
    let xi = build_xi_generator(config, n_qubits, control, target)
        .into_iter()
        .map(|((a, b), xi)| {
            let la = config.logical(a, n_qubits).expect("mapped control or target");
            let lb = config.logical(b, n_qubits).expect("spectators are mapped");
            XiTerm { pair: (la, lb), xi }
        })
        .collect();
    let duration = config.device.cnot_ns(config.physical(control), config.physical(target));
    let params = CrParams::calibrated(duration, xi);
    let cr = match config.cr_scheme {
        CrScheme::SinglePulse => cr_unitary(&params, control, target)?,
        CrScheme::EcrTwoPulse => ecr_unitary(&params, control, target)?,
    };
    let (p, m) = (C::new(0.5, 0.5), C::new(0.5, -0.5));
    let sqrt_x: M2 = [[p, m], [m, p]];
    let sqrt_z: M2 = [[C::one(), C::zero()], [C::zero(), C::i()]];
    // local bit 0 is the target, bit 1 the control
    let id = LocalUnitary { qubits: cr.qubits.clone(), matrix: identity(cr.dim()) };
    Ok(id.then_1(&sqrt_x, 0).then(&cr).then_1(&sqrt_z, 1))
}

fn identity(dim: usize) -> Vec<C> {
    let mut m = vec![C::zero(); dim * dim];
    for i in 0..dim {
        m[i * dim + i] = C::one();
    }
    m
}

/// Channels that follow `gate` under `config`.
pub fn damping_after(config: &NoiseConfig, gate: &Gate) -> Result<Vec<KrausChannel>, SimError> {
    if !config.mode.damping() {
        return Ok(Vec::new());
    }
    let qs = gate.qubits();
    let t = if qs.len() == 2 {
        config.device.cnot_ns(config.physical(qs[0]), config.physical(qs[1]))
    } else {
        config.device.sq_gate_ns
    };
    qs.iter().map(|&q| config.damping_channel(q, t)).collect()
}

pub fn noisy_cnot<S: QuantumState + ?Sized>(
    state: &mut S,
    config: &NoiseConfig,
    control: usize,
    target: usize,
) -> Result<(), SimError> {
    noisy_cnot_unitary(config, state.n_qubits(), control, target)?.apply(state)?;
    for ch in damping_after(config, &Gate::Cnot { control, target })? {
        state.apply_channel(&ch)?;
    }
    Ok(())
}

/// Apply one gate as `config` realizes it.
pub fn apply_noisy_gate<S: QuantumState + ?Sized>(state: &mut S, gate: &Gate, config: &NoiseConfig) -> Result<(), SimError> {
    match *gate {
        Gate::Cnot { control, target } => noisy_cnot(state, config, control, target),
        ref g => {
            state.apply_gate(g)?;
            for ch in damping_after(config, g)? {
                state.apply_channel(&ch)?;
            }
            Ok(())
        }
    }
}

pub fn run_circuit<S: QuantumState + ?Sized>(state: &mut S, gates: &[Gate], config: &NoiseConfig) -> Result<(), SimError> {
    config.validate(state.n_qubits())?;
    for g in gates {
        apply_noisy_gate(state, g, config)?;
    }
    Ok(())
}
