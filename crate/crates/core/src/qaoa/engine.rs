use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::ansatz::{layer_slots, prep_slots, Slot};
use super::{grid_points, GradientMethod, QaoaError, Schedule};
use crate::ising::{Hamiltonian, IsingError, MAX_QUBITS};
use crate::sim::kernel::{self, M2};
use crate::sim::{
    damping_after, noisy_cnot_unitary, rx, rz, DensityMatrix, Gate, LocalUnitary, NoiseConfig, NoiseMode, QuantumState, StateVector,
};

/// Bytes of density-matrix snapshots the mixed adjoint may hold before it
/// falls back to central differences.
const SNAPSHOT_BUDGET: usize = 512 << 20;

/// Default step of the finite-difference fallback.
const FALLBACK_STEP: f64 = 1e-5;

/// How an [`Evaluator`] represents the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Statevector with the whole cost layer applied as one diagonal phase.
    /// Noiseless only.
    Fused,
    /// Statevector, gate by gate. Unitary noise only.
    PureGates,
    /// Density matrix, gate by gate.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    Z,
    X,
}

#[derive(Debug, Clone)]
enum Action {
    Fixed { qubits: Vec<usize>, m: Vec<C>, adj: Vec<C> },
    /// Rotation by `scale` times the layer's gamma (`Z`) or beta (`X`).
    Rot { qubit: usize, axis: Axis, scale: f64 },
}

#[derive(Debug, Clone)]
struct Op {
    action: Action,
    /// Superoperators applied after the gate, with their adjoints.
    channels: Vec<(usize, [C; 16], [C; 16])>,
}

fn flat(m: &M2) -> [C; 4] {
    [m[0][0], m[0][1], m[1][0], m[1][1]]
}

fn rotation(axis: Axis, theta: f64) -> M2 {
    match axis {
        Axis::Z => rz(theta),
        Axis::X => rx(theta),
    }
}

fn superop_adjoint(s: &[C; 16]) -> [C; 16] {
    let mut out = [C::new(0.0, 0.0); 16];
    for i in 0..4 {
        for j in 0..4 {
            out[i * 4 + j] = s[j * 4 + i].conj();
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Reg {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl Reg {
    fn unitary(&mut self, qubits: &[usize], m: &[C]) -> Result<(), QaoaError> {
        match self {
            Reg::Pure(s) => s.apply_unitary(qubits, m)?,
            Reg::Mixed(r) => r.apply_unitary(qubits, m)?,
        }
        Ok(())
    }

    fn probabilities(&self) -> Vec<f64> {
        match self {
            Reg::Pure(s) => s.probabilities(),
            Reg::Mixed(r) => r.probabilities(),
        }
    }
}

/// Evaluates energies, gradients and distributions of the ansatz for one
/// Hamiltonian under one noise model.
#[derive(Debug, Clone)]
pub struct Evaluator {
    n: usize,
    diag: Vec<f64>,
    backend: Backend,
    prep: Vec<Op>,
    layer: Vec<Op>,
}

impl Evaluator {
    /// Picks the cheapest backend that represents `noise` exactly.
    pub fn new(h: &Hamiltonian, noise: &NoiseConfig) -> Result<Self, QaoaError> {
        let backend = match noise.mode {
            NoiseMode::Ideal => Backend::Fused,
            NoiseMode::Zz => Backend::PureGates,
            NoiseMode::Damping | NoiseMode::DampingAndZz => Backend::Mixed,
        };
        Self::with_backend(h, noise, backend)
    }

    pub fn with_backend(h: &Hamiltonian, noise: &NoiseConfig, backend: Backend) -> Result<Self, QaoaError> {
        let n = h.n_qubits();
        if n > MAX_QUBITS {
            return Err(IsingError::TooManyQubits(n).into());
        }
        noise.validate(n)?;
        match backend {
            Backend::Fused if noise.mode != NoiseMode::Ideal => return Err(QaoaError::Backend(backend)),
            Backend::PureGates if noise.mode.damping() => return Err(QaoaError::Backend(backend)),
            Backend::Mixed => DensityMatrix::check_size(n)?,
            _ => {}
        }
        let mut cnots = BTreeMap::new();
        let mut compile = |slots: Vec<Slot>| -> Result<Vec<Op>, QaoaError> {
            slots.into_iter().map(|slot| compile_slot(slot, noise, n, &mut cnots)).collect()
        };
        let prep = compile(prep_slots(n))?;
        let layer = compile(layer_slots(h))?;
        Ok(Evaluator { n, diag: h.diagonal(), backend, prep, layer })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Diagonal of the cost Hamiltonian.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn initial(&self) -> Reg {
        match self.backend {
            Backend::Mixed => Reg::Mixed(DensityMatrix::new(self.n)),
            _ => Reg::Pure(StateVector::new(self.n)),
        }
    }

    fn run(&self, s: &Schedule) -> Result<Reg, QaoaError> {
        s.check()?;
        if self.backend == Backend::Fused {
            let mut psi = StateVector::plus(self.n);
            for (&g, &b) in s.gammas.iter().zip(&s.betas) {
                self.fused_layer(&mut psi, g, b);
            }
            return Ok(Reg::Pure(psi));
        }
        let mut reg = self.initial();
        for op in &self.prep {
            apply_op(&mut reg, op, 0.0, 0.0)?;
        }
        for (&g, &b) in s.gammas.iter().zip(&s.betas) {
            self.gate_layer(&mut reg, g, b)?;
        }
        Ok(reg)
    }

    fn gate_layer(&self, reg: &mut Reg, gamma: f64, beta: f64) -> Result<(), QaoaError> {
        for op in &self.layer {
            apply_op(reg, op, gamma, beta)?;
        }
        Ok(())
    }

    fn phase(&self, psi: &mut StateVector, gamma: f64) {
        for (a, e) in psi.amplitudes_mut().iter_mut().zip(&self.diag) {
            *a *= C::from_polar(1.0, -gamma * e);
        }
    }

    fn mixer(&self, psi: &mut StateVector, beta: f64) {
        let m = rx(2.0 * beta);
        for q in 0..self.n {
            kernel::apply_1(psi.amplitudes_mut(), q, &m);
        }
    }

    fn fused_layer(&self, psi: &mut StateVector, gamma: f64, beta: f64) {
        self.phase(psi, gamma);
        self.mixer(psi, beta);
    }

    fn energy_of(&self, reg: &Reg) -> f64 {
        reg.probabilities().iter().zip(&self.diag).map(|(p, e)| p * e).sum()
    }

    /// `<H>` in the final state.
    pub fn energy(&self, s: &Schedule) -> Result<f64, QaoaError> {
        Ok(self.energy_of(&self.run(s)?))
    }

    /// Final computational-basis distribution.
    pub fn probabilities(&self, s: &Schedule) -> Result<Vec<f64>, QaoaError> {
        Ok(self.run(s)?.probabilities())
    }

    /// Derivatives in the order of [`Schedule::to_params`].
    pub fn gradient(&self, s: &Schedule, method: GradientMethod) -> Result<Vec<f64>, QaoaError> {
        Ok(self.energy_and_gradient(s, method)?.1)
    }

    pub fn energy_and_gradient(&self, s: &Schedule, method: GradientMethod) -> Result<(f64, Vec<f64>), QaoaError> {
        s.check()?;
        match method {
            GradientMethod::CentralDifference { h } => self.central_difference(s, h),
            GradientMethod::ExactAdjoint => match self.backend {
                Backend::Fused => Ok(self.fused_adjoint(s)),
                Backend::PureGates => self.pure_adjoint(s),
                Backend::Mixed => {
                    let rots = self.layer.iter().filter(|op| matches!(op.action, Action::Rot { .. })).count();
                    let bytes = rots * s.p() * (16usize << (2 * self.n));
                    if bytes > SNAPSHOT_BUDGET {
                        log::warn!("adjoint snapshots need {bytes} bytes; using central differences");
                        self.central_difference(s, FALLBACK_STEP)
                    } else {
                        self.mixed_adjoint(s)
                    }
                }
            },
        }
    }

    fn central_difference(&self, s: &Schedule, h: f64) -> Result<(f64, Vec<f64>), QaoaError> {
        if !(h > 0.0) {
            return Err(QaoaError::BadStep(h));
        }
        let x = s.to_params();
        let mut grad = vec![0.0; x.len()];
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            grad[i] = (self.energy(&Schedule::from_params(&xp)?)? - self.energy(&Schedule::from_params(&xm)?)?) / (2.0 * h);
        }
        Ok((self.energy(s)?, grad))
    }

    fn fused_adjoint(&self, s: &Schedule) -> (f64, Vec<f64>) {
        let p = s.p();
        let Ok(Reg::Pure(mut psi)) = self.run(s) else { unreachable!("fused runs are pure") };
        let mut lam = psi.clone();
        for (a, e) in lam.amplitudes_mut().iter_mut().zip(&self.diag) {
            *a *= e;
        }
        let energy = psi.inner(&lam).re;
        let mut grad = vec![0.0; 2 * p];
        for l in (0..p).rev() {
            // d/d beta of exp(-i beta sum X)
            let amps = psi.amplitudes();
            let bx: C = lam
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(x, l)| l.conj() * (0..self.n).map(|q| amps[x ^ (1 << q)]).sum::<C>())
                .sum();
            grad[p + l] = 2.0 * bx.im;
            self.mixer(&mut psi, -s.betas[l]);
            self.mixer(&mut lam, -s.betas[l]);
            let ez: C = lam.amplitudes().iter().zip(psi.amplitudes()).zip(&self.diag).map(|((l, a), e)| l.conj() * a * e).sum();
            grad[l] = 2.0 * ez.im;
            self.phase(&mut psi, -s.gammas[l]);
            self.phase(&mut lam, -s.gammas[l]);
        }
        (energy, grad)
    }

    fn pure_adjoint(&self, s: &Schedule) -> Result<(f64, Vec<f64>), QaoaError> {
        let p = s.p();
        let Reg::Pure(mut psi) = self.run(s)? else { unreachable!("pure backend") };
        let mut lam = psi.clone();
        for (a, e) in lam.amplitudes_mut().iter_mut().zip(&self.diag) {
            *a *= e;
        }
        let energy = psi.inner(&lam).re;
        let mut grad = vec![0.0; 2 * p];
        for l in (0..p).rev() {
            for op in self.layer.iter().rev() {
                match &op.action {
                    Action::Fixed { qubits, adj, .. } => {
                        psi.apply_unitary(qubits, adj)?;
                        lam.apply_unitary(qubits, adj)?;
                    }
                    &Action::Rot { qubit, axis, scale } => {
                        let (slot, value) = match axis {
                            Axis::Z => (l, s.gammas[l]),
                            Axis::X => (p + l, s.betas[l]),
                        };
                        let amps = psi.amplitudes();
                        let m = 1usize << qubit;
                        let g: C = lam
                            .amplitudes()
                            .iter()
                            .enumerate()
                            .map(|(x, l)| {
                                l.conj()
                                    * match axis {
                                        Axis::Z if x & m != 0 => -amps[x],
                                        Axis::Z => amps[x],
                                        Axis::X => amps[x ^ m],
                                    }
                            })
                            .sum();
                        grad[slot] += scale * g.im;
                        let back = flat(&rotation(axis, -scale * value));
                        psi.apply_unitary(&[qubit], &back)?;
                        lam.apply_unitary(&[qubit], &back)?;
                    }
                }
            }
        }
        Ok((energy, grad))
    }

    fn mixed_adjoint(&self, s: &Schedule) -> Result<(f64, Vec<f64>), QaoaError> {
        let p = s.p();
        let mut reg = self.initial();
        for op in &self.prep {
            apply_op(&mut reg, op, 0.0, 0.0)?;
        }
        let Reg::Mixed(mut rho) = reg else { unreachable!("mixed backend") };
        // state right after each rotation, before its channels
        let mut snapshots = Vec::new();
        for (&g, &b) in s.gammas.iter().zip(&s.betas) {
            for op in &self.layer {
                match &op.action {
                    Action::Fixed { qubits, m, .. } => rho.apply_unitary(qubits, m)?,
                    &Action::Rot { qubit, axis, scale } => {
                        let value = if axis == Axis::Z { g } else { b };
                        rho.apply_unitary(&[qubit], &flat(&rotation(axis, scale * value)))?;
                        snapshots.push(rho.matrix().to_vec());
                    }
                }
                for (q, sup, _) in &op.channels {
                    rho.apply_superop(*q, sup);
                }
            }
        }
        let energy = rho.probabilities().iter().zip(&self.diag).map(|(p, e)| p * e).sum();
        let dim = 1usize << self.n;
        let mut obs = DensityMatrix::new(self.n);
        for (i, e) in self.diag.iter().enumerate() {
            obs.matrix_mut()[i * dim + i] = C::new(*e, 0.0);
        }
        let mut grad = vec![0.0; 2 * p];
        for l in (0..p).rev() {
            for op in self.layer.iter().rev() {
                for (q, _, adj) in op.channels.iter().rev() {
                    obs.apply_superop(*q, adj);
                }
                match &op.action {
                    Action::Fixed { qubits, adj, .. } => obs.apply_unitary(qubits, adj)?,
                    &Action::Rot { qubit, axis, scale } => {
                        let (slot, value) = match axis {
                            Axis::Z => (l, s.gammas[l]),
                            Axis::X => (p + l, s.betas[l]),
                        };
                        let sigma = snapshots.pop().expect("one snapshot per rotation");
                        let t = commutator_trace(obs.matrix(), &sigma, dim, qubit, axis);
                        grad[slot] += 0.5 * scale * t.im;
                        obs.apply_unitary(&[qubit], &flat(&rotation(axis, -scale * value)))?;
                    }
                }
            }
        }
        Ok((energy, grad))
    }

    /// Energies over a full grid for the layer after `prefix`.
    pub fn layer_grid(&self, prefix: &Schedule, resolution: f64) -> Result<LandscapeGrid, QaoaError> {
        let m = grid_points(resolution)?;
        let base = self.run(prefix)?;
        let mut energies = Vec::with_capacity(m * m);
        for i in 0..m {
            let gamma = i as f64 * resolution;
            match &base {
                Reg::Pure(psi) if self.backend == Backend::Fused => {
                    let mut phased = psi.clone();
                    self.phase(&mut phased, gamma);
                    for j in 0..m {
                        let mut st = phased.clone();
                        self.mixer(&mut st, j as f64 * resolution);
                        energies.push(self.energy_of(&Reg::Pure(st)));
                    }
                }
                _ => {
                    for j in 0..m {
                        let mut reg = base.clone();
                        self.gate_layer(&mut reg, gamma, j as f64 * resolution)?;
                        energies.push(self.energy_of(&reg));
                    }
                }
            }
        }
        Ok(LandscapeGrid { layer: prefix.p() + 1, resolution, points: m, prefix: prefix.clone(), energies })
    }
}

fn compile_slot(
    slot: Slot,
    noise: &NoiseConfig,
    n: usize,
    cnots: &mut BTreeMap<(usize, usize), LocalUnitary>,
) -> Result<Op, QaoaError> {
    let (action, gate) = match slot {
        Slot::Fixed(Gate::Cnot { control, target }) => {
            let key = (control, target);
            if !cnots.contains_key(&key) {
                cnots.insert(key, noisy_cnot_unitary(noise, n, control, target)?);
            }
            let u = &cnots[&key];
            (fixed(u.qubits.clone(), u.matrix.clone()), Gate::Cnot { control, target })
        }
        Slot::Fixed(g) => (fixed(g.qubits(), g.matrix()), g),
        Slot::CostRz { qubit, scale } => (Action::Rot { qubit, axis: Axis::Z, scale }, Gate::Rz(qubit, 0.0)),
        Slot::MixerRx { qubit, scale } => (Action::Rot { qubit, axis: Axis::X, scale }, Gate::Rx(qubit, 0.0)),
    };
    let channels = damping_after(noise, &gate)?
        .into_iter()
        .map(|ch| {
            let s = ch.superoperator();
            (ch.qubit(), s, superop_adjoint(&s))
        })
        .collect();
    Ok(Op { action, channels })
}

fn fixed(qubits: Vec<usize>, m: Vec<C>) -> Action {
    let adj = kernel::adjoint(&m, 1 << qubits.len());
    Action::Fixed { qubits, m, adj }
}

fn apply_op(reg: &mut Reg, op: &Op, gamma: f64, beta: f64) -> Result<(), QaoaError> {
    match &op.action {
        Action::Fixed { qubits, m, .. } => reg.unitary(qubits, m)?,
        &Action::Rot { qubit, axis, scale } => {
            let value = if axis == Axis::Z { gamma } else { beta };
            reg.unitary(&[qubit], &flat(&rotation(axis, scale * value)))?;
        }
    }
    if let Reg::Mixed(rho) = reg {
        for (q, sup, _) in &op.channels {
            rho.apply_superop(*q, sup);
        }
    }
    Ok(())
}

/// `tr(L (G S - S G))` for a Pauli `G` on `qubit`, both matrices row-major.
fn commutator_trace(l: &[C], s: &[C], dim: usize, qubit: usize, axis: Axis) -> C {
    let m = 1usize << qubit;
    let mut acc = C::new(0.0, 0.0);
    for r in 0..dim {
        for c in 0..dim {
            let gs_minus_sg = match axis {
                Axis::Z => {
                    let z = |x: usize| if x & m != 0 { -1.0 } else { 1.0 };
                    s[c * dim + r] * (z(c) - z(r))
                }
                Axis::X => s[(c ^ m) * dim + r] - s[c * dim + (r ^ m)],
            };
            acc += l[r * dim + c] * gs_minus_sg;
        }
    }
    acc
}

/// Energies of one layer over a uniform `(gamma, beta)` grid with the
/// earlier layers fixed. Entry `i * points + j` holds
/// `gamma = i * resolution`, `beta = j * resolution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    /// 1-based index of the swept layer.
    pub layer: usize,
    pub resolution: f64,
    pub points: usize,
    pub prefix: Schedule,
    pub energies: Vec<f64>,
}

impl LandscapeGrid {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * self.resolution
    }

    pub fn energy(&self, i: usize, j: usize) -> f64 {
        self.energies[i * self.points + j]
    }

    /// `(gamma, beta, energy)` of the lowest entry; ties go to the smallest
    /// `(gamma, beta)`.
    pub fn argmin(&self) -> (f64, f64, f64) {
        self.argmin_where(|_, _| true).expect("grid is not empty")
    }

    /// [`Self::argmin`] over the entries `(i, j)` accepted by `keep`.
    pub fn argmin_where(&self, keep: impl Fn(usize, usize) -> bool) -> Option<(f64, f64, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &e) in self.energies.iter().enumerate() {
            if keep(k / self.points, k % self.points) && best.map_or(true, |(_, b)| e < b - 1e-12) {
                best = Some((k, e));
            }
        }
        best.map(|(k, e)| (self.angle(k / self.points), self.angle(k % self.points), e))
    }
}
