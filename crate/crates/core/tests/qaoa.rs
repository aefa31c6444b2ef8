use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqf_core::factoring::DEFAULT_MAX_PASSES;
use vqf_core::instances::{find_preset, Instance};
use vqf_core::qaoa::*;
use vqf_core::sim::*;

fn instance(name: &str) -> Instance {
    Instance::from_preset(&find_preset(name).unwrap(), DEFAULT_MAX_PASSES).unwrap()
}

fn instances() -> Vec<(Instance, Vec<usize>)> {
    ["1099551473989", "3127", "6557"]
        .into_iter()
        .map(|n| (instance(n), find_preset(n).unwrap().mapping))
        .collect()
}

fn random_schedule(rng: &mut ChaCha8Rng, p: usize) -> Schedule {
    Schedule::new((0..p).map(|_| rng.gen_range(0.0..TAU)).collect(), (0..p).map(|_| rng.gen_range(0.0..TAU)).collect()).unwrap()
}

fn noisy(mode: NoiseMode, mapping: &[usize]) -> NoiseConfig {
    NoiseConfig::new(mode, DeviceModel::bundled(), mapping.to_vec())
}

#[test]
fn trivial_schedules_give_the_uniform_state() {
    for (inst, mapping) in instances() {
        let h = &inst.hamiltonian;
        let n = h.n_qubits();
        let mean = h.diagonal().iter().sum::<f64>() / (1u64 << n) as f64;
        for noise in [NoiseConfig::ideal(), noisy(NoiseMode::Zz, &mapping)] {
            let ev = Evaluator::new(h, &noise).unwrap();
            for p in [0, 1, 3] {
                let s = Schedule::zeros(p);
                let probs = ev.probabilities(&s).unwrap();
                if p == 0 || noise.mode == NoiseMode::Ideal {
                    assert!(probs.iter().all(|&x| (x - 1.0 / (1u64 << n) as f64).abs() < 1e-12));
                    assert!((ev.energy(&s).unwrap() - mean).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn backends_agree_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (inst, _) in instances() {
        let h = &inst.hamiltonian;
        let ideal = NoiseConfig::ideal();
        let evs: Vec<Evaluator> = [Backend::Fused, Backend::PureGates, Backend::Mixed]
            .into_iter()
            .map(|b| Evaluator::with_backend(h, &ideal, b).unwrap())
            .collect();
        for _ in 0..5 {
            let s = random_schedule(&mut rng, 3);
            let (e0, g0) = evs[0].energy_and_gradient(&s, GradientMethod::ExactAdjoint).unwrap();
            for ev in &evs[1..] {
                let (e, g) = ev.energy_and_gradient(&s, GradientMethod::ExactAdjoint).unwrap();
                assert!((e - e0).abs() < 1e-10);
                assert!(g.iter().zip(&g0).all(|(a, b)| (a - b).abs() < 1e-9));
            }
        }
    }
    let h = &instance("3127").hamiltonian;
    let zz = noisy(NoiseMode::Zz, &[0, 1, 2, 3]);
    assert_eq!(Evaluator::with_backend(h, &zz, Backend::Fused).unwrap_err(), QaoaError::Backend(Backend::Fused));
    let damp = noisy(NoiseMode::Damping, &[0, 1, 2, 3]);
    assert!(Evaluator::with_backend(h, &damp, Backend::PureGates).is_err());
}

#[test]
fn ideal_energy_is_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (inst, _) in instances() {
        let ev = Evaluator::new(&inst.hamiltonian, &NoiseConfig::ideal()).unwrap();
        for _ in 0..100 {
            let p = rng.gen_range(1..4);
            let s = random_schedule(&mut rng, p);
            let e = ev.energy(&s).unwrap();
            let k = rng.gen_range(0..p);
            let mut sb = s.clone();
            sb.betas[k] += PI;
            let mut sg = s.clone();
            sg.gammas[k] += TAU;
            assert!((ev.energy(&sb).unwrap() - e).abs() < 1e-9);
            assert!((ev.energy(&sg).unwrap() - e).abs() < 1e-9);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fd = GradientMethod::CentralDifference { h: 1e-5 };
    for (inst, mapping) in instances() {
        for noise in [NoiseConfig::ideal(), noisy(NoiseMode::Damping, &mapping), noisy(NoiseMode::Zz, &mapping)] {
            let ev = Evaluator::new(&inst.hamiltonian, &noise).unwrap();
            for _ in 0..4 {
                let s = random_schedule(&mut rng, 2);
                let g = ev.gradient(&s, GradientMethod::ExactAdjoint).unwrap();
                let r = ev.gradient(&s, fd).unwrap();
                let scale = r.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
                for (a, b) in g.iter().zip(&r) {
                    assert!((a - b).abs() / scale < 1e-4, "{:?}: {a} vs {b}", noise.mode);
                }
            }
        }
    }
}

#[test]
fn gradient_special_cases() {
    let ev = Evaluator::new(&instance("3127").hamiltonian, &NoiseConfig::ideal()).unwrap();
    let s = Schedule::new(vec![0.0; 3], vec![0.4, 1.9, 5.0]).unwrap();
    // gamma = 0 keeps the state at |+>, an eigenstate of every mixer
    let g = ev.gradient(&s, GradientMethod::ExactAdjoint).unwrap();
    assert!(g[3..].iter().all(|g| g.abs() < 1e-12));
    let fd = ev.gradient(&s, GradientMethod::CentralDifference { h: 1e-5 }).unwrap();
    assert!(g.iter().zip(&fd).all(|(a, b)| (a - b).abs() < 1e-6));
    let s = Schedule::new(vec![0.3, 2.2], vec![1.0, 0.1]).unwrap();
    let mut shifted = s.clone();
    shifted.gammas[1] += TAU;
    let a = ev.gradient(&s, GradientMethod::ExactAdjoint).unwrap();
    let b = ev.gradient(&shifted, GradientMethod::ExactAdjoint).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    assert_eq!(ev.gradient(&s, GradientMethod::CentralDifference { h: 0.0 }), Err(QaoaError::BadStep(0.0)));
    assert_eq!(Schedule::new(vec![0.0], vec![]), Err(QaoaError::LengthMismatch { gammas: 1, betas: 0 }));
}

#[test]
fn grid_sizes_and_prefix_point() {
    let inst = instance("1099551473989");
    let ev = Evaluator::new(&inst.hamiltonian, &NoiseConfig::ideal()).unwrap();
    assert_eq!(ev.layer_grid(&Schedule::default(), PI / 6.0).unwrap().len(), 144);
    assert_eq!(ev.layer_grid(&Schedule::default(), 2.0 * PI / 23.0).unwrap().len(), 529);
    assert_eq!(ev.layer_grid(&Schedule::default(), 1.0).unwrap_err(), QaoaError::BadResolution(1.0));
    assert!(ev.layer_grid(&Schedule::default(), PI).is_err());
    let prefix = Schedule::new(vec![0.7], vec![2.1]).unwrap();
    for noise in [NoiseConfig::ideal(), noisy(NoiseMode::Zz, &[0, 1, 2])] {
        let ev = Evaluator::new(&inst.hamiltonian, &noise).unwrap();
        let grid = ev.layer_grid(&prefix, PI / 6.0).unwrap();
        assert_eq!(grid.layer, 2);
        let e = ev.energy(&prefix).unwrap();
        if noise.mode == NoiseMode::Ideal {
            assert!((grid.energy(0, 0) - e).abs() < 1e-12);
            assert!(grid.argmin().2 <= e + 1e-12);
        }
        let (g, b, best) = grid.argmin();
        assert!((ev.energy(&prefix.extended(g, b)).unwrap() - best).abs() < 1e-10);
    }
}

#[test]
fn argmin_prefers_smallest_angles_on_ties() {
    let grid = LandscapeGrid {
        layer: 1,
        resolution: PI / 2.0,
        points: 4,
        prefix: Schedule::default(),
        energies: vec![3.0, 1.0, 2.0, 2.0, 5.0, 1.0, 1.0, 4.0, 1.0, 9.0, 9.0, 9.0, 9.0, 9.0, 9.0, 9.0],
    };
    assert_eq!(grid.argmin(), (0.0, PI / 2.0, 1.0));
    assert_eq!(grid.argmin_where(|i, _| i > 0), Some((PI / 2.0, PI / 2.0, 1.0)));
    assert_eq!(grid.rows().len(), 16);
}

#[test]
fn refinement_descends() {
    let inst = instance("1099551473989");
    let ev = Evaluator::new(&inst.hamiltonian, &NoiseConfig::ideal()).unwrap();
    let cfg = OptimizerConfig::default();
    let g1 = ev.layer_grid(&Schedule::default(), cfg.resolution).unwrap();
    let (g, b, e) = g1.argmin();
    let r1 = refine_parameters(&ev, &Schedule::new(vec![g], vec![b]).unwrap(), &cfg).unwrap();
    assert!(r1.energy <= e + 1e-12 && r1.converged);
    let again = refine_parameters(&ev, &r1.schedule, &cfg).unwrap();
    assert!(again.iterations <= 1);
    assert!((again.energy - r1.energy).abs() < 1e-9);
    let g2 = ev.layer_grid(&r1.schedule, cfg.resolution).unwrap();
    let (g, b, e2) = g2.argmin_where(|i, j| i > 0 && j > 0).unwrap();
    let r2 = refine_parameters(&ev, &r1.schedule.extended(g, b), &cfg).unwrap();
    assert!(r2.energy <= e2 + 1e-12);
    assert!(r2.schedule.to_params().iter().all(|&x| (0.0..=TAU).contains(&x)));
}

#[test]
fn success_rates() {
    let inst = instance("6557");
    let h = &inst.hamiltonian;
    let sols = solution_indices(&inst.system, h).unwrap();
    let n = h.n_qubits();
    // two independent paths: clause verification and zero energy
    let zero: Vec<u64> = (0..1u64 << n).filter(|&i| h.energy_of_index(i) == 0.0).collect();
    assert_eq!(sols, zero);
    let uniform = vec![1.0 / (1u64 << n) as f64; 1 << n];
    assert!((success_rate_exact(&uniform, &sols) - sols.len() as f64 / (1u64 << n) as f64).abs() < 1e-15);
    let mut basis = vec![0.0; 1 << n];
    basis[sols[0] as usize] = 1.0;
    assert_eq!(success_rate_exact(&basis, &sols), 1.0);

    let ev = Evaluator::new(h, &NoiseConfig::ideal()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..20 {
        let s = random_schedule(&mut rng, 2);
        let probs = ev.probabilities(&s).unwrap();
        let exact = success_rate_exact(&probs, &sols);
        let brute: f64 = probs.iter().enumerate().filter(|(i, _)| h.energy_of_index(*i as u64) == 0.0).map(|(_, p)| p).sum();
        assert!((exact - brute).abs() < 1e-10);
        let e = ev.energy(&s).unwrap();
        // integer spectrum with minimum 0: 1 - s <= E
        assert!(e >= -1e-12 && 1.0 - exact <= e + 1e-9);
        let shots = 8192;
        let samples = sample_indices(&probs, shots, k).unwrap();
        let sampled = success_rate_sampled(&samples, &sols);
        let sigma = (exact * (1.0 - exact) / shots as f64).sqrt();
        assert!((sampled - exact).abs() <= 4.0 * sigma + 1e-12, "{sampled} vs {exact}");
    }
    let other = instance("3127");
    assert_eq!(solution_indices(&other.system, h), Err(QaoaError::MapMismatch));
}

#[test]
fn zero_layers_report_the_uniform_success() {
    let inst = instance("6557");
    let r = run_vqf(&inst, 0, &OptimizerConfig::default(), &NoiseConfig::ideal()).unwrap();
    let sols = solution_indices(&inst.system, &inst.hamiltonian).unwrap();
    assert!(r.layers.is_empty());
    assert!((r.initial_success - sols.len() as f64 / 32.0).abs() < 1e-12);
}

#[test]
fn ideal_run_on_3127() {
    let inst = instance("3127");
    let r = run_vqf(&inst, 8, &OptimizerConfig::default(), &NoiseConfig::ideal()).unwrap();
    assert_eq!(r.factors, Some(("53".to_string(), "59".to_string())));
    for w in r.layers.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-12);
    }
    assert!(r.layers[7].success_exact >= 0.9, "{}", r.layers[7].success_exact);
    let rows = r.rows("3127");
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|row| row.success_sampled.is_none() && row.shots == 0));
}

#[test]
fn cnot_counts_follow_the_ladders() {
    for (inst, _) in instances() {
        let h = &inst.hamiltonian;
        let per_layer: usize = h.terms().iter().filter(|t| !t.qubits.is_empty()).map(|t| 2 * (t.locality() - 1)).sum();
        for p in [1, 2, 5] {
            let gates = build_ansatz_circuit(h, &Schedule::zeros(p)).unwrap();
            assert_eq!(circuit_metrics(&gates).cnots, p * per_layer);
        }
    }
}

#[test]
fn ansatz_circuit_matches_the_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = instance("3127");
    let h = &inst.hamiltonian;
    let s = random_schedule(&mut rng, 3);
    let mut psi = StateVector::new(h.n_qubits());
    for g in build_ansatz_circuit(h, &s).unwrap() {
        psi.apply_gate(&g).unwrap();
    }
    let ev = Evaluator::new(h, &NoiseConfig::ideal()).unwrap();
    let e = expectation_value(&psi, h).unwrap();
    assert!((e - ev.energy(&s).unwrap()).abs() < 1e-10);
}

#[test]
fn sampled_runs_are_reproducible() {
    let inst = instance("1099551473989");
    let cfg = OptimizerConfig { shots: 1024, seed: 9, ..Default::default() };
    let noise = noisy(NoiseMode::Damping, &[0, 1, 2]);
    let a = run_vqf(&inst, 2, &cfg, &noise).unwrap();
    let b = run_vqf(&inst, 2, &cfg, &noise).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.layers.iter().all(|l| l.success_sampled.is_some()));
}
