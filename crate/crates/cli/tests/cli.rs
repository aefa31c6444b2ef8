use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vqf_core::instances::{find_preset, presets, Instance};
use vqf_core::qaoa::{noise_sweep, run_vqf, NoiseSetting, OptimizerConfig};
use vqf_core::sim::{DeviceModel, NoiseConfig};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vqf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn vqf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqf"))
        .args(args)
        .current_dir(dir)
        .env_remove(vqf_cli::DEVICE_ENV)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn factor_3127() {
    let dir = scratch("factor");
    let o = vqf(&dir, &["factor", "--n", "3127", "--layers", "8", "--mode", "ideal", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("3127 = 53 x 59"));
    let (header, rows) = csv_rows(&dir.join("factor-3127.csv"));
    let expected = "instance,p,mode,cr_scheme,spectators,energy,success_exact,success_sampled,shots,seed,cnots,depth";
    assert_eq!(header.join(","), expected);
    assert_eq!(rows.len(), 8);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("factor-3127.provenance.json")).unwrap()).unwrap();
    assert_eq!(side["spec"]["command"], "factor");
    assert_eq!(side["spec"]["instance"]["n_qubits"], 4);
    assert_eq!(side["spec"]["params"]["layers"], 8);
    assert_eq!(side["summary"]["factors"], serde_json::json!(["53", "59"]));
    assert_eq!(side["rows"], 8);
}

#[test]
fn rows_come_from_the_library() {
    let dir = scratch("rederive");
    let o = vqf(&dir, &["factor", "--n", "6557", "--layers", "3", "--mode", "damping", "--out", "run.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let preset = find_preset("6557").unwrap();
    let inst = Instance::from_preset(&preset, vqf_core::factoring::DEFAULT_MAX_PASSES).unwrap();
    let noise = NoiseConfig::new(vqf_core::sim::NoiseMode::Damping, DeviceModel::bundled(), preset.mapping.clone());
    let result = run_vqf(&inst, 3, &OptimizerConfig::default(), &noise).unwrap();
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in result.rows("6557") {
        w.serialize(row).unwrap();
    }
    let expected = String::from_utf8(w.into_inner().unwrap()).unwrap();
    assert_eq!(std::fs::read_to_string(dir.join("run.csv")).unwrap(), expected);
}

#[test]
fn landscape_grid_sizes() {
    let dir = scratch("landscape");
    let o = vqf(&dir, &["landscape", "--n", "1099551473989", "--layer", "1", "--res", "pi/6"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.join("landscape-1099551473989-layer1.csv"));
    assert_eq!(header.join(","), "layer,gamma,beta,energy");
    assert_eq!(rows.len(), 144);
    let o = vqf(&dir, &["landscape", "--n", "3127", "--layer", "2", "--res", "2pi/23", "--out", "l2.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&dir.join("l2.csv"));
    assert_eq!(rows.len(), 529);
    assert!(rows.iter().all(|r| r[0] == "2"));
    let o = vqf(&dir, &["landscape", "--n", "3127", "--res", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scaling_columns() {
    let dir = scratch("scaling");
    let o = vqf(&dir, &["scaling", "--max-bits", "12", "--samples", "10", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&dir.join("scaling.csv"));
    assert_eq!(header.join(","), "N,n,qubits_after,local1,local2,local3,local4");
    assert!(rows.iter().all(|r| r[0].parse::<u64>().unwrap() % 2 == 1));
    assert_eq!(vqf(&dir, &["scaling", "--max-bits", "12"]).status.code(), Some(2));
    assert_eq!(vqf(&dir, &["scaling", "--max-bits", "40", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn noise_sweep_rows() {
    let dir = scratch("sweep");
    let args = ["noise-sweep", "--n", "6557", "--layers", "2", "--t2", "82", "--t1", "64", "--xi", "100"];
    let o = vqf(&dir, &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.join("noise-sweep-6557.csv"));
    assert_eq!(header.join(","), "family,value,p,energy,success_exact");
    assert_eq!(rows.len(), 8);
}

#[test]
fn noiseless_settings_reproduce_the_ideal_curve() {
    let preset = find_preset("6557").unwrap();
    let inst = Instance::from_preset(&preset, vqf_core::factoring::DEFAULT_MAX_PASSES).unwrap();
    let dev = DeviceModel::bundled();
    let settings = vec![
        NoiseSetting::ideal(),
        NoiseSetting::phase_damping(&dev, &preset.mapping, f64::INFINITY, 315.0).unwrap(),
        NoiseSetting::zz(&dev, &preset.mapping, 0.0, 315.0).unwrap(),
    ];
    let cfg = OptimizerConfig { train_ideal: true, ..Default::default() };
    let rows = noise_sweep(&inst, 4, &cfg, &settings).unwrap();
    for k in 0..4 {
        for other in [rows[4 + k].success_exact, rows[8 + k].success_exact] {
            assert!((other - rows[k].success_exact).abs() < 1e-12);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = scratch("exit");
    assert_eq!(vqf(&dir, &["factor", "--n", "3127", "--shots", "10"]).status.code(), Some(2));
    assert_eq!(vqf(&dir, &["factor", "--n", "3128"]).status.code(), Some(2));
    assert_eq!(vqf(&dir, &["factor", "--n", "abc"]).status.code(), Some(2));
    assert_eq!(vqf(&dir, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(vqf(&dir, &["--help"]).status.code(), Some(0));
    let o = vqf(&dir, &["preprocess", "--n", "13"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-zero constant"));
    let args = ["factor", "--n", "1099551473989", "--raw", "--layers", "1", "--shots", "1", "--seed", "1"];
    let o = vqf(&dir, &args);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.join("factor-1099551473989.csv").exists());
}

#[test]
fn device_files() {
    let dir = scratch("device");
    let bundled = DeviceModel::bundled();
    assert_eq!(bundled.qubits.len(), 20);
    assert_eq!(bundled.edge(0, 1).unwrap().xi_khz, Some(275.1));
    assert_eq!(DeviceModel::from_json(&bundled.to_json()).unwrap(), bundled);

    let mut doc: serde_json::Value = serde_json::from_str(&bundled.to_json()).unwrap();
    doc["qubits"][3].as_object_mut().unwrap().remove("t1_us");
    std::fs::write(dir.join("broken.json"), doc.to_string()).unwrap();
    let args = ["factor", "--n", "3127", "--mode", "damping", "--layers", "1", "--device", "broken.json"];
    let o = vqf(&dir, &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t1_us"));

    let o = Command::new(env!("CARGO_BIN_EXE_vqf"))
        .args(["factor", "--n", "3127", "--mode", "damping", "--layers", "1"])
        .current_dir(&dir)
        .env(vqf_cli::DEVICE_ENV, "broken.json")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));

    let mut doc: serde_json::Value = serde_json::from_str(&bundled.to_json()).unwrap();
    doc["qubits"][0]["t2_us"] = serde_json::json!(1000.0);
    std::fs::write(dir.join("incoherent.json"), doc.to_string()).unwrap();
    let o = vqf(&dir, &["factor", "--n", "3127", "--mode", "damping", "--device", "incoherent.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qubit 0"));
}

#[test]
fn presets_load() {
    for p in presets() {
        let inst = Instance::from_preset(&p, vqf_core::factoring::DEFAULT_MAX_PASSES).unwrap();
        assert_eq!(inst.n_qubits(), p.mapping.len());
        let noise = NoiseConfig::new(vqf_core::sim::NoiseMode::DampingAndZz, DeviceModel::bundled(), p.mapping.clone());
        noise.validate(inst.n_qubits()).unwrap();
    }
    let dir = scratch("presets");
    for (name, args) in [("preprocess", "preprocess-3127.json"), ("hamiltonian", "hamiltonian-3127.json")] {
        let o = vqf(&dir, &[name, "--n", "3127"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(dir.join(args).exists());
        assert!(dir.join(args.replace(".json", ".provenance.json")).exists());
    }
    let h = vqf_core::ising::Hamiltonian::from_json(&std::fs::read_to_string(dir.join("hamiltonian-3127.json")).unwrap());
    assert_eq!(h.unwrap().n_qubits(), 4);
}

#[test]
fn sampled_runs_are_byte_identical() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    let args = ["factor", "--n", "6557", "--layers", "3", "--mode", "damping-zz", "--shots", "8192", "--seed", "11", "--out", "run.csv"];
    for dir in [&a, &b] {
        assert_eq!(vqf(dir, &args).status.code(), Some(0));
    }
    for f in ["run.csv", "run.provenance.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}
