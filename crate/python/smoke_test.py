"""Smoke test for the vqf extension module. Run after installing crates/py."""

import json
import math

import vqf


def main():
    assert vqf.factor_oracle(3127) == (53, 59)
    assert set(vqf.preset_names()) == {"1099551473989", "3127", "6557", "297491"}

    inst = vqf.Instance.preset("3127")
    assert inst.n_qubits == 4 and inst.mapping == [0, 1, 2, 3]
    h = inst.hamiltonian()
    assert len(h.diagonal()) == 16
    assert min(h.diagonal()) == 0.0
    assert all(k <= 4 for k, _ in h.locality_histogram())
    assert vqf.Hamiltonian.from_json(h.to_json()).terms() == h.terms()
    for bits in h.ground_states():
        assert h.energy(bits) == 0.0

    ev = vqf.Evaluator(h)
    e = ev.energy([0.4, 1.1], [0.3, 2.0])
    e_shift = ev.energy([0.4 + 2 * math.pi, 1.1], [0.3, 2.0 + math.pi])
    assert abs(e - e_shift) < 1e-9
    g = ev.gradient([0.4, 1.1], [0.3, 2.0])
    g_fd = ev.gradient([0.4, 1.1], [0.3, 2.0], fd_step=1e-5)
    assert max(abs(a - b) for a, b in zip(g, g_fd)) < 1e-6
    assert len(ev.layer_grid([], [], math.pi / 6)) == 144

    run = vqf.run_vqf(inst, 8)
    assert run["factors"] == ["53", "59"]
    energies = [layer["energy"] for layer in run["layers"]]
    assert all(b <= a for a, b in zip(energies, energies[1:]))

    six = vqf.Instance.preset("6557")
    noise = vqf.NoiseConfig("damping", mapping=six.mapping)
    assert json.loads(noise.to_json())["mode"] == "damping"
    noisy = vqf.run_vqf(six, 2, noise=noise, shots=512, seed=3)
    again = vqf.run_vqf(six, 2, noise=noise, shots=512, seed=3)
    assert noisy == again

    rows = vqf.noise_sweep(six, 3, [("ideal", 0.0), ("zz", 100.0)])
    assert len(rows) == 6

    rows = vqf.scaling_study(6, 10, 5, seed=1)
    assert {"N", "n", "qubits_after", "local1", "local4"} <= set(rows[0])

    try:
        vqf.Instance(3128)
    except vqf.VqfError as e:
        assert "even" in str(e)
    else:
        raise AssertionError("even input accepted")

    print("vqf smoke test passed")


if __name__ == "__main__":
    main()
