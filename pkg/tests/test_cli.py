from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from qutritcd.cli import main
from qutritcd.encodings import brute_force
from qutritcd.instances import dump_instance, reference_instance


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out.strip().startswith("{") else out)


def test_encode_fig1(capsys):
    code, data = run_json(capsys, ["encode", "--reference", "fig1"])
    assert code == 0
    assert (data["n_sites"], data["local_dim"], data["dim"], data["diagonal"]) == (6, 3, 729, True)
    assert data["ground_energy"] == pytest.approx(0.13)


def test_encode_single_edge_file(tmp_path, capsys):
    p = tmp_path / "edge.json"
    p.write_text(json.dumps({"schema_version": 1, "problem": "max3cut", "n_vertices": 2, "edges": [[0, 1]]}))
    code, data = run_json(capsys, ["encode", str(p)])
    assert code == 0
    assert data["dim"] == 9 and data["ground_energy"] == 0 and data["degeneracy"] == 6


def test_encode_qubit_and_overrides(tmp_path, capsys):
    out = tmp_path / "enc.json"
    code = main(["encode", "--reference", "portfolio6", "--encoding", "qubit", "--theta1", "-2", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert data["dim"] == 4096 and data["instance"]["thetas"] == [-2.0, 1.0, 1.0]


@pytest.mark.parametrize("content", ["{bad", "[]", '{"schema_version": 1, "problem": "partition"}'])
def test_encode_schema_errors_exit_2(tmp_path, capsys, content):
    p = tmp_path / "bad.json"
    p.write_text(content)
    assert main(["encode", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_file_exit_2(capsys):
    assert main(["encode", "/nonexistent/instance.json"]) == 2


def test_evolve_wheel_long_time(capsys):
    code, data = run_json(capsys, ["evolve", "--reference", "wheel6", "--T", "10"])
    assert code == 0
    assert data["R"] < 1
    assert set(data) >= {"R", "P_success", "E_final", "norm_drift", "wall_ms"}


def test_evolve_reference_portfolio_long_time(capsys):
    code, data = run_json(capsys, ["evolve", "--reference", "portfolio6", "--T", "100"])
    assert code == 0
    assert np.isfinite(data["R"]) and data["R"] > 1


def test_evolve_agp_on_beats_off(capsys):
    _, on = run_json(capsys, ["evolve", "--reference", "fig1", "--T", "0.1", "--agp", "on"])
    _, off = run_json(capsys, ["evolve", "--reference", "fig1", "--T", "0.1", "--agp", "off"])
    assert on["P_success"] >= off["P_success"]


def test_evolve_trotter_and_random(capsys):
    code, data = run_json(
        capsys, ["evolve", "--problem", "max3cut", "--size", "4", "--seed", "3", "--T", "1", "--backend", "trotter", "--steps", "200"]
    )
    assert code == 0 and data["steps"] == 200 and data["norm_drift"] < 1e-12


def test_spectrum_fig5(tmp_path):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--reference", "fig5", "--grid", "3", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 4
    assert len(rows[1].split(",")) == 1 + 729


def test_spectrum_fig8_both_encodings(tmp_path):
    inst = reference_instance("fig8")
    for encoding, dim in (("qutrit", 729), ("qubit", 4096)):
        out = tmp_path / f"{encoding}.csv"
        assert main(["spectrum", "--reference", "fig8", "--encoding", encoding, "--grid", "2", "--out", str(out)]) == 0
        table = np.loadtxt(out, delimiter=",", skiprows=1)
        assert table.shape == (2, 1 + dim)
        np.testing.assert_allclose(table[1, 1:], np.sort(brute_force(inst, encoding).diagonal), atol=1e-9)


def test_spectrum_cap_exit_3(monkeypatch, capsys):
    monkeypatch.setenv("QUTRITCD_MAX_DENSE_DIM", "100")
    assert main(["spectrum", "--reference", "fig1", "--grid", "3"]) == 3
    assert "resource limit" in capsys.readouterr().err


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--problem", "partition", "--instances", "2", "--size", "3", "--T", "0.1", "--steps", "40",
         "--workers", "1", "--out", str(out)]
    )  # fmt: skip
    assert code == 0
    assert "mean ratio" in capsys.readouterr().out
    assert out.exists() and out.with_suffix(".summary.json").exists() and out.with_suffix(".timing.csv").exists()


def test_sweep_rejects_oversized_register(tmp_path, capsys):
    assert main(["sweep", "--problem", "max3cut", "--size", "7", "--out", str(tmp_path / "x.csv")]) == 2


def test_instance_file_round_trip_through_cli(tmp_path, capsys):
    p = tmp_path / "w.json"
    dump_instance(reference_instance("wheel6"), p)
    code, data = run_json(capsys, ["encode", str(p), "--alpha", "2"])
    assert code == 0 and data["instance"]["alpha"] == 2.0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qutritcd", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("encode", "evolve", "sweep", "spectrum"):
        assert cmd in proc.stdout
