"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (repeated in the terminal
summary) and then asserts. Reference values come from ``oracles.py`` or
from direct evaluation of the defining formulas, never from the code under
test.
"""

from __future__ import annotations

import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from qutritcd.algebra import materialize
from qutritcd.bench import SWEEP_TIMES, SweepConfig, _sweep_instance, prepare, read_records_csv, simulate
from qutritcd.bench import summarize, sweep_to_files
from qutritcd.driving import agp_coefficients, nested_commutator, schedule_lambda, schedule_rate
from qutritcd.dynamics import EvolutionConfig, evolve, spectrum_trace
from qutritcd.encodings import ENCODINGS, encode, initial_hamiltonian, register_shape
from qutritcd.instances import random_instance, reference_instance

RESULTS = Path(__file__).resolve().parent.parent / "results"
SWEEP_SEED_BASE = 2024
SWEEP_INSTANCES = 200


# --- 1. encoding oracle ----------------------------------------------------------


def _oracle_cases():
    portfolio_shapes = [(1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (1, 2), (2, 2), (3, 2), (2, 3)]
    for k in range(50):
        yield random_instance("partition", 1 + k % 6, 1000 + k)
        yield random_instance("max3cut", 2 + k % 5, 2000 + k)
        n, g = portfolio_shapes[k % len(portfolio_shapes)]
        yield random_instance("portfolio", n, 3000 + k, digits=g)


def test_criterion_1_encoding_oracle(report):
    start = time.perf_counter()
    worst = 0.0
    checked = 0
    for inst in _oracle_cases():
        assert inst.n_variables <= 6
        for enc in ENCODINGS:
            diag = encode(inst, enc).diagonal()
            cost = oracles.brute_instance(inst, enc)
            # relative to the instance's energy scale so exact zeros of the cost are covered
            scale = max(np.abs(cost).max(), np.finfo(float).tiny)
            worst = max(worst, float(np.abs(diag - cost).max() / scale))
            checked += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 60
    report("1", ok, f"{checked} Hamiltonians, max relative deviation {worst:.1e} (tol 1e-9), {elapsed:.0f} s (< 60 s)")
    assert ok


# --- 2. schedule contract --------------------------------------------------------


def test_criterion_2_schedule_contract(report):
    problems = []
    for T in (0.1, 1.0, 10.0, 100.0, 3.7):
        if not (schedule_lambda(0.0, T) == 0.0 and schedule_lambda(T, T) == 1.0 and schedule_lambda(T / 2, T) == 0.5):
            problems.append(f"exact points T={T}")
        rate_ends = max(abs(schedule_rate(0.0, T)), abs(schedule_rate(T, T)))
        if not rate_ends <= 1e-12:
            problems.append(f"rate at endpoints {rate_ends:.1e} for T={T}")
        t = np.linspace(0.0, T, 1000)
        sym = float(np.max(np.abs(schedule_lambda(T - t, T) - (1 - schedule_lambda(t, T)))))
        if not sym <= 1e-12:
            problems.append(f"symmetry deviation {sym:.1e} for T={T}")
    ok = not problems
    report("2", ok, "exact endpoints and midpoint, rate endpoints and symmetry within 1e-12" if ok else "; ".join(problems))
    assert ok


# --- 3. AGP algebra --------------------------------------------------------------


def _dense_pair(inst, enc="qutrit"):
    n, d = register_shape(inst, enc)
    return materialize(initial_hamiltonian(n, d)), materialize(encode(inst, enc))


def test_criterion_3_agp_algebra(report):
    lams = np.linspace(0.0, 1.0, 11)
    o1_dev = l1_res = l3_res = 0.0
    for problem, seed in itertools.product(("partition", "max3cut", "portfolio"), range(3)):
        for size in (2, 3):
            hi, hf = _dense_pair(random_instance(problem, size, 40 + seed))
            ref = oracles.commutator(hi, hf)
            for lam in lams:
                o1_dev = max(o1_dev, float(np.abs(nested_commutator(1, lam, hi, hf) - ref).max()))
                c1 = agp_coefficients(1, lam, hi, hf)
                g1, g2 = oracles.gamma(1, lam, hi, hf), oracles.gamma(2, lam, hi, hf)
                assert c1.alphas[0] == pytest.approx(-g1 / g2, rel=1e-12)
                l1_res = max(l1_res, c1.residual())
                l3_res = max(l3_res, agp_coefficients(3, lam, hi, hf).residual())
    ok = o1_dev <= 1e-12 and l1_res <= 1e-12 and l3_res <= 1e-8
    report(
        "3",
        ok,
        f"O_1 lambda dependence {o1_dev:.1e} (tol 1e-12), l=1 residual {l1_res:.1e} (tol 1e-12), "
        f"l=3 residual {l3_res:.1e} (tol 1e-8)",
    )
    assert ok


# --- 4. counterdiabatic benefit --------------------------------------------------


def test_criterion_4_cd_benefit(report):
    start = time.perf_counter()
    details, ok = [], True
    inst = reference_instance("fig1")
    for enc in ENCODINGS:
        p = prepare(inst, enc)
        probs = {
            scale: simulate(p, EvolutionConfig(0.1, agp_scale=scale)).success_probability for scale in (1.0, 0.0, -1.0)
        }
        ok &= probs[1.0] >= probs[0.0] and probs[1.0] > probs[-1.0]
        details.append(f"{enc} P on/off/flipped {probs[1.0]:.4f}/{probs[0.0]:.4f}/{probs[-1.0]:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300
    report("4", ok, "; ".join(details) + f"; {elapsed:.0f} s (< 300 s)")
    assert ok


# --- 5. wheel graph energy error -------------------------------------------------


def test_criterion_5_wheel_energy_error(report):
    start = time.perf_counter()
    p = prepare(reference_instance("wheel6"), "qutrit")
    rs = {T: simulate(p, EvolutionConfig(T)).energy_error for T in SWEEP_TIMES}
    elapsed = time.perf_counter() - start
    ok = all(r < 1 for r in rs.values()) and elapsed < 600
    values = ", ".join(f"R(T={T:g})={r:.3f}" for T, r in rs.items())
    report("5", ok, f"W_6 qutrit {values} (need all < 1); {elapsed:.0f} s")
    assert ok


# --- 6. randomized sweeps --------------------------------------------------------


def _sweep(problem: str) -> dict:
    """Summary of the 200-instance sweep, reusing ``results/`` when it matches.

    A cached CSV is accepted only if its recorded configuration matches and
    the first and last instances recompute to identical records.
    """
    config = SweepConfig(problem, n_instances=SWEEP_INSTANCES, seed_base=SWEEP_SEED_BASE, workers=1)
    out = RESULTS / f"sweep_{problem}.csv"
    summary_path = out.with_suffix(".summary.json")
    if out.exists() and summary_path.exists():
        cached = json.loads(summary_path.read_text())["config"]
        same = {k: v for k, v in cached.items() if k != "workers"} == {
            k: (list(v) if isinstance(v, tuple) else v) for k, v in config.__dict__.items() if k != "workers"
        }
        if same:
            records = read_records_csv(out)
            for i in (0, SWEEP_INSTANCES - 1):
                fresh = _sweep_instance((config, i))
                assert [r for r in records if r.instance_id == i] == fresh, f"cached sweep row {i} does not reproduce"
            return summarize(records)
    RESULTS.mkdir(exist_ok=True)
    return sweep_to_files(config, out)


def _by_time(summary: dict) -> dict:
    return {row["T"]: row for row in summary["times"]}


def _describe(row: dict) -> str:
    return (
        f"T={row['T']:g} mean {row['mean_ratio']:.3f} ratio>1 {100 * row['fraction_ratio_gt_1']:.1f}% "
        f"(undefined {row['undefined_ratios']}, failed {row['failed']})"
    )


@pytest.mark.slow
def test_criterion_6a_partition_sweep(report):
    row = _by_time(_sweep("partition"))[0.1]
    ok = 1.1 <= row["mean_ratio"] <= 1.6 and row["fraction_ratio_gt_1"] >= 0.70 and row["failed"] == 0
    report("6a", ok, f"partition {_describe(row)}; need mean in [1.1, 1.6], ratio>1 >= 70%")
    assert ok


@pytest.mark.slow
def test_criterion_6b_max3cut_sweep(report):
    rows = _by_time(_sweep("max3cut"))
    ok = all(rows[T]["fraction_ratio_gt_1"] == 1.0 and rows[T]["failed"] == 0 for T in SWEEP_TIMES)
    ok &= 4 <= rows[10.0]["mean_ratio"] <= 12
    detail = "; ".join(_describe(rows[T]) for T in SWEEP_TIMES)
    report("6b", ok, f"max 3-cut {detail}; need 100% at every T and mean in [4, 12] at T=10")
    assert ok


@pytest.mark.slow
def test_criterion_6c_portfolio_sweep(report):
    row = _by_time(_sweep("portfolio"))[10.0]
    ok = row["fraction_ratio_gt_1"] >= 0.80 and row["failed"] == 0
    report("6c", ok, f"portfolio {_describe(row)}; need ratio>1 >= 80%")
    assert ok


# --- 7. portfolio trend ----------------------------------------------------------


def test_criterion_7_portfolio_trend(report):
    inst = reference_instance("portfolio6")
    details, ok = [], True
    for enc in ENCODINGS:
        p = prepare(inst, enc)
        short, long = (simulate(p, EvolutionConfig(T)).energy_error for T in (0.1, 100.0))
        ok &= long < short
        details.append(f"{enc} R(0.1)={short:.3f} R(100)={long:.3f}")
    report("7", ok, "; ".join(details) + "; need R(100) < R(0.1)")
    assert ok


# --- 8. backend cross-validation -------------------------------------------------


def test_criterion_8_backends(report):
    fids = {}
    for name in ("fig1", "wheel6", "portfolio6"):
        p = prepare(reference_instance(name), "qutrit")
        ode = evolve(p.driver, EvolutionConfig(1.0)).final_state
        trotter = evolve(p.driver, EvolutionConfig(1.0, backend="trotter", steps=1000)).final_state
        fids[name] = oracles.fidelity(ode, trotter)
    p = prepare(reference_instance("fig1"), "qutrit")
    states = [evolve(p.driver, EvolutionConfig(1.0, steps=n, renormalize=False)).final_state for n in (100, 200, 400)]
    ratio = float(np.linalg.norm(states[0] - states[1]) / np.linalg.norm(states[1] - states[2]))
    ok = all(f >= 0.999 for f in fids.values()) and 12 <= ratio <= 20
    fid_text = ", ".join(f"{k} {v:.8f}" for k, v in fids.items())
    report("8", ok, f"Trotter/ODE fidelity {fid_text} (>= 0.999); step-halving ratio {ratio:.2f} (in [12, 20])")
    assert ok


# --- 9. spectrum endpoints -------------------------------------------------------


def test_criterion_9_spectrum_endpoints(report):
    site_levels = {"qutrit": (-2.0, -1.0, 1.0), "qubit": (-1.0, 1.0)}
    worst0 = worst1 = 0.0
    for name in ("fig5", "fig8"):
        inst = reference_instance(name)
        for enc in ENCODINGS:
            n, d = register_shape(inst, enc)
            trace = spectrum_trace(initial_hamiltonian(n, d), encode(inst, enc), 2)
            sums = np.sort([sum(c) for c in itertools.product(site_levels[enc], repeat=n)])
            worst0 = max(worst0, float(np.abs(trace.levels[0] - sums).max()))
            worst1 = max(worst1, float(np.abs(trace.levels[1] - np.sort(oracles.brute_instance(inst, enc))).max()))
    ok = worst0 <= 1e-9 and worst1 <= 1e-9
    report("9", ok, f"fig5/fig8 both encodings: lambda=0 deviation {worst0:.1e}, lambda=1 deviation {worst1:.1e} (tol 1e-9)")
    assert ok
