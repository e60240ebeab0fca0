"""Single runs and randomized qutrit-vs-qubit sweeps.

Sweep output is a records CSV (one row per instance and total time) plus a
summary JSON. The records CSV is deterministic for a given configuration;
wall-clock timings go to a sibling ``*.timing.csv`` so reruns stay
byte-identical. Every summary statistic can be recomputed from the records
CSV alone with :func:`summarize`.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .driving import CounterdiabaticDriver
from .dynamics import EvolutionConfig, EvolutionResult, enhancement, evolve
from .encodings import ENCODINGS, GroundTruth, brute_force, encode, initial_hamiltonian, register_shape
from .errors import DegenerateGapError
from .instances import DEFAULT_ALPHA, DEFAULT_BUDGET, DEFAULT_THETAS, Instance, random_instance

log = logging.getLogger(__name__)

PROBLEMS = ("partition", "max3cut", "portfolio")
SWEEP_TIMES = (0.1, 1.0, 10.0)
DESK_INSTANCES = 200
FULL_INSTANCES = 1000
MAX_QUBIT_SITES = 12


@dataclass
class PreparedProblem:
    instance: Instance
    encoding: str
    driver: CounterdiabaticDriver
    ground_truth: GroundTruth

    @property
    def dim(self) -> int:
        return self.driver.dim


def prepare(inst: Instance, encoding: str, omega0: float = 1.0) -> PreparedProblem:
    """Encode, build the counterdiabatic driver and the brute-force ground truth."""
    n_sites, d = register_shape(inst, encoding)
    h_f = encode(inst, encoding)
    driver = CounterdiabaticDriver(initial_hamiltonian(n_sites, d, omega0), h_f)
    return PreparedProblem(inst, encoding, driver, brute_force(inst, encoding))


def simulate(prepared: PreparedProblem, config: EvolutionConfig) -> EvolutionResult:
    return evolve(prepared.driver, config, ground_truth=prepared.ground_truth)


def _energy_error_or_nan(result: EvolutionResult) -> float:
    try:
        return result.energy_error
    except DegenerateGapError:
        return math.nan


# --- sweeps --------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    problem: str
    n_instances: int = DESK_INSTANCES
    size: int = 6
    times: tuple[float, ...] = SWEEP_TIMES
    seed_base: int = 0
    backend: str = "ode"
    steps: int | None = None
    workers: int = 1
    alpha: float = DEFAULT_ALPHA
    thetas: tuple[float, float, float] = DEFAULT_THETAS
    budget: float = DEFAULT_BUDGET
    digits: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.n_instances < 1:
            raise ValueError("need at least one instance")
        if not self.times:
            raise ValueError("need at least one total time")
        n_vars = self.size * (self.digits if self.problem == "portfolio" else 1)
        if 2 * n_vars > MAX_QUBIT_SITES:
            raise ValueError(f"qubit baseline would need {2 * n_vars} qubits (cap {MAX_QUBIT_SITES})")

    def instance_seed(self, instance_id: int) -> int:
        ss = np.random.SeedSequence([self.seed_base & 0xFFFFFFFFFFFFFFFF, instance_id])
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    def make_instance(self, instance_id: int) -> Instance:
        seed = self.instance_seed(instance_id)
        if self.problem == "max3cut":
            return random_instance("max3cut", self.size, seed, alpha=self.alpha)
        if self.problem == "portfolio":
            return random_instance(
                "portfolio", self.size, seed, digits=self.digits, thetas=self.thetas, budget=self.budget
            )
        return random_instance("partition", self.size, seed)


@dataclass
class SweepRecord:
    instance_id: int
    seed: int
    problem: str
    T: float
    P2: float
    P3: float
    ratio: float | None
    ratio_note: str
    R2: float
    R3: float
    E_g2: float
    E_g3: float
    gap2: float
    gap3: float
    degeneracy2: int
    degeneracy3: int
    steps2: int
    steps3: int
    error: str = ""
    wall_ms: float = field(default=0.0, compare=False)


CSV_FIELDS = [f.name for f in fields(SweepRecord) if f.name != "wall_ms"]
_INT_FIELDS = {"instance_id", "seed", "degeneracy2", "degeneracy3", "steps2", "steps3"}
_FLOAT_FIELDS = {"T", "P2", "P3", "ratio", "R2", "R3", "E_g2", "E_g3", "gap2", "gap3"}


def _sweep_instance(args: tuple[SweepConfig, int]) -> list[SweepRecord]:
    config, instance_id = args
    seed = config.instance_seed(instance_id)
    try:
        inst = config.make_instance(instance_id)
        prepared = {enc: prepare(inst, enc) for enc in ENCODINGS}
    except Exception as exc:  # recorded per row, the sweep carries on
        return [_failed(config, instance_id, seed, T, exc) for T in config.times]
    records = []
    for T in config.times:
        start = time.perf_counter()
        try:
            evo = EvolutionConfig(T, backend=config.backend, steps=config.steps)
            r3 = simulate(prepared["qutrit"], evo)
            r2 = simulate(prepared["qubit"], evo)
        except Exception as exc:
            records.append(_failed(config, instance_id, seed, T, exc))
            continue
        p3, p2 = r3.success_probability, r2.success_probability
        try:
            ratio, note = enhancement(p3, p2), ""
        except ZeroDivisionError:
            ratio, note = None, "qubit success probability is zero"
        gt3, gt2 = prepared["qutrit"].ground_truth, prepared["qubit"].ground_truth
        records.append(
            SweepRecord(
                instance_id=instance_id,
                seed=seed,
                problem=config.problem,
                T=T,
                P2=p2,
                P3=p3,
                ratio=ratio,
                ratio_note=note,
                R2=_energy_error_or_nan(r2),
                R3=_energy_error_or_nan(r3),
                E_g2=gt2.ground_energy,
                E_g3=gt3.ground_energy,
                gap2=gt2.gap,
                gap3=gt3.gap,
                degeneracy2=gt2.degeneracy,
                degeneracy3=gt3.degeneracy,
                steps2=r2.steps,
                steps3=r3.steps,
                wall_ms=1e3 * (time.perf_counter() - start),
            )
        )
    return records


def _failed(config: SweepConfig, instance_id: int, seed: int, T: float, exc: Exception) -> SweepRecord:
    nan = math.nan
    return SweepRecord(
        instance_id, seed, config.problem, T, nan, nan, None, "run failed",
        nan, nan, nan, nan, nan, nan, 0, 0, 0, 0, error=f"{type(exc).__name__}: {exc}",
    )  # fmt: skip


def run_sweep(config: SweepConfig, progress=None) -> list[SweepRecord]:
    """Run every instance; records come back ordered by (instance_id, T) whatever the worker count."""
    jobs = [(config, i) for i in range(config.n_instances)]
    records: list[SweepRecord] = []
    if config.workers <= 1:
        for job in jobs:
            records.extend(_sweep_instance(job))
            if progress:
                progress(job[1])
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for job, recs in zip(jobs, pool.map(_sweep_instance, jobs)):
                records.extend(recs)
                if progress:
                    progress(job[1])
    records.sort(key=lambda r: (r.instance_id, config.times.index(r.T)))
    return records


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records: list[SweepRecord], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow([_fmt(getattr(r, name)) for name in CSV_FIELDS])


def write_timing_csv(records: list[SweepRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance_id", "T", "wall_ms"])
        for r in records:
            writer.writerow([r.instance_id, repr(r.T), f"{r.wall_ms:.1f}"])


def read_records_csv(path: str | Path) -> list[SweepRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_FIELDS:
            raise ValueError(f"unexpected sweep CSV header {reader.fieldnames}")
        for row in reader:
            kwargs = {}
            for name, text in row.items():
                if name in _INT_FIELDS:
                    kwargs[name] = int(text)
                elif name in _FLOAT_FIELDS:
                    kwargs[name] = None if text == "" else float(text)
                else:
                    kwargs[name] = text
            out.append(SweepRecord(**kwargs))
    return out


HISTOGRAM_EDGES = (0.0, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0, 50.0, 100.0, math.inf)


def summarize(records: list[SweepRecord]) -> dict:
    """Per total time: mean ratio, fraction of instances with ratio > 1 and a histogram."""
    by_time: dict[float, list[SweepRecord]] = {}
    for r in records:
        by_time.setdefault(r.T, []).append(r)
    out = {"problem": records[0].problem if records else None, "times": []}
    for T in sorted(by_time):
        rows = by_time[T]
        ratios = np.array([r.ratio for r in rows if r.ratio is not None], dtype=float)
        counts, _ = np.histogram(ratios, bins=np.array(HISTOGRAM_EDGES))
        out["times"].append(
            {
                "T": T,
                "instances": len(rows),
                "valid_ratios": int(ratios.size),
                "undefined_ratios": sum(1 for r in rows if r.ratio is None),
                "failed": sum(1 for r in rows if r.error),
                "mean_ratio": float(ratios.mean()) if ratios.size else None,
                "median_ratio": float(np.median(ratios)) if ratios.size else None,
                "max_ratio": float(ratios.max()) if ratios.size else None,
                "fraction_ratio_gt_1": float(np.mean(ratios > 1)) if ratios.size else None,
                "mean_P2": float(np.nanmean([r.P2 for r in rows])),
                "mean_P3": float(np.nanmean([r.P3 for r in rows])),
                "histogram": {"edges": [e if math.isfinite(e) else "inf" for e in HISTOGRAM_EDGES], "counts": counts.tolist()},
            }
        )
    return out


def sweep_to_files(config: SweepConfig, out: str | Path, progress=None) -> dict:
    if config.n_instances > DESK_INSTANCES:
        log.warning("running %d instances; expect a long runtime", config.n_instances)
    records = run_sweep(config, progress)
    out = Path(out)
    write_records_csv(records, out)
    write_timing_csv(records, out.with_suffix(".timing.csv"))
    summary = summarize(records)
    summary["config"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()}
    out.with_suffix(".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def default_workers() -> int:
    return os.cpu_count() or 1
