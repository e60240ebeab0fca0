"""Problem instances, seeded random generators and file formats.

Instance files are JSON objects with a ``schema_version`` and a ``problem``
tag (``partition``, ``max3cut`` or ``portfolio``); the remaining keys mirror
the dataclass fields below. Price files are CSV with a header row, an ISO
date in the first column and one closing-price column per asset.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InstanceFormatError

SCHEMA_VERSION = 1

DEFAULT_ALPHA = 1.0
DEFAULT_THETAS = (-1.0, 1.0, 1.0)
DEFAULT_BUDGET = 1.0

PSD_TOL = -1e-10
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class PartitionInstance:
    numbers: tuple[float, ...]

    problem = "partition"

    def __post_init__(self):
        numbers = tuple(float(s) for s in self.numbers)
        if not numbers:
            raise ValueError("partition set must contain at least one number")
        if not all(math.isfinite(s) for s in numbers):
            raise ValueError("partition numbers must be finite")
        object.__setattr__(self, "numbers", numbers)

    @property
    def n_variables(self) -> int:
        return len(self.numbers)


@dataclass(frozen=True)
class GraphInstance:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]
    alpha: float = DEFAULT_ALPHA

    problem = "max3cut"

    def __post_init__(self):
        if self.n_vertices < 2:
            raise ValueError("max 3-cut needs at least two vertices")
        if not self.alpha > 0:
            raise ValueError("penalty alpha must be positive")
        edges = []
        seen = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise ValueError(f"edge ({a}, {b}) references a missing vertex")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            edges.append(key)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_variables(self) -> int:
        return self.n_vertices


@dataclass(frozen=True)
class PortfolioInstance:
    expected_returns: np.ndarray
    covariance: np.ndarray
    thetas: tuple[float, float, float] = DEFAULT_THETAS
    budget: float = DEFAULT_BUDGET
    digits: int = 1
    granularity: float | None = field(default=None)

    problem = "portfolio"

    def __post_init__(self):
        m = np.array(self.expected_returns, dtype=float).reshape(-1)
        rho = np.array(self.covariance, dtype=float)
        n = m.size
        if n < 1:
            raise ValueError("portfolio needs at least one asset")
        if rho.shape != (n, n):
            raise ValueError(f"covariance shape {rho.shape} does not match {n} assets")
        if np.max(np.abs(rho - rho.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(rho))):
            raise ValueError("covariance matrix is not symmetric")
        if np.linalg.eigvalsh(rho).min() < PSD_TOL:
            raise ValueError("covariance matrix is not positive semidefinite")
        if self.digits < 1:
            raise ValueError("need at least one trinary digit per asset")
        expected_gf = 1.0 / (3**self.digits - 1)
        gf = expected_gf if self.granularity is None else float(self.granularity)
        if not math.isclose(gf, expected_gf, rel_tol=1e-12):
            raise ValueError(f"granularity {gf} inconsistent with {self.digits} trinary digits")
        m.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "expected_returns", m)
        object.__setattr__(self, "covariance", rho)
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "budget", float(self.budget))
        object.__setattr__(self, "granularity", gf)

    @property
    def n_assets(self) -> int:
        return self.expected_returns.size

    @property
    def n_variables(self) -> int:
        return self.n_assets * self.digits

    def __eq__(self, other):
        if not isinstance(other, PortfolioInstance):
            return NotImplemented
        return (
            np.array_equal(self.expected_returns, other.expected_returns)
            and np.array_equal(self.covariance, other.covariance)
            and self.thetas == other.thetas
            and self.budget == other.budget
            and self.digits == other.digits
        )

    __hash__ = None


Instance = Union[PartitionInstance, GraphInstance, PortfolioInstance]


# --- reference instances -------------------------------------------------------

FIG1_SET = (0.8, 1.1, 1.1, 0.7, 1.0, 0.3)
FIG5_SET = (8 / 10, 11 / 10, 15 / 10, 7 / 10, 10 / 10, 3 / 10)
FIG8_SET = (0.252, 0.205, 0.123, 0.798, 0.726, 0.086)

REFERENCE_ASSETS = ("AAPL", "MSFT", "GOOGL", "AMZN", "TSLA", "NFLX")
REFERENCE_RETURNS = 1e-4 * np.array([10.24, 1.411, 5.730, 8.082, 4.122, 29.64])
# As printed, including the "4,987" cell (read as 4.987), the 4.768/4.77
# asymmetric pair and the TSLA variance 1.067; the printed matrix is indefinite.
PRINTED_COVARIANCE = 1e-4 * np.array(
    [
        [5.413, 3.799, 3.696, 4.133, 3.690, 5.495],
        [3.799, 6.062, 3.638, 3.781, 4.768, 5.343],
        [3.696, 3.638, 4.730, 3.953, 3.543, 4.474],
        [4.133, 3.781, 3.953, 4.794, 3.631, 4.987],
        [3.690, 4.77, 3.543, 3.631, 1.067, 6.067],
        [5.495, 5.343, 4.474, 4.987, 6.067, 20.67],
    ]
)
TSLA_VARIANCE_CORRECTED = 10.67e-4


def reference_covariance() -> np.ndarray:
    """Symmetrised printed covariance with the TSLA variance read as 10.67e-4.

    With the printed 1.067e-4 the matrix has a negative eigenvalue (TSLA's
    variance would be smaller than its covariance with NFLX), so a dropped
    digit is assumed.
    """
    rho = 0.5 * (PRINTED_COVARIANCE + PRINTED_COVARIANCE.T)
    rho[4, 4] = TSLA_VARIANCE_CORRECTED
    return rho


def wheel_graph(n_vertices: int = 6, alpha: float = DEFAULT_ALPHA) -> GraphInstance:
    """Wheel W_n: a cycle on vertices 1..n-1 plus hub 0 joined to every rim vertex."""
    rim = list(range(1, n_vertices))
    edges = [(0, v) for v in rim]
    edges += [(rim[i], rim[(i + 1) % len(rim)]) for i in range(len(rim))]
    return GraphInstance(n_vertices, tuple(edges), alpha)


def reference_portfolio(
    n_assets: int = 6,
    digits: int = 1,
    thetas: tuple[float, float, float] = DEFAULT_THETAS,
    budget: float = DEFAULT_BUDGET,
) -> PortfolioInstance:
    rho = reference_covariance()[:n_assets, :n_assets]
    return PortfolioInstance(REFERENCE_RETURNS[:n_assets], rho, thetas, budget, digits)


def reference_instance(name: str) -> Instance:
    """Named instances used in the figures: fig1, fig5, fig8, wheel6, portfolio6, portfolio3g2."""
    table = {
        "fig1": lambda: PartitionInstance(FIG1_SET),
        "fig5": lambda: PartitionInstance(FIG5_SET),
        "fig8": lambda: PartitionInstance(FIG8_SET),
        "wheel6": lambda: wheel_graph(6),
        "portfolio6": lambda: reference_portfolio(6, 1),
        "portfolio3g2": lambda: reference_portfolio(3, 2),
    }
    try:
        return table[name]()
    except KeyError:
        raise ValueError(f"unknown reference instance {name!r}; choose from {sorted(table)}") from None


# --- random instances ----------------------------------------------------------


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def random_partition(n_numbers: int, seed: int) -> PartitionInstance:
    """``n_numbers`` values drawn uniformly from [0, 1)."""
    if n_numbers < 1:
        raise ValueError("need at least one number")
    return PartitionInstance(tuple(_rng(seed).uniform(0.0, 1.0, n_numbers)))


def is_connected(n_vertices: int, edges) -> bool:
    adj = {v: set() for v in range(n_vertices)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v] - seen:
            seen.add(w)
            stack.append(w)
    return len(seen) == n_vertices


def random_graph(
    n_vertices: int, seed: int, edge_probability: float = 0.5, alpha: float = DEFAULT_ALPHA
) -> GraphInstance:
    """Erdos-Renyi graph, redrawn from the same stream until connected."""
    if n_vertices < 2:
        raise ValueError("need at least two vertices")
    rng = _rng(seed)
    pairs = [(a, b) for a in range(n_vertices) for b in range(a + 1, n_vertices)]
    while True:
        keep = rng.random(len(pairs)) < edge_probability
        edges = tuple(p for p, k in zip(pairs, keep) if k)
        if is_connected(n_vertices, edges):
            return GraphInstance(n_vertices, edges, alpha)


RANDOM_RETURN_MAX = 3e-3
RANDOM_MEAN_VARIANCE = 5e-4


def random_portfolio(
    n_assets: int,
    seed: int,
    digits: int = 1,
    thetas: tuple[float, float, float] = DEFAULT_THETAS,
    budget: float = DEFAULT_BUDGET,
) -> PortfolioInstance:
    """Returns uniform on [0, 3e-3]; covariance ``A A^T`` rescaled to mean variance 5e-4."""
    if n_assets < 1:
        raise ValueError("need at least one asset")
    rng = _rng(seed)
    m = rng.uniform(0.0, RANDOM_RETURN_MAX, n_assets)
    a = rng.standard_normal((n_assets, n_assets))
    rho = a @ a.T
    rho *= RANDOM_MEAN_VARIANCE / np.mean(np.diag(rho))
    rho = 0.5 * (rho + rho.T)
    return PortfolioInstance(m, rho, thetas, budget, digits)


def random_instance(problem: str, size: int, seed: int, **kwargs) -> Instance:
    if problem == "partition":
        return random_partition(size, seed)
    if problem == "max3cut":
        return random_graph(size, seed, **kwargs)
    if problem == "portfolio":
        return random_portfolio(size, seed, **kwargs)
    raise ValueError(f"unknown problem {problem!r}")


# --- JSON ----------------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    base = {"schema_version": SCHEMA_VERSION, "problem": inst.problem}
    if isinstance(inst, PartitionInstance):
        base["numbers"] = list(inst.numbers)
    elif isinstance(inst, GraphInstance):
        base.update(n_vertices=inst.n_vertices, edges=[list(e) for e in inst.edges], alpha=inst.alpha)
    else:
        base.update(
            expected_returns=inst.expected_returns.tolist(),
            covariance=inst.covariance.tolist(),
            thetas=list(inst.thetas),
            budget=inst.budget,
            digits=inst.digits,
        )
    return base


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InstanceFormatError(f"unsupported schema_version {version!r}")
    problem = data.get("problem")
    try:
        if problem == "partition":
            return PartitionInstance(tuple(data["numbers"]))
        if problem == "max3cut":
            return GraphInstance(
                int(data["n_vertices"]),
                tuple(tuple(e) for e in data["edges"]),
                float(data.get("alpha", DEFAULT_ALPHA)),
            )
        if problem == "portfolio":
            return PortfolioInstance(
                data["expected_returns"],
                data["covariance"],
                tuple(data.get("thetas", DEFAULT_THETAS)),
                float(data.get("budget", DEFAULT_BUDGET)),
                int(data.get("digits", 1)),
            )
    except KeyError as exc:
        raise InstanceFormatError(f"{problem} instance is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"invalid {problem} instance: {exc}") from None
    raise InstanceFormatError(f"unknown problem tag {problem!r}")


def load_instance(path: str | Path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None
    return instance_from_dict(data)


def dump_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


# --- prices --------------------------------------------------------------------


def portfolio_stats_from_prices(source) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Mean daily simple return and sample covariance from a closing-price CSV.

    ``source`` is a path or a text stream. Rows with an empty cell are
    dropped; any other unparsable cell raises ``InstanceFormatError`` naming
    the row and column. Returns ``(m, rho, asset_names)``.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return portfolio_stats_from_prices(io.StringIO(fh.read()))
    rows = list(csv.reader(source))
    if not rows:
        raise InstanceFormatError("price file is empty")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise InstanceFormatError("price header needs a date column and at least one asset")
    prices = []
    for lineno, row in enumerate(body, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise InstanceFormatError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            date.fromisoformat(row[0].strip())
        except ValueError:
            raise InstanceFormatError(f"row {lineno}, column 1: {row[0]!r} is not an ISO date") from None
        if any(cell.strip() == "" for cell in row[1:]):
            continue
        values = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                values.append(float(cell))
            except ValueError:
                raise InstanceFormatError(f"row {lineno}, column {col}: {cell!r} is not numeric") from None
        prices.append(values)
    if len(prices) < 3:
        raise InstanceFormatError("need at least three complete price rows for a sample covariance")
    p = np.array(prices)
    returns = p[1:] / p[:-1] - 1.0
    m = returns.mean(axis=0)
    rho = np.atleast_2d(np.cov(returns, rowvar=False, ddof=1))
    return m, rho, [h.strip() for h in header[1:]]
