"""Problem Hamiltonians for qutrit registers and the two-qubits-per-trit baseline.

Qutrit encodings are written term by term from the closed-form operator
expansions; the qubit baseline substitutes each trinary variable by a sum of
two Pauli-Z operators inside the classical cost function. Every Hamiltonian
is diagonal, and :func:`brute_force` evaluates the classical cost directly on
decoded basis states so it never touches the operator path.

Decoding (``q`` is the trinary variable, ``z`` a Z eigenvalue, ``bit`` a
qubit basis digit):

=============================  =======================  ========================
problem                        qutrit digit ``k``        qubit pair ``(a, b)``
=============================  =======================  ========================
partition, max 3-cut           ``q = k - 1`` (= -z)      ``q = (z_a + z_b) / 2``
portfolio                      ``q = 2 - k`` (= z + 1)   ``q = bit_a + bit_b``
=============================  =======================  ========================
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .algebra import HamiltonianTerms, Label, Term, basis_digits, local_diagonal
from .config import OMEGA0, degeneracy_window
from .instances import GraphInstance, Instance, PartitionInstance, PortfolioInstance

ENCODINGS = ("qutrit", "qubit")

_Key = tuple[tuple[int, Label], ...]


class DiagonalPolynomial:
    """Polynomial in commuting diagonal site operators, kept reduced per site.

    Supports ``+ - *`` with scalars and other polynomials so the classical
    cost functions below can be evaluated symbolically.
    """

    __slots__ = ("local_dim", "coeffs")

    def __init__(self, local_dim: int, coeffs: dict[_Key, float] | None = None):
        self.local_dim = local_dim
        self.coeffs: dict[_Key, float] = dict(coeffs or {})

    @classmethod
    def site(cls, local_dim: int, site: int, label: Label | str) -> DiagonalPolynomial:
        return cls(local_dim, {((site, Label(label)),): 1.0})

    def _lift(self, other) -> DiagonalPolynomial:
        if isinstance(other, DiagonalPolynomial):
            if other.local_dim != self.local_dim:
                raise ValueError("mixing local dimensions")
            return other
        return DiagonalPolynomial(self.local_dim, {(): float(other)})

    def __add__(self, other):
        other = self._lift(other)
        out = defaultdict(float, self.coeffs)
        for k, v in other.coeffs.items():
            out[k] += v
        return DiagonalPolynomial(self.local_dim, out)

    __radd__ = __add__

    def __neg__(self):
        return DiagonalPolynomial(self.local_dim, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = defaultdict(float)
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                out[self._reduce(ka + kb)] += va * vb
        return DiagonalPolynomial(self.local_dim, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = self._lift(1.0)
        for _ in range(k):
            out = out * self
        return out

    def _reduce(self, factors: _Key) -> _Key:
        per_site: dict[int, np.ndarray] = {}
        for site, lab in factors:
            diag = local_diagonal(lab, self.local_dim)
            per_site[site] = per_site[site] * diag if site in per_site else diag
        return tuple((site, self._label_for(per_site[site])) for site in sorted(per_site) if not self._is_identity(per_site[site]))

    def _is_identity(self, diag) -> bool:
        return np.array_equal(diag, np.ones(self.local_dim))

    def _label_for(self, diag) -> Label:
        for lab in (Label.Z, Label.G, Label.Q):
            try:
                if np.array_equal(diag, local_diagonal(lab, self.local_dim)):
                    return lab
            except ValueError:
                continue
        raise ValueError(f"on-site product {diag} is not a single site operator")

    def to_terms(self, n_sites: int, drop_tol: float = 0.0) -> HamiltonianTerms:
        terms = []
        offset = 0.0
        for key in sorted(self.coeffs, key=lambda k: (len(k), k)):
            c = self.coeffs[key]
            if abs(c) <= drop_tol:
                continue
            if key == ():
                offset += c
            else:
                terms.append(Term(c, key))
        return HamiltonianTerms(n_sites, self.local_dim, tuple(terms), offset)


# --- classical costs (work on floats, numpy arrays or DiagonalPolynomial) -------


def partition_cost(numbers, q):
    """``(C1 - C2)^2 + (C1 - C3)^2`` with q = +1, 0, -1 selecting partitions 1, 2, 3."""
    c1 = sum(0.5 * s * qj * (qj + 1) for s, qj in zip(numbers, q))
    c2 = sum(s * (1 - qj) * (1 + qj) for s, qj in zip(numbers, q))
    c3 = sum(0.5 * s * qj * (qj - 1) for s, qj in zip(numbers, q))
    return (c1 - c2) * (c1 - c2) + (c1 - c3) * (c1 - c3)


def max3cut_cost(edges, alpha, q):
    """Sum over edges of ``q_j q_k (q_j q_k + 1) + alpha (1 - q_j^2)(1 - q_k^2)``."""
    total = 0.0
    for j, k in edges:
        prod = q[j] * q[k]
        total = total + prod * (prod + 1) + alpha * (1 - q[j] * q[j]) * (1 - q[k] * q[k])
    return total


def portfolio_weights(inst: PortfolioInstance, q):
    """Integer holdings ``p_j = sum_k 3^(k-1) q_(j,k)`` from the flat digit list."""
    g = inst.digits
    return [sum(3**k * q[j * g + k] for k in range(g)) for j in range(inst.n_assets)]


def portfolio_cost(inst: PortfolioInstance, q):
    t1, t2, t3 = inst.thetas
    m, rho, b, gf = inst.expected_returns, inst.covariance, inst.budget, inst.granularity
    p = portfolio_weights(inst, q)
    n = inst.n_assets
    ret = sum(float(m[j]) * p[j] for j in range(n))
    risk = sum(float(rho[j, jj]) * p[j] * p[jj] for j in range(n) for jj in range(n))
    slack = sum(gf * b * p[j] for j in range(n)) - b
    return t1 * ret + t2 * risk + t3 * slack * slack


def classical_cost(inst: Instance, q):
    if isinstance(inst, PartitionInstance):
        return partition_cost(inst.numbers, q)
    if isinstance(inst, GraphInstance):
        return max3cut_cost(inst.edges, inst.alpha, q)
    if isinstance(inst, PortfolioInstance):
        return portfolio_cost(inst, q)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")


# --- qutrit encodings ----------------------------------------------------------


def encode_partition_qutrit(inst: PartitionInstance) -> HamiltonianTerms:
    """Sum over ordered pairs of ``(9GG - 6GZ - 12G + 4Z + 5ZZ + 4) s_j s_k / 4``."""
    d = 3
    n = inst.n_variables
    Z = [DiagonalPolynomial.site(d, j, Label.Z) for j in range(n)]
    G = [DiagonalPolynomial.site(d, j, Label.G) for j in range(n)]
    h = DiagonalPolynomial(d)
    for j, sj in enumerate(inst.numbers):
        for k, sk in enumerate(inst.numbers):
            pair = 9 * G[j] * G[k] - 6 * G[j] * Z[k] - 12 * G[j] + 4 * Z[j] + 5 * Z[j] * Z[k] + 4
            h = h + (sj * sk / 4) * pair
    return h.to_terms(n)


def encode_max3cut_qutrit(inst: GraphInstance) -> HamiltonianTerms:
    """Per edge ``(1 + alpha) G_j G_k + Z_j Z_k - alpha (G_j + G_k)`` plus the constant ``alpha``."""
    a = inst.alpha
    terms = []
    for j, k in inst.edges:
        terms += [
            Term(1 + a, ((j, Label.G), (k, Label.G))),
            Term(1.0, ((j, Label.Z), (k, Label.Z))),
            Term(-a, ((j, Label.G),)),
            Term(-a, ((k, Label.G),)),
        ]
    return HamiltonianTerms(inst.n_vertices, 3, tuple(terms), a * len(inst.edges))


def encode_portfolio_qutrit(inst: PortfolioInstance) -> HamiltonianTerms:
    """Linear and pairwise terms in ``Q_u = Z_u + I`` plus the constant ``theta3 b^2``."""
    d = 3
    t1, t2, t3 = inst.thetas
    b, gf, g, n = inst.budget, inst.granularity, inst.digits, inst.n_assets
    m, rho = inst.expected_returns, inst.covariance
    Q = [DiagonalPolynomial.site(d, u, Label.Z) + 1 for u in range(n * g)]
    h = DiagonalPolynomial(d, {(): t3 * b * b})
    for j in range(n):
        for k in range(g):
            coef = 3**k * (t1 * m[j] - t3 * 2 * b * b * gf)
            h = h + coef * Q[j * g + k]
    for j in range(n):
        for jj in range(n):
            for k in range(g):
                for kk in range(g):
                    coef = 3 ** (k + kk) * (t2 * rho[j, jj] + t3 * gf * gf * b * b)
                    h = h + coef * (Q[j * g + k] * Q[jj * g + kk])
    return h.to_terms(n * g)


# --- qubit baseline ------------------------------------------------------------


def _qubit_spin_variables(n_vars: int) -> list[DiagonalPolynomial]:
    return [
        0.5 * (DiagonalPolynomial.site(2, 2 * j, Label.Z) + DiagonalPolynomial.site(2, 2 * j + 1, Label.Z))
        for j in range(n_vars)
    ]


def _qubit_count_variables(n_vars: int) -> list[DiagonalPolynomial]:
    def bit(site):
        return 0.5 * (1 - DiagonalPolynomial.site(2, site, Label.Z))

    return [bit(2 * u) + bit(2 * u + 1) for u in range(n_vars)]


def encode_partition_qubit(inst: PartitionInstance) -> HamiltonianTerms:
    q = _qubit_spin_variables(inst.n_variables)
    return partition_cost(inst.numbers, q).to_terms(2 * inst.n_variables, drop_tol=1e-15)


def encode_max3cut_qubit(inst: GraphInstance) -> HamiltonianTerms:
    q = _qubit_spin_variables(inst.n_vertices)
    return max3cut_cost(inst.edges, inst.alpha, q).to_terms(2 * inst.n_vertices, drop_tol=1e-15)


def encode_portfolio_qubit(inst: PortfolioInstance) -> HamiltonianTerms:
    q = _qubit_count_variables(inst.n_variables)
    return portfolio_cost(inst, q).to_terms(2 * inst.n_variables, drop_tol=1e-15)


_ENCODERS = {
    ("partition", "qutrit"): encode_partition_qutrit,
    ("max3cut", "qutrit"): encode_max3cut_qutrit,
    ("portfolio", "qutrit"): encode_portfolio_qutrit,
    ("partition", "qubit"): encode_partition_qubit,
    ("max3cut", "qubit"): encode_max3cut_qubit,
    ("portfolio", "qubit"): encode_portfolio_qubit,
}


def encode(inst: Instance, encoding: str = "qutrit") -> HamiltonianTerms:
    try:
        encoder = _ENCODERS[(inst.problem, encoding)]
    except KeyError:
        raise ValueError(f"no {encoding!r} encoding for problem {inst.problem!r}") from None
    return encoder(inst)


def register_shape(inst: Instance, encoding: str) -> tuple[int, int]:
    """``(n_sites, local_dim)`` of the register used for ``inst``."""
    if encoding == "qutrit":
        return inst.n_variables, 3
    if encoding == "qubit":
        return 2 * inst.n_variables, 2
    raise ValueError(f"unknown encoding {encoding!r}")


def initial_hamiltonian(n_sites: int, local_dim: int, omega0: float = OMEGA0) -> HamiltonianTerms:
    """Transverse driver ``-omega0 sum_j X_j``."""
    if local_dim not in (2, 3):
        raise ValueError(f"unsupported local dimension {local_dim}")
    return HamiltonianTerms(n_sites, local_dim, tuple(Term(-omega0, ((j, Label.X),)) for j in range(n_sites)))


def decode_assignments(inst: Instance, encoding: str) -> np.ndarray:
    """``(n_variables, dim)`` trinary value of every variable in every basis state."""
    n_sites, d = register_shape(inst, encoding)
    digits = basis_digits(n_sites, d).astype(float)
    portfolio = isinstance(inst, PortfolioInstance)
    if encoding == "qutrit":
        return 2.0 - digits if portfolio else digits - 1.0
    if portfolio:
        return digits[0::2] + digits[1::2]
    z = 1.0 - 2.0 * digits
    return 0.5 * (z[0::2] + z[1::2])


# --- oracle --------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    ground_energy: float
    ground_states: np.ndarray
    gap: float
    diagonal: np.ndarray | None = None

    @property
    def degeneracy(self) -> int:
        return int(self.ground_states.size)


def ground_truth_from_diagonal(diag: np.ndarray, keep_diagonal: bool = True) -> GroundTruth:
    diag = np.asarray(diag, dtype=float)
    e_g = float(diag.min())
    window = degeneracy_window(e_g)
    ground = np.flatnonzero(diag <= e_g + window)
    excited = diag[diag > e_g + window]
    gap = float(excited.min() - e_g) if excited.size else 0.0
    return GroundTruth(e_g, ground, gap, diag if keep_diagonal else None)


def brute_force(inst: Instance, encoding: str = "qutrit", keep_diagonal: bool = True) -> GroundTruth:
    """Exact ground energy, ground set and gap by evaluating the cost on every basis state."""
    q = decode_assignments(inst, encoding)
    diag = np.broadcast_to(np.asarray(classical_cost(inst, list(q)), dtype=float), q.shape[1:]).copy()
    return ground_truth_from_diagonal(diag, keep_diagonal)
