"""Qudit operator kernel.

Single-site matrices for qubits and qutrits, p-local Hamiltonians built from
them, and the dense linear algebra used by the driving and dynamics code.

Basis convention: site 0 is the most significant digit, so the basis index of
a product state is ``sum_j digit_j * d**(n - 1 - j)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse as sp

from .config import HERMITIAN_TOL, max_dense_dim, max_diagonal_dim
from .errors import ResourceLimitError


class Label(str, enum.Enum):
    X = "X"
    Z = "Z"
    G = "G"
    Y = "Y"
    Q = "Q"
    I = "I"  # noqa: E741


DIAGONAL_LABELS = frozenset({Label.Z, Label.G, Label.Q, Label.I})

_QUTRIT = {
    Label.X: [[1, 1, 0], [1, 0, 1], [0, 1, 1]],
    Label.Z: [[1, 0, 0], [0, 0, 0], [0, 0, -1]],
    Label.G: [[1, 0, 0], [0, 0, 0], [0, 0, 1]],
    Label.Y: [[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]],
    Label.Q: [[2, 0, 0], [0, 1, 0], [0, 0, 0]],
    Label.I: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
}

_QUBIT = {
    Label.X: [[0, 1], [1, 0]],
    Label.Z: [[1, 0], [0, -1]],
    # Z**2 is the identity for a qubit
    Label.G: [[1, 0], [0, 1]],
    Label.I: [[1, 0], [0, 1]],
}

_TABLES = {2: _QUBIT, 3: _QUTRIT}


@dataclass(frozen=True)
class SiteOperator:
    label: Label
    local_dim: int
    matrix: np.ndarray

    @property
    def is_diagonal(self) -> bool:
        return self.label in DIAGONAL_LABELS


@lru_cache(maxsize=None)
def _cached_matrix(label: Label, local_dim: int) -> np.ndarray:
    table = _TABLES.get(local_dim)
    if table is None or label not in table:
        raise ValueError(f"operator {label.value!r} is not defined for local dimension {local_dim}")
    mat = np.array(table[label], dtype=complex)
    mat.setflags(write=False)
    return mat


def site_matrix(label: Label | str, local_dim: int) -> SiteOperator:
    """Return the single-site operator ``label`` for a ``local_dim``-level site."""
    label = Label(label)
    return SiteOperator(label, local_dim, _cached_matrix(label, local_dim))


def local_matrix(label: Label | str, local_dim: int) -> np.ndarray:
    return _cached_matrix(Label(label), local_dim)


def local_diagonal(label: Label | str, local_dim: int) -> np.ndarray:
    label = Label(label)
    if label not in DIAGONAL_LABELS:
        raise ValueError(f"operator {label.value!r} is not diagonal")
    return _cached_matrix(label, local_dim).diagonal().real.copy()


@dataclass(frozen=True)
class Term:
    coefficient: float
    factors: tuple[tuple[int, Label], ...]

    def __post_init__(self):
        factors = tuple(sorted((int(s), Label(lab)) for s, lab in self.factors))
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))
        sites = [s for s, _ in factors]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in term factors {factors}")

    @property
    def is_diagonal(self) -> bool:
        return all(lab in DIAGONAL_LABELS for _, lab in self.factors)


@dataclass(frozen=True)
class HamiltonianTerms:
    """Weighted sum of products of single-site operators plus a constant.

    ``H = constant_offset * I + sum_t c_t prod_j O_{t,j}``
    """

    n_sites: int
    local_dim: int
    terms: tuple[Term, ...] = ()
    constant_offset: float = 0.0

    def __post_init__(self):
        if self.local_dim not in _TABLES:
            raise ValueError(f"unsupported local dimension {self.local_dim}")
        if self.n_sites < 1:
            raise ValueError("need at least one site")
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        for term in terms:
            for site, lab in term.factors:
                if not 0 <= site < self.n_sites:
                    raise ValueError(f"site {site} outside [0, {self.n_sites})")
                local_matrix(lab, self.local_dim)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "constant_offset", float(self.constant_offset))

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_sites

    @property
    def is_diagonal(self) -> bool:
        return all(t.is_diagonal for t in self.terms)

    @property
    def max_locality(self) -> int:
        return max((len(t.factors) for t in self.terms), default=0)

    def diagonal(self) -> np.ndarray:
        """Real diagonal of a diagonal Hamiltonian, computed without a dense matrix."""
        if not self.is_diagonal:
            raise ValueError("Hamiltonian has off-diagonal terms")
        if self.dim > max_diagonal_dim():
            raise ResourceLimitError(f"diagonal of dimension {self.dim} exceeds cap {max_diagonal_dim()}")
        shape = (self.local_dim,) * self.n_sites
        out = np.full(shape, self.constant_offset)
        for term in self.terms:
            value = np.asarray(term.coefficient)
            for site, lab in term.factors:
                bshape = [1] * self.n_sites
                bshape[site] = self.local_dim
                value = value * local_diagonal(lab, self.local_dim).reshape(bshape)
            out += value
        return out.reshape(-1)

    def scaled(self, factor: float) -> HamiltonianTerms:
        return HamiltonianTerms(
            self.n_sites,
            self.local_dim,
            tuple(Term(factor * t.coefficient, t.factors) for t in self.terms),
            factor * self.constant_offset,
        )

    def __add__(self, other: HamiltonianTerms) -> HamiltonianTerms:
        if (self.n_sites, self.local_dim) != (other.n_sites, other.local_dim):
            raise ValueError("cannot add Hamiltonians on different registers")
        return HamiltonianTerms(
            self.n_sites,
            self.local_dim,
            self.terms + other.terms,
            self.constant_offset + other.constant_offset,
        )

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "local_dim": self.local_dim,
            "constant_offset": self.constant_offset,
            "terms": [
                {"coefficient": t.coefficient, "factors": [[s, lab.value] for s, lab in t.factors]}
                for t in self.terms
            ],
        }


def _check_dense_dim(dim: int) -> None:
    if dim > max_dense_dim():
        raise ResourceLimitError(f"dense dimension {dim} exceeds cap {max_dense_dim()}")


def _term_sparse(term: Term, n_sites: int, local_dim: int) -> sp.csr_matrix:
    ops = dict(term.factors)
    mats = [sp.csr_matrix(local_matrix(ops.get(j, Label.I), local_dim)) for j in range(n_sites)]
    return term.coefficient * reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)


def materialize_sparse(h: HamiltonianTerms) -> sp.csr_matrix:
    """Sparse matrix of ``h`` (Kronecker embedding, site 0 most significant)."""
    if h.dim > max_diagonal_dim():
        raise ResourceLimitError(f"dimension {h.dim} exceeds cap {max_diagonal_dim()}")
    diag_part = HamiltonianTerms(h.n_sites, h.local_dim, tuple(t for t in h.terms if t.is_diagonal), h.constant_offset)
    out = sp.diags(diag_part.diagonal().astype(complex), format="csr")
    for term in h.terms:
        if not term.is_diagonal:
            out = out + _term_sparse(term, h.n_sites, h.local_dim)
    out.sum_duplicates()
    return out.tocsr()


def materialize(h: HamiltonianTerms) -> np.ndarray:
    """Dense complex matrix of ``h``."""
    _check_dense_dim(h.dim)
    if h.is_diagonal:
        return np.diag(h.diagonal().astype(complex))
    return materialize_sparse(h).toarray()


def _as_dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def commutator(a, b):
    """``AB - BA``; works for dense arrays or scipy sparse matrices."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def frobenius_norm_sq(a) -> float:
    if sp.issparse(a):
        data = a.tocsr().data
        return float(np.vdot(data, data).real)
    a = np.asarray(a)
    return float(np.vdot(a, a).real)


def hermiticity_error(a) -> float:
    a = _as_dense(a)
    return float(np.max(np.abs(a - a.conj().T), initial=0.0))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = _as_dense(a)
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return hermiticity_error(a) <= tol * scale


def eig_hermitian(a) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and column eigenvectors of a Hermitian matrix."""
    a = _as_dense(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not is_hermitian(a):
        raise ValueError(f"matrix is not Hermitian (max deviation {hermiticity_error(a):.3e})")
    return np.linalg.eigh(a)


def eigvals_hermitian(a) -> np.ndarray:
    a = _as_dense(a)
    if not is_hermitian(a):
        raise ValueError(f"matrix is not Hermitian (max deviation {hermiticity_error(a):.3e})")
    return np.linalg.eigvalsh(a)


def expm_hermitian(a, scale: complex) -> np.ndarray:
    """``exp(scale * A)`` for Hermitian ``A``.

    A 1-D input is treated as the diagonal of a diagonal operator and the
    exponential is returned as a 1-D vector of phases.
    """
    a = np.asarray(_as_dense(a))
    if a.ndim == 1:
        return np.exp(scale * a)
    w, v = eig_hermitian(a)
    return (v * np.exp(scale * w)) @ v.conj().T


def apply_local(psi: np.ndarray, op: np.ndarray, site: int, n_sites: int, local_dim: int) -> np.ndarray:
    """Apply a ``local_dim x local_dim`` operator on ``site`` to a state vector."""
    left = local_dim**site
    right = local_dim ** (n_sites - site - 1)
    return np.matmul(op, psi.reshape(left, local_dim, right)).reshape(-1)


def basis_digits(n_sites: int, local_dim: int) -> np.ndarray:
    """``(n_sites, d**n_sites)`` array of the digit of every site for every basis index."""
    dim = local_dim**n_sites
    if dim > max_diagonal_dim():
        raise ResourceLimitError(f"dimension {dim} exceeds cap {max_diagonal_dim()}")
    idx = np.arange(dim)
    powers = local_dim ** np.arange(n_sites - 1, -1, -1)
    return ((idx[None, :] // powers[:, None]) % local_dim).astype(np.int8)
