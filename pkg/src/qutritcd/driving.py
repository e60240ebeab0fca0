"""Schedule, adiabatic interpolation and the nested-commutator gauge potential.

Two routes are provided. The module-level functions (``h_ad``,
``nested_commutator``, ``agp_coefficients`` ...) work on dense matrices and
follow the definitions literally; they are meant for small registers and as
a check. :class:`CounterdiabaticDriver` exploits the structure used by every
encoding here (local driver, diagonal problem Hamiltonian) and is what the
dynamics code runs on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .algebra import (
    HamiltonianTerms,
    commutator,
    eig_hermitian,
    frobenius_norm_sq,
    local_matrix,
    materialize,
    materialize_sparse,
)
from .errors import DegenerateInputError

# --- schedule ------------------------------------------------------------------


def _check_time(t: float, total_time: float) -> None:
    if total_time <= 0:
        raise ValueError(f"total time must be positive, got {total_time}")
    slack = 1e-12 * total_time
    if np.any(np.asarray(t) < -slack) or np.any(np.asarray(t) > total_time + slack):
        raise ValueError(f"time {t} outside [0, {total_time}]")


def schedule_lambda(t, total_time: float):
    """``sin^2((pi/2) sin^2(pi t / 2T))``.

    Evaluated as ``1/2 + 1/2 sin((pi/2) sin(pi (t/T - 1/2)))``, the same
    function written around the midpoint, which makes ``lambda(0) = 0``,
    ``lambda(T/2) = 1/2`` and ``lambda(T) = 1`` exact in floating point.
    """
    _check_time(t, total_time)
    tau = np.asarray(t, dtype=float) / total_time - 0.5
    out = 0.5 + 0.5 * np.sin(0.5 * np.pi * np.sin(np.pi * tau))
    return float(out) if np.ndim(out) == 0 else out


def schedule_rate(t, total_time: float):
    """``d lambda / dt = (pi^2 / 4T) sin(pi sin^2(pi t / 2T)) sin(pi t / T)``."""
    _check_time(t, total_time)
    tau = np.asarray(t, dtype=float) / total_time - 0.5
    out = (np.pi**2 / (4 * total_time)) * np.cos(0.5 * np.pi * np.sin(np.pi * tau)) * np.cos(np.pi * tau)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Schedule:
    total_time: float

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total time must be positive, got {self.total_time}")

    def value(self, t):
        return schedule_lambda(t, self.total_time)

    def rate(self, t):
        return schedule_rate(t, self.total_time)


# --- dense reference route -----------------------------------------------------


def _dense(h) -> np.ndarray:
    return materialize(h) if isinstance(h, HamiltonianTerms) else np.asarray(h)


def h_ad(lam: float, h_i, h_f) -> np.ndarray:
    """``(1 - lambda) H_I + lambda H_F``."""
    if not -1e-12 <= lam <= 1 + 1e-12:
        raise ValueError(f"lambda {lam} outside [0, 1]")
    return (1 - lam) * _dense(h_i) + lam * _dense(h_f)


def nested_commutator(k: int, lam: float, h_i, h_f) -> np.ndarray:
    """``O_k = [H_ad, [H_ad, ... [H_ad, d_lambda H_ad]]]`` with ``k`` nestings."""
    if k < 1:
        raise ValueError("nesting depth must be at least 1")
    hi, hf = _dense(h_i), _dense(h_f)
    had = h_ad(lam, hi, hf)
    out = hf - hi
    for _ in range(k):
        out = commutator(had, out)
    return out


def gammas(count: int, lam: float, h_i, h_f) -> np.ndarray:
    """``[Gamma_1, ..., Gamma_count]`` with ``Gamma_k = ||O_k||_F^2``."""
    hi, hf = _dense(h_i), _dense(h_f)
    had = h_ad(lam, hi, hf)
    out = hf - hi
    values = []
    for _ in range(count):
        out = commutator(had, out)
        values.append(frobenius_norm_sq(out))
    return np.array(values)


@dataclass(frozen=True)
class AgpCoefficients:
    order: int
    gammas: np.ndarray
    alphas: np.ndarray

    @property
    def system(self) -> tuple[np.ndarray, np.ndarray]:
        """Hankel matrix ``M[r, c] = Gamma_{r+c+2}`` and right-hand side ``-Gamma_{r+1}``."""
        l = self.order
        g = self.gammas
        mat = np.array([[g[r + c + 1] for c in range(l)] for r in range(l)])
        return mat, -g[:l]

    def residual(self) -> float:
        mat, rhs = self.system
        return float(np.linalg.norm(mat @ self.alphas - rhs))


def solve_agp_system(order: int, gamma_values) -> np.ndarray:
    """Solve the ``order x order`` Hankel system for the expansion coefficients.

    The moments grow like ``s^k`` with ``s = Gamma_2 / Gamma_1``; the system is
    solved in rescaled moments ``Gamma_k / s^k`` and mapped back, which keeps
    the matrix well scaled for orders above one.
    """
    g = np.asarray(gamma_values, dtype=float)
    if order < 1:
        raise ValueError("order must be at least 1")
    if g.size < 2 * order:
        raise ValueError(f"need {2 * order} Gamma values, got {g.size}")
    if not (g[0] > 0 and g[1] > 0):
        raise DegenerateInputError("nested commutators vanish; initial and final Hamiltonians commute")
    if order == 1:
        return np.array([-g[0] / g[1]])
    s = g[1] / g[0]
    k = np.arange(1, g.size + 1)
    gs = g / s**k
    mat = np.array([[gs[r + c + 1] for c in range(order)] for r in range(order)])
    try:
        beta = np.linalg.solve(mat, -gs[:order])
    except np.linalg.LinAlgError:
        raise DegenerateInputError("singular Gamma matrix") from None
    alphas = beta / s ** np.arange(1, order + 1)
    # one refinement step against the unscaled system
    raw = np.array([[g[r + c + 1] for c in range(order)] for r in range(order)])
    correction = np.linalg.solve(mat, (-g[:order] - raw @ alphas) / s ** np.arange(1, order + 1))
    return alphas + correction / s ** np.arange(1, order + 1)


def agp_coefficients(order: int, lam: float, h_i, h_f) -> AgpCoefficients:
    g = gammas(2 * order, lam, h_i, h_f)
    return AgpCoefficients(order, g, solve_agp_system(order, g))


def agp_first_order(lam: float, h_i, h_f) -> np.ndarray:
    """``A = i alpha_1 [H_I, H_F]`` with ``alpha_1 = -Gamma_1 / Gamma_2``; zero if they commute."""
    hi, hf = _dense(h_i), _dense(h_f)
    o1 = commutator(hi, hf)
    try:
        coeffs = agp_coefficients(1, lam, hi, hf)
    except DegenerateInputError:
        return np.zeros_like(o1)
    return 1j * coeffs.alphas[0] * o1


def full_hamiltonian_dense(t: float, schedule: Schedule, h_i, h_f) -> np.ndarray:
    """``(1 - lambda) H_I + lambda H_F + lambda_dot A_lambda`` from the dense route."""
    lam, lam_dot = schedule.value(t), schedule.rate(t)
    return h_ad(lam, h_i, h_f) + lam_dot * agp_first_order(lam, h_i, h_f)


# --- structured route ----------------------------------------------------------


def _row_norm(mat: sp.spmatrix) -> float:
    return float(np.max(np.asarray(abs(mat).sum(axis=1)), initial=0.0))


@dataclass
class CounterdiabaticDriver:
    """First-order counterdiabatic Hamiltonian for a diagonal problem Hamiltonian.

    ``O_1 = [H_I, H_F]`` is lambda independent and sparse (it has the
    pattern of ``H_I``). ``Gamma_2(lambda) = ||(1 - lambda) P + lambda R||^2``
    with ``P = [H_I, O_1]`` and ``R = [H_F, O_1]`` is a quadratic polynomial
    in lambda, so three inner products fix it exactly for all lambda.
    """

    h_initial: HamiltonianTerms
    h_final: HamiltonianTerms
    h_i_sparse: sp.csr_matrix = field(init=False, repr=False)
    h_f_diag: np.ndarray = field(init=False, repr=False)
    generator: sp.csr_matrix = field(init=False, repr=False)
    gamma1: float = field(init=False)
    gamma2_coeffs: tuple[float, float, float] = field(init=False)
    degenerate: bool = field(init=False)

    def __post_init__(self):
        hi, hf = self.h_initial, self.h_final
        if (hi.n_sites, hi.local_dim) != (hf.n_sites, hf.local_dim):
            raise ValueError("initial and final Hamiltonians act on different registers")
        if not hf.is_diagonal:
            raise ValueError("the structured driver needs a diagonal final Hamiltonian")
        k = materialize_sparse(hi).tocoo()
        f = hf.diagonal()
        # [K, F]_xy = K_xy (f_y - f_x)
        o1 = sp.csr_matrix((k.data * (f[k.col] - f[k.row]), (k.row, k.col)), shape=k.shape)
        k = k.tocsr()
        p = (k @ o1 - o1 @ k).tocsr()
        o1c = o1.tocoo()
        r = sp.csr_matrix(((f[o1c.row] - f[o1c.col]) * o1c.data, (o1c.row, o1c.col)), shape=k.shape)
        self.h_i_sparse = k
        self.h_f_diag = f
        self.generator = (1j * o1).tocsr()
        self.gamma1 = frobenius_norm_sq(o1)
        a = frobenius_norm_sq(p)
        c = frobenius_norm_sq(r)
        b = float(np.real(p.conj().multiply(r).sum()))
        self.gamma2_coeffs = (a, b, c)
        scale = frobenius_norm_sq(k) * float(np.max(np.abs(f), initial=0.0)) ** 2
        self.degenerate = not self.gamma1 > 1e-24 * max(scale, 1e-300)
        if self.degenerate:
            warnings.warn("[H_I, H_F] vanishes; running without counterdiabatic term", RuntimeWarning, stacklevel=2)

    @property
    def n_sites(self) -> int:
        return self.h_initial.n_sites

    @property
    def local_dim(self) -> int:
        return self.h_initial.local_dim

    @property
    def dim(self) -> int:
        return self.h_initial.dim

    def gamma2(self, lam: float) -> float:
        a, b, c = self.gamma2_coeffs
        return (1 - lam) ** 2 * a + 2 * lam * (1 - lam) * b + lam**2 * c

    def alpha1(self, lam: float) -> float:
        if self.degenerate:
            return 0.0
        g2 = self.gamma2(lam)
        if not g2 > 0:
            raise DegenerateInputError(f"Gamma_2 vanishes at lambda={lam}")
        return -self.gamma1 / g2

    def apply(self, psi: np.ndarray, lam: float, cd_coeff: float) -> np.ndarray:
        """``[(1 - lam) H_I + lam H_F + cd_coeff * i O_1] psi``; ``cd_coeff = lambda_dot * alpha_1``."""
        out = (1 - lam) * (self.h_i_sparse @ psi) + lam * (self.h_f_diag * psi)
        if cd_coeff:
            out += cd_coeff * (self.generator @ psi)
        return out

    def norm_bound(self, lam: float, cd_coeff: float) -> float:
        """Row-sum upper bound on the spectral norm of the Hamiltonian ``apply`` implements."""
        return (
            (1 - lam) * self._h_i_bound
            + lam * float(np.max(np.abs(self.h_f_diag), initial=0.0))
            + abs(cd_coeff) * self._generator_bound
        )

    def rms_scale(self, lam: float, cd_coeff: float) -> float:
        """``||H||_F / sqrt(dim)``, the root-mean-square eigenvalue, in closed form.

        Cross terms with the generator vanish: ``Tr(K [K, F]) = 0`` and
        ``[K, F]`` has a zero diagonal.
        """
        fro2 = (
            (1 - lam) ** 2 * self._h_i_fro2
            + lam**2 * float(self.h_f_diag @ self.h_f_diag)
            + 2 * lam * (1 - lam) * float(self.h_i_sparse.diagonal().real @ self.h_f_diag)
            + cd_coeff**2 * self._generator_fro2
        )
        return math.sqrt(max(fro2, 0.0) / self.dim)

    @cached_property
    def _h_i_fro2(self) -> float:
        return frobenius_norm_sq(self.h_i_sparse)

    @cached_property
    def _generator_fro2(self) -> float:
        return frobenius_norm_sq(self.generator)

    @cached_property
    def _h_i_bound(self) -> float:
        return _row_norm(self.h_i_sparse)

    @cached_property
    def _generator_bound(self) -> float:
        return _row_norm(self.generator)

    def dense(self, lam: float, cd_coeff: float) -> np.ndarray:
        return (
            (1 - lam) * self.h_i_sparse.toarray()
            + lam * np.diag(self.h_f_diag.astype(complex))
            + cd_coeff * self.generator.toarray()
        )

    def agp(self, lam: float) -> np.ndarray:
        """Dense ``A_lambda = alpha_1(lambda) * i [H_I, H_F]``."""
        return self.alpha1(lam) * self.generator.toarray()

    @cached_property
    def generator_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition of ``i [H_I, H_F]``, reused by every AGP exponential."""
        return eig_hermitian(self.generator.toarray())

    @cached_property
    def local_driver(self) -> list[np.ndarray] | None:
        """Per-site ``d x d`` blocks of ``H_I`` if it is a sum of one-site terms."""
        if any(len(t.factors) > 1 for t in self.h_initial.terms):
            return None
        d = self.local_dim
        ops = [np.zeros((d, d), dtype=complex) for _ in range(self.n_sites)]
        for t in self.h_initial.terms:
            (site, lab), = t.factors
            ops[site] += t.coefficient * local_matrix(lab, d)
        ops[0] = ops[0] + self.h_initial.constant_offset * np.eye(d)
        return ops


@dataclass
class TimeDependentHamiltonian:
    """``H(t)`` for one schedule; ``agp_scale`` = 1 for the optimised sign, 0 disables, -1 flips."""

    driver: CounterdiabaticDriver
    schedule: Schedule
    agp_scale: float = 1.0

    def parameters(self, t: float) -> tuple[float, float]:
        """``(lambda, cd_coeff)`` at time ``t``."""
        lam = self.schedule.value(t)
        lam_dot = self.schedule.rate(t)
        if not self.agp_scale or lam_dot == 0.0:
            return lam, 0.0
        return lam, self.agp_scale * lam_dot * self.driver.alpha1(lam)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        lam, c = self.parameters(t)
        return self.driver.apply(psi, lam, c)

    def dense(self, t: float) -> np.ndarray:
        lam, c = self.parameters(t)
        return self.driver.dense(lam, c)

    def norm_bound(self, samples: int = 257) -> float:
        ts = np.linspace(0.0, self.schedule.total_time, samples)
        return max(self.driver.norm_bound(*self.parameters(t)) for t in ts)

    def rms_scale(self, samples: int = 257) -> float:
        """Largest root-mean-square eigenvalue of ``H(t)`` over a uniform time grid."""
        ts = np.linspace(0.0, self.schedule.total_time, samples)
        return max(self.driver.rms_scale(*self.parameters(t)) for t in ts)


def full_hamiltonian(t: float, h: TimeDependentHamiltonian) -> np.ndarray:
    return h.dense(t)
