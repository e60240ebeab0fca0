"""Independent reference implementations used only by the tests.

Nothing here imports the package's operator or encoding code: operators are
built from explicit Kronecker products and costs from the combinatorial
definitions of each problem (subset sums, monochromatic edges, budgets).
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

QUTRIT = {
    "X": np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=complex),
    "Z": np.diag([1.0, 0.0, -1.0]).astype(complex),
    "G": np.diag([1.0, 0.0, 1.0]).astype(complex),
    "Q": np.diag([2.0, 1.0, 0.0]).astype(complex),
    "Y": np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]),
    "I": np.eye(3, dtype=complex),
}
QUBIT = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
    "G": np.eye(2, dtype=complex),
    "I": np.eye(2, dtype=complex),
}


def kron_op(n: int, d: int, factors: dict[int, str]) -> np.ndarray:
    table = QUTRIT if d == 3 else QUBIT
    return reduce(np.kron, [table[factors.get(j, "I")] for j in range(n)])


def driver(n: int, d: int, omega0: float = 1.0) -> np.ndarray:
    return -omega0 * sum(kron_op(n, d, {j: "X"}) for j in range(n))


def assignments(n: int, d: int):
    """Basis states in index order; site 0 is the most significant digit."""
    return list(itertools.product(range(d), repeat=n))


def partition_value(numbers, groups) -> float:
    sums = [0.0, 0.0, 0.0]
    for s, g in zip(numbers, groups):
        sums[g] += s
    c1, c2, c3 = sums
    return (c1 - c2) ** 2 + (c1 - c3) ** 2


def partition_groups_qutrit(digits):
    # digit 2 -> partition 1, digit 1 -> partition 2, digit 0 -> partition 3
    return [2 - k for k in digits]


def partition_groups_qubit(bits):
    out = []
    for a, b in zip(bits[0::2], bits[1::2]):
        s = (1 - 2 * a) + (1 - 2 * b)  # z_a + z_b
        out.append({2: 0, 0: 1, -2: 2}[s])
    return out


def cut_value(edges, alpha, labels, zero_label) -> float:
    """Monochromatic edges cost 2, or alpha when both ends carry ``zero_label``."""
    total = 0.0
    for j, k in edges:
        if labels[j] == labels[k]:
            total += alpha if labels[j] == zero_label else 2.0
    return total


def cut_labels_qubit(bits):
    return [(1 - 2 * a) + (1 - 2 * b) for a, b in zip(bits[0::2], bits[1::2])]


def portfolio_value(m, rho, thetas, budget, digits_per_asset, holdings_digits) -> float:
    g = digits_per_asset
    n = len(m)
    gf = 1.0 / (3**g - 1)
    p = np.array([sum(3**k * holdings_digits[j * g + k] for k in range(g)) for j in range(n)], dtype=float)
    w = gf * budget * p
    t1, t2, t3 = thetas
    return t1 * float(np.dot(m, p)) + t2 * float(p @ np.asarray(rho) @ p) + t3 * (w.sum() - budget) ** 2


def brute_partition(numbers, encoding):
    n = len(numbers)
    if encoding == "qutrit":
        return np.array([partition_value(numbers, partition_groups_qutrit(a)) for a in assignments(n, 3)])
    return np.array([partition_value(numbers, partition_groups_qubit(a)) for a in assignments(2 * n, 2)])


def brute_cut(n, edges, alpha, encoding):
    if encoding == "qutrit":
        return np.array([cut_value(edges, alpha, a, 1) for a in assignments(n, 3)])
    return np.array([cut_value(edges, alpha, cut_labels_qubit(a), 0) for a in assignments(2 * n, 2)])


def brute_portfolio(m, rho, thetas, budget, g, encoding):
    nv = len(m) * g
    if encoding == "qutrit":
        return np.array([portfolio_value(m, rho, thetas, budget, g, [2 - k for k in a]) for a in assignments(nv, 3)])
    rows = []
    for a in assignments(2 * nv, 2):
        q = [x + y for x, y in zip(a[0::2], a[1::2])]
        rows.append(portfolio_value(m, rho, thetas, budget, g, q))
    return np.array(rows)


def brute_instance(inst, encoding):
    if inst.problem == "partition":
        return brute_partition(inst.numbers, encoding)
    if inst.problem == "max3cut":
        return brute_cut(inst.n_vertices, inst.edges, inst.alpha, encoding)
    return brute_portfolio(
        inst.expected_returns, inst.covariance, inst.thetas, inst.budget, inst.digits, encoding
    )


def three_colorable(n, edges) -> bool:
    for colors in itertools.product(range(3), repeat=n):
        if all(colors[a] != colors[b] for a, b in edges):
            return True
    return False


def commutator(a, b):
    return a @ b - b @ a


def gamma(k, lam, hi, hf):
    """Squared Frobenius norm of the k-fold nested commutator, built from scratch."""
    had = (1 - lam) * hi + lam * hf
    o = hf - hi
    for _ in range(k):
        o = had @ o - o @ had
    return float(np.sum(np.abs(o) ** 2))


def rk45_reference(h_of_t, psi0, T, rtol=1e-10, atol=1e-12):
    from scipy.integrate import solve_ivp

    sol = solve_ivp(lambda t, y: -1j * (h_of_t(t) @ y), (0.0, T), psi0, method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def fidelity(a, b) -> float:
    return float(abs(np.vdot(a, b)) ** 2)
