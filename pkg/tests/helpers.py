"""Shared test utilities: statistical tolerances and independent matrix oracles.

The matrix oracles build operators with plain numpy kron/diag calls so
that circuit-level code is checked against an implementation it shares
nothing with.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import chi2

# Two-sided 5-sigma tail probability of a normal.
FIVE_SIGMA_PVALUE = 5.733e-7


def five_sigma(p: float, n: int) -> float:
    """Half-width of the 5-sigma band for a frequency estimate of p over n trials."""
    return 5.0 * math.sqrt(p * (1.0 - p) / n)


def assert_frequency(count: int, n: int, p: float, label: str = "") -> None:
    """Assert an observed count is within 5 sigma of a binomial expectation."""
    assert n > 0, f"{label}: no samples"
    deviation = abs(count / n - p)
    bound = five_sigma(p, n)
    assert deviation <= bound, (
        f"{label}: frequency {count}/{n} = {count / n:.5f} deviates from {p:.5f} "
        f"by {deviation:.5f} > 5 sigma = {bound:.5f}"
    )


def assert_multinomial(counts, probs, label: str = "") -> None:
    """Chi-square goodness-of-fit at the 5-sigma-equivalent significance."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    expected = probs * n
    assert np.all(expected > 0), f"{label}: zero expected cell"
    statistic = float(((counts - expected) ** 2 / expected).sum())
    threshold = float(chi2.isf(FIVE_SIGMA_PVALUE, df=len(counts) - 1))
    assert statistic <= threshold, (
        f"{label}: chi-square {statistic:.2f} > {threshold:.2f} (counts {counts}, expected {expected})"
    )


# Independent single-qubit operators and helpers.
I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
CZ_MATRIX = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def kron_all(*operators: np.ndarray) -> np.ndarray:
    out = operators[0]
    for op in operators[1:]:
        out = np.kron(out, op)
    return out


def pauli_power(h_x: int, h_z: int) -> np.ndarray:
    """X^h_x Z^h_z as a 2x2 matrix."""
    out = I2
    if h_z:
        out = PAULI_Z @ out
    if h_x:
        out = PAULI_X @ out
    return out


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-like random pure state amplitudes."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def overlap2(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)
