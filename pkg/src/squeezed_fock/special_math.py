"""Hermite polynomials, reference wavefunctions and Gauss-Hermite rules.

All wavefunctions are real functions of the coordinate quadrature
``x = (a + a^dagger) / sqrt(2)``. Hermite polynomials use the physicist's
normalisation (``H_1(x) = 2x``).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, log, pi, sqrt

import numpy as np
from scipy.linalg import eigh_tridiagonal

MAX_FOCK = 60
MAX_QUAD_ORDER = 256
DEFAULT_QUAD_ORDER = 96

_LOG_PI_QUARTER = 0.25 * log(pi)


@dataclass(frozen=True)
class WaveParams:
    """Parameters ``(r, n)`` of a squeezed Fock state ``S(r)|n>``."""

    r: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ValueError("squeezing r must be finite")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError("Fock order n must be a nonnegative integer")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite rule for integrals of the form ``int f(t) exp(-t^2) dt``.

    ``scaled_weights`` holds ``w_i * exp(t_i^2)``, i.e. the weights to use
    when integrating ``f`` against plain ``dt``. They are computed directly
    (never as a product of an underflowed weight and an overflowed
    exponential) so they stay finite up to the maximum order.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray

    def integrate(self, values) -> float:
        """Sum ``w_i * f(t_i)`` for ``values = f(nodes)``."""
        return float(np.dot(self.weights, values))


def hermite(n: int, x):
    """Physicist's Hermite polynomial ``H_n(x)`` by three-term recurrence.

    Works elementwise when ``x`` is an array.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_table(n_max: int, x) -> np.ndarray:
    """Stack ``H_0(x) ... H_{n_max}(x)`` along a new leading axis."""
    x = np.asarray(x, dtype=float)
    table = np.empty((n_max + 1,) + x.shape)
    table[0] = 1.0
    if n_max >= 1:
        table[1] = 2.0 * x
    for k in range(1, n_max):
        table[k + 1] = 2.0 * x * table[k] - 2.0 * k * table[k - 1]
    return table


def log_factorial(n: int) -> float:
    return lgamma(n + 1.0)


def _check_fock_order(n: int) -> None:
    if int(n) != n or n < 0:
        raise ValueError("Fock order must be a nonnegative integer")
    if n > MAX_FOCK:
        raise OverflowError(f"Fock order {n} exceeds supported maximum {MAX_FOCK}")


def sfs_wavefunction(x, params: WaveParams):
    """Coordinate wavefunction of the squeezed Fock state ``S(r)|n>``.

    ``Psi(x) = exp(-e^{2r} x^2 / 2) H_n(e^r x) / (pi^{1/4} sqrt(2^n n! e^{-r}))``.
    The normalisation is assembled in log space so that ``n`` up to 60 does
    not overflow.
    """
    r, n = params.r, params.n
    _check_fock_order(n)
    u = np.exp(r) * np.asarray(x, dtype=float)
    log_norm = 0.5 * r - _LOG_PI_QUARTER - 0.5 * (n * log(2.0) + log_factorial(n))
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        gauss = np.exp(log_norm - 0.5 * u * u)
        value = gauss * hermite(n, u)
    value = np.where(gauss == 0.0, 0.0, value)
    return value if value.ndim else float(value)


def fock_wavefunction(x, n: int):
    """Wavefunction of the Fock state ``|n>`` (``sfs_wavefunction`` at r = 0)."""
    return sfs_wavefunction(x, WaveParams(0.0, n))


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalised Hermite functions ``psi_0 ... psi_{n_max}`` at ``x``.

    Uses the orthonormal recurrence, which stays bounded where the raw
    polynomial recurrence would overflow.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.exp(-_LOG_PI_QUARTER - 0.5 * x * x)
    if n_max >= 1:
        out[1] = sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = sqrt(2.0 / (k + 1)) * x * out[k] - sqrt(k / (k + 1)) * out[k - 1]
    return out


def gauss_hermite_rule(order: int) -> QuadratureRule:
    """Nodes and weights for ``int f(t) exp(-t^2) dt ~ sum w_i f(t_i)``.

    Nodes come from the eigenvalues of the symmetric Jacobi matrix
    (Golub-Welsch) and are polished by one Newton pass on the normalised
    Hermite function. Weights use ``w_i exp(t_i^2) = 1 / (m psi_{m-1}(t_i)^2)``.
    """
    if int(order) != order or not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"quadrature order must be in [1, {MAX_QUAD_ORDER}], got {order}")
    m = int(order)
    if m == 1:
        nodes = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, m) / 2.0)
        nodes = eigh_tridiagonal(np.zeros(m), off, eigvals_only=True)
        for _ in range(2):
            psi = hermite_functions(m, nodes)
            slope = sqrt(2.0 * m) * psi[m - 1] - nodes * psi[m]
            nodes = nodes - psi[m] / slope
        nodes = 0.5 * (nodes - nodes[::-1])
        if m % 2:
            nodes[m // 2] = 0.0
    psi_last = hermite_functions(m - 1, nodes)[m - 1]
    scaled = 1.0 / (m * psi_last**2)
    weights = scaled * np.exp(-nodes**2)
    for arr in (nodes, weights, scaled):
        arr.flags.writeable = False
    return QuadratureRule(order=m, nodes=nodes, weights=weights, scaled_weights=scaled)
