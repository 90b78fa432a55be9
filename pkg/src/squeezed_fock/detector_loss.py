"""Fidelity of the heralded state when every detector has efficiency eta.

A lossy detector is an ideal one behind a beam splitter of amplitude
transmittance ``eta`` whose other port takes vacuum. The output is mixed;
the numeric route keeps the vacuum-ancilla coordinates explicit (a
purification) and evaluates ``<SFS| rho |SFS>`` by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log, sqrt

import numpy as np

from .gaussian_model import UniversalSchemeParams, universal_sigma
from .heralding import DetectionPattern
from .oracle import (
    CONVERGENCE_TOL,
    ConvergenceError,
    CostGuardError,
    conditional_amplitudes,
    gaussian_nodes,
    output_precision,
)
from .special_math import WaveParams, sfs_wavefunction

LOSS_ORDER = 16
LOSS_INNER_ORDER = 8


@dataclass(frozen=True)
class EfficiencySpec:
    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"detection efficiency must lie in (0, 1], got {self.eta}")


def fidelity_formula(x: float, n: int, eta: float) -> float:
    """``(((X - 1) eta^2 + 2) / (X + 1))^{n + 1}`` for any ``eta`` in ``[0, 1]``.

    ``eta = 0`` is the limit of blind detectors; it is accepted here so
    sweeps can include the endpoint.
    """
    if not x > 1:
        raise ValueError("universal parameter X must exceed 1")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta == 1.0:
        return 1.0
    base = ((x - 1.0) * eta**2 + 2.0) / (x + 1.0)
    return exp((n + 1) * log(base))


def lossy_fidelity(x: float, n: int, e: EfficiencySpec) -> float:
    """``(((X - 1) eta^2 + 2) / (X + 1))^{n + 1}``."""
    return fidelity_formula(x, n, e.eta)


def lossy_fidelity_sums(p: UniversalSchemeParams, n: int, e: EfficiencySpec) -> float:
    """Same fidelity written with the explicit sums over ``a_k``."""
    s = sum(p.a) - p.n_modes
    return (((s + 1.0) * e.eta**2 + 2.0) / (s + 3.0)) ** (n + 1)


def purified_sigma(sigma: np.ndarray, eta: float) -> np.ndarray:
    """Joint Gaussian of detector inputs, kept mode and vacuum-ancilla outputs.

    Coordinate order: ``x_1..x_{N-1}`` (seen by the ideal detectors), ``x_N``,
    ``x^v_1..x^v_{N-1}``. The original coordinates are
    ``eta x_i + sqrt(1-eta^2) x^v_i`` for the signal and
    ``sqrt(1-eta^2) x_i - eta x^v_i`` for the vacua.
    """
    n = sigma.shape[0]
    m = n - 1
    s = sqrt(max(0.0, 1.0 - eta * eta))
    # rows: old coords (y_1..y_N, v_1..v_m); cols: new coords
    t = np.zeros((n + m, n + m))
    for i in range(m):
        t[i, i] = eta
        t[i, n + i] = s
        t[n + i, i] = s
        t[n + i, n + i] = -eta
    t[m, m] = 1.0
    big = np.eye(n + m)
    big[:n, :n] = sigma
    joint = t.T @ big @ t
    return 0.5 * (joint + joint.T)


def _fidelity_table(sigma, n_max, eta, r, order, inner_order):
    joint = purified_sigma(np.asarray(sigma, dtype=float), eta)
    n_meas = len(n_max)
    c = output_precision(joint, n_meas)
    squeeze = exp(2.0 * r)
    # norm: envelope of phi^2 over (x_N, x^v)
    norm_pts, norm_w = gaussian_nodes(2.0 * c, order)
    norm_amp = conditional_amplitudes(joint, n_max, norm_pts, inner_order)
    norms = np.tensordot(norm_amp**2, norm_w, axes=([-1], [0]))

    # overlap over x_N at each ancilla point, then |.|^2 over the ancillas
    p_n = c[0, 0] + squeeze
    c_nv = c[0, 1:]
    c_v = c[1:, 1:] - np.outer(c_nv, c_nv) / p_n
    v_pts, v_w = gaussian_nodes(2.0 * c_v, order)
    xn_off, xn_w = gaussian_nodes(np.array([[p_n]]), order)
    centres = -(v_pts @ c_nv) / p_n
    xn = centres[:, None] + xn_off[None, :, 0]
    kept = np.concatenate(
        [xn.reshape(-1, 1), np.repeat(v_pts, xn_off.shape[0], axis=0)], axis=1
    )
    amp = conditional_amplitudes(joint, n_max, kept, inner_order)
    amp = amp.reshape(amp.shape[:-1] + xn.shape)

    table = {}
    for counts in np.ndindex(*[k + 1 for k in n_max]):
        total = sum(counts)
        if total > max(n_max):
            continue
        target = sfs_wavefunction(xn, WaveParams(r, total))
        g = np.sum(amp[counts] * target * xn_w[None, :], axis=-1)
        table[counts] = float(np.dot(v_w, g**2)) / float(norms[counts])
    return table


def lossy_fidelity_table(
    p: UniversalSchemeParams,
    max_total: int,
    e: EfficiencySpec,
    order: int = LOSS_ORDER,
    inner_order: int = LOSS_INNER_ORDER,
    check: bool = True,
) -> dict[tuple[int, ...], float]:
    """Numeric lossy fidelity for every pattern with total ``<= max_total``."""
    if p.n_modes > 3:
        raise CostGuardError("purification oracle supports at most 3 modes")
    if max_total > 2:
        raise CostGuardError("purification oracle supports total counts up to 2")
    sigma = universal_sigma(p).entries
    n_max = (max_total,) * (p.n_modes - 1)
    table = _fidelity_table(sigma, n_max, e.eta, p.r, order, inner_order)
    if check:
        finer = _fidelity_table(sigma, n_max, e.eta, p.r, 2 * order, 2 * inner_order)
        dev = max(abs(table[k] - finer[k]) for k in table)
        if dev > CONVERGENCE_TOL:
            raise ConvergenceError(f"lossy fidelity changed by {dev:.3g} when the order doubled")
    return table


def lossy_fidelity_numeric(
    p: UniversalSchemeParams,
    d: DetectionPattern,
    e: EfficiencySpec,
    order: int = LOSS_ORDER,
    inner_order: int = LOSS_INNER_ORDER,
    check: bool = True,
) -> float:
    """``<S(r)|n>``-fidelity of the lossy heralded state, by quadrature."""
    if len(d.counts) != p.n_modes - 1:
        raise ValueError("pattern length does not match the scheme")
    if p.n_modes > 3 or d.total > 2:
        raise CostGuardError("purification oracle supports N <= 3 and total <= 2")
    table = lossy_fidelity_table(p, d.total, e, order, inner_order, check)
    return table[d.counts]
