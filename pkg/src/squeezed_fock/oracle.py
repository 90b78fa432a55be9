"""Brute-force tensor-grid quadrature of heralding integrals.

Nothing here uses the closed-form results of the universal scheme. Every
integral is evaluated by summing the raw integrand (Gaussian wavefunction
times Fock wavefunctions) over a tensor Gauss-Hermite grid. The grid is
placed along the Gaussian envelope of the integrand: with the quadratic form
``Q = L L^T`` of the integration variables, nodes are ``mu + sqrt(2) L^{-T} t``.
The integrand is then a polynomial times ``exp(-|t|^2)`` whenever the state
is Gaussian-times-polynomial, so results converge to rounding error.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import lru_cache
from math import exp, log, pi, sqrt
from typing import NamedTuple, Sequence

import numpy as np

from .gaussian_model import SigmaMatrix, UniversalSchemeParams, universal_sigma
from .heralding import DetectionPattern
from .special_math import (
    MAX_QUAD_ORDER,
    WaveParams,
    gauss_hermite_rule,
    hermite_functions,
    hermite_table,
    sfs_wavefunction,
)

DEFAULT_ORDER = 64
DEFAULT_INNER_ORDER = 16
CONVERGENCE_TOL = 1e-8
MAX_MODES = 4
MAX_TOTAL = 6
MIN_ORDER = 48

# points x inner-nodes per contraction chunk
_CHUNK = 1 << 18
# events this far below the most likely pattern are rounding noise
ZERO_EVENT_RATIO = 1e-24


class ConvergenceError(RuntimeError):
    """Quadrature result moved by more than the tolerance when the order doubled."""


class ZeroProbabilityError(FloatingPointError):
    """The requested detection event has (numerically) zero probability."""


class CostGuardError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    """Real wavefunction sampled on a 1-D axis.

    ``weights`` integrate against plain ``dx`` on ``axis``; ``norm`` is
    ``sum(weights * values**2)``.
    """

    axis: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    norm: float

    def __post_init__(self):
        if self.axis.shape != self.values.shape or self.axis.shape != self.weights.shape:
            raise ValueError("axis, values and weights must have equal shapes")
        if np.any(np.diff(self.axis) <= 0):
            raise ValueError("axis must be strictly increasing")

    @classmethod
    def from_values(cls, axis, values, weights) -> "GridWavefunction":
        axis, values, weights = (np.asarray(v, dtype=float) for v in (axis, values, weights))
        return cls(axis, values, weights, float(np.dot(weights, values**2)))

    def normalized(self) -> "GridWavefunction":
        if not (self.norm > 0 and np.isfinite(self.norm)):
            raise FloatingPointError("wavefunction is not normalisable on this grid")
        scale = 1.0 / sqrt(self.norm)
        return GridWavefunction.from_values(self.axis, self.values * scale, self.weights)

    def overlap(self, other_values) -> float:
        return float(np.dot(self.weights, self.values * other_values))


class HeraldResult(NamedTuple):
    psi: GridWavefunction
    probability: float


@lru_cache(maxsize=None)
def _tensor_nodes(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    rule = gauss_hermite_rule(order)
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    wgrids = np.meshgrid(*([rule.scaled_weights] * dim), indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def gaussian_nodes(precision: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and ``dx`` weights for integrands with envelope ``exp(-x^T P x / 2)``.

    Returns ``(offsets, weights)`` with ``int f(c + u) du ~ sum w_k f(c + offsets_k)``.
    """
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    dim = precision.shape[0]
    chol = np.linalg.cholesky(precision)
    t, w = _tensor_nodes(order, dim)
    # u = sqrt(2) L^{-T} t
    offsets = sqrt(2.0) * np.linalg.solve(chol.T, t.T).T
    jac = 2.0 ** (dim / 2) / np.prod(np.diag(chol))
    return offsets, w * jac


def _split(sigma: np.ndarray, n_meas: int):
    s_mm = sigma[:n_meas, :n_meas]
    s_mk = sigma[:n_meas, n_meas:]
    s_kk = sigma[n_meas:, n_meas:]
    q = s_mm + np.eye(n_meas)
    return q, s_mk, s_kk


def output_precision(sigma: np.ndarray, n_meas: int) -> np.ndarray:
    """Envelope matrix ``C`` of the unmeasured modes: ``phi(y) ~ exp(-y^T C y / 2)``.

    Accounts for the ``exp(-x^2/2)`` factors of the Fock wavefunctions that
    multiply the measured coordinates.
    """
    q, s_mk, s_kk = _split(sigma, n_meas)
    return s_kk - s_mk.T @ np.linalg.solve(q, s_mk)


def conditional_amplitudes(
    sigma,
    n_max: Sequence[int],
    kept_points,
    inner_order: int = DEFAULT_INNER_ORDER,
    raw: bool = False,
) -> np.ndarray:
    """Project the first ``len(n_max)`` modes onto Fock states, at fixed kept coordinates.

    With ``raw=False`` this returns, for every count combination ``k_i <= n_max[i]``,

        phi_k(y) = int Psi^G(x, y) prod_i psi_{k_i}(x_i) dx,

    where ``Psi^G`` is the normalised Gaussian wavefunction of ``sigma`` and
    ``psi_k`` are Fock wavefunctions. With ``raw=True`` the normalisation
    constants are dropped, giving the bare integral
    ``int exp(-z^T sigma z / 2) exp(-|x|^2 / 2) prod_i H_{k_i}(x_i) dx``.

    Output shape is ``tuple(n + 1 for n in n_max) + (P,)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    n_meas = len(n_max)
    dim = sigma.shape[0]
    kept = np.asarray(kept_points, dtype=float).reshape(-1, dim - n_meas)
    q, s_mk, _ = _split(sigma, n_meas)
    offsets, w = gaussian_nodes(q, inner_order)
    centres = -np.linalg.solve(q, s_mk @ kept.T).T
    if raw:
        log_pref = 0.0
    else:
        log_pref = 0.25 * (np.linalg.slogdet(sigma)[1] - dim * log(pi))

    letters = string.ascii_letters
    idx = letters[:n_meas]
    spec = "pm," + ",".join(f"{c}pm" for c in idx) + f"->{idx}p"

    n_pts = kept.shape[0]
    n_nodes = offsets.shape[0]
    step = max(1, _CHUNK // max(n_nodes, 1))
    out = np.empty(tuple(n + 1 for n in n_max) + (n_pts,))
    for lo in range(0, n_pts, step):
        y = kept[lo:lo + step]
        x = centres[lo:lo + step, None, :] + offsets[None, :, :]
        z = np.concatenate([x, np.broadcast_to(y[:, None, :], x.shape[:2] + y.shape[1:])], axis=-1)
        expo = -0.5 * np.einsum("pmi,ij,pmj->pm", z, sigma, z)
        if raw:
            expo = expo - 0.5 * np.sum(x * x, axis=-1)
        g = np.exp(expo + log_pref) * w[None, :]
        tables = []
        for i, n in enumerate(n_max):
            if raw:
                tables.append(hermite_table(n, x[..., i]))
            else:
                tables.append(hermite_functions(n, x[..., i]))
        out[..., lo:lo + step] = np.einsum(spec, g, *tables, optimize=True)
    return out


def _check_guard(s: SigmaMatrix, total: int, order: int) -> None:
    if s.dim > MAX_MODES:
        raise CostGuardError(f"oracle supports at most {MAX_MODES} modes, got {s.dim}")
    if total > MAX_TOTAL:
        raise CostGuardError(f"oracle supports total counts up to {MAX_TOTAL}, got {total}")
    if not MIN_ORDER <= order <= MAX_QUAD_ORDER // 2:
        raise CostGuardError(f"order must lie in [{MIN_ORDER}, {MAX_QUAD_ORDER // 2}], got {order}")


def _output_axis(sigma: np.ndarray, n_meas: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    c = output_precision(sigma, n_meas)
    offsets, w = gaussian_nodes(2.0 * c, order)
    return offsets[:, 0], w


def _herald_table(sigma, n_max, order, inner_order):
    axis, w = _output_axis(sigma, len(n_max), order)
    amps = conditional_amplitudes(sigma, n_max, axis[:, None], inner_order)
    return axis, w, amps


def _relative_change(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def herald_table(
    s: SigmaMatrix,
    max_count: int,
    order: int = DEFAULT_ORDER,
    inner_order: int = DEFAULT_INNER_ORDER,
    check: bool = True,
) -> dict[tuple[int, ...], HeraldResult]:
    """Herald every pattern with total ``<= max_count`` in one sweep over the grid."""
    _check_guard(s, max_count, order)
    n_meas = s.dim - 1
    n_max = (max_count,) * n_meas
    sigma = s.entries
    axis, w, amps = _herald_table(sigma, n_max, order, inner_order)
    if check:
        finer = conditional_amplitudes(sigma, n_max, axis[:, None], 2 * inner_order)
        axis2, w2, amps2 = _herald_table(sigma, n_max, 2 * order, 2 * inner_order)
    results = {}
    for counts in np.ndindex(*[n + 1 for n in n_max]):
        if sum(counts) > max_count:
            continue
        phi = amps[counts]
        prob = float(np.dot(w, phi**2))
        if check:
            prob2 = float(np.dot(w2, amps2[counts] ** 2))
            dev = max(abs(prob - prob2) / max(prob2, 1e-300), _relative_change(phi, finer[counts]))
            if dev > CONVERGENCE_TOL:
                raise ConvergenceError(
                    f"pattern {counts}: result changed by {dev:.3g} when the order doubled"
                )
        psi = GridWavefunction.from_values(axis, phi, w).normalized()
        results[tuple(int(c) for c in counts)] = HeraldResult(psi, prob)
    return results


def herald_numeric(
    s: SigmaMatrix,
    d: DetectionPattern,
    order: int = DEFAULT_ORDER,
    inner_order: int = DEFAULT_INNER_ORDER,
    check: bool = True,
) -> HeraldResult:
    """Conditional output state and probability for detection pattern ``d``.

    The first ``N-1`` modes of ``s`` are measured, the last one is kept.
    The probability is the squared norm of the unnormalised conditional
    wavefunction. With ``check`` the computation is repeated at doubled
    orders and :class:`ConvergenceError` is raised if the probability or
    the sampled wavefunction moves by more than ``1e-8`` (relative).
    """
    if len(d.counts) != s.dim - 1:
        raise ValueError(f"pattern has {len(d.counts)} counts, sigma measures {s.dim - 1} modes")
    _check_guard(s, d.total, order)
    sigma = s.entries
    axis, w, amps = _herald_table(sigma, d.counts, order, inner_order)
    phi = amps[d.counts]
    prob = float(np.dot(w, phi**2))
    if check:
        finer = conditional_amplitudes(sigma, d.counts, axis[:, None], 2 * inner_order)[d.counts]
        _, w2, amps2 = _herald_table(sigma, d.counts, 2 * order, 2 * inner_order)
        prob2 = float(np.dot(w2, amps2[d.counts] ** 2))
        dev = max(abs(prob - prob2) / max(prob2, 1e-300), _relative_change(phi, finer))
        if dev > CONVERGENCE_TOL:
            raise ConvergenceError(f"result changed by {dev:.3g} when the order doubled")
    psi = GridWavefunction.from_values(axis, phi, w)
    return HeraldResult(psi.normalized(), prob)


def fidelity_numeric(psi: GridWavefunction, params: WaveParams) -> float:
    """Squared overlap ``|<psi|S(r)|n>|^2`` by quadrature on ``psi``'s own axis.

    Raises ``ValueError`` when the axis cannot resolve the target state
    (its squared norm on the axis is off by more than 1e-6).
    """
    if abs(psi.norm - 1.0) > 1e-9:
        raise ValueError("psi must be normalised")
    target = sfs_wavefunction(psi.axis, params)
    target_norm = float(np.dot(psi.weights, target**2))
    if abs(target_norm - 1.0) > 1e-6:
        raise ValueError(
            f"axis does not resolve the target state (norm on axis {target_norm:.8f})"
        )
    return psi.overlap(target) ** 2


def herald_fidelity(
    sigma,
    counts: Sequence[int],
    params: WaveParams,
    order: int = DEFAULT_ORDER,
    inner_order: int = DEFAULT_INNER_ORDER,
) -> tuple[float, float]:
    """``(fidelity, probability)`` of heralding ``counts`` against ``S(r)|n>``.

    Unlike :func:`fidelity_numeric` on a stored grid, the overlap nodes sit
    on the product envelope of output and target, so the result stays
    accurate when the heralded state is far from the target.
    """
    sigma = np.asarray(sigma, dtype=float)
    counts = tuple(int(c) for c in counts)
    n_meas = len(counts)
    c = float(output_precision(sigma, n_meas)[0, 0])
    norm_off, norm_w = gaussian_nodes(np.array([[2.0 * c]]), order)
    ov_off, ov_w = gaussian_nodes(np.array([[c + exp(2.0 * params.r)]]), order)
    pts = np.concatenate([norm_off[:, 0], ov_off[:, 0]])
    table = conditional_amplitudes(sigma, counts, pts[:, None], inner_order)
    probs = np.tensordot(table[..., :order] ** 2, norm_w, axes=([-1], [0]))
    amps = table[counts]
    prob = float(probs[counts])
    if not prob > ZERO_EVENT_RATIO * float(np.max(probs)):
        raise ZeroProbabilityError(f"pattern {counts} has zero probability (got {prob:.3g})")
    overlap = float(np.dot(ov_w, amps[order:] * sfs_wavefunction(ov_off[:, 0], params)))
    return overlap**2 / prob, prob


def _fidelity_sweep(sigma, n_max, r, order, inner_order):
    n_meas = len(n_max)
    c = float(output_precision(sigma, n_meas)[0, 0])
    norm_off, norm_w = gaussian_nodes(np.array([[2.0 * c]]), order)
    ov_off, ov_w = gaussian_nodes(np.array([[c + exp(2.0 * r)]]), order)
    pts = np.concatenate([norm_off[:, 0], ov_off[:, 0]])
    amps = conditional_amplitudes(sigma, n_max, pts[:, None], inner_order)
    probs = np.tensordot(amps[..., :order] ** 2, norm_w, axes=([-1], [0]))
    floor = ZERO_EVENT_RATIO * float(np.max(probs))
    targets = {}
    table = {}
    for counts in np.ndindex(*[k + 1 for k in n_max]):
        n = sum(counts)
        if n > max(n_max):
            continue
        if n not in targets:
            targets[n] = sfs_wavefunction(ov_off[:, 0], WaveParams(r, n)) * ov_w
        prob = float(probs[counts])
        overlap = float(np.dot(amps[counts][order:], targets[n]))
        if prob > floor:
            table[tuple(int(k) for k in counts)] = (overlap**2 / prob, prob)
        else:
            table[tuple(int(k) for k in counts)] = (0.0, 0.0)
    return table


def herald_fidelity_table(
    s: SigmaMatrix,
    max_count: int,
    r: float,
    order: int = DEFAULT_ORDER,
    inner_order: int = DEFAULT_INNER_ORDER,
    check: bool = True,
) -> dict[tuple[int, ...], tuple[float, float]]:
    """``(fidelity to S(r)|n>, probability)`` for every pattern with total ``<= max_count``.

    ``n`` is the pattern total. Nodes follow the product envelopes as in
    :func:`herald_fidelity`, so a sigma that heralds something far from the
    target still gets an accurate (low) fidelity. Events with numerically
    zero probability are reported as ``(0.0, 0.0)``.
    """
    _check_guard(s, max_count, order)
    n_max = (max_count,) * (s.dim - 1)
    table = _fidelity_sweep(s.entries, n_max, r, order, inner_order)
    if check:
        finer = _fidelity_sweep(s.entries, n_max, r, 2 * order, 2 * inner_order)
        dev = 0.0
        for k, (f, p) in table.items():
            f2, p2 = finer[k]
            dev = max(dev, abs(f - f2), abs(p - p2) / max(p2, 1e-300))
        if dev > CONVERGENCE_TOL:
            raise ConvergenceError(f"fidelity table changed by {dev:.3g} when the order doubled")
    return table


def sample_sfs(params: WaveParams, order: int = DEFAULT_ORDER) -> GridWavefunction:
    """Squeezed Fock state on a Gauss-Hermite axis matched to its envelope."""
    offsets, w = gaussian_nodes(np.array([[2.0 * exp(2.0 * params.r)]]), order)
    axis = offsets[:, 0]
    return GridWavefunction.from_values(axis, sfs_wavefunction(axis, params), w)


def integral_identity_rhs(p: UniversalSchemeParams, d: DetectionPattern, x_n) -> np.ndarray:
    """Closed form of the bare heralding integral for the universal sigma."""
    x_n = np.asarray(x_n, dtype=float)
    x = p.universal_parameter
    n = d.total
    log_amp = log(2.0) + (p.n_modes - 1) * log(pi) - (n + 1) * log(x + 1.0)
    for a_i, n_i in zip(p.a, d.counts):
        log_amp += n_i * log(a_i - 1.0)
    u = exp(p.r) * x_n
    return (-1.0) ** n * exp(0.5 * log_amp) * np.exp(-0.5 * u * u) * hermite_table(n, u)[n]


def integral_identity_check(
    p: UniversalSchemeParams,
    d: DetectionPattern,
    xn_samples,
    inner_order: int = DEFAULT_INNER_ORDER,
) -> float:
    """Maximum deviation between the quadrature integral and its closed form.

    Deviations are divided by the largest closed-form magnitude over the
    samples, so nodes of the Hermite polynomial (where both sides vanish)
    do not blow up the ratio. The gate compares orders m and 2m first.
    """
    if len(d.counts) != p.n_modes - 1:
        raise ValueError("pattern length does not match the scheme")
    s = universal_sigma(p)
    _check_guard(s, d.total, MIN_ORDER)
    xs = np.asarray(xn_samples, dtype=float)
    lhs = conditional_amplitudes(s.entries, d.counts, xs[:, None], inner_order, raw=True)[d.counts]
    lhs2 = conditional_amplitudes(s.entries, d.counts, xs[:, None], 2 * inner_order, raw=True)[d.counts]
    if _relative_change(lhs2, lhs) > CONVERGENCE_TOL:
        raise ConvergenceError("bare heralding integral not converged")
    rhs = integral_identity_rhs(p, d, xs)
    scale = float(np.max(np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs))) / scale
