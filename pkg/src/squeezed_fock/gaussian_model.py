"""N-mode Gaussian wavefunctions and the universal sigma-matrix."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import exp, pi, sqrt

import numpy as np


@dataclass(frozen=True)
class SigmaValidation:
    ok: bool
    symmetry_defect: float
    pivots: tuple[float, ...]
    reasons: tuple[str, ...] = ()


def _ldl_pivots(m: np.ndarray) -> list[float]:
    """Pivots of the unpivoted symmetric LDL^T elimination."""
    a = np.array(m, dtype=float)
    n = a.shape[0]
    pivots = []
    for k in range(n):
        p = a[k, k]
        pivots.append(float(p))
        if p == 0.0 or not np.isfinite(p):
            pivots.extend([float("nan")] * (n - k - 1))
            break
        col = a[k + 1:, k] / p
        a[k + 1:, k + 1:] -= np.outer(col, a[k, k + 1:])
    return pivots


def validate_sigma(matrix) -> SigmaValidation:
    """Check exact symmetry and positive definiteness of a square matrix.

    Never raises on bad numeric content; failures are listed in ``reasons``.
    A pivot counts as positive when it exceeds ``1e-12 * max|entry|``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        return SigmaValidation(False, float("nan"), (), ("matrix is not square",))
    reasons = []
    if not np.all(np.isfinite(m)):
        return SigmaValidation(False, float("nan"), (), ("matrix has non-finite entries",))
    defect = float(np.max(np.abs(m - m.T)))
    if defect != 0.0:
        reasons.append(f"matrix is not symmetric (max defect {defect:.3g})")
    pivots = _ldl_pivots(m)
    tol = 1e-12 * float(np.max(np.abs(m)))
    for i, p in enumerate(pivots):
        if not p > tol:
            reasons.append(f"pivot {i} = {p:.6g} is not positive")
            break
    return SigmaValidation(not reasons, defect, tuple(pivots), tuple(reasons))


@dataclass(frozen=True, eq=False)
class SigmaMatrix:
    """Symmetric positive-definite matrix of a Gaussian wavefunction.

    ``Psi(x) = (det sigma / pi^N)^{1/4} exp(-x^T sigma x / 2)``.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError("sigma must be a square matrix")
        report = validate_sigma(m)
        if not report.ok:
            raise ValueError("invalid sigma: " + "; ".join(report.reasons))
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "entries": self.entries.ravel().tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "SigmaMatrix":
        dim = int(data["dim"])
        entries = np.asarray(data["entries"], dtype=float)
        if entries.size != dim * dim:
            raise ValueError(f"expected {dim * dim} entries, got {entries.size}")
        return cls(entries.reshape(dim, dim))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SigmaMatrix":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class UniversalSchemeParams:
    """Free parameters ``a_1 .. a_{N-1}`` (each > 1) and target squeezing ``r``."""

    n_modes: int
    a: tuple[float, ...]
    r: float = 0.0

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if int(self.n_modes) != self.n_modes or self.n_modes < 2:
            raise ValueError("n_modes must be an integer >= 2")
        if len(a) != self.n_modes - 1:
            raise ValueError(f"expected {self.n_modes - 1} free parameters, got {len(a)}")
        if not all(np.isfinite(v) and v > 1.0 for v in a):
            raise ValueError("a_i must exceed 1")
        if not np.isfinite(self.r):
            raise ValueError("r must be finite")

    @property
    def universal_parameter(self) -> float:
        return sum(self.a) - self.n_modes + 2

    @classmethod
    def with_universal_parameter(cls, n_modes: int, x: float, r: float = 0.0) -> "UniversalSchemeParams":
        """Spread ``X`` evenly: every ``a_i = 1 + (X - 1) / (N - 1)``."""
        if not x > 1:
            raise ValueError("universal parameter X must exceed 1")
        a_i = 1.0 + (x - 1.0) / (n_modes - 1)
        return cls(n_modes, (a_i,) * (n_modes - 1), r)


def universal_sigma(p: UniversalSchemeParams) -> SigmaMatrix:
    """Sigma-matrix for which heralding always yields a squeezed Fock state.

    Off-diagonals among measured modes are ``sqrt((a_i-1)(a_j-1))``; the last
    column is ``sqrt((a_i-1)(sum a - N + 3)) e^r`` and the last diagonal entry
    ``(sum a - N + 2) e^{2r}``. Its determinant equals ``e^{2r}``.
    """
    n = p.n_modes
    u = np.sqrt(np.asarray(p.a) - 1.0)
    x = p.universal_parameter
    m = np.empty((n, n))
    m[:-1, :-1] = np.outer(u, u)
    m[np.arange(n - 1), np.arange(n - 1)] = p.a
    m[:-1, -1] = u * sqrt(x + 1.0) * exp(p.r)
    m[-1, :-1] = m[:-1, -1]
    m[-1, -1] = x * exp(2.0 * p.r)
    return SigmaMatrix(m)


def gaussian_wavefunction(s: SigmaMatrix, x) -> np.ndarray | float:
    """Evaluate ``(det sigma / pi^N)^{1/4} exp(-x^T sigma x / 2)``.

    ``x`` has shape ``(..., N)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (s.dim,):
        raise ValueError(f"coordinate vector must have length {s.dim}, got shape {x.shape}")
    quad = np.einsum("...i,ij,...j->...", x, s.entries, x)
    value = (s.det() / pi**s.dim) ** 0.25 * np.exp(-0.5 * quad)
    return value if np.ndim(value) else float(value)
