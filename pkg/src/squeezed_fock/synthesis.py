"""Beam-splitter chain and input squeezings that realise the universal sigma.

``sigma = O D O^T`` with ``O = BS^{1,2}(t_1) ... BS^{N-1,N}(t_{N-1})`` and
``D = diag(1, ..., 1, e^{2 r_{N-1}}, e^{2 r_N})``: N-2 vacuum inputs and two
squeezed vacua. Only ``t_{N-1}`` and the two squeezings depend on the target
squeezing, and they do so through the universal parameter ``X`` alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import exp, log, sinh, sqrt

import numpy as np

from .gaussian_model import SigmaMatrix, UniversalSchemeParams

_DB_PER_NEPER = 20.0 / log(10.0)


@dataclass(frozen=True)
class BeamSplitterOp:
    """Real beam splitter on modes ``k < l`` (1-based) with transmittance ``t``.

    Its matrix is the identity except for the block on rows/columns
    ``(k, l)``: ``[[t, sign*s], [-sign*s, t]]`` with ``s = sqrt(1 - t^2)``.
    """

    k: int
    l: int
    t: float
    sign: int = 1

    def __post_init__(self):
        if not 1 <= self.k < self.l:
            raise ValueError("beam splitter needs modes 1 <= k < l")
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"transmittance must lie strictly inside (0, 1), got {self.t}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def matrix(self, n_modes: int) -> np.ndarray:
        if self.l > n_modes:
            raise ValueError(f"mode {self.l} out of range for {n_modes} modes")
        s = sqrt(1.0 - self.t * self.t)
        m = np.eye(n_modes)
        i, j = self.k - 1, self.l - 1
        m[i, i] = m[j, j] = self.t
        m[i, j] = self.sign * s
        m[j, i] = -self.sign * s
        return m


@dataclass(frozen=True)
class SchemeDecomposition:
    n_modes: int
    splitters: tuple[BeamSplitterOp, ...]
    squeezings: tuple[float, ...]

    def __post_init__(self):
        if len(self.squeezings) != self.n_modes:
            raise ValueError("need one squeezing parameter per mode")
        if any(op.l > self.n_modes for op in self.splitters):
            raise ValueError("beam splitter mode out of range")

    @property
    def squeezings_db(self) -> tuple[float, ...]:
        return tuple(squeezing_to_db(r) for r in self.squeezings)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "splitters": [{"k": op.k, "l": op.l, "t": op.t, "sign": op.sign} for op in self.splitters],
            "squeezings": list(self.squeezings),
            "squeezings_db": list(self.squeezings_db),
            "squeezing_labels": [squeezing_label(r) for r in self.squeezings],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeDecomposition":
        ops = tuple(
            BeamSplitterOp(int(o["k"]), int(o["l"]), float(o["t"]), int(o.get("sign", 1)))
            for o in data["splitters"]
        )
        return cls(int(data["n_modes"]), ops, tuple(float(r) for r in data["squeezings"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def squeezed_pair(x: float, r: float) -> tuple[float, float]:
    """``(e^{2 r_{N-1}}, e^{2 r_N})`` for universal parameter ``x``.

    The smaller root is written in rationalised form to avoid cancellation.
    """
    e = exp(2.0 * r)
    b = x * (1.0 + e)
    root = sqrt(b * b - 4.0 * e)
    big = 0.5 * (b + root)
    return big, 2.0 * e / (b + root)


def last_transmittance(x: float, r: float) -> float:
    e = exp(2.0 * r)
    root = sqrt(x * x * (1.0 + e) ** 2 - 4.0 * e)
    return sqrt(0.5 * (1.0 + x * (1.0 - e) / root))


def decompose(p: UniversalSchemeParams) -> SchemeDecomposition:
    """Beam-splitter transmittances and input squeezings for ``universal_sigma(p)``.

    Chain transmittances are ``t_i = sqrt((a_{i+1} - 1) / sum_{k<=i+1} (a_k - 1))``.
    Chain splitters use ``sign=+1``; the last one uses ``sign=-1`` so the
    reconstruction reproduces the all-positive off-diagonals.
    """
    n = p.n_modes
    excess = np.asarray(p.a) - 1.0
    partial = np.cumsum(excess)
    ops = [BeamSplitterOp(i, i + 1, float(sqrt(excess[i] / partial[i]))) for i in range(1, n - 1)]
    x = p.universal_parameter
    ops.append(BeamSplitterOp(n - 1, n, last_transmittance(x, p.r), sign=-1))
    big, small = squeezed_pair(x, p.r)
    squeezings = (0.0,) * (n - 2) + (0.5 * log(big), 0.5 * log(small))
    return SchemeDecomposition(n, tuple(ops), squeezings)


def orthogonal_matrix(d: SchemeDecomposition) -> np.ndarray:
    o = np.eye(d.n_modes)
    for op in d.splitters:
        o = o @ op.matrix(d.n_modes)
    return o


def reconstruct(d: SchemeDecomposition) -> SigmaMatrix:
    """``O D O^T`` with the splitters multiplied in listed order."""
    o = orthogonal_matrix(d)
    diag = np.exp(2.0 * np.asarray(d.squeezings))
    m = (o * diag) @ o.T
    m = 0.5 * (m + m.T)
    return SigmaMatrix(m)


def squeezing_to_db(r: float) -> float:
    return _DB_PER_NEPER * abs(r)


def squeezing_label(r: float) -> str:
    # e^{2r} > 1 narrows the coordinate quadrature
    if r > 0:
        return "x-squeezed"
    if r < 0:
        return "p-squeezed"
    return "vacuum"


def total_mean_photons(d: SchemeDecomposition) -> float:
    return float(sum(sinh(r) ** 2 for r in d.squeezings))


def max_squeezing_db(d: SchemeDecomposition) -> float:
    return max(squeezing_to_db(r) for r in d.squeezings)
