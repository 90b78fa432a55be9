"""Closed-form heralded states and generation probabilities of the universal scheme.

The conditional probability of a detection pattern is

    P(n_1..n_{N-1}) = 2 prod_i (a_i - 1)^{n_i} n! / (prod_i n_i! (X + 1)^{n + 1}),

with ``X = sum a - N + 2``. Summing over all patterns with the same total
``n`` gives ``2 (X - 1)^n / (X + 1)^{n + 1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import exp, log
from typing import Iterator, NamedTuple

import numpy as np

from .gaussian_model import UniversalSchemeParams
from .special_math import WaveParams, log_factorial


@dataclass(frozen=True)
class DetectionPattern:
    """Photon counts registered by the N-1 detectors."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("detector counts must be nonnegative")
        if not counts:
            raise ValueError("a detection pattern needs at least one detector")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class HeraldPrediction:
    sfs: WaveParams
    probability: float


class OptimalPoint(NamedTuple):
    x: float
    probability: float
    attained: bool


def patterns_with_total(n_detectors: int, total: int) -> Iterator[DetectionPattern]:
    """Every pattern over ``n_detectors`` detectors whose counts sum to ``total``."""
    for counts in product(range(total + 1), repeat=n_detectors):
        if sum(counts) == total:
            yield DetectionPattern(counts)


def _check_pattern(p: UniversalSchemeParams, d: DetectionPattern) -> None:
    if len(d.counts) != p.n_modes - 1:
        raise ValueError(
            f"pattern has {len(d.counts)} counts but the scheme has {p.n_modes - 1} detectors"
        )


def universal_parameter(p: UniversalSchemeParams) -> float:
    return p.universal_parameter


def conditional_probability(p: UniversalSchemeParams, d: DetectionPattern) -> float:
    _check_pattern(p, d)
    x = p.universal_parameter
    log_p = log(2.0) + log_factorial(d.total) - (d.total + 1) * log(x + 1.0)
    for a_i, n_i in zip(p.a, d.counts):
        if n_i:
            log_p += n_i * log(a_i - 1.0) - log_factorial(n_i)
    return exp(log_p)


def total_probability(x: float, n: int) -> float:
    """Probability ``2 (X-1)^n / (X+1)^{n+1}`` of heralding the n-th SFS."""
    if not x > 1:
        raise ValueError("universal parameter X must exceed 1")
    if n < 0:
        raise ValueError("n must be nonnegative")
    log_p = log(2.0) - (n + 1) * log(x + 1.0)
    if n:
        log_p += n * log(x - 1.0)
    return exp(log_p)


def heralded_state(p: UniversalSchemeParams, d: DetectionPattern) -> HeraldPrediction:
    """Output state for pattern ``d``: always ``S(r)|n>`` with ``n = sum(counts)``."""
    prob = conditional_probability(p, d)
    return HeraldPrediction(WaveParams(p.r, d.total), prob)


def optimal_universal_parameter(n: int) -> OptimalPoint:
    """Maximiser ``X* = 2n + 1`` and maximum ``n^n / (n+1)^{n+1}``.

    For ``n = 0`` the maximiser ``X = 1`` lies on the excluded boundary; the
    returned probability 1 is a supremum and ``attained`` is False.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return OptimalPoint(1.0, 1.0, False)
    prob = exp(n * log(n) - (n + 1) * log(n + 1))
    return OptimalPoint(2.0 * n + 1.0, prob, True)


def probability_table(x: float, n_max: int) -> np.ndarray:
    return np.array([total_probability(x, n) for n in range(n_max + 1)])
