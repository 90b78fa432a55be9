"""Cross-checks of every closed form against the quadrature oracle.

Used by ``squeezed-fock verify``. Each check returns the worst deviation it
saw together with its tolerance.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional

import numpy as np

from .detector_loss import EfficiencySpec, lossy_fidelity, lossy_fidelity_table
from .gaussian_model import SigmaMatrix, UniversalSchemeParams, universal_sigma, validate_sigma
from .heralding import DetectionPattern, conditional_probability
from .oracle import DEFAULT_ORDER, integral_identity_check, herald_fidelity_table
from .synthesis import decompose, reconstruct, squeezed_pair

SigmaHook = Callable[[np.ndarray], np.ndarray]


class CheckResult(NamedTuple):
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.deviation)) and self.deviation <= self.tolerance


def perturb_entry(i: int, j: int, delta: float = 0.1) -> SigmaHook:
    """Hook adding ``delta`` to entry ``(i, j)`` of sigma.

    Only the symmetric part of sigma enters the quadratic form, so an
    off-diagonal shift is applied as ``delta/2`` on both mirrored entries.
    Matrices too small to hold the entry pass through unchanged.
    """

    def hook(m: np.ndarray) -> np.ndarray:
        m = np.array(m, dtype=float)
        if max(i, j) >= m.shape[0]:
            return m
        m[i, j] += delta
        return 0.5 * (m + m.T)

    return hook


def random_scheme(n_modes: int, r: float, rng: np.random.Generator) -> UniversalSchemeParams:
    a = 1.0 + 5.0 * (1.0 - rng.random(n_modes - 1))  # (1, 6]
    return UniversalSchemeParams(n_modes, tuple(float(v) for v in a), r)


def universality_checks(
    modes: tuple[int, ...],
    rng: np.random.Generator,
    draws: int = 1,
    r_values: tuple[float, ...] = (-0.7, 0.0, 0.7),
    max_total: int = 4,
    order: int = DEFAULT_ORDER,
    hook: Optional[SigmaHook] = None,
) -> list[CheckResult]:
    """Oracle fidelity to ``S(r)|n>`` and probability vs closed form, per N."""
    out = []
    for n in modes:
        fid_dev = 0.0
        prob_dev = 0.0
        for r in r_values:
            for _ in range(draws):
                p = random_scheme(n, r, rng)
                m = universal_sigma(p).entries
                if hook:
                    m = hook(m)
                    if not validate_sigma(m).ok:
                        # no longer a state at all
                        fid_dev = prob_dev = float("inf")
                        continue
                table = herald_fidelity_table(SigmaMatrix(m), max_total, r, order, check=hook is None)
                for counts, (f, prob) in table.items():
                    exact = conditional_probability(p, DetectionPattern(counts))
                    fid_dev = max(fid_dev, 1.0 - f)
                    prob_dev = max(prob_dev, abs(prob - exact) / exact)
        out.append(CheckResult(f"universality N={n}", fid_dev, 1e-6))
        out.append(CheckResult(f"probability N={n}", prob_dev, 1e-6))
    return out


def decomposition_check(rng: np.random.Generator, draws: int = 50, max_modes: int = 5) -> list[CheckResult]:
    round_trip = 0.0
    product = 0.0
    for k in range(draws):
        n = 2 + k % (max_modes - 1)
        p = random_scheme(n, float(rng.uniform(-1.0, 1.0)), rng)
        d = decompose(p)
        round_trip = max(round_trip, float(np.max(np.abs(reconstruct(d).entries - universal_sigma(p).entries))))
        big, small = squeezed_pair(p.universal_parameter, p.r)
        product = max(product, float(abs(big * small - np.exp(2.0 * p.r)) / np.exp(2.0 * p.r)))
    return [
        CheckResult("decomposition round trip", round_trip, 1e-10),
        CheckResult("squeezing product", product, 1e-12),
    ]


def loss_check(etas: tuple[float, ...] = (0.5, 0.7, 0.9), modes: tuple[int, ...] = (2, 3)) -> CheckResult:
    dev = 0.0
    for n_modes in modes:
        p = UniversalSchemeParams.with_universal_parameter(n_modes, 3.0, 0.3)
        for eta in etas:
            e = EfficiencySpec(eta)
            for counts, f in lossy_fidelity_table(p, 2, e).items():
                dev = max(dev, abs(f - lossy_fidelity(3.0, sum(counts), e)))
    return CheckResult("detector loss fidelity", dev, 1e-5)


def identity_check(samples: int = 6) -> CheckResult:
    xs = np.linspace(-2.0, 2.0, samples)
    dev = 0.0
    for n_modes, a in ((2, (2.5,)), (3, (1.7, 3.2))):
        for r in (-0.5, 0.4):
            p = UniversalSchemeParams(n_modes, a, r)
            for total in range(4):
                for counts in np.ndindex(*([total + 1] * (n_modes - 1))):
                    if sum(counts) == total:
                        dev = max(dev, integral_identity_check(p, DetectionPattern(counts), xs))
    return CheckResult("heralding integral identity", dev, 1e-7)


def cascade_checks(seed: int) -> list[CheckResult]:
    from .cascade import CascadeInfeasible, optimize_cascade
    from .heralding import total_probability

    out = []
    for n1, n2 in ((1, 2), (2, 1)):
        opt = optimize_cascade(0.0, n1, n2, seed)
        out.append(CheckResult(f"cascade ({n1},{n2}) fidelity", 1.0 - opt.fidelity, 1e-4))
        # positive when the cascade beats the universal scheme
        out.append(CheckResult(
            f"cascade ({n1},{n2}) probability margin",
            opt.probability - total_probability(7.0, 3), 0.0,
        ))
    try:
        optimize_cascade(0.0, 1, 1, seed)
        out.append(CheckResult("cascade (1,1) infeasible", float("inf"), 0.0))
    except CascadeInfeasible:
        out.append(CheckResult("cascade (1,1) infeasible", 0.0, 0.0))
    return out


def run_checks(
    level: str,
    seed: int,
    order: int = DEFAULT_ORDER,
    hook: Optional[SigmaHook] = None,
) -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    rng = np.random.default_rng(seed)
    modes = (2, 3) if level == "fast" else (2, 3, 4)
    results = universality_checks(modes, rng, order=order, hook=hook)
    results += decomposition_check(rng)
    results.append(loss_check(modes=(2,) if level == "fast" else (2, 3)))
    results.append(identity_check())
    if level == "full":
        results += cascade_checks(seed)
    return results
