"""Two-stage cascade scheme and its comparison with the universal scheme.

Stage one mixes squeezed vacua ``r1`` (mode 1) and ``r2`` (mode 2) on a beam
splitter ``t1`` and counts ``n1`` photons in mode 1. The conditional state in
mode 2 is mixed with squeezed vacuum ``r3`` (mode 3) on ``t2`` and ``n2``
photons are counted in mode 2; mode 3 is the output.

The first count acts on mode 1 only and therefore commutes with the second
beam splitter, so the whole cascade is one three-mode Gaussian state
``sigma = O D O^T`` heralded on ``(n1, n2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import cosh, log, sinh

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .gaussian_model import SigmaMatrix, UniversalSchemeParams
from .heralding import DetectionPattern, total_probability
from .oracle import GridWavefunction, ZeroProbabilityError, herald_fidelity, herald_numeric
from .special_math import QuadratureRule, WaveParams
from .synthesis import BeamSplitterOp, decompose, max_squeezing_db, squeezing_to_db, total_mean_photons

R_BOX = 3.0
T_MIN = 1e-3
FIDELITY_THRESHOLD = 1.0 - 1e-4
DEFAULT_SEED = 20240917
CASCADE_ORDER = 16
CASCADE_INNER_ORDER = 8
MAX_CASCADE_TOTAL = 6

# (r1, r2, r3, t1, t2); r1 >= 0 and r2 <= 0 keep the stage-one inputs
# orthogonally squeezed
BOX_LOW = np.array([0.0, -R_BOX, -R_BOX, T_MIN, T_MIN])
BOX_HIGH = np.array([R_BOX, 0.0, R_BOX, 1.0 - T_MIN, 1.0 - T_MIN])


class CascadeInfeasible(RuntimeError):
    """No parameters reached the fidelity threshold."""

    def __init__(self, message: str, best_fidelity: float, best_params: "CascadeParams | None"):
        super().__init__(message)
        self.best_fidelity = best_fidelity
        self.best_params = best_params


@dataclass(frozen=True)
class CascadeParams:
    r1: float
    r2: float
    r3: float
    t1: float
    t2: float

    def __post_init__(self):
        for name in ("t1", "t2"):
            t = getattr(self, name)
            if not 0.0 < t < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {t}")
        for name in ("r1", "r2", "r3"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_vector(cls, v) -> "CascadeParams":
        return cls(*(float(x) for x in v))

    def vector(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3, self.t1, self.t2])

    def sigma(self) -> np.ndarray:
        o = BeamSplitterOp(2, 3, self.t2).matrix(3) @ BeamSplitterOp(1, 2, self.t1).matrix(3)
        d = np.exp(2.0 * np.array([self.r1, self.r2, self.r3]))
        m = (o * d) @ o.T
        return 0.5 * (m + m.T)

    @property
    def squeezings(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)

    @property
    def max_squeezing_db(self) -> float:
        return max(squeezing_to_db(r) for r in self.squeezings)

    @property
    def energy(self) -> float:
        return float(sum(sinh(r) ** 2 for r in self.squeezings))

    def in_box(self) -> bool:
        v = self.vector()
        return bool(np.all(v >= BOX_LOW) and np.all(v <= BOX_HIGH))


@dataclass(frozen=True)
class CascadeOptimum:
    params: CascadeParams
    fidelity: float
    probability: float


@dataclass(frozen=True)
class ComparisonRecord:
    r: float
    n: int
    n1: int
    n2: int
    p_universal: float
    p_cascade: float
    fidelity_cascade: float
    max_sq_db_universal: float
    max_sq_db_cascade: float
    energy_universal: float
    energy_cascade: float

    def __post_init__(self):
        for p in (self.p_universal, self.p_cascade):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_counts(n1: int, n2: int) -> None:
    if n1 < 1 or n2 < 1:
        raise ValueError("cascade counts must be at least 1 (zero counts add no non-Gaussianity)")
    if n1 + n2 > MAX_CASCADE_TOTAL:
        raise ValueError(f"n1 + n2 must not exceed {MAX_CASCADE_TOTAL}")


def cascade_output(
    c: CascadeParams, n1: int, n2: int, grid: QuadratureRule | int
) -> tuple[GridWavefunction, float]:
    """Normalised output wavefunction and joint probability of ``(n1, n2)``."""
    _check_counts(n1, n2)
    order = grid.order if isinstance(grid, QuadratureRule) else int(grid)
    res = herald_numeric(SigmaMatrix(c.sigma()), DetectionPattern((n1, n2)), order=order)
    return res.psi, res.probability


def cascade_fidelity(
    c: CascadeParams,
    n1: int,
    n2: int,
    r: float,
    order: int = CASCADE_ORDER,
    inner_order: int = CASCADE_INNER_ORDER,
) -> tuple[float, float]:
    """``(fidelity to S(r)|n1+n2>, joint probability)``.

    Raises :class:`ZeroProbabilityError` when the event cannot occur, e.g.
    when both first-stage inputs are vacuum.
    """
    _check_counts(n1, n2)
    return herald_fidelity(c.sigma(), (n1, n2), WaveParams(r, n1 + n2), order, inner_order)


def cascade_n2_fidelity_bound(r: float, r3: float) -> float:
    """Closed-form maximal ``(1, 1)`` fidelity to ``S(r)|2>`` at fixed ``r3``."""
    return 2.0 / 3.0 + 4.0 / (3.0 - 9.0 * cosh(2.0 * (r - r3)))


def _evaluate(v, n1, n2, r):
    v = np.clip(v, BOX_LOW, BOX_HIGH)
    try:
        return herald_fidelity(
            CascadeParams.from_vector(v).sigma(), (n1, n2), WaveParams(r, n1 + n2),
            CASCADE_ORDER, CASCADE_INNER_ORDER,
        )
    except ZeroProbabilityError:
        return 0.0, 0.0


def maximize_fidelity(
    r: float,
    n1: int,
    n2: int,
    seed: int = DEFAULT_SEED,
    starts: int = 32,
    candidates: int = 256,
    maxfev: int = 300,
    floor: float = 0.0,
) -> list[tuple[float, float, np.ndarray]]:
    """Multi-start simplex search for high fidelity.

    ``candidates`` scrambled Sobol points are scored and the best ``starts``
    seed Nelder-Mead runs on ``1 - F``. The objective is flattened below
    ``floor`` so runs stop once they are good enough. Returns
    ``(fidelity, probability, vector)`` for every start.
    """
    _check_counts(n1, n2)
    sobol = qmc.Sobol(5, scramble=True, seed=np.random.default_rng(seed))
    pts = qmc.scale(sobol.random(candidates), BOX_LOW, BOX_HIGH)
    scores = np.array([_evaluate(p, n1, n2, r)[0] for p in pts])
    order = np.argsort(-scores, kind="stable")[:starts]
    bounds = list(zip(BOX_LOW, BOX_HIGH))
    out = []
    for i in order:
        res = minimize(
            lambda v: max(1.0 - _evaluate(v, n1, n2, r)[0], floor),
            pts[i], method="Nelder-Mead", bounds=bounds,
            options={"maxfev": maxfev, "xatol": 1e-10, "fatol": 1e-14},
        )
        v = np.clip(res.x, BOX_LOW, BOX_HIGH)
        f, p = _evaluate(v, n1, n2, r)
        out.append((f, p, v))
    return out


def optimize_cascade(
    r: float,
    n1: int,
    n2: int,
    seed: int = DEFAULT_SEED,
    starts: int = 32,
    threshold: float = FIDELITY_THRESHOLD,
    refine: int = 6,
    maxfev: int = 800,
) -> CascadeOptimum:
    """Most probable cascade whose output has fidelity ``>= threshold`` to ``S(r)|n1+n2>``.

    Phase one drives the fidelity above the threshold from many starts;
    phase two maximises the probability from the ``refine`` most probable
    feasible points with a penalised simplex search. Raises
    :class:`CascadeInfeasible` (carrying the best fidelity seen) when no
    start reaches the threshold.
    """
    # stop phase one a little inside the feasible set so phase two has room
    margin = 0.2 * (1.0 - threshold)
    found = maximize_fidelity(r, n1, n2, seed, starts, floor=margin)
    feasible = [s for s in found if s[0] >= threshold]
    if not feasible:
        best = max(found, key=lambda s: s[0])
        raise CascadeInfeasible(
            f"no cascade reached fidelity {threshold} for ({n1}, {n2}); best {best[0]:.6f}",
            best[0], CascadeParams.from_vector(best[2]),
        )
    feasible.sort(key=lambda s: -s[1])
    bounds = list(zip(BOX_LOW, BOX_HIGH))
    target = threshold + 0.5 * margin
    best = feasible[0]
    for f0, p0, v0 in feasible[:refine]:
        scale = p0

        def objective(v):
            f, p = _evaluate(v, n1, n2, r)
            return -p / scale + 1e3 * max(0.0, target - f) / (1.0 - threshold)

        res = minimize(
            objective, v0, method="Nelder-Mead", bounds=bounds,
            options={"maxfev": maxfev, "xatol": 1e-10, "fatol": 1e-12},
        )
        v = np.clip(res.x, BOX_LOW, BOX_HIGH)
        f, p = _evaluate(v, n1, n2, r)
        if f >= threshold and p > best[1]:
            best = (f, p, v)
    f, p, v = best
    return CascadeOptimum(CascadeParams.from_vector(v), float(f), float(p))


def universal_reference(r: float, n: int = 3) -> tuple[float, float, float]:
    """``(probability, max input squeezing in dB, energy)`` of the optimal three-mode universal scheme."""
    x = 2.0 * n + 1.0
    d = decompose(UniversalSchemeParams.with_universal_parameter(3, x, r))
    return total_probability(x, n), max_squeezing_db(d), total_mean_photons(d)


def compare_schemes(
    r: float, n: int = 3, seed: int = DEFAULT_SEED
) -> list[ComparisonRecord]:
    """One record per cascade ordering ``(1, n-1)`` and ``(n-1, 1)``."""
    if n != 3:
        raise ValueError("the comparison is defined for n = 3")
    if abs(r) > R_BOX:
        raise ValueError(f"r must lie in [-{R_BOX}, {R_BOX}]")
    p_u, db_u, e_u = universal_reference(r, n)
    records = []
    for n1, n2 in ((1, n - 1), (n - 1, 1)):
        opt = optimize_cascade(r, n1, n2, seed)
        records.append(
            ComparisonRecord(
                r=float(r), n=n, n1=n1, n2=n2,
                p_universal=p_u, p_cascade=opt.probability, fidelity_cascade=opt.fidelity,
                max_sq_db_universal=db_u, max_sq_db_cascade=opt.params.max_squeezing_db,
                energy_universal=e_u, energy_cascade=opt.params.energy,
            )
        )
    return records


def db_to_squeezing(db: float) -> float:
    return db * log(10.0) / 20.0
