import time

import numpy as np
import pytest

from squeezed_fock.cascade import DEFAULT_SEED, compare_schemes, maximize_fidelity

R_GRID = tuple(float(r) for r in np.linspace(-1.0, 1.0, 9))
N2_R_VALUES = (-0.5, 0.0, 0.5)


@pytest.fixture(scope="session")
def comparison_grid():
    """Cascade vs universal records on the 9-point r grid, plus wall time."""
    start = time.perf_counter()
    records = {r: compare_schemes(r, 3, DEFAULT_SEED) for r in R_GRID}
    return records, time.perf_counter() - start


@pytest.fixture(scope="session")
def n2_cascade_maxima():
    """Best (1,1) fidelity to S(r)|2> over the whole box, per target r."""
    out = {}
    for r in N2_R_VALUES:
        found = maximize_fidelity(r, 1, 1, DEFAULT_SEED, starts=32, maxfev=600)
        f, p, v = max(found, key=lambda s: s[0])
        out[r] = (f, v)
    return out
