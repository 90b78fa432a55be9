import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from squeezed_fock.gaussian_model import UniversalSchemeParams, universal_sigma
from squeezed_fock.heralding import (
    DetectionPattern,
    conditional_probability,
    heralded_state,
    optimal_universal_parameter,
    patterns_with_total,
    probability_table,
    total_probability,
    universal_parameter,
)
from squeezed_fock.oracle import herald_fidelity_table


class TestPattern:
    def test_total(self):
        d = DetectionPattern((1, 0, 3))
        assert d.total == 4 and len(d) == 3

    @pytest.mark.parametrize("bad", [(), (-1, 2)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            DetectionPattern(bad)

    def test_enumeration(self):
        pats = list(patterns_with_total(3, 2))
        assert len(pats) == 6 and all(p.total == 2 for p in pats)


class TestHeraldedState:
    def test_vacuum_pattern(self):
        p = UniversalSchemeParams(3, (1.5, 2.5), -0.3)
        pred = heralded_state(p, DetectionPattern((0, 0)))
        assert pred.sfs.n == 0 and pred.sfs.r == -0.3

    def test_order_irrelevant(self):
        p = UniversalSchemeParams(3, (2.0, 4.0), 0.6)
        assert heralded_state(p, DetectionPattern((1, 2))).sfs == heralded_state(p, DetectionPattern((2, 1))).sfs

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            heralded_state(UniversalSchemeParams(3, (2.0, 2.0)), DetectionPattern((1,)))

    @pytest.mark.parametrize("n_modes", [2, 3, 4])
    def test_matches_oracle(self, n_modes):
        rng = np.random.default_rng(100 + n_modes)
        p = UniversalSchemeParams(n_modes, tuple(1 + 5 * (1 - rng.random(n_modes - 1))), float(rng.uniform(-1, 1)))
        table = herald_fidelity_table(universal_sigma(p), 4, p.r)
        for counts, (f, prob) in table.items():
            pred = heralded_state(p, DetectionPattern(counts))
            assert f >= 1 - 1e-6
            assert prob == pytest.approx(pred.probability, rel=1e-6)


class TestProbabilities:
    def test_two_mode_single_photon(self):
        assert conditional_probability(UniversalSchemeParams(2, (3.0,)), DetectionPattern((1,))) == pytest.approx(0.25, rel=1e-14)

    def test_vacuum_pattern(self):
        p = UniversalSchemeParams(3, (1.7, 2.9))
        x = universal_parameter(p)
        assert conditional_probability(p, DetectionPattern((0, 0))) == pytest.approx(2 / (x + 1), rel=1e-14)

    def test_exhaustive_multinomial(self):
        rng = np.random.default_rng(5)
        for n_modes in (2, 3, 4):
            p = UniversalSchemeParams(n_modes, tuple(1 + 5 * rng.random(n_modes - 1)))
            for n in range(7):
                s = sum(conditional_probability(p, d) for d in patterns_with_total(n_modes - 1, n))
                assert s == pytest.approx(total_probability(p.universal_parameter, n), rel=1e-12)

    def test_exact_rational_case(self):
        # a = (2, 3): X = 4, exact arithmetic
        p = UniversalSchemeParams(3, (2.0, 3.0))
        exact = Fraction(2) * 1 * 2**2 * math.factorial(3) / (math.factorial(1) * math.factorial(2) * Fraction(5) ** 4)
        assert conditional_probability(p, DetectionPattern((1, 2))) == pytest.approx(float(exact), rel=1e-14)

    def test_total_examples(self):
        assert total_probability(3.0, 1) == pytest.approx(0.25, rel=1e-14)
        assert total_probability(7.0, 3) == pytest.approx(27 / 256, rel=1e-14)
        assert round(total_probability(7.0, 3), 4) == 0.1055

    def test_rejects_small_x(self):
        with pytest.raises(ValueError):
            total_probability(1.0, 2)

    @pytest.mark.parametrize("x", [1.01, 1.5, 3.0, 7.0, 12.0, 20.0])
    def test_geometric_series(self, x):
        assert abs(probability_table(x, 200).sum() - 1) < 1e-10

    def test_conservation_truncated(self):
        x = 5.0
        q = (x - 1) / (x + 1)
        n_cut = math.ceil(math.log(1e-13) / math.log(q))
        assert abs(probability_table(x, n_cut).sum() - 1) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.data())
    def test_permutation_invariance(self, n_modes, data):
        a = data.draw(st.lists(st.floats(1.01, 6.0), min_size=n_modes - 1, max_size=n_modes - 1))
        counts = data.draw(st.lists(st.integers(0, 4), min_size=n_modes - 1, max_size=n_modes - 1))
        perm = data.draw(st.permutations(list(range(n_modes - 1))))
        p = UniversalSchemeParams(n_modes, tuple(a))
        q = UniversalSchemeParams(n_modes, tuple(a[i] for i in perm))
        d = DetectionPattern(tuple(counts))
        e = DetectionPattern(tuple(counts[i] for i in perm))
        assert conditional_probability(p, d) == pytest.approx(conditional_probability(q, e), rel=1e-14)

    def test_equal_x_equal_probability(self):
        p = UniversalSchemeParams(2, (5.0,))
        q = UniversalSchemeParams(4, (2.0, 2.5, 2.5))
        assert universal_parameter(p) == universal_parameter(q)
        for n in range(11):
            assert total_probability(p.universal_parameter, n) == total_probability(q.universal_parameter, n)


class TestOptimum:
    def test_examples(self):
        assert optimal_universal_parameter(1)[:2] == pytest.approx((3.0, 0.25))
        assert optimal_universal_parameter(2)[:2] == pytest.approx((5.0, 4 / 27))
        assert optimal_universal_parameter(3).probability == pytest.approx(27 / 256)

    def test_zero_order_is_a_supremum(self):
        pt = optimal_universal_parameter(0)
        assert pt.x == 1.0 and pt.probability == 1.0 and not pt.attained
        assert total_probability(1 + 1e-9, 0) == pytest.approx(1.0, abs=1e-8)

    # beyond n = 5 the maximum is too flat for double precision to pin X to 1e-6
    @pytest.mark.parametrize("n", range(1, 6))
    def test_golden_section(self, n):
        res = minimize_scalar(lambda x: -total_probability(x, n), bracket=(1.5, 2 * n + 0.7, 60.0),
                              method="golden", tol=1e-12)
        assert abs(res.x - (2 * n + 1)) < 1e-6

    @pytest.mark.parametrize("n", [1, 2, 4, 7])
    def test_dominates_log_grid(self, n):
        best = total_probability(2 * n + 1, n)
        for x in np.logspace(np.log10(1 + 1e-6), 3, 400):
            assert best >= total_probability(float(x), n)
