"""Zero counting, placement round trips, and rank diagnostics."""

import numpy as np
import pytest

from pwcycles.averaging import AveragedFunction, BasisExpansion
from pwcycles.kernels import SystemParams
from pwcycles.zeros import (
    CountFormulaInput,
    PlacementError,
    RankDeficiencyError,
    chebyshev_points,
    claimed_coefficient_indices,
    coefficient_surjectivity_check,
    count_simple_zeros,
    hn_formula,
    independence_check,
    independence_generators,
    place_zeros,
    random_search_max_zeros,
    reachable_zero_capacity,
    sample_rank,
)


class TestCountFormula:
    @pytest.mark.parametrize("n,want", [(1, 4), (2, 7), (3, 8), (4, 11), (5, 12)])
    def test_generic(self, n, want):
        assert hn_formula(CountFormulaInput(n, resonant=False)) == want

    @pytest.mark.parametrize("n,want", [(1, 2), (2, 4), (3, 5), (4, 7), (5, 8)])
    def test_resonant(self, n, want):
        assert hn_formula(CountFormulaInput(n, resonant=True)) == want

    def test_degree_validated(self):
        with pytest.raises(ValueError):
            CountFormulaInput(0, False)

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_capacity_matches_claim_odd(self, n):
        assert reachable_zero_capacity(n, False) == hn_formula(CountFormulaInput(n, False))
        assert reachable_zero_capacity(n, True) == hn_formula(CountFormulaInput(n, True))

    @pytest.mark.parametrize("n", [2, 4])
    def test_capacity_one_short_even(self, n):
        # the measured reachable span loses one dimension to the exact
        # top-coefficient tie, so the ceiling sits one below the claim
        assert reachable_zero_capacity(n, False) == hn_formula(CountFormulaInput(n, False)) - 1
        assert reachable_zero_capacity(n, True) == hn_formula(CountFormulaInput(n, True)) - 1


class TestCountSimpleZeros:
    def test_degenerate_flag(self, params):
        fn = AveragedFunction(params, BasisExpansion.zeros(2), "placed")
        report = count_simple_zeros(fn, 3.0)
        assert report.degenerate
        assert report.count == 0

    def test_sign_definite_kernel_term(self, params):
        e = BasisExpansion.zeros(1)
        e.coeff_A[1] = 1.0  # r^2 A[0,0] > 0 on the annulus
        report = count_simple_zeros(AveragedFunction(params, e, "placed"), 4.0)
        assert report.count == 0

    def test_round_trip_small(self, params):
        targets = [0.2, 0.5, 0.8]
        exp = place_zeros(params, 1, targets)
        report = count_simple_zeros(AveragedFunction(params, exp, "placed"), 1.2, grid=400)
        assert report.count == 3
        assert np.allclose(report.locations, targets, atol=1e-9)
        assert not report.non_simple

    def test_monotone_refinement(self, params):
        exp = place_zeros(params, 3, list(np.linspace(0.2, 3.0, 8)))
        fn = AveragedFunction(params, exp, "placed")
        counts = [count_simple_zeros(fn, 3.4, grid=g).count for g in (200, 400, 800, 1600)]
        assert all(c2 >= c1 for c1, c2 in zip(counts, counts[1:]))

    def test_validation(self, params):
        fn = AveragedFunction(params, BasisExpansion.zeros(1), "placed")
        with pytest.raises(ValueError):
            count_simple_zeros(fn, -1.0)
        with pytest.raises(ValueError):
            count_simple_zeros(fn, 1.0, grid=2)


ROUND_TRIPS = [
    # (a, b, n, targets) chosen within each configuration's conditioning
    (1.0, -2.0, 1, [0.5, 1.0, 1.5, 2.0]),
    (1.0, -2.0, 2, list(np.linspace(0.4, 4.2, 6))),
    (1.0, -2.0, 3, list(np.linspace(0.2, 2.6, 8))),
    (1.0, -2.0, 4, list(np.linspace(0.3, 3.0, 8))),
    (1.0, -2.0, 5, list(np.linspace(0.3, 3.0, 8))),
    (1.0, -1.0, 1, [0.3, 0.8]),
    (1.0, -1.0, 2, list(np.linspace(0.4, 2.4, 3))),
    (1.0, -1.0, 3, list(np.linspace(0.3, 3.3, 5))),
    (1.0, -1.0, 4, list(np.linspace(0.3, 4.0, 6))),
    (1.0, -1.0, 5, list(np.linspace(0.3, 4.4, 8))),
    (-1.5, 2.0, 1, [0.3, 0.6, 0.9, 1.2]),
    (-1.5, 2.0, 2, list(np.linspace(0.2, 1.3, 6))),
]


class TestPlacement:
    @pytest.mark.parametrize("a,b,n,targets", ROUND_TRIPS)
    def test_round_trip(self, a, b, n, targets):
        p = SystemParams(a, b)
        exp = place_zeros(p, n, targets)
        r_cap = 1.5 * max(targets)
        if np.isfinite(p.r0):
            r_cap = min(r_cap, 0.98 * p.r0)
        report = count_simple_zeros(AveragedFunction(p, exp, "placed"), r_cap, grid=700)
        assert report.count == len(targets)
        assert np.allclose(report.locations, targets, atol=1e-9)

    def test_empty_targets(self, params):
        exp = place_zeros(params, 1, [])
        report = count_simple_zeros(AveragedFunction(params, exp, "placed"), 5.0)
        assert report.count == 0

    def test_equispaced_count_example(self, params):
        # eight equally spaced zeros over (0.2, 3.0) for degree 3
        targets = list(np.linspace(0.2, 3.0, 8))
        exp = place_zeros(params, 3, targets)
        report = count_simple_zeros(AveragedFunction(params, exp, "placed"), 4.0, grid=800)
        assert report.count == 8

    def test_capacity_counts(self, params, resonant_params):
        # saturating the measured capacity: count must be exact, locations
        # are intrinsically ill-conditioned at full capacity so only a
        # loose location check applies
        for p, n, window in [
            (params, 4, (0.3, 5.5)),
            (resonant_params, 4, (0.3, 4.0)),
        ]:
            cap = reachable_zero_capacity(n, p.resonant)
            targets = list(np.linspace(window[0], window[1], cap))
            exp = place_zeros(p, n, targets)
            report = count_simple_zeros(
                AveragedFunction(p, exp, "placed"), 1.4 * window[1], grid=900
            )
            assert report.count == cap
            assert np.allclose(report.locations, targets, atol=1e-3)

    def test_too_many_targets(self, params):
        with pytest.raises(PlacementError):
            place_zeros(params, 1, list(np.linspace(0.3, 3.0, 6)))

    def test_saturated_even_degree_fails_with_diagnosis(self, params):
        # one more zero than the measured capacity: the square collocation
        # system needs a singular matrix, and the reachable span (a
        # numerical Chebyshev system) never provides one
        targets = list(np.linspace(0.5, 4.1, 7))
        with pytest.raises(PlacementError, match="capacity 6"):
            place_zeros(params, 2, targets)

    def test_rank_deficiency_detected(self, params):
        targets = [0.5, 0.5 + 1e-14, 1.0, 1.5]
        with pytest.raises((RankDeficiencyError, ValueError)):
            place_zeros(params, 1, targets)

    def test_deterministic(self, params):
        e1 = place_zeros(params, 2, [0.4, 1.0, 1.9], seed=11)
        e2 = place_zeros(params, 2, [0.4, 1.0, 1.9], seed=11)
        assert np.array_equal(e1.coeff_A, e2.coeff_A)
        assert np.array_equal(e1.coeff_poly, e2.coeff_poly)


class TestIndependence:
    def test_nonresonant_n1(self, params):
        rank, sv = independence_check(params, 1, 4.0)
        assert rank == 9
        assert sv > 1e-10

    def test_resonant_n1(self, resonant_params):
        rank, sv = independence_check(resonant_params, 1, 4.0)
        assert rank == 6
        assert sv > 1e-10

    def test_duplicate_column_drops_rank(self, params):
        gens = independence_generators(params, 1)
        pts = chebyshev_points(0.04, 4.0, 4 * len(gens))
        from pwcycles.zeros import _eval_stack

        M = _eval_stack(gens, params, pts).T.astype(float)
        rank, _ = sample_rank(M)
        M_dup = np.hstack([M, M[:, :1]])
        rank_dup, _ = sample_rank(M_dup)
        assert rank_dup == rank
        assert M_dup.shape[1] == M.shape[1] + 1  # one dependent column added

    def test_zero_matrix_rank(self):
        rank, _ = sample_rank(np.zeros((8, 3)))
        assert rank == 0


class TestSurjectivity:
    def test_odd_degrees_full(self, params):
        for n in (1, 3):
            rank, expected = coefficient_surjectivity_check(params, n)
            assert rank == expected

    def test_even_degrees_deficit(self, params):
        # one tie per half: the claimed list overcounts by exactly two
        for n in (2, 4):
            rank, expected = coefficient_surjectivity_check(params, n)
            assert expected - rank == 2

    def test_claimed_lists(self):
        assert claimed_coefficient_indices(1) == [("kernel", 0), ("kernel", 1), ("poly", 1)]
        assert ("kernel", 2) in claimed_coefficient_indices(2)
        assert ("poly", 3) in claimed_coefficient_indices(2)


class TestCeiling:
    def test_random_search_below_claim(self, params, resonant_params):
        for p in (params, resonant_params):
            for n in (1, 2, 3):
                claimed = hn_formula(CountFormulaInput(n, p.resonant))
                best, _ = random_search_max_zeros(p, n, 60, seed=3, r_max=6.0)
                assert best <= claimed
