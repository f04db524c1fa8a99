"""Smooth (full-circle) pipeline: V families, assembly, zero capacity."""

import math

import numpy as np
import pytest

from pwcycles.kernels import DomainError, quad_oracle, trig_rational, FULL_CIRCLE
from pwcycles.smooth import (
    SmoothExpansion,
    SmoothPerturbationSpec,
    assemble_smooth,
    count_smooth_zeros,
    eval_V_family,
    oracle_smooth_F,
    place_smooth_zeros,
    random_search_max_smooth_zeros,
    smooth_generating_rank,
)


class TestVFamily:
    def test_odd_sine_power(self):
        assert eval_V_family(0, 3, 0.4, 1.0) == 0.0

    def test_origin(self):
        for a in (1.0, -1.7):
            assert eval_V_family(0, 0, 0.0, a) == pytest.approx(2 * math.pi / a**2, rel=1e-13)

    def test_frozen_oracle(self):
        got = eval_V_family(2, 0, 0.3, 1.0)
        assert got == pytest.approx(3.8670691671864517, rel=1e-9)

    def test_randomized_oracle(self, rng):
        for _ in range(25):
            a = float(rng.uniform(0.5, 2.0) * rng.choice([-1, 1]))
            i = int(rng.integers(0, 7))
            j = int(rng.integers(0, 7 - i))
            r = float(rng.uniform(-0.85, 0.85)) * abs(a)
            got = eval_V_family(i, j, r, a)
            want = quad_oracle(trig_rational(i, j, r, a, 2), FULL_CIRCLE)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            eval_V_family(0, 0, 1.0, 1.0)


class TestAssembleSmooth:
    def test_zero_perturbation(self):
        exp = assemble_smooth(1.0, SmoothPerturbationSpec(2))
        assert np.all(exp.alpha == 0.0)
        assert np.all(exp.beta_even == 0.0)

    def test_frozen_linear_case(self):
        # n=1, f = 1: F(0.4) = 0.4 * integral of cos/(0.4 cos + 1)^2
        exp = assemble_smooth(1.0, SmoothPerturbationSpec(1, f_table={(0, 0): 1.0}))
        assert exp.value(0.4) == pytest.approx(-1.3058128016138242, rel=1e-9)

    def test_oracle_equivalence(self, rng):
        a = 1.0
        pert = SmoothPerturbationSpec.random(3, rng)
        exp = assemble_smooth(a, pert)
        for r in np.linspace(0.05, 0.9, 20):
            want = oracle_smooth_F(a, pert, float(r))
            assert exp.value(float(r)) == pytest.approx(want, rel=1e-8, abs=1e-12)

    def test_evenness_exact(self, rng):
        # only even monomials, none beyond the structural cap, exactly
        for n in (1, 2, 3, 4):
            pert = SmoothPerturbationSpec.random(n, rng)
            exp = assemble_smooth(1.5, pert)
            _, poly = exp.exact_parts
            for idx, c in enumerate(poly):
                if idx % 2 == 1:
                    assert c.is_zero
                elif idx > 2 * ((n - 1) // 2):
                    assert c.is_zero

    def test_generating_set_membership(self, rng):
        # assembled F lies in span{r^(2i)} U {V - 2pi/a^2} U {r^(2i) V}
        a = 1.0
        n = 3
        k = (n - 1) // 2
        rr = np.linspace(0.03, 0.9, 60)
        from pwcycles.kernels import a00

        v00 = a00(rr, a) + a00(-rr, a)
        cols = [v00 - 2 * math.pi / a**2]
        cols += [rr ** (2 * i) * v00 for i in range(1, n // 2 + 2)]
        cols += [rr ** (2 * i) for i in range(1, k + 1)]
        G = np.array(cols).T
        for _ in range(6):
            exp = assemble_smooth(a, SmoothPerturbationSpec.random(n, rng))
            y = exp.value(rr)
            coef, *_ = np.linalg.lstsq(G, y, rcond=None)
            assert np.linalg.norm(y - G @ coef) < 1e-10 * max(1.0, np.linalg.norm(y))


class TestSmoothZeros:
    def test_placement_round_trip(self):
        targets = [0.2, 0.45, 0.7]
        exp = place_smooth_zeros(1.0, 3, targets)
        zeros = count_smooth_zeros(exp, 0.95)
        assert len(zeros) == 3
        assert np.allclose(zeros, targets, atol=1e-9)

    def test_placement_capacity(self):
        with pytest.raises(ValueError):
            place_smooth_zeros(1.0, 3, [0.2, 0.4, 0.6, 0.8])

    def test_empty_targets_signs_definite(self):
        exp = place_smooth_zeros(1.0, 2, [])
        assert count_smooth_zeros(exp, 0.9) == []

    def test_ceiling_survey(self):
        for n in (2, 3):
            best, _ = random_search_max_smooth_zeros(1.0, n, 60, seed=5, r_max=0.95)
            assert best <= n

    def test_even_degree_rank_resolution(self):
        # the printed generating set for n = 2k lists one function more
        # than the reachable span contains; n = 2k+1 matches exactly
        r2 = smooth_generating_rank(1.0, 2, 0.9)
        assert r2["listed_rank"] == r2["listed_set_size"] == 4
        assert r2["reachable_rank"] == r2["expected_reachable"] == 3
        r3 = smooth_generating_rank(1.0, 3, 0.9)
        assert r3["reachable_rank"] == r3["expected_reachable"] == 4
        assert r3["listed_set_size"] == 4
