"""Averaged-function assembly against the direct-quadrature route."""

from fractions import Fraction

import numpy as np
import pytest

from pwcycles.averaging import (
    AveragedFunction,
    BasisExpansion,
    PerturbationSpec,
    assemble,
    eval_F,
    null_perturbation,
    oracle_F,
    perturbation_for_expansion,
    sigma_tau,
    st_coeffs,
)
from pwcycles.kernels import DomainError, SystemParams, a00
from pwcycles.smooth import SmoothPerturbationSpec, assemble_smooth


class TestPerturbationSpec:
    def test_triangle_enforced(self):
        with pytest.raises(ValueError):
            PerturbationSpec(1, plus_f={(1, 1): 2.0})
        with pytest.raises(ValueError):
            PerturbationSpec(0)

    def test_dense_round_trip(self):
        p = PerturbationSpec(2, plus_f={(0, 2): 3.0}, minus_g={(1, 0): -1.0})
        assert p.plus_f[0, 2] == 3.0
        assert p.minus_g[1, 0] == -1.0
        assert p.plus_g.sum() == 0.0


class TestSigmaTau:
    def test_zero_input(self):
        t = sigma_tau(PerturbationSpec(2))
        assert all(v == 0 for v in t.sigma.values())
        assert all(v == 0 for v in t.tau.values())

    def test_single_f_constant(self):
        # a_plus[0,0] feeds sigma[1,0] through the cosine factor only
        t = sigma_tau(PerturbationSpec(1, plus_f={(0, 0): 1.0}))
        assert t.sigma[(1, 0)] == 1
        assert sum(v != 0 for v in t.sigma.values()) == 1

    def test_tau_combination(self):
        t = sigma_tau(PerturbationSpec(1, minus_f={(0, 1): 2.0}, minus_g={(1, 0): 3.0}))
        assert t.tau[(1, 1)] == 5


class TestSTCoeffs:
    def test_single_entry_passthrough(self):
        t = sigma_tau(PerturbationSpec(1, plus_f={(0, 0): 1.0}))
        st = st_coeffs(t)
        assert st.S[(1, 0)] == 1

    def test_binomial_cancellation(self):
        # sigma[2,0] = sigma[0,2] = 1 cancels in S[2,0]
        pert = PerturbationSpec(2, plus_f={(1, 0): 1.0}, plus_g={(0, 1): 1.0})
        st = st_coeffs(sigma_tau(pert))
        assert st.S[(2, 0)] == 0
        assert st.S[(0, 1)] == 1

    def test_zero_maps_to_zero(self):
        st = st_coeffs(sigma_tau(PerturbationSpec(3)))
        assert all(v == 0 for v in st.S.values())
        assert all(v == 0 for v in st.T.values())


class TestAssemble:
    def test_zero_perturbation(self, params):
        fn = assemble(params, PerturbationSpec(2))
        assert fn.expansion.max_abs_coeff == 0.0
        assert eval_F(fn, 1.3) == 0.0

    def test_against_oracle_frozen(self):
        # n=1, a=1, b=-1, only f_plus = 1; frozen quadrature values of F
        p = SystemParams(1.0, -1.0)
        fn = assemble(p, PerturbationSpec(1, plus_f={(0, 0): 1.0}))
        for r, want in [
            (0.1, 0.1721608553055601),
            (0.5, 0.5272002825625699),
            (0.9, 0.6512795695719131),
        ]:
            assert eval_F(fn, r) == pytest.approx(want, rel=1e-9)

    def test_value_at_zero_vanishes(self, params, rng):
        for n in (1, 2, 3):
            fn = assemble(params, PerturbationSpec.random(n, rng))
            assert eval_F(fn, 0.0) == pytest.approx(0.0, abs=1e-13)

    def test_constant_tie_exact(self, params, rng):
        # a0 = -(a^2/pi) b0 and c0 = -(b^2/pi) d0, exactly, pre-merge
        fa, fb = Fraction(1), Fraction(-2)
        for n in (1, 2, 3, 4):
            fn = assemble(params, PerturbationSpec.random(n, rng))
            coef_A, poly_plus, coef_B, poly_minus = fn.expansion.exact_parts
            assert poly_plus[0].rat == 0
            assert coef_A[0] == -(fa * fa) * poly_plus[0].pi
            assert poly_minus[0].rat == 0
            assert coef_B[0] == -(fb * fb) * poly_minus[0].pi

    def test_structural_parity_exact(self, params, rng):
        # the monomial coefficient at index 2*floor((n+1)/2) vanishes exactly
        for n in (1, 2, 3, 4, 5):
            h = (n + 1) // 2
            fn = assemble(params, PerturbationSpec.random(n, rng))
            _, poly_plus, _, poly_minus = fn.expansion.exact_parts
            assert poly_plus[2 * h].is_zero
            assert poly_minus[2 * h].is_zero

    def test_even_degree_top_tie_exact(self, params, rng):
        # for even n the top monomial is rationally tied to the top kernel
        # coefficient on each half: b_top = -(2/a) a_top, d_top = (2/b) c_top
        fa, fb = Fraction(1), Fraction(-2)
        for n in (2, 4):
            h = (n + 1) // 2
            fn = assemble(params, PerturbationSpec.random(n, rng))
            coef_A, poly_plus, coef_B, poly_minus = fn.expansion.exact_parts
            assert poly_plus[2 * h + 1].pi == 0
            assert poly_plus[2 * h + 1].rat == -(Fraction(2) / fa) * coef_A[h + 1]
            assert poly_minus[2 * h + 1].pi == 0
            assert poly_minus[2 * h + 1].rat == (Fraction(2) / fb) * coef_B[h + 1]

    def test_linearity(self, params, rng):
        p1 = PerturbationSpec.random(2, rng)
        p2 = PerturbationSpec.random(2, rng)
        combo = p1.scaled_add(0.7, p2, -1.3)
        rr = np.linspace(0.1, 3.0, 11)
        lhs = eval_F(assemble(params, combo), rr)
        rhs = 0.7 * eval_F(assemble(params, p1), rr) - 1.3 * eval_F(assemble(params, p2), rr)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + np.max(np.abs(rhs)))


class TestEvalF:
    def test_unit_kernel_term(self):
        p = SystemParams(2.0, 1.0)
        e = BasisExpansion.zeros(1)
        e.coeff_A[1] = 1.0
        fn = AveragedFunction(p, e, "placed")
        assert eval_F(fn, 0.5) == pytest.approx(0.25 * a00(0.5, 2.0), rel=1e-14)

    def test_independent_resummation(self, params, rng):
        # term-by-term summation with scalar kernel calls
        fn = assemble(params, PerturbationSpec.random(3, rng))
        e = fn.expansion
        for r in (0.2, 0.9, 1.7):
            acc = sum(c * r**k for k, c in enumerate(e.coeff_poly))
            acc += sum(c * r ** (2 * i) for i, c in enumerate(e.coeff_A)) * a00(r, params.a)
            acc += sum(c * r ** (2 * i) for i, c in enumerate(e.coeff_B)) * a00(-r, params.b)
            assert eval_F(fn, r) == pytest.approx(acc, rel=1e-13)

    def test_domain_guard(self):
        p = SystemParams(1.0, 0.8)  # r0 = 0.8
        fn = assemble(p, PerturbationSpec(1, plus_f={(0, 0): 1.0}))
        with pytest.raises(DomainError):
            eval_F(fn, 0.8)


class TestOracleF:
    def test_zero_perturbation(self, params):
        assert oracle_F(params, PerturbationSpec(2), 0.7) == 0.0

    def test_odd_symmetry_case(self):
        # g_plus = const integrates sin(t)/(r cos t + a)^2 over the half circle: 0
        p = SystemParams(1.0, 1.0)
        pert = PerturbationSpec(1, plus_g={(0, 0): 1.0})
        assert abs(oracle_F(p, pert, 0.5)) < 1e-12

    def test_pipeline_equivalence_spot(self, rng):
        p = SystemParams(1.0, 2.0)
        pert = PerturbationSpec.random(2, rng)
        got = eval_F(assemble(p, pert), 0.7)
        want = oracle_F(p, pert, 0.7)
        assert got == pytest.approx(want, rel=1e-8)

    def test_pipeline_equivalence_randomized(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 7))
            a = float(rng.uniform(0.5, 2.0) * rng.choice([-1, 1]))
            b = float(rng.uniform(0.5, 2.0) * rng.choice([-1, 1]))
            p = SystemParams(a, b)
            pert = PerturbationSpec.random(n, rng)
            r = float(rng.uniform(0.05, min(3.5, 0.9 * p.r0)))
            got = eval_F(assemble(p, pert), r)
            want = oracle_F(p, pert, r)
            assert abs(got - want) <= 1e-8 * (1 + abs(want))


class TestSmoothRestriction:
    def test_smooth_consistency(self, rng):
        # a = b with equal tables: the piecewise pipeline must agree with
        # the full-circle smooth pipeline
        a = 1.3
        p = SystemParams(a, a)
        for n in (1, 2, 3):
            f_t = SmoothPerturbationSpec.random(n, rng)
            pert = PerturbationSpec(n, f_t.f_table, f_t.g_table, f_t.f_table, f_t.g_table)
            fn = assemble(p, pert)
            sm = assemble_smooth(a, f_t)
            rr = np.linspace(0.05, 0.9 * a, 17)
            assert np.max(np.abs(eval_F(fn, rr) - sm.value(rr))) < 1e-9


class TestRealization:
    def test_round_trip(self, params, rng):
        pert = PerturbationSpec.random(2, rng)
        fn = assemble(params, pert)
        back = perturbation_for_expansion(params, fn.expansion)
        rr = np.linspace(0.1, 3.0, 9)
        assert np.max(np.abs(eval_F(assemble(params, back), rr) - eval_F(fn, rr))) < 1e-9

    def test_unreachable_expansion_rejected(self, params):
        # break the even-degree tie by hand: not reachable
        e = BasisExpansion.zeros(2)
        e.coeff_A[2] = 1.0  # top kernel term without its tied monomial
        with pytest.raises(ValueError):
            perturbation_for_expansion(params, e)

    def test_null_perturbation_assembles_to_zero(self, params):
        fn = assemble(params, null_perturbation(3))
        assert fn.expansion.max_abs_coeff == 0.0
