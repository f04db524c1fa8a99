"""The first-order averaged function of the perturbed piecewise center.

For a degree-n perturbation the scaled averaged function

    F(r) = r * f0(r)

is a finite combination of monomials r^i and of r^(2i) * A[0,0](r),
r^(2i) * B[0,0](r).  Two independent routes compute it:

* `assemble` reduces the coefficient tables symbolically (exact rational
  arithmetic in Q + Q*pi): build the sigma/tau sums, fold odd sine powers
  away, lower even sine powers binomially (S/T tables), collapse the
  cosine ladders, and eliminate the first-power seeds I[0,0], J[0,0]
  through their closed relations.  The result is a `BasisExpansion`.

* `oracle_F` integrates the polar right-hand side directly with adaptive
  quadrature and knows nothing about the reduction.

Their agreement is the central correctness property of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .exact import PiNumber, as_fraction
from .kernels import (
    BACK_HALF_CIRCLE,
    HALF_CIRCLE,
    DomainError,
    QuadratureSpec,
    SystemParams,
    a00,
    quad_oracle,
    wallis_half_exact,
)

Table = Dict[Tuple[int, int], Fraction]


class AssemblyError(RuntimeError):
    """An exact structural identity of the reduction failed."""


def _dense_table(degree: int, entries, name: str) -> np.ndarray:
    """Dense (degree+1)^2 coefficient array from an array-like or dict."""
    out = np.zeros((degree + 1, degree + 1))
    if entries is None:
        return out
    if isinstance(entries, dict):
        items = entries.items()
    else:
        arr = np.asarray(entries, dtype=float)
        if arr.shape != (degree + 1, degree + 1):
            raise ValueError(f"{name}: expected shape {(degree + 1, degree + 1)}, got {arr.shape}")
        items = (((i, j), arr[i, j]) for i in range(degree + 1) for j in range(degree + 1))
    for (i, j), v in items:
        if v == 0.0:
            continue
        if i < 0 or j < 0 or i + j > degree:
            raise ValueError(f"{name}: index ({i},{j}) outside triangle of degree {degree}")
        out[i, j] = v
    return out


@dataclass(frozen=True)
class PerturbationSpec:
    """Triangular coefficient tables of the four perturbation polynomials.

    `plus_f[i, j]` multiplies x^i y^j in f on x >= 0, and so on; entries
    with i + j > degree must be zero (the constructor enforces it).
    """

    degree: int
    plus_f: np.ndarray
    plus_g: np.ndarray
    minus_f: np.ndarray
    minus_g: np.ndarray

    def __init__(self, degree, plus_f=None, plus_g=None, minus_f=None, minus_g=None):
        if degree < 1:
            raise ValueError("perturbation degree must be >= 1")
        object.__setattr__(self, "degree", int(degree))
        for name, entries in (
            ("plus_f", plus_f),
            ("plus_g", plus_g),
            ("minus_f", minus_f),
            ("minus_g", minus_g),
        ):
            object.__setattr__(self, name, _dense_table(self.degree, entries, name))

    @staticmethod
    def random(degree: int, rng: np.random.Generator, scale: float = 1.0) -> "PerturbationSpec":
        def tri(n):
            t = rng.uniform(-scale, scale, size=(n + 1, n + 1))
            for i in range(n + 1):
                for j in range(n + 1):
                    if i + j > n:
                        t[i, j] = 0.0
            return t

        n = degree
        return PerturbationSpec(n, tri(n), tri(n), tri(n), tri(n))

    def scaled_add(self, alpha: float, other: "PerturbationSpec", beta: float) -> "PerturbationSpec":
        if other.degree != self.degree:
            raise ValueError("degrees differ")
        return PerturbationSpec(
            self.degree,
            alpha * self.plus_f + beta * other.plus_f,
            alpha * self.plus_g + beta * other.plus_g,
            alpha * self.minus_f + beta * other.minus_f,
            alpha * self.minus_g + beta * other.minus_g,
        )

    @property
    def max_abs_coeff(self) -> float:
        return max(
            float(np.max(np.abs(t)))
            for t in (self.plus_f, self.plus_g, self.minus_f, self.minus_g)
        )

    def normalized(self) -> "PerturbationSpec":
        """Unit max coefficient: same averaged-function zeros, smaller
        second-order term relative to the first-order signal."""
        s = self.max_abs_coeff
        if s == 0:
            return self
        return self.scaled_add(1.0 / s, self, 0.0)


@dataclass(frozen=True)
class SigmaTauTable:
    degree: int
    sigma: Table
    tau: Table


@dataclass(frozen=True)
class STTable:
    degree: int
    S: Table
    T: Table


def sigma_tau(pert: PerturbationSpec) -> SigmaTauTable:
    """Combine f and g tables into the polar numerator coefficients.

    sigma[i,j] = plus_f[i-1,j] + plus_g[i,j-1] (zero convention for the
    out-of-range indices), and tau likewise from the minus tables.
    """
    n = pert.degree

    def build(ft: np.ndarray, gt: np.ndarray) -> Table:
        out: Table = {}
        for i in range(n + 2):
            for j in range(n + 2 - i):
                if i + j < 1:
                    continue
                v = Fraction(0)
                if i >= 1 and (i - 1) + j <= n:
                    v += as_fraction(float(ft[i - 1, j]))
                if j >= 1 and i + (j - 1) <= n:
                    v += as_fraction(float(gt[i, j - 1]))
                out[(i, j)] = v
        return out

    return SigmaTauTable(n, build(pert.plus_f, pert.plus_g), build(pert.minus_f, pert.minus_g))


def st_coeffs(table: SigmaTauTable) -> STTable:
    """Binomial compression of even sine powers.

    S[i,j] = sum_k (-1)^k C(j+k, k) sigma[i-2k, 2j+2k], k = 0..floor(i/2);
    the map (sigma, tau) -> (S, T) is triangular with unit diagonal, hence
    invertible on its range.
    """
    n = table.degree

    def build(src: Table) -> Table:
        out: Table = {}
        for i in range(n + 2):
            for j in range((n + 1 - i) // 2 + 1):
                acc = Fraction(0)
                for k in range(i // 2 + 1):
                    acc += (-1) ** k * math.comb(j + k, k) * src.get((i - 2 * k, 2 * j + 2 * k), Fraction(0))
                out[(i, j)] = acc
        return out

    return STTable(n, build(table.sigma), build(table.tau))


def _reduce_half(
    S: Table,
    c: Fraction,
    degree: int,
    wallis,
    alternate: bool,
    linear_seed: Fraction,
) -> Tuple[List[Fraction], List[PiNumber]]:
    """Collapse one half-circle family to {r^(2i) K[0,0]} + monomials.

    The ladder for the squared-denominator family reads

        r^i K[i,0] = (-c)^i K[0,0] + i (-c)^(i-1) L[0,0] + poly terms,

    with poly ladder weights (-c)^k (front half) or (-1)^i c^k (back
    half, `alternate=True`).  The first-power seed then dissolves via
    L[0,0] = linear_seed * r + c*K[0,0] - (r^2/c)*K[0,0], where
    linear_seed is +2/c^2 (front), -2/c^2 (back) or 0 (full circle).
    """
    h = (degree + 1) // 2
    coef_K = [Fraction(0)] * (h + 2)
    coef_L = [Fraction(0)] * (h + 1)
    poly = [PiNumber()] * (2 * h + 2)

    for (i, j), s in S.items():
        if s == 0:
            continue
        coef_K[j] += s * (-c) ** i
        if i >= 1:
            coef_L[j] += s * i * (-c) ** (i - 1)
        for k in range(i - 1):  # k = 0 .. i-2
            w = wallis(i - k - 2)
            if w.is_zero:
                continue
            lad = ((-1) ** i) * c**k if alternate else (-c) ** k
            poly[2 * j + i - k - 2] += w * (s * (k + 1) * lad)

    for j in range(h + 1):
        cl = coef_L[j]
        if cl == 0:
            continue
        if linear_seed != 0:
            poly[2 * j + 1] += PiNumber.of(cl * linear_seed)
        coef_K[j] += cl * c
        coef_K[j + 1] -= cl / c

    return coef_K, poly


@dataclass(frozen=True)
class BasisExpansion:
    """Coefficients of F(r) over {r^i} U {r^(2i) A[0,0]} U {r^(2i) B[0,0]}.

    `coeff_A[i]` multiplies r^(2i) A[0,0](r), `coeff_B[i]` multiplies
    r^(2i) B[0,0](r), and `coeff_poly[i]` multiplies r^i (the two halves'
    monomial parts already merged).  The exact pre-merge parts are kept
    when the expansion came out of the symbolic reduction.
    """

    degree: int
    coeff_A: np.ndarray
    coeff_B: np.ndarray
    coeff_poly: np.ndarray
    exact_parts: Optional[tuple] = field(default=None, compare=False, repr=False)

    @staticmethod
    def zeros(degree: int) -> "BasisExpansion":
        h = (degree + 1) // 2
        return BasisExpansion(
            degree,
            np.zeros(h + 2),
            np.zeros(h + 2),
            np.zeros(2 * h + 2),
        )

    def scaled_add(self, alpha: float, other: "BasisExpansion", beta: float) -> "BasisExpansion":
        if other.degree != self.degree:
            raise ValueError("degrees differ")
        return BasisExpansion(
            self.degree,
            alpha * self.coeff_A + beta * other.coeff_A,
            alpha * self.coeff_B + beta * other.coeff_B,
            alpha * self.coeff_poly + beta * other.coeff_poly,
        )

    @property
    def max_abs_coeff(self) -> float:
        return max(
            float(np.max(np.abs(self.coeff_A))),
            float(np.max(np.abs(self.coeff_B))),
            float(np.max(np.abs(self.coeff_poly))),
        )


@dataclass(frozen=True)
class AveragedFunction:
    params: SystemParams
    expansion: BasisExpansion
    provenance: str = "assembled"  # assembled | placed | fitted

    def __post_init__(self) -> None:
        if self.provenance not in ("assembled", "placed", "fitted"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def value(self, r):
        return eval_F(self, r)


def expansion_values(expansion: BasisExpansion, params: SystemParams, r):
    """Vectorized evaluation of a BasisExpansion (no domain checks)."""
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    r2 = rr * rr
    out = npoly.polyval(rr, expansion.coeff_poly)
    out = out + npoly.polyval(r2, expansion.coeff_A) * a00(rr, params.a)
    out = out + npoly.polyval(r2, expansion.coeff_B) * a00(-rr, params.b)
    return out


def eval_F(fn: AveragedFunction, r):
    """F(r) on [0, r0); rejects points outside the period annulus."""
    rr = np.asarray(r, dtype=float)
    r0 = fn.params.r0
    if np.any(rr < 0) or np.any(rr >= r0):
        raise DomainError(f"evaluation point outside [0, {r0})")
    out = expansion_values(fn.expansion, fn.params, rr)
    return float(out[0]) if np.ndim(r) == 0 else out


def _exact_assemble(
    params: SystemParams, pert: PerturbationSpec
) -> Tuple[List[Fraction], List[PiNumber], List[Fraction], List[PiNumber]]:
    """Run the reduction in exact arithmetic; returns pre-merge parts."""
    fa = as_fraction(params.a)
    fb = as_fraction(params.b)
    st = st_coeffs(sigma_tau(pert))
    coef_A, poly_plus = _reduce_half(
        st.S, fa, pert.degree, wallis_half_exact, alternate=False, linear_seed=Fraction(2) / fa**2
    )
    coef_B, poly_minus = _reduce_half(
        st.T, fb, pert.degree, wallis_half_exact, alternate=True, linear_seed=Fraction(-2) / fb**2
    )
    h = (pert.degree + 1) // 2

    # Exact structural identities of the expansion; a failure here means
    # the reduction itself is broken, not the input.
    if not poly_plus[2 * h].is_zero or not poly_minus[2 * h].is_zero:
        raise AssemblyError("monomial coefficient at index 2*floor((n+1)/2) must vanish")
    for poly, coef, f2 in ((poly_plus, coef_A, fa), (poly_minus, coef_B, fb)):
        if poly[0].rat != 0:
            raise AssemblyError("constant monomial must be a pure pi multiple")
        if coef[0] != -(f2 * f2) * poly[0].pi:
            raise AssemblyError("constant-term tie between the kernel and monomial parts failed")
    return coef_A, poly_plus, coef_B, poly_minus


def assemble(params: SystemParams, pert: PerturbationSpec) -> AveragedFunction:
    """Symbolic reduction of a perturbation to its BasisExpansion."""
    coef_A, poly_plus, coef_B, poly_minus = _exact_assemble(params, pert)
    merged = [float(p + q) for p, q in zip(poly_plus, poly_minus)]
    expansion = BasisExpansion(
        pert.degree,
        np.array([float(x) for x in coef_A]),
        np.array([float(x) for x in coef_B]),
        np.array(merged),
        exact_parts=(coef_A, poly_plus, coef_B, poly_minus),
    )
    return AveragedFunction(params, expansion, "assembled")


def null_perturbation(degree: int) -> PerturbationSpec:
    """A perturbation with identically zero averaged function.

    f = y, g = -x on both half-planes cancels inside the polar numerator
    combination (the two contributions to the same power pair annul), so
    the assembly is exactly zero.  Useful for breaking the time-reversal
    symmetry of minimal-norm realizations without touching f0: reversible
    fields have no even-order terms in their displacement expansion, which
    makes first-order convergence studies degenerate.
    """
    quads = {"plus_f": {(0, 1): 1.0}, "plus_g": {(1, 0): -1.0},
             "minus_f": {(0, 1): 1.0}, "minus_g": {(1, 0): -1.0}}
    return PerturbationSpec(degree, **quads)


def _expansion_vector(expansion: BasisExpansion) -> np.ndarray:
    return np.concatenate(
        [
            np.asarray(expansion.coeff_A, dtype=float),
            np.asarray(expansion.coeff_B, dtype=float),
            np.asarray(expansion.coeff_poly, dtype=float),
        ]
    )


def perturbation_for_expansion(
    params: SystemParams, expansion: BasisExpansion, rcond: float = 1e-12
) -> PerturbationSpec:
    """A perturbation whose assembly reproduces the given expansion.

    Inverts the (linear, underdetermined) assembly map by least squares
    over unit perturbations.  Raises if the expansion is not in the
    reachable span — e.g. hand-built coefficients ignoring the structural
    ties.
    """
    n = expansion.degree
    names = ("plus_f", "plus_g", "minus_f", "minus_g")
    columns = []
    keys = []
    for name in names:
        for i in range(n + 1):
            for j in range(n + 1 - i):
                unit = PerturbationSpec(n, **{name: {(i, j): 1.0}})
                columns.append(_expansion_vector(assemble(params, unit).expansion))
                keys.append((name, i, j))
    Phi = np.array(columns).T
    y = _expansion_vector(expansion)
    x, *_ = np.linalg.lstsq(Phi, y, rcond=rcond)
    resid = np.linalg.norm(Phi @ x - y)
    if resid > 1e-8 * max(1.0, np.linalg.norm(y)):
        raise ValueError(
            f"expansion is not reachable by a degree-{n} perturbation "
            f"(inversion residual {resid:.2e})"
        )
    tables = {name: {} for name in names}
    for (name, i, j), v in zip(keys, x):
        if v != 0.0:
            tables[name][(i, j)] = float(v)
    return PerturbationSpec(n, **tables)


# ---------------------------------------------------------------------------
# Direct-quadrature oracle
# ---------------------------------------------------------------------------


def _poly_eval(table: np.ndarray, x: float, y: float) -> float:
    return float(npoly.polyval2d(x, y, table))


def oracle_F(
    params: SystemParams,
    pert: PerturbationSpec,
    r: float,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """F(r) = r * f0(r) by adaptive quadrature of the polar numerators.

    f0(r) is the integral of [f cos + g sin] / (r cos t + a)^2 over the
    front half circle plus the same with (b, minus tables) over the back
    half circle, every factor evaluated pointwise; this path shares no
    code with the symbolic reduction.
    """
    if not (0 < r < params.r0):
        raise DomainError(f"oracle needs 0 < r < {params.r0}")

    def x_plus(t: float) -> float:
        ct, st = math.cos(t), math.sin(t)
        x, y = r * ct, r * st
        return (_poly_eval(pert.plus_f, x, y) * ct + _poly_eval(pert.plus_g, x, y) * st) / (
            r * ct + params.a
        ) ** 2

    def x_minus(t: float) -> float:
        ct, st = math.cos(t), math.sin(t)
        x, y = r * ct, r * st
        return (_poly_eval(pert.minus_f, x, y) * ct + _poly_eval(pert.minus_g, x, y) * st) / (
            r * ct + params.b
        ) ** 2

    return r * (quad_oracle(x_plus, HALF_CIRCLE, spec) + quad_oracle(x_minus, BACK_HALF_CIRCLE, spec))
