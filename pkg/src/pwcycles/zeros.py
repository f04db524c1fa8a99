"""Simple zeros of the averaged function: counting, placement, diagnostics.

Each simple zero of the averaged function on the period annulus spawns one
limit cycle of the perturbed system at small eps, so the package's central
questions — how many cycles, and where — reduce to zero analysis of a
finite-dimensional function space.

The space reachable by degree-n perturbations is spanned by

    odd n:   {r^k}_{k=1..2h-1},  A-shift, {r^(2i) A}_{i=1..h},
             B-shift, {r^(2i) B}_{i=1..h}                  (4h+1 functions)
    even n:  the same plus one *combined* generator per half,
             r^(2h+2) A - (2/a) r^(2h+1)  and
             r^(2h+2) B + (2/b) r^(2h+1)                   (4h+3 functions)

with h = floor((n+1)/2), A-shift = A[0,0] - pi/a^2 (the constant tie that
makes F(0) = 0), and the B block dropped when b = -a (then B = A
identically).  The even-degree combined generators encode an exact
rational tie between the top kernel coefficient and the top monomial
coefficient: the two are never independently reachable.  The tie is
proved exactly by the symbolic reduction and confirmed by quadrature-only
rank measurements; it lowers the reachable dimension for even n by one
relative to treating the top monomial as free.  High-precision collocation
surveys show the reachable span behaves as a Chebyshev system, so the
maximum number of simple zeros equals (reachable dimension - 1).

Placement follows the classical device: fix p targets, p <= dim - 1,
evaluate the generators there, and pick a null vector of the resulting
underdetermined system; the combination vanishes at every target.  The
interpolation is solved in double precision with longdouble iterative
refinement, and all zero *verification* evaluates in longdouble with a
running roundoff envelope, because high-degree placements are legitimately
ill-conditioned in the raw generator basis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .averaging import (
    AveragedFunction,
    BasisExpansion,
    PerturbationSpec,
    _exact_assemble,
    assemble,
)
from .kernels import SystemParams, a00

LONG = np.longdouble

# Multiple of the roundoff envelope below which a value is treated as
# numerically indistinguishable from zero.
_NOISE_FACTOR = 64.0

# Relative derivative threshold separating simple zeros from tangencies.
SIMPLE_ZERO_RTOL = 1e-8


class PlacementError(RuntimeError):
    """Requested zero configuration is not achievable."""


class RankDeficiencyError(PlacementError):
    """Interpolation matrix numerically singular (cond > 1e12)."""


class UnresolvedClusterError(RuntimeError):
    """Grid doubling failed to separate adjacent sign changes."""


@dataclass(frozen=True)
class CountFormulaInput:
    n: int
    resonant: bool

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("degree must be >= 1")


def hn_formula(inp: CountFormulaInput) -> int:
    """The claimed maximum cycle count for degree n.

    4*floor((n+1)/2) + (3/2)(1+(-1)^n) in general; 3*floor((n+1)/2) +
    (-1)^n when b = -a (the A and B families coincide and the count
    drops).
    """
    h = (inp.n + 1) // 2
    if inp.resonant:
        return 3 * h + (1 if inp.n % 2 == 0 else -1)
    return 4 * h + (3 if inp.n % 2 == 0 else 0)


def reachable_zero_capacity(n: int, resonant: bool) -> int:
    """Measured ceiling on simple zeros: reachable dimension minus one.

    Equals hn_formula for odd n.  For even n it is hn_formula - 1: the
    claimed count treats the top monomial coefficient as free, but the
    exact reduction ties it to the top kernel coefficient (see module
    docstring), which removes one dimension.
    """
    h = (n + 1) // 2
    if resonant:
        dim = 3 * h + (1 if n % 2 == 0 else 0)
    else:
        dim = 4 * h + (3 if n % 2 == 0 else 1)
    return dim - 1


# ---------------------------------------------------------------------------
# Generator sets
# ---------------------------------------------------------------------------


def _basis_element(degree: int, coeff_A=None, coeff_B=None, coeff_poly=None) -> BasisExpansion:
    e = BasisExpansion.zeros(degree)
    for arr, updates in ((e.coeff_A, coeff_A), (e.coeff_B, coeff_B), (e.coeff_poly, coeff_poly)):
        if updates:
            for idx, v in updates.items():
                arr[idx] = v
    return e


def reachable_generators(params: SystemParams, n: int) -> List[BasisExpansion]:
    """Basis of the span of assembled expansions for degree n."""
    a, b = params.a, params.b
    h = (n + 1) // 2
    gens: List[BasisExpansion] = []
    gens.append(_basis_element(n, coeff_A={0: 1.0}, coeff_poly={0: -math.pi / a**2}))
    for i in range(1, h + 1):
        gens.append(_basis_element(n, coeff_A={i: 1.0}))
    if n % 2 == 0:
        gens.append(_basis_element(n, coeff_A={h + 1: 1.0}, coeff_poly={2 * h + 1: -2.0 / a}))
    if not params.resonant:
        gens.append(_basis_element(n, coeff_B={0: 1.0}, coeff_poly={0: -math.pi / b**2}))
        for i in range(1, h + 1):
            gens.append(_basis_element(n, coeff_B={i: 1.0}))
        if n % 2 == 0:
            gens.append(_basis_element(n, coeff_B={h + 1: 1.0}, coeff_poly={2 * h + 1: 2.0 / b}))
    for k in range(1, 2 * h):
        gens.append(_basis_element(n, coeff_poly={k: 1.0}))
    return gens


def independence_generators(params: SystemParams, n: int) -> List[BasisExpansion]:
    """The candidate generating functions, every coefficient treated free.

    Monomials r^1..r^(2h+1), the shifted kernels, and r^(2i) A (resp. B)
    up to i = h+1.  These are linearly independent as functions even
    though for even n the top pair is not jointly reachable; resonance
    (b = -a) drops the B block since B = A identically.
    """
    a, b = params.a, params.b
    h = (n + 1) // 2
    gens: List[BasisExpansion] = []
    for k in range(1, 2 * h + 2):
        gens.append(_basis_element(n, coeff_poly={k: 1.0}))
    gens.append(_basis_element(n, coeff_A={0: 1.0}, coeff_poly={0: -math.pi / a**2}))
    for i in range(1, h + 2):
        gens.append(_basis_element(n, coeff_A={i: 1.0}))
    if not params.resonant:
        gens.append(_basis_element(n, coeff_B={0: 1.0}, coeff_poly={0: -math.pi / b**2}))
        for i in range(1, h + 2):
            gens.append(_basis_element(n, coeff_B={i: 1.0}))
    return gens


def _eval_stack(
    gens: Sequence[BasisExpansion], params: SystemParams, r: np.ndarray, dtype=LONG
) -> np.ndarray:
    """Matrix of generator values, shape (len(gens), len(r)).

    Shares the kernel evaluations across generators; dtype controls the
    combination precision (longdouble by default: the raw basis is badly
    scaled at high degree and cancellation in double precision can bury
    genuine zeros in noise).
    """
    rr = np.asarray(r, dtype=dtype)
    r2 = rr * rr
    A = a00(rr, params.a)
    B = a00(-rr, params.b)
    rows = []
    for g in gens:
        row = npoly.polyval(rr, g.coeff_poly.astype(dtype))
        row = row + npoly.polyval(r2, g.coeff_A.astype(dtype)) * A
        row = row + npoly.polyval(r2, g.coeff_B.astype(dtype)) * B
        rows.append(row)
    return np.array(rows)


def _expansion_values_precise(
    expansion: BasisExpansion, params: SystemParams, r: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Longdouble values plus a pointwise roundoff envelope.

    The envelope sums absolute contributions of every term (the kernels
    are positive, so absolute coefficients suffice) scaled by machine
    epsilon; values inside a small multiple of it are numerically zero.
    """
    rr = np.asarray(r, dtype=LONG)
    r2 = rr * rr
    A = a00(rr, params.a)
    B = a00(-rr, params.b)
    pa = expansion.coeff_A.astype(LONG)
    pb = expansion.coeff_B.astype(LONG)
    pp = expansion.coeff_poly.astype(LONG)
    vals = npoly.polyval(rr, pp) + npoly.polyval(r2, pa) * A + npoly.polyval(r2, pb) * B
    env = (
        npoly.polyval(np.abs(rr), np.abs(pp))
        + npoly.polyval(r2, np.abs(pa)) * A
        + npoly.polyval(r2, np.abs(pb)) * B
    ) * float(np.finfo(LONG).eps)
    return vals, env


# ---------------------------------------------------------------------------
# Zero counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroReport:
    zeros: Tuple[Tuple[float, float], ...]  # (location, derivative)
    interval: Tuple[float, float]
    grid_resolution: int
    degenerate: bool = False
    non_simple: Tuple[float, ...] = ()

    @property
    def locations(self) -> Tuple[float, ...]:
        return tuple(z for z, _ in self.zeros)

    @property
    def count(self) -> int:
        return len(self.zeros)


def _scan_brackets(
    expansion: BasisExpansion, params: SystemParams, r_max: float, grid: int
) -> Tuple[List[Tuple[float, float]], float, bool]:
    """Sign-change brackets among noise-significant grid samples."""
    rr = np.linspace(r_max / grid, r_max, grid)
    vals, env = _expansion_values_precise(expansion, params, rr)
    scale = float(np.max(np.abs(vals)))
    significant = np.abs(vals) > _NOISE_FACTOR * env
    if not np.any(significant):
        return [], scale, True
    rs = rr[significant]
    vs = vals[significant]
    sgn = np.sign(vs)
    flips = np.where(sgn[:-1] * sgn[1:] < 0)[0]
    return [(float(rs[i]), float(rs[i + 1])) for i in flips], scale, False


def _bisect_zero(expansion: BasisExpansion, params: SystemParams, lo: float, hi: float) -> float:
    flo = float(_expansion_values_precise(expansion, params, np.array([lo]))[0][0])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-12:
            return mid
        fm = float(_expansion_values_precise(expansion, params, np.array([mid]))[0][0])
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo = mid
            flo = fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _derivative(expansion: BasisExpansion, params: SystemParams, z: float, r_cap: float) -> float:
    h = 1e-6 * max(1.0, abs(z))
    lo, hi = z - h, z + h
    if hi >= r_cap:
        hi = z
    if lo <= 0:
        lo = z
    v = _expansion_values_precise(expansion, params, np.array([lo, hi]))[0]
    return float((v[1] - v[0]) / (hi - lo))


def count_simple_zeros(fn: AveragedFunction, r_max: float, grid: int = 400) -> ZeroReport:
    """Locate the simple zeros of F on (0, r_max) by sign-scan + bisection.

    The scan doubles the grid (up to four times) whenever two detected
    zeros sit closer than twice the grid spacing; zeros whose finite-
    difference derivative falls below the simple-zero threshold are
    flagged and a warning is emitted.
    """
    params = fn.params
    if not (0 < r_max < params.r0):
        raise ValueError(f"need 0 < r_max < r0 = {params.r0}")
    if grid < 8:
        raise ValueError("grid too coarse")

    expansion = fn.expansion
    doublings = 0
    while True:
        brackets, scale, degenerate = _scan_brackets(expansion, params, r_max, grid)
        if degenerate:
            return ZeroReport((), (0.0, r_max), grid, degenerate=True)
        zeros = [_bisect_zero(expansion, params, lo, hi) for lo, hi in brackets]
        spacing = r_max / grid
        clustered = any(z2 - z1 < 2 * spacing for z1, z2 in zip(zeros, zeros[1:]))
        if not clustered:
            break
        if doublings >= 4:
            raise UnresolvedClusterError(
                f"zeros closer than twice the grid spacing after {doublings} doublings"
            )
        grid *= 2
        doublings += 1

    pairs = []
    flagged = []
    threshold = SIMPLE_ZERO_RTOL * (1.0 + scale)
    for z in zeros:
        d = _derivative(expansion, params, z, params.r0)
        if abs(d) < threshold:
            flagged.append(z)
            warnings.warn(f"zero at r={z:.6g} has near-vanishing derivative {d:.3g}")
        pairs.append((z, d))
    return ZeroReport(tuple(pairs), (0.0, r_max), grid, non_simple=tuple(flagged))


# ---------------------------------------------------------------------------
# Placement
# ---------------------------------------------------------------------------


def _jacobi_right_vectors(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Right singular vectors of M by one-sided Jacobi, all in longdouble.

    LAPACK has no extended-precision path, and double-precision null
    vectors of the badly conditioned collocation matrices stall far above
    the longdouble floor.  The matrices here are tiny (at most ~20
    columns), so Jacobi sweeps are essentially free and give residuals at
    the longdouble roundoff level even at condition 1e15.

    Returns (V, sv) with V's columns ordered by decreasing singular value.
    """
    A = np.array(M, dtype=LONG)
    _, m = A.shape
    V = np.eye(m, dtype=LONG)
    eps = float(np.finfo(LONG).eps)
    for _ in range(60):
        off = 0.0
        for i in range(m - 1):
            for j in range(i + 1, m):
                aii = np.dot(A[:, i], A[:, i])
                ajj = np.dot(A[:, j], A[:, j])
                aij = np.dot(A[:, i], A[:, j])
                denom = math.sqrt(float(aii) * float(ajj)) or 1e-300
                if aij == 0 or abs(float(aij)) <= 1e2 * eps * denom:
                    continue
                off = max(off, abs(float(aij)) / denom)
                tau = (ajj - aii) / (2 * aij)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                Ai, Aj = A[:, i].copy(), A[:, j].copy()
                A[:, i], A[:, j] = c * Ai - s * Aj, s * Ai + c * Aj
                Vi, Vj = V[:, i].copy(), V[:, j].copy()
                V[:, i], V[:, j] = c * Vi - s * Vj, s * Vi + c * Vj
        if off < 1e2 * eps:
            break
    sv = np.sqrt(np.sum(A * A, axis=0))
    order = np.argsort(sv)[::-1]
    return V[:, order], sv[order]


def _orthonormal_transform(stack_window: np.ndarray) -> np.ndarray:
    """Column transform turning the raw generators into an orthonormal set.

    SVD of the window-sampled generator matrix gives combinations that are
    orthonormal in the discrete window measure; interpolating in that
    basis makes the collocation condition number reflect the target
    geometry instead of the (badly scaled) raw basis.
    """
    W = stack_window.T.astype(float)  # samples x generators
    _, S, Vt = np.linalg.svd(W, full_matrices=False)
    S = np.maximum(S, S[0] * 1e-300)
    return (Vt.T / S).astype(float)  # generators x orthonormal directions


def _count_grid_zeros(vals: np.ndarray, env: np.ndarray) -> int:
    sig = np.abs(vals) > _NOISE_FACTOR * env
    v = vals[sig]
    s = np.sign(v)
    return int(np.sum(s[:-1] * s[1:] < 0))


def place_zeros(
    params: SystemParams,
    n: int,
    targets: Sequence[float],
    seed: int = 0,
    scan_r_max: Optional[float] = None,
) -> BasisExpansion:
    """Construct an expansion whose zero set includes the given targets.

    With p targets and m reachable generators, p <= m - 1 leaves a null
    space; among a sampled basis of it (seeded, deterministic) the
    combination is chosen to avoid spurious extra zeros on the scan window
    first and to maximize the minimum |F'| over the targets second.

    p == m requests saturation of the span's capacity plus one.  The
    collocation system is then square and homogeneous, so a solution needs
    a singular matrix; the last target is treated as an initial guess and
    a singular configuration is searched along it.  High-precision
    surveys show the collocation determinant keeps one sign (the span is
    numerically a Chebyshev system), so this path is expected to fail
    with a diagnostic — it exists to probe the claimed-count question
    honestly.
    """
    targets = [float(t) for t in targets]
    if sorted(set(targets)) != targets:
        raise ValueError("targets must be strictly increasing and distinct")
    if targets and not (0 < targets[0] and targets[-1] < params.r0):
        raise ValueError(f"targets must lie in (0, {params.r0})")

    gens = reachable_generators(params, n)
    m = len(gens)
    p = len(targets)
    if p > m:
        raise PlacementError(
            f"{p} targets exceed the reachable span's capacity ({m} generators)"
        )
    if p == 0:
        return gens[0]

    r_hi = scan_r_max if scan_r_max is not None else min(params.r0 * 0.999, 2.0 * targets[-1])
    scan = np.linspace(r_hi / 2048, r_hi, 2048)
    Gs = _eval_stack(gens, params, scan)
    colscale = np.max(np.abs(Gs), axis=1)  # per-generator window scale

    tstack = _eval_stack(gens, params, np.asarray(targets))
    M_long = (tstack / colscale[:, None]).T  # p x m, diagonally equilibrated

    if p == m:
        return _saturated_placement(params, gens, colscale, targets, scan, Gs)

    # Condition diagnostic in an orthonormalized basis: it reflects the
    # geometry of the targets, not the raw basis skew.
    T = _orthonormal_transform(Gs)
    sv_geo = np.linalg.svd(tstack.T.astype(float) @ T, compute_uv=False)
    if sv_geo[0] / sv_geo[p - 1] > 1e12:
        raise RankDeficiencyError(
            f"interpolation matrix condition {sv_geo[0] / sv_geo[p - 1]:.2e} exceeds 1e12; "
            "targets too close together or too near the annulus boundary"
        )

    V, _ = _jacobi_right_vectors(M_long)
    null_basis = V[:, p:].T  # (m - p) exact-null directions, longdouble
    rng = np.random.default_rng(seed)
    candidates = [null_basis[i] for i in range(m - p)]
    for _ in range(4 * (m - p)):
        w = rng.standard_normal(m - p).astype(LONG)
        c = w @ null_basis
        candidates.append(c / np.sqrt(np.sum(c * c)))

    fd = 1e-6 * np.maximum(1.0, np.asarray(targets))
    tlo = _eval_stack(gens, params, np.asarray(targets) - fd)
    thi = _eval_stack(gens, params, np.asarray(targets) + fd)

    best = None
    for c in candidates:
        dg = c / colscale.astype(LONG)  # back to raw generator coordinates
        vals = dg @ Gs
        env = np.abs(dg) @ np.abs(Gs) * float(np.finfo(LONG).eps)
        extra = max(0, _count_grid_zeros(vals, env) - p)
        deriv = np.abs((dg @ thi - dg @ tlo) / (2 * fd))
        scale_f = float(np.max(np.abs(vals)))
        score = (extra, -float(np.min(deriv)) / scale_f)
        if best is None or score < best[0]:
            best = (score, dg / scale_f)
    dg = best[1]
    return _combine(gens, dg)


def _combine(gens: Sequence[BasisExpansion], coeffs: np.ndarray) -> BasisExpansion:
    """Linear combination kept in longdouble.

    High-degree placements carry delicately cancelling coefficients whose
    rounding to double would visibly shift the outer zeros.
    """
    n = gens[0].degree
    cA = np.zeros(gens[0].coeff_A.shape, dtype=LONG)
    cB = np.zeros(gens[0].coeff_B.shape, dtype=LONG)
    cP = np.zeros(gens[0].coeff_poly.shape, dtype=LONG)
    for coef, g in zip(np.asarray(coeffs, dtype=LONG), gens):
        cA += coef * g.coeff_A.astype(LONG)
        cB += coef * g.coeff_B.astype(LONG)
        cP += coef * g.coeff_poly.astype(LONG)
    return BasisExpansion(n, cA, cB, cP)


def _saturated_placement(
    params: SystemParams,
    gens: List[BasisExpansion],
    colscale: np.ndarray,
    targets: List[float],
    scan: np.ndarray,
    Gs: np.ndarray,
) -> BasisExpansion:
    """Square homogeneous placement: needs a singular collocation matrix."""
    m = len(gens)
    n = gens[0].degree
    fixed = np.asarray(targets[:-1])
    rows_fixed = (_eval_stack(gens, params, fixed) / colscale[:, None]).T

    lo = targets[-2] * 1.02
    zs = np.linspace(lo, max(float(scan[-1]), targets[-1] * 1.5), 600)
    sigmins = []
    for z in zs:
        row = (_eval_stack(gens, params, np.array([z])) / colscale[:, None]).T
        M = np.vstack([rows_fixed, row]).astype(float)
        sigmins.append(np.linalg.svd(M, compute_uv=False)[-1])
    sigmins = np.asarray(sigmins)
    k = int(np.argmin(sigmins))
    if sigmins[k] > 1e-13:
        raise PlacementError(
            f"no singular collocation found for {m} zeros: the reachable span for "
            f"degree {n} has capacity {m - 1} simple zeros "
            f"(min singular value along the last-target scan: {sigmins[k]:.2e})"
        )
    row = (_eval_stack(gens, params, np.array([zs[k]])) / colscale[:, None]).T
    M_long = np.vstack([rows_fixed, row])
    V, _ = _jacobi_right_vectors(M_long)
    dg = V[:, -1] / colscale.astype(LONG)
    vals = dg @ Gs
    return _combine(gens, dg / float(np.max(np.abs(vals))))


# ---------------------------------------------------------------------------
# Rank diagnostics
# ---------------------------------------------------------------------------


def sample_rank(matrix: np.ndarray, threshold: float = 1e-10) -> Tuple[int, float]:
    """Numerical rank of a column-normalized sample matrix."""
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0] = 1.0
    sv = np.linalg.svd(matrix / norms, compute_uv=False)
    rank = int(np.sum(sv > threshold))
    return rank, float(sv[-1])


def chebyshev_points(lo: float, hi: float, count: int) -> np.ndarray:
    k = np.arange(count)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * count))


def independence_check(params: SystemParams, n: int, r_max: float) -> Tuple[int, float]:
    """Numerical linear independence of the candidate generating set.

    Samples every generator at 4x(set size) Chebyshev points in
    (r_max/100, r_max); full rank (min singular value above 1e-10 after
    column normalization) confirms independence at working precision.
    """
    if not (0 < r_max < params.r0):
        raise ValueError("need 0 < r_max < r0")
    gens = independence_generators(params, n)
    pts = chebyshev_points(r_max / 100.0, r_max, 4 * len(gens))
    M = _eval_stack(gens, params, pts).T.astype(float)
    return sample_rank(M)


def claimed_coefficient_indices(n: int) -> List[Tuple[str, int]]:
    """The coefficient coordinates claimed jointly arbitrary per half.

    Odd n: kernel indices 0..h and monomial indices 1..2h-1.  Even n
    additionally claims kernel index h+1 and monomial index 2h+1 — the
    pair the exact reduction shows to be tied, so the even-degree claim
    overcounts by one per half.
    """
    h = (n + 1) // 2
    out: List[Tuple[str, int]] = [("kernel", i) for i in range(h + 1)]
    out += [("poly", k) for k in range(1, 2 * h)]
    if n % 2 == 0:
        out.append(("kernel", h + 1))
        out.append(("poly", 2 * h + 1))
    return out


def coefficient_surjectivity_check(params: SystemParams, n: int) -> Tuple[int, int]:
    """Rank of the map from perturbation coefficients to claimed coordinates.

    Builds the linear map column by column from unit perturbations (exact
    reduction, pre-merge coefficients) restricted to the claimed-arbitrary
    coordinate list for both halves; returns (numerical rank, claimed
    count).  rank == claimed certifies the joint-arbitrariness claim;
    a deficiency measures how far the claim overcounts.
    """
    claimed = claimed_coefficient_indices(n)
    cols: List[List[float]] = []
    tables = ("plus_f", "plus_g", "minus_f", "minus_g")
    for name in tables:
        for i in range(n + 1):
            for j in range(n + 1 - i):
                pert = PerturbationSpec(n, **{name: {(i, j): 1.0}})
                coef_A, poly_plus, coef_B, poly_minus = _exact_assemble(params, pert)
                vec: List[float] = []
                for kind, idx in claimed:
                    if kind == "kernel":
                        vec.append(float(coef_A[idx]))
                    else:
                        vec.append(float(poly_plus[idx]))
                for kind, idx in claimed:
                    if kind == "kernel":
                        vec.append(float(coef_B[idx]))
                    else:
                        vec.append(float(poly_minus[idx]))
                cols.append(vec)
    M = np.array(cols).T  # coordinates x perturbation directions
    expected = 2 * len(claimed)
    row_scale = np.max(np.abs(M), axis=1)
    row_scale[row_scale == 0] = 1.0
    rank, _ = sample_rank((M / row_scale[:, None]).T)
    return rank, expected


# ---------------------------------------------------------------------------
# Randomized ceiling survey
# ---------------------------------------------------------------------------


def random_search_max_zeros(
    params: SystemParams,
    n: int,
    draws: int,
    seed: int,
    r_max: float,
    grid: int = 600,
) -> Tuple[int, Dict[int, int]]:
    """Max simple-zero count over random perturbations (survey mode).

    Counts envelope-significant sign changes on a fixed fine grid; used to
    stress the claimed ceiling, not to certify individual zero lists.
    """
    rng = np.random.default_rng(seed)
    rr = np.linspace(r_max / grid, r_max, grid)
    hist: Dict[int, int] = {}
    best = 0
    for _ in range(draws):
        pert = PerturbationSpec.random(n, rng)
        fn = assemble(params, pert)
        vals, env = _expansion_values_precise(fn.expansion, params, rr)
        c = _count_grid_zeros(vals, env)
        hist[c] = hist.get(c, 0) + 1
        best = max(best, c)
    return best, hist
