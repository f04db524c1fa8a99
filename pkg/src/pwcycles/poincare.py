"""Return-map integration of the perturbed piecewise system.

In polar coordinates the perturbed system becomes the scalar equation

    dr/dtheta = eps * (f c + g s) / (h + (eps/r)(g c - f s)),

with c = cos(theta), s = sin(theta), h = (r c + const)^2, and the (f, g,
const) triple switching between the two half-planes at cos(theta) = 0.
The right-hand side above is algebraically identical to the two-term form
eps*X + eps^2*Y used for averaging, but evaluates without the explicit
split.  Because the switching manifold is fixed in the independent
variable (theta = pi/2, 3pi/2), integrating leg by leg handles the
discontinuity exactly — no event detection is needed in polar form.

The Poincare section is {y = 0, x > 0} (theta = 0).  A first-order
expansion of the return map gives P(r) - r = eps * f0(r) + O(eps^2), so
scaled displacements converge to the averaged function and fixed points
converge to its simple zeros — the correspondence the package verifies.

A Cartesian integration path with event location at the switching line
x = 0 cross-checks the polar pipeline; at eps = 0 it must conserve
x^2 + y^2 to integrator precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .averaging import PerturbationSpec
from .kernels import SystemParams

_H_FLOOR = 1e-10  # squared-denominator guard
_INTEGRATOR_TOL = 1e-12
_SECTION_MARGIN_FACTOR = 1e-3


class NearSingularityError(RuntimeError):
    """Denominator of the polar equation too close to zero."""


class EpsilonValidityError(ValueError):
    """dtheta/dt loses its sign somewhere on the sampled annulus."""


class BlowUpError(RuntimeError):
    """Trajectory left the period annulus mid-integration."""


class SlidingDetectedError(RuntimeError):
    """Transversality at the switching line failed (grazing contact)."""


@dataclass(frozen=True)
class PolarField:
    """The perturbed system in polar form, with a validity check at build.

    `r_range` is the radial window the field is intended for; at
    construction dtheta/dt is sampled on a grid over it and must keep one
    sign, since the polar reduction divides by it.
    """

    params: SystemParams
    pert: PerturbationSpec
    epsilon: float
    r_range: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.r_range == (0.0, 0.0):
            hi = self.params.r0
            if not math.isfinite(hi):
                hi = 10.0 * max(abs(self.params.a), abs(self.params.b))
            object.__setattr__(self, "r_range", (0.01 * hi, 0.95 * hi))
        lo, hi = self.r_range
        if not (0 < lo < hi):
            raise ValueError("invalid r_range")
        if hi >= self.params.r0:
            raise ValueError(f"r_range must stay inside the annulus (r0 = {self.params.r0})")
        self._validate_theta_speed()

    def _validate_theta_speed(self) -> None:
        thetas = np.linspace(0.0, 2 * math.pi, 181)
        radii = np.linspace(self.r_range[0], self.r_range[1], 33)
        for r in radii:
            for t in thetas:
                c, s = math.cos(t), math.sin(t)
                const = self.params.a if c >= 0 else self.params.b
                f_t, g_t = self._tables(c)
                x, y = r * c, r * s
                h = (r * c + const) ** 2
                fv = float(npoly.polyval2d(x, y, f_t))
                gv = float(npoly.polyval2d(x, y, g_t))
                speed = h + (self.epsilon / r) * (gv * c - fv * s)
                if speed <= 0:
                    raise EpsilonValidityError(
                        f"dtheta/dt = {speed:.3g} at (r={r:.3g}, theta={t:.3g}); "
                        "epsilon too large for this annulus"
                    )

    def _tables(self, cos_t: float):
        if cos_t >= 0:
            return self.pert.plus_f, self.pert.plus_g
        return self.pert.minus_f, self.pert.minus_g


@dataclass(frozen=True)
class FixedPoint:
    location: float
    stability: str  # attracting | repelling | neutral
    displacement_slope: float


@dataclass(frozen=True)
class ReturnMapResult:
    samples: Tuple[Tuple[float, float], ...]  # (r_in, r_out)
    fixed_points: Tuple[FixedPoint, ...]
    epsilon: float


def _rhs_side(field: PolarField, theta: float, r: float, plus: bool) -> float:
    c, s = math.cos(theta), math.sin(theta)
    const = field.params.a if plus else field.params.b
    f_t = field.pert.plus_f if plus else field.pert.minus_f
    g_t = field.pert.plus_g if plus else field.pert.minus_g
    x, y = r * c, r * s
    h = (r * c + const) ** 2
    if h < _H_FLOOR:
        raise NearSingularityError(f"(r cos t + {const})^2 = {h:.2e} below guard")
    fv = float(npoly.polyval2d(x, y, f_t))
    gv = float(npoly.polyval2d(x, y, g_t))
    num = fv * c + gv * s
    den = h + (field.epsilon / r) * (gv * c - fv * s)
    return field.epsilon * num / den


def polar_rhs(field: PolarField, theta: float, r: float) -> float:
    """dr/dtheta, selecting the half-plane by the sign of cos(theta).

    At cos(theta) = 0 the plus side is returned (the limit from the leg
    the integrator is entering; the legs split exactly there, so the
    choice never influences an integration).
    """
    return _rhs_side(field, theta, r, plus=math.cos(theta) >= 0)


def polar_XY(field: PolarField, theta: float, r: float, plus: bool) -> Tuple[float, float]:
    """The averaging decomposition (X, Y) with dr/dtheta = eps X + eps^2 Y."""
    c, s = math.cos(theta), math.sin(theta)
    const = field.params.a if plus else field.params.b
    f_t = field.pert.plus_f if plus else field.pert.minus_f
    g_t = field.pert.plus_g if plus else field.pert.minus_g
    x, y = r * c, r * s
    h = (r * c + const) ** 2
    fv = float(npoly.polyval2d(x, y, f_t))
    gv = float(npoly.polyval2d(x, y, g_t))
    X = (fv * c + gv * s) / h
    w = gv * c - fv * s
    Y = -(fv * c + gv * s) * w / (h * (r * h + field.epsilon * w))
    return X, Y


_LEGS = ((0.0, math.pi / 2, True), (math.pi / 2, 3 * math.pi / 2, False), (3 * math.pi / 2, 2 * math.pi, True))


def return_map(field: PolarField, r_start: float) -> float:
    """One full turn of the section map starting at theta = 0.

    Integrates the three legs (plus, minus, plus) with a high-order
    adaptive pair at tolerance 1e-12; switching happens exactly at the
    leg boundaries.
    """
    lo, hi = field.r_range
    margin = _SECTION_MARGIN_FACTOR * hi
    if not (lo - margin <= r_start <= hi + margin):
        raise ValueError(f"r_start {r_start} outside the field's validated range {field.r_range}")
    r = float(r_start)
    for t0, t1, plus in _LEGS:
        sol = solve_ivp(
            lambda t, y: [_rhs_side(field, t, float(y[0]), plus)],
            (t0, t1),
            [r],
            method="DOP853",
            rtol=_INTEGRATOR_TOL,
            atol=_INTEGRATOR_TOL,
        )
        if not sol.success:
            raise BlowUpError(f"integration failed on leg ({t0:.3g},{t1:.3g}): {sol.message}")
        r = float(sol.y[0, -1])
        if not (0 < r < field.params.r0):
            raise BlowUpError(f"trajectory left the annulus: r = {r}")
    return r


def displacement_profile(
    field: PolarField, r_grid: Sequence[float]
) -> List[Tuple[float, float]]:
    """Scaled displacements (P(r) - r)/eps; converge to f0 as eps -> 0."""
    if field.epsilon <= 0:
        raise ValueError("displacement scaling requires epsilon > 0")
    out = []
    for r in r_grid:
        out.append((float(r), (return_map(field, float(r)) - float(r)) / field.epsilon))
    return out


def find_fixed_points(
    field: PolarField,
    r_lo: float,
    r_hi: float,
    grid: int = 80,
) -> ReturnMapResult:
    """Locate fixed points of the return map by displacement sign scan.

    Stability follows the sign of the displacement slope: negative means
    the forward (theta-increasing) flow contracts onto the cycle.
    """
    rr = np.linspace(r_lo, r_hi, grid)
    disp = np.array([return_map(field, float(r)) - float(r) for r in rr])
    samples = tuple((float(r), float(r + d)) for r, d in zip(rr, disp))

    fixed: List[FixedPoint] = []
    sgn = np.sign(disp)
    for k in np.where(sgn[:-1] * sgn[1:] < 0)[0]:
        z = brentq(
            lambda r: return_map(field, float(r)) - float(r),
            float(rr[k]),
            float(rr[k + 1]),
            xtol=1e-11,
        )
        h = max(1e-4, (r_hi - r_lo) / (8 * grid))
        d_plus = return_map(field, z + h) - (z + h)
        d_minus = return_map(field, z - h) - (z - h)
        slope = (d_plus - d_minus) / (2 * h)
        # Classify by sign whenever the slope clears the finite-difference
        # noise floor of two integrator-tolerance evaluations.
        thr = 100.0 * _INTEGRATOR_TOL / h
        if slope < -thr:
            kind = "attracting"
        elif slope > thr:
            kind = "repelling"
        else:
            kind = "neutral"
        fixed.append(FixedPoint(float(z), kind, float(slope)))
    return ReturnMapResult(samples, tuple(fixed), field.epsilon)


# ---------------------------------------------------------------------------
# Cartesian cross-check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CartesianSummary:
    section_radii: Tuple[float, ...]
    max_invariant_drift: float
    total_time: float


def _cartesian_rhs(field: PolarField, plus: bool):
    const = field.params.a if plus else field.params.b
    f_t = field.pert.plus_f if plus else field.pert.minus_f
    g_t = field.pert.plus_g if plus else field.pert.minus_g
    eps = field.epsilon

    def rhs(t, xy):
        x, y = xy
        w = (x + const) ** 2
        return [
            -y * w + eps * float(npoly.polyval2d(x, y, f_t)),
            x * w + eps * float(npoly.polyval2d(x, y, g_t)),
        ]

    return rhs, const, f_t


def _leg_time_bound(field: PolarField, r: float) -> float:
    thetas = np.linspace(0, 2 * math.pi, 128)
    consts = np.where(np.cos(thetas) >= 0, field.params.a, field.params.b)
    h = (r * np.cos(thetas) + consts) ** 2
    return 40.0 * math.pi / float(np.min(h))


def cartesian_crosscheck(
    field: PolarField, start: Tuple[float, float], n_crossings: int = 1
) -> CartesianSummary:
    """Integrate the Cartesian piecewise field through section crossings.

    Events locate the switching line x = 0 (crossing transversality is
    checked; grazing raises SlidingDetectedError) and the Poincare
    section {y = 0, x > 0}.  The resulting section radii must agree with
    the polar return map at matched starts.
    """
    x0, y0 = float(start[0]), float(start[1])
    if x0 == 0.0:
        raise ValueError("start must be off the switching line x = 0")
    if y0 == 0.0 and x0 < 0:
        raise ValueError("the section is {y = 0, x > 0}; start with x > 0")
    if x0 < 0:
        raise ValueError("cross-check starts in the plus half-plane (x > 0)")
    r_start = math.hypot(x0, y0)
    lo, hi = field.r_range
    if not (lo * 0.5 <= r_start <= hi):
        raise ValueError(f"start radius {r_start:.3g} outside the validated range")

    state = np.array([x0, y0])
    t_now = 0.0
    radii: List[float] = []
    drift = 0.0
    r2_ref = x0 * x0 + y0 * y0
    t_bound = _leg_time_bound(field, r_start)

    def switching(t, xy):
        return xy[0]

    def section(t, xy):
        return xy[1]

    section.direction = 1.0

    for _ in range(n_crossings):
        # leg 1: plus half-plane until x = 0 falling
        for plus, event, direction in ((True, switching, -1.0), (False, switching, 1.0), (True, section, 1.0)):
            event.direction = direction
            event.terminal = True
            rhs, const, _ = _cartesian_rhs(field, plus)
            sol = solve_ivp(
                rhs,
                (t_now, t_now + t_bound),
                state,
                method="DOP853",
                rtol=_INTEGRATOR_TOL,
                atol=_INTEGRATOR_TOL,
                events=event,
                dense_output=False,
            )
            if not sol.success or sol.status != 1:
                raise BlowUpError(
                    f"no {'section' if event is section else 'switching'} event within "
                    f"time bound {t_bound:.3g}: {sol.message}"
                )
            t_now = float(sol.t_events[0][0])
            state = sol.y_events[0][0].copy()
            if field.epsilon == 0.0:
                r2 = state[0] ** 2 + state[1] ** 2
                drift = max(drift, abs(r2 - r2_ref) / r2_ref)
            if event is switching:
                xdot = -state[1] * (state[0] + const) ** 2 + field.epsilon * float(
                    npoly.polyval2d(state[0], state[1], field.pert.plus_f if plus else field.pert.minus_f)
                )
                if abs(xdot) < 1e-9 * max(1.0, abs(state[1])):
                    raise SlidingDetectedError(
                        f"grazing contact at switching line: x' = {xdot:.2e} at y = {state[1]:.3g}"
                    )
        radii.append(float(math.hypot(state[0], state[1])))
    return CartesianSummary(tuple(radii), float(drift), t_now)
