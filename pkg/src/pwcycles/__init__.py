"""Limit-cycle counting for a piecewise-smooth cubic center.

The package computes the first-order averaged function of the piecewise
planar system

    (x', y') = (-y (x+a)^2 + eps f(x,y),  x (x+a)^2 + eps g(x,y))   x >= 0
    (x', y') = (-y (x+b)^2 + eps f(x,y),  x (x+b)^2 + eps g(x,y))   x <  0

for polynomial perturbations, counts and places simple zeros of that
function on the period annulus (each simple zero spawns a limit cycle for
small eps), and verifies the prediction by direct Poincare return-map
integration of the perturbed system.
"""

from .kernels import (
    SystemParams,
    QuadratureSpec,
    FamilyIndex,
    DomainError,
    SingularityError,
    OracleConvergenceError,
    wallis_half,
    wallis_full,
    eval_A00,
    eval_B00,
    eval_I00_J00,
    eval_family,
    quad_oracle,
)
from .averaging import (
    PerturbationSpec,
    BasisExpansion,
    AveragedFunction,
    sigma_tau,
    st_coeffs,
    assemble,
    eval_F,
    oracle_F,
)
from .smooth import (
    SmoothPerturbationSpec,
    SmoothExpansion,
    eval_V_family,
    assemble_smooth,
    eval_smooth_F,
    oracle_smooth_F,
    place_smooth_zeros,
    count_smooth_zeros,
    smooth_generating_rank,
)
from .zeros import (
    ZeroReport,
    CountFormulaInput,
    hn_formula,
    reachable_zero_capacity,
    count_simple_zeros,
    place_zeros,
    independence_check,
    coefficient_surjectivity_check,
)
from .poincare import (
    PolarField,
    ReturnMapResult,
    FixedPoint,
    polar_rhs,
    return_map,
    displacement_profile,
    find_fixed_points,
    cartesian_crosscheck,
)

__version__ = "0.1.0"
