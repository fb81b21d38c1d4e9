"""Fractional calculus on time grids.

Fractional integrals and derivatives of grid functions, fractional Sobolev
norms, and solvers for fractional initial value problems, all built on
product-integration weights that integrate the weakly singular kernel
exactly against the data's reconstruction.
"""

from __future__ import annotations

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import (
    AsymmetricMeshError,
    ConventionError,
    DomainError,
    ExponentGateError,
    FracalcError,
    HypothesisError,
    IntegerOrderError,
    MeshMismatchError,
    NonConvergenceError,
    OracleMissingError,
    PairingUndefinedError,
    PrecisionLossError,
    SchemaError,
    SingularDiagonalError,
)
from .frac_ops import (
    ConvolutionWeights,
    MembershipReport,
    caputo,
    convolution_weights,
    derivative,
    frac_integral_left,
    frac_integral_right,
    invert_frac_integral,
    membership_diagnostic,
    reflect,
    riemann_liouville,
)
from .grid import CELL, LINEAR, GridFn, Mesh, default_grading, lp_norm, refine
from .ivp import (
    Coefficient,
    Forcing,
    IvpProblem,
    MultitermEntry,
    PowerSum,
    SolveReport,
    exponent_gate,
    solve,
    solve_distributional,
    solve_multiterm,
    solve_single,
    solve_singular_coeff,
)
from .order import FracOrder
from .spaces import (
    EmbeddingScanReport,
    SlobodeckiParams,
    embedding_scan,
    slobodecki_norm,
    slobodecki_seminorm,
    wap_norm,
)
from .special import gamma, mittag_leffler, power_rule
from .verify import convergence_study, identity_suite, s1_s2_decomposition

__all__ = [name for name in dir() if not name.startswith("_")]
