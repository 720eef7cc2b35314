"""Numerical q-spectrum of the Dirichlet Laplacian.

Solvers and checks for nontrivial solutions of

    -Δu = λ ‖u‖_{L^q}^{2-q} |u|^{q-2} u   in Ω,    u = 0 on ∂Ω.
"""

from qspec.core import (
    QSpecError,
    InvalidInput,
    RegimeError,
    InadmissibleError,
    ConvergenceError,
    ProblemParams,
    Interval,
    Ball,
    Rectangle,
    RasterMask,
    DisjointUnion,
    QEigenpair,
    critical_exponent,
    scaling_exponent,
    scale_eigenvalue,
    check_ball_union_admissible,
    free_functional_correspondence,
    domain_from_json,
    domain_to_json,
)

__version__ = "0.1.0"

__all__ = [
    "QSpecError",
    "InvalidInput",
    "RegimeError",
    "InadmissibleError",
    "ConvergenceError",
    "ProblemParams",
    "Interval",
    "Ball",
    "Rectangle",
    "RasterMask",
    "DisjointUnion",
    "QEigenpair",
    "critical_exponent",
    "scaling_exponent",
    "scale_eigenvalue",
    "check_ball_union_admissible",
    "free_functional_correspondence",
    "domain_from_json",
    "domain_to_json",
]
