"""Quasi-optimal interior penalty finite element methods.

DG (SIP/NIP) for Poisson, penalized Crouzeix-Raviart for linear elasticity,
and the quadratic C0 interior penalty method for the biharmonic problem, with
right-hand sides discretized through computable smoothing operators.
"""

from ._qoip import (
    Mesh,
    build_structured_unit_square,
    compare_variants,
    convergence_study,
    estimate_eta_star,
    integrate_barycentric_monomial,
    lagrange_eval,
    load_mesh,
    manufactured_names,
    quadrature_rule,
    refine_uniform,
    run_single,
    save_mesh,
    smoother_check,
)

__all__ = [
    "Mesh",
    "build_structured_unit_square",
    "compare_variants",
    "convergence_study",
    "estimate_eta_star",
    "integrate_barycentric_monomial",
    "lagrange_eval",
    "load_mesh",
    "manufactured_names",
    "quadrature_rule",
    "refine_uniform",
    "run_single",
    "save_mesh",
    "smoother_check",
]
