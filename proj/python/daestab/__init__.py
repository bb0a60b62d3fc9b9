"""DAE transient stability toolkit.

Staged differential-algebraic simulation, critical clearing times by
bisection, instability-mechanism classification, and closed-form CCT
sensitivities validated against finite-difference oracles.
"""

from ._core import (
    CctOptions,
    CctResult,
    CriticalElement,
    DaestabError,
    IntegratorConfig,
    Mechanism,
    ParamSet,
    Point,
    ScenarioModel,
    SensitivityValue,
    StageModel,
    build_system,
    cct_sensitivity,
    classify_equilibrium,
    classify_pseudo_ep,
    compute_cct,
    default_bracket,
    equilibrium_location_sensitivity,
    eval_delta,
    eval_kappa,
    eval_semi_singular_indicator,
    fd_oracle,
    find_equilibrium,
    find_pseudo_ep,
    find_semi_singular,
    judge_stability,
    reduced_jacobian,
    simulate,
    solve_algebraic,
    system_ids,
)

__all__ = [
    "CctOptions",
    "CctResult",
    "CriticalElement",
    "DaestabError",
    "IntegratorConfig",
    "Mechanism",
    "ParamSet",
    "Point",
    "ScenarioModel",
    "SensitivityValue",
    "StageModel",
    "build_system",
    "cct_sensitivity",
    "classify_equilibrium",
    "classify_pseudo_ep",
    "compute_cct",
    "default_bracket",
    "equilibrium_location_sensitivity",
    "eval_delta",
    "eval_kappa",
    "eval_semi_singular_indicator",
    "fd_oracle",
    "find_equilibrium",
    "find_pseudo_ep",
    "find_semi_singular",
    "judge_stability",
    "reduced_jacobian",
    "simulate",
    "solve_algebraic",
    "system_ids",
]
