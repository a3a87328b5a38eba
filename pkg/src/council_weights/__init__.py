"""Optimal council weights for groups of voters under mean-field interactions.

The weak regime has closed-form and dense-solve weights; the strong regime
works from the global minima of the free energy; ``sim`` provides exact
enumeration and Gibbs sampling for finite populations.
"""

from .errors import (ConstraintViolation, ConvergenceError, CouncilWeightsError, GuardExceeded,
                     RegimeError, SingularSystemError, UnresolvedMinimaError, ValidationError)
from .model import (CouplingMatrix, GroupSizes, ModelSpec, RegimeClass, build_coupling,
                    classify_regime, load_model, model_from_dict, validate_model)
from .linalg import definiteness, jacobi_eigenvalues, solve_dense
from .weak import check_feasibility, closed_form_weights, council_correlation, solve_weak_weights
from .strong import (f_gradient, f_value, minimize_f, mixed_cluster_weights, solve_curie_weiss,
                     strong_weight_solution)
from .sim import (ChainConfig, democracy_deficit, estimate_moments, exact_margin_distribution,
                  exact_moments, gibbs_sample, verify_optimality)

__version__ = "0.1.0"

__all__ = [
    "ChainConfig", "ConstraintViolation", "ConvergenceError", "CouncilWeightsError", "CouplingMatrix",
    "GroupSizes", "GuardExceeded", "ModelSpec", "RegimeClass", "RegimeError", "SingularSystemError",
    "UnresolvedMinimaError", "ValidationError", "build_coupling", "check_feasibility",
    "classify_regime", "closed_form_weights", "council_correlation", "definiteness",
    "democracy_deficit", "estimate_moments", "exact_margin_distribution", "exact_moments",
    "f_gradient", "f_value", "gibbs_sample", "jacobi_eigenvalues", "load_model", "minimize_f",
    "mixed_cluster_weights", "model_from_dict", "solve_curie_weiss", "solve_dense",
    "solve_weak_weights", "strong_weight_solution", "validate_model", "verify_optimality",
]
