"""Fixed-lambda solvers."""
from .admm import soft_threshold, solve_mixed_tf, solve_sparse_tf
from .lasso_cd import LassoResult, lasso_cd, solve_lasso_cd
from .pdip import dual_from_residual, lambda_max, solve_tf_path, solve_tf_pdip
from .taut_string import solve_tf_tautstring

__all__ = [
    "LassoResult",
    "dual_from_residual",
    "lambda_max",
    "lasso_cd",
    "soft_threshold",
    "solve_lasso_cd",
    "solve_mixed_tf",
    "solve_sparse_tf",
    "solve_tf_path",
    "solve_tf_pdip",
    "solve_tf_tautstring",
]
