"""Randomized compression for nonnegative matrix factorization.

Matrices are NumPy float64 arrays. Factorizations return dictionaries with
the factors and run statistics.
"""

from ._cnmf import (
    ArgumentError,
    BudgetError,
    CnmfError,
    ConvergenceError,
    DivergenceError,
    NumericError,
    ParseError,
    RankDeficiencyError,
    UndefinedMetricError,
    adjust_config,
    admm,
    gaussian_basis,
    gen_nmf,
    gen_separable,
    gen_snmf,
    load,
    nmf,
    nnls,
    relative_error,
    run_benchmark,
    save,
    select_spa,
    select_xray,
    snmf,
    structured_basis,
    threshold,
    tsqr,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
