"""Certified spectral-radius brackets for non-negative matrix sets and the
Hadamard (Schur) product inequalities built on them."""

__version__ = "0.1.0"

from .errors import BudgetError, DimensionError, DomainError, HJSRError, InputError
from .matrix import (
    NonNegMatrix,
    RadiusBracket,
    WeightVector,
    column_sum_norm,
    hadamard_geometric_mean,
    hadamard_power,
    hadamard_product,
    mat_product,
    operator_norm,
    perron_vector,
    row_sum_norm,
    spectral_radius_bracket,
    spectral_radius_exact_small,
)
from .sets import (
    EnumerationBudget,
    MatrixSet,
    enumerate_products,
    gsr_lower,
    hadamard_mean_of_sets,
    jsr_upper,
    radius_bracket,
    set_power,
    set_product,
)
from .kernels import (
    KernelModel,
    KernelSpec,
    discretize,
    kernel_hadamard_mean,
    kernel_product,
    to_matrix,
)
from .chains import (
    ChainReport,
    ChainSpec,
    chain_catalog,
    evaluate_chain,
    evaluate_kernel_chain,
    randomized_campaign,
)
