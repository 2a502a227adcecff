"""Kernel least mean square filters with online adaptive kernel size.

Online, nonlinear adaptive filtering in reproducing kernel Hilbert
spaces: plain and quantized KLMS, error-driven kernel size adaptation,
closed-form RKHS geometry across kernel widths, an energy-conservation
ledger for auditing mean square convergence, and reproducible Monte
Carlo experiments on static regression and chaotic series prediction.
"""

from .analysis import (
    LedgerRecord,
    NumericalError,
    batch_solve,
    emse_estimate,
    energy_ledger_run,
    energy_ledger_step,
    error_decompose,
    grid_search_sigma,
    reference_width,
    theoretical_emse,
    varsigma_estimate,
)
from .experiments import (
    ExperimentConfig,
    LorenzParams,
    embed,
    gen_static,
    lorenz_series,
    make_filter,
    run_monte_carlo,
    silverman_init,
    static_target,
)
from .filters import (
    KLMS,
    AdaptiveKLMS,
    Codebook,
    QuantizedAdaptiveKLMS,
    QuantizedKLMS,
    QuantizeResult,
    RbfExpansion,
    StepResult,
    kernel_size_step,
)
from .kernels import (
    GaussianKernelSpec,
    RkhsContext,
    RkhsMembershipError,
    gaussian,
    grad_sigma,
    squared_distance,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveKLMS",
    "Codebook",
    "ExperimentConfig",
    "GaussianKernelSpec",
    "KLMS",
    "LedgerRecord",
    "LorenzParams",
    "NumericalError",
    "QuantizedAdaptiveKLMS",
    "QuantizedKLMS",
    "QuantizeResult",
    "RbfExpansion",
    "RkhsContext",
    "RkhsMembershipError",
    "StepResult",
    "batch_solve",
    "embed",
    "emse_estimate",
    "energy_ledger_run",
    "energy_ledger_step",
    "error_decompose",
    "gaussian",
    "gen_static",
    "grad_sigma",
    "grid_search_sigma",
    "kernel_size_step",
    "lorenz_series",
    "make_filter",
    "reference_width",
    "run_monte_carlo",
    "silverman_init",
    "squared_distance",
    "static_target",
    "theoretical_emse",
    "varsigma_estimate",
]
