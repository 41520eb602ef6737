"""Quantum Fisher information, its extended-convexity and nSLD upper bounds."""
from .convexity import (
    Ensemble,
    channel_bound_eta,
    channel_bound_min,
    channel_ensemble,
    f_conv,
    split_f_conv,
    unitary_fconv,
)
from .exceptions import QFIError
from .fisher import (
    ProbabilityVector,
    cfi_of_measurement,
    classical_fisher,
    extended_qfi,
    inverse_quadratic_bound,
    qfi,
    solve_sld,
    uhlmann_ext_qfi,
)
from .lindblad import LindbladModel, evolve, ext_qfi_x0, ext_qfi_xa
from .qcore import DensityMatrix, KrausChannel, Measurement, load_matrix, dump_matrix

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix", "KrausChannel", "Measurement", "LindbladModel", "Ensemble",
    "ProbabilityVector", "QFIError", "qfi", "solve_sld", "classical_fisher",
    "cfi_of_measurement", "extended_qfi", "uhlmann_ext_qfi", "inverse_quadratic_bound",
    "f_conv", "split_f_conv", "channel_ensemble", "channel_bound_eta", "channel_bound_min",
    "unitary_fconv", "evolve", "ext_qfi_x0", "ext_qfi_xa", "load_matrix", "dump_matrix",
]
