"""Degree-corrected stochastic block model inference and partition comparison."""

from .description_length import GraphArrays, as_graph_arrays, description_length
from .mcmc import BlockState, SbmResult, fit_sbm, is_sparse
from .rmi import RmiResult, contingency_table, log_omega, log_omega_approx, log_omega_exact, rmi

__all__ = [
    "BlockState",
    "GraphArrays",
    "RmiResult",
    "SbmResult",
    "as_graph_arrays",
    "contingency_table",
    "description_length",
    "fit_sbm",
    "is_sparse",
    "log_omega",
    "log_omega_approx",
    "log_omega_exact",
    "rmi",
]
