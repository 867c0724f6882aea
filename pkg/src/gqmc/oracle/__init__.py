"""Independent exact references the stochastic machinery is tested against."""

from .fock import annihilator, creator, ladder_operators, number_operator
from .kernel import (
    check_identities,
    kernel_from_sigma,
    kernel_trace_raw,
    materialize_kernel,
    pfaffian,
    sigma_from_state,
)

__all__ = [
    "annihilator",
    "creator",
    "ladder_operators",
    "number_operator",
    "check_identities",
    "kernel_from_sigma",
    "kernel_trace_raw",
    "materialize_kernel",
    "pfaffian",
    "sigma_from_state",
]
