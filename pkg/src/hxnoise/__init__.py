"""Gray-box identification of a plate heat exchanger with noise-injected training targets."""

from .errors import DataError, DomainError, SingularSystemError
from .model import (
    INITIAL_GUESS,
    REFERENCE_OPTIMUM,
    InputVector,
    ModelState,
    ParameterVector,
    equilibrium_state,
    ode_rhs,
    per_exchanger_flow,
)

__all__ = [
    "DataError",
    "DomainError",
    "SingularSystemError",
    "INITIAL_GUESS",
    "REFERENCE_OPTIMUM",
    "InputVector",
    "ModelState",
    "ParameterVector",
    "equilibrium_state",
    "ode_rhs",
    "per_exchanger_flow",
]
