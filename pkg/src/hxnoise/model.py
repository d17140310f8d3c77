"""Lumped-parameter model of a water-to-water plate heat exchanger.

Two energy balances, one per outlet, reparameterized so that only four
ratios need to be identified::

    dT_co/dt =  k1*m_h*(T_hi - T_co) - k2*(mean_hot - mean_cold) + k3
    dT_ho/dt = -k1*m_c*(T_ho - T_ci) + k2*(mean_hot - mean_cold) + k4

with ``mean_hot = (T_co + T_hi)/2`` and ``mean_cold = (T_ho + T_ci)/2``.
``k1 = c_w/C_z`` [1/kg], ``k2 = UA/C_z`` [1/s]; ``k3`` and ``k4`` [°C/s]
absorb unmodeled dynamics and sensor offsets.

Units are fixed package-wide: °C, kg/s, seconds.

Output naming: result tables in the source material label the outputs
``T_so``/``T_ro`` while the text names them ``T_co``/``T_ho``. This package
maps ``T_so -> T_co`` and ``T_ro -> T_ho``.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from .errors import DomainError, SingularSystemError

PLAUSIBLE_RANGE = (-20.0, 150.0)

OUTPUT_CHANNELS = ("T_co", "T_ho")
INPUT_CHANNELS = ("T_hi", "T_ci", "m_h", "m_c")
CHANNELS = INPUT_CHANNELS + OUTPUT_CHANNELS


def _require_finite(obj, name: str) -> None:
    for field, value in zip(obj.__dataclass_fields__, astuple(obj)):
        if not math.isfinite(value):
            raise DomainError(f"{name}.{field} must be finite, got {value!r}")


@dataclass(frozen=True)
class ModelState:
    t_co: float
    t_ho: float

    def __post_init__(self):
        _require_finite(self, "ModelState")

    def is_plausible(self) -> bool:
        """True when both temperatures lie within the physically plausible range."""
        lo, hi = PLAUSIBLE_RANGE
        return lo <= self.t_co <= hi and lo <= self.t_ho <= hi

    def as_array(self) -> np.ndarray:
        return np.array([self.t_co, self.t_ho])


@dataclass(frozen=True)
class InputVector:
    t_hi: float
    t_ci: float
    m_h: float
    m_c: float

    def __post_init__(self):
        _require_finite(self, "InputVector")
        if self.m_h < 0 or self.m_c < 0:
            raise DomainError(f"mass flows must be non-negative, got m_h={self.m_h}, m_c={self.m_c}")

    def as_array(self) -> np.ndarray:
        return np.array([self.t_hi, self.t_ci, self.m_h, self.m_c])


@dataclass(frozen=True)
class ParameterVector:
    k1: float
    k2: float
    k3: float
    k4: float

    def __post_init__(self):
        _require_finite(self, "ParameterVector")

    def is_physical(self) -> bool:
        return self.k1 >= 0 and self.k2 >= 0

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3, self.k4])

    def as_list(self) -> list[float]:
        return [self.k1, self.k2, self.k3, self.k4]

    @classmethod
    def from_sequence(cls, values) -> ParameterVector:
        k = [float(v) for v in values]
        if len(k) != 4:
            raise ValueError(f"expected 4 parameters, got {len(k)}")
        return cls(*k)


INITIAL_GUESS = ParameterVector(0.1, 0.1, 0.1, 0.1)
REFERENCE_OPTIMUM = ParameterVector(0.0284, 0.2218, 2.14, -1.1161)


def per_exchanger_flow(total_flow):
    """Split a loop's total flow evenly over the two identical exchangers."""
    return 0.5 * total_flow


def ode_rhs(state: ModelState, inputs: InputVector, params: ParameterVector) -> tuple[float, float]:
    """Time derivatives ``(dT_co/dt, dT_ho/dt)`` in °C/s."""
    exchange = params.k2 * ((state.t_co + inputs.t_hi) / 2 - (state.t_ho + inputs.t_ci) / 2)
    d_co = params.k1 * inputs.m_h * (inputs.t_hi - state.t_co) - exchange + params.k3
    d_ho = -params.k1 * inputs.m_c * (state.t_ho - inputs.t_ci) + exchange + params.k4
    return d_co, d_ho


def equilibrium_state(inputs: InputVector, params: ParameterVector) -> ModelState:
    """Fixed point of :func:`ode_rhs` for constant inputs.

    Setting both derivatives to zero gives a 2x2 linear system in
    ``(T_co, T_ho)``; it is solved directly.

    Raises
    ------
    SingularSystemError
        If the system has no unique solution (for example ``k1 = k2 = 0``).
    """
    k1, k2, k3, k4 = params.as_list()
    a = k1 * inputs.m_h
    b = k1 * inputs.m_c
    h = k2 / 2
    matrix = np.array([[a + h, -h], [-h, b + h]])
    rhs = np.array([
        a * inputs.t_hi - h * inputs.t_hi + h * inputs.t_ci + k3,
        b * inputs.t_ci + h * inputs.t_hi - h * inputs.t_ci + k4,
    ])
    det = np.linalg.det(matrix)
    scale = max(1.0, np.abs(matrix).max() ** 2)
    if not math.isfinite(det) or abs(det) <= 1e-14 * scale:
        raise SingularSystemError("no unique equilibrium: steady-state system is singular")
    t_co, t_ho = np.linalg.solve(matrix, rhs)
    return ModelState(float(t_co), float(t_ho))
