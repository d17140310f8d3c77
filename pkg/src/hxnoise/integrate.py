"""Fixed-step time integration of the heat-exchanger model.

Forward Euler is the training integrator; classical RK4 is the accuracy
reference and the generator of synthetic truth. Inputs are held constant
over each step (zero-order hold).

A sample interval ``dt`` may be split into ``substeps`` equal internal
steps. Explicit Euler at 30 s is unstable for the fast heat-exchange mode
once ``k2 * dt > 2``, so estimation runs Euler on 1 s sub-steps while the
data stay on the 30 s grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .model import InputVector, ModelState, ParameterVector, ode_rhs

METHODS = ("euler", "rk4")


@numba.njit(cache=True)
def _rhs(t_co, t_ho, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4):
    exchange = k2 * ((t_co + t_hi) / 2 - (t_ho + t_ci) / 2)
    d_co = k1 * m_h * (t_hi - t_co) - exchange + k3
    d_ho = -k1 * m_c * (t_ho - t_ci) + exchange + k4
    return d_co, d_ho


@numba.njit(cache=True)
def _euler_path(x0, inputs, params, dt, substeps, n_out):
    k1, k2, k3, k4 = params[0], params[1], params[2], params[3]
    h = dt / substeps
    g = k2 / 2
    out = np.empty((n_out, 2))
    t_co, t_ho = x0[0], x0[1]
    out[0, 0] = t_co
    out[0, 1] = t_ho
    for i in range(n_out - 1):
        t_hi, t_ci, m_h, m_c = inputs[i, 0], inputs[i, 1], inputs[i, 2], inputs[i, 3]
        if substeps == 1:
            d_co, d_ho = _rhs(t_co, t_ho, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4)
            t_co = t_co + h * d_co
            t_ho = t_ho + h * d_ho
        else:
            # inputs are held over the interval, so one Euler sub-step is the
            # affine map x -> M x + v; compose it `substeps` times by squaring
            a = k1 * m_h
            b = k1 * m_c
            m00 = 1.0 - h * (a + g)
            m01 = h * g
            m10 = h * g
            m11 = 1.0 - h * (b + g)
            v0 = h * ((a - g) * t_hi + g * t_ci + k3)
            v1 = h * ((b - g) * t_ci + g * t_hi + k4)
            # accumulated map, starts as identity
            p00, p01, p10, p11, w0, w1 = 1.0, 0.0, 0.0, 1.0, 0.0, 0.0
            n = substeps
            while n > 0:
                if n & 1:
                    q00 = m00 * p00 + m01 * p10
                    q01 = m00 * p01 + m01 * p11
                    q10 = m10 * p00 + m11 * p10
                    q11 = m10 * p01 + m11 * p11
                    w0, w1 = m00 * w0 + m01 * w1 + v0, m10 * w0 + m11 * w1 + v1
                    p00, p01, p10, p11 = q00, q01, q10, q11
                n >>= 1
                if n:
                    v0, v1 = m00 * v0 + m01 * v1 + v0, m10 * v0 + m11 * v1 + v1
                    m00, m01, m10, m11 = (
                        m00 * m00 + m01 * m10,
                        m00 * m01 + m01 * m11,
                        m10 * m00 + m11 * m10,
                        m10 * m01 + m11 * m11,
                    )
            t_co, t_ho = p00 * t_co + p01 * t_ho + w0, p10 * t_co + p11 * t_ho + w1
        out[i + 1, 0] = t_co
        out[i + 1, 1] = t_ho
    return out


@numba.njit(cache=True)
def _rk4_path(x0, inputs, params, dt, substeps, n_out):
    k1, k2, k3, k4 = params[0], params[1], params[2], params[3]
    h = dt / substeps
    out = np.empty((n_out, 2))
    a, b = x0[0], x0[1]
    out[0, 0] = a
    out[0, 1] = b
    for i in range(n_out - 1):
        t_hi, t_ci, m_h, m_c = inputs[i, 0], inputs[i, 1], inputs[i, 2], inputs[i, 3]
        for _ in range(substeps):
            p1, q1 = _rhs(a, b, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4)
            p2, q2 = _rhs(a + h / 2 * p1, b + h / 2 * q1, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4)
            p3, q3 = _rhs(a + h / 2 * p2, b + h / 2 * q2, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4)
            p4, q4 = _rhs(a + h * p3, b + h * q3, t_hi, t_ci, m_h, m_c, k1, k2, k3, k4)
            a = a + h / 6 * (p1 + 2 * p2 + 2 * p3 + p4)
            b = b + h / 6 * (q1 + 2 * q2 + 2 * q3 + q4)
        out[i + 1, 0] = a
        out[i + 1, 1] = b
    return out


@dataclass(frozen=True)
class Trajectory:
    """Simulated outputs; ``states[i]`` is ``(T_co, T_ho)`` at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray
    dt: float

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> ModelState:
        return ModelState(float(self.states[i, 0]), float(self.states[i, 1]))

    @property
    def t_co(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def t_ho(self) -> np.ndarray:
        return self.states[:, 1]


def _check_dt(dt: float) -> None:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")


def euler_step(state: ModelState, inputs: InputVector, params: ParameterVector, dt: float) -> ModelState:
    _check_dt(dt)
    d_co, d_ho = ode_rhs(state, inputs, params)
    return ModelState(state.t_co + dt * d_co, state.t_ho + dt * d_ho)


def rk4_step(state: ModelState, inputs: InputVector, params: ParameterVector, dt: float) -> ModelState:
    _check_dt(dt)

    def f(t_co, t_ho):
        return ode_rhs(ModelState(t_co, t_ho), inputs, params)

    a, b = state.t_co, state.t_ho
    p1, q1 = f(a, b)
    p2, q2 = f(a + dt / 2 * p1, b + dt / 2 * q1)
    p3, q3 = f(a + dt / 2 * p2, b + dt / 2 * q2)
    p4, q4 = f(a + dt * p3, b + dt * q3)
    return ModelState(a + dt / 6 * (p1 + 2 * p2 + 2 * p3 + p4), b + dt / 6 * (q1 + 2 * q2 + 2 * q3 + q4))


def simulate_array(
    x0,
    inputs: np.ndarray,
    params,
    dt: float,
    method: str = "euler",
    substeps: int = 1,
    closing: bool = False,
) -> np.ndarray:
    """Array-level simulation: ``inputs`` is ``(n, 4)``, result is ``(n, 2)``.

    ``result[0] = x0`` and ``result[i + 1]`` advances ``result[i]`` under
    ``inputs[i]``. With ``closing=True`` the last input also drives one
    step and the result has ``n + 1`` rows.
    """
    _check_dt(dt)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    u = np.ascontiguousarray(inputs, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != 4 or len(u) == 0:
        raise ValueError("inputs must be a non-empty (n, 4) array")
    x = np.asarray(x0, dtype=np.float64).reshape(2)
    k = np.asarray(params, dtype=np.float64).reshape(4)
    n_out = len(u) + 1 if closing else len(u)
    kernel = _euler_path if method == "euler" else _rk4_path
    return kernel(x, u, k, float(dt), int(substeps), n_out)


def simulate(
    x0: ModelState,
    inputs: Sequence[InputVector],
    params: ParameterVector,
    dt: float,
    method: str = "euler",
    substeps: int = 1,
    t0: float = 0.0,
    closing: bool = False,
) -> Trajectory:
    """Free-running simulation from ``x0`` over a sequence of inputs."""
    if len(inputs) == 0:
        raise ValueError("inputs must be non-empty")
    u = np.array([v.as_array() for v in inputs])
    states = simulate_array(x0.as_array(), u, params.as_array(), dt, method, substeps, closing)
    times = t0 + np.arange(len(states)) * dt
    return Trajectory(times=times, states=states, dt=dt)
