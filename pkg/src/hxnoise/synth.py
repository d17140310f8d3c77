"""Synthetic plant data: ground truth, sensor effects and change-of-value thinning.

Two scenarios are provided:

``well_specified``
    Truth follows the identified model exactly (RK4 on a 1 s grid).
``misspecified``
    Truth comes from a richer plant: the UA term is modulated sinusoidally
    (±20 % by default) and the outlet sensors respond through a first-order
    lag (90 s). A second exchanger ("HE-1") with parameters shifted by 5 %
    provides the validation set. No parameter vector reproduces this data
    exactly.

Every random draw comes from a stream derived from ``spec.seed`` with
:func:`hxnoise.perturb.derive_stream_seed`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .integrate import simulate_array
from .model import CHANNELS, INPUT_CHANNELS, REFERENCE_OPTIMUM, InputVector, ParameterVector, equilibrium_state
from .perturb import derive_stream_seed, make_rng
from .prep import IrregularSeries, RegularFrame

SCENARIOS = ("well_specified", "misspecified")
PROFILES = ("steps", "smooth", "constant")
FINE_DT = 1.0

DEFAULT_PRECISION = {"T_hi": 0.1, "T_ci": 0.1, "T_co": 0.1, "T_ho": 0.1, "m_h": 0.01, "m_c": 0.01}

# setpoint ranges, walk excursions and hard limits of the input profiles;
# setpoint ± excursion stays inside the limits so no channel sits clipped
# (a clipped channel stops emitting change-of-value samples)
_SETPOINTS = {"T_hi": (76.0, 84.0), "T_ci": (42.0, 48.0), "m_h": (1.5, 3.5), "m_c": (1.5, 3.5)}
_EXCURSION = {"T_hi": 3.0, "T_ci": 2.0, "m_h": 0.5, "m_c": 0.5}
_LIMITS = {"T_hi": (70.0, 90.0), "T_ci": (38.0, 52.0), "m_h": (1.0, 4.0), "m_c": (1.0, 4.0)}
_WALK_STEP = {"T_hi": 0.15, "T_ci": 0.1, "m_h": 0.02, "m_c": 0.02}
_KNOT_SECONDS = 60.0
_RAMP_SECONDS = 600.0


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "misspecified"
    true_params: ParameterVector = REFERENCE_OPTIMUM
    duration_hours: float = 140.0
    profile: str = "steps"
    sensor_precision: dict = field(default_factory=lambda: dict(DEFAULT_PRECISION))
    measurement_noise_sigma: float = 0.05
    flow_noise_sigma: float = 0.0
    seed: int = 2022
    k2_modulation: float = 0.2
    modulation_period_hours: float = 6.0
    lag_seconds: float = 90.0
    validation_shift: float = 0.05

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown input profile {self.profile!r}; expected one of {PROFILES}")
        if not self.duration_hours > 0:
            raise ValueError("duration_hours must be positive")
        missing = set(CHANNELS) - set(self.sensor_precision)
        if missing:
            raise ValueError(f"sensor_precision lacks channels: {sorted(missing)}")
        if any(not p > 0 for p in self.sensor_precision.values()):
            raise ValueError("sensor precision must be positive for every channel")
        if self.measurement_noise_sigma < 0 or self.flow_noise_sigma < 0:
            raise ValueError("noise levels must be non-negative")
        if self.lag_seconds < 0 or self.modulation_period_hours <= 0:
            raise ValueError("lag must be >= 0 and modulation period > 0")


def input_profile(spec: ScenarioSpec, n: int, dt: float = FINE_DT, label: str = "inputs") -> np.ndarray:
    """``(n, 4)`` array of ``[T_hi, T_ci, m_h, m_c]`` sampled every ``dt`` seconds."""
    t = np.arange(n) * dt
    rng = make_rng(derive_stream_seed(spec.seed, label))
    cols = []
    for c in INPUT_CHANNELS:
        lo, hi = _SETPOINTS[c]
        if spec.profile == "constant":
            cols.append(np.full(n, (lo + hi) / 2))
            continue
        if spec.profile == "smooth":
            period = rng.uniform(3.0, 8.0) * 3600
            phase = rng.uniform(0, 2 * math.pi)
            cols.append((lo + hi) / 2 + (hi - lo) / 2 * np.sin(2 * math.pi * t / period + phase))
            continue
        cols.append(_step_walk(rng, c, t))
    return np.column_stack(cols)


def _step_walk(rng: np.random.Generator, channel: str, t: np.ndarray) -> np.ndarray:
    lo, hi = _SETPOINTS[channel]
    end = t[-1] if len(t) else 0.0
    # setpoint changes every 2-6 h, ramped over 10 min
    switch, level = [0.0], [rng.uniform(lo, hi)]
    while switch[-1] <= end:
        switch.append(switch[-1] + rng.uniform(2.0, 6.0) * 3600)
        level.append(rng.uniform(lo, hi))
    knots_t, knots_v = [], []
    for i in range(1, len(switch)):
        knots_t += [switch[i] - _RAMP_SECONDS, switch[i]]
        knots_v += [level[i - 1], level[i]]
    setpoint = np.interp(t, [0.0] + knots_t, [level[0]] + knots_v)
    # bounded random walk on a 60 s knot grid, linearly interpolated
    n_knots = int(end // _KNOT_SECONDS) + 2
    steps = rng.normal(0.0, _WALK_STEP[channel], n_knots)
    walk = np.empty(n_knots)
    acc = 0.0
    span = _EXCURSION[channel]
    for i in range(n_knots):
        acc = float(np.clip(0.995 * acc + steps[i], -span, span))
        walk[i] = acc
    walk = np.interp(t, np.arange(n_knots) * _KNOT_SECONDS, walk)
    limit_lo, limit_hi = _LIMITS[channel]
    return np.clip(setpoint + walk, limit_lo, limit_hi)


def _frame(inputs: np.ndarray, outputs: np.ndarray, dt: float) -> RegularFrame:
    cols = {c: inputs[:, j] for j, c in enumerate(INPUT_CHANNELS)}
    cols["T_co"], cols["T_ho"] = outputs[:, 0], outputs[:, 1]
    return RegularFrame(t0=0.0, dt=dt, columns=cols)


def _n_fine(spec: ScenarioSpec) -> int:
    return int(round(spec.duration_hours * 3600 / FINE_DT)) + 1


def _start_state(inputs: np.ndarray, params: ParameterVector) -> np.ndarray:
    return equilibrium_state(InputVector(*inputs[0]), params).as_array()


def generate_truth(spec: ScenarioSpec, label: str = "inputs") -> RegularFrame:
    """Fine-grid (1 s) frame whose outputs are the RK4 solution of the identified model."""
    inputs = input_profile(spec, _n_fine(spec), FINE_DT, label)
    x0 = _start_state(inputs, spec.true_params)
    states = simulate_array(x0, inputs, spec.true_params.as_array(), FINE_DT, "rk4")
    return _frame(inputs, states, FINE_DT)


@numba.njit(cache=True)
def _rich_deriv(s, t, u, k, mod, period, tau):
    t_co, t_ho, y_co, y_ho = s[0], s[1], s[2], s[3]
    k2 = k[1] * (1.0 + mod * math.sin(2.0 * math.pi * t / period))
    exchange = k2 * ((t_co + u[0]) / 2 - (t_ho + u[1]) / 2)
    d0 = k[0] * u[2] * (u[0] - t_co) - exchange + k[2]
    d1 = -k[0] * u[3] * (t_ho - u[1]) + exchange + k[3]
    if tau > 0:
        d2 = (t_co - y_co) / tau
        d3 = (t_ho - y_ho) / tau
    else:
        d2 = d0
        d3 = d1
    return np.array([d0, d1, d2, d3])


@numba.njit(cache=True)
def _rich_rk4(s0, inputs, k, dt, mod, period, tau):
    n = inputs.shape[0]
    out = np.empty((n, 2))
    s = s0.copy()
    out[0, 0] = s[2]
    out[0, 1] = s[3]
    for i in range(n - 1):
        t = i * dt
        u = inputs[i]
        a = _rich_deriv(s, t, u, k, mod, period, tau)
        b = _rich_deriv(s + dt / 2 * a, t + dt / 2, u, k, mod, period, tau)
        c = _rich_deriv(s + dt / 2 * b, t + dt / 2, u, k, mod, period, tau)
        d = _rich_deriv(s + dt * c, t + dt, u, k, mod, period, tau)
        s = s + dt / 6 * (a + 2 * b + 2 * c + d)
        out[i + 1, 0] = s[2]
        out[i + 1, 1] = s[3]
    return out


def rich_truth(spec: ScenarioSpec, params: ParameterVector, label: str) -> RegularFrame:
    """Fine-grid truth of the richer plant (UA modulation plus sensor lag)."""
    inputs = input_profile(spec, _n_fine(spec), FINE_DT, label)
    x0 = _start_state(inputs, params)
    s0 = np.concatenate([x0, x0])
    outputs = _rich_rk4(
        s0,
        np.ascontiguousarray(inputs),
        params.as_array(),
        FINE_DT,
        float(spec.k2_modulation),
        float(spec.modulation_period_hours * 3600),
        float(spec.lag_seconds),
    )
    return _frame(inputs, outputs, FINE_DT)


def validation_params(spec: ScenarioSpec) -> ParameterVector:
    """HE-1 parameters: each HE-2 parameter scaled by ``1 ± validation_shift`` (random sign)."""
    rng = make_rng(derive_stream_seed(spec.seed, "he1-params"))
    signs = rng.choice([-1.0, 1.0], size=4)
    return ParameterVector.from_sequence(spec.true_params.as_array() * (1 + spec.validation_shift * signs))


def make_misspecified(spec: ScenarioSpec) -> tuple[RegularFrame, RegularFrame]:
    """``(he2, he1)`` fine frames: HE-2 for train/test, HE-1 for validation."""
    if spec.name != "misspecified":
        raise ValueError(f"scenario {spec.name!r} is not the misspecified scenario")
    he2 = rich_truth(spec, spec.true_params, "he2-inputs")
    he1 = rich_truth(spec, validation_params(spec), "he1-inputs")
    return he2, he1


def make_scenario(spec: ScenarioSpec) -> dict[str, RegularFrame]:
    """Fine truth frames keyed by exchanger name."""
    if spec.name == "misspecified":
        he2, he1 = make_misspecified(spec)
    else:
        he2 = generate_truth(spec, "he2-inputs")
        he1 = generate_truth(replace(spec, true_params=validation_params(spec)), "he1-inputs")
    return {"HE-2": he2, "HE-1": he1}


def cov_thin(times: np.ndarray, values: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Change-of-value emission: keep the first sample, then any sample at least
    ``threshold`` away from the last kept one."""
    keep = _cov_mask(np.asarray(values, dtype=np.float64), float(threshold) * (1 - 1e-9))
    return np.asarray(times)[keep], np.asarray(values)[keep]


@numba.njit(cache=True)
def _cov_mask(values, threshold):
    keep = np.zeros(values.shape[0], dtype=np.bool_)
    if values.shape[0] == 0:
        return keep
    keep[0] = True
    last = values[0]
    for i in range(1, values.shape[0]):
        if abs(values[i] - last) >= threshold:
            keep[i] = True
            last = values[i]
    return keep


def degrade(frame: RegularFrame, spec: ScenarioSpec, label: str = "sensors") -> dict[str, IrregularSeries]:
    """Sensor noise, quantization to the sensor precision, then change-of-value thinning."""
    if frame.dt > 30:
        raise ValueError("degrade expects a frame sampled at 30 s or finer")
    times = frame.times
    out = {}
    for c in CHANNELS:
        rng = make_rng(derive_stream_seed(spec.seed, f"{label}/{c}"))
        sigma = spec.flow_noise_sigma if c.startswith("m_") else spec.measurement_noise_sigma
        values = frame.columns[c]
        if sigma > 0:
            values = values + rng.normal(0.0, sigma, size=len(values))
        p = spec.sensor_precision[c]
        values = np.round(values / p) * p
        t_kept, v_kept = cov_thin(times, values, 2 * p)
        out[c] = IrregularSeries(c, t_kept, v_kept)
    return out
