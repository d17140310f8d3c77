"""Least-squares identification of the four model parameters.

The objective is the sum of squared errors between target outputs and a
free-running Euler simulation started from the first target sample. It is
minimized by bounded Nelder-Mead in box-normalized coordinates, restarted
from Latin-hypercube points inside the bounds. When a noise scale is set,
the targets are perturbed once before any start runs, so every start sees
the same deterministic objective.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .integrate import simulate_array
from .model import INITIAL_GUESS, ParameterVector
from .perturb import NoiseConfig, derive_stream_seed, inject_noise, make_rng
from .prep import RegularFrame

DEFAULT_BOUNDS = ((0.0, 1.0), (0.0, 10.0), (-50.0, 50.0), (-50.0, 50.0))
DEFAULT_BUDGET = 2000
DEFAULT_N_STARTS = 8
DEFAULT_MAX_STEP = 1.0
STABILITY_MARGIN = 1.9
J_RTOL = 1e-10
X_TOL = 1e-8
SIMPLEX_STEP = 0.05

IterationLog = Callable[[int, int, float], None]


def substeps_for(dt: float, max_step: float) -> int:
    """Number of equal Euler sub-steps so that none exceeds ``max_step`` seconds."""
    if not max_step > 0:
        raise ValueError("max_step must be positive")
    return max(1, math.ceil(dt / max_step - 1e-9))


def stable_step(bounds, max_flow: float) -> float:
    """Largest Euler step (s, with margin) stable everywhere in the box.

    The Jacobian's most negative eigenvalue is bounded by ``-(k1*m + k2)``, so
    explicit Euler is stable when ``h * (k1_hi*m_max + k2_hi) < 2``.
    """
    rate = bounds[0][1] * max(max_flow, 0.0) + bounds[1][1]
    return min(DEFAULT_MAX_STEP, STABILITY_MARGIN / rate) if rate > 0 else DEFAULT_MAX_STEP


def objective_j(
    params: ParameterVector,
    frame: RegularFrame,
    targets: np.ndarray,
    dt: Optional[float] = None,
    max_step: float = DEFAULT_MAX_STEP,
) -> float:
    """Sum over samples and both outputs of ``(target - simulated)**2`` [°C²].

    The simulation is open loop, starts from ``targets[0]`` and uses the
    frame's inputs under zero-order hold. Non-finite simulations give ``inf``.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (len(frame), 2):
        raise ValueError(f"targets shape {targets.shape} does not match frame length {len(frame)}")
    dt = frame.dt if dt is None else dt
    k = params.as_array() if isinstance(params, ParameterVector) else np.asarray(params, dtype=np.float64)
    return _sse(k, frame.inputs(), targets, dt, substeps_for(dt, max_step))


def _sse(k: np.ndarray, inputs: np.ndarray, targets: np.ndarray, dt: float, substeps: int) -> float:
    sim = simulate_array(targets[0], inputs, k, dt, "euler", substeps)
    with np.errstate(over="ignore", invalid="ignore"):
        j = float(np.sum((targets - sim) ** 2))
    return j if math.isfinite(j) else math.inf


@dataclass(frozen=True)
class EstimationProblem:
    frame: RegularFrame
    initial_params: ParameterVector = INITIAL_GUESS
    bounds: tuple = DEFAULT_BOUNDS
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    dt: Optional[float] = None
    budget: int = DEFAULT_BUDGET
    n_starts: int = DEFAULT_N_STARTS
    max_step: Optional[float] = None

    def __post_init__(self):
        if self.dt is None:
            object.__setattr__(self, "dt", self.frame.dt)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != 4:
            raise ValueError("bounds must give (lower, upper) for each of the 4 parameters")
        for name, (lo, hi), k in zip(("k1", "k2", "k3", "k4"), bounds, self.initial_params.as_list()):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name}: bounds must be finite with lower < upper, got ({lo}, {hi})")
            if not lo <= k <= hi:
                raise ValueError(f"{name}: initial value {k} outside bounds ({lo}, {hi})")
        if bounds[0][0] < 0 or bounds[1][0] < 0:
            raise ValueError("k1 and k2 lower bounds must be >= 0")
        object.__setattr__(self, "bounds", bounds)
        if self.max_step is None:
            flows = self.frame.inputs()[:, 2:]
            peak = float(flows.max()) if flows.size else 0.0
            object.__setattr__(self, "max_step", stable_step(bounds, peak))
        elif not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.budget < 1 or self.n_starts < 1:
            raise ValueError("budget and n_starts must be >= 1")
        if len(self.frame) < 1:
            raise ValueError("training frame is empty")

    @property
    def substeps(self) -> int:
        return substeps_for(self.dt, self.max_step)


@dataclass(frozen=True)
class StartRecord:
    index: int
    start: ParameterVector
    final: Optional[ParameterVector]
    objective: float
    evaluations: int
    converged: bool
    discarded: bool = False


@dataclass(frozen=True)
class EstimationResult:
    params: ParameterVector
    objective: float
    per_start: tuple[StartRecord, ...]
    converged: bool
    evaluations: int
    substeps: int = 1

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_list(),
            "substeps": self.substeps,
            "objective": self.objective,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "per_start": [
                {
                    "index": r.index,
                    "start": r.start.as_list(),
                    "final": None if r.final is None else r.final.as_list(),
                    "objective": r.objective if math.isfinite(r.objective) else None,
                    "evaluations": r.evaluations,
                    "converged": r.converged,
                    "discarded": r.discarded,
                }
                for r in self.per_start
            ],
        }


class _BudgetExhausted(Exception):
    pass


def start_points(problem: EstimationProblem) -> list[ParameterVector]:
    """The initial guess followed by ``n_starts - 1`` Latin-hypercube points in the bounds."""
    points = [problem.initial_params]
    extra = problem.n_starts - 1
    if extra > 0:
        seed = derive_stream_seed(problem.noise.seed, "starts")
        unit = qmc.LatinHypercube(d=4, rng=make_rng(seed)).random(extra)
        lo = np.array([b[0] for b in problem.bounds])
        hi = np.array([b[1] for b in problem.bounds])
        points.extend(ParameterVector.from_sequence(row) for row in lo + unit * (hi - lo))
    return points


def training_targets(problem: EstimationProblem) -> np.ndarray:
    """Targets the solver fits: measured outputs, noise-injected when ``sigma > 0``."""
    return inject_noise(problem.frame.outputs(), problem.noise)


def _run_start(index, start, bounds, inputs, targets, dt, substeps, budget, log):
    lo = np.array([b[0] for b in bounds])
    span = np.array([b[1] - b[0] for b in bounds])
    to_params = lambda z: lo + np.clip(z, 0.0, 1.0) * span  # noqa: E731

    evaluations = 0
    best_j, best_z = math.inf, None

    def fun(z):
        nonlocal evaluations, best_j, best_z
        if evaluations >= budget:
            raise _BudgetExhausted
        evaluations += 1
        k = start.as_array() if z is z0 else to_params(z)
        j = _sse(k, inputs, targets, dt, substeps)
        if j < best_j:
            best_j, best_z = j, (z if z is z0 else np.clip(z, 0.0, 1.0).copy())
        return j

    z0 = (start.as_array() - lo) / span
    j0 = fun(z0)
    if not math.isfinite(j0):
        return StartRecord(index, start, None, math.inf, evaluations, False, discarded=True)

    simplex = [z0]
    for axis in range(4):
        z = z0.copy()
        z[axis] += SIMPLEX_STEP if z[axis] + SIMPLEX_STEP <= 1.0 else -SIMPLEX_STEP
        simplex.append(z)

    def callback(intermediate_result):
        if log is not None:
            log(index, evaluations, best_j)

    converged = False
    j_first = j0
    cache = {z0.tobytes(): j0}

    def cached(z):
        key = np.asarray(z).tobytes()
        if key in cache:
            return cache.pop(key)
        return fun(z)

    try:
        res = minimize(
            cached,
            z0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * 4,
            callback=callback,
            options={
                "initial_simplex": np.array(simplex),
                "maxfev": budget,
                "maxiter": 100 * budget,
                "xatol": X_TOL,
                "fatol": J_RTOL * max(j_first, 1e-300),
            },
        )
        converged = bool(res.status == 0)
    except _BudgetExhausted:
        pass
    # the normalized round trip is inexact; an unmoved start is returned verbatim
    final = start if best_z is z0 else ParameterVector.from_sequence(to_params(best_z))
    return StartRecord(index, start, final, best_j, evaluations, converged)


def _run_start_packed(args):
    return _run_start(*args, log=None)


def estimate(problem: EstimationProblem, log: Optional[IterationLog] = None, jobs: int = 1) -> EstimationResult:
    """Multi-start bounded Nelder-Mead fit; deterministic for a given problem.

    ``log(start_index, evaluations, best_J)`` is called once per accepted
    simplex iteration (sequential runs only). With ``jobs > 1`` the starts
    run in worker processes; the reduction is order-stable so the result
    does not depend on ``jobs``.
    """
    targets = training_targets(problem)
    inputs = problem.frame.inputs()
    substeps = problem.substeps
    starts = start_points(problem)
    common = (problem.bounds, inputs, targets, problem.dt, substeps, problem.budget)
    if jobs > 1 and len(starts) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_start_packed, [(i, s, *common) for i, s in enumerate(starts)]))
    else:
        records = [_run_start(i, s, *common, log=log) for i, s in enumerate(starts)]
    return _reduce(records, substeps)


def _reduce(records: Sequence[StartRecord], substeps: int) -> EstimationResult:
    total = sum(r.evaluations for r in records)
    usable = [r for r in records if not r.discarded]
    if not usable:
        raise RuntimeError("every start produced a non-finite objective")
    best = min(usable, key=lambda r: (r.objective, r.index))
    return EstimationResult(
        params=best.final,
        objective=best.objective,
        per_start=tuple(records),
        converged=best.converged,
        evaluations=total,
        substeps=substeps,
    )


def with_noise(problem: EstimationProblem, sigma: float, seed: int) -> EstimationProblem:
    return replace(problem, noise=NoiseConfig(sigma=sigma, seed=seed))
