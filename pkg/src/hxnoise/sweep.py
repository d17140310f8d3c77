"""Noise-scale study: fit at each scale, score on clean data, pick the best scale."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .estimate import EstimationProblem, EstimationResult, estimate, with_noise
from .integrate import simulate_array
from .metrics import MetricSet, channel_metrics
from .model import OUTPUT_CHANNELS, ParameterVector
from .perturb import derive_stream_seed
from .prep import RegularFrame

DEFAULT_GRID = (0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5)
DATASETS = ("train", "test", "validation")
SCHEMA_VERSION = 1


def sigma_label(sigma: float) -> str:
    """Fixed-format label that keys a noise scale's random stream."""
    return f"sigma={sigma:.6f}"


def run_seed(master_seed: int, sigma: float) -> int:
    return derive_stream_seed(master_seed, sigma_label(sigma))


def predict(params: ParameterVector, frame: RegularFrame, substeps: int = 1) -> np.ndarray:
    """Open-loop Euler prediction of a clean frame, started from its first measured outputs."""
    return simulate_array(frame.outputs()[0], frame.inputs(), params.as_array(), frame.dt, "euler", substeps)


def evaluate(
    params: ParameterVector, frames: Mapping[str, RegularFrame], substeps: int = 1
) -> dict[str, dict[str, MetricSet]]:
    """Per-dataset, per-channel metrics of ``params`` on unperturbed frames."""
    out = {}
    for name, frame in frames.items():
        if len(frame) == 0:
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            out[name] = channel_metrics(frame.outputs(), predict(params, frame, substeps), OUTPUT_CHANNELS)
    return out


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    seed: int
    result: Optional[EstimationResult] = None
    metrics: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def score(self, dataset: str) -> float:
        """Mean RMSE over both output channels on ``dataset``."""
        per_channel = self.metrics[dataset]
        return float(np.mean([per_channel[c].rmse for c in OUTPUT_CHANNELS]))

    def as_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "seed": self.seed,
            "status": "ok" if self.ok else "failed",
            "error": self.error,
            "estimation": None if self.result is None else self.result.as_dict(),
            "metrics": {
                ds: {ch: m.as_dict() for ch, m in per_channel.items()} for ds, per_channel in self.metrics.items()
            },
        }


@dataclass(frozen=True)
class SweepReport:
    scales: tuple[float, ...]
    rows: tuple[SweepRow, ...]
    selected_sigma: float
    selection_rule: str
    master_seed: int
    eval_checksums: dict

    def row(self, sigma: float) -> SweepRow:
        for r in self.rows:
            if r.sigma == sigma:
                return r
        raise KeyError(sigma)

    def as_dict(self, config_digest: str = "") -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scales": list(self.scales),
            "rows": [r.as_dict() for r in self.rows],
            "selected_sigma": self.selected_sigma,
            "selection_rule": self.selection_rule,
            "master_seed": self.master_seed,
            "config_digest": config_digest,
            "eval_checksums": dict(self.eval_checksums),
        }


def selection_rule(dataset: str) -> str:
    return (
        f"minimize mean {dataset}-set RMSE over outputs {'/'.join(OUTPUT_CHANNELS)}; "
        "ties go to the smaller noise scale"
    )


def select_optimum(rows: Sequence[SweepRow], dataset: str = "test") -> float:
    usable = [r for r in rows if r.ok and dataset in r.metrics]
    if not usable:
        raise ValueError(f"no successful sweep row has {dataset} metrics")
    best = min(usable, key=lambda r: (r.score(dataset), r.sigma))
    return best.sigma


def _run_row(problem: EstimationProblem, sigma: float, master_seed: int, frames) -> SweepRow:
    seed = run_seed(master_seed, sigma)
    try:
        result = estimate(with_noise(problem, sigma, seed))
        metrics = evaluate(result.params, frames, result.substeps)
    except Exception as exc:  # recorded per row; the sweep goes on
        return SweepRow(sigma, seed, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(sigma, seed, result, metrics)


def _run_row_packed(args):
    return _run_row(*args)


def run_sweep(
    problem: EstimationProblem,
    scales: Sequence[float],
    eval_frames: Mapping[str, RegularFrame],
    master_seed: int,
    jobs: int = 1,
) -> SweepReport:
    """Estimate once per noise scale and score each fit on the clean evaluation frames.

    ``problem.frame`` is the clean training frame; noise goes into a copy of
    its targets inside :func:`estimate`. Evaluation frames are checksummed
    before and after the sweep to prove they were never perturbed.
    """
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("scales must be non-empty")
    if any(not (s >= 0 and math.isfinite(s)) for s in scales):
        raise ValueError("noise scales must be finite and non-negative")
    if "train" not in eval_frames:
        raise ValueError("eval_frames must include 'train'")
    unknown = set(eval_frames) - set(DATASETS)
    if unknown:
        raise ValueError(f"unknown evaluation datasets: {sorted(unknown)}")

    frames = {name: eval_frames[name] for name in DATASETS if name in eval_frames}
    before = {name: f.checksum() for name, f in frames.items()}
    train_before = problem.frame.checksum()

    tasks = [(problem, s, master_seed, frames) for s in scales]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_row_packed, tasks))
    else:
        rows = [_run_row(*t) for t in tasks]

    after = {name: f.checksum() for name, f in frames.items()}
    if after != before or problem.frame.checksum() != train_before:
        raise AssertionError("evaluation data changed during the sweep")
    if not any(r.ok for r in rows):
        raise RuntimeError("every sweep row failed: " + "; ".join(r.error for r in rows))

    dataset = "test" if any(r.ok and "test" in r.metrics for r in rows) else "train"
    return SweepReport(
        scales=tuple(scales),
        rows=tuple(rows),
        selected_sigma=select_optimum(rows, dataset),
        selection_rule=selection_rule(dataset),
        master_seed=master_seed,
        eval_checksums=before,
    )
