"""Goodness-of-fit metrics and vanilla-vs-treated improvement percentages."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

MAPE_EPS = 1e-6
METRIC_KEYS = ("max_ae", "mae", "mape", "mse", "rmse", "r2")
ORIENTATION = {
    "max_ae": "lower_better",
    "mae": "lower_better",
    "mape": "lower_better",
    "mse": "lower_better",
    "rmse": "lower_better",
    "r2": "higher_better",
}


@dataclass(frozen=True)
class MetricSet:
    """Error summary of one channel. ``mape`` is a fraction, not a percentage.

    ``mape`` is None when some measured value is within ``MAPE_EPS`` of zero;
    ``r2`` is None when the measured series has zero variance.
    """

    max_ae: float
    mae: float
    mape: Optional[float]
    mse: float
    rmse: float
    r2: Optional[float]

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(measured, predicted):
    y = np.asarray(measured, dtype=np.float64).ravel()
    yhat = np.asarray(predicted, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} measured vs {yhat.size} predicted")
    if y.size == 0:
        raise ValueError("cannot compute metrics on empty sequences")
    return y, yhat


def compute_metrics(measured, predicted) -> MetricSet:
    y, yhat = _pair(measured, predicted)
    err = y - yhat
    abs_err = np.abs(err)
    mse = float(np.mean(err**2))
    mape = None
    if np.all(np.abs(y) >= MAPE_EPS):
        mape = float(np.mean(abs_err / np.abs(y)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = None
    if ss_tot > 0:
        r2 = 1.0 - float(np.sum(err**2)) / ss_tot
    return MetricSet(
        max_ae=float(abs_err.max()),
        mae=float(abs_err.mean()),
        mape=mape,
        mse=mse,
        rmse=float(np.sqrt(mse)),
        r2=r2,
    )


def channel_metrics(measured: np.ndarray, predicted: np.ndarray, channels=("T_co", "T_ho")) -> dict[str, MetricSet]:
    """Per-channel metrics for ``(n, k)`` arrays, keyed by channel name."""
    y, yhat = np.asarray(measured), np.asarray(predicted)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: {y.shape} vs {yhat.shape}")
    return {name: compute_metrics(y[:, j], yhat[:, j]) for j, name in enumerate(channels)}


def improvement_percent(vanilla: float, treated: float, orientation: str) -> Optional[float]:
    """Percent improvement of ``treated`` over ``vanilla``; None when ``vanilla == 0``."""
    if orientation not in ("lower_better", "higher_better"):
        raise ValueError(f"unknown orientation {orientation!r}")
    if vanilla == 0:
        return None
    if orientation == "lower_better":
        return 100.0 * (vanilla - treated) / vanilla
    return 100.0 * (treated - vanilla) / vanilla
