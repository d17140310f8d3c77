"""Turning change-of-value telemetry into uniform, filtered frames.

The pipeline is: linear resampling onto a uniform grid (which also bridges
gaps), then a centered moving median with edge replication, applied to all
six channels. Frames are split chronologically into train/test windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError
from .model import CHANNELS, INPUT_CHANNELS, OUTPUT_CHANNELS

DEFAULT_DT = 30.0
DEFAULT_FILTER_WINDOW = 5


@dataclass(frozen=True)
class IrregularSeries:
    channel: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise DataError(f"unknown channel {self.channel!r}")
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.shape != values.shape or times.ndim != 1:
            raise DataError(f"{self.channel}: times and values must be 1-D and equal length")
        if np.any(np.diff(times) <= 0):
            raise DataError(f"{self.channel}: timestamps must be strictly increasing (duplicates are rejected)")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class RegularFrame:
    """Uniformly sampled six-channel frame starting at ``t0`` with spacing ``dt``."""

    t0: float
    dt: float
    columns: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise DataError(f"dt must be positive, got {self.dt}")
        missing = [c for c in CHANNELS if c not in self.columns]
        if missing:
            raise DataError(f"frame is missing channels: {', '.join(missing)}")
        extra = set(self.columns) - set(CHANNELS)
        if extra:
            raise DataError(f"unknown channels: {', '.join(sorted(extra))}")
        cols = {c: np.asarray(self.columns[c], dtype=np.float64) for c in CHANNELS}
        lengths = {len(v) for v in cols.values()}
        if len(lengths) != 1:
            raise DataError("all channels must have the same length")
        object.__setattr__(self, "columns", cols)

    def __len__(self):
        return len(self.columns[CHANNELS[0]])

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def duration(self) -> float:
        """Seconds between the first and last sample."""
        return max(len(self) - 1, 0) * self.dt

    def inputs(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in INPUT_CHANNELS])

    def outputs(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in OUTPUT_CHANNELS])

    def slice(self, start: int, stop: int) -> RegularFrame:
        return RegularFrame(
            t0=self.t0 + start * self.dt,
            dt=self.dt,
            columns={c: v[start:stop].copy() for c, v in self.columns.items()},
        )

    def with_outputs(self, outputs: np.ndarray) -> RegularFrame:
        cols = dict(self.columns)
        cols["T_co"] = np.asarray(outputs[:, 0], dtype=np.float64)
        cols["T_ho"] = np.asarray(outputs[:, 1], dtype=np.float64)
        return RegularFrame(self.t0, self.dt, cols)

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(np.float64([self.t0, self.dt]).tobytes())
        for c in CHANNELS:
            h.update(self.columns[c].tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitSpec:
    train_hours: float
    test_hours: float
    label: str = "custom"

    def __post_init__(self):
        if not self.train_hours > 0:
            raise ValueError("train_hours must be positive")
        if self.test_hours < 0:
            raise ValueError("test_hours must be non-negative")


SPLITS = {
    "D1": SplitSpec(11, 128, "D1"),
    "D2": SplitSpec(25, 114, "D2"),
    "D3": SplitSpec(53, 86, "D3"),
}


def resample_linear(series: IrregularSeries, t0: float, dt: float, n: int) -> np.ndarray:
    """Linearly interpolate onto ``t0 + i*dt``; hold endpoint values outside the raw range."""
    if len(series) < 2:
        raise DataError(f"{series.channel}: at least 2 samples are needed to resample, got {len(series)}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = t0 + np.arange(n) * dt
    return np.interp(grid, series.times, series.values)


def median_filter(values, window: int) -> np.ndarray:
    """Centered moving median over an edge-replicated copy of ``values``."""
    x = np.asarray(values, dtype=np.float64)
    if isinstance(window, bool) or int(window) != window or window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window!r}")
    if len(x) == 0:
        raise ValueError("values must be non-empty")
    if window > len(x):
        raise ValueError(f"window {window} exceeds sequence length {len(x)}")
    if window == 1:
        return x.copy()
    half = window // 2
    padded = np.pad(x, half, mode="edge")
    return np.median(sliding_window_view(padded, window), axis=1)


def build_frame(
    raw: Mapping[str, IrregularSeries],
    dt: float = DEFAULT_DT,
    filter_window: int = DEFAULT_FILTER_WINDOW,
) -> RegularFrame:
    """Resample and filter six raw channels onto their common time range."""
    missing = [c for c in CHANNELS if c not in raw]
    if missing:
        raise DataError(f"raw data is missing channels: {', '.join(missing)}")
    for c in CHANNELS:
        if len(raw[c]) < 2:
            raise DataError(f"{c}: at least 2 samples are needed, got {len(raw[c])}")
    start = max(raw[c].times[0] for c in CHANNELS)
    end = min(raw[c].times[-1] for c in CHANNELS)
    if end - start < dt:
        raise DataError(f"channels overlap for {max(end - start, 0):g} s, less than one step of {dt:g} s")
    n = int(np.floor((end - start) / dt + 1e-9)) + 1
    columns = {}
    for c in CHANNELS:
        values = resample_linear(raw[c], start, dt, n)
        columns[c] = median_filter(values, filter_window) if filter_window > 1 else values
    return RegularFrame(t0=float(start), dt=float(dt), columns=columns)


def split_frame(frame: RegularFrame, spec: SplitSpec) -> tuple[RegularFrame, RegularFrame]:
    """Chronological split; train owns the boundary sample and both endpoints of its window.

    Train covers ``train_hours`` inclusive of both ends (``train_hours*3600/dt + 1``
    samples); test takes the next ``test_hours*3600/dt`` samples.
    """
    n_train = int(round(spec.train_hours * 3600 / frame.dt)) + 1
    n_test = int(round(spec.test_hours * 3600 / frame.dt))
    if n_train + n_test > len(frame):
        raise DataError(
            f"frame spans {frame.duration / 3600:g} h, split {spec.label} needs "
            f"{spec.train_hours + spec.test_hours:g} h"
        )
    return frame.slice(0, n_train), frame.slice(n_train, n_train + n_test)
