"""Run configuration: JSON file plus command-line overrides.

Every key has a default; unknown keys are rejected. Path keys locate files
and are left out of the configuration digest, so moving a run to another
directory does not change its report.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .estimate import DEFAULT_BOUNDS, DEFAULT_BUDGET, DEFAULT_N_STARTS
from .io import digest, dumps
from .model import INITIAL_GUESS
from .prep import DEFAULT_DT, DEFAULT_FILTER_WINDOW, SPLITS, SplitSpec
from .sweep import DEFAULT_GRID
from .synth import PROFILES, SCENARIOS

PATH_KEYS = ("input", "validation", "output", "params", "predicted", "plots", "log")
DEFAULT_SEED = 2022


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "misspecified"
    duration_hours: float = 140.0
    profile: str = "steps"
    dt: float = DEFAULT_DT
    filter_window: int = DEFAULT_FILTER_WINDOW
    split: object = "D2"
    bounds: list = field(default_factory=lambda: [list(b) for b in DEFAULT_BOUNDS])
    initial_params: list = field(default_factory=INITIAL_GUESS.as_list)
    budget: int = DEFAULT_BUDGET
    n_starts: int = DEFAULT_N_STARTS
    sigma: float = 0.0
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    seed: int = DEFAULT_SEED
    jobs: int = 1
    progress: bool = False
    input: Optional[str] = None
    validation: Optional[str] = None
    output: Optional[str] = None
    params: Optional[str] = None
    predicted: Optional[str] = None
    plots: Optional[str] = None
    log: Optional[str] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {', '.join(SCENARIOS)}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; expected one of {', '.join(PROFILES)}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.filter_window < 1 or self.filter_window % 2 == 0:
            raise ConfigError("filter_window must be a positive odd integer")
        if self.sigma < 0 or any(s < 0 for s in self.grid):
            raise ConfigError("noise scales must be non-negative")
        if not self.grid:
            raise ConfigError("grid must be non-empty")
        if self.budget < 1 or self.n_starts < 1 or self.jobs < 1:
            raise ConfigError("budget, n_starts and jobs must be >= 1")
        if len(self.bounds) != 4 or any(len(b) != 2 for b in self.bounds):
            raise ConfigError("bounds must be four [lower, upper] pairs")
        if len(self.initial_params) != 4:
            raise ConfigError("initial_params must have four values")
        self.split_spec()

    def split_spec(self) -> SplitSpec:
        if isinstance(self.split, str):
            if self.split not in SPLITS:
                raise ConfigError(f"unknown split {self.split!r}; expected D1, D2, D3 or an object")
            return SPLITS[self.split]
        if isinstance(self.split, dict) and set(self.split) <= {"train_hours", "test_hours"}:
            try:
                return SplitSpec(float(self.split["train_hours"]), float(self.split.get("test_hours", 0.0)))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad split: {exc}") from None
        raise ConfigError("split must be D1, D2, D3 or {train_hours, test_hours}")

    def science(self) -> dict:
        """Settings that determine results (everything but file locations and verbosity)."""
        d = asdict(self)
        for key in (*PATH_KEYS, "progress", "jobs"):
            d.pop(key)
        return d

    def digest(self) -> str:
        return digest(dumps(self.science()))


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
