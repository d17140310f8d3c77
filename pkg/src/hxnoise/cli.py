"""Command-line pipeline: gen -> prep -> estimate / evaluate / sweep.

Exit codes: 0 success, 1 internal failure, 2 user or configuration error.
Diagnostics go to stderr; stdout stays empty unless ``--progress`` is set.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click

from . import io as hio
from .config import ConfigError, RunConfig, load_config
from .errors import HXError
from .estimate import EstimationProblem, estimate
from .model import ParameterVector
from .perturb import NoiseConfig
from .prep import build_frame, split_frame
from .sweep import evaluate as evaluate_params
from .sweep import run_seed, run_sweep
from .synth import ScenarioSpec, degrade, make_scenario

RAW_FILES = {"HE-2": "he2_raw.csv", "HE-1": "he1_raw.csv"}


class UserError(Exception):
    pass


def common_options(func):
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file.")
    @click.option("--dt", type=float, help="Sample interval in seconds (default 30).")
    @click.option("--sigma", type=float, help="Noise scale in °C for training targets.")
    @click.option("--seed", type=int, help="Master seed.")
    @click.option("--split", type=click.Choice(["D1", "D2", "D3"]), help="Train/test split preset.")
    @click.option("--jobs", type=int, help="Worker processes; never changes results.")
    @click.option("--out", "output", type=click.Path(), help="Output path.")
    @click.option("--progress", is_flag=True, default=None, help="Print progress to stdout.")
    @functools.wraps(func)
    def wrapper(config_path, **kwargs):
        extra = {k: kwargs.pop(k) for k in list(kwargs) if k not in _OVERRIDES}
        overrides = {k: v for k, v in kwargs.items() if v is not None}
        try:
            cfg = load_config(config_path, overrides)
            func(cfg, **extra)
        except (ConfigError, UserError, HXError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except click.exceptions.Exit:
            raise
        except Exception as exc:  # anything else is a bug
            click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


_OVERRIDES = {
    "dt", "sigma", "seed", "split", "jobs", "output", "progress",
    "input", "validation", "params", "predicted", "plots", "log", "scenario", "filter_window",
}


def _progress(cfg: RunConfig, message: str) -> None:
    if cfg.progress:
        click.echo(message)


def _require(value, what: str):
    if value is None:
        raise UserError(f"{what} is required (flag or config key)")
    return value


def _read_frame(path):
    if not Path(path).is_file():
        raise UserError(f"no such file: {path}")
    return hio.read_wide_csv(path)


def _problem(cfg: RunConfig, frame) -> EstimationProblem:
    return EstimationProblem(
        frame=frame,
        initial_params=ParameterVector.from_sequence(cfg.initial_params),
        bounds=tuple(tuple(b) for b in cfg.bounds),
        noise=NoiseConfig(cfg.sigma, run_seed(cfg.seed, cfg.sigma)),
        budget=cfg.budget,
        n_starts=cfg.n_starts,
    )


@click.group()
def main():
    """Gray-box heat-exchanger identification with noise-injected training targets."""


@main.command()
@common_options
@click.option("--scenario", help="misspecified (default) or well_specified.")
def gen(cfg: RunConfig):
    """Generate raw change-of-value telemetry (long CSV) for HE-2 and HE-1."""
    out_dir = Path(cfg.output or "data/raw")
    spec = ScenarioSpec(name=cfg.scenario, duration_hours=cfg.duration_hours, profile=cfg.profile, seed=cfg.seed)
    frames = make_scenario(spec)
    for name, frame in frames.items():
        raw = degrade(frame, spec, label=f"{name}-sensors")
        path = out_dir / RAW_FILES[name]
        hio.atomic_write(path, hio.render_long_csv(raw))
        _progress(cfg, f"wrote {path}")


@main.command()
@common_options
@click.option("--input", help="Raw long-format CSV.")
@click.option("--filter-window", type=int, help="Median filter window (odd, default 5).")
def prep(cfg: RunConfig):
    """Resample and median-filter raw telemetry into a wide CSV frame."""
    src = _require(cfg.input, "--input")
    if not Path(src).is_file():
        raise UserError(f"no such file: {src}")
    frame = build_frame(hio.read_long_csv(src), dt=cfg.dt, filter_window=cfg.filter_window)
    out = Path(cfg.output or Path(src).with_name(Path(src).stem + "_frame.csv"))
    hio.atomic_write(out, hio.render_wide_csv(frame))
    _progress(cfg, f"wrote {out} ({len(frame)} samples)")


def _iteration_logger(path):
    if path is None:
        return None, None
    lines = []

    def log(start, evaluations, j):
        lines.append(f"{start},{evaluations},{hio.fmt_float(j)}")

    return log, lines


@main.command(name="estimate")
@common_options
@click.option("--input", help="Wide CSV frame; its train split is fitted.")
@click.option("--log", help="Iteration log file (start_index,evaluations,J).")
def estimate_cmd(cfg: RunConfig):
    """Fit the model parameters on the training split."""
    frame = _read_frame(_require(cfg.input, "--input"))
    if cfg.dt != frame.dt:
        raise UserError(f"frame is sampled every {frame.dt:g} s but dt={cfg.dt:g}")
    train, _ = split_frame(frame, cfg.split_spec())
    problem = _problem(cfg, train)
    log, lines = _iteration_logger(cfg.log)
    result = estimate(problem, log=log, jobs=1 if log else cfg.jobs)
    payload = {
        "schema_version": 1,
        "command": "estimate",
        "config_digest": cfg.digest(),
        "initial_params": problem.initial_params.as_list(),
        "bounds": [list(b) for b in problem.bounds],
        "sigma": cfg.sigma,
        "seed": problem.noise.seed,
        "split": cfg.split_spec().label,
        "result": result.as_dict(),
    }
    out = Path(cfg.output or "estimate.json")
    hio.atomic_write(out, hio.dumps(payload))
    if lines is not None:
        hio.atomic_write(cfg.log, "".join(line + "\n" for line in lines))
    _progress(cfg, f"J={result.objective:.6g} params={result.params.as_list()}")


def _load_params(path) -> tuple[ParameterVector, int]:
    import json

    if not Path(path).is_file():
        raise UserError(f"no such file: {path}")
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, list):
        return ParameterVector.from_sequence(data), 1
    result = data.get("result", data)
    return ParameterVector.from_sequence(result["params"]), int(result.get("substeps", 1))


@main.command()
@common_options
@click.option("--input", help="Wide CSV frame with measured data.")
@click.option("--params", help="estimate JSON (or a JSON list of k1..k4) to simulate.")
@click.option("--predicted", help="Wide CSV of predictions to compare directly.")
@click.option("--validation", help="Optional validation frame (another exchanger).")
def evaluate(cfg: RunConfig):
    """Metrics per dataset and output channel."""
    measured = _read_frame(_require(cfg.input, "--input"))
    if cfg.predicted is not None:
        predicted = _read_frame(cfg.predicted)
        if len(predicted) != len(measured):
            raise UserError(f"frame lengths differ: {len(measured)} measured vs {len(predicted)} predicted")
        from .metrics import channel_metrics

        metrics = {"direct": channel_metrics(measured.outputs(), predicted.outputs())}
    else:
        params, substeps = _load_params(_require(cfg.params, "--params or --predicted"))
        train, test = split_frame(measured, cfg.split_spec())
        frames = {"train": train, "test": test}
        if cfg.validation is not None:
            frames["validation"] = _read_frame(cfg.validation)
        metrics = evaluate_params(params, frames, substeps)
    payload = {
        "schema_version": 1,
        "command": "evaluate",
        "metrics": {ds: {ch: m.as_dict() for ch, m in per.items()} for ds, per in metrics.items()},
    }
    out = Path(cfg.output or "metrics.json")
    hio.atomic_write(out, hio.dumps(payload))
    _progress(cfg, f"wrote {out}")


@main.command()
@common_options
@click.option("--input", help="Wide CSV frame (HE-2) split into train/test.")
@click.option("--validation", help="Wide CSV frame (HE-1) used for validation.")
@click.option("--plots", help="Directory for SVG charts.")
def sweep(cfg: RunConfig):
    """Noise-scale sweep: one fit per σ, clean-data metrics, selected σ."""
    frame = _read_frame(_require(cfg.input, "--input"))
    train, test = split_frame(frame, cfg.split_spec())
    frames = {"train": train}
    if len(test):
        frames["test"] = test
    if cfg.validation is not None:
        frames["validation"] = _read_frame(cfg.validation)
    report = run_sweep(_problem(cfg, train), cfg.grid, frames, cfg.seed, jobs=cfg.jobs)
    out = Path(cfg.output or "sweep.json")
    text = hio.dumps(report.as_dict(cfg.digest()))
    hio.atomic_write(out, text)
    if cfg.plots is not None:
        from .plots import write_sweep_plots

        write_sweep_plots(report, cfg.plots)
    _progress(cfg, f"selected sigma={report.selected_sigma} digest={hio.digest(text)[:16]}")


if __name__ == "__main__":
    main()
