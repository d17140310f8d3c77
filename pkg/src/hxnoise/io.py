"""File formats: long/wide CSV frames and canonical JSON, all written atomically.

Long CSV (raw telemetry)::

    time,channel,value

``time`` is integer/float epoch seconds or an ISO-8601 UTC timestamp.

Wide CSV (processed frame)::

    time,T_hi,T_ci,m_h,m_c,T_co,T_ho

Floats in CSV and JSON are written with 17 significant digits so files
round-trip bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DataError
from .model import CHANNELS
from .prep import IrregularSeries, RegularFrame

FORMAT_VERSION = 1


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys, 17-digit floats, and ``null`` for non-finite numbers."""
    return _render(obj, indent, 0) + "\n"


def _render(obj, indent, level) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or obj is True or obj is False:
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{_render(str(k), indent, 0)}: {_render(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_render(v, indent, 0) for v in obj) + "]"
        items = [pad + _render(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_schema() -> dict:
    """JSON Schema (draft 2020-12) of the sweep report."""
    from importlib import resources

    return json.loads(resources.files("hxnoise").joinpath("report_schema.json").read_text())


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_time(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"unparseable timestamp {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def render_long_csv(raw: Mapping[str, IrregularSeries]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "channel", "value"])
    for c in CHANNELS:
        s = raw[c]
        for t, v in zip(s.times, s.values):
            writer.writerow([fmt_float(t), c, fmt_float(v)])
    return buf.getvalue()


def read_long_csv(path) -> dict[str, IrregularSeries]:
    samples: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["time", "channel", "value"]:
            raise DataError(f"{path}: expected header time,channel,value")
        for lineno, row in enumerate(reader, start=2):
            channel = row["channel"].strip()
            if channel not in CHANNELS:
                raise DataError(f"{path}:{lineno}: unknown channel {channel!r}")
            try:
                value = float(row["value"])
            except (TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: bad value {row['value']!r}") from None
            samples.setdefault(channel, []).append((parse_time(row["time"]), value))
    out = {}
    for channel, pairs in samples.items():
        pairs.sort(key=lambda p: p[0])
        arr = np.array(pairs, dtype=np.float64)
        out[channel] = IrregularSeries(channel, arr[:, 0], arr[:, 1])
    return out


def render_wide_csv(frame: RegularFrame) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", *CHANNELS])
    times = frame.times
    cols = [frame.columns[c] for c in CHANNELS]
    for i in range(len(frame)):
        writer.writerow([fmt_float(times[i]), *(fmt_float(col[i]) for col in cols)])
    return buf.getvalue()


def read_wide_csv(path) -> RegularFrame:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "time":
            raise DataError(f"{path}: expected a header starting with 'time'")
        names = [h.strip() for h in header]
        missing = [c for c in CHANNELS if c not in names]
        if missing:
            raise DataError(f"{path}: missing channels {', '.join(missing)}")
        rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{path}: no data rows")
    try:
        times = np.array([parse_time(r[0]) for r in rows])
        data = np.array([[float(x) for x in r[1:]] for r in rows])
    except (ValueError, IndexError):
        raise DataError(f"{path}: malformed numeric row") from None
    if data.shape[1] != len(names) - 1:
        raise DataError(f"{path}: rows do not match the header width")
    if len(times) > 1:
        steps = np.diff(times)
        dt = float(steps[0])
        if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-6 * max(1.0, dt):
            raise DataError(f"{path}: time column is not uniformly spaced")
    else:
        dt = 30.0
    columns = {c: data[:, names.index(c) - 1] for c in CHANNELS}
    return RegularFrame(t0=float(times[0]), dt=dt, columns=columns)
