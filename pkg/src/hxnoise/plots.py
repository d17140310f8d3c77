"""Static SVG charts of sweep metrics against noise scale."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import atomic_write  # noqa: E402
from .model import OUTPUT_CHANNELS  # noqa: E402
from .sweep import SweepReport  # noqa: E402

PLOTTED = {"rmse": "RMSE [°C]", "mape": "MAPE [-]", "max_ae": "Max_AE [°C]", "r2": "R² [-]"}


def write_sweep_plots(report: SweepReport, directory) -> list[Path]:
    """One SVG per metric, a line per (dataset, channel); returns the written paths."""
    directory = Path(directory)
    written = []
    with plt.rc_context({"svg.hashsalt": "hxnoise", "svg.fonttype": "none"}):
        for key, label in PLOTTED.items():
            fig, ax = plt.subplots(figsize=(6, 4))
            for dataset in ("train", "test", "validation"):
                for channel in OUTPUT_CHANNELS:
                    xs, ys = [], []
                    for row in sorted(report.rows, key=lambda r: r.sigma):
                        if row.ok and dataset in row.metrics:
                            value = getattr(row.metrics[dataset][channel], key)
                            if value is not None:
                                xs.append(row.sigma)
                                ys.append(value)
                    if xs:
                        ax.plot(xs, ys, marker="o", label=f"{dataset} {channel}")
            ax.axvline(report.selected_sigma, color="grey", linestyle=":", linewidth=1)
            ax.set_xlabel("noise scale σ [°C] (0 = vanilla)")
            ax.set_ylabel(label)
            ax.legend(fontsize=7)
            fig.tight_layout()
            import io

            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
            plt.close(fig)
            path = directory / f"{key}.svg"
            atomic_write(path, buf.getvalue())
            written.append(path)
    return written
