"""
Report artifacts: windowed-average and relative-superiority tables, heat-map
images with raw-value sidecars, and metric-vs-step curves.
"""
import csv
import logging
import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.colors import PowerNorm

from src.models.analysis import AccuracyHeatMap, DepthHeatMap
from src.models.metrics import HIGHER_IS_BETTER, METRIC_FIELDS
from src.models.run import META_SPLIT, RunLog
from src.services.training import read_run_log, windowed_average
from src.validation.errors import DomainError

logger = logging.getLogger(__name__)

AVERAGES_FILENAME = "windowed_averages.csv"
SUPERIORITY_FILENAME = "relative_superiority.csv"
META_METRICS = ["trainable_params", "runtime_s"]
TABLE_COLUMNS = METRIC_FIELDS + META_METRICS
DEFAULT_WINDOW = (20, 50)
FIGURE_DPI = 150

HeatMap = Union[DepthHeatMap, AccuracyHeatMap]


def relative_superiority(a: float, b: float, metric: str) -> float:
    """
    Percent by which b improves on the reference a. Lower-is-better quantities
    give 100 * (a - b) / a, accuracies 100 * (b - a) / a; negative means retrogression.
    """
    if a == 0:
        raise DomainError(f"reference value of '{metric}' is zero", field="a")
    if metric in HIGHER_IS_BETTER:
        return 100.0 * (b - a) / a
    return 100.0 * (a - b) / a


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", text).strip("_")


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def run_summary(
    log: RunLog,
    window: Tuple[float, float] = DEFAULT_WINDOW,
    split: Optional[str] = None,
    steps_per_epoch: Optional[int] = None,
) -> Dict[str, Optional[float]]:
    """Windowed average of every table metric the log carries, plus the meta values."""
    summary: Dict[str, Optional[float]] = {}
    for metric in METRIC_FIELDS:
        try:
            summary[metric] = windowed_average(log, metric, window[0], window[1], split, steps_per_epoch)
        except DomainError:
            summary[metric] = None
    for metric in META_METRICS:
        summary[metric] = log.last_value(META_SPLIT, metric)
    return summary


def write_averages(summaries: Mapping[str, Dict[str, Optional[float]]], path: Path) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["run"] + TABLE_COLUMNS)
        for run, summary in summaries.items():
            writer.writerow([run] + [_fmt(summary.get(c)) for c in TABLE_COLUMNS])
    return path


def write_superiority(
    summaries: Mapping[str, Dict[str, Optional[float]]],
    pairs: Sequence[Tuple[str, str]],
    path: Path,
) -> Path:
    """One row per (candidate, reference) pair; cells missing on either side stay empty."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["run", "relative_to"] + TABLE_COLUMNS)
        for candidate, reference in pairs:
            row = [candidate, reference]
            for c in TABLE_COLUMNS:
                a, b = summaries[reference].get(c), summaries[candidate].get(c)
                row.append("" if a is None or b is None or a == 0 else _fmt(relative_superiority(a, b, c)))
            writer.writerow(row)
    return path


def write_heatmap_csv(heatmap: HeatMap, path: Path) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        if isinstance(heatmap, DepthHeatMap):
            writer.writerow(["row"] + [_fmt(e) for e in heatmap.bin_edges()[:-1]])
            for r, values in enumerate(heatmap.values):
                writer.writerow([r] + [_fmt(v) for v in values])
        else:
            writer.writerow(["range_low", "range_high"] + [_fmt(e) for e in heatmap.error_edges[:-1]])
            for (lo, hi), values in zip(heatmap.ranges, heatmap.values):
                writer.writerow([_fmt(lo), _fmt(hi)] + [_fmt(v) for v in values])
    return path


def plot_heatmap(heatmap: HeatMap, path: Path, title: str = "") -> Path:
    """PNG with a power-norm colour scale; stored values are left untouched."""
    fig, ax = plt.subplots(figsize=(10, 4))
    vmax = max(float(heatmap.values.max()), 1e-12)
    if isinstance(heatmap, DepthHeatMap):
        norm = PowerNorm(gamma=0.5, vmin=0.0, vmax=vmax)
        extent = (0.0, heatmap.range_m, heatmap.values.shape[0], 0.0)
        image = ax.imshow(heatmap.values, aspect="auto", norm=norm, extent=extent, cmap="viridis")
        ax.set_xlabel("depth [m]")
        ax.set_ylabel("image row")
    else:
        norm = PowerNorm(gamma=heatmap.power_exponent, vmin=0.0, vmax=vmax)
        edges = heatmap.error_edges
        extent = (edges[0], edges[-1], heatmap.ranges[-1][1], heatmap.ranges[0][0])
        image = ax.imshow(heatmap.values, aspect="auto", norm=norm, extent=extent, cmap="viridis")
        ax.set_xlabel("prediction - ground truth [m]")
        ax.set_ylabel("ground-truth distance [m]")
    fig.colorbar(image, ax=ax, label="%")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_curves(run_logs: Mapping[str, RunLog], split: str, metric: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for run, log in run_logs.items():
        series = log.series(split, metric)
        if series:
            steps, values = zip(*series)
            ax.plot(steps, values, marker="o", markersize=3, label=run)
    ax.set_xlabel("step")
    ax.set_ylabel(metric)
    ax.set_title(split)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def emit_report(
    run_logs: Mapping[str, Union[RunLog, str, Path]],
    heatmaps: Optional[Mapping[str, HeatMap]],
    out_dir: Union[str, Path],
    window: Tuple[float, float] = DEFAULT_WINDOW,
    split: Optional[str] = None,
    pairs: Optional[Sequence[Tuple[str, str]]] = None,
    steps_per_epoch: Optional[int] = None,
) -> List[Path]:
    """
    Writes every report artifact under out_dir and returns their paths.
    pairs are (candidate, reference) run labels; by default every run is compared
    with the first one.
    """
    heatmaps = heatmaps or {}
    if not run_logs and not heatmaps:
        raise DomainError("nothing to report", field="run_logs")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = {run: (log if isinstance(log, RunLog) else read_run_log(log)) for run, log in run_logs.items()}
    written: List[Path] = []

    if logs:
        summaries = {run: run_summary(log, window, split, steps_per_epoch) for run, log in logs.items()}
        written.append(write_averages(summaries, out_dir / AVERAGES_FILENAME))
        runs = list(logs)
        if pairs is None:
            pairs = [(run, runs[0]) for run in runs[1:]]
        if pairs:
            written.append(write_superiority(summaries, pairs, out_dir / SUPERIORITY_FILENAME))

        curve_splits = sorted({s for log in logs.values() for s in log.splits() if s != META_SPLIT})
        for s in curve_splits:
            metrics = sorted({m for log in logs.values() for m in log.metric_names(s)})
            for metric in metrics:
                written.append(plot_curves(logs, s, metric, out_dir / f"curve_{_slug(s)}_{_slug(metric)}.png"))

    for name in sorted(heatmaps):
        heatmap = heatmaps[name]
        kind = "depth" if isinstance(heatmap, DepthHeatMap) else "accuracy"
        stem = f"heatmap_{kind}_{_slug(name)}"
        written.append(plot_heatmap(heatmap, out_dir / f"{stem}.png", title=name))
        written.append(write_heatmap_csv(heatmap, out_dir / f"{stem}.csv"))

    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written
