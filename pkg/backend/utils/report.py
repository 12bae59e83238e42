"""
Aggregate trajectories of several optimizers into mean-regret curves.

Each run's incumbent regret is a step function of the x-axis (cumulative
budget or simulated time). It is sampled on a common grid, then averaged per
optimizer with the standard error of the mean.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd

from utils.trajectory import Trajectory, read_manifest, read_trajectory, trajectory_files

logger = logging.getLogger(__name__)

XAxis = Literal["cum_budget", "sim_time"]
GridScale = Literal["linear", "log"]

# Keys of the manifest config that must agree for runs to be comparable
BENCHMARK_KEYS = ("benchmark", "n_categorical", "n_continuous", "min_budget", "max_budget")

FLOAT_FORMAT = "%.10g"


class ReportError(ValueError):
    pass


@dataclass
class RunGroup:
    optimizer: str
    benchmark: Dict
    trajectories: List[Trajectory]
    source: Path


def load_run_dir(run_dir: Path) -> RunGroup:
    run_dir = Path(run_dir)
    config = read_manifest(run_dir)["config"]
    files = trajectory_files(run_dir)
    if not files:
        raise ReportError(f"{run_dir}: no trajectory files")
    return RunGroup(
        optimizer=config["optimizer"],
        benchmark={k: config.get(k) for k in BENCHMARK_KEYS},
        trajectories=[read_trajectory(f) for f in files],
        source=run_dir,
    )


def check_same_benchmark(groups: Sequence[RunGroup]):
    reference = groups[0]
    for group in groups[1:]:
        if group.benchmark != reference.benchmark:
            raise ReportError(
                f"mixed benchmarks: {reference.source} has {reference.benchmark}, "
                f"{group.source} has {group.benchmark}"
            )


def incumbent_curve(trajectory: Trajectory, x_axis: XAxis = "cum_budget"):
    """Event x-positions and incumbent regrets, in event order."""
    incumbents = trajectory.incumbents()
    xs = np.array([getattr(r, x_axis) for r in incumbents], dtype=float)
    regrets = np.array([np.nan if r.regret is None else r.regret for r in incumbents], dtype=float)
    return xs, regrets


def step_interpolate(xs: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Value of the latest event with x <= t for every grid point t; NaN before the first event."""
    idx = np.searchsorted(xs, grid, side="right") - 1
    out = np.full(len(grid), np.nan)
    seen = idx >= 0
    out[seen] = values[idx[seen]]
    return out


def make_grid(x_max: float, n_points: int, scale: GridScale = "linear",
              x_min: Optional[float] = None) -> np.ndarray:
    if n_points < 1:
        raise ReportError("the grid needs at least one point")
    if not np.isfinite(x_max) or x_max <= 0:
        raise ReportError(f"grid end must be positive, got {x_max}")
    if scale == "linear":
        start = x_min if x_min is not None else x_max / n_points
        grid = np.linspace(start, x_max, n_points)
    elif scale == "log":
        start = x_min if x_min is not None else x_max / 1000.0
        if start <= 0:
            raise ReportError("a log grid needs a positive start")
        grid = np.geomspace(start, x_max, n_points)
    else:
        raise ReportError(f"unknown grid scale '{scale}'")
    if start > x_max:
        raise ReportError(f"grid start {start} exceeds grid end {x_max}")
    return np.unique(grid)


def sem(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def aggregate(groups: Sequence[RunGroup], grid: np.ndarray, x_axis: XAxis = "cum_budget") -> pd.DataFrame:
    """
    Wide table: one row per grid point, mean/sem/runs columns per optimizer.

    A grid point where some run has no incumbent yet gets an empty mean and sem.
    """
    runs_by_optimizer: Dict[str, List[Trajectory]] = {}
    for group in groups:
        runs_by_optimizer.setdefault(group.optimizer, []).extend(group.trajectories)

    table = {"grid": grid}
    for optimizer in sorted(runs_by_optimizer):
        curves = np.vstack([
            step_interpolate(*incumbent_curve(t, x_axis), grid) for t in runs_by_optimizer[optimizer]
        ])
        complete = ~np.isnan(curves).any(axis=0)
        means = np.where(complete, curves.mean(axis=0), np.nan)
        sems = np.array([sem(curves[:, i]) if complete[i] else np.nan for i in range(len(grid))])
        table[f"{optimizer}_mean"] = means
        table[f"{optimizer}_sem"] = sems
        table[f"{optimizer}_runs"] = np.full(len(grid), curves.shape[0], dtype=int)
        logger.info("%s: %d runs aggregated", optimizer, curves.shape[0])
    return pd.DataFrame(table)


def build_report(run_dirs: Sequence[Path],
                 n_points: int = 50,
                 x_axis: XAxis = "cum_budget",
                 scale: GridScale = "linear",
                 x_max: Optional[float] = None,
                 x_min: Optional[float] = None) -> pd.DataFrame:
    if not run_dirs:
        raise ReportError("no run directories given")
    groups = [load_run_dir(d) for d in run_dirs]
    check_same_benchmark(groups)
    if x_max is None:
        ends = [incumbent_curve(t, x_axis)[0] for g in groups for t in g.trajectories]
        x_max = max((float(xs[-1]) for xs in ends if len(xs)), default=0.0)
    grid = make_grid(x_max, n_points, scale, x_min)
    return aggregate(groups, grid, x_axis)


def to_csv(report: pd.DataFrame) -> str:
    return report.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
