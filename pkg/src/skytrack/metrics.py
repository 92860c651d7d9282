"""Trajectory scoring.

Three path-following metrics plus the held-out angle MSE:
- mean waypoint minimum distance: closest approach to each waypoint, averaged
  over waypoints.
- mean cross-track distance: for each trajectory sample, distance to the
  segment joining its two closest waypoints (ties broken toward the lower
  index; distance clamped to the endpoints), averaged over the trajectory.
- sum of angle change of the reference path, a difficulty proxy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Sequence

import numpy as np

from .augmentation import Sample, normalize_features
from .geometry import Path, Point2, point_segment_distance, sum_angle_change
from .learner import RegressorModel, forward_raw
from .simulator import TrajectoryLog


def _positions(trajectory) -> list[Point2]:
    if isinstance(trajectory, TrajectoryLog):
        return trajectory.positions
    return list(trajectory)


def mean_waypoint_min_distance(path: Path, trajectory) -> float:
    """Average over waypoints of the minimum distance to any trajectory point."""
    positions = _positions(trajectory)
    if not positions:
        raise ValueError("empty trajectory")
    t = np.array([[p.x, p.y] for p in positions])
    w = np.array([[p.x, p.y] for p in path.waypoints])
    d = np.linalg.norm(w[:, None, :] - t[None, :, :], axis=2)
    return float(d.min(axis=1).mean())


def mean_cross_track_distance(path: Path, trajectory) -> float:
    """Average point-to-segment distance to the segment between each sample's
    two closest waypoints."""
    positions = _positions(trajectory)
    if not positions:
        raise ValueError("empty trajectory")
    wps = path.waypoints
    w = np.array([[p.x, p.y] for p in wps])
    total = 0.0
    for p in positions:
        d = np.hypot(w[:, 0] - p.x, w[:, 1] - p.y)
        nearest = np.argsort(d, kind="stable")[:2]
        total += point_segment_distance(p, wps[nearest[0]], wps[nearest[1]])
    return total / len(positions)


def angle_mse(model: RegressorModel, test_set: Sequence[Sample]) -> float:
    """Mean squared error of the raw (unwrapped) predictions on labeled samples."""
    if not test_set:
        raise ValueError("empty test set")
    if model.feature_mean is None or model.feature_std is None:
        raise ValueError("model carries no normalization statistics")
    sse = 0.0
    for sample in test_set:
        x = normalize_features(model.feature_mean, model.feature_std, sample.observation.features)
        sse += (forward_raw(model, x) - sample.target) ** 2
    return sse / len(test_set)


@dataclass
class MetricsReport:
    path_id: str
    mwmd: float
    mctd: float
    sac: float
    termination: str
    angle_mse: float | None = None

    def to_dict(self) -> dict:
        return {
            "path_id": self.path_id,
            "mwmd": self.mwmd,
            "mctd": self.mctd,
            "sac": self.sac,
            "termination": self.termination,
            "angle_mse": self.angle_mse,
        }


def evaluate(
    path: Path,
    trajectory: TrajectoryLog,
    test_set: Sequence[Sample] | None = None,
    model: RegressorModel | None = None,
) -> MetricsReport:
    """Bundle the three trajectory metrics, plus angle MSE when a labeled
    test set and model are supplied."""
    mse = None
    if test_set is not None and model is not None:
        mse = angle_mse(model, test_set)
    return MetricsReport(
        path_id=path.id,
        mwmd=mean_waypoint_min_distance(path, trajectory),
        mctd=mean_cross_track_distance(path, trajectory),
        sac=sum_angle_change(path),
        termination=trajectory.termination,
        angle_mse=mse,
    )


def save_report(report: MetricsReport, file: FilePath | str) -> None:
    FilePath(file).write_text(json.dumps(report.to_dict(), sort_keys=True, indent=1))
