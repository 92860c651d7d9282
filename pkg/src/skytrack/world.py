"""Synthetic observable environment: a landmark map and a deterministic renderer.

The renderer stands in for an onboard camera. Each landmark carries a fixed
unit-norm signature vector; an observation accumulates signature * intensity
into bearing bins spanning the field of view, with intensity = 1 / (1 + range).
The resulting feature vector is pose-discriminative along a route corridor
without any image rasterization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FilePath

import numpy as np

from .geometry import Pose, wrap_angle


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in world coordinates."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("empty bounds")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def inflated(self, margin_x: float, margin_y: float) -> "Rect":
        return Rect(
            self.xmin - margin_x,
            self.ymin - margin_y,
            self.xmax + margin_x,
            self.ymax + margin_y,
        )

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax


@dataclass(frozen=True)
class LandmarkWorld:
    """Immutable landmark map: positions (N, 2) and unit-norm signatures (N, S)."""

    positions: np.ndarray
    signatures: np.ndarray
    bounds: Rect
    seed: int

    def __post_init__(self) -> None:
        if self.positions.ndim != 2 or self.positions.shape[0] < 1:
            raise ValueError("world requires at least one landmark")
        if self.signatures.shape[0] != self.positions.shape[0]:
            raise ValueError("positions/signatures count mismatch")

    @property
    def signature_dim(self) -> int:
        return int(self.signatures.shape[1])


@dataclass(frozen=True)
class Observation:
    """Fixed-length feature vector rendered at a pose: B bearing bins x S channels."""

    features: np.ndarray
    fov: float


def generate_world(
    seed: int, n_landmarks: int, signature_dim: int, bounds: Rect
) -> LandmarkWorld:
    """Seeded world synthesis: uniform landmark positions, unit-sphere signatures."""
    if n_landmarks < 1:
        raise ValueError("n_landmarks must be >= 1")
    if signature_dim < 1:
        raise ValueError("signature_dim must be >= 1")
    rng = np.random.default_rng(seed)
    positions = np.column_stack(
        [
            rng.uniform(bounds.xmin, bounds.xmax, size=n_landmarks),
            rng.uniform(bounds.ymin, bounds.ymax, size=n_landmarks),
        ]
    )
    # Non-negative orthant of the unit sphere: channels read as intensities.
    signatures = np.abs(rng.normal(size=(n_landmarks, signature_dim)))
    signatures /= np.linalg.norm(signatures, axis=1, keepdims=True)
    return LandmarkWorld(positions, signatures, bounds, seed)


def render_observation(
    world: LandmarkWorld, pose: Pose, bins: int, fov: float
) -> Observation:
    """Render the bearing-binned signature vector seen from a pose.

    A landmark at relative bearing beta contributes signature / (1 + range),
    split linearly between the two bins whose centers bracket beta, when
    |beta| <= fov / 2, else nothing. The linear split makes the features
    continuous in pose, which the downstream regressor needs to generalize;
    kernel mass falling outside the outermost bin centers stays in the edge
    bin, and anything beyond the FOV contributes exactly 0.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not (0.0 < fov <= 2.0 * math.pi):
        raise ValueError("fov must lie in (0, 2*pi]")
    s = world.signature_dim
    half = fov / 2.0
    bin_width = fov / bins
    dx = world.positions[:, 0] - pose.position.x
    dy = world.positions[:, 1] - pose.position.y
    raw = np.arctan2(dy, dx) - pose.yaw
    beta = np.arctan2(np.sin(raw), np.cos(raw))
    beta = np.where(beta == -math.pi, math.pi, beta)
    visible = np.abs(beta) <= half
    # continuous bin coordinate: 0 at the center of bin 0
    u = np.clip((beta[visible] + half) / bin_width - 0.5, 0.0, bins - 1.0)
    lower = np.minimum(np.floor(u).astype(int), bins - 2) if bins > 1 else np.zeros(u.shape, dtype=int)
    frac = u - lower
    contribution = world.signatures[visible] * (
        1.0 / (1.0 + np.hypot(dx[visible], dy[visible]))
    )[:, None]
    grid = np.zeros((bins, s))
    np.add.at(grid, lower, contribution * (1.0 - frac)[:, None])
    if bins > 1:
        np.add.at(grid, lower + 1, contribution * frac[:, None])
    return Observation(grid.reshape(bins * s), fov)


def save_world(world: LandmarkWorld, file: FilePath | str) -> None:
    doc = {
        "seed": world.seed,
        "bounds": [world.bounds.xmin, world.bounds.ymin, world.bounds.xmax, world.bounds.ymax],
        "landmarks": [
            {"position": world.positions[i].tolist(), "signature": world.signatures[i].tolist()}
            for i in range(world.positions.shape[0])
        ],
    }
    FilePath(file).write_text(json.dumps(doc, sort_keys=True, indent=1))


def load_world(file: FilePath | str) -> LandmarkWorld:
    doc = json.loads(FilePath(file).read_text())
    positions = np.array([lm["position"] for lm in doc["landmarks"]], dtype=float)
    signatures = np.array([lm["signature"] for lm in doc["landmarks"]], dtype=float)
    bounds = Rect(*doc["bounds"])
    return LandmarkWorld(positions, signatures, bounds, int(doc["seed"]))
