"""skytrack: waypoint path following with a learned steering regressor.

Generate landmark worlds and waypoint routes, build jitter-augmented training
datasets labeled with yaw-deviation angles, train a frozen-projection + two
layer regression head with Adam on MSE, roll the policy out in a closed-loop
fixed-step simulator, and score trajectories with waypoint-distance and
cross-track metrics.
"""

from .geometry import (
    Path,
    Point2,
    Pose,
    path_length,
    sum_angle_change,
    target_yaw_delta,
    wrap_angle,
)
from .world import LandmarkWorld, Observation, Rect, generate_world, render_observation

__all__ = [
    "Path",
    "Point2",
    "Pose",
    "path_length",
    "sum_angle_change",
    "target_yaw_delta",
    "wrap_angle",
    "LandmarkWorld",
    "Observation",
    "Rect",
    "generate_world",
    "render_observation",
]
