"""Metric geolocation: image footprint, pixel-to-world transform, areas.

The footprint model is a square of side 2*h*tan(FOV/2) centered under the
camera; the image center maps to the camera pose. Columns grow toward +x
and rows toward -y before the yaw rotation (image row axis points down).
All functions are pure and stateless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cube import CameraMeta


@dataclass(frozen=True)
class WorldPoint:
    x: float
    y: float


@dataclass(frozen=True)
class Footprint:
    side_m: float
    area_m2: float


def image_footprint(h_m: float, fov_deg: float) -> Footprint:
    """Ground coverage of one image: side 2*h*tan(FOV/2), area side^2."""
    if not h_m > 0:
        raise ValueError(f"camera height must be > 0 m, got {h_m}")
    if not 0.0 < fov_deg < 180.0:
        raise ValueError(f"FOV must be in (0, 180) degrees, got {fov_deg}")
    side = 2.0 * h_m * math.tan(math.radians(fov_deg) / 2.0)
    return Footprint(side_m=side, area_m2=side * side)


def pixel_scale_m(dims: tuple[int, int], camera: CameraMeta) -> tuple[float, float]:
    """Meters per pixel along x (columns) and y (rows)."""
    width, height = dims
    side = image_footprint(camera.h_m, camera.fov_deg).side_m
    return side / width, side / height


def pixel_area_m2(dims: tuple[int, int], camera: CameraMeta) -> float:
    width, height = dims
    return image_footprint(camera.h_m, camera.fov_deg).area_m2 / (width * height)


def pixel_to_world(
    p: tuple[float, float], dims: tuple[int, int], camera: CameraMeta
) -> WorldPoint:
    """Map (col, row) pixel coordinates (sub-pixel allowed) to world meters."""
    xy = points_to_world(np.array([p], dtype=np.float64), dims, camera)
    return WorldPoint(float(xy[0, 0]), float(xy[0, 1]))


def points_to_world(
    points: np.ndarray, dims: tuple[int, int], camera: CameraMeta
) -> np.ndarray:
    """Vectorized pixel_to_world for an (N, 2) array of (col, row) points."""
    width, height = dims
    sx, sy = pixel_scale_m(dims, camera)
    pts = np.asarray(points, dtype=np.float64)
    lx = (pts[:, 0] - width / 2.0) * sx
    ly = -(pts[:, 1] - height / 2.0) * sy
    c, s = math.cos(camera.pose_yaw), math.sin(camera.pose_yaw)
    out = np.empty_like(pts)
    out[:, 0] = camera.pose_x + c * lx - s * ly
    out[:, 1] = camera.pose_y + s * lx + c * ly
    return out


def polygon_area_px(points: np.ndarray) -> float:
    """Absolute shoelace area of a closed polygon given as (N, 2) vertices."""
    return abs(signed_area(points))


def signed_area(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("polygon needs at least 3 vertices")
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(np.sum(x * yn - xn * y) / 2.0)


def region_area_m2(region, dims: tuple[int, int], camera: CameraMeta) -> float:
    """Metric area of a region: (outer - holes) px^2 scaled by the footprint."""
    px2 = polygon_area_px(region.outer) - sum(polygon_area_px(h) for h in region.holes)
    return px2 * pixel_area_m2(dims, camera)
