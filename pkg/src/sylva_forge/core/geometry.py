"""
Shared geometry primitives.

World space is metric with +z up. Points travel through the toolkit as
numpy arrays (`(N, 2)` or `(N, 3)` float64); the small frozen dataclasses
here describe extents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from sylva_forge.core.exceptions import ForgeValidationError

Vec2 = tuple[float, float]
Vec3 = tuple[float, float, float]

UP = np.array([0.0, 0.0, 1.0])


def _check_finite(*values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise ForgeValidationError(f"Non-finite coordinate in {values}")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in world XY."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        _check_finite(self.x0, self.y0, self.x1, self.y1)
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ForgeValidationError(f"Rect min must not exceed max: {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def depth(self) -> float:
        return self.y1 - self.y0

    @property
    def center(self) -> Vec2:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.atleast_2d(xy)
        return (
            (xy[:, 0] >= self.x0) & (xy[:, 0] <= self.x1)
            & (xy[:, 1] >= self.y0) & (xy[:, 1] <= self.y1)
        )


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box; min <= max componentwise."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        _check_finite(*self.min, *self.max)
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ForgeValidationError(f"Aabb min must not exceed max: {self}")

    @classmethod
    def of_points(cls, xyz: np.ndarray) -> Aabb:
        if len(xyz) == 0:
            raise ForgeValidationError("Cannot bound an empty point set")
        lo = xyz.min(axis=0)
        hi = xyz.max(axis=0)
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    @property
    def footprint(self) -> Rect:
        return Rect(self.min[0], self.min[1], self.max[0], self.max[1])


def twist_rotation(axis_xy: Vec2, angle: float) -> Rotation:
    """Rotation tilting +z by `angle` around the horizontal unit axis `axis_xy`."""
    axis = np.array([axis_xy[0], axis_xy[1], 0.0])
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        return Rotation.identity()
    return Rotation.from_rotvec(axis / norm * angle)


def spin_rotation(angle: float) -> Rotation:
    """Rotation about +z."""
    return Rotation.from_rotvec(UP * angle)
