"""
Busemann functions along geodesic rays of the flat manifolds.

In chart coordinates the ray from z through x is u_z + t*e with
e = (u_x - u_z)/||u_x - u_z||, and

    b(y) = <u_x - u_z, u_z - u_y> / ||u_x - u_z||.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRayError, InvalidParameterError
from .manifold import Manifold, Point

DEGENERATE_RAY_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class GeodesicRay:
    """Unit-speed ray starting at ``origin`` and passing through ``through``."""

    manifold: Manifold
    origin: Point
    through: Point

    def __post_init__(self):
        self.manifold.validate(self.origin, self.through)
        length = self.manifold.dist(self.origin, self.through)
        if length < DEGENERATE_RAY_TOL:
            raise DegenerateRayError("ray origin and through-point coincide; direction is undefined")

    @property
    def length(self) -> float:
        """Distance from the origin to the through-point."""
        return self.manifold.dist(self.origin, self.through)

    def _chart_origin(self) -> np.ndarray:
        return self.manifold.chart(self.origin.coords)

    def _chart_offset(self) -> np.ndarray:
        return self.manifold.chart(self.through.coords) - self._chart_origin()

    def direction(self) -> np.ndarray:
        offset = self._chart_offset()
        return offset / np.linalg.norm(offset)

    def point_at(self, t: float) -> Point:
        """Point at arc length t >= 0 along the ray."""
        if not math.isfinite(t) or t < 0:
            raise InvalidParameterError(f"arc length must be a finite t >= 0, got {t}")
        return self.manifold.point_from_chart(self._chart_origin() + t * self.direction())


def _row_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def busemann_closed_chart(u_z: np.ndarray, u_x: np.ndarray, u_y: np.ndarray) -> np.ndarray:
    """Closed form on chart coordinates; rows of stacked arrays are independent cases."""
    offset = u_x - u_z
    return _row_dot(offset, u_z - u_y) / np.linalg.norm(offset, axis=-1)


def busemann_finite_t_chart(u_z: np.ndarray, u_x: np.ndarray, u_y: np.ndarray, t: float) -> np.ndarray:
    """
    d(y, gamma(t)) - t on chart coordinates, evaluated as (d^2 - t^2)/(d + t) so
    that large t does not cancel catastrophically.
    """
    offset = u_x - u_z
    e = offset / np.linalg.norm(offset, axis=-1, keepdims=True)
    w = u_y - u_z
    d = np.linalg.norm(w - t * e, axis=-1)
    return (_row_dot(w, w) - 2.0 * t * _row_dot(e, w)) / (d + t)


def busemann_closed(ray: GeodesicRay, y: Point) -> float:
    m = ray.manifold
    m.validate(y)
    return float(busemann_closed_chart(ray._chart_origin(), m.chart(ray.through.coords), m.chart(y.coords)))


def busemann_finite_t(ray: GeodesicRay, y: Point, t: float) -> float:
    if not math.isfinite(t) or t <= 0:
        raise InvalidParameterError(f"finite-ray parameter must be t > 0, got {t}")
    m = ray.manifold
    m.validate(y)
    return float(busemann_finite_t_chart(ray._chart_origin(), m.chart(ray.through.coords), m.chart(y.coords), t))


def busemann_pairing(manifold: Manifold, z: Point, x: Point, y: Point) -> float:
    """d(x, z) * b_{gamma_{z,x}}(y)."""
    ray = GeodesicRay(manifold, z, x)
    return ray.length * busemann_closed(ray, y)
