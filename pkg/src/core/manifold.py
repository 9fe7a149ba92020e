"""
Hadamard-manifold primitives for the two flat models used by the solvers.

``LogOrthant(N)`` is the positive orthant R^N_{++} with metric
G(x) = diag(x_1^{-2}, ..., x_N^{-2}). The componentwise logarithm u = ln x is
a global isometry onto Euclidean R^N, so the exponential and logarithmic maps
have closed forms:

    exp_x(v)_i = x_i * exp(v_i / x_i)
    log_x(y)_i = x_i * ln(y_i / x_i)

``Euclidean(N)`` is plain R^N and is kept as a cross-check for the
zero-curvature identities. Both expose their isometric chart through
``chart``/``unchart``; the solvers iterate in chart coordinates.
"""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError, InvalidPointError

LOG_ORTHANT_MIN = 1e-300
LOG_ORTHANT_MAX = 1e300
CHART_LIMIT = math.log(LOG_ORTHANT_MAX)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(self.coords))

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def __len__(self):
        return self.dim

    def allclose(self, other: "Point", rtol: float = 1e-10, atol: float = 1e-10) -> bool:
        return self.dim == other.dim and bool(np.allclose(self.coords, other.coords, rtol=rtol, atol=atol))

    def __repr__(self):
        return f"Point({np.array2string(self.coords, precision=6, threshold=8)})"


@dataclass(frozen=True, eq=False)
class Tangent:
    base: Point
    vec: np.ndarray

    def __post_init__(self):
        vec = _frozen(self.vec)
        if vec.shape[0] != self.base.dim:
            raise DimensionMismatchError(
                f"tangent vector has length {vec.shape[0]}, base point has dimension {self.base.dim}"
            )
        if not np.all(np.isfinite(vec)):
            raise InvalidPointError("tangent vector components must be finite")
        object.__setattr__(self, "vec", vec)

    def __repr__(self):
        return f"Tangent(base={self.base!r}, vec={np.array2string(self.vec, precision=6, threshold=8)})"


def _as_vec(v) -> np.ndarray:
    if isinstance(v, Tangent):
        return v.vec
    return np.asarray(v, dtype=float).reshape(-1)


class Manifold(metaclass=abc.ABCMeta):
    """
    Interface shared by the supported flat Hadamard manifolds.
    Subclasses provide the chart, the metric diagonal and the point domain.
    """

    name = "manifold"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise InvalidParameterError(f"manifold dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    def __repr__(self):
        return f"{type(self).__name__}({self.dim})"

    def __eq__(self, other):
        return type(self) is type(other) and self.dim == other.dim

    def __hash__(self):
        return hash((type(self).__name__, self.dim))

    @abc.abstractmethod
    def chart(self, coords: np.ndarray) -> np.ndarray:
        """Coordinates of the isometric Euclidean chart."""

    @abc.abstractmethod
    def unchart(self, u: np.ndarray) -> np.ndarray:
        """Inverse of ``chart``."""

    @abc.abstractmethod
    def metric_diag(self, x: Point) -> np.ndarray:
        """Diagonal of the metric tensor G(x)."""

    @abc.abstractmethod
    def _check_domain(self, coords: np.ndarray) -> None:
        pass

    @abc.abstractmethod
    def log_map(self, x: Point, y: Point) -> Tangent:
        """Inverse exponential map exp_x^{-1} y."""

    @abc.abstractmethod
    def exp_map(self, v: Tangent) -> Point:
        """Exponential map exp_x v with x = v.base."""

    def point(self, coords) -> Point:
        p = Point(coords)
        self.validate(p)
        return p

    def validate(self, *points: Point) -> None:
        for p in points:
            if p.dim != self.dim:
                raise DimensionMismatchError(f"{self!r} expects points of length {self.dim}, got {p.dim}")
            self._check_domain(p.coords)

    def point_from_chart(self, u: np.ndarray) -> Point:
        return self.point(self.unchart(np.asarray(u, dtype=float)))

    def chart_in_domain(self, u: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(u)))

    def dist(self, x: Point, y: Point) -> float:
        self.validate(x, y)
        return float(np.linalg.norm(self.chart(x.coords) - self.chart(y.coords)))

    def sq_dist(self, x: Point, y: Point) -> float:
        """Squared distance with compensated summation."""
        self.validate(x, y)
        diff = self.chart(x.coords) - self.chart(y.coords)
        return math.fsum(diff * diff)

    def inner(self, x: Point, u, v) -> float:
        self.validate(x)
        u, v = _as_vec(u), _as_vec(v)
        if u.shape[0] != self.dim or v.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"inner product at a point of dimension {self.dim} got vectors of length {u.shape[0]} and {v.shape[0]}"
            )
        return float(np.sum(u * v * self.metric_diag(x)))

    def norm(self, x: Point, v) -> float:
        return math.sqrt(max(self.inner(x, v, v), 0.0))

    def zero_tangent(self, x: Point) -> Tangent:
        self.validate(x)
        return Tangent(x, np.zeros(self.dim))

    def geodesic(self, x: Point, y: Point, t: float) -> Point:
        """
        Minimal geodesic with geodesic(x, y, 0) = x and geodesic(x, y, 1) = y.
        Values t > 1 continue along the ray from x through y.
        """
        self.validate(x, y)
        if not math.isfinite(t) or t < 0:
            raise InvalidParameterError(f"geodesic parameter must be a finite t >= 0, got {t}")
        ux, uy = self.chart(x.coords), self.chart(y.coords)
        return self.point_from_chart((1.0 - t) * ux + t * uy)

    def random_point(self, rng: np.random.Generator, scale: float = 3.0) -> Point:
        """Point whose chart coordinates are uniform in [-scale, scale]."""
        return self.point_from_chart(rng.uniform(-scale, scale, size=self.dim))


class LogOrthant(Manifold):
    name = "log-orthant"

    def chart(self, coords):
        return np.log(coords)

    def unchart(self, u):
        return np.exp(u)

    def metric_diag(self, x):
        return 1.0 / (x.coords * x.coords)

    def chart_in_domain(self, u):
        return bool(np.all(np.isfinite(u)) and np.max(np.abs(u)) < CHART_LIMIT)

    def _check_domain(self, coords):
        if not np.all(np.isfinite(coords)):
            raise InvalidPointError("log-orthant coordinates must be finite")
        if np.any(coords <= LOG_ORTHANT_MIN) or np.any(coords >= LOG_ORTHANT_MAX):
            raise InvalidPointError(
                f"log-orthant coordinates must lie in ({LOG_ORTHANT_MIN:g}, {LOG_ORTHANT_MAX:g})"
            )

    def log_map(self, x, y):
        self.validate(x, y)
        return Tangent(x, x.coords * np.log(y.coords / x.coords))

    def exp_map(self, v):
        self.validate(v.base)
        x = v.base.coords
        return self.point(x * np.exp(v.vec / x))


class Euclidean(Manifold):
    name = "euclidean"

    def chart(self, coords):
        return np.asarray(coords, dtype=float)

    def unchart(self, u):
        return np.asarray(u, dtype=float)

    def metric_diag(self, x):
        return np.ones(self.dim)

    def _check_domain(self, coords):
        if not np.all(np.isfinite(coords)):
            raise InvalidPointError("euclidean coordinates must be finite")

    def log_map(self, x, y):
        self.validate(x, y)
        return Tangent(x, y.coords - x.coords)

    def exp_map(self, v):
        self.validate(v.base)
        return self.point(v.base.coords + v.vec)


MANIFOLDS = {
    LogOrthant.name: LogOrthant,
    Euclidean.name: Euclidean,
}


def manifold_from_name(name: str, dim: int) -> Manifold:
    try:
        cls = MANIFOLDS[name.strip().lower()]
    except KeyError:
        raise InvalidParameterError(f"unknown manifold '{name}', expected one of {sorted(MANIFOLDS)}") from None
    return cls(dim)
