"""
Regularized extragradient loops.

REMB:  y_n = J_{lam_n}(x_n)  (Busemann-regularized resolvent)
REMD:  y_n = K(x_n)          (squared-distance-regularized resolvent)
both:  x_{n+1} = prox_{lam_n F(y_n, .)}(x_n)

Iterates are carried in chart coordinates, where the manifold distance is the
Euclidean norm, so Er(n) = d(x_{n+1}, x_n) is exact up to rounding.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .equilibrium import (
    LogAffineBifunction,
    ResolventVariant,
    prox_chart,
    resolvent_busemann_chart,
    resolvent_distsq_chart,
)
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingTraceDataError,
    NonFiniteIterateError,
    WrongBifunctionError,
)
from .manifold import Manifold, Point

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 10 ** 6
STAGNATION_FACTOR = 64.0
TRACE_COLUMNS = ["n", "lambda", "dxy", "er", "elapsed_s"]


class Method(str, Enum):
    REMB = "remb"
    REMD = "remd"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidParameterError(f"unknown method '{value}', expected remb or remd") from None


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER_REACHED = "max_iter_reached"


@dataclass(frozen=True)
class StepSchedule:
    """
    The parameter sequence {lam_n}. A ``sequence`` schedule repeats its last
    value, which is also its limsup parameter.
    """

    values: tuple
    lower_bound: float
    limsup_param: float
    mode: str = "constant"

    def __post_init__(self):
        if not self.values:
            raise InvalidParameterError("a step schedule needs at least one value")
        for lam in self.values:
            if not math.isfinite(lam) or lam <= 0:
                raise InvalidParameterError(f"step sizes must be finite and > 0, got {lam}")
        if not (0 < self.lower_bound <= min(self.values)):
            raise InvalidParameterError(
                f"lower bound {self.lower_bound} must be in (0, min lam_n = {min(self.values)}]"
            )
        if self.limsup_param <= 0:
            raise InvalidParameterError("limsup parameter must be > 0")

    @classmethod
    def constant(cls, lam: float) -> "StepSchedule":
        lam = float(lam)
        return cls((lam,), lower_bound=lam, limsup_param=lam, mode="constant")

    @classmethod
    def sequence(cls, values: Sequence[float], lower_bound: Optional[float] = None) -> "StepSchedule":
        values = tuple(float(v) for v in values)
        if not values:
            raise InvalidParameterError("a step schedule needs at least one value")
        lower = min(values) if lower_bound is None else float(lower_bound)
        return cls(values, lower_bound=lower, limsup_param=values[-1], mode="sequence")

    def at(self, n: int) -> float:
        return self.values[min(n, len(self.values) - 1)]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = DEFAULT_MAX_ITER
    variant: ResolventVariant = ResolventVariant.CHARACTERIZATION
    record_trace: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidParameterError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) < 1:
            raise InvalidParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        object.__setattr__(self, "variant", ResolventVariant.parse(self.variant))


@dataclass
class IterateTrace:
    method: Method
    manifold: Manifold
    record_points: bool = True
    lambdas: List[float] = field(default_factory=list)
    dxy: List[float] = field(default_factory=list)
    er: List[float] = field(default_factory=list)
    elapsed: List[float] = field(default_factory=list)
    _xs: List[np.ndarray] = field(default_factory=list, repr=False)
    _ys: List[np.ndarray] = field(default_factory=list, repr=False)
    final_chart: Optional[np.ndarray] = field(default=None, repr=False)
    status: Optional[RunStatus] = None
    stop_reason: str = ""
    elapsed_s: float = 0.0

    def append(self, lam, u, v, dxy, er, elapsed):
        self.lambdas.append(lam)
        self.dxy.append(dxy)
        self.er.append(er)
        self.elapsed.append(elapsed)
        if self.record_points:
            self._xs.append(u)
            self._ys.append(v)

    @property
    def rows(self) -> int:
        return len(self.er)

    @property
    def iterations(self) -> int:
        """Index n of the row that triggered the stop (max_iter when none did)."""
        if self.status is RunStatus.MAX_ITER_REACHED:
            return self.rows
        return self.rows - 1

    @property
    def has_points(self) -> bool:
        return self.record_points and len(self._xs) == self.rows and self.final_chart is not None

    def _require_points(self):
        if not self.has_points:
            raise MissingTraceDataError("trace was recorded without iterates (record_trace=False)")

    def x_chart(self) -> np.ndarray:
        """Chart coordinates of x_0 .. x_{rows}, the last one being the returned iterate."""
        self._require_points()
        return np.vstack(self._xs + [self.final_chart])

    def y_chart(self) -> np.ndarray:
        self._require_points()
        return np.vstack(self._ys)

    def x(self, n: int) -> Point:
        return self.manifold.point_from_chart(self.x_chart()[n])

    def y(self, n: int) -> Point:
        return self.manifold.point_from_chart(self.y_chart()[n])

    @property
    def solution(self) -> Point:
        if self.final_chart is None:
            raise MissingTraceDataError("trace has no final iterate")
        return self.manifold.point_from_chart(self.final_chart)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "n": np.arange(self.rows, dtype=int),
            "lambda": self.lambdas,
            "dxy": self.dxy,
            "er": self.er,
            "elapsed_s": self.elapsed,
        }, columns=TRACE_COLUMNS)


def _check_compatible(F: LogAffineBifunction, m: Manifold, x0: Point) -> None:
    if F.manifold != m:
        raise DimensionMismatchError(f"bifunction lives on {F.manifold!r}, solver was given {m!r}")
    m.validate(x0)


def _extragradient(F, m, x0, sched, cfg, method, resolvent):
    _check_compatible(F, m, x0)
    trace = IterateTrace(method, m, record_points=cfg.record_trace)
    u = m.chart(x0.coords)
    floor_scale = STAGNATION_FACTOR * np.finfo(float).eps * math.sqrt(m.dim)
    previous_er = math.inf
    status, reason = RunStatus.MAX_ITER_REACHED, "max_iter"
    log.debug("%s start: F=%s lam0=%g tol=%g variant=%s", method.value, F.name, sched.at(0), cfg.tol,
              cfg.variant.value)
    start = time.perf_counter()
    for n in range(int(cfg.max_iter)):
        lam = sched.at(n)
        v = resolvent(F, lam, u, cfg.variant)
        w = prox_chart(F, lam, u, v)
        if not (m.chart_in_domain(v) and m.chart_in_domain(w)):
            raise NonFiniteIterateError(f"{method.value} left the valid domain at iteration {n}")
        dxy = float(np.linalg.norm(u - v))
        er = float(np.linalg.norm(w - u))
        trace.append(lam, u, v, dxy, er, time.perf_counter() - start)
        if er <= cfg.tol:
            status, reason = RunStatus.CONVERGED, "tolerance"
            u = w
            break
        if er <= floor_scale * (1.0 + float(np.max(np.abs(u)))) and er >= previous_er:
            status, reason = RunStatus.CONVERGED, "stagnation"
            u = w
            break
        previous_er = er
        u = w
    trace.elapsed_s = time.perf_counter() - start
    trace.final_chart = u
    trace.status, trace.stop_reason = status, reason
    log.debug("%s stop: status=%s reason=%s iterations=%d er=%.3e", method.value, status.value, reason,
              trace.iterations, trace.er[-1])
    return m.point_from_chart(u), trace


def solve_remb(F: LogAffineBifunction, m: Manifold, x0: Point, sched: StepSchedule, cfg: SolverConfig):
    return _extragradient(F, m, x0, sched, cfg, Method.REMB, resolvent_busemann_chart)


def solve_remd(F: LogAffineBifunction, m: Manifold, x0: Point, sched: StepSchedule, cfg: SolverConfig):
    return _extragradient(F, m, x0, sched, cfg, Method.REMD, resolvent_distsq_chart)


def solve(method, F, m, x0, sched, cfg):
    method = Method.parse(method)
    if method is Method.REMB:
        return solve_remb(F, m, x0, sched, cfg)
    return solve_remd(F, m, x0, sched, cfg)


def contraction_factors(method, lam: float):
    """(q, rho) with Er(n) = rho ||u_0|| q^n for the identity-matrix bifunction."""
    method = Method.parse(method)
    if method is Method.REMB:
        return 1.0 / (1.0 + lam), lam / (1.0 + lam)
    return (1.0 - lam / 2.0) / (1.0 + lam / 2.0), lam / (1.0 + lam / 2.0)


def iteration_count_oracle(F: LogAffineBifunction, method, lam: float, x0: Point, tol: float) -> int:
    """Smallest n with rho ||u_0|| |q|^n <= tol for the example52 recursion."""
    if F.name != "example52" or F.structure != "scaled_identity" or not np.array_equal(F.A, np.eye(F.dimension)):
        raise WrongBifunctionError(f"the iteration-count oracle only covers example52, got {F.name}")
    if not lam > 0 or not tol > 0:
        raise InvalidParameterError("lam and tol must be > 0")
    F.manifold.validate(x0)
    q, rho = contraction_factors(method, lam)
    q = abs(q)
    a = rho * float(np.linalg.norm(F.manifold.chart(x0.coords)))
    if a <= tol:
        return 0
    if q == 0.0:
        return 1
    n = max(0, math.ceil(math.log(a / tol) / math.log(1.0 / q)))
    while n > 0 and a * q ** (n - 1) <= tol:
        n -= 1
    while a * q ** n > tol:
        n += 1
    return n
