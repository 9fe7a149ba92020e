"""
Bifunctions, regularized resolvents and the proximal step.

A log-affine bifunction is F(x, y) = <A u, w - u> with u, w the chart
coordinates of x, y (componentwise ln on the log-orthant). Because both
implemented manifolds are flat, the Busemann-regularized resolvent reduces to
the linear system (I + lam A) v = u, the squared-distance one to
(I + (lam/2) A) v = u, and the proximal step to w = u_n - lam A v_n.
"""
from __future__ import annotations

import abc
import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy import linalg as sla

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    SingularSystemError,
    VariantMismatchError,
)
from .manifold import LogOrthant, Manifold, Point

log = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator], Point]


class ResolventVariant(str, Enum):
    CHARACTERIZATION = "characterization"
    PAPER_LITERAL_EX51 = "paper-literal"

    @classmethod
    def parse(cls, value) -> "ResolventVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidParameterError(
                f"unknown resolvent variant '{value}', expected one of {[v.value for v in cls]}"
            ) from None


class Bifunction(metaclass=abc.ABCMeta):
    """F: M x M -> R with F(x, x) = 0. Only log-affine instances are implemented."""

    manifold: Manifold
    name: str

    @property
    def dimension(self) -> int:
        return self.manifold.dim

    @abc.abstractmethod
    def eval(self, x: Point, y: Point) -> float:
        pass


class LogAffineBifunction(Bifunction):
    def __init__(self, A, manifold: Optional[Manifold] = None, name: str = "matrix", structure=None):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"bifunction matrix must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidParameterError("bifunction matrix entries must be finite")
        n = A.shape[0]
        manifold = manifold if manifold is not None else LogOrthant(n)
        if manifold.dim != n:
            raise DimensionMismatchError(f"matrix of size {n} on a manifold of dimension {manifold.dim}")
        A.setflags(write=False)
        self.A = A
        self.manifold = manifold
        self.name = name
        self._structure = structure if structure is not None else self._detect_structure(A)
        self._factors = {}
        self._lock = threading.Lock()

    @staticmethod
    def _detect_structure(A):
        alpha = A[0, 0]
        if np.array_equal(A, alpha * np.eye(A.shape[0])):
            return ("scaled_identity", float(alpha))
        if np.array_equal(A, A.T):
            # alpha c c^T: exactly one eigenvalue above round-off
            eigvals, eigvecs = np.linalg.eigh(A)
            scale = float(np.max(np.abs(eigvals)))
            significant = np.flatnonzero(np.abs(eigvals) > 1e-12 * scale * A.shape[0])
            if len(significant) == 1:
                k = int(significant[0])
                c = eigvecs[:, k].copy()
                alpha = float(eigvals[k])
                if np.allclose(alpha * np.outer(c, c), A, rtol=0.0, atol=1e-12 * scale):
                    return ("rank_one", alpha, c)
        return ("dense",)

    def __repr__(self):
        return f"LogAffineBifunction(name={self.name!r}, dim={self.dimension}, manifold={self.manifold!r})"

    @property
    def structure(self) -> str:
        return self._structure[0]

    @property
    def symmetric_part(self) -> np.ndarray:
        return 0.5 * (self.A + self.A.T)

    def _min_sym_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.symmetric_part)[0])

    @property
    def is_monotone(self) -> bool:
        return self._min_sym_eig() >= -self._eig_tol()

    @property
    def strong_monotonicity_modulus(self) -> Optional[float]:
        beta = self._min_sym_eig()
        return beta if beta > self._eig_tol() else None

    def _eig_tol(self) -> float:
        return 1e-12 * max(1.0, float(np.max(np.abs(self.A))))

    def apply(self, v: np.ndarray) -> np.ndarray:
        kind = self._structure[0]
        if kind == "scaled_identity":
            return self._structure[1] * v
        if kind == "rank_one":
            _, alpha, c = self._structure
            return (alpha * float(np.dot(c, v))) * c
        return self.A @ v

    def value_chart(self, u: np.ndarray, w: np.ndarray) -> float:
        return float(np.dot(self.apply(u), w - u))

    def eval(self, x: Point, y: Point) -> float:
        self.manifold.validate(x, y)
        return self.value_chart(self.manifold.chart(x.coords), self.manifold.chart(y.coords))

    def solve_shifted(self, mu: float, u: np.ndarray) -> np.ndarray:
        """Solve (I + mu A) v = u."""
        kind = self._structure[0]
        if kind == "scaled_identity":
            denom = 1.0 + mu * self._structure[1]
            if denom == 0.0:
                raise SingularSystemError(f"I + {mu:g} A is singular")
            return u / denom
        if kind == "rank_one":
            # Sherman-Morrison for I + mu*alpha*c c^T
            _, alpha, c = self._structure
            denom = 1.0 + mu * alpha * float(np.dot(c, c))
            if denom == 0.0:
                raise SingularSystemError(f"I + {mu:g} A is singular")
            return u - (mu * alpha * float(np.dot(c, u)) / denom) * c
        return self.solve_shifted_dense(mu, u)

    def solve_shifted_dense(self, mu: float, u: np.ndarray) -> np.ndarray:
        with self._lock:
            factor = self._factors.get(mu)
            if factor is None:
                M = np.eye(self.dimension) + mu * self.A
                lu, piv = sla.lu_factor(M, check_finite=False)
                pivots = np.abs(np.diag(lu))
                if np.min(pivots) <= np.finfo(float).eps * max(1.0, np.max(pivots)) * self.dimension:
                    raise SingularSystemError(f"I + {mu:g} A is singular")
                factor = (lu, piv)
                self._factors[mu] = factor
        return sla.lu_solve(factor, u, check_finite=False)

    def negated(self) -> "LogAffineBifunction":
        return LogAffineBifunction(-self.A, self.manifold, name=f"negated-{self.name}")


EXAMPLE51_DIRECTION = np.array([1.0, 1.0, -1.0])


def example51(manifold: Optional[Manifold] = None) -> LogAffineBifunction:
    """F(x,y) = 3 ln(x1 x2 / x3) [ln(y1/x1) + ln(y2/x2) - ln(y3/x3)], i.e. A = 3 c c^T."""
    c = EXAMPLE51_DIRECTION.copy()
    return LogAffineBifunction(3.0 * np.outer(c, c), manifold, name="example51", structure=("rank_one", 3.0, c))


def example52(n: int, manifold: Optional[Manifold] = None) -> LogAffineBifunction:
    """F(x,y) = sum_i ln x_i ln(y_i/x_i), i.e. A = I."""
    if int(n) < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {n}")
    return LogAffineBifunction(np.eye(int(n)), manifold, name="example52", structure=("scaled_identity", 1.0))


def from_matrix(values, n: int, manifold: Optional[Manifold] = None) -> LogAffineBifunction:
    """Bifunction from N^2 reals given row-major."""
    flat = np.asarray(values, dtype=float).reshape(-1)
    if flat.shape[0] != n * n:
        raise DimensionMismatchError(f"matrix needs {n * n} entries for N={n}, got {flat.shape[0]}")
    return LogAffineBifunction(flat.reshape(n, n), manifold, name="matrix")


def build_bifunction(kind: str, dimension: int, matrix=None, manifold: Optional[Manifold] = None):
    kind = kind.strip().lower()
    if kind == "example51":
        if dimension != 3:
            raise DimensionMismatchError(f"example51 is defined for N=3, got N={dimension}")
        return example51(manifold)
    if kind == "example52":
        return example52(dimension, manifold)
    if kind == "matrix":
        if matrix is None:
            raise InvalidParameterError("bifunction 'matrix' needs the matrix entries")
        return from_matrix(matrix, dimension, manifold)
    raise InvalidParameterError(f"unknown bifunction '{kind}', expected example51, example52 or matrix")


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0:
        raise InvalidParameterError(f"regularization parameter must be > 0, got {lam}")
    return lam


def _check_literal_variant(F: Bifunction) -> None:
    if F.name != "example51" or F.dimension != 3 or not isinstance(F.manifold, LogOrthant):
        raise VariantMismatchError("the printed closed form only applies to example51 on the 3-dimensional log-orthant")


def _printed_ex51_chart(lam: float, u: np.ndarray) -> np.ndarray:
    # ((x1 x2^{3l} x3^{3l})^{1/(1+3l)}, (x1^{3l} x2^{-1} x3^{3l})^{1/(1+3l)}, (x1^{3l} x2^{3l} x3^{1+6l})^{1/(1+3l)})
    s = 3.0 * lam
    u1, u2, u3 = u
    return np.array([
        u1 + s * u2 + s * u3,
        s * u1 - u2 + s * u3,
        s * u1 + s * u2 + (1.0 + 2.0 * s) * u3,
    ]) / (1.0 + s)


def resolvent_busemann_chart(F: LogAffineBifunction, lam: float, u: np.ndarray,
                             variant: ResolventVariant = ResolventVariant.CHARACTERIZATION) -> np.ndarray:
    lam = _check_lambda(lam)
    if ResolventVariant.parse(variant) is ResolventVariant.PAPER_LITERAL_EX51:
        _check_literal_variant(F)
        return _printed_ex51_chart(lam, u)
    return F.solve_shifted(lam, u)


def resolvent_distsq_chart(F: LogAffineBifunction, lam: float, u: np.ndarray,
                           variant: ResolventVariant = ResolventVariant.CHARACTERIZATION) -> np.ndarray:
    return resolvent_busemann_chart(F, _check_lambda(lam) / 2.0, u, variant)


def prox_chart(F: LogAffineBifunction, lam: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimizer of <A v, w - v> + ||w - u||^2 / (2 lam) over w."""
    return u - _check_lambda(lam) * F.apply(v)


def resolvent_busemann(F: LogAffineBifunction, lam: float, x: Point,
                       variant: ResolventVariant = ResolventVariant.CHARACTERIZATION) -> Point:
    m = F.manifold
    m.validate(x)
    return m.point_from_chart(resolvent_busemann_chart(F, lam, m.chart(x.coords), variant))


def resolvent_distsq(F: LogAffineBifunction, lam: float, x: Point,
                     variant: ResolventVariant = ResolventVariant.CHARACTERIZATION) -> Point:
    m = F.manifold
    m.validate(x)
    return m.point_from_chart(resolvent_distsq_chart(F, lam, m.chart(x.coords), variant))


def prox_step(F: LogAffineBifunction, lam: float, center: Point, anchor: Point) -> Point:
    m = F.manifold
    m.validate(center, anchor)
    return m.point_from_chart(prox_chart(F, lam, m.chart(center.coords), m.chart(anchor.coords)))


@dataclass
class ProbeReport:
    name: str
    max_value: float
    witness: Optional[tuple]
    trials: int
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_value <= self.tolerance


def _default_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.Philox(0 if rng is None else int(rng)))


def probe_monotone(F: Bifunction, sampler: Optional[Sampler] = None, trials: int = 1000,
                   rng=None, tol: float = 1e-12) -> ProbeReport:
    """Largest sampled F(x,y) + F(y,x); monotone bifunctions keep it <= 0."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    rng = _default_rng(rng)
    sampler = sampler or F.manifold.random_point
    worst, witness = -math.inf, None
    for _ in range(trials):
        x, y = sampler(rng), sampler(rng)
        value = F.eval(x, y) + F.eval(y, x)
        if value > worst:
            worst, witness = value, (x, y)
    report = ProbeReport("monotone", worst, witness, trials, tol)
    log.debug("monotonicity probe on %s: max=%.3e passed=%s", F.name, worst, report.passed)
    return report


def _spectral_witnesses(F: Bifunction):
    """Pairs (origin, origin + t e) along the least eigenvector of the symmetric part; F(origin, .) = 0 there."""
    if not isinstance(F, LogAffineBifunction):
        return []
    _, vecs = np.linalg.eigh(F.symmetric_part)
    e = vecs[:, 0]
    m = F.manifold
    origin = m.point_from_chart(np.zeros(F.dimension))
    return [(origin, m.point_from_chart(t * e)) for t in (0.5, 1.0, 2.0)]


def probe_strong_pseudomonotone(F: Bifunction, beta: float, sampler: Optional[Sampler] = None,
                                trials: int = 1000, rng=None, tol: float = 1e-12) -> ProbeReport:
    """Over pairs with F(x,y) >= 0, the largest F(y,x) + beta d^2(x,y)."""
    if not math.isfinite(beta) or beta <= 0:
        raise InvalidParameterError(f"beta must be > 0, got {beta}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    rng = _default_rng(rng)
    sampler = sampler or F.manifold.random_point
    m = F.manifold
    pairs = _spectral_witnesses(F)
    for _ in range(trials):
        x, y = sampler(rng), sampler(rng)
        pairs.append((x, y))
        pairs.append((y, x))
    worst, witness = -math.inf, None
    for x, y in pairs:
        if F.eval(x, y) < 0:
            continue
        value = F.eval(y, x) + beta * m.sq_dist(x, y)
        if value > worst:
            worst, witness = value, (x, y)
    report = ProbeReport(f"strong-pseudomonotone(beta={beta:g})", worst, witness, trials, tol)
    log.debug("strong pseudomonotonicity probe on %s: max=%.3e passed=%s", F.name, worst, report.passed)
    return report
