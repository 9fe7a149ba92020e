"""
Runtime validators that hold solver traces against the convergence results:

- key-lemma residual  d^2(x_n,x*) - d^2(x_{n+1},x*) - d^2(x_n,y_n) - d^2(x_{n+1},y_n) >= 0
- global error bound  d(x_n,x*) <= (1 + 1/(beta lam_n)) d(y_n,x_n)
- R-linear envelope   d(x_n,x*) <= d(x_0,x*) r^n,  r = sqrt(1 - min{1, 2 beta lam~})

Envelopes are reported as verdicts rather than asserted; a violation is a
finding about the data.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg as sla

from .equilibrium import LogAffineBifunction
from .errors import InvalidParameterError, MissingTraceDataError
from .manifold import Point
from .solvers import IterateTrace, Method, StepSchedule

log = logging.getLogger(__name__)

FEJER_RTOL = 1e-9
BOUND_TOL = 1e-9
ENVELOPE_TOL = 1e-12
REPORT_COLUMNS = ["n", "residual", "bound_lhs", "bound_rhs", "envelope"]


class Verdict(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not-applicable"


def _verdict(ok: bool) -> Verdict:
    return Verdict.HOLDS if ok else Verdict.VIOLATED


@dataclass(frozen=True)
class SolutionRef:
    x_star: Point
    beta: Optional[float] = None

    def __post_init__(self):
        if self.beta is not None and not self.beta > 0:
            raise InvalidParameterError(f"beta must be > 0, got {self.beta}")

    def validate(self, F: LogAffineBifunction, trials: int = 1000, seed: int = 0, tol: float = 1e-12) -> bool:
        """Sampled check of F(x*, y) >= -tol."""
        rng = np.random.Generator(np.random.Philox(seed))
        for _ in range(trials):
            if F.eval(self.x_star, F.manifold.random_point(rng)) < -tol:
                return False
        return True


def kernel_projection_solution(F: LogAffineBifunction, x0: Point) -> Point:
    """
    Limit of either method from x0 when A is symmetric PSD: the chart
    projection of u_0 onto ker(A). Every component along an eigenvalue a > 0
    contracts and the kernel component is left untouched.
    """
    if not np.allclose(F.A, F.A.T) or not F.is_monotone:
        raise InvalidParameterError("kernel projection needs a symmetric positive semidefinite matrix")
    m = F.manifold
    m.validate(x0)
    basis = sla.null_space(F.A)
    u0 = m.chart(x0.coords)
    return m.point_from_chart(basis @ (basis.T @ u0))


def _sq(diff: np.ndarray) -> np.ndarray:
    return diff * diff


def _sq_dist_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in _sq(a - b)])


def _star_chart(trace: IterateTrace, sol: SolutionRef) -> np.ndarray:
    trace.manifold.validate(sol.x_star)
    return trace.manifold.chart(sol.x_star.coords)


def _require_rows(trace: IterateTrace):
    if trace.rows == 0:
        raise MissingTraceDataError("trace has no iterations")


@dataclass
class FejerReport:
    frame: pd.DataFrame
    min_residual: float
    threshold: float
    verdict: Verdict
    monotone_verdict: Verdict


def fejer_report(trace: IterateTrace, sol: SolutionRef) -> FejerReport:
    _require_rows(trace)
    X, Y = trace.x_chart(), trace.y_chart()
    star = _star_chart(trace, sol)
    rows = trace.rows
    residuals = np.empty(rows)
    dist_star = np.sqrt(_sq_dist_rows(X, star[None, :]))
    for n in range(rows):
        residuals[n] = math.fsum(np.concatenate([
            _sq(X[n] - star), -_sq(X[n + 1] - star), -_sq(X[n] - Y[n]), -_sq(X[n + 1] - Y[n]),
        ]))
    threshold = -FEJER_RTOL * (1.0 + dist_star[0] ** 2)
    gaps = dist_star[1:] - dist_star[:-1]
    frame = pd.DataFrame({"n": np.arange(rows), "residual": residuals, "fejer_gap": gaps})
    min_residual = float(residuals.min())
    report = FejerReport(
        frame=frame,
        min_residual=min_residual,
        threshold=threshold,
        verdict=_verdict(min_residual >= threshold),
        monotone_verdict=_verdict(bool(np.all(gaps <= ENVELOPE_TOL * (1.0 + dist_star[0])))),
    )
    log.debug("fejer residuals: min=%.3e threshold=%.3e verdict=%s", min_residual, threshold, report.verdict.value)
    return report


@dataclass
class ErrorBoundReport:
    frame: pd.DataFrame
    worst_slack_printed: float
    worst_slack_effective: float
    verdict_printed: Verdict
    verdict_effective: Verdict

    @property
    def satisfied_factor(self) -> str:
        holds = (self.verdict_printed is Verdict.HOLDS, self.verdict_effective is Verdict.HOLDS)
        return {(True, True): "both", (True, False): "printed", (False, True): "effective"}.get(holds, "neither")


def _effective_lambdas(trace: IterateTrace) -> np.ndarray:
    lambdas = np.asarray(trace.lambdas)
    # REMD's y_n is the Busemann resolvent at lam_n / 2
    return lambdas / 2.0 if trace.method is Method.REMD else lambdas


def error_bound_report(trace: IterateTrace, sol: SolutionRef) -> ErrorBoundReport:
    """
    Checks d(x_n,x*) <= (1 + 1/(beta lam_n)) d(y_n,x_n) with the printed
    factor and with the effective parameter (lam_n/2 for REMD).
    """
    if sol.beta is None:
        raise InvalidParameterError("the error bound needs the strong pseudomonotonicity modulus beta")
    _require_rows(trace)
    X, Y = trace.x_chart()[:-1], trace.y_chart()
    star = _star_chart(trace, sol)
    beta = sol.beta
    lambdas = np.asarray(trace.lambdas)
    effective = _effective_lambdas(trace)
    dxy = np.asarray(trace.dxy)
    lhs = np.sqrt(_sq_dist_rows(X, star[None, :]))
    rhs_printed = (1.0 + 1.0 / (beta * lambdas)) * dxy
    rhs_effective = (1.0 + 1.0 / (beta * effective)) * dxy
    frame = pd.DataFrame({
        "n": np.arange(trace.rows),
        "bound_lhs": lhs,
        "bound_rhs": rhs_printed,
        "bound_rhs_effective": rhs_effective,
        "resolvent_lhs": np.sqrt(_sq_dist_rows(Y, star[None, :])),
        "resolvent_rhs": dxy / (beta * effective),
    })
    slack_printed = float(np.min(rhs_printed - lhs))
    slack_effective = float(np.min(rhs_effective - lhs))
    report = ErrorBoundReport(
        frame=frame,
        worst_slack_printed=slack_printed,
        worst_slack_effective=slack_effective,
        verdict_printed=_verdict(slack_printed >= -BOUND_TOL),
        verdict_effective=_verdict(slack_effective >= -BOUND_TOL),
    )
    if report.verdict_printed is Verdict.VIOLATED:
        log.info("error bound with the printed factor is violated (worst slack %.3e); effective factor: %s",
                 slack_printed, report.verdict_effective.value)
    return report


@dataclass
class RLinearReport:
    frame: pd.DataFrame
    theorem_rate: float
    empirical_rate: float
    verdict: Verdict
    step_verdict: Verdict


def theorem_rate(beta: float, lower_bound: float) -> float:
    return math.sqrt(1.0 - min(1.0, 2.0 * beta * lower_bound))


def rlinear_report(trace: IterateTrace, sol: SolutionRef, sched: StepSchedule) -> RLinearReport:
    if sol.beta is None:
        raise InvalidParameterError("the R-linear envelope needs the strong pseudomonotonicity modulus beta")
    _require_rows(trace)
    star = _star_chart(trace, sol)
    dist = np.sqrt(_sq_dist_rows(trace.x_chart(), star[None, :]))
    r = theorem_rate(sol.beta, sched.lower_bound)
    n = np.arange(dist.shape[0])
    envelope = dist[0] * np.power(r, n)
    inside = bool(np.all(dist <= envelope + ENVELOPE_TOL))
    step_ok = bool(np.all(dist[1:] <= r * dist[:-1] + ENVELOPE_TOL))

    usable = dist > 1e-12 * (1.0 + dist[0])
    if usable.sum() >= 2:
        slope = np.polyfit(n[usable], np.log(dist[usable]), 1)[0]
        empirical = float(math.exp(slope))
    else:
        empirical = float("nan")
    frame = pd.DataFrame({"n": n, "dist_to_solution": dist, "envelope": envelope})
    report = RLinearReport(frame, r, empirical, _verdict(inside), _verdict(step_ok))
    if not inside:
        log.info("R-linear envelope violated: theorem rate %.6f, empirical rate %.6f", r, empirical)
    return report


@dataclass
class DiagnosticsSummary:
    fejer: FejerReport
    error_bound: Optional[ErrorBoundReport]
    rlinear: Optional[RLinearReport]

    def verdicts(self) -> dict:
        na = Verdict.NOT_APPLICABLE.value
        return {
            "fejer": self.fejer.verdict.value,
            "fejer_monotone": self.fejer.monotone_verdict.value,
            "error_bound": self.error_bound.verdict_printed.value if self.error_bound else na,
            "error_bound_effective": self.error_bound.verdict_effective.value if self.error_bound else na,
            "rlinear": self.rlinear.verdict.value if self.rlinear else na,
            "empirical_rate": self.rlinear.empirical_rate if self.rlinear else float("nan"),
            "theorem_rate": self.rlinear.theorem_rate if self.rlinear else float("nan"),
        }

    def report_frame(self) -> pd.DataFrame:
        frame = self.fejer.frame[["n", "residual"]].copy()
        if self.error_bound is not None:
            frame["bound_lhs"] = self.error_bound.frame["bound_lhs"].to_numpy()
            frame["bound_rhs"] = self.error_bound.frame["bound_rhs"].to_numpy()
        else:
            frame["bound_lhs"] = np.nan
            frame["bound_rhs"] = np.nan
        if self.rlinear is not None:
            frame["envelope"] = self.rlinear.frame["envelope"].to_numpy()[:len(frame)]
        else:
            frame["envelope"] = np.nan
        return frame[REPORT_COLUMNS]


def diagnose(trace: IterateTrace, sol: SolutionRef, sched: StepSchedule) -> DiagnosticsSummary:
    """All three validators; the beta-dependent ones are skipped when beta is unknown."""
    fejer = fejer_report(trace, sol)
    if sol.beta is None:
        return DiagnosticsSummary(fejer, None, None)
    return DiagnosticsSummary(fejer, error_bound_report(trace, sol), rlinear_report(trace, sol, sched))
