import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from ..bench import default_lambda_grid, make_rng, sample_init
from ..busemann import (
    GeodesicRay,
    busemann_closed,
    busemann_closed_chart,
    busemann_finite_t,
    busemann_finite_t_chart,
    busemann_pairing,
)
from ..diagnostics import (
    SolutionRef,
    Verdict,
    error_bound_report,
    fejer_report,
    kernel_projection_solution,
    rlinear_report,
)
from ..equilibrium import (
    LogAffineBifunction,
    ResolventVariant,
    example51,
    example52,
    probe_monotone,
    probe_strong_pseudomonotone,
    prox_step,
    resolvent_busemann,
    resolvent_distsq,
)
from ..manifold import LogOrthant
from ..solvers import Method, SolverConfig, StepSchedule, iteration_count_oracle, solve

log = logging.getLogger(__name__)

GEOMETRY_DIMS = (1, 2, 3, 10)
FINITE_T_VALUES = (10.0, 1e2, 1e4)
CHART_SCALE = 3.0
# cases per dimension that also go through the Point-level API
POINT_API_SAMPLE = 25
SUITES = ("geometry", "busemann", "resolvent", "probes", "fejer", "error_bound", "loop_fidelity", "findings")


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    worst: float
    tolerance: float
    cases: int
    hard: bool = True
    detail: str = ""


@dataclass
class SuiteReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def hard_failures(self) -> List[CheckResult]:
        return [c for c in self.checks if c.hard and not c.passed]

    @property
    def passed(self) -> bool:
        return not self.hard_failures

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.checks])

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "hard_failures": [f"{c.suite}.{c.name}" for c in self.hard_failures],
            "checks": [asdict(c) for c in self.checks],
        }


class PropertySuite:
    """
    Runs the invariant suites behind the ``verify`` command.
    Hard checks decide the exit code; soft checks record where the printed formulas disagree with the analysis.
    """

    def __init__(self, counts: dict, seed: int = 0, bifunction: Optional[LogAffineBifunction] = None,
                 progress: Optional[Callable[[int, int, str], None]] = None):
        self.counts = counts
        self.seed = int(seed)
        self.bifunction = bifunction if bifunction is not None else example52(3)
        self.progress = progress
        self.report = SuiteReport()

    def _rng(self, salt: int) -> np.random.Generator:
        return make_rng(self.seed ^ (salt << 32))

    def _record(self, suite, name, worst, tolerance, cases, hard=True, detail="", passed=None):
        ok = bool(worst <= tolerance) if passed is None else bool(passed)
        check = CheckResult(suite, name, ok, float(worst), float(tolerance), int(cases), hard, detail)
        self.report.checks.append(check)
        if not ok:
            level = logging.WARNING if hard else logging.INFO
            log.log(level, "%s.%s failed: worst=%.3e tolerance=%.3e %s", suite, name, worst, tolerance, detail)
        return check

    def run(self, suites=None) -> SuiteReport:
        selected = [s for s in SUITES if suites is None or s in suites]
        for i, name in enumerate(selected, start=1):
            if self.progress:
                self.progress(i, len(selected), f"suite {name}")
            getattr(self, f"check_{name}")()
        log.info("verify finished: %d checks, %d hard failures", len(self.report.checks),
                 len(self.report.hard_failures))
        return self.report

    # --- manifold -----------------------------------------------------------------

    def check_geometry(self):
        rng = self._rng(1)
        per_dim = max(1, int(self.counts["geometry_cases"]) // len(GEOMETRY_DIMS))
        worst = {"round_trip": 0.0, "norm_consistency": 0.0, "law_of_cosines": -math.inf, "isometry": 0.0}

        def update(name, values):
            worst[name] = max(worst[name], float(np.max(values)))

        for n in GEOMETRY_DIMS:
            m = LogOrthant(n)
            ux, uy, uz = (rng.uniform(-CHART_SCALE, CHART_SCALE, size=(per_dim, n)) for _ in range(3))
            x, y, z = m.unchart(ux), m.unchart(uy), m.unchart(uz)
            d = np.linalg.norm(uy - ux, axis=1)
            v = x * np.log(y / x)
            back = x * np.exp(v / x)
            vv = np.sum((v / x) ** 2, axis=1)
            update("round_trip", np.linalg.norm(m.chart(back) - uy, axis=1) / (1.0 + d))
            update("norm_consistency", np.abs(vv - d * d) / (1.0 + d * d))

            def sq(a, b):
                return np.sum((a - b) ** 2, axis=1)

            lhs = sq(ux, uy) + sq(uy, uz) - sq(uz, ux)
            rhs = 2.0 * np.sum((y * np.log(x / y)) * (y * np.log(z / y)) / (y * y), axis=1)
            update("law_of_cosines", lhs - rhs)
            euclid = np.linalg.norm(np.log(x) - np.log(y), axis=1)
            update("isometry", np.abs(np.sqrt(vv) - euclid) / np.maximum(1.0, euclid))

            for i in range(min(POINT_API_SAMPLE, per_dim)):
                for name, value in self._geometry_point_case(m, m.point(x[i]), m.point(y[i]), m.point(z[i])).items():
                    update(name, value)

        cases = per_dim * len(GEOMETRY_DIMS)
        self._record("geometry", "round_trip", worst["round_trip"], 1e-10, cases)
        self._record("geometry", "norm_consistency", worst["norm_consistency"], 1e-10, cases)
        self._record("geometry", "law_of_cosines", worst["law_of_cosines"], 1e-9, cases)
        self._record("geometry", "isometry", worst["isometry"], 1e-12, cases)

    @staticmethod
    def _geometry_point_case(m, x, y, z) -> dict:
        d = m.dist(x, y)
        v = m.log_map(x, y)
        lhs = m.sq_dist(x, y) + m.sq_dist(y, z) - m.sq_dist(z, x)
        rhs = 2.0 * m.inner(y, m.log_map(y, x), m.log_map(y, z))
        euclid = float(np.linalg.norm(np.log(x.coords) - np.log(y.coords)))
        return {
            "round_trip": m.dist(m.exp_map(v), y) / (1.0 + d),
            "norm_consistency": abs(m.inner(x, v, v) - d * d) / (1.0 + d * d),
            "law_of_cosines": lhs - rhs,
            "isometry": abs(d - euclid) / max(1.0, euclid),
        }

    # --- busemann -----------------------------------------------------------------

    def check_busemann(self):
        rng = self._rng(2)
        per_dim = max(1, int(self.counts["busemann_triples"]) // len(GEOMETRY_DIMS))
        worst = dict.fromkeys(("identity", "finite_t", "monotone_t", "lipschitz", "normalization"), 0.0)

        def update(name, values):
            worst[name] = max(worst[name], float(np.max(values)))

        for n in GEOMETRY_DIMS:
            m = LogOrthant(n)
            uz, ux, uy, uy2 = (rng.uniform(-CHART_SCALE, CHART_SCALE, size=(per_dim, n)) for _ in range(4))
            dzx = np.linalg.norm(ux - uz, axis=1)
            dzy = np.linalg.norm(uy - uz, axis=1)
            closed = busemann_closed_chart(uz, ux, uy)
            # <log_z x, log_z y> at z is the chart dot product under diag(z^-2)
            inner = np.sum((ux - uz) * (uy - uz), axis=1)
            update("identity", np.abs(dzx * closed + inner) / (1.0 + dzx * dzy))

            previous = np.full(per_dim, math.inf)
            for t in FINITE_T_VALUES:
                approx = busemann_finite_t_chart(uz, ux, uy, t)
                update("finite_t", np.abs(approx - closed) - dzy * dzy / (2.0 * t))
                update("monotone_t", approx - previous)
                previous = approx

            update("lipschitz", np.abs(closed - busemann_closed_chart(uz, ux, uy2)) - np.linalg.norm(uy - uy2, axis=1))

            t = rng.uniform(0.0, 10.0, size=per_dim)
            on_ray = uz + t[:, None] * (ux - uz) / dzx[:, None]
            update("normalization", np.abs(busemann_closed_chart(uz, ux, on_ray) + t) / (1.0 + t))

            for i in range(min(POINT_API_SAMPLE, per_dim)):
                z, x, y, y2 = (m.point_from_chart(a[i]) for a in (uz, ux, uy, uy2))
                for name, value in self._busemann_point_case(m, z, x, y, y2, float(t[i])).items():
                    update(name, value)

        cases = per_dim * len(GEOMETRY_DIMS)
        self._record("busemann", "zero_curvature_identity", worst["identity"], 1e-9, cases)
        self._record("busemann", "finite_t_approximation", worst["finite_t"], 1e-9, cases)
        self._record("busemann", "finite_t_monotone", worst["monotone_t"], 1e-12, cases)
        self._record("busemann", "one_lipschitz", worst["lipschitz"], 1e-10, cases)
        self._record("busemann", "ray_normalization", worst["normalization"], 1e-10, cases)

    @staticmethod
    def _busemann_point_case(m, z, x, y, y2, t) -> dict:
        dzx, dzy = m.dist(z, x), m.dist(z, y)
        inner = m.inner(z, m.log_map(z, x), m.log_map(z, y))
        ray = GeodesicRay(m, z, x)
        closed = busemann_closed(ray, y)
        finite_t, monotone_t, previous = -math.inf, -math.inf, math.inf
        for s in FINITE_T_VALUES:
            approx = busemann_finite_t(ray, y, s)
            finite_t = max(finite_t, abs(approx - closed) - dzy * dzy / (2.0 * s))
            monotone_t = max(monotone_t, approx - previous)
            previous = approx
        return {
            "identity": abs(busemann_pairing(m, z, x, y) + inner) / (1.0 + dzx * dzy),
            "finite_t": finite_t,
            "monotone_t": monotone_t,
            "lipschitz": abs(closed - busemann_closed(ray, y2)) - m.dist(y, y2),
            "normalization": abs(busemann_closed(ray, ray.point_at(t)) + t) / (1.0 + t),
        }

    # --- equilibrium --------------------------------------------------------------

    def _bifunctions(self):
        candidates = [example52(3), example51(), self.bifunction]
        seen, unique = set(), []
        for F in candidates:
            key = (F.name, F.dimension, F.A.tobytes())
            if key not in seen:
                seen.add(key)
                unique.append(F)
        return unique

    def check_resolvent(self):
        rng = self._rng(3)
        inputs = int(self.counts["resolvent_inputs"])
        samples = max(1, int(self.counts["vi_samples"]) // 10)

        F = example52(3)
        m = F.manifold
        closed = 0.0
        for _ in range(inputs):
            x = m.random_point(rng)
            lam = float(rng.uniform(0.01, 1.0))
            for got, power in ((resolvent_busemann(F, lam, x), 1.0 / (1.0 + lam)),
                               (resolvent_distsq(F, lam, x), 1.0 / (1.0 + lam / 2.0))):
                expected = x.coords ** power
                closed = max(closed, float(np.max(np.abs(got.coords - expected) / expected)))
        self._record("resolvent", "example52_closed_forms", closed, 1e-12, inputs)

        halving = 0.0
        for _ in range(max(1, inputs // 10)):
            n = int(rng.integers(1, 6, endpoint=True))
            B = rng.standard_normal((n, n))
            skew = rng.standard_normal((n, n))
            G = LogAffineBifunction(B @ B.T + (skew - skew.T))
            x = G.manifold.random_point(rng)
            lam = float(rng.uniform(0.01, 1.0))
            diff = resolvent_distsq(G, lam, x).coords - resolvent_busemann(G, lam / 2.0, x).coords
            halving = max(halving, float(np.max(np.abs(diff))))
        self._record("resolvent", "half_parameter_reduction", halving, 0.0, max(1, inputs // 10))

        F51 = example51()
        sm = 0.0
        for _ in range(inputs):
            u = rng.uniform(-3.0, 3.0, size=3)
            mu = float(rng.uniform(0.01, 1.0))
            fast, dense = F51.solve_shifted(mu, u), F51.solve_shifted_dense(mu, u)
            sm = max(sm, float(np.max(np.abs(fast - dense)) / (1.0 + np.max(np.abs(dense)))))
        self._record("resolvent", "sherman_morrison_matches_dense", sm, 1e-12, inputs)

        for G in self._bifunctions():
            self._check_vi_residuals(G, rng, samples)

    def _check_vi_residuals(self, F, rng, samples):
        m = F.manifold
        busemann_vi = distsq_vi = prox_opt = -math.inf
        points = max(1, int(self.counts["vi_samples"]) // samples)
        grid = default_lambda_grid()
        for _ in range(points):
            x = m.random_point(rng)
            lam = float(grid[int(rng.integers(0, len(grid)))])
            z = resolvent_busemann(F, lam, x)
            zd = resolvent_distsq(F, lam, x)
            xp = prox_step(F, lam, x, z)
            for _ in range(samples):
                y = m.random_point(rng)
                if m.dist(z, x) > 0:
                    a, b = lam * F.eval(z, y), busemann_pairing(m, z, x, y)
                    busemann_vi = max(busemann_vi, -(a + b) / (1.0 + abs(a) + abs(b)))
                a, b = lam * F.eval(zd, y), m.sq_dist(y, x) - m.sq_dist(zd, x)
                distsq_vi = max(distsq_vi, -(a + b) / (1.0 + abs(a) + abs(b)))
                a = lam * (F.eval(z, y) - F.eval(z, xp))
                b = m.inner(xp, m.log_map(xp, x), m.log_map(xp, y))
                prox_opt = max(prox_opt, (b - a) / (1.0 + abs(a) + abs(b)))
        cases = points * samples
        self._record("resolvent", f"busemann_vi_residual[{F.name}]", busemann_vi, 1e-9, cases)
        self._record("resolvent", f"distsq_vi_residual[{F.name}]", distsq_vi, 1e-9, cases)
        self._record("resolvent", f"prox_optimality[{F.name}]", prox_opt, 1e-9, cases)

    def check_probes(self):
        trials = int(self.counts["probe_trials"])
        F = self.bifunction
        report = probe_monotone(F, trials=trials, rng=self._rng(4))
        self._record("probes", f"monotone[{F.name}]", report.max_value, report.tolerance, trials,
                     detail=f"witness={report.witness}" if not report.passed else "")
        beta = F.strong_monotonicity_modulus
        if beta is not None:
            strong = probe_strong_pseudomonotone(F, beta, trials=trials, rng=self._rng(5))
            self._record("probes", f"strong_pseudomonotone[{F.name}]", strong.max_value, strong.tolerance, trials,
                         detail=f"beta={beta:g}")

    # --- solvers and diagnostics --------------------------------------------------

    def _random_runs(self, count, salt):
        rng = self._rng(salt)
        grid = default_lambda_grid()
        for i in range(count):
            method = (Method.REMB, Method.REMD)[i % 2]
            lam = float(grid[int(rng.integers(0, len(grid)))])
            yield i, method, lam, rng

    def check_fejer(self):
        cfg = SolverConfig(tol=1e-8)
        worst, runs = -math.inf, 0
        F = example52(3)
        star = SolutionRef(F.manifold.point(np.ones(3)), beta=1.0)
        for _, method, lam, rng in self._random_runs(int(self.counts["fejer_runs_ex52"]), 6):
            x0 = sample_init(rng, 3, 5, 20)
            _, trace = solve(method, F, F.manifold, x0, StepSchedule.constant(lam), cfg)
            report = fejer_report(trace, star)
            worst = max(worst, report.threshold - report.min_residual)
            runs += 1

        F51 = example51()
        for _, method, lam, rng in self._random_runs(int(self.counts["fejer_runs_ex51"]), 7):
            x0 = sample_init(rng, 3, 5, 20)
            _, trace = solve(method, F51, F51.manifold, x0, StepSchedule.constant(lam), cfg)
            report = fejer_report(trace, SolutionRef(kernel_projection_solution(F51, x0)))
            worst = max(worst, report.threshold - report.min_residual)
            runs += 1
        self._record("fejer", "key_lemma_residual", worst, 0.0, runs)

    def check_error_bound(self):
        F = example52(3)
        star = SolutionRef(F.manifold.point(np.ones(3)), beta=1.0)
        cfg = SolverConfig(tol=1e-8)
        rng = self._rng(8)
        per_lambda = max(1, int(self.counts["fejer_runs_ex52"]) // 20)
        worst, runs = -math.inf, 0
        for lam in default_lambda_grid():
            for _ in range(per_lambda):
                x0 = sample_init(rng, 3, 5, 20)
                _, trace = solve(Method.REMB, F, F.manifold, x0, StepSchedule.constant(lam), cfg)
                worst = max(worst, -error_bound_report(trace, star).worst_slack_printed)
                runs += 1
        self._record("error_bound", "remb_example52", worst, 1e-9, runs)

    def check_loop_fidelity(self):
        cfg = SolverConfig(tol=1e-8, record_trace=False)
        mismatches, runs = 0, 0
        for n in (3, 100):
            F = example52(n)
            for _, method, lam, rng in self._random_runs(20, 9 + n):
                x0 = sample_init(rng, n, 5, 20)
                _, trace = solve(method, F, F.manifold, x0, StepSchedule.constant(lam), cfg)
                if trace.iterations != iteration_count_oracle(F, method, lam, x0, cfg.tol):
                    mismatches += 1
                runs += 1
        self._record("loop_fidelity", "example52_iteration_counts", mismatches, 0, runs)

    def check_findings(self):
        """Soft checks: discrepancies between the printed formulas and the analysis."""
        F = example52(3)
        star = SolutionRef(F.manifold.point(np.ones(3)), beta=1.0)
        x0 = F.manifold.point(np.full(3, math.e))

        _, trace = solve(Method.REMD, F, F.manifold, x0, StepSchedule.constant(0.5), SolverConfig(tol=1e-8))
        bound = error_bound_report(trace, star)
        self._record("findings", "remd_error_bound_printed_factor", -bound.worst_slack_printed, 1e-9, trace.rows,
                     hard=False, detail=f"satisfied factor: {bound.satisfied_factor}")

        sched = StepSchedule.constant(0.25)
        _, trace = solve(Method.REMB, F, F.manifold, x0, sched, SolverConfig(tol=1e-8))
        rl = rlinear_report(trace, star, sched)
        self._record("findings", "rlinear_envelope_remb", rl.empirical_rate - rl.theorem_rate, 1e-12, trace.rows,
                     hard=False, passed=rl.verdict is Verdict.HOLDS,
                     detail=f"theorem rate {rl.theorem_rate:.6f}, empirical rate {rl.empirical_rate:.6f}")

        F51 = example51()
        start = F51.manifold.point([1.0, 2.0, 3.0])
        cfg = SolverConfig(tol=1e-16, variant=ResolventVariant.PAPER_LITERAL_EX51)
        end, trace = solve(Method.REMB, F51, F51.manifold, start, StepSchedule.constant(0.03), cfg)
        x1, x2, x3 = end.coords
        distance_to_ones = float(np.linalg.norm(np.log(end.coords)))
        self._record("findings", "printed_example51_limit", distance_to_ones, 1e-6, trace.iterations, hard=False,
                     detail=f"limit {end!r}, ln x1 - ln x2 - ln x3 = {math.log(x1) - math.log(x2) - math.log(x3):.3e}, "
                            f"ln x1 + ln x2 - ln x3 = {math.log(x1) + math.log(x2) - math.log(x3):.3e}")
