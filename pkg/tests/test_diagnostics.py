import math

import numpy as np
import pytest

from src.core.diagnostics import (
    REPORT_COLUMNS,
    SolutionRef,
    Verdict,
    diagnose,
    error_bound_report,
    fejer_report,
    kernel_projection_solution,
    rlinear_report,
    theorem_rate,
)
from src.core.equilibrium import example51, example52, from_matrix
from src.core.errors import InvalidParameterError, MissingTraceDataError
from src.core.solvers import Method, SolverConfig, StepSchedule, solve

E = math.e


def _run(F, method, lam, coords, tol=1e-8, record=True):
    x0 = F.manifold.point(coords)
    _, trace = solve(method, F, F.manifold, x0, StepSchedule.constant(lam), SolverConfig(tol=tol, record_trace=record))
    return trace


@pytest.fixture
def ex52():
    F = example52(2)
    return F, SolutionRef(F.manifold.point([1.0, 1.0]), beta=1.0)


def test_solution_ref_validation(ex52):
    F, star = ex52
    assert star.validate(F, trials=200)
    assert not SolutionRef(F.manifold.point([2.0, 1.0])).validate(F, trials=200)
    with pytest.raises(InvalidParameterError):
        SolutionRef(star.x_star, beta=0.0)


def test_fejer_first_row(ex52):
    F, star = ex52
    trace = _run(F, Method.REMD, 0.5, [E, E])
    report = fejer_report(trace, star)
    assert report.frame.loc[0, "residual"] == pytest.approx(2 - 0.72 - 0.08 - 0.08, abs=1e-12)
    assert report.verdict is Verdict.HOLDS
    assert report.monotone_verdict is Verdict.HOLDS


def test_fejer_at_solution(ex52):
    F, star = ex52
    trace = _run(F, Method.REMB, 0.3, [1.0, 1.0])
    report = fejer_report(trace, star)
    assert np.all(report.frame["residual"] == 0.0)
    assert report.verdict is Verdict.HOLDS


def test_fejer_example51_characterization():
    F = example51()
    rng = np.random.Generator(np.random.Philox(8))
    for method in (Method.REMB, Method.REMD):
        for lam in (0.03, 0.15, 0.3):
            coords = rng.integers(5, 20, size=3, endpoint=True).astype(float)
            trace = _run(F, method, lam, coords)
            star = SolutionRef(kernel_projection_solution(F, F.manifold.point(coords)))
            assert fejer_report(trace, star).verdict is Verdict.HOLDS


def test_fejer_needs_points(ex52):
    F, star = ex52
    trace = _run(F, Method.REMB, 0.3, [E, E], record=False)
    with pytest.raises(MissingTraceDataError):
        fejer_report(trace, star)


def test_error_bound_remb_is_tight(ex52):
    F, star = ex52
    trace = _run(F, Method.REMB, 0.25, [E, E])
    report = error_bound_report(trace, star)
    row = report.frame.iloc[0]
    assert row["bound_lhs"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert row["bound_rhs"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert report.verdict_printed is Verdict.HOLDS
    assert report.satisfied_factor == "both"


def test_error_bound_remd_needs_effective_factor(ex52):
    F, star = ex52
    trace = _run(F, Method.REMD, 0.5, [E, E])
    report = error_bound_report(trace, star)
    row = report.frame.iloc[0]
    u0 = math.sqrt(2)
    assert row["bound_rhs"] == pytest.approx(0.6 * u0, rel=1e-12)
    assert row["bound_rhs_effective"] == pytest.approx(u0, rel=1e-12)
    assert report.verdict_printed is Verdict.VIOLATED
    assert report.verdict_effective is Verdict.HOLDS
    assert report.satisfied_factor == "effective"


def test_error_bound_requires_beta(ex52):
    F, star = ex52
    trace = _run(F, Method.REMB, 0.25, [E, E])
    with pytest.raises(InvalidParameterError):
        error_bound_report(trace, SolutionRef(star.x_star))


def test_rlinear_rates(ex52):
    F, star = ex52
    sched = StepSchedule.constant(0.25)
    trace = _run(F, Method.REMB, 0.25, [E, E])
    report = rlinear_report(trace, star, sched)
    assert report.theorem_rate == pytest.approx(math.sqrt(0.5))
    assert report.empirical_rate == pytest.approx(0.8, abs=1e-6)
    assert report.verdict is Verdict.VIOLATED

    trace = _run(F, Method.REMD, 0.9, [E, E])
    report = rlinear_report(trace, star, StepSchedule.constant(0.9))
    assert report.theorem_rate == 0.0
    assert report.empirical_rate == pytest.approx(0.55 / 1.45, abs=1e-6)
    assert report.verdict is Verdict.VIOLATED


def test_rlinear_at_solution(ex52):
    F, star = ex52
    trace = _run(F, Method.REMD, 0.2, [1.0, 1.0])
    report = rlinear_report(trace, star, StepSchedule.constant(0.2))
    assert report.verdict is Verdict.HOLDS
    assert math.isnan(report.empirical_rate)


@pytest.mark.parametrize("method,lam", [(Method.REMB, 0.03), (Method.REMB, 0.3), (Method.REMD, 0.06), (Method.REMD, 0.3)])
def test_empirical_rate_matches_contraction(ex52, method, lam):
    F, star = ex52
    trace = _run(F, method, lam, [7.0, 13.0])
    expected = 1 / (1 + lam) if method is Method.REMB else (1 - lam / 2) / (1 + lam / 2)
    assert rlinear_report(trace, star, StepSchedule.constant(lam)).empirical_rate == pytest.approx(expected, abs=1e-6)


def test_theorem_rate():
    assert theorem_rate(1.0, 0.25) == pytest.approx(math.sqrt(0.5))
    assert theorem_rate(1.0, 0.9) == 0.0


def test_kernel_projection():
    F = example51()
    x0 = F.manifold.point([5.0, 12.0, 7.0])
    sol = kernel_projection_solution(F, x0)
    u = np.log(sol.coords)
    assert u[0] + u[1] - u[2] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        kernel_projection_solution(from_matrix([1, 2, 0, 1], 2), F.manifold.point([1, 1, 1]))
    assert kernel_projection_solution(example52(3), x0).allclose(F.manifold.point([1, 1, 1]))


def test_diagnose_and_report_frame(ex52):
    F, star = ex52
    trace = _run(F, Method.REMB, 0.3, [4.0, 9.0])
    summary = diagnose(trace, star, StepSchedule.constant(0.3))
    frame = summary.report_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    assert len(frame) == trace.rows
    verdicts = summary.verdicts()
    assert verdicts["fejer"] == "holds"
    assert verdicts["error_bound"] == "holds"

    no_beta = diagnose(trace, SolutionRef(star.x_star), StepSchedule.constant(0.3))
    assert no_beta.verdicts()["rlinear"] == "not-applicable"
    assert no_beta.report_frame()["bound_lhs"].isna().all()
