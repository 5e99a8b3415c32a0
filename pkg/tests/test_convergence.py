import math

import numpy as np
import pytest

from splitkdv import logistic
from splitkdv.convergence import (
    ConvergenceReport,
    ErrorSample,
    ExactClosedForm,
    ExactSoliton,
    FineReference,
    SplitProblem,
    error_at_final_time,
    estimate_slope,
    kdv_soliton_problem,
    local_slopes,
    logistic_problem,
    run_refinement_studies,
    run_refinement_study,
)
from splitkdv.exceptions import BlowUpError
from splitkdv.kdv import SolitonParams
from splitkdv.spectral import PeriodicGrid, sobolev_norm
from splitkdv.splitting import FunctionFlow, IdentityFlow, SplitScheme, TimeGrid, run_splitting

LADDER4 = [0.2, 0.1, 0.05, 0.025]
KDV_LADDER = [1 / 32, 1 / 64, 1 / 128, 1 / 256, 1 / 512]


class ConstantOracle:
    kind = "constant"

    def __init__(self, value):
        self.value = value

    def evaluate(self, t):
        return self.value


def synthetic_problem(c=0.3):
    # each step adds c dt^2, so after T/dt steps the error is exactly c T dt
    return SplitProblem("synthetic", IdentityFlow(), FunctionFlow(lambda u, t: u + c * t * t, "B"), 1.0, 1.0)


def test_synthetic_power_law_gives_exact_slope():
    report = run_refinement_study(synthetic_problem(), "godunov", [0.125, 0.0625, 0.03125, 0.015625],
                                  oracle=ConstantOracle(1.0))
    assert report.errors == pytest.approx([0.3 * dt for dt in report.dts], rel=1e-12)
    assert report.slope == pytest.approx(1.0, abs=1e-10)
    assert report.fit_residual < 1e-10


@pytest.mark.parametrize(
    "errors, expected",
    [([0.4, 0.2, 0.1], 1.0), ([0.16, 0.04, 0.01], 2.0)],
)
def test_estimate_slope_examples(errors, expected):
    slope, resid = estimate_slope(list(zip([0.4, 0.2, 0.1], errors)))
    assert slope == pytest.approx(expected, abs=1e-12)
    assert resid < 1e-12


@pytest.mark.parametrize("order", [1.0, 2.0, 3.0])
def test_estimate_slope_tolerates_noise(order):
    gen = np.random.default_rng(7)
    dts = 0.2 / 2.0 ** np.arange(6)
    for _ in range(200):
        noisy = 1.7 * dts**order * gen.uniform(0.95, 1.05, dts.size)
        slope, _ = estimate_slope(ErrorSample(d, e, 0, 1.0) for d, e in zip(dts, noisy))
        assert abs(slope - order) <= 0.1


def test_estimate_slope_reports_residual():
    # one sample 10% off the line through the others
    slope, resid = estimate_slope([(0.4, 0.4), (0.2, 0.2), (0.1, 0.11), (0.05, 0.05)])
    assert 0.05 < resid < 0.15


def test_estimate_slope_with_zero_error_is_unavailable(caplog):
    assert estimate_slope([(0.2, 0.1), (0.1, 0.0)]) == (None, None)
    assert "unavailable" in caplog.text


def test_estimate_slope_rejects_bad_input():
    with pytest.raises(ValueError):
        estimate_slope([(0.1, 0.2)])
    with pytest.raises(ValueError):
        estimate_slope([(0.1, 0.2), (0.1, 0.3)])
    with pytest.raises(ValueError):
        estimate_slope([(0.2, math.inf), (0.1, 0.3)])


def test_local_slopes():
    assert local_slopes([0.4, 0.2, 0.1], [0.16, 0.04, 0.01]) == pytest.approx([2.0, 2.0])
    assert math.isnan(local_slopes([0.2, 0.1], [0.0, 0.1])[0])


def test_error_against_own_final_state_is_zero(soliton0):
    grid = soliton0.grid
    problem = kdv_soliton_problem(grid, SolitonParams(0.4, 50.0), T=0.25)
    traj = run_splitting(problem.flowA, problem.flowB, problem.u0, TimeGrid.from_steps(0.25, 8))
    assert error_at_final_time(traj, ConstantOracle(traj.final_state), s=2) == 0.0


def test_logistic_error_matches_closed_forms():
    traj = run_splitting(logistic.FLOW_A, logistic.FLOW_B, 0.5, TimeGrid.from_steps(1.0, 10), "godunov")
    err = error_at_final_time(traj, ExactClosedForm(0.5))
    expected = abs(logistic.godunov_closed_form(0.5, 0.1, 10) - logistic.exact_solution(0.5, 1.0))
    assert err == pytest.approx(expected, rel=1e-10)


def test_error_rejects_mismatched_grids(soliton0):
    traj = run_splitting(IdentityFlow(), IdentityFlow(), soliton0, TimeGrid.from_steps(1.0, 4))
    other = PeriodicGrid(100.0, 256)
    with pytest.raises(ValueError):
        error_at_final_time(traj, ExactSoliton(other, SolitonParams(0.4, 50.0)))
    with pytest.raises(ValueError):
        error_at_final_time(traj, ConstantOracle(0.0))


def test_soliton_and_fine_reference_oracles_agree(kdv_grid, soliton_params, soliton0):
    exact = ExactSoliton(kdv_grid, soliton_params).evaluate(1.0)
    ref = FineReference.for_ladder(soliton0, KDV_LADDER).evaluate(1.0)
    assert sobolev_norm(exact - ref, 0) <= 1e-8


def test_fine_reference_is_cached(soliton0):
    oracle = FineReference(soliton0, dt_ref=1e-2)
    assert oracle.evaluate(0.1) is oracle.evaluate(0.1 + 1e-15)


def test_ladder_validation():
    problem = logistic_problem()
    with pytest.raises(ValueError, match="at least 4"):
        run_refinement_study(problem, "godunov", [0.2, 0.1, 0.05])
    with pytest.raises(ValueError, match="decreasing"):
        run_refinement_study(problem, "godunov", [0.2, 0.05, 0.1, 0.025])
    with pytest.raises(ValueError, match="integer"):
        run_refinement_study(problem, "godunov", [0.3, 0.1, 0.05, 0.025])


def test_fine_reference_must_be_fine_enough(soliton0):
    problem = kdv_soliton_problem(soliton0.grid, SolitonParams(0.4, 50.0))
    with pytest.raises(ValueError, match="/ 16"):
        run_refinement_study(problem, "strang", KDV_LADDER, oracle=FineReference(soliton0, dt_ref=1e-3))


def test_logistic_slopes_on_the_four_step_ladder():
    problem = logistic_problem(0.5, 1.0)
    god = run_refinement_study(problem, "godunov", LADDER4)
    strang = run_refinement_study(problem, "strang", LADDER4)
    assert god.oracle == "exact-closed-form"
    assert god.slope == pytest.approx(1.0, abs=0.05)
    assert strang.slope == pytest.approx(2.0, abs=0.1)
    assert god.dts == LADDER4


def _fragile_problem(limit):
    def b(u, t):
        if t > limit:
            raise BlowUpError(f"step {t} too large")
        return logistic.flow_B(u, t)

    return SplitProblem("fragile", logistic.FLOW_A, FunctionFlow(b, "B"), 0.5, 1.0)


def test_failed_rungs_are_recorded_not_fatal():
    ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625]
    report = run_refinement_study(_fragile_problem(0.2), "godunov", ladder)
    assert list(report.failures) == [0.25]
    assert "step 0" in report.failures[0.25]
    assert report.dts == ladder[1:]
    assert report.slope == pytest.approx(1.0, abs=0.1)


def test_too_few_surviving_rungs_leave_slope_unavailable():
    ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625]
    report = run_refinement_study(_fragile_problem(0.1), "godunov", ladder)
    assert sorted(report.failures) == [0.125, 0.25]
    assert report.slope is None
    assert not report.within()


def test_report_csv_format(tmp_path):
    report = run_refinement_study(logistic_problem(), "strang", LADDER4)
    path = tmp_path / "r.csv"
    report.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "dt,error,local_slope"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[2] == ""
    assert float(first[1]) == report.errors[0]
    assert float(lines[2].split(",")[2]) == report.local_slopes[0]
    slope_txt, resid_txt = lines[-1].removeprefix("# ").split()
    assert float(slope_txt.removeprefix("slope=")) == report.slope
    assert float(resid_txt.removeprefix("residual=")) == report.fit_residual


def test_report_within_bands():
    report = ConvergenceReport(SplitScheme.STRANG, "x", slope=1.95)
    assert report.within()
    assert not report.within((0.8, 1.2))
    assert not ConvergenceReport(SplitScheme.GODUNOV, "x", slope=1.95).within()


def test_parallel_runs_are_deterministic(soliton0):
    problem = kdv_soliton_problem(soliton0.grid, SolitonParams(0.4, 50.0), T=0.25)
    ladder = [0.25 / n for n in (8, 16, 32, 64)]
    oracle = FineReference.for_ladder(soliton0, ladder)
    serial = run_refinement_studies(problem, "strang", ladder, (0, 1), oracle=oracle, jobs=1)
    threaded = run_refinement_studies(problem, "strang", ladder, (0, 1), oracle=oracle, jobs=4)
    for s in (0, 1):
        assert serial[s].to_csv() == threaded[s].to_csv()


@pytest.mark.slow
@pytest.mark.parametrize("scheme", ["godunov", "strang"])
def test_slopes_agree_across_norms(scheme, kdv_grid, soliton_params, soliton0):
    problem = kdv_soliton_problem(kdv_grid, soliton_params)
    reports = run_refinement_studies(problem, scheme, KDV_LADDER, (0, 1, 2), jobs=2)
    slopes = [reports[s].slope for s in (0, 1, 2)]
    assert max(slopes) - min(slopes) < 0.15
    assert all(r.within() for r in reports.values())
