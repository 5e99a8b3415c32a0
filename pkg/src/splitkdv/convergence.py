"""Refinement studies: run a splitting over a ladder of time steps, measure the
final-time error against an oracle and fit the log-log slope."""

from __future__ import annotations

import io
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import logistic
from .exceptions import SplittingFailure
from .kdv import AiryFlow, BurgersFlow, KdVReference, SolitonParams, soliton
from .spectral import PeriodicGrid, RealField, sobolev_norm
from .splitting import FlowMap, SplitScheme, SplitTrajectory, TimeGrid, run_splitting

__all__ = [
    "SplitProblem",
    "logistic_problem",
    "kdv_problem",
    "kdv_soliton_problem",
    "ExactClosedForm",
    "ExactSoliton",
    "FineReference",
    "ErrorSample",
    "ConvergenceReport",
    "estimate_slope",
    "local_slopes",
    "error_at_final_time",
    "run_refinement_study",
    "run_refinement_studies",
    "ACCEPTANCE_BANDS",
]

log = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 4

ACCEPTANCE_BANDS = {
    SplitScheme.GODUNOV: (0.8, 1.2),
    SplitScheme.GODUNOV_REVERSED: (0.8, 1.2),
    SplitScheme.STRANG: (1.8, 2.2),
}


@dataclass
class SplitProblem:
    """Everything a refinement study needs to know about the equation."""

    name: str
    flowA: FlowMap
    flowB: FlowMap
    u0: object
    T: float


def logistic_problem(u0: float = 0.5, T: float = 1.0) -> SplitProblem:
    return SplitProblem("logistic", logistic.FLOW_A, logistic.FLOW_B, u0, T)


def kdv_problem(u0: RealField, T: float = 1.0, name: str = "kdv-custom",
                burgers_cfl: float = 0.25) -> SplitProblem:
    grid = u0.grid
    return SplitProblem(name, AiryFlow(grid), BurgersFlow(grid, cfl=burgers_cfl), u0, T)


def kdv_soliton_problem(grid: PeriodicGrid, params: SolitonParams, T: float = 1.0) -> SplitProblem:
    return kdv_problem(soliton(grid, params, 0.0), T, name="kdv-soliton")


class ExactClosedForm:
    """Exact logistic solution."""

    kind = "exact-closed-form"

    def __init__(self, u0: float):
        self.u0 = u0

    def evaluate(self, t: float) -> float:
        return logistic.exact_solution(self.u0, t)


class ExactSoliton:
    kind = "exact-soliton"

    def __init__(self, grid: PeriodicGrid, params: SolitonParams):
        self.grid = grid
        self.params = params

    def evaluate(self, t: float) -> RealField:
        return soliton(self.grid, self.params, t)


class FineReference:
    """High-accuracy KdV solution from integrating-factor RK4.

    Results are cached per (rounded) evaluation time, so a whole ladder shares
    one reference run.
    """

    kind = "fine-reference"

    def __init__(self, u0: RealField, dt_ref: float, cfl: float = 0.25):
        self.u0 = u0
        self.dt_ref = dt_ref
        self.integrator = KdVReference(u0.grid, dt_ref=dt_ref, cfl=cfl)
        self._cache = {}
        self._lock = threading.Lock()

    @classmethod
    def for_ladder(cls, u0: RealField, dt_ladder: Sequence[float], refine: int = 16, **kwargs):
        return cls(u0, min(dt_ladder) / refine, **kwargs)

    def evaluate(self, t: float) -> RealField:
        key = round(t, 12)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = self.integrator.evolve(self.u0, t)
            return self._cache[key]


@dataclass(frozen=True)
class ErrorSample:
    dt: float
    error: float
    norm_index: int
    final_time: float


def local_slopes(dts: Sequence[float], errors: Sequence[float]) -> list[float]:
    """Pairwise ``log(e_i / e_{i+1}) / log(dt_i / dt_{i+1})``."""
    out = []
    for (d0, e0), (d1, e1) in zip(zip(dts, errors), zip(dts[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(d0 / d1))
        else:
            out.append(math.nan)
    return out


def _as_pairs(samples):
    pairs = []
    for s in samples:
        if isinstance(s, ErrorSample):
            pairs.append((s.dt, s.error))
        else:
            dt, err = s
            pairs.append((float(dt), float(err)))
    return pairs


def estimate_slope(samples) -> tuple[float | None, float | None]:
    """Least-squares slope of ``log(error)`` against ``log(dt)``.

    Returns ``(slope, fit_residual)`` where the residual is the largest
    relative deviation of a sample from the fitted power law.  When any error
    is zero or negative the slope is unavailable and ``(None, None)`` is
    returned.
    """
    pairs = _as_pairs(samples)
    if len(pairs) < 2:
        raise ValueError("need at least two samples to fit a slope")
    dts = np.array([p[0] for p in pairs])
    errs = np.array([p[1] for p in pairs])
    if len(np.unique(dts)) != len(dts):
        raise ValueError("time steps must be distinct")
    if np.any(~np.isfinite(errs)):
        raise ValueError("errors must be finite")
    if np.any(errs <= 0):
        log.warning("non-positive error in refinement samples; slope unavailable")
        return None, None
    slope, intercept = np.polyfit(np.log(dts), np.log(errs), 1)
    fitted = np.exp(intercept + slope * np.log(dts))
    residual = float(np.max(np.abs(errs - fitted) / fitted))
    return float(slope), residual


@dataclass
class ConvergenceReport:
    scheme: SplitScheme
    problem: str
    samples: list = field(default_factory=list)
    slope: float | None = None
    fit_residual: float | None = None
    failures: dict = field(default_factory=dict)
    oracle: str = ""

    @property
    def dts(self) -> list[float]:
        return [s.dt for s in self.samples]

    @property
    def errors(self) -> list[float]:
        return [s.error for s in self.samples]

    @property
    def local_slopes(self) -> list[float]:
        return local_slopes(self.dts, self.errors)

    def within(self, band: tuple[float, float] | None = None) -> bool:
        lo, hi = band if band is not None else ACCEPTANCE_BANDS[self.scheme]
        return self.slope is not None and lo <= self.slope <= hi

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("dt,error,local_slope\n")
        local = [math.nan] + self.local_slopes
        for s, ls in zip(self.samples, local):
            ls_txt = "" if math.isnan(ls) else f"{ls:.17g}"
            buf.write(f"{s.dt:.17g},{s.error:.17g},{ls_txt}\n")
        slope = "nan" if self.slope is None else f"{self.slope:.17g}"
        resid = "nan" if self.fit_residual is None else f"{self.fit_residual:.17g}"
        buf.write(f"# slope={slope} residual={resid}\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def error_at_final_time(trajectory: SplitTrajectory, oracle, s: int = 0) -> float:
    """``|| v(T, T) - u(T) ||_{H^s}`` for fields, ``|v - u|`` for scalars."""
    approx = trajectory.final_state
    exact = oracle.evaluate(trajectory.final_time)
    if isinstance(approx, RealField) or isinstance(exact, RealField):
        if not (isinstance(approx, RealField) and isinstance(exact, RealField)):
            raise ValueError("cannot compare a field with a scalar")
        if approx.grid != exact.grid:
            raise ValueError("trajectory and oracle live on different grids")
        return sobolev_norm(approx - exact, s)
    return abs(float(approx) - float(exact))


def _validate_ladder(T: float, dt_ladder: Sequence[float]) -> list[float]:
    ladder = [float(dt) for dt in dt_ladder]
    if len(ladder) < 4:
        raise ValueError("a refinement ladder needs at least 4 time steps")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("the time-step ladder must be strictly decreasing")
    for dt in ladder:
        q = T / dt
        if dt <= 0 or abs(q - round(q)) > 1e-9 * max(1.0, q):
            raise ValueError(f"T/dt must be an integer; T={T}, dt={dt}")
    return ladder


def _default_oracle(problem: SplitProblem, ladder):
    if isinstance(problem.u0, RealField):
        return FineReference.for_ladder(problem.u0, ladder)
    return ExactClosedForm(problem.u0)


def run_refinement_studies(problem: SplitProblem, scheme, dt_ladder: Sequence[float],
                           norm_indices: Sequence[int] = (0,), oracle=None,
                           jobs: int = 1) -> dict[int, ConvergenceReport]:
    """One splitting run per time step, errors measured in every requested norm.

    Runs that fail (blow-up at a coarse step, say) are recorded in
    ``report.failures`` and left out of the fit.
    """
    scheme = SplitScheme.parse(scheme)
    ladder = _validate_ladder(problem.T, dt_ladder)
    if oracle is None:
        oracle = _default_oracle(problem, ladder)
    if isinstance(oracle, FineReference) and oracle.dt_ref > min(ladder) / 16 * (1 + 1e-12):
        raise ValueError(
            f"reference substep {oracle.dt_ref:g} must not exceed the smallest ladder step / 16"
        )
    # computed up front so concurrent workers share it
    oracle.evaluate(problem.T)

    def one(dt):
        grid = TimeGrid.from_steps(problem.T, round(problem.T / dt))
        try:
            traj = run_splitting(problem.flowA, problem.flowB, problem.u0, grid, scheme)
        except SplittingFailure as exc:
            log.info("dt=%g failed: %s", dt, exc)
            return dt, None, str(exc)
        errors = {s: error_at_final_time(traj, oracle, s) for s in norm_indices}
        return dt, (traj.final_time, errors), None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, ladder))
    else:
        results = [one(dt) for dt in ladder]

    reports = {}
    for s in norm_indices:
        report = ConvergenceReport(scheme, problem.name, oracle=oracle.kind)
        for dt, ok, failure in results:
            if ok is None:
                report.failures[dt] = failure
                continue
            final_time, errors = ok
            report.samples.append(ErrorSample(dt, errors[s], s, final_time))
        report.samples.sort(key=lambda smp: -smp.dt)
        if len(report.samples) >= MIN_FIT_SAMPLES:
            report.slope, report.fit_residual = estimate_slope(report.samples)
        reports[s] = report
    return reports


def run_refinement_study(problem: SplitProblem, scheme, dt_ladder: Sequence[float],
                         norm_index: int = 0, oracle=None, jobs: int = 1) -> ConvergenceReport:
    return run_refinement_studies(problem, scheme, dt_ladder, (norm_index,), oracle, jobs)[norm_index]
