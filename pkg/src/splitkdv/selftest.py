"""Quick invariant suite behind ``splitkdv selftest``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import logistic
from .convergence import logistic_problem, run_refinement_study
from .kdv import AiryFlow, BurgersFlow, KdVReference, SolitonParams, conserved_quantities, soliton
from .spectral import PeriodicGrid, RealField, from_spectrum, sobolev_norm, to_spectrum
from .splitting import SplitScheme, TimeGrid, run_splitting


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _band_limited(grid: PeriodicGrid, rng, cutoff=None) -> RealField:
    cutoff = grid.dealias_cutoff if cutoff is None else cutoff
    c = np.zeros(grid.N // 2 + 1, dtype=complex)
    c[1 : cutoff + 1] = rng.standard_normal(cutoff) + 1j * rng.standard_normal(cutoff)
    c[0] = rng.standard_normal()
    return RealField(grid, grid.irfft(c))


def check_round_trip():
    grid = PeriodicGrid(2 * np.pi, 64)
    f = RealField(grid, np.random.default_rng(0).standard_normal(grid.N))
    err = float(np.max(np.abs(from_spectrum(to_spectrum(f)).values - f.values)))
    return err < 1e-12, f"max |f - F^-1 F f| = {err:.2e} (< 1e-12)"


def check_airy_unitarity():
    grid = PeriodicGrid(100.0, 512)
    f = _band_limited(grid, np.random.default_rng(1))
    g = AiryFlow(grid).evolve(f, 1.0)
    drift = max(abs(sobolev_norm(g, s) / sobolev_norm(f, s) - 1) for s in range(13))
    return drift <= 1e-12, f"max relative H^s drift, s=0..12: {drift:.2e} (<= 1e-12)"


def check_logistic_engine():
    u0, dt = 0.5, 0.1
    traj = run_splitting(logistic.FLOW_A, logistic.FLOW_B, u0, TimeGrid(1.0, dt), SplitScheme.GODUNOV)
    rel = max(abs(v / logistic.godunov_closed_form(u0, dt, n) - 1) for n, v in enumerate(traj.states))
    return rel <= 1e-12, f"engine vs closed-form Godunov iterate: {rel:.2e} (<= 1e-12)"


def check_logistic_rates():
    ladder = [0.2, 0.1, 0.05, 0.025, 0.0125]
    god = run_refinement_study(logistic_problem(0.5, 1.0), "godunov", ladder)
    strang = run_refinement_study(logistic_problem(0.5, 1.0), "strang", ladder)
    ok = abs(god.slope - 1) <= 0.05 and abs(strang.slope - 2) <= 0.1
    return ok, f"Godunov slope {god.slope:.4f}, Strang slope {strang.slope:.4f}"


def check_soliton_reference():
    grid = PeriodicGrid(100.0, 512)
    params = SolitonParams(0.4, 50.0)
    u0 = soliton(grid, params)
    ref = KdVReference(grid, dt_ref=1.0 / 8192).evolve(u0, 1.0)
    err = sobolev_norm(ref - soliton(grid, params, 1.0), 0)
    return err <= 1e-8, f"||reference - exact soliton||_H0 at t=1: {err:.2e} (<= 1e-8)"


def check_burgers_momentum():
    grid = PeriodicGrid(100.0, 512)
    u0 = soliton(grid, SolitonParams(0.4, 50.0))
    before = conserved_quantities(u0).momentum
    after = conserved_quantities(BurgersFlow(grid).evolve(u0, 0.1)).momentum
    drift = abs(after / before - 1)
    return drift <= 1e-10, f"Burgers momentum drift over t=0.1: {drift:.2e} (<= 1e-10)"


CHECKS = [
    ("spectral round trip", check_round_trip),
    ("Airy unitarity", check_airy_unitarity),
    ("logistic engine = closed form", check_logistic_engine),
    ("logistic convergence rates", check_logistic_rates),
    ("Burgers momentum", check_burgers_momentum),
    ("reference vs exact soliton", check_soliton_reference),
]


def run_selftest(checks=CHECKS) -> list[CheckResult]:
    results = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name:<{width}}  {r.detail}  [{r.seconds:.2f}s]")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
