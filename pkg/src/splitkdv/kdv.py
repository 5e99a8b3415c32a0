"""KdV ``u_t = u u_x - u_xxx`` split into the Airy part ``A(u) = -u_xxx`` and
the Burgers part ``B(u) = u u_x``.

All flows act on :class:`~splitkdv.spectral.RealField` states.  The Airy flow
is exact (a phase per Fourier mode), the Burgers flow is RK4 on the dealiased
Galerkin system, and :class:`KdVReference` integrates the full equation with
integrating-factor RK4 to serve as the fine reference solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import BlowUpError
from .spectral import PeriodicGrid, RealField, dealiased_product, derivative, sobolev_norm
from .splitting import FlowMap, SplitTrajectory, extension_eval, locate_square

__all__ = [
    "airy_phase",
    "AiryFlow",
    "BurgersFlow",
    "KdVReference",
    "SolitonParams",
    "Invariants",
    "airy_evolve",
    "burgers_evolve",
    "kdv_reference_evolve",
    "airy_rhs",
    "burgers_rhs",
    "kdv_rhs",
    "soliton",
    "commutator_AB",
    "forcing_F",
    "forcing_G",
    "conserved_quantities",
]

BLOWUP_GROWTH = 10.0


def airy_phase(grid: PeriodicGrid, tau: float) -> np.ndarray:
    """Half-spectrum multiplier ``exp(i k^3 tau)`` of the flow of ``u_t = -u_xxx``."""
    return np.exp(1j * grid.rk_odd**3 * tau)


def _nonlinear_hat(grid: PeriodicGrid, c: np.ndarray):
    """Dealiased ``u u_x = (u^2)_x / 2`` on half-spectrum coefficients; also returns ``u``."""
    mask = grid.dealias_mask
    u = grid.irfft(c * mask)
    w = grid.rfft(u * u) * mask
    return 0.5j * grid.rk_odd * w, u


def _check_growth(u: np.ndarray, bound: float, what: str, t: float):
    peak = np.max(np.abs(u))
    if not np.isfinite(peak):
        raise BlowUpError(f"{what}: non-finite values at t={t:.6g}")
    if bound > 0 and peak > bound:
        raise BlowUpError(
            f"{what}: max|u| grew beyond {BLOWUP_GROWTH:g}x its initial value at t={t:.6g} "
            "(gradient blow-up / shock formation)"
        )


def airy_rhs(f: RealField) -> RealField:
    return -derivative(f, 3)


def burgers_rhs(f: RealField) -> RealField:
    return dealiased_product(f, derivative(f, 1))


def kdv_rhs(f: RealField) -> RealField:
    return burgers_rhs(f) + airy_rhs(f)


class AiryFlow(FlowMap):
    """Exact flow of ``v_tau = -v_xxx``; negative durations run it backwards."""

    label = "A"

    def __init__(self, grid: PeriodicGrid):
        self.grid = grid

    def _evolve(self, f: RealField, tau: float) -> RealField:
        grid = self.grid
        return RealField(grid, grid.irfft(grid.rfft(f.values) * airy_phase(grid, tau)))


class BurgersFlow(FlowMap):
    """RK4 flow of ``v_t = v v_x`` with a dealiased pseudospectral right-hand side.

    The number of substeps per call is
    ``max(min_substeps, ceil(t * k_max * max|f| / cfl))``.  Stepping is done on
    Fourier coefficients, which is the same linear recursion as stepping the
    grid values.
    """

    label = "B"

    def __init__(self, grid: PeriodicGrid, cfl: float = 0.25, min_substeps: int = 1):
        if not cfl > 0:
            raise ValueError("cfl must be positive")
        self.grid = grid
        self.cfl = cfl
        self.min_substeps = max(1, int(min_substeps))

    def substeps(self, f: RealField, t: float) -> int:
        n = math.ceil(t * self.grid.k_max * f.max_abs() / self.cfl)
        return max(self.min_substeps, n)

    def _evolve(self, f: RealField, t: float) -> RealField:
        if t < 0:
            raise ValueError("the Burgers flow only runs forward in time")
        grid = self.grid
        n_sub = self.substeps(f, t)
        h = t / n_sub
        bound = BLOWUP_GROWTH * f.max_abs()
        c = grid.rfft(f.values)
        for i in range(n_sub):
            k1, u = _nonlinear_hat(grid, c)
            _check_growth(u, bound, "Burgers flow", i * h)
            k2, _ = _nonlinear_hat(grid, c + 0.5 * h * k1)
            k3, _ = _nonlinear_hat(grid, c + 0.5 * h * k2)
            k4, _ = _nonlinear_hat(grid, c + h * k3)
            c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u = grid.irfft(c)
        _check_growth(u, bound, "Burgers flow", t)
        return RealField(grid, u)


class KdVReference(FlowMap):
    """Integrating-factor RK4 for the full KdV equation.

    In the variable ``w_hat = exp(-i k^3 s) u_hat`` the stiff dispersive term
    disappears; RK4 then only sees the nonlinearity.  The substep is the
    smaller of ``dt_ref`` and the advective limit ``cfl / (k_max max|u|)``,
    shrunk so that it divides the requested time exactly.
    """

    label = "C"

    def __init__(self, grid: PeriodicGrid, dt_ref: float | None = None, cfl: float = 0.25,
                 nonlinear: bool = True):
        self.grid = grid
        self.dt_ref = dt_ref
        self.cfl = cfl
        self.nonlinear = nonlinear

    def substep_count(self, f: RealField, t: float) -> int:
        h = math.inf if self.dt_ref is None else self.dt_ref
        peak = f.max_abs()
        if self.nonlinear and peak > 0:
            h = min(h, self.cfl / (self.grid.k_max * peak))
        if not math.isfinite(h):
            return 1
        return max(1, math.ceil(t / h * (1 - 1e-12)))

    def _evolve(self, f: RealField, t: float) -> RealField:
        if t < 0:
            raise ValueError("the reference integrator only runs forward in time")
        grid = self.grid
        n = self.substep_count(f, t)
        h = t / n
        E = airy_phase(grid, 0.5 * h)
        E2 = E * E
        c = grid.rfft(f.values)
        bound = BLOWUP_GROWTH * f.max_abs()
        for i in range(n):
            if not self.nonlinear:
                c = E2 * c
                continue
            Na, u = _nonlinear_hat(grid, c)
            _check_growth(u, bound, "KdV reference", i * h)
            a = h * Na
            b = h * _nonlinear_hat(grid, E * (c + 0.5 * a))[0]
            cc = h * _nonlinear_hat(grid, E * c + 0.5 * b)[0]
            d = h * _nonlinear_hat(grid, E2 * c + E * cc)[0]
            c = E2 * c + (E2 * a + 2.0 * E * (b + cc) + d) / 6.0
        u = grid.irfft(c)
        _check_growth(u, bound, "KdV reference", t)
        return RealField(grid, u)


def airy_evolve(f: RealField, tau: float) -> RealField:
    return AiryFlow(f.grid).evolve(f, tau)


def burgers_evolve(f: RealField, t: float, **kwargs) -> RealField:
    return BurgersFlow(f.grid, **kwargs).evolve(f, t)


def kdv_reference_evolve(f: RealField, t: float, **kwargs) -> RealField:
    return KdVReference(f.grid, **kwargs).evolve(f, t)


@dataclass(frozen=True)
class SolitonParams:
    """Soliton ``-12 kappa^2 sech^2(kappa (x - x0 - 4 kappa^2 t))``.

    ``L``, when given, is checked against ``kappa * L >= 30`` so that the
    periodic wrap is invisible at double precision.
    """

    kappa: float
    x0: float
    L: float | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.L is not None:
            self.check(self.L)

    def check(self, L: float):
        if self.kappa * L < 30:
            raise ValueError(
                f"kappa*L = {self.kappa * L:.4g} < 30: soliton tails are not negligible on this domain"
            )

    @property
    def speed(self) -> float:
        return 4.0 * self.kappa**2

    @property
    def amplitude(self) -> float:
        return -12.0 * self.kappa**2

    @property
    def mass(self) -> float:
        """``int u dx`` over the real line."""
        return -24.0 * self.kappa


def soliton(grid: PeriodicGrid, params: SolitonParams, t: float = 0.0) -> RealField:
    params.check(grid.L)
    L = grid.L
    y = np.mod(grid.x - params.x0 - params.speed * t + 0.5 * L, L) - 0.5 * L
    q = np.exp(-2.0 * params.kappa * np.abs(y))
    sech2 = 4.0 * q / (1.0 + q) ** 2
    return RealField(grid, params.amplitude * sech2)


def commutator_AB(f: RealField) -> RealField:
    """``[A, B](f, f) = -(3/2) d^2/dx^2 (f_x)^2``."""
    fx = derivative(f, 1)
    return -1.5 * derivative(dealiased_product(fx, fx), 2)


def _same_square(trajectory, t, tau, points):
    home = locate_square(trajectory, t, tau)
    for p in points:
        try:
            where = locate_square(trajectory, *p)
        except ValueError:
            where = None
        if where != home:
            raise ValueError(
                f"finite-difference stencil around ({t}, {tau}) leaves its square of the admissible set"
            )


def forcing_F(trajectory: SplitTrajectory, flowA: FlowMap, flowB: FlowMap, t: float, tau: float,
              fd_eps: float | None = None) -> RealField:
    """Splitting defect ``F = v_t - v v_x`` with a central difference in ``t``.

    ``fd_eps`` defaults to ``dt / 64``.
    """
    if fd_eps is None:
        fd_eps = trajectory.grid.dt / 64
    _same_square(trajectory, t, tau, [(t - fd_eps, tau), (t + fd_eps, tau)])
    v_plus = extension_eval(flowA, flowB, trajectory, t + fd_eps, tau)
    v_minus = extension_eval(flowA, flowB, trajectory, t - fd_eps, tau)
    v = extension_eval(flowA, flowB, trajectory, t, tau)
    return (v_plus - v_minus) / (2.0 * fd_eps) - burgers_rhs(v)


def forcing_G(trajectory: SplitTrajectory, flowA: FlowMap, flowB: FlowMap, t: float, tau: float,
              fd_eps: float | None = None) -> RealField:
    """Defect ``G = v_tau + v_xxx`` with a central difference in ``tau``."""
    if fd_eps is None:
        fd_eps = trajectory.grid.dt / 64
    _same_square(trajectory, t, tau, [(t, tau - fd_eps), (t, tau + fd_eps)])
    v_plus = extension_eval(flowA, flowB, trajectory, t, tau + fd_eps)
    v_minus = extension_eval(flowA, flowB, trajectory, t, tau - fd_eps)
    v = extension_eval(flowA, flowB, trajectory, t, tau)
    return (v_plus - v_minus) / (2.0 * fd_eps) - airy_rhs(v)


class Invariants(NamedTuple):
    mass: float
    momentum: float
    hamiltonian: float


def conserved_quantities(f: RealField) -> Invariants:
    """Mass ``int u``, momentum ``int u^2`` and Hamiltonian ``int u^3/6 + u_x^2/2``."""
    grid = f.grid
    c = grid.rfft(f.values)
    mass = grid.L * c[0].real
    momentum = sobolev_norm(f, 0) ** 2
    ux2 = grid.L * np.sum(grid.multiplicity * grid.rk_odd**2 * (c.real**2 + c.imag**2))
    cubic = grid.L * np.mean(f.values**3)
    return Invariants(float(mass), float(momentum), float(cubic / 6.0 + ux2 / 2.0))
