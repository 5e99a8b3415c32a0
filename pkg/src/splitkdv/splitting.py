"""Godunov (Lie) and Strang splitting for ``u_t = A(u) + B(u)``.

The engine only composes flow maps; it never looks inside the state.  A flow
map is any object with ``evolve(state, duration)`` and a short ``label``.

Besides the diagonal iterates ``v(t_n, t_n)`` the module evaluates the
two-time-variable extension ``v(t, tau)``: on each square
``[t_n, t_{n+1}]^2`` the first argument runs the B-flow and the second the
A-flow, starting from the stored iterate at the lower-left corner.  For
Strang splitting the squares are halved and the order of the two flows
alternates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .exceptions import FlowError, SplittingFailure

__all__ = [
    "FlowMap",
    "FunctionFlow",
    "IdentityFlow",
    "SplitScheme",
    "TimeGrid",
    "SplitTrajectory",
    "godunov_step",
    "godunov_reversed_step",
    "strang_step",
    "split_step",
    "run_splitting",
    "locate_square",
    "extension_eval",
    "traditional_extension_eval",
]


class FlowMap:
    """Solution operator of one sub-equation.

    Subclasses implement :meth:`_evolve`; :meth:`evolve` handles the zero
    duration identity so every flow satisfies ``evolve(s, 0) is s``.
    """

    label = "?"

    def evolve(self, state, duration: float):
        if duration == 0:
            return state
        return self._evolve(state, duration)

    def _evolve(self, state, duration):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(label={self.label!r})"


class FunctionFlow(FlowMap):
    """Wrap a plain ``fn(state, duration)`` as a flow map."""

    def __init__(self, fn: Callable[[Any, float], Any], label: str):
        self.fn = fn
        self.label = label

    def _evolve(self, state, duration):
        return self.fn(state, duration)


class IdentityFlow(FlowMap):
    label = "I"

    def _evolve(self, state, duration):
        return state


class SplitScheme(enum.Enum):
    GODUNOV = "godunov"
    GODUNOV_REVERSED = "godunov-reversed"
    STRANG = "strang"

    @classmethod
    def parse(cls, value) -> SplitScheme:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown scheme {value!r} (expected one of {names})") from None


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time levels ``t_n = n * dt`` for ``n = 0 .. floor(T / dt)``.

    ``T`` need not be a multiple of ``dt``; the run stops at
    :attr:`final_time`.  A quotient within a few ulps of an integer counts as
    that integer so that ``TimeGrid(1.0, 0.1)`` has ten steps.
    """

    T: float
    dt: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"final time must be positive, got {self.T!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"time step must be positive, got {self.dt!r}")

    @classmethod
    def from_steps(cls, T: float, n_steps: int) -> TimeGrid:
        return cls(T, T / n_steps)

    @property
    def n_steps(self) -> int:
        q = self.T / self.dt
        n = round(q)
        if abs(q - n) <= 8 * np.finfo(float).eps * max(1.0, q):
            return int(n)
        return int(math.floor(q))

    def t(self, n) -> float:
        return n * self.dt

    @property
    def final_time(self) -> float:
        return self.t(self.n_steps)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class SplitTrajectory:
    """Diagonal values ``v(t_n, t_n)`` of a splitting run."""

    scheme: SplitScheme
    grid: TimeGrid
    states: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times[: len(self.states)]

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return self.grid.t(len(self.states) - 1)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.times, self.states))


def godunov_step(flowA: FlowMap, flowB: FlowMap, state, dt: float):
    """One step of ``Phi_A(dt) o Phi_B(dt)``."""
    return flowA.evolve(flowB.evolve(state, dt), dt)


def godunov_reversed_step(flowA: FlowMap, flowB: FlowMap, state, dt: float):
    """One step of ``Phi_B(dt) o Phi_A(dt)``."""
    return flowB.evolve(flowA.evolve(state, dt), dt)


def strang_step(flowA: FlowMap, flowB: FlowMap, state, dt: float):
    """One step of ``Phi_B(dt/2) o Phi_A(dt) o Phi_B(dt/2)``.

    The middle A-flow is a single call over the full ``dt`` rather than two
    half steps; the two agree for exact flows.
    """
    half = 0.5 * dt
    return flowB.evolve(flowA.evolve(flowB.evolve(state, half), dt), half)


_STEPPERS = {
    SplitScheme.GODUNOV: godunov_step,
    SplitScheme.GODUNOV_REVERSED: godunov_reversed_step,
    SplitScheme.STRANG: strang_step,
}


def split_step(scheme, flowA: FlowMap, flowB: FlowMap, state, dt: float):
    return _STEPPERS[SplitScheme.parse(scheme)](flowA, flowB, state, dt)


def _is_finite(state) -> bool:
    values = getattr(state, "values", state)
    try:
        return bool(np.all(np.isfinite(values)))
    except TypeError:
        return True


def run_splitting(flowA: FlowMap, flowB: FlowMap, u0, grid: TimeGrid, scheme=SplitScheme.GODUNOV,
                  callback=None) -> SplitTrajectory:
    """Iterate the chosen splitting over ``grid`` and record every diagonal value.

    ``callback(n, t_n, state)``, if given, is called for every stored state.
    Raises :class:`SplittingFailure` carrying the failing step index when a
    sub-flow fails or produces a non-finite state.
    """
    scheme = SplitScheme.parse(scheme)
    step = _STEPPERS[scheme]
    traj = SplitTrajectory(scheme, grid, [u0])
    if callback is not None:
        callback(0, 0.0, u0)
    state = u0
    dt = grid.dt
    for n in range(grid.n_steps):
        try:
            state = step(flowA, flowB, state, dt)
        except (FlowError, ValueError, FloatingPointError, ZeroDivisionError) as exc:
            raise SplittingFailure(n, exc) from exc
        if not _is_finite(state):
            raise SplittingFailure(n, FlowError("non-finite state"))
        traj.states.append(state)
        if callback is not None:
            callback(n + 1, grid.t(n + 1), state)
    return traj


def _tolerance(grid: TimeGrid) -> float:
    return 8 * np.finfo(float).eps * max(1.0, grid.T, grid.final_time + grid.dt)


def locate_square(trajectory: SplitTrajectory, t: float, tau: float) -> tuple[int, int]:
    """Return ``(n, half)`` of the square of the admissible set holding ``(t, tau)``.

    For Godunov schemes ``half`` is always 0 and the square is
    ``[t_n, t_{n+1}]^2``.  For Strang, ``half`` is 0 for
    ``[t_n, t_{n+1/2}]^2`` and 1 for ``[t_{n+1/2}, t_{n+1}]^2``.  Points on a
    shared corner belong to the lower square.
    """
    grid = trajectory.grid
    width = grid.dt / 2 if trajectory.scheme is SplitScheme.STRANG else grid.dt
    lo, hi = min(t, tau), max(t, tau)
    tol = _tolerance(grid)
    n_last = len(trajectory.states) - 1
    n_sq_max = (2 * n_last + 1) if trajectory.scheme is SplitScheme.STRANG else n_last
    if lo < -tol or hi > (n_sq_max + 1) * width + tol:
        raise ValueError(f"({t}, {tau}) lies outside the computed time range")
    guess = max(0, int(math.ceil(hi / width)) - 1)
    for j in (guess - 1, guess, guess + 1):
        if 0 <= j <= n_sq_max and j * width - tol <= lo and hi <= (j + 1) * width + tol:
            if trajectory.scheme is SplitScheme.STRANG:
                return j // 2, j % 2
            return j, 0
    raise ValueError(f"({t}, {tau}) is not in the admissible set of the {trajectory.scheme.value} extension")


def extension_eval(flowA: FlowMap, flowB: FlowMap, trajectory: SplitTrajectory, t: float, tau: float):
    """Evaluate the two-time-variable extension ``v(t, tau)``.

    Godunov: ``Phi_A(tau - t_n) Phi_B(t - t_n) v(t_n, t_n)``.  The reversed
    scheme swaps which argument drives which flow.  Strang, first half
    square: as Godunov; second half square:
    ``Phi_B(t - t_{n+1/2}) Phi_A(tau - t_{n+1/2}) v(t_{n+1/2}, t_{n+1/2})``.
    Grid diagonal points return the stored iterate itself.
    """
    grid = trajectory.grid
    n, half = locate_square(trajectory, t, tau)
    tol = _tolerance(grid)
    m = int(round(t / grid.dt))
    if m < len(trajectory.states) and abs(t - grid.t(m)) <= tol and abs(tau - grid.t(m)) <= tol:
        return trajectory.states[m]
    start = trajectory.states[n]
    t_n = grid.t(n)
    if trajectory.scheme is SplitScheme.GODUNOV:
        return flowA.evolve(flowB.evolve(start, t - t_n), tau - t_n)
    if trajectory.scheme is SplitScheme.GODUNOV_REVERSED:
        return flowB.evolve(flowA.evolve(start, tau - t_n), t - t_n)
    h = 0.5 * grid.dt
    if half == 0:
        return flowA.evolve(flowB.evolve(start, t - t_n), tau - t_n)
    mid = flowA.evolve(flowB.evolve(start, h), h)
    t_mid = t_n + h
    return flowB.evolve(flowA.evolve(mid, tau - t_mid), t - t_mid)


def traditional_extension_eval(flowA: FlowMap, flowB: FlowMap, trajectory: SplitTrajectory, t: float):
    """Classical "double speed" interpolant of a Godunov run.

    On ``[t_n, t_{n+1/2}]`` the first flow runs for ``2 (t - t_n)``; on
    ``[t_{n+1/2}, t_{n+1}]`` the second flow runs for ``2 (t - t_{n+1/2})``
    from the half-step state.
    """
    if trajectory.scheme is SplitScheme.STRANG:
        raise ValueError("the double-speed extension is defined for Godunov runs only")
    first, second = (flowB, flowA) if trajectory.scheme is SplitScheme.GODUNOV else (flowA, flowB)
    grid = trajectory.grid
    tol = _tolerance(grid)
    t_end = trajectory.final_time
    if t < -tol or t > t_end + tol:
        raise ValueError(f"t={t} outside [0, {t_end}]")
    n = min(max(0, int(math.ceil(t / grid.dt)) - 1), len(trajectory.states) - 2)
    if n < 0:
        return trajectory.states[0]
    for m in (n, n + 1):
        if m < len(trajectory.states) and abs(t - grid.t(m)) <= tol:
            return trajectory.states[m]
    t_n = grid.t(n)
    t_mid = t_n + 0.5 * grid.dt
    start = trajectory.states[n]
    if t <= t_mid:
        return first.evolve(start, 2.0 * (t - t_n))
    return second.evolve(first.evolve(start, grid.dt), 2.0 * (t - t_mid))
