"""Periodic pseudospectral toolbox.

Conventions
-----------
The grid covers ``[0, L)`` with ``N`` (even) points ``x_j = j L / N``.  Fourier
coefficients are normalized so that the zero mode is the mean::

    u_hat[m] = (1/N) * sum_j u(x_j) exp(-i k_m x_j),   k_m = 2 pi m / L,

with ``m`` running over ``-N/2 .. N/2 - 1``.  Under this normalization
Parseval reads ``int |u|^2 dx = L * sum_m |u_hat[m]|^2`` and every norm below
carries the explicit factor ``L``.

The Nyquist mode ``m = -N/2`` has no conjugate partner, so it is dropped from
every odd-order derivative and from dealiased products.

Internally the real-to-complex transform (``numpy.fft.rfft``) is used; the
public :class:`Spectrum` holds the full two-sided coefficient vector in
numpy's FFT ordering.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from numbers import Real

import numpy as np

__all__ = [
    "PeriodicGrid",
    "RealField",
    "Spectrum",
    "to_spectrum",
    "from_spectrum",
    "derivative",
    "dealiased_product",
    "sobolev_norm",
    "sobolev_inner",
    "l2_inner",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on ``[0, L)`` with ``N`` points and its wavenumber tables."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0 or not np.isfinite(self.L):
            raise ValueError(f"domain length must be positive, got {self.L!r}")
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 4, got {self.N!r}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.N) * (self.L / self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in FFT ordering (Nyquist listed as ``-N/2``)."""
        m = np.fft.fftfreq(self.N, d=1.0 / self.N).round().astype(np.int64)
        m.flags.writeable = False
        return m

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers ``2 pi m / L`` in FFT ordering."""
        k = (2.0 * np.pi / self.L) * self.modes
        k.flags.writeable = False
        return k

    @cached_property
    def rk(self) -> np.ndarray:
        """Wavenumbers of the ``rfft`` half spectrum; the last entry is the Nyquist mode."""
        m = np.arange(self.N // 2 + 1, dtype=np.float64)
        m[-1] = -self.N // 2
        k = (2.0 * np.pi / self.L) * m
        k.flags.writeable = False
        return k

    @cached_property
    def rk_odd(self) -> np.ndarray:
        """``rk`` with the Nyquist entry zeroed, for odd-order operators."""
        k = self.rk.copy()
        k[-1] = 0.0
        k.flags.writeable = False
        return k

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """How many two-sided modes each half-spectrum entry stands for."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        w.flags.writeable = False
        return w

    @property
    def dealias_cutoff(self) -> int:
        """Largest retained ``|m|`` under the 2/3 rule (strictly ``3 * cutoff < N``)."""
        return (self.N - 1) // 3

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.arange(self.N // 2 + 1) <= self.dealias_cutoff
        mask.flags.writeable = False
        return mask

    @property
    def k_max(self) -> float:
        return np.pi * self.N / self.L

    @property
    def dx(self) -> float:
        return self.L / self.N

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(values) / self.N

    def irfft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfft(coeffs * self.N, n=self.N)

    def sobolev_weight(self, s: int) -> np.ndarray:
        """``sum_{j=0}^s k^(2j)`` on the half spectrum."""
        k2 = self.rk**2
        weight = np.ones_like(k2)
        term = np.ones_like(k2)
        for _ in range(s):
            term = term * k2
            weight = weight + term
        return weight


@dataclass(frozen=True, eq=False)
class RealField:
    """Samples of a real periodic function on a :class:`PeriodicGrid`."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field samples must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> RealField:
        return cls(grid, fn(grid.x))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> RealField:
        return cls(grid, np.zeros(grid.N))

    def _coerce(self, other):
        if isinstance(other, RealField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        if isinstance(other, Real):
            return float(other)
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return RealField(self.grid, self.values + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return RealField(self.grid, self.values - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return RealField(self.grid, v - self.values)

    def __neg__(self):
        return RealField(self.grid, -self.values)

    def __mul__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return RealField(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return RealField(self.grid, self.values / float(scalar))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"RealField(L={self.grid.L}, N={self.grid.N}, max|u|={self.max_abs():.3g})"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Two-sided Fourier coefficients of a real field (FFT ordering)."""

    grid: PeriodicGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} coefficients, got shape {coeffs.shape}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def __getitem__(self, m: int) -> complex:
        """Coefficient of mode ``m`` (``-N/2 <= m < N/2``)."""
        N = self.grid.N
        if not -N // 2 <= m < N // 2:
            raise IndexError(f"mode {m} outside [-{N // 2}, {N // 2})")
        return complex(self.coeffs[m % N])


def to_spectrum(f: RealField) -> Spectrum:
    return Spectrum(f.grid, np.fft.fft(f.values) / f.grid.N)


def from_spectrum(s: Spectrum, rtol: float = 1e-12) -> RealField:
    """Inverse transform; rejects spectra that are not conjugate symmetric."""
    c = s.coeffs
    N = s.grid.N
    partner = np.conj(c[(-np.arange(N)) % N])
    scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
    if np.max(np.abs(c - partner)) > rtol * scale:
        raise ValueError("spectrum is not conjugate symmetric")
    half = c[: N // 2 + 1].copy()
    half[-1] = half[-1].real
    return RealField(s.grid, s.grid.irfft(half))


def _check_order(order: int) -> int:
    if int(order) != order or order < 0:
        raise ValueError(f"derivative order must be a nonnegative integer, got {order!r}")
    return int(order)


def spectral_derivative(grid: PeriodicGrid, coeffs: np.ndarray, order: int) -> np.ndarray:
    """Apply ``d^order/dx^order`` to half-spectrum coefficients."""
    if order == 0:
        return coeffs
    k = grid.rk_odd if order % 2 else grid.rk
    return coeffs * (1j * k) ** order


def derivative(f: RealField, order: int = 1) -> RealField:
    order = _check_order(order)
    if order == 0:
        return f
    grid = f.grid
    return RealField(grid, grid.irfft(spectral_derivative(grid, grid.rfft(f.values), order)))


def dealiased_product(f: RealField, g: RealField) -> RealField:
    """Pointwise product with 2/3-rule truncation before and after."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    mask = grid.dealias_mask
    fv = grid.irfft(grid.rfft(f.values) * mask)
    gv = grid.irfft(grid.rfft(g.values) * mask)
    return RealField(grid, grid.irfft(grid.rfft(fv * gv) * mask))


def sobolev_inner(f: RealField, g: RealField, s: int) -> float:
    """Discrete ``(f, g)_{H^s} = sum_{j<=s} int d^j f d^j g dx`` via Parseval."""
    s = _check_order(s)
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    cf = grid.rfft(f.values)
    cg = grid.rfft(g.values)
    terms = grid.multiplicity * grid.sobolev_weight(s) * (cf * np.conj(cg)).real
    return float(grid.L * np.sum(terms))


def sobolev_norm(f: RealField, s: int = 0) -> float:
    s = _check_order(s)
    grid = f.grid
    c = grid.rfft(f.values)
    terms = grid.multiplicity * grid.sobolev_weight(s) * (c.real**2 + c.imag**2)
    return float(np.sqrt(grid.L * np.sum(terms)))


def l2_inner(f: RealField, g: RealField) -> float:
    return sobolev_inner(f, g, 0)


def write_field_csv(path, f: RealField) -> None:
    """Write a snapshot as ``x,u`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("x,u\n")
        for x, u in zip(f.grid.x, f.values):
            fh.write(f"{x:.17g},{u:.17g}\n")


def read_field_csv(path) -> RealField:
    """Read an ``x,u`` snapshot; the domain length is inferred from the spacing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "u"]:
            raise ValueError(f"{path}: expected header 'x,u', got {header}")
        rows = [(float(a), float(b)) for a, b in reader]
    if len(rows) < 4:
        raise ValueError(f"{path}: need at least 4 samples")
    x = np.array([r[0] for r in rows])
    u = np.array([r[1] for r in rows])
    N = len(x)
    grid = PeriodicGrid(N * (x[1] - x[0]), N)
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * grid.L):
        raise ValueError(f"{path}: samples are not on a uniform grid starting at 0")
    return RealField(grid, u)
