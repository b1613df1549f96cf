"""Periodic grid, cached-spectrum fields, and Fourier-multiplier machinery.

Conventions used throughout the package:

* The grid has ``n`` points (a power of two, at least 16) on a box of size
  ``length`` starting at ``x0``; samples are ``x0 + j*length/n``.
* Wavenumbers follow the FFT layout ``k_j = 2*pi*j/length`` with
  ``j in [-n/2, n/2)``.
* The forward transform carries ``1/n``: ``spectrum = fft(values)/n``, so a
  field is ``u(x) = sum_k c_k exp(i k x)`` and Parseval reads
  ``integral |u|^2 dx = length * sum_k |c_k|^2``.
* A multiplier is real-preserving iff ``m(-k) == conj(m(k))``.  The Nyquist
  mode has no positive partner; on application its output is implicitly
  symmetrized (values are the real part of the inverse transform), which is
  exact for fields with no Nyquist mass (all dealiased fields).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    BandEmptyError,
    MultiplierDomainError,
    NonzeroMeanError,
    ValidationError,
)

__all__ = [
    "Grid",
    "Field",
    "MultiplierSymbol",
    "apply_multiplier",
    "dyadic_project",
    "antiderivative",
    "dealias",
    "smooth_filter",
    "derivative",
    "hilbert_transform",
    "fractional_derivative",
    "antiderivative_symbol",
    "linear_propagator",
    "snap_to_dyadic",
]


class Grid:
    """Uniform periodic grid on ``[x0, x0 + length)``."""

    def __init__(self, n: int, length: float, x0: float | None = None):
        if n < 16 or (n & (n - 1)) != 0:
            raise ValidationError(f"grid size must be a power of two >= 16, got {n}")
        if not (length > 0) or not math.isfinite(length):
            raise ValidationError(f"box size must be positive and finite, got {length}")
        self.n = int(n)
        self.length = float(length)
        self.x0 = float(-length / 2 if x0 is None else x0)
        self.dx = self.length / self.n
        self.x = self.x0 + self.dx * np.arange(self.n)
        self.k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        self.k.flags.writeable = False
        self.x.flags.writeable = False

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.dx

    @property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2 * np.pi / self.length

    @property
    def center(self) -> float:
        return self.x0 + self.length / 2

    @property
    def x_centered(self) -> np.ndarray:
        return self.x - self.center

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.n == other.n
            and self.length == other.length
            and self.x0 == other.x0
        )

    def __hash__(self):
        return hash((self.n, self.length, self.x0))

    def __repr__(self):
        return f"Grid(n={self.n}, length={self.length:g}, x0={self.x0:g})"


class Field:
    """Real-valued state on a :class:`Grid` with a cached Fourier spectrum.

    Values and spectrum stay synchronized lazily; either representation can
    seed the other.  Instances are immutable by convention: operations return
    new fields.
    """

    __slots__ = ("grid", "_values", "_spectrum", "_imag_residue")

    def __init__(self, grid: Grid, values=None, spectrum=None):
        if (values is None) == (spectrum is None):
            raise ValidationError("provide exactly one of values or spectrum")
        self.grid = grid
        self._imag_residue = 0.0
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != (grid.n,):
                raise ValidationError(
                    f"values shape {values.shape} does not match grid n={grid.n}"
                )
            self._values = values
            self._spectrum = None
        else:
            spectrum = np.asarray(spectrum, dtype=complex)
            if spectrum.shape != (grid.n,):
                raise ValidationError(
                    f"spectrum shape {spectrum.shape} does not match grid n={grid.n}"
                )
            self._spectrum = spectrum
            self._values = None

    @classmethod
    def from_values(cls, grid: Grid, values) -> "Field":
        return cls(grid, values=values)

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "Field":
        return cls(grid, spectrum=spectrum)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, values=np.asarray(fn(grid.x), dtype=float))

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            full = np.fft.ifft(self._spectrum) * self.grid.n
            vals = full.real
            scale = np.max(np.abs(vals))
            self._imag_residue = float(
                np.max(np.abs(full.imag)) / scale if scale > 0 else np.max(np.abs(full.imag))
            )
            self._values = vals
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = np.fft.fft(self._values) / self.grid.n
        return self._spectrum

    @property
    def imag_residue(self) -> float:
        """Relative imaginary residue discarded when values were synthesized."""
        self.values
        return self._imag_residue

    @property
    def mean(self) -> float:
        return float(self.spectrum[0].real) if self._spectrum is not None else float(
            np.mean(self._values)
        )

    def l2(self) -> float:
        """L2 norm sqrt(integral u^2 dx)."""
        if self._values is not None:
            return float(np.sqrt(np.sum(self._values**2) * self.grid.dx))
        return float(np.sqrt(self.grid.length * np.sum(np.abs(self._spectrum) ** 2)))

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))

    def sobolev(self, s: float, homogeneous: bool = True) -> float:
        """Homogeneous Sobolev norm ||u||_{H^s}; the zero mode is excluded.

        ``integral ||D|^s u|^2 dx = length * sum |k|^(2s) |c_k|^2``.
        """
        c = self.spectrum
        k = self.grid.k
        if homogeneous:
            w = np.zeros_like(k)
            nz = k != 0
            w[nz] = np.abs(k[nz]) ** (2 * s)
        else:
            w = (1.0 + k**2) ** s
        return float(np.sqrt(self.grid.length * np.sum(w * np.abs(c) ** 2)))

    def __add__(self, other):
        self._check_same_grid(other)
        return Field(self.grid, values=self.values + other.values)

    def __sub__(self, other):
        self._check_same_grid(other)
        return Field(self.grid, values=self.values - other.values)

    def __mul__(self, a):
        if isinstance(a, Field):
            self._check_same_grid(a)
            return Field(self.grid, values=self.values * a.values)
        return Field(self.grid, values=self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, values=-self.values)

    def _check_same_grid(self, other):
        if self.grid != other.grid:
            raise ValidationError("fields live on different grids")

    def __repr__(self):
        return f"Field({self.grid!r}, |u|_max={np.max(np.abs(self.values)):.3e})"


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier ``k -> m(k)`` with a real-preserving parity tag.

    ``rule`` evaluates the symbol on an array of wavenumbers.  The symbol is
    real-preserving iff ``m(-k) == conj(m(k))``; :meth:`is_real_preserving`
    checks this on the paired modes of a grid (the unpaired Nyquist row is
    symmetrized on application and excluded from the check).
    """

    rule: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, k) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.asarray(self.rule(np.asarray(k, dtype=float)), dtype=complex)
        return out

    def is_real_preserving(self, grid: Grid, rtol: float = 1e-12) -> bool:
        m = self(grid.k)
        n = grid.n
        # paired modes j and n-j for j = 1 .. n/2-1; mode 0 must be real
        mp = m[1 : n // 2]
        mm = m[-1 : n // 2 : -1]
        scale = max(float(np.max(np.abs(m[np.isfinite(m)]), initial=0.0)), 1e-300)
        ok_pairs = np.allclose(mm, np.conj(mp), rtol=0, atol=rtol * scale)
        ok_zero = abs(m[0].imag) <= rtol * scale if np.isfinite(m[0]) else True
        return bool(ok_pairs and ok_zero)

    def __mul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        a, b = self.rule, other.rule
        nm = f"({self.name})*({other.name})" if self.name or other.name else ""
        return MultiplierSymbol(lambda k: np.asarray(a(k)) * np.asarray(b(k)), nm)


def derivative(order: int = 1) -> MultiplierSymbol:
    """d^order/dx^order, symbol (ik)^order."""
    return MultiplierSymbol(lambda k: (1j * k) ** order, f"d_x^{order}")


def hilbert_transform() -> MultiplierSymbol:
    """Hilbert transform H, symbol -i sgn(k)."""
    return MultiplierSymbol(lambda k: -1j * np.sign(k), "H")


def fractional_derivative(s: float) -> MultiplierSymbol:
    """|D|^s with the zero mode mapped to 0 (also for s < 0)."""

    def rule(k):
        out = np.zeros(np.shape(k), dtype=complex)
        nz = k != 0
        out[nz] = np.abs(k[nz]) ** s
        return out

    return MultiplierSymbol(rule, f"|D|^{s:g}")


def antiderivative_symbol() -> MultiplierSymbol:
    """1/(ik); non-finite at k = 0, guarded by :func:`apply_multiplier`."""
    return MultiplierSymbol(lambda k: 1.0 / (1j * k), "d_x^-1")


def linear_propagator(t: float) -> MultiplierSymbol:
    """exp(i k^3 t), the Airy group for u_t + u_xxx = 0."""
    return MultiplierSymbol(lambda k: np.exp(1j * k**3 * t), f"exp(ik^3 {t:g})")


def apply_multiplier(f: Field, m: MultiplierSymbol) -> Field:
    """Apply a Fourier multiplier: output spectrum is ``m(k) * spectrum``.

    Non-finite symbol values are tolerated only on modes carrying no spectral
    mass (they are mapped to zero there); otherwise the offending wavenumber
    is reported.
    """
    c = f.spectrum
    mv = m(f.grid.k)
    bad = ~np.isfinite(mv)
    if bad.any():
        scale = float(np.max(np.abs(c)))
        live = bad & (np.abs(c) > 1e-15 * scale)
        if live.any():
            kbad = f.grid.k[live]
            raise MultiplierDomainError(
                f"symbol {m.name or '<anonymous>'} is non-finite at live wavenumber(s) "
                f"k={np.array2string(kbad[:4], precision=6)}"
            )
        mv = np.where(bad, 0.0, mv)
    return Field.from_spectrum(f.grid, mv * c)


def _smooth_step(r: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for r <= 0, 1 for r >= 1."""
    r = np.clip(r, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        fa = np.where(r > 0, np.exp(-1.0 / np.maximum(r, 1e-300)), 0.0)
        fb = np.where(r < 1, np.exp(-1.0 / np.maximum(1.0 - r, 1e-300)), 0.0)
    return fa / (fa + fb)


def _low_mask(k: np.ndarray, cutoff: float, smooth: bool) -> np.ndarray:
    if not smooth:
        return (np.abs(k) < cutoff).astype(float)
    # transition over [0.75 c, c), scale-invariant so smooth shells telescope
    return 1.0 - _smooth_step((np.abs(k) / cutoff - 0.75) / 0.25)


def dyadic_project(f: Field, band: str, cutoff: float, smooth: bool = False) -> Field:
    """Littlewood-Paley style projections.

    band:
      * ``"shell"``  -- dyadic shell ``cutoff/2 < |k| <= cutoff``
      * ``"low"``    -- ``|k| < cutoff``  (includes the zero mode)
      * ``"plus"``   -- ``k >= cutoff``
      * ``"minus"``  -- ``k <= -cutoff``

    Sharp cutoffs by default; ``smooth=True`` uses a C-infinity transition on
    the top quarter of the band.  ``low + plus + minus`` is the identity for
    both variants.  Projections onto ``plus``/``minus`` are not
    real-preserving (they select signed half-lines).
    """
    grid = f.grid
    if not (cutoff > 0) or not math.isfinite(cutoff):
        raise ValidationError(f"cutoff must be positive and finite, got {cutoff}")
    if cutoff < grid.k_min:
        raise BandEmptyError(
            f"cutoff {cutoff:g} below smallest nonzero wavenumber {grid.k_min:g}"
        )
    k = grid.k
    if band == "low":
        mask = _low_mask(k, cutoff, smooth)
    elif band == "shell":
        if not smooth:
            mask = ((np.abs(k) > cutoff / 2) & (np.abs(k) <= cutoff)).astype(float)
        else:
            mask = _low_mask(k, cutoff, True) - _low_mask(k, cutoff / 2, True)
        if not np.any(mask > 1e-12):
            raise BandEmptyError(f"dyadic shell ({cutoff/2:g}, {cutoff:g}] holds no modes")
    elif band == "plus":
        mask = (1.0 - _low_mask(k, cutoff, smooth)) * (k > 0)
    elif band == "minus":
        mask = (1.0 - _low_mask(k, cutoff, smooth)) * (k < 0)
    else:
        raise ValidationError(f"unknown band {band!r}")
    return Field.from_spectrum(grid, mask * f.spectrum)


def snap_to_dyadic(value: float) -> float:
    """Nearest power of two (in log distance)."""
    if not value > 0:
        raise ValidationError("dyadic snap needs a positive value")
    return float(2.0 ** round(math.log2(value)))


def antiderivative(f: Field) -> Field:
    """Zero-mean antiderivative: spectrum divided by ik, zero mode set to 0.

    Requires zero-mean input (|mean| <= 1e-10 * rms); the output is normalized
    to zero mean.
    """
    scale = f.rms()
    if abs(f.mean) > 1e-10 * max(scale, 1e-300):
        raise NonzeroMeanError(
            f"antiderivative of nonzero-mean field (mean={f.mean:.3e}, rms={scale:.3e})"
        )
    k = f.grid.k
    c = f.spectrum.copy()
    c[0] = 0.0
    nz = k != 0
    c[nz] = c[nz] / (1j * k[nz])
    return Field.from_spectrum(f.grid, c)


def dealias(f: Field, fraction: float = 2.0 / 3.0) -> Field:
    """Zero all modes with |k| above ``fraction * k_nyquist``."""
    if not (0 < fraction <= 1):
        raise ValidationError(f"dealias fraction must lie in (0, 1], got {fraction}")
    k = f.grid.k
    mask = np.abs(k) <= fraction * f.grid.k_nyquist
    return Field.from_spectrum(f.grid, np.where(mask, f.spectrum, 0.0))


def smooth_filter(f: Field, strength: float, order: int = 36) -> Field:
    """Multiply the spectrum by exp(-strength * (|k|/k_nyquist)^order)."""
    if strength < 0:
        raise ValidationError("filter strength must be nonnegative")
    if strength == 0:
        return f
    k = f.grid.k
    damp = np.exp(-strength * (np.abs(k) / f.grid.k_nyquist) ** order)
    return Field.from_spectrum(f.grid, damp * f.spectrum)
