"""Norm computers and proof-level diagnostics for the nonlinear runs.

Covers the inhomogeneous Besov norm used for the uniform energy bound, the
nonlinear vector field L^NL u = x u - 3 t u_xx + 9 t u^2, region envelope
reports, the linearized flow z_t + z_xxx = 6 d/dx(u z), and the modified
energy E = ||y||^2 + (cubic correction) for y = |D|^(-1/2) d^(-1) z.

Conventions: the low/high frequency split threshold t^(-1/3) is snapped to
the nearest dyadic shell boundary (and clamped into the representable range),
keeping the projections idempotent.  Zero-mean is required wherever d^(-1)
appears; the zero mode is excluded from negative-order norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContaminationError,
    NonzeroMeanError,
    ResolutionError,
    ValidationError,
)
from .linear import (
    DEFAULT_CONTAMINATION_THRESHOLD,
    DEFAULT_REGION_CONSTANT,
    boundary_mass_fraction,
    envelope_suprema,
)
from .reports import NormReport
from .solver import Trajectory
from .spectral import (
    Field,
    antiderivative,
    apply_multiplier,
    derivative,
    dyadic_project,
    fractional_derivative,
    hilbert_transform,
    snap_to_dyadic,
)

__all__ = [
    "besov_norm",
    "apply_LNL",
    "ks_envelope_report",
    "LinearizedState",
    "LinearizedResult",
    "evolve_linearized",
    "modified_energy",
    "hneg_half_norm",
    "snap_threshold",
]


def besov_norm(u: Field, eps: float) -> float:
    """Inhomogeneous Besov norm, homogeneous only above the threshold eps.

    Computes ``max(eps^(-1/2) ||P_{<eps} u||_L2,
    sup_{dyadic shells lambda >= eps} lambda^(-1/2) ||P_lambda u||_L2)``,
    an equivalent norm for the sum space (flat below eps, homogeneous
    Besov above); the equivalence constant is at most 2.  The threshold is
    snapped to the nearest dyadic value.
    """
    grid = u.grid
    if eps < grid.k_min:
        raise ResolutionError(
            f"besov threshold {eps:g} below grid resolution {grid.k_min:g}"
        )
    eps_d = snap_to_dyadic(eps)
    c = u.spectrum
    k = np.abs(grid.k)
    dxnorm = grid.length  # ||u||_L2^2 = length * sum |c|^2
    low = np.sqrt(dxnorm * np.sum(np.abs(c[k < eps_d]) ** 2))
    best = low / math.sqrt(eps_d)
    lam = eps_d
    kmax = float(k.max())
    while lam / 2 <= kmax:
        sel = (k > lam / 2) & (k <= lam)
        if sel.any():
            shell = np.sqrt(dxnorm * np.sum(np.abs(c[sel]) ** 2))
            best = max(best, shell / math.sqrt(lam))
        lam *= 2
    return float(best)


def apply_LNL(
    u: Field,
    t: float,
    contamination_threshold: float = DEFAULT_CONTAMINATION_THRESHOLD,
) -> Field:
    """Nonlinear vector field L^NL u = x u - 3 t u_xx + 9 t u^2 (box-centered x)."""
    bm = boundary_mass_fraction(u)
    if bm > contamination_threshold:
        raise ContaminationError(
            f"apply_LNL: boundary mass {bm:.3e} exceeds {contamination_threshold:.1e}"
        )
    uxx = apply_multiplier(u, derivative(2)).values
    vals = u.values
    out = u.grid.x_centered * vals - 3.0 * t * uxx + 9.0 * t * vals**2
    return Field.from_values(u.grid, out)


def ks_envelope_report(
    u: Field,
    t: float,
    eps: float,
    c: float = DEFAULT_REGION_CONSTANT,
    contamination_threshold: float = DEFAULT_CONTAMINATION_THRESHOLD,
) -> NormReport:
    """Full norm report at one time: Besov, ||L^NL u||_{H^1/2}, envelopes.

    Contamination does not raise: the row is flagged and the vector-field
    norm (which needs the clean window) is reported as NaN.
    """
    if not t > 0:
        raise ValidationError("ks_envelope_report needs t > 0")
    bm = boundary_mass_fraction(u)
    contaminated = bm > contamination_threshold
    env = envelope_suprema(u, t, c=c)
    if contaminated:
        lnl = math.nan
    else:
        lnl = apply_LNL(u, t, contamination_threshold).sobolev(0.5)
    return NormReport(
        t=float(t),
        besov=besov_norm(u, eps),
        lnl_hhalf=lnl,
        boundary_mass=bm,
        contaminated=bool(contaminated),
        **env,
    )


def snap_threshold(grid, t: float) -> float:
    """Dyadic-snapped hi/lo threshold t^(-1/3), clamped to the grid range."""
    raw = t ** (-1.0 / 3.0)
    lo, hi = grid.k_min, grid.k_nyquist / 2
    return snap_to_dyadic(min(max(raw, lo), hi))


def hneg_half_norm(z: Field) -> float:
    """||d^(-1) z||_{H^(-1/2)} = ||y||_L2 with y = |D|^(-1/2) d^(-1) z.

    Requires zero-mean z; the zero mode is excluded.
    """
    c = z.spectrum
    if abs(c[0]) > 1e-10 * max(z.rms(), 1e-300):
        raise NonzeroMeanError("H^(-1/2) norm of d^(-1) z needs zero-mean z")
    k = z.grid.k
    nz = k != 0
    return float(np.sqrt(z.grid.length * np.sum(np.abs(c[nz]) ** 2 / np.abs(k[nz]) ** 3)))


@dataclass
class LinearizedState:
    """Linearized flow state: z solves z_t + z_xxx = 6 d/dx(u z);
    y = |D|^(-1/2) d^(-1) z carries the H^(-1/2) content of w = d^(-1) z."""

    t: float
    z: Field
    y: Field


@dataclass
class LinearizedResult:
    states: list
    rows: list


def _y_of(z: Field) -> Field:
    w = antiderivative(z)
    return apply_multiplier(w, fractional_derivative(-0.5))


def evolve_linearized(
    traj: Trajectory,
    z0: Field,
    dt: float | None = None,
    dealias_fraction: float = 2.0 / 3.0,
    checkpoint_every: int = 50,
    with_energy: bool = True,
) -> LinearizedResult:
    """Integrate the linearized equation along a checkpointed trajectory.

    Uses the same exponential scheme as the nonlinear solver with the frozen
    coefficient u(t) cubically interpolated from the trajectory at the stage
    times.  Each checkpoint row records ||w||_{H^(-1/2)} = ||y||_L2 and, when
    ``with_energy``, the modified-energy parts.
    """
    grid = traj.grid
    if z0.grid != grid:
        raise ValidationError("z0 grid does not match trajectory grid")
    if dt is None:
        dt = traj.cadence / 10.0
    if not math.isfinite(traj.cadence) or traj.cadence > 10.0 * dt + 1e-12:
        raise ValidationError(
            f"trajectory cadence {traj.cadence:g} too coarse for dt={dt:g} "
            "(need cadence <= 10 dt)"
        )
    if abs(z0.mean) > 1e-10 * max(z0.rms(), 1e-300):
        raise NonzeroMeanError("linearized data z0 must have zero mean")

    n = grid.n
    k = 2 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
    lin = 1j * k**3
    E = np.exp(dt * lin)
    E2 = np.exp(dt * lin / 2)
    m = 64
    r = np.exp(2j * np.pi * (np.arange(1, m + 1) - 0.5) / m)
    LR = dt * lin[:, None] + r[None, :]
    eLR = np.exp(LR)
    Q = dt * np.mean((np.exp(LR / 2) - 1) / LR, axis=1)
    f1 = dt * np.mean((-4 - LR + eLR * (4 - 3 * LR + LR**2)) / LR**3, axis=1)
    f2 = dt * np.mean((2 + LR + eLR * (-2 + LR)) / LR**3, axis=1)
    f3 = dt * np.mean((-4 - 3 * LR - LR**2 + eLR * (4 - LR)) / LR**3, axis=1)
    mask = (np.abs(k) <= dealias_fraction * grid.k_nyquist).astype(float)

    def nonlinear(vz, u_vals):
        z = np.fft.irfft(vz, n=n)
        return 6j * k * np.fft.rfft(u_vals * z) * mask

    t0, t1 = traj.t_min, traj.t_max
    nsteps = int(round((t1 - t0) / dt))
    vz = np.fft.rfft(z0.values)
    vz[0] = 0.0

    states = [LinearizedState(t0, z0, _y_of(z0))]
    rows = []

    def record(t, zf):
        y = _y_of(zf)
        row = {"t": t, "w_hneg_half": y.l2()}
        if with_energy:
            u = traj.sample(t)
            e2, e3 = modified_energy(y, u, t)
            row.update({"energy_e2": e2, "energy_e3": e3, "energy": e2 + e3})
        rows.append(row)
        return y

    record(t0, z0)
    u_half_cache = {}

    def u_at(tq):
        got = u_half_cache.get(tq)
        if got is None:
            got = traj.sample(tq).values
            if len(u_half_cache) > 8:
                u_half_cache.clear()
            u_half_cache[tq] = got
        return got

    for s in range(nsteps):
        tn = t0 + s * dt
        u0v = u_at(round(tn, 12))
        uhv = u_at(round(tn + dt / 2, 12))
        u1v = u_at(round(tn + dt, 12))
        Nv = nonlinear(vz, u0v)
        a = E2 * vz + Q * Nv
        Na = nonlinear(a, uhv)
        b = E2 * vz + Q * Na
        Nb = nonlinear(b, uhv)
        cst = E2 * a + Q * (2 * Nb - Nv)
        Nc = nonlinear(cst, u1v)
        vz = E * vz + f1 * Nv + 2 * f2 * (Na + Nb) + f3 * Nc
        if not np.all(np.isfinite(vz)):
            raise ValidationError(f"linearized solve lost finiteness at t={tn + dt:g}")
        if (s + 1) % checkpoint_every == 0 or s + 1 == nsteps:
            t = t0 + (s + 1) * dt
            zf = Field.from_values(grid, np.fft.irfft(vz, n=n))
            y = record(t, zf)
            states.append(LinearizedState(t, zf, y))
    return LinearizedResult(states, rows)


def modified_energy(y: Field, u: Field, t: float, cutoff: float | None = None):
    """Quadratic energy and its restricted normal-form cubic correction.

    Returns ``(E2, E3)`` where ``E2 = ||y||_L2^2`` and

        E3 = 4 int H |D|^(-1/2) y_hi * d^(-1) u_hi * |D|^(-1/2) y_hi dx,

    with the hi parts cut at the (dyadic-snapped) threshold t^(-1/3).
    """
    if not t > 0:
        raise ValidationError("modified energy needs t > 0")
    if y.grid != u.grid:
        raise ValidationError("y and u live on different grids")
    grid = y.grid
    if cutoff is None:
        cutoff = snap_threshold(grid, t)
    e2 = y.l2() ** 2
    y_hi = y - dyadic_project(y, "low", cutoff)
    u_hi = u - dyadic_project(u, "low", cutoff)
    half = fractional_derivative(-0.5)
    a = apply_multiplier(apply_multiplier(y_hi, half), hilbert_transform()).values
    b = antiderivative(u_hi).values
    cvals = apply_multiplier(y_hi, half).values
    e3 = 4.0 * float(np.sum(a * b * cvals) * grid.dx)
    return float(e2), e3
