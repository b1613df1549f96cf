"""Exact linear KdV propagation, the vector field L(t), and decay envelopes.

Region conventions (box-centered coordinate ``x``):

* hyperbolic   H = { x < -c t^(1/3) }
* self-similar S = { |x| <= c t^(1/3) }
* elliptic     E = { x > c t^(1/3) }

with ``c = 1`` by default.  The spatial weight is time-dependent,
``<x> = sqrt(x^2 + t^(2/3))``, and the elliptic log normalizer is clamped
below at 1.  All whole-line diagnostics are restricted to the clean window
(interior 80 percent of the box) and guarded by a boundary-mass check.
"""

from __future__ import annotations

import numpy as np

from .airy import DEFAULT_EVALUATOR, AiryEvaluator
from .errors import ContaminationError, ValidationError
from .spectral import Field, Grid, apply_multiplier, derivative, linear_propagator

__all__ = [
    "propagate_linear",
    "airy_kernel",
    "airy_kernel_field",
    "apply_L",
    "linear_decay_report",
    "time_weight",
    "region_masks",
    "window_mask",
    "boundary_mass_fraction",
    "envelope_suprema",
    "dyadic_region_ratios",
]

DEFAULT_REGION_CONSTANT = 1.0
DEFAULT_WINDOW_MARGIN = 0.1
DEFAULT_CONTAMINATION_THRESHOLD = 1e-6


def propagate_linear(f: Field, t: float) -> Field:
    """Solve u_t + u_xxx = 0 exactly: multiply the spectrum by exp(i k^3 t)."""
    if not np.isfinite(t):
        raise ValidationError("propagation time must be finite")
    return apply_multiplier(f, linear_propagator(t))


def airy_kernel(t: float, x, evaluator: AiryEvaluator | None = None):
    """Fundamental solution K(t, x) = t^(-1/3) Ai(x t^(-1/3)) for t > 0."""
    if not t > 0:
        raise ValidationError(f"airy kernel needs t > 0, got {t}")
    ev = evaluator or DEFAULT_EVALUATOR
    s = t ** (-1.0 / 3.0)
    return s * ev.ai(np.asarray(x, dtype=float) * s)


def airy_kernel_field(grid: Grid, t: float, center: float = 0.0) -> Field:
    """Kernel snapshot sampled on a grid (box-centered argument)."""
    return Field.from_values(grid, airy_kernel(t, grid.x - center))


def time_weight(x, t: float) -> np.ndarray:
    """<x> = sqrt(x^2 + |t|^(2/3))."""
    return np.sqrt(np.asarray(x, dtype=float) ** 2 + abs(t) ** (2.0 / 3.0))


def region_masks(grid: Grid, t: float, c: float = DEFAULT_REGION_CONSTANT):
    """Boolean masks (H, S, E) in the box-centered coordinate."""
    xr = grid.x_centered
    r = c * abs(t) ** (1.0 / 3.0)
    H = xr < -r
    S = np.abs(xr) <= r
    E = xr > r
    return H, S, E


def window_mask(grid: Grid, margin: float = DEFAULT_WINDOW_MARGIN) -> np.ndarray:
    """Clean window [x0 + margin L, x0 + (1 - margin) L]."""
    lo = grid.x0 + margin * grid.length
    hi = grid.x0 + (1.0 - margin) * grid.length
    return (grid.x >= lo) & (grid.x <= hi)


def boundary_mass_fraction(f: Field, margin: float = DEFAULT_WINDOW_MARGIN / 2) -> float:
    """Fraction of the L2 mass in the outer ``2*margin`` of the box."""
    w = f.values**2
    n = f.grid.n
    m = max(1, int(round(margin * n)))
    outer = np.sum(w[:m]) + np.sum(w[-m:])
    total = np.sum(w)
    return float(outer / total) if total > 0 else 0.0


def _require_clean(f: Field, threshold: float, what: str) -> float:
    bm = boundary_mass_fraction(f)
    if bm > threshold:
        raise ContaminationError(
            f"{what}: boundary mass fraction {bm:.3e} exceeds threshold {threshold:.1e}"
        )
    return bm


def apply_L(f: Field, t: float, contamination_threshold: float = DEFAULT_CONTAMINATION_THRESHOLD) -> Field:
    """Vector field L(t) u = x u - 3 t u_xx with box-centered x.

    Multiplication by x is meaningful only while the field is confined to the
    clean window, so the boundary-mass precondition is enforced.
    """
    _require_clean(f, contamination_threshold, "apply_L")
    uxx = apply_multiplier(f, derivative(2))
    return Field.from_values(f.grid, f.grid.x_centered * f.values - 3.0 * t * uxx.values)


def envelope_suprema(
    u: Field,
    t: float,
    c: float = DEFAULT_REGION_CONSTANT,
    window_margin: float = DEFAULT_WINDOW_MARGIN,
) -> dict:
    """Region-weighted decay envelopes at one time.

    Returns suprema over the clean window of

    * H u S:  t^(1/4) <x>^(1/4) |u|   and   t^(3/4) <x>^(-1/4) |u_x|
    * E:      <x> |u| / max(1, log(t^(-1/3) <x>))
              and  t^(1/2) <x>^(1/2) |u_x| / max(1, log(t^(-1/3) <x>)).
    """
    if not t > 0:
        raise ValidationError("envelopes need t > 0")
    grid = u.grid
    vals = u.values
    ux = apply_multiplier(u, derivative(1)).values
    xr = grid.x_centered
    w = time_weight(xr, t)
    win = window_mask(grid, window_margin)
    H, S, E = region_masks(grid, t, c)
    hs = (H | S) & win
    e = E & win
    out = {}
    if hs.any():
        out["env_HS_u"] = float(np.max(t**0.25 * w[hs] ** 0.25 * np.abs(vals[hs])))
        out["env_HS_ux"] = float(np.max(t**0.75 * w[hs] ** -0.25 * np.abs(ux[hs])))
    else:
        out["env_HS_u"] = 0.0
        out["env_HS_ux"] = 0.0
    if e.any():
        logn = np.maximum(1.0, np.log(t ** (-1.0 / 3.0) * w[e]))
        out["env_E_u"] = float(np.max(w[e] * np.abs(vals[e]) / logn))
        out["env_E_ux"] = float(np.max(t**0.5 * w[e] ** 0.5 * np.abs(ux[e]) / logn))
    else:
        out["env_E_u"] = 0.0
        out["env_E_ux"] = 0.0
    return out


def linear_decay_report(
    u0: Field,
    times,
    eps: float | None = None,
    c: float = DEFAULT_REGION_CONSTANT,
    contamination_threshold: float = DEFAULT_CONTAMINATION_THRESHOLD,
):
    """Propagate linearly and measure decay envelopes at each requested time.

    Returns a list of :class:`kdvlab.reports.NormReport`.  Contamination does
    not raise here: rows are flagged instead, so a scan that outruns the box
    is reported honestly rather than truncated.
    """
    from .reports import NormReport

    norm0 = u0.l2()
    if not np.isfinite(norm0):
        raise ValidationError("initial data has non-finite L2 norm")
    rows = []
    for t in times:
        ut = propagate_linear(u0, t)
        bm = boundary_mass_fraction(ut)
        env = envelope_suprema(ut, t, c=c)
        rows.append(
            NormReport(
                t=float(t),
                besov=None,
                lnl_hhalf=None,
                boundary_mass=bm,
                contaminated=bm > contamination_threshold,
                **env,
            )
        )
    return rows


def dyadic_region_ratios(u: Field, t: float, r_max: float | None = None) -> dict:
    """Measured dyadic elliptic quantities at time t (diagnostic).

    For dyadic ``R`` the annulus ``A_R = { R/2 < <x> <= R }`` (with ``A_1``
    the core ``<x> <= 1``) collects

        ||L u||_{L2(A_R)} / R^(1/2),   ||u||_{L2(A_R)} / R^(1/4),
        ||u_x||_{L2(A_R)} / R^(3/4),   ||u_xx||_{L2(A_R)} / R^(5/4),

    which the linear theory predicts stay bounded uniformly in R.
    """
    grid = u.grid
    xr = grid.x_centered
    w = time_weight(xr, t)
    win = window_mask(grid)
    lu = apply_L(u, t).values
    ux = apply_multiplier(u, derivative(1)).values
    uxx = apply_multiplier(u, derivative(2)).values
    vals = u.values
    dx = grid.dx
    if r_max is None:
        r_max = 0.4 * grid.length
    ratios = {"R": [], "Lu": [], "u": [], "ux": [], "uxx": []}
    R = 1.0
    while R <= r_max:
        ann = ((w <= R) if R == 1.0 else ((w > R / 2) & (w <= R))) & win
        if ann.any():
            def l2(arr):
                return np.sqrt(np.sum(arr[ann] ** 2) * dx)

            ratios["R"].append(R)
            ratios["Lu"].append(l2(lu) / R**0.5)
            ratios["u"].append(l2(vals) / R**0.25)
            ratios["ux"].append(l2(ux) / R**0.75)
            ratios["uxx"].append(l2(uxx) / R**1.25)
        R *= 2.0
    return {key: np.asarray(v) for key, v in ratios.items()}
