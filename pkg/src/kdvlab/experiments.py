"""Named initial data and preset experiments built from the core modules.

These are the scenario bodies behind the CLI: long-horizon decay scans,
small-data lifespan sweeps with breakdown detection, linearized-norm runs,
and soliton-emergence monitoring.  Everything here is deterministic given its
arguments; randomness never enters the physics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import evolve_linearized, ks_envelope_report
from .errors import ValidationError
from .linear import airy_kernel
from .reports import NormReport
from .schrodinger import (
    EmergenceReport,
    emergence_monitor,
    negative_spectrum,
    potential_from_field,
    soliton_forecast,
)
from .solver import (
    EvolveResult,
    Field,
    Grid,
    SimState,
    SolverControls,
    conserved,
    evolve,
)

__all__ = [
    "shape_profile",
    "initial_field",
    "norm_observer",
    "conserved_observer",
    "QuarticRun",
    "quartic_run",
    "breakdown_time",
    "QuarticSweep",
    "quartic_sweep",
    "emergence_run",
    "linearized_run",
]

_SHAPES = ("gaussian", "sech2", "bump", "airy-snapshot")


def shape_profile(name: str, width: float = 1.0, center: float = 0.0):
    """Unit-amplitude named profile as a callable of x."""
    if name == "gaussian":
        return lambda x: np.exp(-((x - center) ** 2) / (2 * width**2))
    if name == "sech2":
        return lambda x: 1.0 / np.cosh((x - center) / width) ** 2
    if name == "bump":

        def f(x):
            r = (x - center) / width
            out = np.zeros_like(np.asarray(x, dtype=float))
            inside = np.abs(r) < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
            return out

        return f
    if name == "airy-snapshot":
        return lambda x: airy_kernel(max(width, 1e-6) ** 3, x - center)
    raise ValidationError(f"unknown shape {name!r}; choose from {_SHAPES}")


def initial_field(
    grid: Grid,
    shape: str,
    amplitude: float,
    width: float = 1.0,
    center: float = 0.0,
    sign: float = 1.0,
    normalize: bool = False,
) -> Field:
    """Sampled initial data: sign * amplitude * profile, optionally scaled to
    unit L2 norm before the amplitude is applied."""
    prof = shape_profile(shape, width, center)
    f = Field.from_function(grid, prof)
    scale = float(sign) * float(amplitude)
    if normalize:
        norm = f.l2()
        if norm == 0:
            raise ValidationError("cannot normalize the zero profile")
        scale /= norm
    return f * scale


def norm_observer(eps: float, c: float = 1.0, contamination_threshold: float = 1e-6):
    """Observer emitting the NormReport columns (skips t <= 0)."""

    def obs(state: SimState) -> dict:
        if state.t <= 0:
            return {
                "besov": math.nan,
                "lnl_hhalf": math.nan,
                "env_HS_u": math.nan,
                "env_HS_ux": math.nan,
                "env_E_u": math.nan,
                "env_E_ux": math.nan,
            }
        rep = ks_envelope_report(
            state.u, state.t, eps, c=c, contamination_threshold=contamination_threshold
        )
        d = rep.as_dict()
        d.pop("t")
        d.pop("boundary_mass")
        d.pop("contaminated")
        return d

    return obs


def conserved_observer():
    def obs(state: SimState) -> dict:
        c = conserved(state.u)
        return {"E0": c.e0, "E1": c.e1, "E2": c.e2, "E3": c.e3}

    return obs


@dataclass
class QuarticRun:
    eps: float
    result: EvolveResult
    reports: list
    baseline: float
    baseline_t: float
    breakdown: float | None  # first doubling time of the H u S envelope

    @property
    def held_until(self) -> float:
        return self.result.state.t if self.breakdown is None else self.breakdown


def breakdown_time(rows, baseline_t: float = 1.0, factor: float = 2.0):
    """First time the H u S envelope exceeds ``factor`` times its value at the
    first checkpoint past ``baseline_t``.  Returns (baseline, t_star | None)."""
    usable = [r for r in rows if r["t"] >= baseline_t and np.isfinite(r.get("env_HS_u", math.nan))]
    if not usable:
        raise ValidationError("no usable envelope rows past the baseline time")
    base = usable[0]["env_HS_u"]
    if base <= 0:
        raise ValidationError("degenerate zero baseline envelope")
    for r in usable:
        if r["env_HS_u"] > factor * base:
            return base, r["t"]
    return base, None


def quartic_run(
    eps: float,
    grid: Grid,
    controls: SolverControls,
    horizon_factor: float = 6.0,
    shape: str = "gaussian",
    width: float = 1.0,
    region_constant: float = 1.0,
    observer_dt: float | None = None,
) -> QuarticRun:
    """One small-data lifespan run: u0 = -eps * (unit-norm profile).

    Evolves to ``horizon_factor * eps^-3`` with envelope observers and locates
    the breakdown time (first doubling of the H u S envelope past t = 1).
    Contamination does not stop the run; rows are flagged.
    """
    u0 = initial_field(grid, shape, eps, width=width, sign=-1.0, normalize=True)
    horizon = horizon_factor * eps**-3
    if observer_dt is not None:
        every = max(1, int(round(observer_dt / controls.dt)))
        controls = SolverControls(
            **{**controls.__dict__, "checkpoint_every": every, "stop_on_contamination": False}
        )
    res = evolve(
        SimState(t=0.0, u=u0),
        horizon,
        controls,
        observers=(norm_observer(eps, c=region_constant, contamination_threshold=np.inf),),
    )
    base, tstar = breakdown_time(res.series)
    reports = [NormReport(
        t=r["t"], env_HS_u=r["env_HS_u"], env_HS_ux=r["env_HS_ux"],
        env_E_u=r["env_E_u"], env_E_ux=r["env_E_ux"], besov=r["besov"],
        lnl_hhalf=r["lnl_hhalf"], boundary_mass=r["boundary_mass"],
        contaminated=r["contaminated"],
    ) for r in res.series if r["t"] > 0]
    return QuarticRun(eps=eps, result=res, reports=reports, baseline=base,
                      baseline_t=1.0, breakdown=tstar)


@dataclass
class QuarticSweep:
    runs: list
    slope: float
    intercept: float

    def summary_rows(self):
        rows = []
        for r in self.runs:
            rows.append(
                {
                    "eps": r.eps,
                    "baseline_env": r.baseline,
                    "breakdown_time": r.breakdown if r.breakdown is not None else math.nan,
                    "held_until": r.held_until,
                }
            )
        return rows


def quartic_sweep(eps_list, grid_for, controls_for, **kwargs) -> QuarticSweep:
    """Sweep runs over eps and fit log T* against log eps.

    ``grid_for`` and ``controls_for`` are callables of eps, letting the box
    grow with the horizon while n stays fixed.
    """
    runs = [quartic_run(e, grid_for(e), controls_for(e), **kwargs) for e in eps_list]
    pts = [(r.eps, r.breakdown) for r in runs if r.breakdown is not None]
    if len(pts) >= 2:
        le = np.log([p[0] for p in pts])
        lt = np.log([p[1] for p in pts])
        slope, intercept = np.polyfit(le, lt, 1)
    else:
        slope, intercept = math.nan, math.nan
    return QuarticSweep(runs=runs, slope=float(slope), intercept=float(intercept))


def emergence_run(
    eps: float,
    grid: Grid,
    controls: SolverControls,
    horizon_factor: float = 4.0,
    shape: str = "gaussian",
    width: float = 1.0,
    c1: float = 1.0,
    observer_dt: float = 2.0,
) -> EmergenceReport:
    """Forecast the soliton from the initial spectrum, then track its
    emergence along the nonlinear run."""
    u0 = initial_field(grid, shape, eps, width=width, sign=-1.0, normalize=True)
    xs, us = potential_from_field(u0)
    forecast = soliton_forecast(negative_spectrum(xs, us))
    horizon = min(horizon_factor * forecast.emergence_time, 1e6)
    every = max(1, int(round(observer_dt / controls.dt)))
    controls = SolverControls(
        **{**controls.__dict__, "checkpoint_every": every, "stop_on_contamination": False}
    )
    res = evolve(SimState(t=0.0, u=u0), horizon, controls, record_trajectory=True)
    traj = res.trajectory
    checkpoints = (
        (t, Field.from_spectrum(grid, spec))
        for t, spec in zip(traj.ts, traj.spectra)
        if t >= forecast.emergence_time / 8
    )
    return emergence_monitor(checkpoints, forecast=forecast, c1=c1)


def linearized_run(
    eps: float,
    grid: Grid,
    controls: SolverControls,
    z0_builder,
    horizon: float,
    dt_z: float | None = None,
):
    """Nonlinear run with trajectory checkpoints, then the linearized flow on
    top of it.  ``z0_builder(grid)`` supplies zero-mean data."""
    u0 = initial_field(grid, "gaussian", eps, width=1.0, sign=-1.0, normalize=True)
    res = evolve(SimState(t=0.0, u=u0), horizon, controls, record_trajectory=True)
    z0 = z0_builder(grid)
    return evolve_linearized(res.trajectory, z0, dt=dt_z)
