"""Shared report records produced by the measurement modules."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class NormReport:
    """Norms and region-wise decay envelopes of one state at one time.

    ``besov`` and ``lnl_hhalf`` are filled by the nonlinear analysis; linear
    scans leave them ``None``.
    """

    t: float
    env_HS_u: float
    env_HS_ux: float
    env_E_u: float
    env_E_ux: float
    besov: float | None = None
    lnl_hhalf: float | None = None
    boundary_mass: float = 0.0
    contaminated: bool = False

    def finite(self) -> bool:
        vals = [self.env_HS_u, self.env_HS_ux, self.env_E_u, self.env_E_ux]
        vals += [v for v in (self.besov, self.lnl_hhalf) if v is not None]
        return all(np.isfinite(v) and v >= 0 for v in vals)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SpectrumReport:
    """Negative spectrum of -d^2/dx^2 + u with counting data.

    ``eigenvalues`` are sorted most negative first.  ``bargmann`` is
    ``integral |x| max(-u, 0) dx``.  ``cross_check_discrepancy`` is the worst
    relative disagreement between the dense and shooting routes; the report is
    ``flagged`` when it exceeds the agreement tolerance.
    """

    eigenvalues: list
    bargmann: float
    method: str
    matrix_size: int
    shooting_tol: float
    cross_check_discrepancy: float
    tol_edge: float
    flagged: bool = False
    notes: str = ""

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["count"] = self.count
        return d


@dataclass
class SolitonForecast:
    """Soliton parameters implied by the lowest eigenvalue -mu^2."""

    mu: float
    amplitude: float
    speed: float
    width: float
    emergence_time: float

    @classmethod
    def from_mu(cls, mu: float) -> "SolitonForecast":
        return cls(
            mu=mu,
            amplitude=2 * mu**2,
            speed=4 * mu**2,
            width=1.0 / mu,
            emergence_time=mu**-3,
        )

    def as_dict(self) -> dict:
        return asdict(self)
