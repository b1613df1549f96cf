"""Airy function evaluation with an independent quadrature oracle.

Evaluation strategy (all in double precision):

* Maclaurin series on the cancellation-safe core ``-6.5 < x < 4.5``.
* Large-argument asymptotic expansions for ``x >= 9`` and ``x <= -9``.
* In the gaps, Taylor marching of ``y'' = x y`` from the asymptotic anchors
  at ``+/-9`` toward the origin.  Marching inward is the stable direction on
  the positive axis (the decaying solution grows backward), so no digits are
  lost to the dominant mode.

The oracle is tanh-sinh quadrature of the rotated contour integral

    Ai(x) = (1/pi) Re[ e^{i pi/6} I ],
    I = integral_0^inf exp(-s^3/3 - x s/2 + i (sqrt(3)/2) x s) ds,

run in elevated working precision because the integrand peaks at
``exp(0.47 |x|^{3/2})`` on the negative axis.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

__all__ = ["AiryEvaluator", "airy", "airy_derivative", "DEFAULT_EVALUATOR"]

_AI0 = 0.3550280538878172392600632  # Ai(0)  = 3^(-2/3)/Gamma(2/3)
_AIP0 = -0.2588194037928067984051836  # Ai'(0) = -3^(-1/3)/Gamma(1/3)


def _series(x: np.ndarray):
    """Maclaurin series for (Ai, Ai'), vectorized; accurate for |x| <= ~5."""
    x = np.asarray(x, dtype=float)
    x3 = x**3
    tf = np.ones_like(x)  # f term, m = 0
    tg = x.copy()  # g term, m = 0
    f, g = tf.copy(), tg.copy()
    fp = np.zeros_like(x)  # f' accumulates 3m/x * tf
    gp = np.ones_like(x)  # g' accumulates (3m+1)/x * tg
    safe = np.where(x != 0, x, 1.0)
    for m in range(1, 160):
        tf = tf * x3 / ((3 * m) * (3 * m - 1))
        tg = tg * x3 / ((3 * m + 1) * (3 * m))
        f += tf
        g += tg
        fp += tf * (3 * m) / safe
        gp += tg * (3 * m + 1) / safe
        if np.all(np.abs(tf) + np.abs(tg) < 1e-18 * (np.abs(f) + np.abs(g) + 1e-300)):
            break
    ai = _AI0 * f + _AIP0 * g
    aip = _AI0 * fp + _AIP0 * gp
    return ai, aip


def _asym_coeffs(n: int):
    """DLMF 9.7 coefficients u_k, v_k."""
    u = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k))
    v = [1.0] + [u[k] * (6 * k + 1) / (1.0 - 6 * k) for k in range(1, n)]
    return np.array(u), np.array(v)


_UK, _VK = _asym_coeffs(24)


def _asym_pos(x: np.ndarray):
    """Asymptotics for x >= ~9; truncation error below 1e-13 there."""
    x = np.asarray(x, dtype=float)
    zeta = (2.0 / 3.0) * x**1.5
    su = np.ones_like(x)
    sv = np.ones_like(x)
    term_scale = np.ones_like(x)
    stop = np.zeros_like(x, dtype=bool)
    for k in range(1, len(_UK)):
        du = (-1.0) ** k * _UK[k] / zeta**k
        dv = (-1.0) ** k * _VK[k] / zeta**k
        grow = np.abs(du) > term_scale
        stop |= grow
        su = np.where(stop, su, su + du)
        sv = np.where(stop, sv, sv + dv)
        term_scale = np.where(stop, term_scale, np.abs(du))
    pre = np.exp(-zeta) / (2.0 * np.sqrt(np.pi) * x**0.25)
    ai = pre * su
    aip = -(x**0.25) * np.exp(-zeta) / (2.0 * np.sqrt(np.pi)) * sv
    return ai, aip


def _asym_neg(x: np.ndarray):
    """Oscillatory asymptotics for x <= ~ -9."""
    s = -np.asarray(x, dtype=float)
    xi = (2.0 / 3.0) * s**1.5
    ks = np.arange(0, 10)
    Se = np.zeros_like(s)
    So = np.zeros_like(s)
    Pe = np.zeros_like(s)
    Po = np.zeros_like(s)
    for k in ks:
        sgn = (-1.0) ** k
        Se += sgn * _UK[2 * k] / xi ** (2 * k)
        Pe += sgn * _VK[2 * k] / xi ** (2 * k)
        So += sgn * _UK[2 * k + 1] / xi ** (2 * k + 1)
        Po += sgn * _VK[2 * k + 1] / xi ** (2 * k + 1)
    ang = xi + np.pi / 4
    ai = (np.sin(ang) * Se - np.cos(ang) * So) / (np.sqrt(np.pi) * s**0.25)
    aip = -(np.cos(ang) * Pe + np.sin(ang) * Po) * s**0.25 / np.sqrt(np.pi)
    return ai, aip


def _taylor_coeffs(xc: float, y: float, yp: float, order: int):
    """Taylor coefficients of the solution of y'' = x y around xc."""
    c = np.zeros(order + 2)
    c[0], c[1] = y, yp
    for m in range(order):
        prev = c[m - 1] if m >= 1 else 0.0
        c[m + 2] = (xc * c[m] + prev) / ((m + 2) * (m + 1))
    return c


def _taylor_eval(c: np.ndarray, h: np.ndarray):
    y = np.zeros_like(h)
    yp = np.zeros_like(h)
    for m in range(len(c) - 1, -1, -1):
        y = y * h + c[m]
    for m in range(len(c) - 1, 0, -1):
        yp = yp * h + m * c[m]
    return y, yp


class AiryEvaluator:
    """Certified Ai/Ai' values via series, asymptotics and ODE marching.

    Parameters choose the switchover structure: the series core
    ``(series_cut_neg, series_cut_pos)``, the asymptotic anchors at
    ``+/- asymptotic_cut``, and the Taylor-march station spacing used to fill
    the gaps.  ``quadrature`` is the independent rotated-contour oracle.
    """

    def __init__(
        self,
        series_cut_pos: float = 4.5,
        series_cut_neg: float = -6.5,
        asymptotic_cut: float = 9.0,
        station_step: float = 0.25,
        taylor_order: int = 24,
        quadrature_dps: int = 40,
    ):
        if not (0 < series_cut_pos < asymptotic_cut):
            raise ValidationError("need 0 < series_cut_pos < asymptotic_cut")
        if not (series_cut_neg < 0 and -asymptotic_cut < series_cut_neg):
            raise ValidationError("need -asymptotic_cut < series_cut_neg < 0")
        self.series_cut_pos = series_cut_pos
        self.series_cut_neg = series_cut_neg
        self.asymptotic_cut = asymptotic_cut
        self.station_step = station_step
        self.taylor_order = taylor_order
        self.quadrature_dps = quadrature_dps
        self._stations_pos = self._build_stations(asymptotic_cut, series_cut_pos)
        self._stations_neg = self._build_stations(-asymptotic_cut, series_cut_neg)

    def _build_stations(self, anchor: float, inner: float):
        """March (Ai, Ai') from the asymptotic anchor toward the series core,
        storing Taylor coefficient tables every station_step."""
        y, yp = (_asym_pos if anchor > 0 else _asym_neg)(np.array([anchor]))
        y, yp = float(y[0]), float(yp[0])
        direction = -1.0 if anchor > 0 else 1.0
        nst = int(math.ceil(abs(anchor - inner) / self.station_step)) + 1
        xs = anchor + direction * self.station_step * np.arange(nst + 1)
        tables = []
        for i, xc in enumerate(xs):
            c = _taylor_coeffs(float(xc), y, yp, self.taylor_order)
            tables.append(c)
            if i < nst:
                h = direction * self.station_step
                ynew, ypnew = _taylor_eval(c, np.array([h]))
                y, yp = float(ynew[0]), float(ypnew[0])
        return xs, np.array(tables)

    def _march_eval(self, x: np.ndarray, stations):
        xs, tables = stations
        idx = np.clip(np.rint(np.abs(x - xs[0]) / self.station_step).astype(int), 0, len(xs) - 1)
        ai = np.empty_like(x)
        aip = np.empty_like(x)
        for i in np.unique(idx):
            sel = idx == i
            h = x[sel] - xs[i]
            ai[sel], aip[sel] = _taylor_eval(tables[i], h)
        return ai, aip

    def ai_and_derivative(self, x):
        """Vectorized (Ai(x), Ai'(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise ValidationError("airy evaluation needs finite arguments")
        ai = np.empty_like(x)
        aip = np.empty_like(x)
        core = (x > self.series_cut_neg) & (x < self.series_cut_pos)
        hipos = x >= self.asymptotic_cut
        hineg = x <= -self.asymptotic_cut
        gpos = (~core) & (~hipos) & (x > 0)
        gneg = (~core) & (~hineg) & (~hipos) & (~gpos)
        for mask, fn in ((core, _series), (hipos, _asym_pos), (hineg, _asym_neg)):
            if mask.any():
                ai[mask], aip[mask] = fn(x[mask])
        if gpos.any():
            ai[gpos], aip[gpos] = self._march_eval(x[gpos], self._stations_pos)
        if gneg.any():
            ai[gneg], aip[gneg] = self._march_eval(x[gneg], self._stations_neg)
        return ai, aip

    def ai(self, x):
        out = self.ai_and_derivative(x)[0]
        return float(out[0]) if np.ndim(x) == 0 else out

    def ai_prime(self, x):
        out = self.ai_and_derivative(x)[1]
        return float(out[0]) if np.ndim(x) == 0 else out

    def quadrature(self, x: float) -> float:
        """Independent oracle: rotated-contour integral by tanh-sinh quadrature.

        Scalar only; working precision grows with |x|^{3/2} to absorb the
        integrand peak on the negative axis.
        """
        import mpmath as mp

        x = float(x)
        dps = int(self.quadrature_dps + 0.25 * abs(x) ** 1.5)
        with mp.workdps(dps):
            mx = mp.mpf(x)
            w = mp.sqrt(3) / 2

            def integrand(s):
                damp = mp.exp(-(s**3) / 3 - mx * s / 2)
                return damp * mp.cos(w * mx * s + mp.pi / 6)

            S = mp.mpf(40) + 2 * mp.sqrt(abs(mx))
            val = mp.quad(integrand, [0, S / 4, S])
            return float(val / mp.pi)


DEFAULT_EVALUATOR = AiryEvaluator()


def airy(x):
    """Ai(x) via the default evaluator (1e-10 relative, 1e-12 abs near zeros)."""
    return DEFAULT_EVALUATOR.ai(x)


def airy_derivative(x):
    """Ai'(x) via the default evaluator."""
    return DEFAULT_EVALUATOR.ai_prime(x)
