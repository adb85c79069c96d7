"""Effective one-particle law  dv/dt = F_v / M  and power-law decay fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import PreconditionError, TracerError
from .model import ModelParams, PotentialSpec
from .twave import friction_force_closed


def reduced_rhs(params: ModelParams, W_spec: PotentialSpec, C: float, v) -> np.ndarray:
    """Acceleration of the particle under the closed-form drag; 0 at v = 0."""
    return friction_force_closed(params, W_spec, v, C) / params.M


@dataclass
class ReducedSolution:
    t: np.ndarray
    v: np.ndarray  # (len(t), 3)
    nfev: int

    @property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.v, axis=1)


def integrate_reduced(params: ModelParams, W_spec: PotentialSpec, C: float, v0, T: float,
                      rtol: float = 1e-9, atol: float = 1e-20, n_samples: int = 400,
                      t_eval: Optional[Sequence[float]] = None) -> ReducedSolution:
    """Integrate dv/dt = F_v/M with the Dormand-Prince 5(4) pair.

    Output is sampled on a geometric time grid (plus t=0) unless ``t_eval``
    is given.
    """
    v0 = np.asarray(v0, dtype=float)
    if not np.linalg.norm(v0) > 0:
        raise PreconditionError("initial velocity must be non-zero")
    if t_eval is None:
        t_eval = np.concatenate([[0.0], np.geomspace(min(1e-3, T / 10), T, n_samples)])
    sol = integrate.solve_ivp(lambda t, v: reduced_rhs(params, W_spec, C, v), (0.0, T), v0,
                              method="RK45", rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise TracerError(f"reduced ODE integration failed: {sol.message}")
    return ReducedSolution(sol.t, sol.y.T, sol.nfev)


def japanese_bracket(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt(1.0 + t * t)


def fit_decay_exponent(t, values, window=None, min_samples: int = 20):
    """Least-squares slope of log(value) against log<t>, with its standard error.

    ``window`` = (t_lo, t_hi); defaults to the last decade of the series.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is None:
        window = (t[-1] / 10.0, t[-1])
    sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < min_samples:
        raise PreconditionError(f"need >= {min_samples} samples in the fit window, got {int(sel.sum())}")
    if np.any(y[sel] <= 0):
        raise PreconditionError("values in the fit window must be positive")
    res = stats.linregress(np.log(japanese_bracket(t[sel])), np.log(y[sel]))
    return float(res.slope), float(res.stderr)


def upper_envelope(t, values, n_windows: int = 40):
    """Maxima of |values| over geometric time windows: (window mid-times, maxima).

    Used for oscillating signals where a decay law bounds the amplitude.
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    pos = t > 0
    edges = np.geomspace(t[pos][0], t[-1], n_windows + 1)
    mids, maxima = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t <= hi)
        if sel.any():
            mids.append(math.sqrt(lo * hi))
            maxima.append(float(y[sel].max()))
    return np.array(mids), np.array(maxima)


def trailing_envelope(t, values, t_start: float, ratio: float = 2.0, n_points: int = 40):
    """sup of |values| over [t'/ratio, t'] on a geometric grid of t' from t_start to t[-1].

    A smooth upper bound for oscillating signals, suitable for power-law fits.
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    te = np.geomspace(t_start, t[-1], n_points)
    env = []
    for s in te:
        sel = (t >= s / ratio) & (t <= s)
        if not sel.any():
            raise PreconditionError(f"no samples in envelope window [{s / ratio:g}, {s:g}]")
        env.append(y[sel].max())
    return te, np.array(env)


def window_maxima(t, values, t_start: float, factor: float):
    """Maxima of |values| over consecutive windows [t_start f^j, t_start f^(j+1)] inside the series."""
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    out = []
    lo = t_start
    while lo * factor <= t[-1] * (1 + 1e-12):
        sel = (t >= lo) & (t <= lo * factor)
        if sel.any():
            out.append(float(y[sel].max()))
        lo *= factor
    return np.array(out)


def radiated_norm_proxy(params: ModelParams, W_spec: PotentialSpec, C: float, sol: ReducedSolution):
    """|F_v|/|v| along a reduced trajectory: radiated energy per unit resonant frequency.

    Its time integral tracks the growth of the emitted field norm.
    """
    out = []
    for v in sol.v:
        s = float(np.linalg.norm(v))
        out.append(float(np.linalg.norm(friction_force_closed(params, W_spec, v, C))) / s if s else 0.0)
    return np.array(out)


def decade_integrals(t, f, t_start: float):
    """Trapezoid integrals of f over consecutive decades [t_start 10^j, t_start 10^(j+1)]."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    out = []
    lo = t_start
    while lo * 10 <= t[-1] * (1 + 1e-12):
        sel = (t >= lo) & (t <= lo * 10 * (1 + 1e-12))
        out.append(float(integrate.trapezoid(f[sel], t[sel])))
        lo *= 10
    return np.array(out)
