"""Co-moving traveling waves, Cerenkov friction and forced traveling-wave branches.

In the frame of a particle moving at constant velocity v, time derivatives
become -v.grad.  Splitting gamma = a + i b into real fields, each Fourier
mode obeys

    a_hat = s W_hat eps_k / D,    b_hat = -i w s W_hat / D,
    D = w^2 - eps_k g_k,          w = k.v + i eps,

with eps_k = k^2/2m and g_k = eps_k + kappa/4 Phi_hat(k).  D vanishes on
real k exactly where (k.v)^2 = Omega(k)^2, which needs |v| >= v_c.  The
small damping eps (limiting absorption) picks the outgoing, causal
solution; forces are extrapolated to eps -> 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .errors import (CurveShapeError, ExtrapolationError, PreconditionError, ResolutionError,
                     ResonanceError)
from .kernels import friction_sum
from .model import FourierGrid, ModelParams, PotentialSpec, require_smooth_W
from .spectral import POSITION, ComplexField, critical_speed, irfft3, phase_velocity, potential_on_grid
from .statics import static_symbol

REGIME_TOL = 1e-6
DEFAULT_EPS_FRACTIONS = (0.2, 0.1, 0.05)
SUBCRITICAL_EPS_SCALE = 0.05


@dataclass
class TravelingWaveProfile:
    velocity: np.ndarray
    profile: ComplexField
    epsilon: float
    regime: str  # "subcritical" | "critical" | "supercritical"


def classify_regime(speed: float, v_c: float, tol: float = REGIME_TOL) -> str:
    if abs(speed - v_c) <= tol:
        return "critical"
    return "subcritical" if speed < v_c else "supercritical"


def resonance_radius(params: ModelParams, Phi: PotentialSpec, speed: float, k_max: float,
                     n_scan: int = 4096) -> float:
    """Largest |k| <= k_max with Omega(k)/|k| <= speed (0 if there is none)."""
    ks = np.linspace(k_max / n_scan, k_max, n_scan)
    inside = phase_velocity(params, Phi, ks) <= speed
    return float(ks[inside].max()) if inside.any() else 0.0


def _check_resolution(params, Phi, grid: FourierGrid, speed: float) -> None:
    # scan beyond the grid so an unresolved sphere is detected rather than clipped
    k_res = resonance_radius(params, Phi, speed, 2.0 * grid.k_max)
    if k_res >= 0.9 * grid.k_max:
        raise ResolutionError(
            f"resonance sphere (|k| up to {k_res:.3g}) reaches the grid cutoff {grid.k_max:.3g}; refine dx"
        )
    if 2.0 * k_res / grid.dk < 8.0:
        raise ResolutionError(
            f"resonance sphere spans only {2.0 * k_res / grid.dk:.1f} modes (< 8); enlarge the box"
        )


def wave_half_spectra(params: ModelParams, W: PotentialSpec, Phi: PotentialSpec, grid: FourierGrid,
                      v, eps: float):
    """Half spectra (a_hat, b_hat) of the co-moving profile; k = 0 follows the static convention."""
    v = np.asarray(v, dtype=float)
    k, kh = grid.k, grid.k_half
    k2 = grid.k2_half
    eps_k = k2 / (2.0 * params.m)
    g = static_symbol(params, Phi, k2)
    s = params.source_coupling
    Wh = potential_on_grid(W, grid) * grid.nyquist_mask_half
    kv = k[:, None, None] * v[0] + k[None, :, None] * v[1] + kh[None, None, :] * v[2]
    om = kv + 1j * eps
    den = om * om - eps_k * g
    den[0, 0, 0] = 1.0
    a_hat = s * Wh * eps_k / den
    b_hat = -1j * om * s * Wh / den
    a_hat[0, 0, 0] = -s * Wh[0, 0, 0] / g[0, 0, 0] if params.kappa > 0 else 0.0
    b_hat[0, 0, 0] = 0.0
    return a_hat, b_hat


def traveling_profile(
    params: ModelParams,
    W_spec: PotentialSpec,
    Phi_spec: PotentialSpec,
    v,
    eps: float,
    grid: FourierGrid,
    v_c: Optional[float] = None,
) -> TravelingWaveProfile:
    """Stationary co-moving field gamma_v (particle at the origin).

    ``eps`` must be positive whenever the symbol D has real zeros
    (|v| >= v_c, v != 0).
    """
    require_smooth_W(W_spec)
    if eps < 0:
        raise PreconditionError("limiting-absorption parameter must be >= 0")
    v = np.asarray(v, dtype=float)
    speed = float(np.linalg.norm(v))
    if v_c is None:
        v_c = critical_speed(params, Phi_spec, grid)
    regime = classify_regime(speed, v_c)
    resonant = speed > 0 and speed >= v_c - REGIME_TOL
    if resonant:
        if eps == 0:
            raise ResonanceError(
                f"|v| = {speed:.6g} >= v_c = {v_c:.6g}: the co-moving problem is singular; use eps > 0"
            )
        _check_resolution(params, Phi_spec, grid, speed)
    a_hat, b_hat = wave_half_spectra(params, W_spec, Phi_spec, grid, v, eps)
    gamma = irfft3(a_hat, grid) + 1j * irfft3(b_hat, grid)
    prof = ComplexField(grid, gamma, POSITION, {"zero_mode_projected": params.kappa == 0})
    return TravelingWaveProfile(v, prof, float(eps), regime)


# -- friction ------------------------------------------------------------------


@dataclass
class FrictionEstimate:
    force: np.ndarray  # eps -> 0 extrapolation
    error: float  # spread between extrapolation orders
    eps: np.ndarray
    samples: np.ndarray  # (len(eps), 3) raw forces


def default_eps_schedule(speed: float, v_c: float, fractions: Sequence[float] = DEFAULT_EPS_FRACTIONS):
    """Limiting-absorption schedule for a given speed.

    Supercritical speeds use eps proportional to |v| (the wake length |v|/eps
    must fit the box); below v_c there is no resonance to resolve, so eps is
    scaled by the distance to threshold instead.
    """
    if speed >= v_c and speed > 0:
        scale = speed
    else:
        scale = SUBCRITICAL_EPS_SCALE * max(v_c - speed, 0.0)
    return [f * scale for f in fractions]


class FrictionEvaluator:
    """Spectral friction force on one grid, with the per-mode tables cached."""

    def __init__(self, params: ModelParams, W: PotentialSpec, Phi: PotentialSpec, grid: FourierGrid,
                 v_c: Optional[float] = None):
        require_smooth_W(W)
        self.params, self.W, self.Phi, self.grid = params, W, Phi, grid
        k2 = grid.k2_half
        self.eps_k = np.ascontiguousarray(k2 / (2.0 * params.m))
        self.g_k = np.ascontiguousarray(static_symbol(params, Phi, k2))
        Wh = potential_on_grid(W, grid) * grid.nyquist_mask_half
        self.wk2 = np.ascontiguousarray(
            params.nu * params.source_coupling * grid.half_weights * Wh * Wh * grid.mode_volume
        )
        self.v_c = critical_speed(params, Phi, grid) if v_c is None else v_c

    def raw(self, v, eps: float) -> np.ndarray:
        """Force at finite eps: nu s sum_k k W_hat^2 Im(eps_k / D)."""
        g = self.grid
        fx, fy, fz = friction_sum(self.wk2, g.k, g.k, g.k_half, self.eps_k, self.g_k,
                                  float(v[0]), float(v[1]), float(v[2]), float(eps))
        return np.array([fx, fy, fz])

    def force(self, v, eps_schedule: Optional[Sequence[float]] = None, degree: int = 2,
              check_resolution: bool = True) -> FrictionEstimate:
        v = np.asarray(v, dtype=float)
        speed = float(np.linalg.norm(v))
        if speed == 0:
            z = np.zeros(3)
            return FrictionEstimate(z, 0.0, np.zeros(0), np.zeros((0, 3)))
        if eps_schedule is None:
            eps_schedule = default_eps_schedule(speed, self.v_c)
        eps = np.asarray(eps_schedule, dtype=float)
        if len(eps) < 3 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
            raise PreconditionError("eps_schedule needs >= 3 strictly decreasing positive entries")
        if check_resolution and speed >= self.v_c:
            _check_resolution(self.params, self.Phi, self.grid, speed)
        samples = np.array([self.raw(v, e) for e in eps])
        par = samples @ (v / speed)
        steps = np.diff(np.abs(par))
        if not (np.all(steps >= 0) or np.all(steps <= 0)):
            raise ExtrapolationError(
                "non-monotone friction samples along the eps schedule (grid too coarse?)",
                samples=list(zip(eps.tolist(), samples.tolist())),
            )
        deg = min(degree, len(eps) - 1)
        f0 = np.polyfit(eps, samples, deg)[-1]
        f1 = np.polyfit(eps, samples, deg - 1)[-1] if deg > 1 else f0
        return FrictionEstimate(f0, float(np.linalg.norm(f0 - f1)), eps, samples)

    def parallel(self, speed: float, direction=(1.0, 0.0, 0.0), **kw) -> float:
        """Friction magnitude along -direction at the given speed (>= 0 for drag)."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return float(-self.force(speed * d, **kw).force @ d)


def friction_force_spectral(params, W_spec, Phi_spec, v, grid: FourierGrid,
                            eps_schedule: Optional[Sequence[float]] = None, degree: int = 2) -> FrictionEstimate:
    """Friction on a particle moving at v: field force of gamma_v(eps), extrapolated to eps -> 0."""
    return FrictionEvaluator(params, W_spec, Phi_spec, grid).force(v, eps_schedule, degree)


def analytic_friction_constant(params: ModelParams) -> float:
    """Prefactor pi^2 s / 2m for which the closed form equals the eps -> 0 limit exactly (kappa = 0)."""
    return math.pi**2 * params.source_coupling / (2.0 * params.m)


def resonance_cutoff(params: ModelParams, speed: float, cutoff: str = "resonance") -> float:
    """Upper limit of the rho integral: (2 m |v|)^2, or (2 pi |v|)^2 for ``cutoff='two_pi'``."""
    if cutoff == "resonance":
        return (2.0 * params.m * speed) ** 2
    if cutoff == "two_pi":
        return (2.0 * math.pi * speed) ** 2
    raise ValueError(f"unknown cutoff {cutoff!r}")


def friction_integral(W: PotentialSpec, upper: float) -> float:
    """int_0^upper rho |W_hat(sqrt rho)|^2 d rho by adaptive quadrature."""
    f = lambda rho: rho * float(W.radial_fourier(rho)) ** 2
    # the integrand lives on rho ~ 1/sigma^2; split so quad sees its support
    knee = min(upper, 80.0 / W.sigma**2)
    val = integrate.quad(f, 0.0, knee, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    if upper > knee:
        val += integrate.quad(f, knee, upper, epsabs=0.0, epsrel=1e-10, limit=200)[0]
    return val


def friction_force_closed(params: ModelParams, W_spec: PotentialSpec, v, C: float,
                          cutoff: str = "resonance") -> np.ndarray:
    """Closed-form drag for kappa = 0:  -C nu v_hat |v|^-2 int_0^{rho_max} rho |W_hat(sqrt rho)|^2 d rho."""
    if params.kappa != 0:
        raise PreconditionError("the closed-form friction law needs kappa = 0")
    require_smooth_W(W_spec)
    v = np.asarray(v, dtype=float)
    speed = float(np.linalg.norm(v))
    if speed == 0:
        return np.zeros(3)
    mag = C * params.nu * friction_integral(W_spec, resonance_cutoff(params, speed, cutoff)) / speed**2
    return -mag * v / speed


def fit_friction_constant(params, W_spec, Phi_spec, speeds, grid: FourierGrid, direction=(1.0, 0.0, 0.0),
                          evaluator: Optional[FrictionEvaluator] = None):
    """Least-squares C matching spectral friction to the closed form.

    Returns (C, relative deviation per speed, spectral magnitudes, closed-form shapes).
    """
    ev = evaluator or FrictionEvaluator(params, W_spec, Phi_spec, grid)
    spec = np.array([ev.parallel(s, direction) for s in speeds])
    shape = np.array([np.linalg.norm(friction_force_closed(params, W_spec, (s, 0, 0), 1.0)) for s in speeds])
    C = float(spec @ shape / (shape @ shape))
    rel = np.abs(C * shape - spec) / np.abs(spec)
    return C, rel, spec, shape


def resonance_threshold(params: ModelParams, Phi: PotentialSpec, k_max: float, n_scan: int = 200_000,
                        tol: float = 1e-12) -> float:
    """Smallest speed at which D(k) = 2m (k.v)^2/k^2 - g_k has a real zero (k parallel to v).

    Found by bisection on the speed over a dense radial scan; independent of
    :func:`critical_speed`, which minimises the phase velocity directly.
    """
    ks = np.linspace(k_max / n_scan, k_max, n_scan)
    g = static_symbol(params, Phi, ks * ks)
    g0 = 0.25 * params.kappa * float(Phi.radial_fourier(0.0))
    has_zero = lambda v: (2.0 * params.m * v * v - g >= 0).any() or 2.0 * params.m * v * v - g0 > 0
    hi = math.sqrt(float(g.max()) / (2.0 * params.m)) + 1.0
    if not has_zero(hi):
        raise PreconditionError("no resonance below the scan limit")
    return optimize.bisect(lambda v: 1.0 if has_zero(v) else -1.0, 0.0, hi, xtol=tol)


# -- response curve and forced branches -------------------------------------------


@dataclass
class ResponseCurve:
    speeds: np.ndarray
    forces: np.ndarray  # drag magnitude along v
    transverse: np.ndarray  # max |transverse component|
    errors: np.ndarray  # eps-extrapolation error estimates
    v_peak: float
    F_max: float
    v_c: float = 0.0
    evaluator: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def force_at(self, speed: float) -> float:
        if self.evaluator is not None:
            return float(self.evaluator(speed))
        return float(PchipInterpolator(self.speeds, self.forces)(speed))


def _interior_maxima(f: np.ndarray, rel_tol: float) -> list:
    floor = rel_tol * float(np.max(f))
    return [i for i in range(1, len(f) - 1) if f[i] > floor and f[i] >= f[i - 1] and f[i] > f[i + 1]]


def response_curve(params, W_spec, Phi_spec, speed_samples, grid: FourierGrid,
                   direction=(1.0, 0.0, 0.0), refine: bool = True, max_tol: float = 1e-3,
                   evaluator: Optional[FrictionEvaluator] = None) -> ResponseCurve:
    """Drag magnitude F(|v|) on the given speeds, with the peak (v_peak, F_max) located.

    The peak is bracketed by the discrete maximum, refined by a parabola
    through its neighbours and then by Brent's method on the spectral force.
    """
    speeds = np.asarray(speed_samples, dtype=float)
    if np.any(np.diff(speeds) <= 0) or speeds[0] < 0:
        raise PreconditionError("speed samples must be non-negative and strictly ascending")
    ev = evaluator or FrictionEvaluator(params, W_spec, Phi_spec, grid)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    forces, trans, errs = [], [], []
    for s in speeds:
        if s == 0:
            forces.append(0.0), trans.append(0.0), errs.append(0.0)
            continue
        est = ev.force(s * d)
        par = float(-est.force @ d)
        forces.append(par)
        trans.append(float(np.linalg.norm(est.force + par * d)))
        errs.append(est.error)
    forces = np.array(forces)
    if forces.max() <= 0 or not np.isfinite(forces).all():
        raise CurveShapeError("response curve has no positive drag: all samples below v_c?")
    peaks = _interior_maxima(forces, max_tol)
    if len(peaks) != 1:
        raise CurveShapeError(
            f"expected exactly one interior maximum, found {len(peaks)}; check grid and speed range"
        )
    i = peaks[0]
    s0, s1, s2 = speeds[i - 1 : i + 2]
    f0, f1, f2 = forces[i - 1 : i + 2]
    den = (s1 - s0) * (f1 - f2) - (s1 - s2) * (f1 - f0)
    v_peak = s1 - 0.5 * ((s1 - s0) ** 2 * (f1 - f2) - (s1 - s2) ** 2 * (f1 - f0)) / den if den else s1
    v_peak = float(min(max(v_peak, s0), s2))
    curve_eval = lambda s: ev.parallel(s, d)
    F_max = float(np.interp(v_peak, speeds, forces))
    if refine:
        res = optimize.minimize_scalar(lambda s: -curve_eval(s), bounds=(s0, s2), method="bounded",
                                       options={"xatol": 1e-9 * s1})
        v_peak, F_max = float(res.x), float(-res.fun)
    return ResponseCurve(speeds, forces, np.array(trans), np.array(errs), v_peak, F_max, ev.v_c,
                         curve_eval if refine else None)


@dataclass
class ForcedBranches:
    kind: str  # "none" | "one" | "two"
    speeds: tuple

    @property
    def count(self) -> int:
        return len(self.speeds)


def forced_branches(curve: ResponseCurve, F_magnitude: float, rtol: float = 1e-9) -> ForcedBranches:
    """Speeds at which the drag balances a constant external force of the given magnitude.

    Two speeds below F_max (bisection on each monotone side of the peak,
    tolerance 1e-8 v_peak), one at F_max, none above.
    """
    F = float(F_magnitude)
    if F < 0:
        raise PreconditionError("force magnitude must be >= 0")
    if F > curve.F_max * (1.0 + rtol):
        return ForcedBranches("none", ())
    if abs(F - curve.F_max) <= rtol * curve.F_max:
        return ForcedBranches("one", (curve.v_peak,))
    s, f, vp = curve.speeds, curve.forces, curve.v_peak
    left = [j for j in range(len(s)) if s[j] < vp and f[j] < F]
    right = [j for j in range(len(s)) if s[j] > vp and f[j] < F]
    if not right:
        raise CurveShapeError("speed samples end before the drag falls below the requested force")
    lo = s[max(left)] if left else max(curve.v_c, 0.0)
    hi = s[min(right)]
    g = lambda x: curve.force_at(x) - F
    xtol = 1e-8 * vp
    v_lo = optimize.bisect(g, lo, vp, xtol=xtol) if g(lo) < 0 else lo
    v_hi = optimize.bisect(g, vp, hi, xtol=xtol)
    return ForcedBranches("two", (float(v_lo), float(v_hi)))
