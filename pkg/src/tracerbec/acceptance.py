"""Acceptance checks shared by ``tracerbec verify`` and the test suite.

Each check returns a :class:`CheckResult`; a check passes only when every
tolerance holds *and* it finished inside its runtime budget.  The fast tier
runs on 64^3 (or smaller) grids; the full tier adds the 128^3 friction,
branch and deceleration checks.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .dynamics import DEFAULT_SPONGE_STRENGTH, Propagator, RunConfig, SimState, SpongeConfig, evolve
from .model import FourierGrid, ModelParams, PotentialSpec
from .reduced import fit_decay_exponent, integrate_reduced, trailing_envelope, window_maxima
from .spectral import (ComplexField, critical_speed, dispersion_omega, forward_transform,
                       inverse_transform, sound_speed)
from .statics import decay_profile, self_force, static_profile, static_residual
from .twave import (FrictionEvaluator, analytic_friction_constant, fit_friction_constant,
                    forced_branches, friction_force_closed, resonance_threshold, response_curve)

GAUSS = PotentialSpec()
DELTA = PotentialSpec("delta")
B_MODEL = ModelParams()

# tolerances
SPECTRAL_TOL = 1e-12
GAUSS_TRANSFORM_TOL = 1e-8
DISPERSION_TOL = 1e-3
RESIDUAL_TOL = 1e-10
SELF_FORCE_TOL = 1e-8
VC_DELTA_TOL = 1e-9
VC_ORACLE_TOL = 1e-6
SLOPE_TOL = 0.05
FRICTION_FIT_TOL = 0.05
SUBCRITICAL_TOL = 1e-6
BRANCH_TOL = 1e-6
REDUCED_TOL = 0.05
DECAY_SLOPE_MAX = -0.5
BALL_DROP_MIN = 5.0
ENERGY_TOL = 1e-6
REVERSE_TOL = 1e-8

# κ for which a gaussian Phi gives v_c strictly below v_* (needs kappa sigma^5 m > 4)
KAPPA_SUPERSONIC = 16.0
# κ giving monotone (non-oscillating) exponential decay of the E-model static profile
KAPPA_STATICS = 1.0
SUPERCRITICAL_SPEEDS = (0.5, 0.75, 1.0, 1.5, 2.0)
CURVE_SPEEDS = tuple(np.round(np.linspace(0.25, 2.5, 19), 6))


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    details: Dict[str, object] = field(default_factory=dict)
    error: Optional[str] = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = "; ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        if self.error:
            info = f"error: {self.error}" + (f"; {info}" if info else "")
        return f"[{status}] {self.number:>2} {self.name:<28} {self.runtime:7.1f}s/{self.budget:.0f}s  {info}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _run(number: int, name: str, budget: float, body: Callable[[dict], bool]) -> CheckResult:
    details: dict = {}
    t0 = time.perf_counter()
    try:
        ok = bool(body(details))
        err = None
    except Exception as exc:  # a crashed check is a failed check
        ok, err = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if dt > budget:
        details["over_budget"] = True
    return CheckResult(number, name, ok and dt <= budget, dt, budget, details, err)


# -- 1 ---------------------------------------------------------------------------


def check_spectral(d: dict) -> bool:
    g = FourierGrid(64, 32.0)
    rng = np.random.default_rng(1234)
    f = ComplexField(g, rng.standard_normal((64,) * 3) + 1j * rng.standard_normal((64,) * 3))
    fh = forward_transform(f)
    back = inverse_transform(fh)
    d["roundtrip"] = float(np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values))
    d["parseval"] = abs(fh.norm() - f.norm()) / f.norm()
    x2 = g.r2_from((0.0, 0.0, 0.0))
    sampled = forward_transform(ComplexField(g, GAUSS.radial(x2).astype(complex)))
    exact = GAUSS.radial_fourier(g.k2)
    d["gaussian"] = float(np.max(np.abs(sampled.values - exact)) / np.max(exact))
    return d["roundtrip"] < SPECTRAL_TOL and d["parseval"] < SPECTRAL_TOL and d["gaussian"] < GAUSS_TRANSFORM_TOL


# -- 2 ---------------------------------------------------------------------------


def measure_mode_frequency(params: ModelParams, Phi: PotentialSpec, grid: FourierGrid, mode, periods=100,
                           per_period=20.3) -> tuple:
    """Evolve cos(k.x) with the particle decoupled and return (measured, exact) frequency.

    The particle is decoupled by giving W zero amplitude, which removes both
    the source and the force (the nu = 0 limit of either normalisation).
    """
    W0 = PotentialSpec(amplitude=0.0)
    k = grid.dk * np.asarray(mode, dtype=float)
    X, Y, Z = grid.mesh()
    beta = ComplexField(grid, np.cos(k[0] * X + k[1] * Y + k[2] * Z).astype(complex))
    prop = Propagator(SimState(0.0, np.zeros(3), np.zeros(3), beta, params, W0, Phi))
    Om = float(dispersion_omega(params, Phi, k))
    dt = 2.0 * math.pi / Om / per_period
    nsteps = int(round(periods * per_period))
    idx = tuple(int(m) % grid.n for m in mode[:2]) + (int(mode[2]),)
    ratio = math.sqrt(prop.eps_k[idx] / prop.g_k[idx])
    z = np.empty(nsteps + 1, dtype=complex)
    z[0] = prop.a[idx] + 1j * ratio * prop.b[idx]
    for i in range(1, nsteps + 1):
        prop.step(dt)
        z[i] = prop.a[idx] + 1j * ratio * prop.b[idx]
    phase = np.unwrap(np.angle(z))
    t = dt * np.arange(nsteps + 1)
    measured = -np.polyfit(t, phase, 1)[0]
    return float(measured), Om


def check_dispersion(d: dict) -> bool:
    g = FourierGrid(32, 16.0)
    modes = [(1, 0, 0), (2, 1, 0), (3, 3, 2), (6, 4, 3), (10, 7, 5)]
    worst = 0.0
    for params in (B_MODEL, ModelParams(kappa=4.0, model_tag="E")):
        for mode in modes:
            meas, exact = measure_mode_frequency(params, GAUSS, g, mode)
            worst = max(worst, abs(meas - exact) / exact)
    d["max_rel_err"] = worst
    return worst < DISPERSION_TOL


# -- 3 ---------------------------------------------------------------------------


def check_statics(d: dict) -> bool:
    g = FourierGrid(64, 32.0)
    X = (0.37, -0.21, 0.13)
    res, force = 0.0, 0.0
    cases = [B_MODEL, ModelParams(kappa=KAPPA_STATICS, model_tag="E", nu=0.7)]
    for p in cases:
        beta = static_profile(p, GAUSS, GAUSS, X, g)
        res = max(res, static_residual(p, GAUSS, GAUSS, beta, X))
        force = max(force, float(np.linalg.norm(self_force(p, GAUSS, beta, X))) / p.nu)
    d["residual"] = res
    d["self_force/nu"] = force
    pE = ModelParams(kappa=KAPPA_STATICS, model_tag="E")
    rep = decay_profile(static_profile(pE, GAUSS, GAUSS, (0.0, 0.0, 0.0), g))
    d["E_decay"] = rep.classification
    d["rate"] = rep.rate
    return res < RESIDUAL_TOL and force < SELF_FORCE_TOL and rep.classification == "exponential"


# -- 4 ---------------------------------------------------------------------------


def check_critical_speed(d: dict) -> bool:
    k_max = 40.0
    pd = ModelParams(kappa=4.0, model_tag="E")
    vc_delta = critical_speed(pd, DELTA, k_max=k_max)
    d["delta_gap"] = abs(vc_delta - sound_speed(pd, DELTA))
    pg = ModelParams(kappa=KAPPA_SUPERSONIC, model_tag="E")
    vc = critical_speed(pg, GAUSS, k_max=k_max)
    v_star = sound_speed(pg, GAUSS)
    oracle = resonance_threshold(pg, GAUSS, k_max)
    d["v_c"], d["v_*"] = vc, v_star
    d["oracle_gap"] = abs(vc - oracle)
    return d["delta_gap"] < VC_DELTA_TOL and vc < v_star and d["oracle_gap"] < VC_ORACLE_TOL


# -- 5 ---------------------------------------------------------------------------


def loglog_slope(params, W, lo: float, hi: float, n: int = 21) -> float:
    v = np.geomspace(lo, hi, n)
    C = analytic_friction_constant(params)
    F = np.array([np.linalg.norm(friction_force_closed(params, W, (s, 0.0, 0.0), C)) for s in v])
    return float(np.polyfit(np.log(v), np.log(F), 1)[0])


def check_friction_asymptotics(d: dict) -> bool:
    d["slope_low"] = loglog_slope(B_MODEL, GAUSS, 1e-3, 1e-2)
    d["slope_high"] = loglog_slope(B_MODEL, GAUSS, 10.0, 100.0)
    return abs(d["slope_low"] - 2.0) <= SLOPE_TOL and abs(d["slope_high"] + 2.0) <= SLOPE_TOL


# -- 6 / 7 -------------------------------------------------------------------------

_CURVE_CACHE: dict = {}


def _big_grid() -> FourierGrid:
    return FourierGrid(128, 64.0)


def check_friction_oracle(d: dict) -> bool:
    g = _big_grid()
    ev = FrictionEvaluator(B_MODEL, GAUSS, GAUSS, g)
    C, rel, _, _ = fit_friction_constant(B_MODEL, GAUSS, GAUSS, SUPERCRITICAL_SPEEDS, g, evaluator=ev)
    d["C"] = C
    d["C_analytic"] = analytic_friction_constant(B_MODEL)
    d["max_rel_dev"] = float(rel.max())
    pk = ModelParams(kappa=KAPPA_SUPERSONIC, model_tag="E")
    evk = FrictionEvaluator(pk, GAUSS, GAUSS, g)
    sub = evk.force((0.8 * evk.v_c, 0.0, 0.0))
    d["subcritical/nu"] = float(np.linalg.norm(sub.force)) / pk.nu
    _CURVE_CACHE["evaluator"] = ev
    return d["max_rel_dev"] <= FRICTION_FIT_TOL and d["subcritical/nu"] < SUBCRITICAL_TOL


def check_branches(d: dict) -> bool:
    g = _big_grid()
    ev = _CURVE_CACHE.get("evaluator") or FrictionEvaluator(B_MODEL, GAUSS, GAUSS, g)
    curve = response_curve(B_MODEL, GAUSS, GAUSS, CURVE_SPEEDS, g, evaluator=ev)
    d["v_peak"], d["F_max"] = curve.v_peak, curve.F_max
    counts, worst = [], 0.0
    for frac in (0.5, 1.0, 2.0):
        F = frac * curve.F_max
        br = forced_branches(curve, F)
        counts.append(br.count)
        for s in br.speeds:
            worst = max(worst, abs(curve.force_at(s) - F) / F)
    d["counts"] = counts
    d["max_rel_residual"] = worst
    return counts == [2, 1, 0] and worst <= BRANCH_TOL


# -- 8 ---------------------------------------------------------------------------


def check_reduced(d: dict) -> bool:
    C = analytic_friction_constant(B_MODEL)
    sol = integrate_reduced(B_MODEL, GAUSS, C, (1.0, 0.0, 0.0), 1e4)
    slope, err = fit_decay_exponent(sol.t, sol.speed, (1e2, 1e4))
    d["exponent"], d["stderr"] = slope, err
    return abs(slope + 1.0) <= REDUCED_TOL


# -- 9 ---------------------------------------------------------------------------


def deceleration_config(t_max: float = 100.0) -> RunConfig:
    g = _big_grid()
    return RunConfig(grid=g, dt=0.02, t_max=t_max, P0=(0.1, 0.0, 0.0), beta0="zero",
                     sponge=SpongeConfig(0.15 * g.L, DEFAULT_SPONGE_STRENGTH, 5), log_times=True, r_obs=2.0)


def analyse_deceleration(t, speed, ball_dev, transient: float = 1.0) -> dict:
    """Observables of a deceleration run: half-decade maxima, envelope slope, ball-deviation drop."""
    t = np.asarray(t)
    maxima = window_maxima(t, speed, transient, math.sqrt(10.0))
    te, env = trailing_envelope(t, speed, t[-1] / 10.0, ratio=2.0, n_points=40)
    slope, err = fit_decay_exponent(te, env)
    dev = np.asarray(ball_dev)
    return {
        "window_maxima": [float(x) for x in maxima],
        "decreasing": bool(np.all(np.diff(maxima) < 0)),
        "slope": slope,
        "slope_stderr": err,
        "ball_drop": float(dev.max() / dev[-1]),
    }


def check_deceleration(d: dict) -> bool:
    traj = evolve(deceleration_config())
    d.update(analyse_deceleration(traj.t, traj.speed, traj.ball_dev))
    d.pop("window_maxima")
    return d["decreasing"] and d["slope"] <= DECAY_SLOPE_MAX and d["ball_drop"] >= BALL_DROP_MIN


# -- 10 --------------------------------------------------------------------------


def generic_state(params: ModelParams, grid: FourierGrid) -> SimState:
    """Off-equilibrium state: scaled static cloud plus a moving packet, particle in motion."""
    X, Y, Z = grid.mesh()
    base = static_profile(params, GAUSS, GAUSS, (0.5, 0.0, 0.0), grid).values
    packet = 0.3 * np.exp(-((X - 1.0) ** 2 + Y**2 + Z**2) / 4.0) * np.exp(0.7j * X)
    beta = ComplexField(grid, 0.5 * base + packet)
    return SimState(0.0, (0.0, 0.0, 0.0), (1.0, 0.5, 0.0), beta, params, GAUSS, GAUSS)


def energy_drift(params: ModelParams, grid: FourierGrid, T: float = 10.0, dt: float = 1e-3,
                 checks: int = 100) -> tuple:
    prop = Propagator(generic_state(params, grid))
    E0 = prop.total_energy()
    n = int(round(T / dt))
    every = max(1, n // checks)
    worst = 0.0
    for i in range(1, n + 1):
        prop.step(dt)
        if i % every == 0:
            worst = max(worst, abs(prop.total_energy() - E0) / abs(E0))
    return worst, E0


def reversal_error(params: ModelParams, grid: FourierGrid, T: float = 2.0, dt: float = 0.01) -> float:
    st = generic_state(params, grid)
    prop = Propagator(st)
    a0, b0, X0, P0 = prop.a.copy(), prop.b.copy(), prop.X.copy(), prop.P.copy()
    n = int(round(T / dt))
    for _ in range(n):
        prop.step(dt)
    for _ in range(n):
        prop.step(-dt)
    field = math.sqrt(float(np.sum(np.abs(prop.a - a0) ** 2 + np.abs(prop.b - b0) ** 2))
                      / float(np.sum(np.abs(a0) ** 2 + np.abs(b0) ** 2)))
    particle = float(np.linalg.norm(np.concatenate([prop.X - X0, prop.P - P0]))
                     / np.linalg.norm(np.concatenate([X0, P0])))
    return max(field, particle)


def check_conservation(d: dict) -> bool:
    g = FourierGrid(64, 32.0)
    drift, rev = 0.0, 0.0
    for p in (B_MODEL, ModelParams(kappa=4.0, model_tag="E")):
        drift = max(drift, energy_drift(p, g)[0])
        rev = max(rev, reversal_error(p, g))
    d["energy_drift"] = drift
    d["reversal"] = rev
    return drift < ENERGY_TOL and rev < REVERSE_TOL


# -- registry --------------------------------------------------------------------

CHECKS = [
    (1, "spectral identities", 5.0, check_spectral, "fast"),
    (2, "dispersion", 30.0, check_dispersion, "fast"),
    (3, "statics", 30.0, check_statics, "fast"),
    (4, "critical speed", 10.0, check_critical_speed, "fast"),
    (5, "friction asymptotics", 5.0, check_friction_asymptotics, "fast"),
    (6, "friction oracle", 600.0, check_friction_oracle, "full"),
    (7, "forced branches", 600.0, check_branches, "full"),
    (8, "reduced ODE", 10.0, check_reduced, "fast"),
    (9, "deceleration", 1200.0, check_deceleration, "full"),
    (10, "conservation", 120.0, check_conservation, "fast"),
]


def run_check(number: int) -> CheckResult:
    for num, name, budget, body, _ in CHECKS:
        if num == number:
            return _run(num, name, budget, body)
    raise KeyError(number)


def run_suite(suite: str = "fast", echo: Optional[Callable[[str], None]] = None) -> List[CheckResult]:
    if suite not in ("fast", "full"):
        raise ValueError(f"unknown suite {suite!r}")
    out = []
    for num, name, budget, body, tier in CHECKS:
        if suite == "fast" and tier != "fast":
            continue
        r = _run(num, name, budget, body)
        if echo:
            echo(r.line())
        out.append(r)
    return out
