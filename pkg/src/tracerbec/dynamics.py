"""Time evolution of the coupled particle-field system.

The field equation is linear in beta, so each mode pair (Re beta_hat,
Im beta_hat) is advanced by its exact rotation, including the W^X source
frozen at the midpoint particle position.  The particle is advanced by
half kicks around a drift (Strang splitting), which keeps the scheme second
order and exactly time-reversible when the sponge is off.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfigError, PreconditionError, StepError
from .kernels import field_flow
from .model import FourierGrid, ModelParams, PotentialSpec, require_smooth_W
from .spectral import POSITION, ComplexField, check_position, irfft3, rfft3
from .statics import force_from_half_spectrum, force_weights, static_half_spectrum, static_symbol

log = logging.getLogger(__name__)

# strength giving >= 100x attenuation of a k = 2..3 packet per crossing of a 0.15 L shell
DEFAULT_SPONGE_STRENGTH = 2.0


@dataclass(frozen=True)
class SpongeConfig:
    """Absorbing shell: ``width`` (length) next to the faces of the particle-centred cell.

    Inside the shell the deviation beta - beta_*(X) is multiplied by
    ``exp(-strength * dt * cos^2(pi d / 2 width))`` per application, d being
    the distance to the cell face.  ``interval`` applies it every that many
    steps (with the accumulated dt).
    """

    width: float = 0.0
    strength: float = DEFAULT_SPONGE_STRENGTH
    interval: int = 1

    @property
    def active(self) -> bool:
        return self.width > 0 and self.strength > 0


@dataclass
class SimState:
    t: float
    X: np.ndarray
    P: np.ndarray
    beta: ComplexField
    params: ModelParams
    W: PotentialSpec
    Phi: PotentialSpec
    sponge: SpongeConfig = field(default_factory=SpongeConfig)
    X_unwrapped: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        if self.X_unwrapped is None:
            self.X_unwrapped = self.X.copy()
        self.X = self.beta.grid.wrap(self.X)
        check_position(self.beta, "SimState.beta")

    @property
    def grid(self) -> FourierGrid:
        return self.beta.grid


class Propagator:
    """Spectral-space integrator holding the half spectra of Re beta and Im beta.

    This is the object evolution loops run on; :func:`step` wraps it for
    single steps on a :class:`SimState`.
    """

    def __init__(self, state: SimState):
        require_smooth_W(state.W)
        self.params = state.params
        self.W = state.W
        self.Phi = state.Phi
        self.sponge = state.sponge
        self.grid = g = state.grid
        self.t = float(state.t)
        self.X = np.array(state.X_unwrapped, dtype=float)
        self.P = np.array(state.P, dtype=float)
        self.a = np.ascontiguousarray(rfft3(np.ascontiguousarray(state.beta.values.real), g))
        self.b = np.ascontiguousarray(rfft3(np.ascontiguousarray(state.beta.values.imag), g))
        k2 = g.k2_half
        self.eps_k = k2 / (2.0 * self.params.m)
        self.g_k = static_symbol(self.params, self.Phi, k2)
        self.omega = np.sqrt(np.maximum(self.eps_k * self.g_k, 0.0))
        self.wk = force_weights(self.W, g)
        self.src = -self.params.source_coupling * self.W.radial_fourier(k2) * g.nyquist_mask_half
        self._coeff_cache = {}
        self._force = None
        self._steps = 0
        self._sponge_dt = 0.0

    # -- pieces ---------------------------------------------------------------

    def coefficients(self, dt: float):
        c = self._coeff_cache.get(dt)
        if c is None:
            wt = self.omega * dt
            sn = np.sinc(wt / math.pi)
            sh = np.sinc(0.5 * wt / math.pi)
            c = (
                np.cos(wt),
                self.eps_k * dt * sn,
                self.g_k * dt * sn,
                self.src * self.eps_k * 0.5 * dt * dt * sh * sh,
                self.src * dt * sn,
            )
            c = tuple(np.ascontiguousarray(x) for x in c)
            self._coeff_cache = {dt: c}
        return c

    def field_force(self, X=None):
        """(field force on the particle, interaction energy) at position X."""
        X = self.X if X is None else X
        return force_from_half_spectrum(self.params, self.wk, self.a, self.grid, X)

    def advance_field(self, dt: float, X_source) -> None:
        cosw, sab, sba, qa, qb = self.coefficients(dt)
        px, py, pz = self.grid.phases_half(X_source, sign=-1)
        field_flow(self.a, self.b, cosw, sab, sba, qa, qb, px, py, pz)

    def step(self, dt: float) -> None:
        M = self.params.M
        if abs(dt) * float(np.linalg.norm(self.P)) / M > 0.25 * self.grid.dx:
            raise StepError(
                f"particle drift bound violated: dt |P|/M = {abs(dt) * np.linalg.norm(self.P) / M:.3g} "
                f"> dx/4 = {0.25 * self.grid.dx:.3g}"
            )
        F_ext = self.params.force_vector
        if self._force is None:
            self._force = self.field_force()[0]
        self.P = self.P + 0.5 * dt * (F_ext + self._force)
        X_mid = self.X + 0.5 * dt * self.P / M
        self.advance_field(dt, X_mid)
        self.X = self.X + dt * self.P / M
        self._force = self.field_force()[0]
        self.P = self.P + 0.5 * dt * (F_ext + self._force)
        self.t += dt
        self._steps += 1
        if self.sponge.active:
            self._sponge_dt += abs(dt)
            if self._steps % max(1, self.sponge.interval) == 0:
                self.apply_sponge(self._sponge_dt)
                self._sponge_dt = 0.0

    # -- sponge ---------------------------------------------------------------

    def sponge_mask(self, dt_eff: float) -> np.ndarray:
        g = self.grid
        w, s = self.sponge.width, self.sponge.strength
        center = g.wrap(self.X)
        out = None
        for axis in range(3):
            d = g.x - center[axis]
            d -= g.L * np.round(d / g.L)
            face = 0.5 * g.L - np.abs(d)
            ramp = np.where(face < w, np.cos(0.5 * math.pi * np.clip(face, 0.0, w) / w) ** 2, 0.0)
            m1 = np.exp(-s * dt_eff * ramp)
            shape = [1, 1, 1]
            shape[axis] = g.n
            m1 = m1.reshape(shape)
            out = m1 if out is None else out * m1
        return out

    def apply_sponge(self, dt_eff: float) -> None:
        """Damp beta - beta_*(X) in the absorbing shell; the static cloud is left intact."""
        if not self.sponge.active:
            return
        g = self.grid
        a_star = static_half_spectrum(self.params, self.W, self.Phi, g, self.X)
        mask = self.sponge_mask(dt_eff)
        da = irfft3(self.a - a_star, g)
        db = irfft3(self.b, g)
        da *= mask
        db *= mask
        self.a = np.ascontiguousarray(a_star + rfft3(da, g))
        self.b = np.ascontiguousarray(rfft3(db, g))
        self._force = None

    # -- diagnostics ------------------------------------------------------------

    def field_energy(self) -> float:
        g = self.grid
        p = self.params
        w = g.half_weights * g.mode_volume
        kin = np.sum(w * g.k2_half * (np.abs(self.a) ** 2 + np.abs(self.b) ** 2)) / (4.0 * p.m)
        inter = 0.0
        if p.kappa:
            inter = p.kappa / 8.0 * np.sum(w * self.Phi.radial_fourier(g.k2_half) * np.abs(self.a) ** 2)
        return p.energy_scale * float(kin + inter)

    def total_energy(self) -> float:
        if self.sponge.active:
            raise PreconditionError("total_energy is not conserved with the sponge on; refusing")
        p = self.params
        _, e_int = self.field_force()
        kinetic = float(self.P @ self.P) / (2.0 * p.M)
        V = -float(p.force_vector @ self.X)
        return kinetic + V + self.field_energy() + e_int

    def ball_deviation(self, r_obs: float) -> float:
        """sup over |x - X| <= r_obs of |beta - beta_*(X)|, zero modes removed (gauge)."""
        g = self.grid
        da = self.a - static_half_spectrum(self.params, self.W, self.Phi, g, self.X)
        db = self.b.copy()
        da[0, 0, 0] = 0.0
        db[0, 0, 0] = 0.0
        mask = g.r2_from(g.wrap(self.X)) <= r_obs * r_obs
        dev = np.abs(irfft3(da, g)[mask] + 1j * irfft3(db, g)[mask])
        return float(dev.max())

    def beta(self) -> ComplexField:
        g = self.grid
        return ComplexField(g, irfft3(self.a, g) + 1j * irfft3(self.b, g), POSITION)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.a).all() and np.isfinite(self.b).all() and np.isfinite(self.P).all())

    def to_state(self) -> SimState:
        return SimState(self.t, self.grid.wrap(self.X), self.P.copy(), self.beta(), self.params,
                        self.W, self.Phi, self.sponge, X_unwrapped=self.X.copy())


def step(state: SimState, dt: float) -> SimState:
    """Advance a state by one Strang step of size dt (negative dt runs backwards)."""
    prop = Propagator(state)
    prop.step(dt)
    if not prop.is_finite():
        raise StepError(f"non-finite values after step at t={prop.t}")
    return prop.to_state()


def total_energy(state: SimState) -> float:
    """Conserved functional matching the model normalisation.

    E = |P|^2/2M + V(X) + (nu/s)[(1/4m) int |grad beta|^2 + (kappa/8) int Re beta Phi* Re beta]
        + nu int W^X Re beta,

    s being the source coupling (1 for B, nu for E).
    """
    return Propagator(state).total_energy()


def apply_sponge(state: SimState, dt: float) -> SimState:
    if not state.sponge.active:
        return state
    prop = Propagator(state)
    prop.apply_sponge(dt)
    return prop.to_state()


def sponge_calibration(grid: FourierGrid, sponge: SpongeConfig, k0: float = 2.0, packet_width: float = 2.5,
                       dt: float = 0.02) -> float:
    """Attenuation factor of a free wave packet sent once through the absorbing shell.

    A gaussian packet with carrier k0 along x starts just inside the open
    region and travels until its centre is past the shell pair at the
    periodic face; the result is initial / final L2 norm of the deviation
    (reflected and transmitted parts both count).
    """
    params = ModelParams()
    W0 = PotentialSpec(amplitude=0.0)
    w = sponge.width
    X, Y, Z = grid.mesh()
    x0 = 0.5 * grid.L - w - 2.0 * packet_width
    packet = np.exp(-((X - x0) ** 2 + Y**2 + Z**2) / (2.0 * packet_width**2) + 1j * k0 * X)
    prop = Propagator(SimState(0.0, np.zeros(3), np.zeros(3), ComplexField(grid, packet), params, W0, W0, sponge))
    n0 = math.sqrt(float(np.sum(np.abs(packet) ** 2)))
    T = (2.0 * w + 4.0 * packet_width) * params.m / k0
    for _ in range(int(round(T / dt))):
        prop.step(dt)
    return n0 / math.sqrt(float(np.sum(np.abs(prop.beta().values) ** 2)))


# -- runs -----------------------------------------------------------------------


@dataclass
class RunConfig:
    grid: FourierGrid
    params: ModelParams = field(default_factory=ModelParams)
    W: PotentialSpec = field(default_factory=PotentialSpec)
    Phi: PotentialSpec = field(default_factory=PotentialSpec)
    dt: float = 0.01
    t_max: float = 10.0
    X0: tuple = (0.0, 0.0, 0.0)
    P0: tuple = (0.0, 0.0, 0.0)
    beta0: str = "zero"  # "zero" | "static"
    sponge: SpongeConfig = field(default_factory=SpongeConfig)
    sample_every: int = 10
    r_obs: float = 2.0
    snapshot_every: int = 0
    log_times: bool = False


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    P: np.ndarray
    energy: np.ndarray
    ball_dev: np.ndarray
    wall_time: float = 0.0
    snapshots: List[tuple] = field(default_factory=list, repr=False)

    @property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.P, axis=1)


def initial_state(cfg: RunConfig) -> SimState:
    g = cfg.grid
    if cfg.beta0 == "zero":
        beta = ComplexField.zeros(g)
    elif cfg.beta0 == "static":
        a = irfft3(static_half_spectrum(cfg.params, cfg.W, cfg.Phi, g, cfg.X0), g)
        beta = ComplexField(g, a.astype(complex))
    else:
        raise ConfigError(f"unknown initial field {cfg.beta0!r}")
    return SimState(0.0, np.asarray(cfg.X0, float), np.asarray(cfg.P0, float), beta,
                    cfg.params, cfg.W, cfg.Phi, cfg.sponge)


def validate_run(cfg: RunConfig) -> None:
    g = cfg.grid
    if cfg.dt <= 0 or cfg.t_max <= 0:
        raise ConfigError("dt and t_max must be positive")
    if cfg.sponge.active and cfg.sponge.width + cfg.r_obs >= 0.5 * g.L:
        raise ConfigError(
            f"sponge shell (width {cfg.sponge.width}) overlaps the observation ball (r_obs {cfg.r_obs})"
        )
    if not cfg.sponge.active:
        vg = g.k_max / cfg.params.m
        if cfg.t_max >= g.L / (2.0 * vg):
            log.warning("t_max=%.3g exceeds the wrap-around time %.3g of the fastest grid mode; "
                        "waves will re-enter the box", cfg.t_max, g.L / (2.0 * vg))


def evolve(cfg: RunConfig, state: Optional[SimState] = None,
           on_sample: Optional[Callable[[Propagator], None]] = None) -> Trajectory:
    """Run the configured simulation and record the trajectory observables.

    Samples are taken every ``sample_every`` steps (or on a geometric time
    grid when ``log_times`` is set), including t=0.
    """
    validate_run(cfg)
    state = initial_state(cfg) if state is None else state
    prop = Propagator(state)
    nsteps = int(round(cfg.t_max / cfg.dt))
    if cfg.log_times:
        marks = np.unique(np.rint(np.geomspace(1, nsteps, 200)).astype(int))
    else:
        marks = np.arange(cfg.sample_every, nsteps + 1, cfg.sample_every)
    marks = set(int(m) for m in marks) | {nsteps}
    ts, Xs, Ps, Es, Ds, snaps = [], [], [], [], [], []

    def record():
        if not prop.is_finite():
            raise StepError(f"non-finite field at t={prop.t:.6g}")
        ts.append(prop.t)
        Xs.append(prop.X.copy())
        Ps.append(prop.P.copy())
        Es.append(math.nan if cfg.sponge.active else prop.total_energy())
        Ds.append(prop.ball_deviation(cfg.r_obs))
        if on_sample is not None:
            on_sample(prop)

    t0 = time.perf_counter()
    record()
    for i in range(1, nsteps + 1):
        prop.step(cfg.dt)
        if i in marks:
            record()
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            snaps.append((prop.t, prop.beta()))
    return Trajectory(np.array(ts), np.array(Xs), np.array(Ps), np.array(Es), np.array(Ds),
                      time.perf_counter() - t0, snaps)
