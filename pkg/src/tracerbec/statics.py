"""Static particle-field solutions, the field-induced force, and spatial decay analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError, ZeroModeError
from .kernels import particle_force
from .model import FourierGrid, ModelParams, PotentialSpec, require_smooth_W
from .spectral import POSITION, ComplexField, check_position, irfft3, potential_on_grid, rfft3


def static_symbol(params: ModelParams, Phi: PotentialSpec, k2) -> np.ndarray:
    """g(k) = k^2/2m + kappa/4 Phi_hat(k), the elliptic operator of the static problem."""
    return k2 / (2.0 * params.m) + 0.25 * params.kappa * Phi.radial_fourier(k2)


def static_half_spectrum(
    params: ModelParams,
    W: PotentialSpec,
    Phi: PotentialSpec,
    grid: FourierGrid,
    X_star=(0.0, 0.0, 0.0),
    project_zero_mode: Optional[bool] = None,
) -> np.ndarray:
    """Half spectrum of the (real) static profile centred at ``X_star``.

    The k=0 mode is set to ``-s W_hat(0) / g(0)`` when kappa Phi_hat(0) > 0
    and to zero (projected) for kappa = 0.
    """
    require_smooth_W(W)
    if project_zero_mode is None:
        project_zero_mode = params.kappa == 0
    g0 = 0.25 * params.kappa * float(Phi.radial_fourier(0.0))
    if params.kappa > 0 and g0 <= 0:
        raise PreconditionError("ill-posed static problem: kappa > 0 requires Phi_hat(0) > 0")
    if params.kappa == 0 and not project_zero_mode:
        raise ZeroModeError(
            "kappa = 0: W_hat(0) != 0 makes the static problem singular at k = 0; "
            "request zero-mode projection"
        )
    k2 = grid.k2_half
    g = static_symbol(params, Phi, k2)
    if g0 == 0:
        g[0, 0, 0] = 1.0
    px, py, pz = grid.phases_half(X_star, sign=-1)
    ph = px[:, None, None] * py[None, :, None] * pz[None, None, :]
    s = params.source_coupling
    out = -s * potential_on_grid(W, grid) * grid.nyquist_mask_half / g * ph
    if params.kappa == 0 or project_zero_mode:
        out[0, 0, 0] = 0.0
    return out


def static_profile(
    params: ModelParams,
    W_spec: PotentialSpec,
    Phi_spec: PotentialSpec,
    X_star,
    grid: FourierGrid,
    project_zero_mode: Optional[bool] = None,
) -> ComplexField:
    """Real static field solving (-Lap/2m + kappa/4 Phi*) beta = -s W^{X_star}.

    For the B-model (s = 1, m = 1) this is 2 Lap^{-1} W^{X_star} up to the
    projected zero mode; ``meta['zero_mode_projected']`` records whether the
    k = 0 component was dropped.
    """
    a_hat = static_half_spectrum(params, W_spec, Phi_spec, grid, X_star, project_zero_mode)
    a = irfft3(a_hat, grid)
    projected = bool(params.kappa == 0 or project_zero_mode)
    return ComplexField(grid, a.astype(complex), POSITION, {"zero_mode_projected": projected})


def static_residual(params, W_spec, Phi_spec, beta: ComplexField, X_star) -> float:
    """||(-Lap/2m + kappa/4 Phi*) beta + s W^X|| / ||s W^X||, applied spectrally.

    The k=0 mode is excluded when the profile was built with zero-mode projection.
    """
    grid = beta.grid
    a_hat = rfft3(beta.values.real, grid)
    b_hat = rfft3(beta.values.imag, grid)
    g = static_symbol(params, Phi_spec, grid.k2_half)
    px, py, pz = grid.phases_half(X_star, sign=-1)
    ph = px[:, None, None] * py[None, :, None] * pz[None, None, :]
    src = params.source_coupling * potential_on_grid(W_spec, grid) * grid.nyquist_mask_half * ph
    res_a = g * a_hat + src
    res_b = g * b_hat
    if beta.meta.get("zero_mode_projected"):
        res_a[0, 0, 0] = 0.0
        src = src.copy()
        src[0, 0, 0] = 0.0
    w = grid.half_weights
    num = np.sum(w * (np.abs(res_a) ** 2 + np.abs(res_b) ** 2))
    den = np.sum(w * np.abs(src) ** 2)
    return math.sqrt(num / den)


def force_weights(W: PotentialSpec, grid: FourierGrid) -> np.ndarray:
    """Half-spectrum weights w_k W_hat(k) dk^3 used by the force and energy sums."""
    return np.ascontiguousarray(
        grid.half_weights * potential_on_grid(W, grid) * grid.nyquist_mask_half * grid.mode_volume
    )


def force_from_half_spectrum(params: ModelParams, wk: np.ndarray, a_hat: np.ndarray, grid: FourierGrid, X):
    """(force vector, nu * int W^X Re beta) from the half spectrum of Re beta."""
    px, py, pz = grid.phases_half(X, sign=+1)
    fx, fy, fz, e = particle_force(a_hat, wk, grid.k, grid.k, grid.k_half, px, py, pz)
    return params.nu * np.array([fx, fy, fz]), params.nu * e


def self_force(params: ModelParams, W_spec: PotentialSpec, beta: ComplexField, X) -> np.ndarray:
    """Field force on the particle, -nu int (grad W)(X - x) Re beta(x) d^3x.

    Evaluated spectrally: the gradient of W is differentiated exactly by its
    Fourier symbol and the periodic trapezoid sum is exact for the grid
    trigonometric interpolant, so X need not lie on a grid point.
    """
    check_position(beta, "beta")
    require_smooth_W(W_spec)
    grid = beta.grid
    a_hat = np.ascontiguousarray(rfft3(np.ascontiguousarray(beta.values.real), grid))
    f, _ = force_from_half_spectrum(params, force_weights(W_spec, grid), a_hat, grid, X)
    return f


# -- decay analysis -----------------------------------------------------------


@dataclass
class DecayReport:
    classification: str  # "exponential", "power-law" or "undetermined"
    rate: float  # exponential rate (positive for decay)
    exponent: float  # power-law exponent (negative for decay)
    exp_residual: float
    power_residual: float
    r: np.ndarray = field(repr=False)
    shell_mean: np.ndarray = field(repr=False)
    window: tuple = (0.0, 0.0)
    diagnostic: str = ""


def shell_average(values: np.ndarray, grid: FourierGrid, center, bin_width: Optional[float] = None):
    """Mean of ``values`` in spherical shells (minimum-image distance) around ``center``."""
    if bin_width is None:
        bin_width = 2.0 * grid.dx
    r = np.sqrt(grid.r2_from(center)).ravel()
    edges = np.arange(0.0, 0.5 * grid.L + bin_width, bin_width)
    idx = np.digitize(r, edges) - 1
    nb = len(edges) - 1
    ok = idx < nb
    counts = np.bincount(idx[ok], minlength=nb)
    sums = np.bincount(idx[ok], weights=values.ravel()[ok], minlength=nb)
    rsum = np.bincount(idx[ok], weights=r[ok], minlength=nb)
    keep = counts > 0
    return rsum[keep] / counts[keep], sums[keep] / counts[keep]


def decay_profile(
    beta: ComplexField,
    center=(0.0, 0.0, 0.0),
    window=(0.2, 0.4),
    separation: float = 3.0,
    edge_ratio: float = 1e-3,
) -> DecayReport:
    """Classify the far-field decay of |beta| around ``center``.

    Shell means of |beta| are fitted as log|beta| ~ r (exponential) and
    log|beta| ~ log r (power law) over ``window`` (fractions of L).  A law is
    declared only if its RMS residual is smaller by ``separation`` than the
    other's.
    """
    check_position(beta, "beta")
    grid = beta.grid
    r, mean_abs = shell_average(np.abs(beta.values), grid, center)
    lo, hi = window[0] * grid.L, window[1] * grid.L
    peak = float(mean_abs.max())
    edge = mean_abs[r >= 0.45 * grid.L]
    edge_val = float(edge.mean()) if edge.size else float(mean_abs[-1])
    sel = (r >= lo) & (r <= hi) & (mean_abs > 0)
    report = dict(r=r, shell_mean=mean_abs, window=(lo, hi))
    if peak == 0 or edge_val > edge_ratio * peak:
        return DecayReport(
            "undetermined", math.nan, math.nan, math.nan, math.nan,
            diagnostic=f"insufficient decay before the box edge (edge/peak = {edge_val / peak if peak else math.nan:.2e})",
            **report,
        )
    if sel.sum() < 4:
        return DecayReport("undetermined", math.nan, math.nan, math.nan, math.nan,
                           diagnostic="too few shells in the fit window", **report)
    y = np.log(mean_abs[sel])
    rs = r[sel]
    pe, res_e = np.polyfit(rs, y, 1, full=True)[:2]
    pp, res_p = np.polyfit(np.log(rs), y, 1, full=True)[:2]
    n = sel.sum()
    re = math.sqrt(float(res_e[0]) / n) if len(res_e) else 0.0
    rp = math.sqrt(float(res_p[0]) / n) if len(res_p) else 0.0
    if re * separation <= rp:
        cls = "exponential"
    elif rp * separation <= re:
        cls = "power-law"
    else:
        cls = "undetermined"
    return DecayReport(cls, -float(pe[0]), float(pp[0]), re, rp, **report)
