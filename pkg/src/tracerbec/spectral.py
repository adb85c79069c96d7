"""Discrete transforms, the Bogoliubov dispersion relation and diagonal k-space operators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft as sfft
from scipy import optimize

from .errors import PreconditionError, SpaceMismatch, ZeroModeError
from .model import TWO_PI_32, FourierGrid, ModelParams, PotentialSpec

POSITION = "position"
FOURIER = "fourier"


@dataclass
class ComplexField:
    """Complex scalar on a :class:`FourierGrid`, in position or Fourier space.

    Real and imaginary parts of beta carry phi/sqrt(2) and pi/sqrt(2).
    Fourier values approximate the continuum unitary transform, so a sampled
    potential transforms to :func:`potential_fourier` values.
    """

    grid: FourierGrid
    values: np.ndarray
    space: str = POSITION
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.grid.n
        if self.values.shape != (n, n, n):
            raise SpaceMismatch(f"field shape {self.values.shape} does not match grid n={n}")
        if self.space not in (POSITION, FOURIER):
            raise SpaceMismatch(f"unknown space tag {self.space!r}")

    @classmethod
    def zeros(cls, grid: FourierGrid, space: str = POSITION) -> "ComplexField":
        return cls(grid, np.zeros((grid.n,) * 3, dtype=complex), space)

    def norm(self) -> float:
        """L2 norm with the measure of the current space (dx^3 or dk^3)."""
        w = self.grid.cell_volume if self.space == POSITION else self.grid.mode_volume
        return math.sqrt(w * float(np.sum(np.abs(self.values) ** 2)))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy(), self.space, dict(self.meta))


def _scale(grid: FourierGrid) -> float:
    return grid.cell_volume / TWO_PI_32


def forward_transform(f: ComplexField, workers: Optional[int] = None) -> ComplexField:
    if f.space != POSITION:
        raise SpaceMismatch("forward_transform expects a position-space field")
    g = f.grid
    vals = sfft.fftn(f.values, workers=workers) * (g.parity_full * _scale(g))
    return ComplexField(g, vals, FOURIER, dict(f.meta))


def inverse_transform(f: ComplexField, workers: Optional[int] = None) -> ComplexField:
    if f.space != FOURIER:
        raise SpaceMismatch("inverse_transform expects a Fourier-space field")
    g = f.grid
    vals = sfft.ifftn(f.values * (g.parity_full / _scale(g)), workers=workers)
    return ComplexField(g, vals, POSITION, dict(f.meta))


def rfft3(a: np.ndarray, grid: FourierGrid, workers: Optional[int] = None) -> np.ndarray:
    """Continuum-normalised half spectrum of a real field."""
    return sfft.rfftn(a, workers=workers) * (grid.parity_half * _scale(grid))


def irfft3(a_hat: np.ndarray, grid: FourierGrid, workers: Optional[int] = None) -> np.ndarray:
    n = grid.n
    return sfft.irfftn(a_hat * (grid.parity_half / _scale(grid)), s=(n, n, n), workers=workers)


def potential_on_grid(spec: PotentialSpec, grid: FourierGrid, half: bool = True) -> np.ndarray:
    """Analytic transform of ``spec`` on the lattice (centred at the origin)."""
    return spec.radial_fourier(grid.k2_half if half else grid.k2)


# -- dispersion ---------------------------------------------------------------


def _omega_k2(params: ModelParams, phi: PotentialSpec, k2, display_form: bool = False):
    k2 = np.asarray(k2, dtype=float)
    kin = k2 / (2.0 * params.m)
    if display_form:
        return np.sqrt(k2 * (kin / (2.0 * params.m) + params.kappa * phi.radial_fourier(k2) / (2.0 * params.m)))
    return np.sqrt(kin * (kin + 0.25 * params.kappa * phi.radial_fourier(k2)))


def dispersion_omega(params: ModelParams, spec_Phi: PotentialSpec, k, display_form: bool = False):
    """Plane-wave frequency of the linearised field equation.

    ``Omega(k) = sqrt(k^2/2m * (k^2/2m + kappa/4 Phi_hat(k)))``.  With
    ``display_form`` the alternative display form
    ``|k| sqrt((k/2m)^2 + kappa Phi_hat(k) / 2m)`` is returned instead; it is
    not what the evolution equations produce.
    """
    k = np.asarray(k, dtype=float)
    return _omega_k2(params, spec_Phi, np.sum(k * k, axis=-1), display_form)


def phase_velocity(params: ModelParams, spec_Phi: PotentialSpec, kmag, display_form: bool = False):
    """Omega(k)/|k| as a function of |k| > 0."""
    kmag = np.asarray(kmag, dtype=float)
    return _omega_k2(params, spec_Phi, kmag * kmag, display_form) / kmag


def sound_speed(params: ModelParams, spec_Phi: PotentialSpec, display_form: bool = False) -> float:
    phi0 = float(spec_Phi.radial_fourier(0.0))
    if display_form:
        return math.sqrt(params.kappa * phi0 / (2.0 * params.m))
    return math.sqrt(params.kappa * phi0 / (8.0 * params.m))


def default_k_max(spec_Phi: PotentialSpec, grid: Optional[FourierGrid] = None) -> float:
    if grid is not None:
        return grid.k_max
    if spec_Phi.family == "gaussian":
        return 12.0 / spec_Phi.sigma
    return 12.0


def critical_speed(
    params: ModelParams,
    spec_Phi: PotentialSpec,
    grid: Optional[FourierGrid] = None,
    k_max: Optional[float] = None,
    n_scan: int = 4096,
    tol: float = 1e-9,
) -> float:
    """Minimum of the phase velocity Omega(k)/|k| over 0 < |k| <= k_max.

    Coarse scan of ``n_scan`` radial samples followed by golden-section
    refinement; the k -> 0 limit (the sound speed) is always a candidate.
    """
    v_star = sound_speed(params, spec_Phi)
    if params.kappa == 0:
        return 0.0
    if k_max is None:
        k_max = default_k_max(spec_Phi, grid)
    ks = np.linspace(k_max / n_scan, k_max, n_scan)
    c = phase_velocity(params, spec_Phi, ks)
    i = int(np.argmin(c))
    if c[i] >= v_star:
        return v_star
    if i == len(ks) - 1:
        return float(c[i])
    lo = ks[i - 1] if i > 0 else 0.5 * ks[0]
    res = optimize.minimize_scalar(
        lambda q: float(phase_velocity(params, spec_Phi, q)),
        bracket=(lo, ks[i], ks[i + 1]),
        method="golden",
        tol=tol,
    )
    return float(min(res.fun, c[i], v_star))


# -- diagonal operators -------------------------------------------------------


def laplacian(f: ComplexField) -> ComplexField:
    fourier = f.space == FOURIER
    fh = f if fourier else forward_transform(f)
    out = ComplexField(f.grid, -f.grid.k2 * fh.values, FOURIER, dict(f.meta))
    return out if fourier else inverse_transform(out)


def inverse_laplacian(f: ComplexField, project_zero_mode: bool = False, tol: float = 1e-10) -> ComplexField:
    """Solve Lap g = f spectrally; g_hat(0) is set to zero.

    Without ``project_zero_mode`` the input must have zero mean (|f_hat(0)|
    below ``tol`` relative to the largest mode).
    """
    fourier = f.space == FOURIER
    fh = f if fourier else forward_transform(f)
    v = fh.values
    scale = float(np.max(np.abs(v))) or 1.0
    if not project_zero_mode and abs(v[0, 0, 0]) > tol * scale:
        raise ZeroModeError(
            f"inverse_laplacian: input has non-zero mean (|f_hat(0)| = {abs(v[0, 0, 0]):.3e}); "
            "pass project_zero_mode=True to drop it"
        )
    k2 = f.grid.k2.copy()
    k2[0, 0, 0] = 1.0
    g = -v / k2
    g[0, 0, 0] = 0.0
    meta = dict(f.meta)
    meta["zero_mode_projected"] = True
    out = ComplexField(f.grid, g, FOURIER, meta)
    return out if fourier else inverse_transform(out)


def require_same_grid(*fields: ComplexField) -> FourierGrid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise SpaceMismatch("fields live on different grids")
    return g


def check_position(f: ComplexField, what: str = "field") -> None:
    if f.space != POSITION:
        raise PreconditionError(f"{what} must be given in position space")
