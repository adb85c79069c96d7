"""Physical parameters, interaction potentials and the periodic computational box.

Fourier convention used everywhere in the package: unitary continuum transform,

    f_hat(k) = (2 pi)^(-3/2) \\int d^3x f(x) exp(-i k.x),

so a normalised gaussian with sigma=1, amplitude=1 has f_hat(0) = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .errors import ModelError, UnsupportedEvaluation

TWO_PI_32 = (2.0 * math.pi) ** 1.5

MODEL_TAGS = ("B", "E")
POTENTIAL_FAMILIES = ("gaussian", "delta")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the particle + condensate system.

    ``model_tag`` selects the field normalisation: "B" evolves
    ``i beta' = -Lap beta / 2m + W^X`` (unit source, kappa = 0) and "E" evolves
    ``i beta' = -Lap beta / 2m + kappa/4 Phi*Re beta + nu W^X``.  In both the
    particle feels ``-nu \\int grad W(X - x) Re beta(x)``.

    ``lam``, ``g`` and ``rho`` only record the mean-field limit the run
    corresponds to; no dynamics reads them.
    """

    M: float = 1.0
    m: float = 1.0
    kappa: float = 0.0
    nu: float = 1.0
    force: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    model_tag: str = "B"
    lam: Optional[float] = None
    g: Optional[float] = None
    rho: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "force", tuple(float(c) for c in self.force))
        if len(self.force) != 3:
            raise ModelError("external force must have three components")
        if not self.M > 0:
            raise ModelError(f"particle mass M must be > 0, got {self.M}")
        if not self.m > 0:
            raise ModelError(f"field mass m must be > 0, got {self.m}")
        if not self.nu > 0:
            raise ModelError(f"coupling nu must be > 0, got {self.nu}")
        if not self.kappa >= 0:
            raise ModelError(f"kappa must be >= 0, got {self.kappa}")
        if self.model_tag not in MODEL_TAGS:
            raise ModelError(f"model_tag must be one of {MODEL_TAGS}, got {self.model_tag!r}")
        if (self.model_tag == "B") != (self.kappa == 0):
            raise ModelError(
                "B-model invariant violated: model_tag == 'B' if and only if kappa == 0 "
                f"(got model_tag={self.model_tag!r}, kappa={self.kappa})"
            )

    @property
    def source_coupling(self) -> float:
        """Coefficient of W^X in the field equation."""
        return 1.0 if self.model_tag == "B" else self.nu

    @property
    def energy_scale(self) -> float:
        """Prefactor nu/s multiplying the free-field energy (s = source coupling).

        Required so that the field equation is generated by the same
        functional whose X-gradient gives the particle force.
        """
        return self.nu / self.source_coupling

    @property
    def force_vector(self) -> np.ndarray:
        return np.asarray(self.force, dtype=float)


@dataclass(frozen=True)
class PotentialSpec:
    """Spherically symmetric potential: ``A exp(-r^2 / 2 sigma^2)`` or ``A delta(x)``."""

    family: str = "gaussian"
    sigma: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.family not in POTENTIAL_FAMILIES:
            raise ModelError(f"unknown potential family {self.family!r}")
        if self.family == "gaussian" and not self.sigma > 0:
            raise ModelError(f"gaussian width must be > 0, got {self.sigma}")

    @property
    def is_smooth(self) -> bool:
        return self.family == "gaussian"

    def radial(self, r2):
        """Value as a function of |x|^2 (gaussian only)."""
        if self.family == "delta":
            raise UnsupportedEvaluation("a delta potential has no pointwise value")
        return self.amplitude * np.exp(-np.asarray(r2) / (2.0 * self.sigma**2))

    def radial_fourier(self, k2):
        """Unitary transform as a function of |k|^2."""
        k2 = np.asarray(k2, dtype=float)
        if self.family == "delta":
            return np.full(k2.shape, self.amplitude / TWO_PI_32)
        return self.amplitude * self.sigma**3 * np.exp(-0.5 * self.sigma**2 * k2)

    @property
    def length_scale(self) -> float:
        return self.sigma if self.family == "gaussian" else 0.0


def eval_potential(spec: PotentialSpec, x) -> float | np.ndarray:
    """W(x) for points ``x`` (last axis of length 3)."""
    x = np.asarray(x, dtype=float)
    return spec.radial(np.sum(x * x, axis=-1))


def potential_fourier(spec: PotentialSpec, k) -> float | np.ndarray:
    """Exact unitary Fourier transform at wave vectors ``k`` (last axis of length 3)."""
    k = np.asarray(k, dtype=float)
    return spec.radial_fourier(np.sum(k * k, axis=-1))


def require_smooth_W(spec: PotentialSpec) -> None:
    if not spec.is_smooth:
        raise ModelError("the particle-field potential W must be smooth; delta is only allowed for Phi")


@dataclass(frozen=True)
class FourierGrid:
    """Periodic cube of side ``L`` with ``n`` points per axis.

    Positions are cell-aligned on ``[-L/2, L/2)``, so the origin sits on grid
    index ``n // 2``.  Wave numbers follow FFT ordering.  Real fields are held
    in the half spectrum of :func:`numpy.fft.rfftn` (last axis of length
    ``n // 2 + 1``); :attr:`half_weights` counts each stored mode with its
    conjugate partner so that sums over the half spectrum equal sums over the
    full lattice.
    """

    n: int
    L: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ModelError(f"grid size must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ModelError(f"box length must be > 0, got {self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def k_max(self) -> float:
        """Nyquist wave number pi n / L."""
        return math.pi * self.n / self.L

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def mode_volume(self) -> float:
        return self.dk**3

    @cached_property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def k_half(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.rfftfreq(self.n, d=self.dx)

    @cached_property
    def mode_index(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n) * self.n).astype(int)

    def mesh(self):
        """Position mesh (X, Y, Z), each of shape (n, n, n)."""
        return np.meshgrid(self.x, self.x, self.x, indexing="ij")

    def r2_from(self, center=(0.0, 0.0, 0.0)) -> np.ndarray:
        """Squared minimum-image distance of every grid point from ``center``."""
        out = np.zeros((self.n,) * 3)
        for axis, c in enumerate(np.asarray(center, dtype=float)):
            d = self.x - c
            d -= self.L * np.round(d / self.L)
            shape = [1, 1, 1]
            shape[axis] = self.n
            out = out + (d * d).reshape(shape)
        return out

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the full lattice, shape (n, n, n)."""
        k = self.k
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + k[None, None, :] ** 2

    @cached_property
    def k2_half(self) -> np.ndarray:
        k, kh = self.k, self.k_half
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + kh[None, None, :] ** 2

    @cached_property
    def half_weights(self) -> np.ndarray:
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @cached_property
    def nyquist_mask_half(self) -> np.ndarray:
        """1.0 on ordinary modes, 0.0 on any Nyquist plane (half spectrum).

        Nyquist modes are their own conjugates, so a phase shift by a
        non-grid displacement is not representable there; source terms are
        switched off on them.
        """
        n = self.n
        m = np.ones((n, n, n // 2 + 1))
        m[n // 2, :, :] = 0.0
        m[:, n // 2, :] = 0.0
        m[:, :, -1] = 0.0
        return m

    @cached_property
    def parity_full(self) -> np.ndarray:
        """(-1)^(i+j+l) over FFT mode indices: phase of the -L/2 origin shift."""
        s = np.where(self.mode_index % 2 == 0, 1.0, -1.0)
        return s[:, None, None] * s[None, :, None] * s[None, None, :]

    @cached_property
    def parity_half(self) -> np.ndarray:
        s = np.where(self.mode_index % 2 == 0, 1.0, -1.0)
        sh = np.where(np.arange(self.n // 2 + 1) % 2 == 0, 1.0, -1.0)
        return s[:, None, None] * s[None, :, None] * sh[None, None, :]

    def phases_half(self, X, sign: int = -1):
        """Separable factors of exp(sign * i k.X) along the three half-spectrum axes."""
        X = np.asarray(X, dtype=float)
        return (
            np.exp(sign * 1j * self.k * X[0]),
            np.exp(sign * 1j * self.k * X[1]),
            np.exp(sign * 1j * self.k_half * X[2]),
        )

    def wrap(self, X) -> np.ndarray:
        """Map a position into the box [-L/2, L/2)."""
        X = np.asarray(X, dtype=float)
        return X - self.L * np.floor((X + 0.5 * self.L) / self.L)
