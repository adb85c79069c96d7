"""Pure-NumPy versions of the hot per-mode loops.

Every function here has an identically named counterpart in the compiled
``_ckernels`` extension.  Arrays live on the rfft half spectrum, shape
(n, n, n//2 + 1); ``px, py, pz`` are the separable phase factors of a
particle position along the three axes.
"""
import numpy as np


def _outer(px, py, pz):
    return px[:, None, None] * py[None, :, None] * pz[None, None, :]


def field_flow(a, b, cosw, sab, sba, qa, qb, px, py, pz):
    """Exact linear flow of the (Re, Im) mode pair with a frozen source, in place.

    a' = cos a + sab b + qa ph,   b' = -sba a + cos b + qb ph,   ph = px py pz.
    """
    ph = _outer(px, py, pz)
    a_new = cosw * a + sab * b + qa * ph
    b *= cosw
    b -= sba * a
    b += qb * ph
    a[...] = a_new


def particle_force(a, wk, kx, ky, kz, px, py, pz):
    """Sums of wk k Im(ph a) (three components) and wk Re(ph a)."""
    t = wk * (_outer(px, py, pz) * a)
    im = t.imag
    fx = float(np.dot(kx, im.sum(axis=(1, 2))))
    fy = float(np.dot(ky, im.sum(axis=(0, 2))))
    fz = float(np.dot(kz, im.sum(axis=(0, 1))))
    return fx, fy, fz, float(t.real.sum())


def friction_sum(wk2, kx, ky, kz, epsk, gk, vx, vy, vz, eps):
    """Sums of wk2 k Im(epsk / ((k.v + i eps)^2 - epsk gk)) over modes with epsk > 0."""
    kv = kx[:, None, None] * vx + ky[None, :, None] * vy + kz[None, None, :] * vz
    om = kv + 1j * eps
    den = om * om - epsk * gk
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(epsk > 0, epsk / den, 0.0)
    t = wk2 * q.imag
    fx = float(np.dot(kx, t.sum(axis=(1, 2))))
    fy = float(np.dot(ky, t.sum(axis=(0, 2))))
    fz = float(np.dot(kz, t.sum(axis=(0, 1))))
    return fx, fy, fz
