"""The compiled kernels and the NumPy fallback must agree to rounding."""
import os
import subprocess
import sys

import numpy as np
import pytest

from tracerbec import _kernels_py
from tracerbec.kernels import BACKEND, backends
from tracerbec.model import FourierGrid

G = FourierGrid(16, 8.0)
SHAPE = (16, 16, 9)


def _arrays(seed):
    rng = np.random.default_rng(seed)
    c = lambda: np.ascontiguousarray(rng.standard_normal(SHAPE) + 1j * rng.standard_normal(SHAPE))
    r = lambda: np.ascontiguousarray(rng.standard_normal(SHAPE))
    return rng, c, r


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_field_flow_agrees(seed):
    rng, c, r = _arrays(seed)
    a0, b0 = c(), c()
    coeffs = (r(), r(), r(), r(), r())
    px, py, pz = G.phases_half(rng.standard_normal(3))
    out = {}
    for name, mod in backends().items():
        a, b = a0.copy(), b0.copy()
        mod.field_flow(a, b, *coeffs, px, py, pz)
        out[name] = (a, b)
    ref = out["python"]
    for a, b in out.values():
        assert np.allclose(a, ref[0], rtol=1e-13, atol=1e-13)
        assert np.allclose(b, ref[1], rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("seed", [3, 4])
def test_particle_force_agrees(seed):
    rng, c, r = _arrays(seed)
    a, wk = c(), r()
    px, py, pz = G.phases_half(rng.standard_normal(3), sign=+1)
    ref = _kernels_py.particle_force(a, wk, G.k, G.k, G.k_half, px, py, pz)
    for mod in backends().values():
        assert np.allclose(mod.particle_force(a, wk, G.k, G.k, G.k_half, px, py, pz), ref, rtol=1e-12)


def test_friction_skips_zero_mode():
    _, c, r = _arrays(5)
    epsk = np.ascontiguousarray(G.k2_half / 2)
    for mod in backends().values():
        f = mod.friction_sum(r() ** 2, G.k, G.k, G.k_half, epsk, epsk.copy(), 0.5, 0.0, 0.0, 0.0)
        assert np.all(np.isfinite(f))


def test_backend_reported():
    assert BACKEND in backends()


def test_fallback_env_var():
    env = dict(os.environ, TRACERBEC_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", "import tracerbec; print(tracerbec.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
