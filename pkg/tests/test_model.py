import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tracerbec.errors import ModelError, UnsupportedEvaluation
from tracerbec.model import (TWO_PI_32, FourierGrid, ModelParams, PotentialSpec, eval_potential,
                             potential_fourier, require_smooth_W)


def test_defaults():
    p = ModelParams()
    assert (p.M, p.m, p.nu, p.kappa, p.model_tag) == (1.0, 1.0, 1.0, 0.0, "B")
    assert p.source_coupling == 1.0
    assert ModelParams(kappa=2.0, model_tag="E", nu=0.3).source_coupling == 0.3


@pytest.mark.parametrize("kw", [dict(M=0), dict(m=-1), dict(nu=0), dict(kappa=-1, model_tag="E"),
                                dict(model_tag="G"), dict(force=(1, 2))])
def test_invalid_params(kw):
    with pytest.raises(ModelError):
        ModelParams(**kw)


def test_b_model_invariant_named():
    with pytest.raises(ModelError, match="B-model invariant"):
        ModelParams(kappa=0.5, model_tag="B")
    with pytest.raises(ModelError, match="B-model invariant"):
        ModelParams(kappa=0.0, model_tag="E")


def test_potential_values():
    g = PotentialSpec()
    assert potential_fourier(g, [0.0, 0.0, 0.0]) == pytest.approx(1.0, rel=1e-15)
    assert potential_fourier(g, [1.0, 0.0, 0.0]) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert potential_fourier(PotentialSpec("delta"), [3.0, 1.0, 0.0]) == pytest.approx(0.063494, abs=1e-6)
    assert potential_fourier(PotentialSpec("delta"), [0.0, 0.0, 0.0]) == 1.0 / TWO_PI_32
    assert eval_potential(g, [0.0, 0.0, 0.0]) == 1.0


def test_gaussian_transform_by_quadrature():
    # radial form of the unitary 3D transform: sqrt(2/pi) / k int r sin(kr) W(r) dr
    from scipy.integrate import quad

    W = PotentialSpec(sigma=1.3, amplitude=0.7)
    for k in (0.4, 1.0, 2.5):
        val = quad(lambda r: r * math.sin(k * r) * float(W.radial(r * r)), 0, 40, limit=200)[0]
        assert math.sqrt(2 / math.pi) * val / k == pytest.approx(float(W.radial_fourier(k * k)), rel=1e-10)


def test_delta_has_no_pointwise_value():
    with pytest.raises(UnsupportedEvaluation):
        eval_potential(PotentialSpec("delta"), [0.0, 0.0, 0.0])
    with pytest.raises(ModelError):
        require_smooth_W(PotentialSpec("delta"))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5), st.lists(st.floats(-4, 4), min_size=3, max_size=3))
def test_linear_in_amplitude_and_even(amp, scale, k):
    a = PotentialSpec(amplitude=amp)
    b = PotentialSpec(amplitude=amp * scale)
    k = np.array(k)
    assert potential_fourier(b, k) == pytest.approx(scale * potential_fourier(a, k), rel=1e-13, abs=1e-300)
    assert potential_fourier(a, k) == potential_fourier(a, -k)
    assert eval_potential(b, k) == pytest.approx(scale * eval_potential(a, k), rel=1e-13, abs=1e-300)


def test_grid_basics():
    g = FourierGrid(16, 8.0)
    assert g.dx == 0.5 and g.k_max == pytest.approx(2 * math.pi)
    assert g.x[g.n // 2] == 0.0
    assert g.half_weights.sum() * g.n * g.n == g.n**3
    assert np.allclose(g.wrap([4.0, -4.0, 12.5]), [-4.0, -4.0, -3.5])
    with pytest.raises(ModelError):
        FourierGrid(12, 1.0)
    with pytest.raises(ModelError):
        FourierGrid(16, 0.0)


def test_phases_match_direct_exponential():
    g = FourierGrid(8, 4.0)
    X = np.array([0.3, -1.1, 0.7])
    px, py, pz = g.phases_half(X, sign=-1)
    full = px[:, None, None] * py[None, :, None] * pz[None, None, :]
    k = g.k
    direct = np.exp(-1j * (k[:, None, None] * X[0] + k[None, :, None] * X[1] + g.k_half[None, None, :] * X[2]))
    assert np.allclose(full, direct, atol=1e-14)
