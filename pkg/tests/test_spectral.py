import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tracerbec.errors import SpaceMismatch, ZeroModeError
from tracerbec.model import FourierGrid, ModelParams, PotentialSpec
from tracerbec.spectral import (FOURIER, ComplexField, critical_speed, dispersion_omega, forward_transform,
                                inverse_laplacian, inverse_transform, irfft3, laplacian, phase_velocity,
                                rfft3, sound_speed)

G16 = FourierGrid(16, 8.0)
GAUSS = PotentialSpec()
E4 = ModelParams(kappa=4.0, model_tag="E")


def _random_field(grid, seed):
    rng = np.random.default_rng(seed)
    n = grid.n
    return ComplexField(grid, rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_and_parseval(seed):
    f = _random_field(G16, seed)
    fh = forward_transform(f)
    assert np.allclose(inverse_transform(fh).values, f.values, rtol=0, atol=1e-13)
    assert fh.norm() == pytest.approx(f.norm(), rel=1e-12)


def test_half_spectrum_matches_full():
    a = _random_field(G16, 7).values.real
    full = forward_transform(ComplexField(G16, a.astype(complex))).values
    half = rfft3(a, G16)
    assert np.allclose(half, full[:, :, : G16.n // 2 + 1], atol=1e-13)
    assert np.allclose(irfft3(half, G16), a, atol=1e-13)


def test_sampled_gaussian_matches_analytic():
    g = FourierGrid(64, 32.0)
    f = ComplexField(g, GAUSS.radial(g.r2_from()).astype(complex))
    err = np.max(np.abs(forward_transform(f).values - GAUSS.radial_fourier(g.k2)))
    assert err < 1e-8


def test_wrong_space_rejected():
    f = _random_field(G16, 1)
    with pytest.raises(SpaceMismatch):
        inverse_transform(f)
    with pytest.raises(SpaceMismatch):
        forward_transform(forward_transform(f))


def test_dispersion_values():
    assert dispersion_omega(ModelParams(), GAUSS, [0.0, 0.0, 0.0]) == 0.0
    # kappa = 0: Omega = k^2 / 2m
    assert dispersion_omega(ModelParams(m=2.0), GAUSS, [2.0, 0.0, 0.0]) == pytest.approx(1.0)
    k = 1.3
    eps = k * k / 2
    expect = math.sqrt(eps * (eps + math.exp(-k * k / 2)))
    assert dispersion_omega(E4, GAUSS, [0.0, k, 0.0]) == pytest.approx(expect, rel=1e-14)


def test_dispersion_monotone():
    ks = np.linspace(0.01, 10, 500)
    om = dispersion_omega(E4, GAUSS, np.stack([ks, 0 * ks, 0 * ks], -1))
    assert np.all(np.diff(om) > 0)


def test_sound_and_critical_speeds():
    assert sound_speed(ModelParams(), GAUSS) == 0.0
    assert critical_speed(ModelParams(), GAUSS) == 0.0
    assert sound_speed(E4, GAUSS) == pytest.approx(math.sqrt(0.5))
    assert sound_speed(E4, GAUSS, display_form=True) == pytest.approx(math.sqrt(2.0))
    delta = PotentialSpec("delta", amplitude=(2 * math.pi) ** 1.5)
    assert abs(critical_speed(E4, delta, k_max=30.0) - sound_speed(E4, delta)) < 1e-9


def test_gaussian_critical_speed_against_dense_scan():
    p = ModelParams(kappa=16.0, model_tag="E")
    ks = np.linspace(1e-6, 40.0, 1_000_001)
    oracle = phase_velocity(p, GAUSS, ks).min()
    vc = critical_speed(p, GAUSS, k_max=40.0)
    assert vc < sound_speed(p, GAUSS)
    assert vc == pytest.approx(oracle, abs=1e-6)
    assert vc <= oracle + 1e-12


def test_critical_speed_marginal_case():
    # kappa sigma^5 m = 4 is exactly where the phase velocity stops being minimal at k -> 0
    vc = critical_speed(E4, GAUSS, k_max=40.0)
    assert vc == pytest.approx(sound_speed(E4, GAUSS), abs=1e-9)


def test_laplacian_and_inverse():
    g = FourierGrid(32, 16.0)
    f = ComplexField(g, GAUSS.radial(g.r2_from()).astype(complex))
    lap = laplacian(f)
    x2 = g.r2_from()
    exact = (x2 - 3.0) * np.exp(-x2 / 2)
    assert np.max(np.abs(lap.values - exact)) < 1e-8
    back = inverse_laplacian(lap)
    assert back.meta["zero_mode_projected"]
    mean = np.mean(f.values)
    assert np.max(np.abs(back.values - (f.values - mean))) < 1e-8


def test_inverse_laplacian_zero_mode():
    g = FourierGrid(16, 8.0)
    f = ComplexField(g, np.ones((16,) * 3))
    with pytest.raises(ZeroModeError):
        inverse_laplacian(f)
    assert np.allclose(inverse_laplacian(f, project_zero_mode=True).values, 0.0)
    fh = forward_transform(f)
    assert inverse_laplacian(fh, project_zero_mode=True).space == FOURIER
