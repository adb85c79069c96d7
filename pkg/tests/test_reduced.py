import math

import numpy as np
import pytest

from tracerbec.errors import PreconditionError
from tracerbec.model import ModelParams, PotentialSpec
from tracerbec.reduced import (decade_integrals, fit_decay_exponent, integrate_reduced, japanese_bracket,
                               radiated_norm_proxy, reduced_rhs, trailing_envelope, upper_envelope,
                               window_maxima)
from tracerbec.twave import analytic_friction_constant, friction_force_closed

B = ModelParams()
GAUSS = PotentialSpec()
C = analytic_friction_constant(B)


def test_rhs_basics():
    assert np.all(reduced_rhs(B, GAUSS, C, np.zeros(3)) == 0)
    v = np.array([0.2, -0.1, 0.4])
    assert np.allclose(reduced_rhs(B, GAUSS, C, v), -reduced_rhs(B, GAUSS, C, -v), atol=1e-16)
    heavy = ModelParams(M=2.0)
    assert np.allclose(reduced_rhs(heavy, GAUSS, C, v), 0.5 * friction_force_closed(heavy, GAUSS, v, C))


def test_fit_exact_power_laws():
    t = np.linspace(0, 50, 200)
    assert fit_decay_exponent(t, 1 / japanese_bracket(t), (0, 50))[0] == pytest.approx(-1.0, abs=1e-6)
    assert fit_decay_exponent(t, 3 * japanese_bracket(t) ** -1.2, (0, 50))[0] == pytest.approx(-1.2, abs=1e-6)


def test_fit_preconditions():
    t = np.linspace(1, 10, 50)
    with pytest.raises(PreconditionError):
        fit_decay_exponent(t, -t, (1, 10))
    with pytest.raises(PreconditionError):
        fit_decay_exponent(t, t, (1, 1.5))


def test_reduced_decay_and_collinearity():
    sol = integrate_reduced(B, GAUSS, C, (0.6, 0.8, 0.0), 1e4)
    speed = sol.speed
    assert np.all(np.diff(speed) < 0)
    vhat = sol.v / speed[:, None]
    assert np.max(np.abs(vhat @ np.array([0.6, 0.8, 0.0]) - 1.0)) < 1e-12
    slope, _ = fit_decay_exponent(sol.t, speed, (1e2, 1e4))
    assert slope == pytest.approx(-1.0, abs=0.05)


def test_tolerance_self_consistency():
    a = integrate_reduced(B, GAUSS, C, (1.0, 0, 0), 1e3, rtol=1e-9).speed[-1]
    b = integrate_reduced(B, GAUSS, C, (1.0, 0, 0), 1e3, rtol=5e-10).speed[-1]
    assert abs(a - b) / b < 1e-8


def test_large_speed_cubic_law():
    # |v| >> 1: dv/dt ~ -c/v^2, so |v|^3 falls linearly
    sol = integrate_reduced(B, GAUSS, C, (10.0, 0, 0), 10.0, t_eval=np.linspace(0, 10, 21))
    d = np.diff(sol.speed**3)
    assert np.max(np.abs(d / d.mean() - 1)) < 0.05


def test_radiated_proxy_decades_tend_to_constant():
    sol = integrate_reduced(B, GAUSS, C, (1.0, 0, 0), 1e4, n_samples=4000)
    dec = decade_integrals(sol.t, radiated_norm_proxy(B, GAUSS, C, sol), 1.0)
    assert len(dec) == 4
    # each decade contributes ~ln 10: logarithmic divergence, ratios -> 1 not -> 0
    assert dec[-1] == pytest.approx(math.log(10), rel=0.01)
    assert dec[-1] / dec[-2] == pytest.approx(1.0, abs=0.02)


def test_integrate_preconditions():
    with pytest.raises(PreconditionError):
        integrate_reduced(B, GAUSS, C, (0, 0, 0), 1.0)


def test_envelopes():
    t = np.linspace(0.01, 100, 20001)
    y = np.cos(3 * t) / (1 + t)
    te, env = trailing_envelope(t, y, 10.0, ratio=2.0, n_points=30)
    assert fit_decay_exponent(te, env)[0] == pytest.approx(-1.0, abs=0.1)
    mids, mx = upper_envelope(t, y, 10)
    assert len(mids) == len(mx) and np.all(mx > 0)
    wm = window_maxima(t, y, 1.0, math.sqrt(10))
    assert np.all(np.diff(wm) < 0)
