import math

import numpy as np
import pytest

from tracerbec.dynamics import (DEFAULT_SPONGE_STRENGTH, Propagator, RunConfig, SimState, SpongeConfig,
                                apply_sponge, evolve, initial_state, sponge_calibration, step, total_energy)
from tracerbec.errors import ConfigError, PreconditionError, StepError
from tracerbec.model import FourierGrid, ModelParams, PotentialSpec
from tracerbec.spectral import ComplexField
from tracerbec.statics import static_profile

G = FourierGrid(32, 16.0)
GAUSS = PotentialSpec()
B = ModelParams()
E4 = ModelParams(kappa=4.0, model_tag="E")


def _static_state(params, X=(0.3, -0.2, 0.1), sponge=SpongeConfig()):
    beta = static_profile(params, GAUSS, GAUSS, X, G)
    return SimState(0.0, X, (0.0, 0.0, 0.0), beta, params, GAUSS, GAUSS, sponge)


def _generic_state(params, grid=G):
    X, Y, Z = grid.mesh()
    beta = 0.5 * static_profile(params, GAUSS, GAUSS, (0.5, 0, 0), grid).values
    beta = beta + 0.3 * np.exp(-((X - 1) ** 2 + Y**2 + Z**2) / 4) * np.exp(0.7j * X)
    return SimState(0.0, (0.0, 0.0, 0.0), (1.0, 0.5, 0.0), ComplexField(grid, beta), params, GAUSS, GAUSS)


@pytest.mark.parametrize("params", [B, E4])
def test_static_state_is_stationary(params):
    prop = Propagator(_static_state(params))
    a0 = prop.a.copy()
    E0 = prop.total_energy()
    for _ in range(100):
        prop.step(0.01)
    assert np.linalg.norm(prop.P) < 1e-9
    # for kappa = 0 the imaginary zero mode drifts uniformly (a global phase); it
    # decouples from everything else
    da, db = prop.a - a0, prop.b.copy()
    da[0, 0, 0] = db[0, 0, 0] = 0
    assert np.max(np.abs(da)) < 1e-9
    assert np.max(np.abs(db)) < 1e-9
    assert prop.total_energy() == pytest.approx(E0, abs=1e-9)


def test_free_particle_energy():
    st = SimState(0.0, (0, 0, 0), (0.3, 0.4, 0.0), ComplexField.zeros(G), B, GAUSS, GAUSS)
    assert total_energy(st) == pytest.approx(0.125, rel=1e-14)


def test_external_force_energy_term():
    p = ModelParams(force=(0.5, 0.0, 0.0))
    st = SimState(0.0, (2.0, 0, 0), (0.0, 0.0, 0.0), ComplexField.zeros(G), p, GAUSS, GAUSS)
    assert total_energy(st) == pytest.approx(-1.0)


def test_decoupled_particle_moves_uniformly():
    W0 = PotentialSpec(amplitude=0.0)
    st = SimState(0.0, (0, 0, 0), (0.3, -0.1, 0.2), ComplexField.zeros(G), B, W0, GAUSS)
    prop = Propagator(st)
    for _ in range(200):
        prop.step(0.05)
    assert np.allclose(prop.X, 10.0 * np.array([0.3, -0.1, 0.2]), rtol=0, atol=1e-12)
    assert np.array_equal(prop.P, [0.3, -0.1, 0.2])


@pytest.mark.parametrize("params", [B, E4])
def test_reversibility(params):
    prop = Propagator(_generic_state(params))
    a0, b0, X0, P0 = prop.a.copy(), prop.b.copy(), prop.X.copy(), prop.P.copy()
    for _ in range(50):
        prop.step(0.02)
    for _ in range(50):
        prop.step(-0.02)
    assert np.max(np.abs(prop.a - a0)) < 1e-10 * np.max(np.abs(a0))
    assert np.max(np.abs(prop.b - b0)) < 1e-10 * np.max(np.abs(b0))
    assert np.allclose(prop.X, X0, atol=1e-12) and np.allclose(prop.P, P0, atol=1e-12)


def _run(params, dt, T=1.0):
    prop = Propagator(_generic_state(params))
    for _ in range(int(round(T / dt))):
        prop.step(dt)
    return np.concatenate([prop.X, prop.P])


@pytest.mark.parametrize("params", [B, E4])
def test_second_order(params):
    r1, r2, r3 = (_run(params, dt) for dt in (0.04, 0.02, 0.01))
    ratio = np.linalg.norm(r1 - r2) / np.linalg.norm(r2 - r3)
    assert ratio == pytest.approx(4.0, rel=0.2)


@pytest.mark.parametrize("params", [B, E4])
def test_energy_conservation_short(params):
    prop = Propagator(_generic_state(params))
    E0 = prop.total_energy()
    for _ in range(500):
        prop.step(0.002)
    assert abs(prop.total_energy() - E0) < 1e-6 * abs(E0)


def test_momentum_matches_midpoint_force():
    prop = Propagator(_generic_state(B))
    dt = 1e-3
    f0 = prop.field_force()[0]
    P0 = prop.P.copy()
    prop.step(dt)
    f1 = prop.field_force()[0]
    assert np.allclose((prop.P - P0) / dt, 0.5 * (f0 + f1), rtol=0, atol=1e-11)


def test_drift_bound():
    st = SimState(0.0, (0, 0, 0), (10.0, 0, 0), ComplexField.zeros(G), B, GAUSS, GAUSS)
    with pytest.raises(StepError):
        step(st, 0.1)


def test_step_wrapper_matches_propagator():
    st = _generic_state(E4)
    s1 = step(step(st, 0.01), 0.01)
    prop = Propagator(st)
    prop.step(0.01)
    prop.step(0.01)
    assert np.allclose(s1.beta.values, prop.beta().values, atol=1e-14)
    assert np.allclose(s1.P, prop.P, atol=1e-15)


def test_sponge_leaves_static_cloud():
    sp = SpongeConfig(0.15 * G.L, 5.0, 1)
    st = _static_state(E4, sponge=sp)
    out = apply_sponge(st, 0.1)
    assert np.max(np.abs(out.beta.values - st.beta.values)) < 1e-12


def test_sponge_width_zero_is_identity():
    st = _generic_state(B)
    st.sponge = SpongeConfig(0.0, 5.0)
    out = apply_sponge(st, 0.1)
    assert out is st


def test_sponge_damps_deviation_in_shell_only():
    sp = SpongeConfig(0.15 * G.L, 5.0, 1)
    st = SimState(0.0, (0, 0, 0), (0, 0, 0), ComplexField(G, np.ones((32,) * 3)), B, PotentialSpec(amplitude=0.0),
                  GAUSS, sp)
    out = apply_sponge(st, 0.2).beta.values.real
    c = G.n // 2
    assert out[c, c, c] == pytest.approx(1.0, abs=1e-12)
    assert out[0, 0, 0] < math.exp(-2.9)


def test_energy_refused_with_sponge():
    st = _generic_state(B)
    st.sponge = SpongeConfig(2.0, 1.0)
    with pytest.raises(PreconditionError):
        total_energy(st)


def test_sponge_overlap_rejected():
    cfg = RunConfig(grid=G, sponge=SpongeConfig(7.0, 1.0), r_obs=2.0)
    with pytest.raises(ConfigError):
        evolve(cfg)


def test_evolve_static_start():
    cfg = RunConfig(grid=G, t_max=2.0, dt=0.02, beta0="static", X0=(0.2, 0, 0), params=E4)
    tr = evolve(cfg)
    assert np.all(np.diff(tr.t) > 0)
    assert np.max(tr.speed) < 1e-8
    assert np.all(np.isfinite(tr.energy))
    assert np.max(tr.ball_dev) < 1e-8


def test_evolve_records_and_snapshots():
    cfg = RunConfig(grid=G, t_max=0.5, dt=0.05, sample_every=2, snapshot_every=5, P0=(0.1, 0, 0))
    tr = evolve(cfg)
    assert len(tr.t) == 6 and tr.t[-1] == pytest.approx(0.5)
    assert len(tr.snapshots) == 2
    assert initial_state(cfg).beta.values.sum() == 0


@pytest.mark.slow
def test_sponge_calibration_default_strength():
    g = FourierGrid(128, 64.0)
    sp = SpongeConfig(0.15 * g.L, DEFAULT_SPONGE_STRENGTH, 5)
    for k0 in (2.0, 3.0):
        assert sponge_calibration(g, sp, k0=k0) >= 100.0
