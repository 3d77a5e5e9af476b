import numpy as np
import pytest

from nmunravel import streams
from nmunravel.bath import BathSpec, alpha, constant_schedule, uniform_grid
from nmunravel.engine import RunConfig, run_ensemble
from nmunravel.errors import ConfigurationError, TrajectoryOverflowError
from nmunravel.linalg import NAMED_STATES, SIGMA_MINUS
from nmunravel.master import closed_form_undriven
from nmunravel.qsd import (NoisePath, integrate_qsd_trajectory, ou_coefficients, ou_initial, ou_update,
                           qsd_rhs, sample_ou_path)
from nmunravel.system import drift_matrix, two_level_atom

N_PATHS = 100_000


@pytest.fixture(scope="module")
def ou_paths(fig2_bath):
    """1e5 exact OU paths on a 0.05 grid out to t = 3; rows are times."""
    dt = 0.05
    idx = np.arange(N_PATHS, dtype=np.uint64)
    decay, var = ou_coefficients(fig2_bath, dt)
    z = ou_initial(fig2_bath, streams.normals(21, 0, idx, streams.TAG_OU, 2))
    out = [z]
    for j in range(1, 61):
        z = ou_update(z, decay, var, streams.normals(21, j, idx, streams.TAG_OU, 2))
        out.append(z)
    return dt, np.array(out)


def test_stationary_variance(ou_paths):
    _, z = ou_paths
    for j in (0, 20, 60):
        assert np.mean(np.abs(z[j]) ** 2) == pytest.approx(0.4, rel=0.02)


@pytest.mark.parametrize("lag", [0.0, 1.0, 2.0])
def test_autocovariance_matches_alpha(ou_paths, fig2_bath, lag):
    dt, z = ou_paths
    k = int(round(lag / dt))
    s = 10
    prod = z[s + k] * z[s].conj()
    se = np.sqrt(prod.real.var() + prod.imag.var()) / np.sqrt(N_PATHS)
    assert abs(prod.mean() - alpha(fig2_bath, lag)) < 4 * se


def test_circularity(ou_paths):
    _, z = ou_paths
    prod = z[30] * z[10]
    se = np.sqrt(prod.real.var() + prod.imag.var()) / np.sqrt(N_PATHS)
    assert abs(prod.mean()) < 4 * se


def test_path_sampler_uses_stream_positions(fig2_bath):
    grid = uniform_grid(0.1, 0.01)
    path = sample_ou_path(fig2_bath, grid, streams.TrajectoryStream(3, 7, streams.TAG_OU))
    decay, var = ou_coefficients(fig2_bath, 0.01)
    z0 = ou_initial(fig2_bath, streams.normals(3, 0, [7], streams.TAG_OU, 2))[0]
    z1 = ou_update(z0, decay, var, streams.normals(3, 1, [7], streams.TAG_OU, 2))[0]
    np.testing.assert_allclose(path.values[:2], np.conj([z0, z1]))
    with pytest.raises(ConfigurationError):
        sample_ou_path(fig2_bath, np.array([0, 0.1, 0.3]), streams.TrajectoryStream(3, 7))


def test_rhs_cases():
    system = two_level_atom(2.0, 0.5)
    rates = constant_schedule(0.3 + 0.1j, uniform_grid(1.0, 0.1))
    zero = constant_schedule(0.0, uniform_grid(1.0, 0.1))
    psi = np.array([0.6, 0.8j])
    np.testing.assert_allclose(qsd_rhs(psi, 0.2, 0.0, system, zero), -1j * system.H(0.2) @ psi)
    ground = np.array([1.0, 0.0])
    np.testing.assert_allclose(qsd_rhs(ground, 0.2, 0.7 - 0.2j, system, rates),
                               qsd_rhs(ground, 0.2, 0.0, system, rates))
    np.testing.assert_allclose(qsd_rhs(psi, 0.2, 0.5j, system, rates),
                               drift_matrix(system, rates, 0.2) @ psi + 0.5j * SIGMA_MINUS @ psi)


def test_zero_noise_norm_follows_closed_form(fig2_bath, fig2_rates):
    system = two_level_atom(2.0, 0.0)
    grid = uniform_grid(5.0, 1e-3)
    psi0 = NAMED_STATES["plus"]
    noise = NoisePath(grid, np.zeros(grid.size, dtype=complex))
    path = integrate_qsd_trajectory(psi0, noise, system, fig2_rates, grid)
    rho = closed_form_undriven(np.outer(psi0, psi0.conj()), system, fig2_rates, grid)
    np.testing.assert_allclose(np.abs(path[:, 1]) ** 2, rho[:, 1, 1].real, atol=1e-6)
    np.testing.assert_allclose(path[:, 0] * path[:, 1].conj(), rho[:, 0, 1], atol=1e-6)


def test_single_trajectory_equals_engine(fig2_system, fig2_bath):
    cfg = RunConfig(method="qsd", system=fig2_system, bath=fig2_bath, initial_state=NAMED_STATES["plus"],
                    M=6, dt=1e-3, t_end=0.5, seed=77, keep_final_snapshot=True)
    series = run_ensemble(cfg)
    rates = cfg.rate_schedule()
    for i in (0, 4):
        noise = sample_ou_path(fig2_bath, cfg.grid, streams.TrajectoryStream(77, i, streams.TAG_OU))
        path = integrate_qsd_trajectory(cfg.initial_state, noise, fig2_system, rates, cfg.grid)
        np.testing.assert_allclose(path[-1], series.final_snapshot.states[i], rtol=1e-12)


def test_overflow_detected():
    system = two_level_atom(2.0, 0.0)
    grid = uniform_grid(1.0, 0.01)
    rates = constant_schedule(-30.0, grid)
    noise = NoisePath(grid, np.zeros(grid.size, dtype=complex))
    with pytest.raises(TrajectoryOverflowError):
        integrate_qsd_trajectory(np.array([0.0, 1.0]), noise, system, rates, grid)
    bad = NoisePath(grid[:-1], np.zeros(grid.size - 1, dtype=complex))
    with pytest.raises(ConfigurationError):
        integrate_qsd_trajectory(np.array([0.0, 1.0]), bad, system, rates, grid)


def test_bath_alpha0_feeds_ou():
    spec = BathSpec(g=2.0, Gamma=3.0, omega_c=1.0)
    decay, var = ou_coefficients(spec, 0.1)
    assert abs(decay) == pytest.approx(np.exp(-0.3))
    assert var == pytest.approx(3.0 * (1 - np.exp(-0.6)))
