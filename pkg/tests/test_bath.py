import numpy as np
import pytest

from nmunravel.bath import (BathSpec, RateSchedule, alpha, constant_schedule, solve_rate_function,
                            split_rates, uniform_grid)
from nmunravel.errors import BathSolverDivergence, ConfigurationError, ScheduleRangeError
from nmunravel.output import read_csv

from conftest import FIG2


def riccati_exact(a, c, t):
    """F' = a + c F + F^2, F(0) = 0, by linearizing F = -u'/u."""
    disc = np.sqrt(complex(c * c - 4 * a))
    l1, l2 = (c + disc) / 2, (c - disc) / 2
    e1, e2 = np.exp(l1 * t), np.exp(l2 * t)
    return -l1 * l2 * (e1 - e2) / (l2 * e1 - l1 * e2)


def coefficients(spec, omega):
    return spec.alpha0, 1j * omega - 1j * spec.omega_c - spec.Gamma


def test_alpha_values(fig2_bath):
    assert alpha(fig2_bath, 0.0) == pytest.approx(0.4)
    tau = np.array([0.5, -1.0])
    expect = 0.4 * np.exp(-1j * 5.5 * tau - np.abs(tau))
    np.testing.assert_allclose(alpha(fig2_bath, tau), expect)


def test_bath_validation():
    with pytest.raises(ConfigurationError):
        BathSpec(g=0.0, Gamma=1.0, omega_c=1.0)
    with pytest.raises(ConfigurationError):
        BathSpec(g=1.0, Gamma=-1.0, omega_c=1.0)


def test_riccati_matches_exact_solution(fig2_bath):
    grid = uniform_grid(5.0, 1e-3)
    sched = solve_rate_function(fig2_bath, FIG2["omega"], grid)
    exact = riccati_exact(*coefficients(fig2_bath, FIG2["omega"]), grid)
    assert np.max(np.abs(sched.F_values - exact)) < 1e-10


def test_weak_coupling_linear_limit():
    spec = BathSpec(g=1e-4, Gamma=1.0, omega_c=5.5)
    grid = uniform_grid(5.0, 1e-3)
    F = solve_rate_function(spec, 2.0, grid).F_values
    a, c = coefficients(spec, 2.0)
    lin = a * (np.exp(c * grid) - 1.0) / c
    assert np.max(np.abs(F - lin)) < 1e-6 * 1e-2


def test_step_halving(fig2_bath):
    coarse = solve_rate_function(fig2_bath, 2.0, uniform_grid(5.0, 1e-3)).F_values
    fine = solve_rate_function(fig2_bath, 2.0, uniform_grid(5.0, 5e-4)).F_values
    assert np.max(np.abs(coarse - fine[::2])) < 1e-8


def test_markov_limit_constant_rate():
    spec = BathSpec(g=0.8, Gamma=1e4, omega_c=5.5)
    sched = solve_rate_function(spec, 2.0, uniform_grid(2e-3, 1e-6))
    assert 2 * sched.gamma[-1] == pytest.approx(0.8, rel=1e-2)
    assert np.all(sched.gamma_minus == 0)


def test_fig2_negative_window(fig2_rates):
    windows = fig2_rates.negative_windows()
    assert len(windows) == 1
    a, b = windows[0]
    assert 0 < a < b < 2
    # frozen from an independent run of the closed-form Riccati solution
    assert a == pytest.approx(1.148, abs=2e-3)
    assert b == pytest.approx(1.414, abs=2e-3)
    assert fig2_rates.gamma.min() == pytest.approx(-0.0041, abs=2e-4)


def test_split_rates_identity(fig2_rates):
    np.testing.assert_allclose(fig2_rates.gamma_plus - fig2_rates.gamma_minus, fig2_rates.gamma)
    assert np.all(fig2_rates.gamma_plus >= 0) and np.all(fig2_rates.gamma_minus >= 0)
    assert np.all(fig2_rates.gamma_plus * fig2_rates.gamma_minus == 0)


def test_interpolation_and_range():
    grid = uniform_grid(1.0, 0.5)
    sched = split_rates(RateSchedule(grid=grid, F_values=np.array([0, 1 + 1j, -2], dtype=complex)))
    assert sched.F_at(0.25) == pytest.approx(0.5 + 0.5j)
    assert sched.F_at(1.0) == pytest.approx(-2)
    assert sched.rates_at(0.75) == pytest.approx((0.5, 1.0))
    with pytest.raises(ScheduleRangeError):
        sched.F_at(1.5)
    with pytest.raises(ScheduleRangeError):
        sched.F_at(-0.1)


def test_constant_schedule():
    sched = constant_schedule(-0.3 + 0.1j, uniform_grid(1.0, 0.1))
    assert sched.rates_at(0.33) == pytest.approx((0.0, 0.3))


def test_divergence_raises():
    # real alpha(0) far above (Gamma/2)^2 on resonance: tan-like blow-up
    spec = BathSpec(g=100.0, Gamma=1.0, omega_c=2.0)
    with pytest.raises(BathSolverDivergence):
        solve_rate_function(spec, 2.0, uniform_grid(5.0, 1e-3))


def test_bad_grids():
    spec = BathSpec(g=0.8, Gamma=1.0, omega_c=5.5)
    with pytest.raises(ConfigurationError):
        solve_rate_function(spec, 2.0, np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ConfigurationError):
        solve_rate_function(spec, 2.0, np.array([0.1, 0.2]))
    with pytest.raises(ConfigurationError):
        uniform_grid(1.0, 0.3)


def test_csv_roundtrip(tmp_path, fig2_rates):
    path = tmp_path / "rates.csv"
    fig2_rates.write_csv(path)
    cols = read_csv(path)
    assert list(cols) == ["t", "re_F", "im_F", "gamma_plus", "gamma_minus"]
    np.testing.assert_array_equal(cols["re_F"], fig2_rates.F_values.real)
    np.testing.assert_array_equal(cols["gamma_minus"], fig2_rates.gamma_minus)
