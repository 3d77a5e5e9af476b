"""Exponential bath correlation function and the complex rate ``F = gamma + iS``.

The rate follows from the closure ``d_t f(t,s) = [i omega + F(t)] f(t,s)``,
``f(s,s) = 1``, which for the exponential kernel reduces to the scalar
Riccati problem

    dF/dt = alpha(0) + (i omega - i omega_c - Gamma) F + F**2,   F(0) = 0.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BathSolverDivergence, ConfigurationError, OutputError, ScheduleRangeError

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class BathSpec:
    g: float
    Gamma: float
    omega_c: float

    def __post_init__(self):
        if not self.g > 0:
            raise ConfigurationError(f"bath.g must be positive, got {self.g}")
        if not self.Gamma > 0:
            raise ConfigurationError(f"bath.Gamma must be positive, got {self.Gamma}")

    @property
    def alpha0(self):
        return self.g * self.Gamma / 2.0


def alpha(spec, tau):
    """Bath correlation function ``g Gamma/2 exp(-i omega_c tau - Gamma |tau|)``."""
    tau = np.asarray(tau, dtype=float)
    out = spec.alpha0 * np.exp(-1j * spec.omega_c * tau - spec.Gamma * np.abs(tau))
    return complex(out) if out.ndim == 0 else out


def uniform_grid(t_end, dt):
    n = int(round(t_end / dt))
    if n < 1 or abs(n * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ConfigurationError(f"dt={dt} does not divide t_end={t_end}")
    return np.arange(n + 1) * dt


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigurationError("time grid needs at least two points")
    if grid[0] != 0.0:
        raise ConfigurationError("time grid must start at 0")
    steps = np.diff(grid)
    h = steps[0]
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * h:
        raise ConfigurationError("time grid must be uniform and increasing")
    return grid, float(h)


@dataclass(frozen=True)
class RateSchedule:
    """``F(t)`` tabulated on a uniform grid, with its split into ``gamma_pm``."""

    grid: np.ndarray
    F_values: np.ndarray
    gamma_plus: np.ndarray = field(default=None)
    gamma_minus: np.ndarray = field(default=None)

    @property
    def gamma(self):
        return self.F_values.real

    @property
    def s_values(self):
        return self.F_values.imag

    @property
    def dt(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def t_end(self):
        return float(self.grid[-1])

    def _locate(self, t):
        t = float(t)
        tol = 1e-9 * max(1.0, self.t_end)
        if t < -tol or t > self.t_end + tol:
            raise ScheduleRangeError(f"t={t} outside rate schedule [0, {self.t_end}]")
        x = min(max(t, 0.0), self.t_end) / self.dt
        j = min(int(np.floor(x)), self.grid.size - 2)
        return j, x - j

    def _interp(self, values, t):
        j, w = self._locate(t)
        if w < 1e-9:
            return values[j]
        if w > 1.0 - 1e-9:
            return values[j + 1]
        return (1.0 - w) * values[j] + w * values[j + 1]

    def F_at(self, t):
        return complex(self._interp(self.F_values, t))

    def rates_at(self, t):
        """``(gamma_plus, gamma_minus)`` at ``t``, linearly interpolated."""
        sched = self if self.gamma_plus is not None else split_rates(self)
        return float(sched._interp(sched.gamma_plus, t)), float(sched._interp(sched.gamma_minus, t))

    def negative_windows(self):
        """Contiguous ``(t_start, t_end)`` stretches of grid points with gamma < 0."""
        neg = self.gamma < 0
        windows = []
        j = 0
        while j < neg.size:
            if neg[j]:
                k = j
                while k + 1 < neg.size and neg[k + 1]:
                    k += 1
                windows.append((float(self.grid[j]), float(self.grid[k])))
                j = k + 1
            else:
                j += 1
        return windows

    def write_csv(self, path):
        sched = self if self.gamma_plus is not None else split_rates(self)
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "re_F", "im_F", "gamma_plus", "gamma_minus"])
                for row in zip(sched.grid, sched.F_values.real, sched.F_values.imag,
                               sched.gamma_plus, sched.gamma_minus):
                    w.writerow([format(float(v), ".17g") for v in row])
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc


def solve_rate_function(spec, omega, grid):
    """Integrate the Riccati equation for ``F`` with classical RK4 on ``grid``.

    Returns a split :class:`RateSchedule`. Raises :class:`BathSolverDivergence`
    if ``|F|`` exceeds ``1e6 * Gamma``.
    """
    grid, h = _check_grid(grid)
    a0 = spec.alpha0
    c = 1j * omega - 1j * spec.omega_c - spec.Gamma
    limit = DIVERGENCE_FACTOR * spec.Gamma

    def rhs(F):
        return a0 + c * F + F * F

    F = np.empty(grid.size, dtype=complex)
    F[0] = f = 0j
    for j in range(1, grid.size):
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * h * k1)
        k3 = rhs(f + 0.5 * h * k2)
        k4 = rhs(f + h * k3)
        f = f + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not abs(f) <= limit:
            raise BathSolverDivergence(f"|F| exceeded {limit:g} at t={grid[j]:g}")
        F[j] = f
    return split_rates(RateSchedule(grid=grid, F_values=F))


def split_rates(schedule):
    gamma = schedule.F_values.real
    return RateSchedule(
        grid=schedule.grid,
        F_values=schedule.F_values,
        gamma_plus=np.maximum(gamma, 0.0),
        gamma_minus=np.maximum(-gamma, 0.0),
    )


def constant_schedule(F, grid):
    """Time-independent rate, for Markovian checks and tests."""
    grid, _ = _check_grid(grid)
    return split_rates(RateSchedule(grid=grid, F_values=np.full(grid.size, complex(F))))
