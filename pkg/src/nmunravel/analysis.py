"""Comparisons between ensemble series: pointwise deviations and epsilon sweeps."""

from dataclasses import dataclass

import numpy as np

ABS_FLOOR = 0.02


@dataclass
class Comparison:
    name: str
    deviation: np.ndarray
    se: np.ndarray

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.deviation)))

    @property
    def z(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.deviation) / self.se
        # identical initial states give 0/0 at t = 0
        return np.where(self.se > 0, z, np.where(np.abs(self.deviation) < 1e-12, 0.0, np.inf))

    @property
    def max_z(self):
        """Largest ``|dev|/SE`` over points with a nonzero error estimate.

        Early on, before any trajectory has jumped or been kicked, all members
        coincide and the SE is exactly zero while the mean still differs from
        the reference; those points carry no statistical information.
        """
        ok = self.se > 0
        return float(np.max(self.z[ok])) if np.any(ok) else float(np.max(self.z))

    def within(self, n_se=3.0, floor=ABS_FLOOR):
        return np.abs(self.deviation) <= np.maximum(n_se * self.se, floor)


def compare(series, reference, name):
    """Deviation of ``series`` from ``reference`` with the combined standard error."""
    dev = series.value(name) - reference.value(name)
    se = np.hypot(series.se(name), reference.se(name))
    return Comparison(name, dev, se)


def integrated_deviation(series, reference, name):
    """Time-integrated ``|a - b|`` and a conservative standard error for it.

    The error integrates the pointwise combined SE, which bounds the spread of
    the integral when the pointwise errors are fully correlated in time.
    """
    c = compare(series, reference, name)
    t = series.times
    return float(np.trapezoid(np.abs(c.deviation), t)), float(np.trapezoid(c.se, t))


@dataclass
class SweepRow:
    epsilon: float
    integrated: float
    se: float


def convergence_table(jump_series_by_eps, diffusion_series, name):
    rows = []
    for eps in sorted(jump_series_by_eps, reverse=True):
        I, se = integrated_deviation(jump_series_by_eps[eps], diffusion_series, name)
        rows.append(SweepRow(eps, I, se))
    return rows


def decreases(rows, n_se=2.0):
    """For consecutive rows (decreasing epsilon): did the deviation drop by > n_se combined SE?"""
    out = []
    for a, b in zip(rows[:-1], rows[1:]):
        margin = n_se * np.hypot(a.se, b.se)
        out.append((a.epsilon, b.epsilon, a.integrated - b.integrated, margin,
                    a.integrated - b.integrated > margin))
    return out
