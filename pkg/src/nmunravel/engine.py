"""Ensemble engine: runs M trajectories in lockstep and estimates observables.

Each step freezes the ensemble into a snapshot, builds the KDE context from
it (jump and diffusion methods only) and advances every trajectory against
that frozen snapshot. Random draws are a pure function of
``(seed, trajectory, step)``, and all reductions run over the full ensemble
in index order, so results do not depend on the worker count.
"""

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .bath import BathSpec, solve_rate_function, uniform_grid
from .diffusion import advance_diffusion, increment_difference
from .errors import ConfigurationError, DegenerateStateError, TrajectoryOverflowError
from .jumps import advance_jump, build_jump_family, channel_rates
from .kde import EnsembleSnapshot, KdeContext, bandwidth
from .linalg import as_state, projector
from .master import integrate_master
from .qsd import OVERFLOW_NORM, advance_qsd, base_matrices, ou_coefficients, ou_initial, ou_update
from .system import SystemSpec, rk4_propagator

log = logging.getLogger(__name__)

METHODS = ("jump", "diffusion", "qsd", "master")
UNRELIABLE_FLAG_FRACTION = 0.01


@dataclass
class RunConfig:
    method: str
    system: SystemSpec
    bath: BathSpec
    initial_state: np.ndarray
    observables: dict = field(default_factory=dict)
    M: int = 3000
    dt: float = 1e-3
    t_end: float = 5.0
    epsilon: float = 0.5
    m: int = 2
    seed: int = 0
    kde_bandwidth_override: float = None
    dump_trajectories: bool = False
    keep_final_snapshot: bool = False
    # Test hook: scales the OU noise of the qsd method (0 gives the noise-free ODE).
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        self.initial_state = as_state(self.initial_state)
        if self.initial_state.shape[0] != self.system.dim:
            raise ConfigurationError("initial_state dimension does not match the system")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigurationError("M must be a positive integer")
        self.M = int(self.M)
        if self.method in ("jump", "diffusion") and self.M < 2:
            raise ConfigurationError("jump and diffusion methods need M >= 2 for the KDE")
        if not self.dt > 0 or not self.t_end > 0:
            raise ConfigurationError("dt and t_end must be positive")
        uniform_grid(self.t_end, self.dt)
        if self.method == "jump" and not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive for the jump method")
        if self.kde_bandwidth_override is not None and not self.kde_bandwidth_override > 0:
            raise ConfigurationError("kde_bandwidth_override must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        self.observables = {str(k): np.asarray(v, dtype=complex) for k, v in self.observables.items()}
        for name, op in self.observables.items():
            if op.shape != (self.system.dim, self.system.dim):
                raise ConfigurationError(f"observable {name!r} has the wrong shape")

    def replace(self, **changes):
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return RunConfig(**kw)

    @property
    def grid(self):
        return uniform_grid(self.t_end, self.dt)

    def rate_schedule(self):
        """F(t) on a half-step grid so every RK4 stage lands on a node."""
        fine = uniform_grid(self.t_end, self.dt / 2.0)
        return solve_rate_function(self.bath, self.system.omega, fine)


@dataclass
class ObservableSeries:
    times: np.ndarray
    names: list
    estimate: np.ndarray
    standard_error: np.ndarray
    raw_estimate: np.ndarray
    raw_standard_error: np.ndarray
    trace: np.ndarray
    trace_se: np.ndarray
    flagged_fraction: np.ndarray
    method: str = ""
    final_snapshot: EnsembleSnapshot = None
    trajectories: np.ndarray = None

    @property
    def reliable(self):
        return float(np.mean(self.flagged_fraction)) <= UNRELIABLE_FLAG_FRACTION

    def value(self, name):
        return self.estimate[:, self.names.index(name)]

    def se(self, name):
        return self.standard_error[:, self.names.index(name)]


def estimate_density_matrix(snapshot):
    """Sample mean of ``|psi><psi|`` and its elementwise standard error."""
    states = snapshot.states if isinstance(snapshot, EnsembleSnapshot) else np.atleast_2d(snapshot)
    M = states.shape[0]
    outer = states[:, :, None] * states[:, None, :].conj()
    rho = outer.mean(axis=0)
    if M < 2:
        return rho, np.zeros(rho.shape)
    var = outer.real.var(axis=0, ddof=1) + outer.imag.var(axis=0, ddof=1)
    return rho, np.sqrt(var / M)


def observable_from_density(rho_hat, op):
    """Trace-ratio estimator ``Re tr(O rho)/tr(rho)``."""
    tr = np.trace(rho_hat).real
    if not tr > 0:
        raise DegenerateStateError("estimated density matrix has non-positive trace")
    return float(np.trace(np.asarray(op) @ rho_hat).real / tr)


class _Pool:
    """Splits trajectory ranges over threads; kernels release the GIL."""

    def __init__(self, workers):
        self.workers = max(1, int(workers))
        self._ex = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def __call__(self, work, n):
        if self._ex is None:
            work(0, n)
            return
        bounds = np.linspace(0, n, self.workers + 1).astype(int)
        futures = [self._ex.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        for f in futures:
            f.result()

    def close(self):
        if self._ex is not None:
            self._ex.shutdown()


class _Recorder:
    def __init__(self, n, M, names, ops, dump):
        k = len(names)
        self.M = M
        self.ops = ops
        self.est = np.zeros((n, k))
        self.se = np.zeros((n, k))
        self.raw = np.zeros((n, k))
        self.raw_se = np.zeros((n, k))
        self.trace = np.zeros(n)
        self.trace_se = np.zeros(n)
        self.flagged = np.zeros(n)
        self.traj = np.zeros((n, M, k)) if dump else None

    def record(self, j, psi, flags=None):
        M = self.M
        norms = np.einsum("na,na->n", psi.conj(), psi).real
        tr = norms.mean()
        self.trace[j] = tr
        ddof = 1 if M > 1 else 0
        root = np.sqrt(M)
        if M > 1:
            self.trace_se[j] = norms.std(ddof=ddof) / root
        for i, op in enumerate(self.ops):
            o = np.einsum("na,ab,nb->n", psi.conj(), op, psi).real
            R = o.mean() / tr
            self.est[j, i] = R
            self.raw[j, i] = o.mean()
            if M > 1:
                # delta-method error of the ratio of means
                self.se[j, i] = (o - R * norms).std(ddof=ddof) / (root * tr)
                self.raw_se[j, i] = o.std(ddof=ddof) / root
            if self.traj is not None:
                self.traj[j, :, i] = o / norms
        if flags is not None:
            self.flagged[j] = flags.mean()


def _check_overflow(step, psi):
    norms = np.einsum("na,na->n", psi.conj(), psi).real
    bad = ~(norms <= OVERFLOW_NORM ** 2)
    if np.any(bad):
        raise TrajectoryOverflowError(step, int(np.flatnonzero(bad)[0]))


def run_ensemble(config, workers=1, progress=False):
    """Run one scenario and return its :class:`ObservableSeries`."""
    grid = config.grid
    rates = config.rate_schedule()
    names = list(config.observables)
    ops = [config.observables[k] for k in names]
    n = grid.size
    psi0 = config.initial_state

    if config.method == "master":
        rho0 = projector(psi0) / np.vdot(psi0, psi0).real
        rhos = integrate_master(rho0, config.system, rates, grid)
        tr = np.einsum("nii->n", rhos).real
        est = np.stack([np.einsum("ij,nji->n", op, rhos).real / tr for op in ops], axis=1) \
            if ops else np.zeros((n, 0))
        zeros = np.zeros_like(est)
        return ObservableSeries(grid, names, est, zeros, est.copy(), zeros.copy(), tr,
                                np.zeros(n), np.zeros(n), method="master")

    M = config.M
    D = config.system.dim
    idx = np.arange(M, dtype=np.uint64)
    self_index = np.arange(M, dtype=np.int64)
    psi = np.tile(psi0, (M, 1))
    rec = _Recorder(n, M, names, ops, config.dump_trajectories)
    rec.record(0, psi)
    pool = _Pool(workers)
    sigma = config.kde_bandwidth_override or (bandwidth(M, D) if M >= 2 else 1.0)
    L = config.system.coupling
    family = build_jump_family(L, config.epsilon, config.m) if config.method == "jump" else None
    if config.method == "qsd":
        decay, var = ou_coefficients(config.bath, config.dt)
        z = ou_initial(config.bath, streams.normals(config.seed, 0, idx, streams.TAG_OU, 2),
                       config.noise_scale)
    report_every = max(1, (n - 1) // 10)

    try:
        for j in range(n - 1):
            t = grid[j]
            dt = grid[j + 1] - t
            flags = None
            if config.method == "jump":
                ctx = KdeContext(EnsembleSnapshot(psi), sigma)
                prop = rk4_propagator(config.system, rates, t, dt)
                p_plus, base = channel_rates(family, rates, t, dt)
                u = streams.uniforms(config.seed, j, idx, streams.TAG_JUMP, 1)[:, 0]
                psi, _, flags = advance_jump(psi, prop, p_plus, base, family, ctx, u, pool,
                                             anchors=self_index)
            elif config.method == "diffusion":
                gp, gm = rates.rates_at(t)
                ctx = KdeContext(EnsembleSnapshot(psi), sigma) if gm > 0 else None
                prop = rk4_propagator(config.system, rates, t, dt)
                dz = increment_difference(
                    gp, gm, dt, streams.normals(config.seed, j, idx, streams.TAG_DIFFUSION, 4))
                psi, flags = advance_diffusion(psi, prop, L, gm, dt, dz, ctx, pool)
            else:
                z_next = ou_update(z, decay, var,
                                   streams.normals(config.seed, j + 1, idx, streams.TAG_OU, 2),
                                   config.noise_scale)
                B = base_matrices(config.system, rates, t, dt)
                psi = advance_qsd(psi, B, L, z.conj(), z_next.conj(), dt, pool)
                z = z_next
            _check_overflow(j + 1, psi)
            rec.record(j + 1, psi, flags)
            if progress and (j + 1) % report_every == 0:
                print(f"step {j + 1}/{n - 1}", file=sys.stderr, flush=True)
    finally:
        pool.close()

    series = ObservableSeries(grid, names, rec.est, rec.se, rec.raw, rec.raw_se, rec.trace,
                              rec.trace_se, rec.flagged, method=config.method,
                              trajectories=rec.traj)
    if config.keep_final_snapshot:
        series.final_snapshot = EnsembleSnapshot(psi)
    if not series.reliable:
        log.warning("%.2f%% of trajectory steps were far from the ensemble; run marked unreliable",
                    100 * float(np.mean(series.flagged_fraction)))
    return series
