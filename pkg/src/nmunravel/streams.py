"""Counter-based random streams (Philox4x32-10).

Every draw is a pure function of ``(seed, trajectory, position, tag, block)``,
so a trajectory sees the same numbers whatever the ensemble size, the worker
count or the order in which trajectories are advanced. ``position`` is the
time step, ``tag`` separates the consumers (jump uniforms, diffusion
increments, OU noise).
"""

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

TAG_JUMP = 1
TAG_DIFFUSION = 2
TAG_OU = 3
TAG_TEST = 15


def philox4x32(counter, key, rounds=10):
    """Philox4x32 bijection applied row-wise to ``counter`` (shape ``(N, 4)``).

    ``key`` is a pair of 32-bit words. Returns ``uint32`` array ``(N, 4)``.
    """
    c = np.asarray(counter, dtype=np.uint64).reshape(-1, 4) & _MASK
    c0, c1, c2, c3 = (c[:, i].copy() for i in range(4))
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    for r in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _S32) ^ c1 ^ k0,
            p1 & _MASK,
            (p0 >> _S32) ^ c3 ^ k1,
            p0 & _MASK,
        )
        if r + 1 < rounds:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def _key(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed, position, trajectories, tag, n):
    """Doubles in ``[0, 1)`` with 53 random bits, shape ``(len(trajectories), n)``."""
    traj = np.atleast_1d(np.asarray(trajectories, dtype=np.uint64))
    nblocks = (n + 1) // 2
    ctr = np.empty((traj.size, nblocks, 4), dtype=np.uint64)
    ctr[:, :, 0] = (traj & _MASK)[:, None]
    ctr[:, :, 1] = np.uint64(int(position) & 0xFFFFFFFF)
    ctr[:, :, 2] = np.uint64((int(tag) << 16) | ((int(position) >> 32) & 0xFFFF))
    ctr[:, :, 3] = np.arange(nblocks, dtype=np.uint64)[None, :]
    words = philox4x32(ctr.reshape(-1, 4), _key(seed)).astype(np.uint64)
    hi = np.concatenate([words[:, 0:1], words[:, 2:3]], axis=1) >> np.uint64(5)
    lo = np.concatenate([words[:, 1:2], words[:, 3:4]], axis=1) >> np.uint64(6)
    u = (hi.astype(np.float64) * 67108864.0 + lo.astype(np.float64)) * (1.0 / 9007199254740992.0)
    return u.reshape(traj.size, 2 * nblocks)[:, :n]


def normals(seed, position, trajectories, tag, n):
    """Standard normals by Box-Muller, shape ``(len(trajectories), n)``."""
    m = n + (n % 2)
    u = uniforms(seed, position, trajectories, tag, m)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0::2]))
    theta = 2.0 * np.pi * u[:, 1::2]
    z = np.empty_like(u)
    z[:, 0::2] = r * np.cos(theta)
    z[:, 1::2] = r * np.sin(theta)
    return z[:, :n]


class TrajectoryStream:
    """Private stream of one trajectory; each call consumes one position.

    The ensemble engine draws position ``j`` at step ``j`` for every
    trajectory, so stepping a single trajectory by hand with a fresh stream
    reproduces the engine's draws exactly.
    """

    def __init__(self, seed, index, tag=TAG_TEST, position=0):
        self.seed = int(seed)
        self.index = int(index)
        self.tag = int(tag)
        self.position = int(position)

    def uniforms(self, n):
        out = uniforms(self.seed, self.position, [self.index], self.tag, n)[0]
        self.position += 1
        return out

    def normals(self, n):
        out = normals(self.seed, self.position, [self.index], self.tag, n)[0]
        self.position += 1
        return out

    def with_tag(self, tag):
        return TrajectoryStream(self.seed, self.index, tag, self.position)
