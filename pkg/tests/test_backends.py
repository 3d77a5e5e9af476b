import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nmunravel import kernels
from nmunravel.jumps import build_jump_family
from nmunravel.linalg import SIGMA_MINUS

from conftest import random_states

nb = kernels.numba_kernels
npk = kernels.numpy_kernels
pytestmark = pytest.mark.skipif(nb is None, reason="numba disabled")


@pytest.fixture
def ens(rng):
    return 0.5 * random_states(rng, 300) + np.array([0.6, 0.6])


def test_kde_kernels_agree(ens, rng):
    q = ens[:50] + 0.1 * random_states(rng, 50)
    np.testing.assert_allclose(nb.kde_logsum(q, ens, 5.0), npk.kde_logsum(q, ens, 5.0), rtol=1e-12)
    m1, l1 = nb.kde_mean_shift(q, ens, 5.0)
    m2, l2 = npk.kde_mean_shift(q, ens, 5.0)
    np.testing.assert_allclose(m1, m2, rtol=1e-11)
    np.testing.assert_allclose(l1, l2, rtol=1e-12)


def _run_jump(kern, ens, u):
    fam = build_jump_family(SIGMA_MINUS, 0.5, 2)
    N = ens.shape[0]
    out = np.empty_like(ens)
    ev = np.empty(N, dtype=np.int64)
    flags = np.empty(N, dtype=np.bool_)
    prop = np.array([[1, 0.01j], [0.02, 0.99]])
    radius = float(np.max(np.linalg.norm(ens, axis=1)))
    kern.jump_step(ens, ens, radius, np.arange(N), prop, fam.forward_ops, fam.inverse_ops,
                   np.full(4, 1e-3), np.full(4, 0.01), 6.0, u, out, ev, flags)
    return out, ev


def test_jump_kernels_agree(ens, rng):
    u = rng.uniform(size=ens.shape[0]) * 0.05
    o1, e1 = _run_jump(nb, ens, u)
    o2, e2 = _run_jump(npk, ens, u)
    np.testing.assert_array_equal(e1, e2)
    assert np.any(e1 >= 4) and np.any((e1 >= 0) & (e1 < 4))
    np.testing.assert_allclose(o1, o2, rtol=1e-13)


def test_diffusion_and_qsd_kernels_agree(ens, rng):
    N = ens.shape[0]
    prop = np.array([[1, 0.01j], [0.02, 0.99]])
    dz = 0.03 * (rng.normal(size=N) + 1j * rng.normal(size=N))
    outs = []
    for kern in (nb, npk):
        out = np.empty_like(ens)
        flags = np.empty(N, dtype=np.bool_)
        kern.diffusion_step(ens, ens, prop, SIGMA_MINUS, 0.02, 1e-3, 6.0, dz, out, flags)
        outs.append(out)
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-12)

    B = np.stack([prop, prop * 1.01, prop * 1.02])
    zs = rng.normal(size=(N, 3)) + 1j * rng.normal(size=(N, 3))
    outs = []
    for kern in (nb, npk):
        out = np.empty_like(ens)
        kern.qsd_step(ens, B, SIGMA_MINUS, zs, 1e-3, out)
        outs.append(out)
    np.testing.assert_allclose(outs[0], outs[1], rtol=1e-13)


SCRIPT = """
import json, sys
import numpy as np
from nmunravel import BACKEND
from nmunravel.scenario import load_scenario
from nmunravel.engine import run_ensemble
cfg = load_scenario("fig2").config.replace(M=150, t_end=1.5, method=sys.argv[1])
s = run_ensemble(cfg)
print(json.dumps({"backend": BACKEND, "x": s.value("sigma_x").tolist()}))
"""


@pytest.mark.parametrize("method", ["jump", "diffusion"])
def test_engine_backends_agree(method):
    res = {}
    for flag in ("0", "1"):
        env = dict(os.environ, NMUNRAVEL_DISABLE_NUMBA=flag)
        p = subprocess.run([sys.executable, "-c", SCRIPT, method], env=env, capture_output=True, text=True)
        assert p.returncode == 0, p.stderr
        data = json.loads(p.stdout.strip().splitlines()[-1])
        res[data["backend"]] = np.array(data["x"])
    assert set(res) == {"numba", "numpy"}
    np.testing.assert_allclose(res["numba"], res["numpy"], atol=1e-9)
