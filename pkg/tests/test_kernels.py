import math
import os
import subprocess
import sys

import numpy as np
import pytest

from newhouse_lab import kernels
from newhouse_lab.skew import make_bc, make_user

nb = pytest.importorskip("numba") and kernels.get_backend("numba")
npk = kernels.get_backend("numpy")

FAMILIES = [make_bc(0.6, 5), make_bc(0.6, 5).with_flat(0.0506), make_user(1.7, 0.2, 0.3, 0.65)]


@pytest.fixture(params=range(len(FAMILIES)), ids=["bc", "flat", "user"])
def theta(request):
    return FAMILIES[request.param].theta


def points(rng, n):
    xs = rng.uniform(-1, 1, n)
    xs[xs == 0.0] = 0.25
    return xs, rng.uniform(0, 1, n)


def test_step(theta, rng):
    xs, ys = points(rng, 500)
    for x, y in zip(xs, ys):
        a = nb.step(theta, x, y, 0.0)
        b = npk.step(theta, x, y, 0.0)
        for u, v in zip(a, b):
            assert float(u) == pytest.approx(float(v), rel=1e-14, abs=1e-15)


def test_iterate_and_strip(theta, rng):
    xs, ys = points(rng, 400)
    s = np.zeros(xs.size)
    a = nb.iterate_batch(theta, xs, ys, s, 8)
    b = npk.iterate_batch(theta, xs, ys, s, 8)
    assert np.array_equal(a[2], b[2])
    assert np.allclose(a[0], b[0], atol=1e-9) and np.allclose(a[1], b[1], atol=1e-12)
    assert np.array_equal(nb.strip_entry(theta, xs, ys, s, 10, 0.05), npk.strip_entry(theta, xs, ys, s, 10, 0.05))


def test_orbit_trace(theta):
    a = nb.orbit_trace(theta, 0.37, 0.41, 0.0, 12)
    b = npk.orbit_trace(theta, 0.37, 0.41, 0.0, 12)
    assert a[-1] == b[-1]
    for u, v in zip(a[:-1], b[:-1]):
        assert np.allclose(u, v, rtol=1e-9, atol=1e-12)


def test_cone_batch(rng):
    th = FAMILIES[0].theta
    xs, ys = points(rng, 200)
    keep = np.abs(xs) > 0.2
    args = (th, xs[keep], ys[keep], 15, 2, 0.5, 0.3000000001, 0.9)
    a, b = nb.cone_batch(*args), npk.cone_batch(*args)
    for u, v in zip(a, b):
        assert np.allclose(u, v, rtol=1e-9, equal_nan=True)


def test_bridge_blockers(rng):
    for _ in range(50):
        keys = rng.integers(0, 6, int(rng.integers(1, 60))).astype(np.int64)
        l1, r1 = nb.bridge_blockers(keys)
        l2, r2 = npk.bridge_blockers(keys)
        assert np.array_equal(l1, l2) and np.array_equal(r1, r2)
        for i, k in enumerate(keys):
            left = max([j for j in range(i) if keys[j] >= k], default=-1)
            right = min([j for j in range(i + 1, keys.size) if keys[j] >= k], default=keys.size)
            assert l1[i] == left and r1[i] == right


def test_pliss_margins(rng):
    la = rng.normal(-0.1, 0.5, 80)
    assert np.allclose(nb.pliss_margins(la, math.log(0.8)), npk.pliss_margins(la, math.log(0.8)), atol=1e-12)


def test_range_sums(rng):
    vals = rng.random(1000) * 10.0 ** rng.integers(-12, 0, 1000)
    starts = rng.integers(0, 1000, 300).astype(np.int64)
    stops = np.minimum(starts + rng.integers(0, 400, 300), 1000).astype(np.int64)
    a = nb.range_sums(vals, starts, stops)
    b = npk.range_sums(vals, starts, stops)
    assert np.array_equal(a, b)
    ref = np.array([math.fsum(vals[s:e]) for s, e in zip(starts, stops)])
    assert np.allclose(a, ref, rtol=1e-14, atol=0)


@pytest.mark.parametrize("env,expect", [({"NEWHOUSE_LAB_BACKEND": "numpy"}, "numpy"),
                                        ({"NEWHOUSE_LAB_DISABLE_NUMBA": "1"}, "numpy"),
                                        ({"NEWHOUSE_LAB_BACKEND": "numba"}, "numba")])
def test_env_selects_backend(env, expect):
    e = dict(os.environ)
    e.pop("NEWHOUSE_LAB_BACKEND", None)
    e.pop("NEWHOUSE_LAB_DISABLE_NUMBA", None)
    e.update(env)
    out = subprocess.run([sys.executable, "-c", "from newhouse_lab import kernels; print(kernels.BACKEND)"],
                         env=e, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expect


def test_numpy_backend_end_to_end():
    code = ("from newhouse_lab.cantor import kt_system, refine, thickness;"
            "print(repr(thickness(refine(kt_system(0.5), 10)).tau))")
    e = dict(os.environ, NEWHOUSE_LAB_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=e, capture_output=True, text=True, check=True)
    assert abs(float(out.stdout) - 0.5) <= 1e-12
