import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glyphforge import kernels
from glyphforge._backend import ENV_FLAG, HAVE_NUMBA

from geometry_oracles import brute_nearest

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
BACKENDS = sorted(kernels.IMPLEMENTATIONS)


@pytest.mark.parametrize("backend", BACKENDS)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 80), st.integers(1, 80))
@settings(max_examples=40)
def test_nearest_is_exact(backend, seed, n, m):
    rng = np.random.default_rng(seed)
    scale = 10.0 ** rng.integers(-3, 4)
    a, b = rng.normal(size=(n, 2)) * scale, rng.normal(size=(m, 2)) * scale
    dist, idx = kernels.IMPLEMENTATIONS[backend]["nearest"](a, b)
    ref_d, _ = brute_nearest(a, b)
    np.testing.assert_allclose(dist, ref_d, rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(np.hypot(*(a - b[idx]).T), ref_d, rtol=0, atol=1e-12 * scale)


@pytest.mark.parametrize("backend", BACKENDS)
def test_nearest_ties_take_lowest_index(backend):
    a = np.array([[0.0, 0.0]])
    b = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]])
    dist, idx = kernels.IMPLEMENTATIONS[backend]["nearest"](a, b)
    assert idx[0] == 0 and dist[0] == 1.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_nearest_clustered_and_duplicate_points(backend):
    rng = np.random.default_rng(9)
    b = np.concatenate([rng.normal(size=(300, 2)) * 1e-4, [[50.0, 50.0]], np.zeros((5, 2))])
    a = rng.normal(size=(100, 2)) * 20
    ref_d, _ = brute_nearest(a, b)
    dist, _ = kernels.IMPLEMENTATIONS[backend]["nearest"](a, b)
    np.testing.assert_allclose(dist, ref_d, atol=1e-12)


@needs_numba
@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30)
def test_backends_agree_on_nearest(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-1, 1, size=(200, 2)), rng.uniform(-1, 1, size=(200, 2))
    da, ia = kernels.nearest_numpy(a, b)
    db, ib = kernels.nearest_numba(a, b)
    np.testing.assert_allclose(da, db, atol=1e-15)
    # indices may differ only on exact distance ties
    assert np.all((ia == ib) | (np.abs(np.hypot(*(a - b[ia]).T) - np.hypot(*(a - b[ib]).T)) == 0))


@needs_numba
@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 40))
@settings(max_examples=30)
def test_backends_agree_on_crossings(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-5, 70, size=(n, 2))
    edges = np.concatenate([pts, np.roll(pts, -1, axis=0)], axis=1)
    np.testing.assert_array_equal(kernels.crossings_numpy(edges, 64, 64), kernels.crossings_numba(edges, 64, 64))


def test_crossings_closed_polygon_nets_zero_per_row():
    sq = np.array([[10.0, 10.0], [50.0, 10.0], [50.0, 50.0], [10.0, 50.0]])
    edges = np.concatenate([sq, np.roll(sq, -1, axis=0)], axis=1)
    acc = kernels.crossings_numpy(edges, 64, 64)
    assert acc.shape == (64, 65)
    assert np.all(acc.sum(axis=1) == 0)
    inside = np.cumsum(acc, axis=1)[:, :64] != 0
    assert inside.sum() == 40 * 40


def test_env_flag_selects_numpy():
    code = "from glyphforge import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, **{ENV_FLAG: "1"})
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_benchmark_script_runs():
    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    r = subprocess.run([sys.executable, str(script), "--repeat", "1"], capture_output=True, text=True, timeout=300)
    assert r.returncode == 0, r.stderr
    assert "nearest n=200" in r.stdout and "crossings size=192" in r.stdout
