import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from naqc import _kernels as K
from naqc.topology import GridSpec

pytestmark = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def setup(seed, mid=2.0, n=20):
    rng = np.random.default_rng(seed)
    g = GridSpec(7, 7, mid)
    pos = rng.permutation(g.n_sites)[:n].astype(np.int64)
    site_qubit = np.full(g.n_sites, -1, dtype=np.int64)
    site_qubit[pos] = np.arange(n)
    usable = rng.random(g.n_sites) > 0.3
    return rng, g, pos, site_qubit, usable


seeds = st.integers(0, 2**31 - 1)


@given(seeds)
def test_pairwise_distances(seed):
    coords = np.random.default_rng(seed).integers(0, 10, (15, 2)).astype(np.float64)
    assert np.allclose(K.pairwise_distances_np(coords), K.pairwise_distances_nb(coords))


@given(seeds, st.integers(0, 12))
def test_zone_conflict(seed, n_busy):
    rng, g, pos, _, _ = setup(seed)
    busy = pos[:12].copy()
    radii = rng.random(12) * 2
    sites = pos[12:15].copy()
    r = float(rng.random() * 2)
    assert K.zone_conflict_np(g.dist, sites, r, busy, radii, n_busy) == K.zone_conflict_nb(g.dist, sites, r, busy, radii, n_busy)


@given(seeds, st.integers(0, 30))
def test_accumulate_weights(seed, current):
    rng = np.random.default_rng(seed)
    n, m = 12, 60
    pu = rng.integers(0, n, m)
    pv = (pu + 1 + rng.integers(0, n - 1, m)) % n
    layers = rng.integers(0, 40, m)
    a = K.accumulate_weights_np(n, pu, pv, layers, current, 64)
    b = K.accumulate_weights_nb(n, pu, pv, layers, current, 64)
    assert np.allclose(a, b, rtol=1e-12, atol=0)
    assert np.allclose(a, a.T)


@given(seeds)
def test_swap_scores(seed):
    rng, g, pos, site_qubit, _ = setup(seed)
    W = rng.random((len(pos), len(pos)))
    W = W + W.T
    cands = np.flatnonzero(g.adjacency[pos[0]]).astype(np.int64)
    assert np.allclose(K.swap_scores_np(g.dist, W, pos, site_qubit, 0, cands),
                       K.swap_scores_nb(g.dist, W, pos, site_qubit, 0, cands))


def _partition(labels):
    groups = {}
    for s, l in enumerate(labels):
        if l >= 0:
            groups.setdefault(int(l), set()).add(s)
    return sorted(map(sorted, groups.values()))


@given(seeds, st.sampled_from([1.0, 1.5, 2.0]))
def test_components(seed, mid):
    _, g, _, _, usable = setup(seed, mid)
    a = K.components_np(g.adjacency, usable)
    b = K.components_nb(g.adjacency, usable)
    assert (a < 0).tolist() == (~usable).tolist() == (b < 0).tolist()
    assert _partition(a) == _partition(b)


@given(seeds, st.sampled_from([1.0, 1.5, 2.0]))
def test_bfs_path(seed, mid):
    _, g, pos, _, usable = setup(seed, mid)
    src, dst = int(pos[0]), int(pos[1])
    usable[[src, dst]] = True
    a = K.bfs_path_np(g.adjacency, usable, src, dst)
    b = K.bfs_path_nb(g.adjacency, usable, src, dst)
    assert len(a) == len(b)
    if len(a):
        assert a[0] == src and a[-1] == dst
        assert all(g.adjacency[x, y] for x, y in zip(a, a[1:]))
        assert all(usable[a])


@given(seeds)
def test_bfs_nearest(seed):
    _, g, pos, _, usable = setup(seed, 1.0)
    targets = np.zeros(g.n_sites, dtype=bool)
    targets[pos[-3:]] = True
    src = int(pos[0])
    usable[src] = True
    a = K.bfs_nearest_np(g.adjacency, usable, src, targets)
    b = K.bfs_nearest_nb(g.adjacency, usable, src, targets)
    assert len(a) == len(b)
    if len(a):
        assert targets[a[-1]] and targets[b[-1]]


def test_env_flag_selects_numpy():
    code = "from naqc import _kernels as K; print(K.BACKEND, K.components is K.components_np)"
    for flag, expect in (("1", "numpy True"), ("0", "numba False")):
        out = subprocess.run([sys.executable, "-c", code], env=dict(os.environ, NAQC_DISABLE_NUMBA=flag),
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == expect


def test_compile_identical_across_backends():
    code = ("from naqc import build_benchmark, compile_circuit; from naqc.compiler import dumps_program;"
            "from naqc.topology import GridSpec;"
            "print(dumps_program(compile_circuit(build_benchmark('qaoa', 20), GridSpec(10, 10, 2))))")
    outs = [subprocess.run([sys.executable, "-c", code], env=dict(os.environ, NAQC_DISABLE_NUMBA=f),
                           capture_output=True, text=True, check=True).stdout for f in ("0", "1")]
    assert outs[0] == outs[1]
