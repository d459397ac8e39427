"""Time every hot kernel under numba and under plain numpy, then one full compile per backend.

    python3 benchmarks/bench_kernels.py [--repeat N]

The end-to-end numbers come from child processes because the backend is
chosen once at import time via NAQC_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from naqc import _kernels as K
from naqc.topology import GridSpec


def inputs(n_qubits=50, seed=0):
    rng = np.random.default_rng(seed)
    grid = GridSpec(10, 10, 3.0)
    D, adj = grid.dist, grid.adjacency
    pos = rng.permutation(grid.n_sites)[:n_qubits].astype(np.int64)
    site_qubit = np.full(grid.n_sites, -1, dtype=np.int64)
    site_qubit[pos] = np.arange(n_qubits)
    W = rng.random((n_qubits, n_qubits))
    W = W + W.T
    m = 4 * n_qubits
    pu = rng.integers(0, n_qubits, m)
    pv = (pu + 1 + rng.integers(0, n_qubits - 1, m)) % n_qubits
    layers = rng.integers(0, 60, m)
    usable = rng.random(grid.n_sites) > 0.2
    busy = pos[:12].copy()
    radii = rng.random(12)
    targets = np.zeros(grid.n_sites, dtype=bool)
    targets[pos[-3:]] = True
    return {
        "pairwise_distances": (grid.coords,),
        "zone_conflict": (D, pos[12:15], 1.0, busy, radii, 12),
        "accumulate_weights": (n_qubits, pu, pv, layers, 0, 64),
        "swap_scores": (D, W, pos, site_qubit, 0, np.flatnonzero(adj[pos[0]]).astype(np.int64)),
        "components": (adj, usable),
        "bfs_path": (adj, usable, int(pos[0]), int(pos[1])),
        "bfs_nearest": (adj, usable, int(pos[0]), targets),
    }


COMPILE_SNIPPET = """
import time
from naqc import build_benchmark, compile_circuit
from naqc.topology import GridSpec
from naqc._kernels import BACKEND
c = build_benchmark('qft_adder', 40)
g = GridSpec(10, 10, 2.0)
compile_circuit(build_benchmark('bv', 6), g)  # warm-up (numba compile / cache load)
t = time.perf_counter()
compile_circuit(c, g)
print(BACKEND, time.perf_counter() - t)
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    print(f"{'kernel':<20} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, a in inputs().items():
        f_np, f_nb = getattr(K, name + "_np"), getattr(K, name + "_nb")
        f_nb(*a)  # jit
        t_np = min(timeit.repeat(lambda: f_np(*a), number=args.repeat, repeat=3)) / args.repeat
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:<20} {t_np * 1e6:>10.1f} {t_nb * 1e6:>10.1f} {t_np / t_nb:>7.1f}x")

    print("\nqft_adder(40) on 10x10, MID 2:")
    for flag in ("0", "1"):
        env = dict(os.environ, NAQC_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", COMPILE_SNIPPET], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):.3f} s")


if __name__ == "__main__":
    main()
