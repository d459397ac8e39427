"""Hot numeric kernels, each with a pure-numpy twin.

Set ``NAQC_DISABLE_NUMBA=1`` to force the numpy versions (also used
automatically when numba is not importable). Both versions are always
importable as ``<name>_np`` / ``<name>_nb`` so tests and the benchmark can
compare them; the unsuffixed name is the active one.
"""

from __future__ import annotations

import os
from collections import deque

import numpy as np

_DISABLED = os.environ.get("NAQC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

EPS = 1e-9


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------- distances


def pairwise_distances_np(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def _pairwise_distances(coords):
    n = coords.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            dx = coords[i, 0] - coords[j, 0]
            dy = coords[i, 1] - coords[j, 1]
            out[i, j] = np.sqrt(dx * dx + dy * dy)
    return out


pairwise_distances_nb = _njit(_pairwise_distances)


# ---------------------------------------------------------------- zone conflict


def zone_conflict_np(D, sites, radius, busy_sites, busy_radii, n_busy):
    """True iff any operand circle overlaps a circle already placed in the timestep.

    ``busy_sites[:n_busy]`` holds every center placed so far and
    ``busy_radii`` their zone radii. Overlap is strict: tangent circles pass.
    """
    if n_busy == 0:
        return False
    d = D[np.ix_(sites, busy_sites[:n_busy])]
    return bool((d < radius + busy_radii[:n_busy] - EPS).any())


def _zone_conflict(D, sites, radius, busy_sites, busy_radii, n_busy):
    for i in range(sites.shape[0]):
        s = sites[i]
        for j in range(n_busy):
            if D[s, busy_sites[j]] < radius + busy_radii[j] - 1e-9:
                return True
    return False


zone_conflict_nb = _njit(_zone_conflict)


# ---------------------------------------------------------------- lookahead weights


def accumulate_weights_np(n, pair_u, pair_v, pair_layer, current_layer, window):
    """Symmetric matrix of ``sum exp(-(layer - current))`` per operand pair."""
    W = np.zeros((n, n))
    gap = pair_layer - current_layer
    sel = (gap >= 0) & (gap <= window)
    w = np.exp(-gap[sel].astype(np.float64))
    np.add.at(W, (pair_u[sel], pair_v[sel]), w)
    np.add.at(W, (pair_v[sel], pair_u[sel]), w)
    return W


def _accumulate_weights(n, pair_u, pair_v, pair_layer, current_layer, window):
    W = np.zeros((n, n))
    for i in range(pair_u.shape[0]):
        gap = pair_layer[i] - current_layer
        if gap < 0 or gap > window:
            continue
        w = np.exp(-float(gap))
        W[pair_u[i], pair_v[i]] += w
        W[pair_v[i], pair_u[i]] += w
    return W


accumulate_weights_nb = _njit(_accumulate_weights)


# ---------------------------------------------------------------- SWAP scoring


def swap_scores_np(D, W, pos, site_qubit, u, cands):
    """Gain of moving qubit ``u`` to each candidate site.

    Positive terms reward ``u`` getting closer to its weighted partners and
    the displaced occupant of ``h`` getting closer to its own partners by
    landing on ``u``'s old site. Terms between ``u`` and the displaced qubit
    are skipped: their separation is unchanged by the exchange.
    """
    delta = D[pos[u], pos][None, :] - D[cands][:, pos]  # d(phi(u), phi(v)) - d(h, phi(v))
    occ = site_qubit[cands]
    coef = np.repeat(W[u][None, :], cands.size, axis=0)
    has = occ >= 0
    coef[has] -= W[occ[has]]
    coef[:, u] = 0.0
    rows = np.flatnonzero(has)
    coef[rows, occ[rows]] = 0.0
    return (delta * coef).sum(axis=1)


def _swap_scores(D, W, pos, site_qubit, u, cands):
    n = pos.shape[0]
    pu = pos[u]
    out = np.zeros(cands.shape[0])
    for k in range(cands.shape[0]):
        h = cands[k]
        q = site_qubit[h]
        s = 0.0
        for v in range(n):
            if v == u or v == q:
                continue
            before = D[pu, pos[v]]
            after = D[h, pos[v]]
            s += (before - after) * W[u, v]
            if q >= 0:
                s += (after - before) * W[q, v]
        out[k] = s
    return out


swap_scores_nb = _njit(_swap_scores)


# ---------------------------------------------------------------- graph search


def components_np(adj: np.ndarray, usable: np.ndarray) -> np.ndarray:
    """Connected-component labels (-1 for unusable sites) by frontier expansion."""
    n = adj.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    a = adj & usable[None, :] & usable[:, None]
    label = 0
    for start in range(n):
        if not usable[start] or labels[start] >= 0:
            continue
        seen = np.zeros(n, dtype=bool)
        seen[start] = True
        frontier = seen.copy()
        while frontier.any():
            nxt = a[frontier].any(axis=0) & ~seen
            seen |= nxt
            frontier = nxt
        labels[seen] = label
        label += 1
    return labels


def _components(adj, usable):
    n = adj.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    label = 0
    for start in range(n):
        if not usable[start] or labels[start] >= 0:
            continue
        top = 0
        stack[top] = start
        top += 1
        labels[start] = label
        while top > 0:
            top -= 1
            v = stack[top]
            for w in range(n):
                if adj[v, w] and usable[w] and labels[w] < 0:
                    labels[w] = label
                    stack[top] = w
                    top += 1
        label += 1
    return labels


components_nb = _njit(_components)


def bfs_path_np(adj, passable, src, dst):
    """Shortest hop path ``src -> dst`` through ``passable`` sites (endpoints exempt).

    Ties resolve to the lowest site index. Returns an empty array if no path.
    """
    n = adj.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    parent[src] = src
    q = deque([src])
    while q:
        v = q.popleft()
        if v == dst:
            break
        for w in np.flatnonzero(adj[v]):
            if parent[w] < 0 and (passable[w] or w == dst):
                parent[w] = v
                q.append(w)
    if parent[dst] < 0:
        return np.empty(0, dtype=np.int64)
    path = [dst]
    while path[-1] != src:
        path.append(parent[path[-1]])
    return np.array(path[::-1], dtype=np.int64)


def _bfs_path(adj, passable, src, dst):
    n = adj.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    parent[src] = src
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    queue[tail] = src
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        if v == dst:
            break
        for w in range(n):
            if adj[v, w] and parent[w] < 0 and (passable[w] or w == dst):
                parent[w] = v
                queue[tail] = w
                tail += 1
    if parent[dst] < 0:
        return np.empty(0, dtype=np.int64)
    length = 1
    v = dst
    while v != src:
        v = parent[v]
        length += 1
    path = np.empty(length, dtype=np.int64)
    v = dst
    for i in range(length - 1, -1, -1):
        path[i] = v
        v = parent[v]
    return path


bfs_path_nb = _njit(_bfs_path)


def bfs_nearest_np(adj, passable, src, targets):
    """Shortest hop path from ``src`` to the nearest site with ``targets`` set.

    Targets need not be passable. Returns an empty array if none is reachable.
    """
    n = adj.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    parent[src] = src
    q = deque([src])
    hit = -1
    while q:
        v = q.popleft()
        if targets[v]:
            hit = v
            break
        for w in np.flatnonzero(adj[v]):
            if parent[w] < 0 and (passable[w] or targets[w]):
                parent[w] = v
                q.append(w)
    if hit < 0:
        return np.empty(0, dtype=np.int64)
    path = [hit]
    while path[-1] != src:
        path.append(parent[path[-1]])
    return np.array(path[::-1], dtype=np.int64)


def _bfs_nearest(adj, passable, src, targets):
    n = adj.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    parent[src] = src
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    queue[tail] = src
    tail += 1
    hit = -1
    while head < tail:
        v = queue[head]
        head += 1
        if targets[v]:
            hit = v
            break
        for w in range(n):
            if adj[v, w] and parent[w] < 0 and (passable[w] or targets[w]):
                parent[w] = v
                queue[tail] = w
                tail += 1
    if hit < 0:
        return np.empty(0, dtype=np.int64)
    length = 1
    v = hit
    while v != src:
        v = parent[v]
        length += 1
    path = np.empty(length, dtype=np.int64)
    v = hit
    for i in range(length - 1, -1, -1):
        path[i] = v
        v = parent[v]
    return path


bfs_nearest_nb = _njit(_bfs_nearest)


if USE_NUMBA:
    pairwise_distances = pairwise_distances_nb
    zone_conflict = zone_conflict_nb
    accumulate_weights = accumulate_weights_nb
    swap_scores = swap_scores_nb
    components = components_nb
    bfs_path = bfs_path_nb
    bfs_nearest = bfs_nearest_nb
else:
    pairwise_distances = pairwise_distances_np
    zone_conflict = zone_conflict_np
    accumulate_weights = accumulate_weights_np
    swap_scores = swap_scores_np
    components = components_np
    bfs_path = bfs_path_np
    bfs_nearest = bfs_nearest_np
