"""Lookahead placement, SWAP routing and restriction-zone scheduling.

The pipeline is ``compile_circuit``: optional Toffoli decomposition, ASAP
layering, :func:`initial_mapping`, then :func:`route_and_schedule`. The
result is a :class:`CompiledProgram` whose schedule can be checked
independently with :func:`verify`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .circuit import EMPTY, Circuit, Gate, LayerAssignment, asap_layers, predecessors
from .circuit import decompose_toffolis as _decompose
from .topology import EPS, GridSpec, HardwareState, max_pair_dist

log = logging.getLogger(__name__)

__all__ = [
    "Mapping",
    "WeightedInteractionGraph",
    "ScheduledGate",
    "Metrics",
    "CompiledProgram",
    "CapacityError",
    "RoutingDeadlockError",
    "SchedFormatError",
    "lookahead_weights",
    "initial_mapping",
    "route_and_schedule",
    "compile_circuit",
    "verify",
    "verify_report",
    "retime",
    "dumps_program",
    "loads_program",
]

#: Layers beyond this distance from the current one carry weight < e^-64 and are skipped.
LOOKAHEAD_WINDOW = 64

SWAP_LABEL = "SWAP"


class CapacityError(ValueError):
    """The program needs more qubits than the hardware has usable sites."""


class RoutingDeadlockError(RuntimeError):
    """The router could not make progress (disconnected hardware)."""


class SchedFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Mapping:
    """Program qubit -> site index (``forward[q]``), with the partial inverse."""

    forward: tuple[int, ...]

    def __post_init__(self):
        fwd = tuple(int(s) for s in self.forward)
        if len(set(fwd)) != len(fwd):
            raise ValueError("mapping is not injective")
        object.__setattr__(self, "forward", fwd)

    @cached_property
    def reverse(self) -> dict[int, int]:
        return {s: q for q, s in enumerate(self.forward)}

    def __len__(self) -> int:
        return len(self.forward)

    def site_of(self, q: int) -> int:
        return self.forward[q]

    def qubit_at(self, site: int) -> int | None:
        return self.reverse.get(site)

    def swapped(self, a: int, b: int) -> Mapping:
        fwd = list(self.forward)
        qa, qb = self.reverse.get(a), self.reverse.get(b)
        if qa is not None:
            fwd[qa] = b
        if qb is not None:
            fwd[qb] = a
        return Mapping(tuple(fwd))


@dataclass(frozen=True)
class WeightedInteractionGraph:
    weights: dict[tuple[int, int], float]

    def __getitem__(self, pair: tuple[int, int]) -> float:
        u, v = pair
        return self.weights.get((min(u, v), max(u, v)), 0.0)

    def __len__(self) -> int:
        return len(self.weights)

    def as_matrix(self, n: int) -> np.ndarray:
        W = np.zeros((n, n))
        for (u, v), w in self.weights.items():
            W[u, v] = W[v, u] = w
        return W


@dataclass(frozen=True)
class ScheduledGate:
    gate: Gate
    sites: tuple[int, ...]
    timestep: int

    @property
    def is_swap(self) -> bool:
        return self.gate.is_swap


@dataclass(frozen=True)
class Metrics:
    n1: int
    n2: int
    n3: int
    swap_count: int
    depth: int

    @property
    def gate_count(self) -> int:
        """Total gates with every SWAP expanded into three two-qubit gates."""
        return self.n1 + self.n2 + self.n3 + 3 * self.swap_count

    @property
    def n2_with_swaps(self) -> int:
        return self.n2 + 3 * self.swap_count


@dataclass(frozen=True)
class CompiledProgram:
    n_qubits: int
    grid: GridSpec
    schedule: tuple[ScheduledGate, ...]
    initial_mapping: Mapping
    final_mapping: Mapping
    lost: frozenset[int] = field(default_factory=frozenset)
    zones_enforced: bool = True
    circuit: Circuit | None = field(default=None, compare=False, repr=False)

    @cached_property
    def metrics(self) -> Metrics:
        counts = {1: 0, 2: 0, 3: 0}
        swaps = 0
        for sg in self.schedule:
            if sg.is_swap:
                swaps += 1
            else:
                counts[sg.gate.arity] += 1
        depth = max((sg.timestep for sg in self.schedule), default=-1) + 1
        return Metrics(counts[1], counts[2], counts[3], swaps, depth)

    @property
    def hardware(self) -> HardwareState:
        return HardwareState(self.grid, self.lost)

    def timesteps(self) -> list[list[ScheduledGate]]:
        steps: list[list[ScheduledGate]] = [[] for _ in range(self.metrics.depth)]
        for sg in self.schedule:
            steps[sg.timestep].append(sg)
        return steps

    @cached_property
    def used_sites(self) -> frozenset[int]:
        """Every site the program touches: initial placement plus all operand sites."""
        used = set(self.initial_mapping.forward)
        for sg in self.schedule:
            used.update(sg.sites)
        return frozenset(used)


# ---------------------------------------------------------------- lookahead


def lookahead_weights(c: Circuit, layers: LayerAssignment, current_layer: int) -> WeightedInteractionGraph:
    """Pairwise weights ``sum exp(-|l_c - l|)`` over gates at layers ``l >= l_c``.

    Every unordered operand pair of a multi-qubit gate receives the term.
    """
    if current_layer < 0:
        raise ValueError("current layer must be nonnegative")
    acc: dict[tuple[int, int], float] = {}
    for g, lvl in zip(c.gates, layers.layers):
        if lvl < current_layer or g.arity < 2:
            continue
        w = math.exp(-abs(current_layer - lvl))
        ops = g.operands
        for i in range(len(ops)):
            for j in range(i + 1, len(ops)):
                key = (min(ops[i], ops[j]), max(ops[i], ops[j]))
                acc[key] = acc.get(key, 0.0) + w
    return WeightedInteractionGraph(acc)


@dataclass
class _PairTable:
    """Flattened operand pairs of every multi-qubit gate, for fast weight sums."""

    gate: np.ndarray
    u: np.ndarray
    v: np.ndarray
    layer: np.ndarray

    @classmethod
    def build(cls, c: Circuit, layers: Sequence[int]) -> _PairTable:
        gi, us, vs, ls = [], [], [], []
        for i, g in enumerate(c.gates):
            ops = g.operands
            for a in range(len(ops)):
                for b in range(a + 1, len(ops)):
                    gi.append(i)
                    us.append(ops[a])
                    vs.append(ops[b])
                    ls.append(layers[i])
        as_arr = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
        return cls(as_arr(gi), as_arr(us), as_arr(vs), as_arr(ls))

    def matrix(self, n: int, current_layer: int, alive: np.ndarray | None = None) -> np.ndarray:
        if alive is None:
            u, v, lvl = self.u, self.v, self.layer
        else:
            keep = alive[self.gate]
            u, v, lvl = self.u[keep], self.v[keep], self.layer[keep]
        return K.accumulate_weights(n, u, v, lvl, current_layer, LOOKAHEAD_WINDOW)


# ---------------------------------------------------------------- placement


def _hardware(grid: GridSpec, hw: HardwareState | None) -> HardwareState:
    if hw is None:
        return HardwareState(grid)
    if hw.grid != grid:
        hw = HardwareState(grid, hw.lost)
    return hw


def _placement_region(grid: GridSpec, hw: HardwareState) -> np.ndarray:
    """Usable sites of the largest connected region (ties: the one nearest the center)."""
    labels = K.components(grid.adjacency, hw.usable)
    if labels.max() <= 0:
        return hw.usable.copy()
    sizes = np.bincount(labels[labels >= 0])
    best = np.flatnonzero(sizes == sizes.max())
    if best.size > 1:
        first = {int(labels[s]) for s in grid.central_order if labels[s] in best}
        rank = [int(labels[s]) for s in grid.central_order if labels[s] >= 0]
        best = [next(l for l in rank if l in first)]
    return labels == int(best[0])


def initial_mapping(c: Circuit, grid: GridSpec, hw: HardwareState | None = None) -> Mapping:
    """Greedy lookahead-weighted placement.

    The heaviest pair goes adjacent at the device center; every further qubit
    (heaviest total weight to the placed set first) takes the free site that
    minimises ``sum d(h, phi(v)) * w(u, v)`` over placed ``v``. Ties go to
    the site closest to the center, then the lowest site index.
    """
    hw = _hardware(grid, hw)
    n = c.n_qubits
    if n > hw.n_usable:
        raise CapacityError(f"program needs {n} qubits, hardware has {hw.n_usable} usable sites")
    if n == 0:
        return Mapping(())
    layers = asap_layers(c).layers
    W = _PairTable.build(c, layers).matrix(n, 0)
    D = grid.dist
    free = _placement_region(grid, hw)
    if n > int(free.sum()):
        raise CapacityError(f"program needs {n} qubits, largest connected region has {int(free.sum())} sites")
    center_rank = np.empty(grid.n_sites, dtype=np.int64)
    center_rank[grid.central_order] = np.arange(grid.n_sites)
    pos = np.full(n, -1, dtype=np.int64)

    def place(q: int, site: int) -> None:
        pos[q] = site
        free[site] = False

    def best_site(cost: np.ndarray) -> int:
        cand = np.flatnonzero(free)
        order = np.lexsort((center_rank[cand], np.round(cost[cand], 9)))
        return int(cand[order[0]])

    if W.max() <= 0:
        for q in range(n):
            place(q, best_site(np.zeros(grid.n_sites)))
        return Mapping(tuple(int(s) for s in pos))

    iu = np.triu_indices(n, 1)
    flat = W[iu]
    k = int(np.flatnonzero(flat == flat.max())[0])
    a, b = int(iu[0][k]), int(iu[1][k])
    place(a, best_site(np.zeros(grid.n_sites)))
    cand = np.flatnonzero(free)
    order = np.lexsort((cand, np.round(D[pos[a], cand], 9)))
    place(b, int(cand[order[0]]))

    while (pos < 0).any():
        mapped = np.flatnonzero(pos >= 0)
        unmapped = np.flatnonzero(pos < 0)
        pull = W[np.ix_(unmapped, mapped)].sum(axis=1)
        u = int(unmapped[np.flatnonzero(pull == pull.max())[0]])
        cost = D[:, pos[mapped]] @ W[u, mapped]
        place(u, best_site(cost))
    return Mapping(tuple(int(s) for s in pos))


# ---------------------------------------------------------------- routing


class _Router:
    def __init__(self, c: Circuit, grid: GridSpec, m0: Mapping, hw: HardwareState):
        self.c = c
        self.grid = grid
        self.hw = hw
        self.D = grid.dist
        self.mid = grid.mid
        self.div = grid.zone_divisor
        self.usable = hw.usable
        self.adj = grid.adjacency & hw.usable[None, :] & hw.usable[:, None]
        n = c.n_qubits
        self.n = n
        self.pos = np.array(m0.forward, dtype=np.int64)
        self.site_q = np.full(grid.n_sites, -1, dtype=np.int64)
        self.site_q[self.pos] = np.arange(n)
        la = asap_layers(c)
        self.layers = np.asarray(la.layers, dtype=np.int64)
        self.pairs = _PairTable.build(c, la.layers)
        preds = predecessors(c)
        self.n_preds = np.array([len(p) for p in preds], dtype=np.int64)
        self.succs: list[list[int]] = [[] for _ in c.gates]
        for i, p in enumerate(preds):
            for j in p:
                self.succs[j].append(i)
        self.alive = np.ones(len(c.gates), dtype=bool)
        # gates that fell back to path-following stay on it (greedy moves can loop in pockets)
        self.stuck_for = np.zeros(len(c.gates), dtype=np.int64)
        self.patience = 2 * (grid.width + grid.height)
        self.meet: dict[int, tuple[int, ...]] = {}
        self.pathing: set[int] = set()
        self.schedule: list[ScheduledGate] = []
        # per-timestep occupancy
        self.busy_sites = np.empty(4 * grid.n_sites, dtype=np.int64)
        self.busy_radii = np.empty(4 * grid.n_sites)
        self.n_busy = 0
        self.busy = np.zeros(grid.n_sites, dtype=bool)

    # -- timestep bookkeeping

    def _fits(self, sites: np.ndarray, radius: float) -> bool:
        if self.busy[sites].any():
            return False
        return not K.zone_conflict(self.D, sites, radius, self.busy_sites, self.busy_radii, self.n_busy)

    def _occupy(self, sites: np.ndarray, radius: float) -> None:
        k = sites.size
        self.busy_sites[self.n_busy : self.n_busy + k] = sites
        self.busy_radii[self.n_busy : self.n_busy + k] = radius
        self.n_busy += k
        self.busy[sites] = True

    def _reset_step(self) -> None:
        self.n_busy = 0
        self.busy[:] = False

    def _radius(self, sites: np.ndarray) -> float:
        return max_pair_dist(self.grid, sites) / self.div

    def _sites(self, g: int) -> np.ndarray:
        return self.pos[list(self.c.gates[g].operands)]

    def _apply_swap(self, a: int, b: int, t: int) -> None:
        qa, qb = int(self.site_q[a]), int(self.site_q[b])
        gate = Gate(SWAP_LABEL, (qa, qb), is_swap=True)
        self.schedule.append(ScheduledGate(gate, (a, b), t))
        if qa >= 0:
            self.pos[qa] = b
        if qb >= 0:
            self.pos[qb] = a
        self.site_q[a], self.site_q[b] = qb, qa

    # -- SWAP selection

    def _candidates(self, g: int, W: np.ndarray) -> list[tuple[float, int, int]]:
        """(score, site, qubit) for every legal single SWAP helping gate ``g``."""
        ops = self.c.gates[g].operands
        op_sites = self.pos[list(ops)]
        out = []
        for u in ops:
            pu = int(self.pos[u])
            if len(ops) == 2:
                target = op_sites[op_sites != pu]
                closer = self.D[:, target[0]] < self.D[pu, target[0]] - EPS
            else:
                cen = self.grid.coords[op_sites].mean(axis=0)
                dc = np.hypot(*(self.grid.coords - cen).T)
                closer = dc < dc[pu] - EPS
            mask = self.adj[pu] & closer
            mask[op_sites] = False
            cands = np.flatnonzero(mask)
            if cands.size == 0:
                continue
            scores = K.swap_scores(self.D, W, self.pos, self.site_q, u, cands)
            out.extend(zip(np.round(scores, 9).tolist(), cands.tolist(), [u] * cands.size))
        return out

    def _best_swap(self, g: int, W: np.ndarray) -> tuple[int, int] | None:
        cands = self._candidates(g, W)
        if not cands:
            return None
        score, h, u = min(cands, key=lambda x: (-x[0], x[1], x[2]))
        return int(self.pos[u]), h

    def _descent_swap(self, g: int) -> tuple[int, int] | None:
        """Strictly-closer SWAP that most reduces the gate's own spread.

        Two operands: the partner distance. Three: the summed squared
        pairwise distance (a move that lowers it is strictly closer to at
        least one partner). Both take finitely many values on a grid, so
        repeated calls terminate.
        """
        ops = list(self.c.gates[g].operands)
        sites = self.pos[ops]
        xy = self.grid.coords
        best = None
        for k, u in enumerate(ops):
            pu = int(sites[k])
            others = np.delete(sites, k)
            if len(ops) == 2:
                cost = self.D[:, others[0]]
                closer = cost < cost[pu] - EPS
            else:
                # lower summed squared distance to both partners means strictly closer to one of them
                cost = ((xy[:, None, :] - xy[others][None]) ** 2).sum(axis=(1, 2))
                closer = cost < cost[pu] - EPS
            mask = self.adj[pu] & closer
            mask[sites] = False
            for h in np.flatnonzero(mask):
                key = (round(float(cost[h]), 9), int(h), u)
                if best is None or key < best[0]:
                    best = (key, pu, int(h))
        return None if best is None else (best[1], best[2])

    def _fallback_swap(self, g: int) -> tuple[int, int] | None:
        """Progress move for a gate the greedy scorer failed to unblock.

        Strict descent while a strictly-closer site exists. Around holes it
        may not; the gate then switches for good to path-following: two-qubit
        gates walk one operand toward the other and three-qubit gates walk
        operands to a fixed meeting triangle. Each hop shortens a path whose
        endpoint stays put, so repeated calls terminate.
        """
        if g not in self.pathing:
            choice = self._descent_swap(g)
            if choice is not None:
                return choice
            self.pathing.add(g)
        ops = list(self.c.gates[g].operands)
        sites = [int(s) for s in self.pos[ops]]
        passable = self.usable.copy()
        passable[sites] = False
        mid = self.mid + EPS
        best = None
        if len(sites) == 3:
            return self._meeting_hop(g, sites)
        for i in range(len(sites)):
            for j in range(len(sites)):
                if i == j or self.D[sites[i], sites[j]] <= mid:
                    continue
                path = K.bfs_path(self.adj, passable, sites[i], sites[j])
                if path.size >= 3:
                    key = (path.size, sites[i], int(path[1]))
                    if best is None or key < best:
                        best = key
        if best is None:
            return None
        return best[1], best[2]

    def _hop_distances(self, src: int, passable: np.ndarray) -> np.ndarray:
        dist = np.full(self.grid.n_sites, np.inf)
        dist[src] = 0
        frontier = np.zeros(self.grid.n_sites, dtype=bool)
        frontier[src] = True
        seen = frontier.copy()
        k = 0
        while frontier.any():
            k += 1
            frontier = self.adj[frontier].any(axis=0) & passable & ~seen
            seen |= frontier
            dist[frontier] = k
        return dist

    def _meeting_triangle(self, sites: list[int]) -> tuple[int, ...] | None:
        """Target sites (per operand) pairwise within range, minimising total hops."""
        A = self.adj
        i, j = np.nonzero(np.triu(A))
        if i.size == 0:
            return None
        common = A[i] & A[j]
        p, k = np.nonzero(common)
        keep = k > j[p]
        tri = np.stack([i[p][keep], j[p][keep], k[keep]], axis=1)
        if tri.size == 0:
            return None
        dist = [self._hop_distances(s, self.usable) for s in sites]
        best, best_cost = None, np.inf
        for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            cost = sum(dist[o][tri[:, perm[o]]] for o in range(3))
            m = int(np.argmin(cost))
            if cost[m] < best_cost:
                best_cost = cost[m]
                best = tuple(int(tri[m, perm[o]]) for o in range(3))
        return best if np.isfinite(best_cost) else None

    def _meeting_hop(self, g: int, sites: list[int]) -> tuple[int, int] | None:
        """Slide operands onto the gate's meeting triangle, one hop per call.

        Operands are interchangeable here: take a shortest path from a stray
        operand to an uncovered target and advance the operand nearest the
        target end of that path, which shortens the total matching distance.
        """
        target = self.meet.get(g)
        if target is None:
            target = self._meeting_triangle(sites)
            if target is None:
                return None
            self.meet[g] = target
        on = set(sites)
        open_targets = [t for t in target if t not in on]
        strays = [s for s in sites if s not in target]
        best = None
        for t in open_targets:
            for s in strays:
                path = K.bfs_path(self.adj, self.usable, s, t)
                if path.size >= 2 and (best is None or path.size < best.size):
                    best = path
        if best is None:
            return None
        i = max(k for k in range(best.size - 1) if int(best[k]) in on)
        return int(best[i]), int(best[i + 1])

    # -- main loop

    def run(self) -> None:
        gates = self.c.gates
        frontier = sorted(int(i) for i in np.flatnonzero(self.n_preds == 0))
        left = len(gates)
        t = 0
        max_steps = 8 * (left + 1) * (self.patience + self.grid.n_sites)
        while left:
            if t > max_steps:
                raise RoutingDeadlockError("router exceeded its step budget")
            self._reset_step()
            done: list[int] = []
            stuck: list[int] = []
            placed = False
            for g in frontier:
                sites = self._sites(g)
                if sites.size > 1 and max_pair_dist(self.grid, sites) > self.mid + EPS:
                    stuck.append(g)
                    continue
                r = self._radius(sites)
                if self._fits(sites, r):
                    self._occupy(sites, r)
                    self.schedule.append(ScheduledGate(gates[g], tuple(int(s) for s in sites), t))
                    done.append(g)
                    placed = True
            if stuck:
                done_mask = self.alive.copy()
                done_mask[done] = False
                cur = int(self.layers[self.alive].min())
                W = self.pairs.matrix(self.n, cur, done_mask)
                self.stuck_for[stuck] += 1
                forced = [g for g in stuck if self.stuck_for[g] > self.patience]
                for g in forced[:1] or stuck:
                    if max_pair_dist(self.grid, self._sites(g)) <= self.mid + EPS:
                        continue  # an earlier SWAP this timestep already fixed it
                    choice = self._fallback_swap(g) if forced else self._best_swap(g, W)
                    if choice is None:
                        continue
                    sites = np.array(choice, dtype=np.int64)
                    r = self._radius(sites)
                    if self._fits(sites, r):
                        self._occupy(sites, r)
                        self._apply_swap(choice[0], choice[1], t)
                        placed = True
            if not placed:
                for g in stuck:
                    choice = self._fallback_swap(g)
                    if choice is not None:
                        self.stuck_for[g] = self.patience + 1
                        self._apply_swap(choice[0], choice[1], t)
                        placed = True
                        break
            if not placed:
                raise RoutingDeadlockError("no executable gate and no legal SWAP (disconnected hardware?)")
            for g in done:
                self.alive[g] = False
                left -= 1
            if done:
                ready = set(frontier) - set(done)
                for g in done:
                    for s in self.succs[g]:
                        self.n_preds[s] -= 1
                        if self.n_preds[s] == 0:
                            ready.add(s)
                frontier = sorted(ready)
            t += 1


def route_and_schedule(
    c: Circuit, grid: GridSpec, m0: Mapping, hw: HardwareState | None = None
) -> CompiledProgram:
    """Frontier-driven routing with zone-aware parallel scheduling.

    Each timestep first packs every ready gate whose operands are within
    the interaction distance and whose zone overlaps nothing already placed.
    Each remaining out-of-range gate then proposes its best SWAP (highest
    lookahead gain among sites strictly closer to its partner); the SWAP runs
    in this timestep only if it fits, otherwise it waits.
    """
    hw = _hardware(grid, hw)
    if len(m0) != c.n_qubits:
        raise ValueError("initial mapping does not cover every program qubit")
    if any(not hw.usable[s] for s in m0.forward):
        raise ValueError("initial mapping places a qubit on a lost site")
    r = _Router(c, grid, m0, hw)
    r.run()
    final = Mapping(tuple(int(s) for s in r.pos))
    return CompiledProgram(c.n_qubits, grid, tuple(r.schedule), m0, final, hw.lost, True, c)


def retime(schedule: Sequence[ScheduledGate], grid: GridSpec, zones: bool = True) -> tuple[ScheduledGate, ...]:
    """Re-assign timesteps ASAP keeping the per-site order of ``schedule``.

    With ``zones=False`` only site-disjointness limits parallelism.
    """
    last = np.full(grid.n_sites, -1, dtype=np.int64)
    steps: list[list[tuple[tuple[int, ...], float]]] = []
    out = []
    for sg in schedule:
        sites = sg.sites
        t = int(last[list(sites)].max()) + 1
        r = grid.zone_radius(max_pair_dist(grid, sites))
        if zones:
            while t < len(steps) and any(
                _zones_overlap(grid, sites, r, other, ro) for other, ro in steps[t]
            ):
                t += 1
        while len(steps) <= t:
            steps.append([])
        steps[t].append((sites, r))
        last[list(sites)] = t
        out.append(ScheduledGate(sg.gate, sg.sites, t))
    order = sorted(range(len(out)), key=lambda i: out[i].timestep)
    return tuple(out[i] for i in order)


def _zones_overlap(grid: GridSpec, a, ra, b, rb) -> bool:
    D = grid.dist
    if set(a) & set(b):
        return True
    return any(D[x, y] < ra + rb - EPS for x in a for y in b)


def compile_circuit(
    c: Circuit,
    grid: GridSpec,
    *,
    decompose_toffolis: bool = False,
    ideal_no_zones: bool = False,
    hardware: HardwareState | None = None,
) -> CompiledProgram:
    """Full pipeline. ``ideal_no_zones`` keeps the routing decisions of the
    zone-aware run and re-times them with site-disjointness only, so gate
    and SWAP counts are identical by construction."""
    hw = _hardware(grid, hardware)
    circ = c
    if decompose_toffolis:
        circ = _decompose(circ)
    elif circ.n_toffolis and grid.mid < math.sqrt(2) - EPS:
        log.info("MID %.3g cannot host a 3-qubit gate on a grid; decomposing Toffolis", grid.mid)
        circ = _decompose(circ)
    m0 = initial_mapping(circ, grid, hw)
    cp = route_and_schedule(circ, grid, m0, hw)
    if ideal_no_zones:
        cp = CompiledProgram(
            cp.n_qubits, grid, retime(cp.schedule, grid, zones=False),
            cp.initial_mapping, cp.final_mapping, cp.lost, False, circ,
        )
    return cp


compile = compile_circuit  # noqa: A001


# ---------------------------------------------------------------- verification


def verify_report(cp: CompiledProgram, original: Circuit, grid: GridSpec | None = None) -> list[str]:
    """List every violated property; empty means the program is valid."""
    grid = grid or cp.grid
    hw = HardwareState(grid, cp.lost)
    problems: list[str] = []
    if original.n_toffolis and not any(sg.gate.arity == 3 for sg in cp.schedule):
        original = _decompose(original)

    for t, step in enumerate(cp.timesteps()):
        seen: set[int] = set()
        for sg in step:
            if seen & set(sg.sites):
                problems.append(f"t={t}: site reused within timestep by {sg.gate}")
            seen.update(sg.sites)
        if cp.zones_enforced:
            radii = [grid.zone_radius(max_pair_dist(grid, sg.sites)) for sg in step]
            for i in range(len(step)):
                for j in range(i + 1, len(step)):
                    if _zones_overlap(grid, step[i].sites, radii[i], step[j].sites, radii[j]):
                        problems.append(f"t={t}: zones of {step[i].gate} and {step[j].gate} overlap")

    for sg in cp.schedule:
        if any(not hw.usable[s] for s in sg.sites):
            problems.append(f"{sg.gate} uses a lost site")
        if len(set(sg.sites)) != len(sg.sites):
            problems.append(f"{sg.gate} repeats a site")
        elif max_pair_dist(grid, sg.sites) > grid.mid + EPS:
            problems.append(f"t={sg.timestep}: {sg.gate} exceeds the interaction distance")

    # replay the mapping and match gates to the original per-qubit order
    site_q = dict(cp.initial_mapping.reverse)
    queues: list[list[int]] = [[] for _ in range(original.n_qubits)]
    for i, g in enumerate(original.gates):
        for q in g.operands:
            queues[q].append(i)
    heads = [0] * original.n_qubits
    executed = 0
    counts = {1: 0, 2: 0, 3: 0}
    swaps = 0
    for sg in cp.schedule:
        qubits = tuple(site_q.get(s, EMPTY) for s in sg.sites)
        if sg.is_swap:
            swaps += 1
            if qubits != sg.gate.operands:
                problems.append(f"SWAP at t={sg.timestep} records {sg.gate.operands}, sites hold {qubits}")
            a, b = sg.sites
            qa, qb = site_q.pop(a, None), site_q.pop(b, None)
            if qa is not None:
                site_q[b] = qa
            if qb is not None:
                site_q[a] = qb
            continue
        counts[sg.gate.arity] += 1
        if qubits != sg.gate.operands:
            problems.append(f"{sg.gate} at t={sg.timestep} runs on sites holding {qubits}")
            continue
        idx = {queues[q][heads[q]] if heads[q] < len(queues[q]) else -1 for q in qubits}
        if len(idx) != 1 or -1 in idx:
            problems.append(f"{sg.gate} at t={sg.timestep} is out of dependency order")
            continue
        i = idx.pop()
        if original.gates[i] != sg.gate:
            problems.append(f"{sg.gate} at t={sg.timestep} does not match original gate {original.gates[i]}")
        for q in qubits:
            heads[q] += 1
        executed += 1
    if executed != len(original.gates):
        problems.append(f"executed {executed} of {len(original.gates)} gates")
    final = {q: s for s, q in site_q.items()}
    if tuple(final.get(q, -1) for q in range(cp.n_qubits)) != cp.final_mapping.forward:
        problems.append("replayed SWAPs do not reproduce the final mapping")
    m = cp.metrics
    if (m.n1, m.n2, m.n3, m.swap_count) != (counts[1], counts[2], counts[3], swaps):
        problems.append("metrics disagree with a recount")
    if m.depth != len({sg.timestep for sg in cp.schedule}) and cp.schedule:
        problems.append("schedule has empty timesteps")
    return problems


def verify(cp: CompiledProgram, original: Circuit, grid: GridSpec | None = None) -> bool:
    return not verify_report(cp, original, grid)


# ---------------------------------------------------------------- text format

SCHED_HEADER = "naqc-sched v1"


def dumps_program(cp: CompiledProgram) -> str:
    g = cp.grid
    lines = [
        SCHED_HEADER,
        f"grid {g.width} {g.height} {g.mid!r} {g.zone_divisor!r}",
        f"qubits {cp.n_qubits}",
        "lost " + ",".join(str(s) for s in sorted(cp.lost)),
        f"zones {'on' if cp.zones_enforced else 'off'}",
    ]
    lines += [f"map {q} {s}" for q, s in enumerate(cp.initial_mapping.forward)]
    for sg in cp.schedule:
        tail = " swap" if sg.is_swap else ""
        lines.append(f"t={sg.timestep} {sg.gate.label} {','.join(map(str, sg.sites))}{tail}")
    return "\n".join(lines) + "\n"


def loads_program(text: str) -> CompiledProgram:
    """Parse ``naqc-sched v1``; gate operands are recovered by replaying SWAPs."""
    rows = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    it = iter(rows)

    def expect(prefix: str) -> tuple[int, list[str]]:
        try:
            lineno, line = next(it)
        except StopIteration:
            raise SchedFormatError(len(rows), f"missing '{prefix}' line") from None
        parts = line.split()
        if parts[0] != prefix:
            raise SchedFormatError(lineno, f"expected '{prefix}'")
        return lineno, parts[1:]

    try:
        lineno, line = next(it)
    except StopIteration:
        raise SchedFormatError(1, "empty file") from None
    if line != SCHED_HEADER:
        raise SchedFormatError(lineno, f"expected header {SCHED_HEADER!r}")
    try:
        lineno, p = expect("grid")
        grid = GridSpec(int(p[0]), int(p[1]), float(p[2]), float(p[3]))
        lineno, p = expect("qubits")
        n = int(p[0])
        lineno, p = expect("lost")
        lost = frozenset(int(s) for s in p[0].split(",")) if p else frozenset()
        lineno, p = expect("zones")
        zones = p[0] == "on"
        fwd = [-1] * n
        for _ in range(n):
            lineno, p = expect("map")
            fwd[int(p[0])] = int(p[1])
        m0 = Mapping(tuple(fwd))
        site_q = dict(m0.reverse)
        schedule = []
        for lineno, line in it:
            parts = line.split()
            if not parts[0].startswith("t=") or len(parts) not in (3, 4):
                raise SchedFormatError(lineno, "expected 't=<step> GATE s0[,s1[,s2]] [swap]'")
            t = int(parts[0][2:])
            sites = tuple(int(s) for s in parts[2].split(","))
            is_swap = len(parts) == 4
            if is_swap and parts[3] != "swap":
                raise SchedFormatError(lineno, f"unexpected trailing token {parts[3]!r}")
            qubits = tuple(site_q.get(s, EMPTY) for s in sites)
            schedule.append(ScheduledGate(Gate(parts[1], qubits, is_swap=is_swap), sites, t))
            if is_swap:
                a, b = sites
                qa, qb = site_q.pop(a, None), site_q.pop(b, None)
                if qa is not None:
                    site_q[b] = qa
                if qb is not None:
                    site_q[a] = qb
    except SchedFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise SchedFormatError(lineno, str(exc)) from None
    final = {q: s for s, q in site_q.items()}
    fm = Mapping(tuple(final[q] for q in range(n)))
    return CompiledProgram(n, grid, tuple(schedule), m0, fm, lost, zones)


def write_program(cp: CompiledProgram, path: str | Path) -> None:
    Path(path).write_text(dumps_program(cp))


def read_program(path: str | Path) -> CompiledProgram:
    return loads_program(Path(path).read_text())
