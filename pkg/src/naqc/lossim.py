"""Atom loss between shots: sampling, coping strategies and run-time accounting.

A compiled program addresses *compiled* sites. While atoms go missing the
simulator keeps an overlay ``overlay[compiled_site] -> physical_site`` that
is the identity after every (re)load. Losses are detected once per shot by
fluorescence and handled by the selected :class:`Strategy`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, build_benchmark
from .compiler import CapacityError, CompiledProgram, RoutingDeadlockError, compile_circuit
from .fidelity import ErrorParams, success_probability
from .topology import EPS, GridSpec, HardwareState, is_connected

__all__ = [
    "MeasurementMode",
    "LossModel",
    "TimingModel",
    "StrategyKind",
    "Strategy",
    "ReloadNeeded",
    "LossState",
    "Outcome",
    "ShotRecord",
    "TraceEvent",
    "RunTrace",
    "HoleStats",
    "sample_losses",
    "shift_overlay",
    "too_far_ops",
    "virtual_remap",
    "minor_reroute",
    "reroute_sequence",
    "swap_budget",
    "apply_strategy",
    "max_sustained_holes",
    "simulate_run",
    "CATEGORIES",
]

CATEGORIES = ("load", "fluoresce", "shot", "remap", "recompile")

# North is toward y - 1; ties between directions resolve in this order.
DIRECTIONS = (("N", 0, -1), ("E", 1, 0), ("S", 0, 1), ("W", -1, 0))


class MeasurementMode(str, Enum):
    LOSSLESS = "lossless"
    EJECTION = "ejection"


_P_MEASURE = {MeasurementMode.LOSSLESS: 0.02, MeasurementMode.EJECTION: 0.5}


@dataclass(frozen=True)
class LossModel:
    """Per-shot loss: vacuum on every atom, plus measurement loss on measured atoms."""

    p_vacuum: float = 0.0068
    measurement_mode: MeasurementMode = MeasurementMode.LOSSLESS
    p_measure_override: float | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "measurement_mode", MeasurementMode(self.measurement_mode))
        for p in (self.p_vacuum, self.p_measure):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"loss probability {p} outside [0, 1]")

    @property
    def p_measure(self) -> float:
        if self.p_measure_override is not None:
            return self.p_measure_override
        return _P_MEASURE[self.measurement_mode]

    def scaled(self, factor: float) -> LossModel:
        """Both loss channels multiplied by ``factor``."""
        return LossModel(
            min(1.0, self.p_vacuum * factor), self.measurement_mode,
            min(1.0, self.p_measure * factor), self.seed,
        )


@dataclass(frozen=True)
class TimingModel:
    """Seconds per event. ``t_recompile=None`` charges the measured wall time."""

    t_reload: float = 0.3
    t_fluoresce: float = 0.006
    t_remap: float = 4e-8
    t_shot: float = 0.001
    t_recompile: float | None = None

    def __post_init__(self):
        for name in ("t_reload", "t_fluoresce", "t_remap", "t_shot", "t_recompile"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")


class StrategyKind(str, Enum):
    ALWAYS_RELOAD = "AlwaysReload"
    ALWAYS_RECOMPILE = "AlwaysRecompile"
    VIRTUAL_REMAP = "VirtualRemap"
    MINOR_REROUTE = "MinorReroute"
    COMPILE_SMALL = "CompileSmall"
    COMPILE_SMALL_REROUTE = "CompileSmallReroute"


@dataclass(frozen=True)
class Strategy:
    variant: StrategyKind
    small_mid_delta: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", StrategyKind(self.variant))
        if self.small_mid_delta < 1:
            raise ValueError("small_mid_delta must be a positive integer")

    @property
    def name(self) -> str:
        return self.variant.value

    @property
    def compiles_small(self) -> bool:
        return self.variant in (StrategyKind.COMPILE_SMALL, StrategyKind.COMPILE_SMALL_REROUTE)

    @property
    def remaps(self) -> bool:
        return self.variant not in (StrategyKind.ALWAYS_RELOAD, StrategyKind.ALWAYS_RECOMPILE)

    @property
    def reroutes(self) -> bool:
        return self.variant in (StrategyKind.MINOR_REROUTE, StrategyKind.COMPILE_SMALL_REROUTE)

    def compile_grid(self, grid: GridSpec) -> GridSpec:
        if not self.compiles_small:
            return grid
        small = grid.mid - self.small_mid_delta
        if small < 1:
            raise ValueError(f"cannot compile {self.small_mid_delta} below MID {grid.mid}")
        return grid.with_mid(small)


class ReloadNeeded(Exception):
    """The current losses cannot be absorbed; the array must be reloaded."""


def swap_budget(p2: float, keep: float = 0.5) -> float:
    """Largest number of added SWAPs (3 two-qubit gates each) keeping ``>= keep`` of the success."""
    if not 0.0 < p2 <= 1.0:
        raise ValueError("p2 must be in (0, 1]")
    if p2 == 1.0:
        return math.inf
    return math.floor(math.log(keep) / (3 * math.log(p2)) + 1e-12)


# ---------------------------------------------------------------- sampling


def sample_losses(
    hw: HardwareState, lm: LossModel, measured_sites: Iterable[int], rng: np.random.Generator
) -> frozenset[int]:
    """Vacuum loss on every usable site, measurement loss on ``measured_sites``.

    Both uniform draws are always taken so the stream advances identically
    whatever the outcome.
    """
    measured = np.fromiter(sorted(set(measured_sites)), dtype=np.int64)
    if measured.size and not hw.usable[measured].all():
        raise ValueError("measured sites must be usable")
    vac = rng.random(hw.grid.n_sites) < lm.p_vacuum
    meas = rng.random(measured.size) < lm.p_measure
    lost = np.flatnonzero(vac & hw.usable)
    return frozenset(lost.tolist()) | frozenset(measured[meas].tolist())


# ---------------------------------------------------------------- plan checks


@dataclass(frozen=True)
class _OpTable:
    """Operand sites of every scheduled op, padded to width 3 by repetition."""

    sites: np.ndarray

    @classmethod
    def build(cls, cp: CompiledProgram) -> _OpTable:
        rows = []
        for sg in cp.schedule:
            s = list(sg.sites)
            rows.append(s + [s[-1]] * (3 - len(s)))
        return cls(np.asarray(rows, dtype=np.int64).reshape(-1, 3))

    def spans(self, D: np.ndarray, overlay: np.ndarray) -> np.ndarray:
        P = overlay[self.sites]
        return np.maximum(np.maximum(D[P[:, 0], P[:, 1]], D[P[:, 0], P[:, 2]]), D[P[:, 1], P[:, 2]])


class _StepGroups:
    """Schedule indices of every timestep that runs more than one op."""

    def __init__(self, cp: CompiledProgram):
        by_t: dict[int, list[int]] = {}
        for i, sg in enumerate(cp.schedule):
            by_t.setdefault(sg.timestep, []).append(i)
        self.groups = [np.array(v, dtype=np.int64) for _, v in sorted(by_t.items()) if len(v) > 1]


def zone_violations(
    cp: CompiledProgram,
    overlay: np.ndarray,
    grid: GridSpec,
    table: _OpTable | None = None,
    groups: _StepGroups | None = None,
) -> list[int]:
    """Timesteps whose ops, moved by the overlay, now have overlapping zones."""
    table = table or _OpTable.build(cp)
    groups = groups or _StepGroups(cp)
    D = grid.dist
    bad = []
    spans = table.spans(D, overlay) if groups.groups else None
    for idx in groups.groups:
        P = overlay[table.sites[idx]].reshape(-1)
        r = np.repeat(spans[idx] / grid.zone_divisor, 3)
        owner = np.repeat(np.arange(idx.size), 3)
        clash = (D[np.ix_(P, P)] < r[:, None] + r[None, :] - EPS) & (owner[:, None] != owner[None, :])
        if clash.any():
            bad.append(cp.schedule[int(idx[0])].timestep)
    return bad


def too_far_ops(cp: CompiledProgram, overlay: np.ndarray, grid: GridSpec, table: _OpTable | None = None) -> np.ndarray:
    """Schedule indices whose operands, after the overlay, exceed ``grid.mid``."""
    table = table or _OpTable.build(cp)
    if table.sites.size == 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(table.spans(grid.dist, overlay) > grid.mid + EPS)


def shift_overlay(
    hw: HardwareState, overlay: np.ndarray, used: Sequence[int], lost: Iterable[int]
) -> np.ndarray:
    """Move the logical occupant of each lost in-use site one usable step toward an edge.

    The direction is the one holding the most spare (usable, unoccupied)
    sites; occupants along that line shift in a chain until one lands on a
    spare. Raises :class:`ReloadNeeded` when no direction has a spare.
    """
    grid = hw.grid
    overlay = overlay.copy()
    occupant = {int(overlay[s]): int(s) for s in used}
    for p in sorted(set(lost)):
        if p not in occupant:
            continue
        x0, y0 = grid.coord(p)
        best, best_spares = None, 0
        for _, dx, dy in DIRECTIONS:
            ray = []
            x, y = x0 + dx, y0 + dy
            while 0 <= x < grid.width and 0 <= y < grid.height:
                s = y * grid.width + x
                if hw.usable[s]:
                    ray.append(s)
                x, y = x + dx, y + dy
            spares = sum(1 for s in ray if s not in occupant)
            if spares > best_spares:
                best, best_spares = ray, spares
        if best is None:
            raise ReloadNeeded(f"no spare site in any direction from lost site {p}")
        carry = occupant.pop(p)
        for s in best:
            nxt = occupant.get(s)
            occupant[s] = carry
            overlay[carry] = s
            if nxt is None:
                break
            carry = nxt
    return overlay


def virtual_remap(
    hw: HardwareState,
    overlay: np.ndarray,
    lost: Iterable[int],
    cp: CompiledProgram,
    grid: GridSpec | None = None,
) -> np.ndarray:
    """Shift around the lost sites, then require every op to stay interactable."""
    grid = grid or hw.grid
    new = shift_overlay(hw, overlay, sorted(cp.used_sites), lost)
    _check_fixed_timing(cp, new, grid)
    return new


def _check_fixed_timing(cp: CompiledProgram, overlay: np.ndarray, grid: GridSpec, tables=None) -> None:
    """The compiled timesteps must still be valid: ranges and zone separation."""
    table, groups = tables or (None, None)
    bad = too_far_ops(cp, overlay, grid, table)
    if bad.size:
        raise ReloadNeeded(f"{bad.size} operations out of range after remapping")
    clashes = zone_violations(cp, overlay, grid, table, groups)
    if clashes:
        raise ReloadNeeded(f"zones overlap in {len(clashes)} timesteps after remapping")


def _walk_cost(adj, D, usable, mid, mover: int, fixed: Sequence[int]) -> list[int] | None:
    """Shortest walk of ``mover`` until it is within ``mid`` of every fixed site."""
    target = usable & np.all(D[list(fixed)] <= mid + EPS, axis=0)
    target[list(fixed)] = False
    passable = usable.copy()
    passable[list(fixed)] = False
    path = K.bfs_nearest(adj, passable, mover, target)
    if path.size == 0:
        return None
    return [int(s) for s in path]


def _reroute_op(hw: HardwareState, grid: GridSpec, phys: Sequence[int]) -> list[tuple[int, int]] | None:
    """Cheapest forward SWAP chain making ``phys`` interactable, or None."""
    D, mid, usable = grid.dist, grid.mid, hw.usable
    adj = grid.adjacency & usable[None, :] & usable[:, None]
    phys = list(dict.fromkeys(int(s) for s in phys))
    best: list[tuple[int, int]] | None = None

    def consider(swaps: list[tuple[int, int]]) -> None:
        nonlocal best
        if best is None or len(swaps) < len(best):
            best = swaps

    def hops(path: list[int]) -> list[tuple[int, int]]:
        return list(zip(path[:-1], path[1:]))

    for i, mover in enumerate(phys):
        fixed = [s for j, s in enumerate(phys) if j != i]
        if len(fixed) == 2 and D[fixed[0], fixed[1]] > mid + EPS:
            continue
        path = _walk_cost(adj, D, usable, mid, mover, fixed)
        if path is not None:
            consider(hops(path))
    if len(phys) == 3:
        # two movers gather around an anchor
        for a in range(3):
            b, c = (phys[k] for k in range(3) if k != a)
            for first, second in ((b, c), (c, b)):
                p1 = _walk_cost(adj, D, usable, mid, first, [phys[a], second])
                p1 = p1 if p1 is not None else _walk_cost(adj, D, usable, mid, first, [phys[a]])
                if p1 is None:
                    continue
                p2 = _walk_cost(adj, D, usable, mid, second, [phys[a], p1[-1]])
                if p2 is None:
                    continue
                consider(hops(p1) + hops(p2))
    return best


def reroute_sequence(forward: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """SWAPs actually executed for a rerouted op: the chain, then its exact reversal."""
    return list(forward) + [tuple(p) for p in reversed(forward)]


def minor_reroute(
    hw: HardwareState,
    overlay: np.ndarray,
    cp: CompiledProgram,
    grid: GridSpec | None = None,
    budget: float = math.inf,
    table: _OpTable | None = None,
) -> dict[int, list[tuple[int, int]]]:
    """Forward SWAP chains (physical site pairs) for every op left out of range.

    Each chain is undone after its op, so it costs twice its length. Raises
    :class:`ReloadNeeded` if some op has no path or the total exceeds ``budget``.
    """
    grid = grid or hw.grid
    out: dict[int, list[tuple[int, int]]] = {}
    total = 0
    for i in too_far_ops(cp, overlay, grid, table):
        phys = overlay[list(cp.schedule[i].sites)]
        chain = _reroute_op(hw, grid, phys)
        if chain is None:
            raise ReloadNeeded(f"no usable path for operation {int(i)}")
        total += 2 * len(chain)
        if total > budget:
            raise ReloadNeeded(f"rerouting needs more than {budget} SWAPs")
        out[int(i)] = chain
    return out


# ---------------------------------------------------------------- strategy state


@dataclass
class LossState:
    """Everything a strategy needs between shots; reset by every reload."""

    strategy: Strategy
    circuit: Circuit
    grid: GridSpec
    original: CompiledProgram
    budget: float = math.inf
    cp: CompiledProgram = field(init=False)
    lost: frozenset[int] = field(init=False)
    overlay: np.ndarray = field(init=False)
    added_swaps: dict[int, list[tuple[int, int]]] = field(init=False)

    def __post_init__(self):
        self.reset()

    @classmethod
    def start(cls, strategy: Strategy, circuit: Circuit, grid: GridSpec, budget: float = math.inf) -> LossState:
        cp = compile_circuit(circuit, strategy.compile_grid(grid))
        return cls(strategy, circuit, grid, cp, budget)

    def reset(self) -> None:
        self.cp = self.original
        self.lost = frozenset()
        self.overlay = np.arange(self.grid.n_sites, dtype=np.int64)
        self.added_swaps = {}
        self._refresh()

    def _refresh(self) -> None:
        self._used = np.array(sorted(self.cp.used_sites), dtype=np.int64)
        self.tables = (_OpTable.build(self.cp), _StepGroups(self.cp))

    @property
    def hw(self) -> HardwareState:
        return HardwareState(self.grid, self.lost)

    @property
    def used(self) -> np.ndarray:
        return self._used

    def physical_in_use(self) -> frozenset[int]:
        return frozenset(self.overlay[self._used].tolist())

    def measured_sites(self) -> frozenset[int]:
        fm = self.cp.final_mapping.forward
        return frozenset(int(self.overlay[fm[q]]) for q in sorted(self.circuit.measured))

    def chain_sites(self) -> frozenset[int]:
        """Physical sites touched by the current rerouting chains."""
        return frozenset(s for chain in self.added_swaps.values() for pair in chain for s in pair)

    def n_added_swaps(self) -> int:
        return sum(len(reroute_sequence(c)) for c in self.added_swaps.values())


@dataclass(frozen=True)
class Outcome:
    action: str  # "continue" or "reload"
    cost: float
    category: str | None
    added_swap_pairs: tuple[tuple[int, int], ...] = ()
    reason: str = ""

    @property
    def reload(self) -> bool:
        return self.action == "reload"


def apply_strategy(st: Strategy, state: LossState, losses: Iterable[int], tm: TimingModel | None = None) -> Outcome:
    """Absorb ``losses`` into ``state`` or ask for a reload.

    Losses on sites the program does not use only mark the hole. The caller
    performs the reload itself (see :meth:`LossState.reset`).
    """
    tm = tm or TimingModel()
    new = frozenset(losses) - state.lost
    in_use = new & state.physical_in_use()
    state.lost = state.lost | new
    kind = st.variant
    if kind is StrategyKind.ALWAYS_RECOMPILE and state.hw.n_usable <= state.circuit.n_qubits:
        # recompiling needs a spare to absorb the next loss
        return Outcome("reload", tm.t_reload, "load", reason="no spare sites left")
    if not in_use:
        if not new & state.chain_sites():
            return Outcome("continue", 0.0, None)
        # a spare used by a rerouting chain is gone: re-plan the chains in place
        try:
            added = minor_reroute(state.hw, state.overlay, state.cp, state.grid, state.budget, state.tables[0])
        except ReloadNeeded as exc:
            return Outcome("reload", tm.t_reload, "load", reason=str(exc))
        state.added_swaps = added
        pairs = tuple(p for i in sorted(added) for p in added[i])
        return Outcome("continue", tm.t_remap, "remap", pairs)
    if kind is StrategyKind.ALWAYS_RELOAD:
        return Outcome("reload", tm.t_reload, "load", reason="in-use atom lost")
    hw = state.hw
    if kind is StrategyKind.ALWAYS_RECOMPILE:
        if not is_connected(hw):
            return Outcome("reload", tm.t_reload, "load", reason="topology disconnected")
        t0 = time.perf_counter()
        try:
            cp = compile_circuit(state.circuit, st.compile_grid(state.grid), hardware=hw)
        except (CapacityError, RoutingDeadlockError) as exc:
            return Outcome("reload", tm.t_reload, "load", reason=str(exc))
        elapsed = time.perf_counter() - t0
        state.cp = cp
        state.overlay = np.arange(state.grid.n_sites, dtype=np.int64)
        state.added_swaps = {}
        state._refresh()
        cost = elapsed if tm.t_recompile is None else tm.t_recompile
        return Outcome("continue", cost, "recompile")
    try:
        overlay = shift_overlay(hw, state.overlay, state.used, in_use)
        if st.reroutes:
            added = minor_reroute(hw, overlay, state.cp, state.grid, state.budget, state.tables[0])
        else:
            _check_fixed_timing(state.cp, overlay, state.grid, state.tables)
            added = {}
    except ReloadNeeded as exc:
        return Outcome("reload", tm.t_reload, "load", reason=str(exc))
    state.overlay = overlay
    state.added_swaps = added
    pairs = tuple(p for i in sorted(added) for p in added[i])
    return Outcome("continue", tm.t_remap, "remap", pairs)


# ---------------------------------------------------------------- sustained holes


@dataclass(frozen=True)
class HoleStats:
    counts: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.counts.mean())

    @property
    def std(self) -> float:
        return float(self.counts.std())


def _as_circuit(benchmark: str | Circuit, size: int | None) -> Circuit:
    if isinstance(benchmark, Circuit):
        return benchmark
    if size is None:
        raise ValueError("size is required with a benchmark name")
    return build_benchmark(benchmark, size)


def max_sustained_holes(
    st: Strategy,
    benchmark: str | Circuit,
    grid: GridSpec,
    trials: int,
    seed: int = 0,
    *,
    size: int | None = None,
    budget: float = math.inf,
    tm: TimingModel | None = None,
) -> HoleStats:
    """Remove random sites one at a time until the strategy forces a reload.

    Returns the number of holes present when the reload became necessary
    (the removal that forced it is not counted). The reroute budget is
    unlimited by default: only path existence ends a trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    circuit = _as_circuit(benchmark, size)
    proto = LossState.start(st, circuit, grid, budget)
    tm = tm or TimingModel(t_recompile=0.0)
    counts = np.zeros(trials, dtype=np.int64)
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        state = LossState(st, circuit, grid, proto.original, budget)
        order = rng.permutation(grid.n_sites)
        holes = 0
        for site in order:
            if apply_strategy(st, state, (int(site),), tm).reload:
                break
            holes += 1
        counts[trial] = holes
    return HoleStats(counts)


# ---------------------------------------------------------------- run simulation


@dataclass(frozen=True)
class ShotRecord:
    shot: int
    losses: tuple[int, ...]
    action: str
    added_swap_pairs: tuple[tuple[int, int], ...]
    reloaded: bool
    success: bool
    shot_success_prob: float


@dataclass(frozen=True)
class TraceEvent:
    shot: int
    event: str
    dt_seconds: float
    category: str


@dataclass
class RunTrace:
    strategy: str
    mid: float
    records: list[ShotRecord] = field(default_factory=list)
    events: list[TraceEvent] = field(default_factory=list)
    reloads: int = 0
    recompiles: int = 0

    @property
    def successful(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def times(self) -> dict[str, float]:
        acc = {c: [] for c in CATEGORIES}
        for e in self.events:
            acc[e.category].append(e.dt_seconds)
        return {c: math.fsum(v) for c, v in acc.items()}

    @property
    def total(self) -> float:
        return math.fsum(e.dt_seconds for e in self.events)

    @property
    def shots_per_reload(self) -> float:
        """Successful shots per array load (initial load included)."""
        return self.successful / (self.reloads + 1)

    def add(self, shot: int, event: str, dt: float, category: str) -> None:
        self.events.append(TraceEvent(shot, event, dt, category))


def simulate_run(
    st: Strategy,
    benchmark: str | Circuit,
    grid: GridSpec,
    lm: LossModel,
    tm: TimingModel,
    target_successful_shots: int = 500,
    seed: int | None = None,
    *,
    size: int | None = None,
    ep: ErrorParams | None = None,
    trial: int = 0,
    max_shots: int | None = None,
) -> RunTrace:
    """Shoot until ``target_successful_shots`` shots lost none of their atoms.

    The first load costs ``t_reload``; the initial compile is free. Every
    shot then costs ``t_shot + t_fluoresce`` followed by the strategy's
    reaction to whatever was lost.
    """
    if target_successful_shots < 1:
        raise ValueError("target must be >= 1")
    ep = ep or ErrorParams()
    budget = swap_budget(ep.p_gate_2)
    circuit = _as_circuit(benchmark, size)
    state = LossState.start(st, circuit, grid, budget)
    rng = np.random.default_rng([lm.seed if seed is None else seed, trial])
    trace = RunTrace(st.name, grid.mid)
    trace.add(0, "load", tm.t_reload, "load")
    base_p: dict[int, float] = {}
    max_shots = max_shots or 1000 * target_successful_shots
    shot = 0
    successful = 0
    while successful < target_successful_shots:
        if shot >= max_shots:
            raise RuntimeError("run did not reach its target shot count")
        key = id(state.cp)
        if key not in base_p:
            base_p[key] = success_probability(state.cp, ep)
        p_shot = base_p[key] * ep.p_gate_2 ** (3 * state.n_added_swaps())
        trace.add(shot, "shot", tm.t_shot, "shot")
        trace.add(shot, "fluoresce", tm.t_fluoresce, "fluoresce")
        losses = sample_losses(state.hw, lm, state.measured_sites(), rng)
        ok = not (losses & state.physical_in_use())
        successful += ok
        out = apply_strategy(st, state, losses, tm)
        if out.reload:
            trace.reloads += 1
            trace.add(shot, "reload", tm.t_reload, "load")
            state.reset()
            if st.variant is StrategyKind.ALWAYS_RECOMPILE:
                # one compile for the refilled array (it reproduces the original program)
                t0 = time.perf_counter()
                compile_circuit(circuit, st.compile_grid(grid))
                dt = time.perf_counter() - t0 if tm.t_recompile is None else tm.t_recompile
                trace.recompiles += 1
                trace.add(shot, "recompile", dt, "recompile")
        elif out.category == "recompile":
            trace.recompiles += 1
            trace.add(shot, "recompile", out.cost, "recompile")
        elif out.category == "remap":
            trace.add(shot, "remap", out.cost, "remap")
        trace.records.append(
            ShotRecord(shot, tuple(sorted(losses)), out.action, out.added_swap_pairs, out.reload, ok, p_shot)
        )
        shot += 1
    return trace
