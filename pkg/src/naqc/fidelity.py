"""Analytic program success estimate and the error-rate sweeps built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

from .circuit import build_benchmark, valid_sizes
from .compiler import CompiledProgram, compile_circuit
from .topology import GridSpec

__all__ = [
    "ErrorParams",
    "SweepRow",
    "timestep_durations",
    "ground_time",
    "excited_time",
    "success_probability",
    "sweep_two_qubit_error",
    "max_runnable_size",
    "SWEEP_HEADER",
]

DEFAULT_P2 = 0.965

SWEEP_HEADER = ("benchmark", "size", "mid", "p2", "gate_count", "depth", "swaps", "success")


@dataclass(frozen=True)
class ErrorParams:
    """Per-gate success probabilities, coherence times (s) and gate durations (s).

    The excited-state times only enter in ``mode="full"``. The 3-qubit
    default ``p2**4`` sits between a bare two-qubit gate and the six-CNOT
    decomposition.
    """

    p_gate_1: float = 0.999
    p_gate_2: float = DEFAULT_P2
    p_gate_3: float = DEFAULT_P2**4
    T1_ground: float = 1.0
    T2_ground: float = 1.0
    T1_excited: float = 1e-4
    T2_excited: float = 1e-4
    dur_1: float = 1e-6
    dur_2: float = 1e-6
    dur_3: float = 1e-6

    def __post_init__(self):
        for name in ("p_gate_1", "p_gate_2", "p_gate_3"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        for name in ("T1_ground", "T2_ground", "T1_excited", "T2_excited"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("dur_1", "dur_2", "dur_3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def with_p2(self, p2: float, p3_exponent: float | None = None) -> ErrorParams:
        """Copy with a new two-qubit fidelity; optionally tie ``p3 = p2**p3_exponent``."""
        p3 = self.p_gate_3 if p3_exponent is None else p2**p3_exponent
        return replace(self, p_gate_2=p2, p_gate_3=p3)

    def duration(self, arity: int, is_swap: bool = False) -> float:
        if is_swap:
            return 3 * self.dur_2
        return (self.dur_1, self.dur_2, self.dur_3)[arity - 1]


def timestep_durations(cp: CompiledProgram, ep: ErrorParams) -> list[float]:
    """Wall time of each timestep: its slowest gate."""
    out = [0.0] * cp.metrics.depth
    for sg in cp.schedule:
        d = ep.duration(sg.gate.arity, sg.is_swap)
        if d > out[sg.timestep]:
            out[sg.timestep] = d
    return out


def ground_time(cp: CompiledProgram, ep: ErrorParams) -> float:
    return math.fsum(timestep_durations(cp, ep))


def excited_time(cp: CompiledProgram, ep: ErrorParams) -> float:
    """Summed duration of the slowest multi-qubit gate over timesteps that have one."""
    out = [0.0] * cp.metrics.depth
    for sg in cp.schedule:
        if sg.gate.arity > 1:
            out[sg.timestep] = max(out[sg.timestep], ep.duration(sg.gate.arity, sg.is_swap))
    return math.fsum(out)


def success_probability(cp: CompiledProgram, ep: ErrorParams, mode: str = "ground") -> float:
    """``p1^n1 * p2^(n2 + 3 swaps) * p3^n3 * exp(-dg/T1g - dg/T2g)``.

    ``mode="full"`` also applies the excited-state factor.
    """
    if mode not in ("ground", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    m = cp.metrics
    p = ep.p_gate_1**m.n1 * ep.p_gate_2**m.n2_with_swaps * ep.p_gate_3**m.n3
    if p == 0.0:
        return 0.0
    dg = ground_time(cp, ep)
    expo = -dg / ep.T1_ground - dg / ep.T2_ground
    if mode == "full":
        de = excited_time(cp, ep)
        expo -= de / ep.T1_excited + de / ep.T2_excited
    return min(1.0, max(0.0, p * math.exp(expo)))


@dataclass(frozen=True)
class SweepRow:
    benchmark: str
    size: int
    mid: float
    p2: float
    gate_count: int
    depth: int
    swaps: int
    success: float

    @property
    def error_rate(self) -> float:
        return 1.0 - self.success

    def as_tuple(self) -> tuple:
        return (self.benchmark, self.size, self.mid, self.p2, self.gate_count, self.depth, self.swaps, self.success)


def sweep_two_qubit_error(
    benchmark: str,
    size: int,
    grid: GridSpec,
    p2_values: Iterable[float],
    base: ErrorParams | None = None,
    *,
    p3_exponent: float | None = None,
    decompose_toffolis: bool = False,
) -> list[SweepRow]:
    """Compile once, then evaluate the success estimate for each ``p2``."""
    base = base or ErrorParams()
    p2_values = list(p2_values)
    if any(not 0.0 < p <= 1.0 for p in p2_values):
        raise ValueError("p2 values must lie in (0, 1]")
    cp = compile_circuit(build_benchmark(benchmark, size), grid, decompose_toffolis=decompose_toffolis)
    m = cp.metrics
    return [
        SweepRow(
            benchmark, size, grid.mid, p2, m.gate_count, m.depth, m.swap_count,
            success_probability(cp, base.with_p2(p2, p3_exponent)),
        )
        for p2 in p2_values
    ]


def max_runnable_size(
    benchmark: str,
    grid: GridSpec,
    ep: ErrorParams,
    threshold: float = 2 / 3,
    *,
    decompose_toffolis: bool = False,
    probe: int = 3,
    compiler: Callable[..., CompiledProgram] = compile_circuit,
) -> int:
    """Largest size whose compiled success estimate reaches ``threshold`` (0 if none).

    Bisects over the generator's valid sizes assuming success falls with size,
    then probes the next ``probe`` sizes; if any of them also passes the
    assumption is broken and a full scan from the top decides.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    sizes = valid_sizes(benchmark, 1, grid.n_sites)
    cache: dict[int, bool] = {}

    def ok(i: int) -> bool:
        n = sizes[i]
        if n not in cache:
            cp = compiler(build_benchmark(benchmark, n), grid, decompose_toffolis=decompose_toffolis)
            cache[n] = success_probability(cp, ep) >= threshold
        return cache[n]

    lo, hi = -1, len(sizes)  # ok(lo) assumed true, ok(hi) assumed false
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if any(ok(i) for i in range(lo + 1, min(lo + 1 + probe, len(sizes)))):
        lo = -1
        for i in range(len(sizes) - 1, -1, -1):
            if ok(i):
                lo = i
                break
    return sizes[lo] if lo >= 0 else 0
