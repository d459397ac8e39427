"""Gate-level circuit IR, ASAP layering, benchmark generators and Toffoli decomposition.

Gates are symbolic: a label plus the program qubits it acts on. No unitary
semantics are attached anywhere, only the dependency structure matters.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Gate",
    "Circuit",
    "LayerAssignment",
    "InvalidSizeError",
    "CircuitFormatError",
    "asap_layers",
    "build_bv",
    "build_cuccaro",
    "build_cnu",
    "build_qft_adder",
    "build_qaoa_maxcut",
    "decompose_toffolis",
    "BENCHMARKS",
    "build_benchmark",
    "valid_sizes",
    "dumps_circuit",
    "loads_circuit",
    "write_circuit",
    "read_circuit",
]

#: Operand id used inside a SWAP when one side is an unoccupied site.
EMPTY = -1

CIRCUIT_HEADER = "naqc-circuit v1"


class InvalidSizeError(ValueError):
    """A benchmark generator was asked for a size its construction cannot produce."""


class CircuitFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Gate:
    label: str
    operands: tuple[int, ...]
    is_swap: bool = False

    def __post_init__(self):
        ops = tuple(int(q) for q in self.operands)
        object.__setattr__(self, "operands", ops)
        if not 1 <= len(ops) <= 3:
            raise ValueError(f"gate {self.label} has {len(ops)} operands, expected 1-3")
        real = [q for q in ops if q != EMPTY]
        if len(set(real)) != len(real):
            raise ValueError(f"gate {self.label} has repeated operands {ops}")
        if self.is_swap:
            if len(ops) != 2:
                raise ValueError("a SWAP acts on exactly two operands")
        elif EMPTY in ops:
            raise ValueError("only SWAPs may reference an empty site")

    @property
    def arity(self) -> int:
        return len(self.operands)

    def __str__(self) -> str:
        return f"{self.label} {','.join(map(str, self.operands))}"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    measured: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "measured", frozenset(int(q) for q in self.measured))
        if self.n_qubits < 0:
            raise ValueError("qubit count must be nonnegative")
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.operands):
                raise ValueError(f"gate {g} references a qubit outside 0..{self.n_qubits - 1}")
        if any(q < 0 or q >= self.n_qubits for q in self.measured):
            raise ValueError("measured set references an unknown qubit")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def arity_counts(self) -> dict[int, int]:
        """Gate counts keyed by arity (always has keys 1, 2, 3)."""
        counts = Counter(g.arity for g in self.gates)
        return {k: counts.get(k, 0) for k in (1, 2, 3)}

    @property
    def n_toffolis(self) -> int:
        return sum(1 for g in self.gates if g.arity == 3)


@dataclass(frozen=True)
class LayerAssignment:
    layers: tuple[int, ...]
    depth: int

    def __getitem__(self, i: int) -> int:
        return self.layers[i]

    def __len__(self) -> int:
        return len(self.layers)


def asap_layers(c: Circuit) -> LayerAssignment:
    """As-soon-as-possible layering: two gates depend iff they share an operand."""
    last = [-1] * c.n_qubits
    layers = []
    for g in c.gates:
        lvl = 1 + max(last[q] for q in g.operands)
        for q in g.operands:
            last[q] = lvl
        layers.append(lvl)
    depth = max(layers) + 1 if layers else 0
    return LayerAssignment(tuple(layers), depth)


def predecessors(c: Circuit) -> list[tuple[int, ...]]:
    """Immediate predecessors of each gate (the previous gate on each operand)."""
    last = [-1] * c.n_qubits
    preds = []
    for i, g in enumerate(c.gates):
        preds.append(tuple(sorted({last[q] for q in g.operands if last[q] >= 0})))
        for q in g.operands:
            last[q] = i
    return preds


# ---------------------------------------------------------------- generators


def _g(label: str, *ops: int) -> Gate:
    return Gate(label, ops)


def build_bv(n: int) -> Circuit:
    """Bernstein-Vazirani with the all-ones oracle.

    Qubits ``0..n-2`` hold data, qubit ``n-1`` is the ancilla.
    """
    if n < 2:
        raise InvalidSizeError(f"BV needs at least 2 qubits, got {n}")
    anc = n - 1
    data = range(n - 1)
    gates = [_g("X", anc)]
    gates += [_g("H", q) for q in range(n)]
    gates += [_g("CX", d, anc) for d in data]
    gates += [_g("H", d) for d in data]
    return Circuit(n, gates, frozenset(data))


def _maj(c: int, b: int, a: int) -> list[Gate]:
    # The two CNOTs share their control and commute; a->c goes first so that
    # consecutive MAJ blocks chain through the carry wire.
    return [_g("CX", a, c), _g("CX", a, b), _g("CCX", c, b, a)]


def _uma(c: int, b: int, a: int) -> list[Gate]:
    return [_g("CCX", c, b, a), _g("CX", a, c), _g("CX", c, b)]


def build_cuccaro(n: int) -> Circuit:
    """Ripple-carry adder built from MAJ/UMA blocks, Toffolis kept native.

    ``n = 2k + 2`` for a ``k``-bit adder. Layout: qubit 0 is the carry-in,
    then ``b_i, a_i`` interleaved (``b_i = 1 + 2i``, ``a_i = 2 + 2i``), and the
    last qubit is the carry-out. The sum lands in ``b`` plus the carry-out,
    which form the measured set.
    """
    if n < 4 or n % 2:
        raise InvalidSizeError(f"Cuccaro adder needs an even size >= 4, got {n}")
    k = (n - 2) // 2
    cin, cout = 0, n - 1
    b = [1 + 2 * i for i in range(k)]
    a = [2 + 2 * i for i in range(k)]
    gates: list[Gate] = []
    carry = [cin] + a[:-1]
    for i in range(k):
        gates += _maj(carry[i], b[i], a[i])
    gates.append(_g("CX", a[-1], cout))
    for i in reversed(range(k)):
        gates += _uma(carry[i], b[i], a[i])
    return Circuit(n, gates, frozenset(b + [cout]))


def build_cnu(n: int) -> Circuit:
    """Log-depth multi-controlled NOT using clean ancilla.

    With ``c`` controls the construction needs ``c - 2`` ancilla and one
    target, so ``n = 2c - 1`` (odd, >= 3). Controls are ``0..c-1``, ancilla
    ``c..2c-3`` and the target is ``n - 1``. Controls are combined pairwise
    by Toffolis into fresh ancilla, level by level, until two wires remain;
    a final Toffoli hits the target and the tree is uncomputed in reverse.
    """
    if n < 3 or n % 2 == 0:
        raise InvalidSizeError(f"CNU needs an odd size >= 3 (2c-1 qubits), got {n}")
    c = (n + 1) // 2
    target = n - 1
    next_anc = c
    live = list(range(c))
    compute: list[Gate] = []
    while len(live) > 2:
        nxt = []
        for i in range(0, len(live) - 1, 2):
            compute.append(_g("CCX", live[i], live[i + 1], next_anc))
            nxt.append(next_anc)
            next_anc += 1
        if len(live) % 2:
            nxt.append(live[-1])
        live = nxt
    gates = compute + [_g("CCX", live[0], live[1], target)] + compute[::-1]
    return Circuit(n, gates, frozenset(list(range(c)) + [target]))


def build_qft_adder(n: int) -> Circuit:
    """Draper adder: QFT(b), controlled-phase block from a, inverse QFT(b).

    ``a`` is qubits ``0..m-1`` and ``b`` is ``m..2m-1`` with ``m = n/2``. The
    addition block applies ``CP(a_k, b_j)`` for every ``k >= j``, i.e.
    ``m(m+1)/2`` controlled phases.
    """
    if n < 2 or n % 2:
        raise InvalidSizeError(f"QFT adder needs an even size >= 2, got {n}")
    m = n // 2
    a = list(range(m))
    b = list(range(m, n))
    qft: list[Gate] = []
    for j in range(m):
        qft.append(_g("H", b[j]))
        for k in range(j + 1, m):
            qft.append(_g("CP", b[k], b[j]))
    add = [_g("CP", a[k], b[j]) for j in range(m) for k in range(j, m)]
    iqft: list[Gate] = []
    for j in reversed(range(m)):
        for k in reversed(range(j + 1, m)):
            iqft.append(_g("CP", b[k], b[j]))
        iqft.append(_g("H", b[j]))
    return Circuit(n, qft + add + iqft, frozenset(b))


def qaoa_edges(n: int, density: float, seed: int) -> list[tuple[int, int]]:
    rng = np.random.default_rng(seed)
    draws = rng.random(n * (n - 1) // 2)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return [p for p, x in zip(pairs, draws) if x < density]


def build_qaoa_maxcut(n: int, density: float = 0.1, seed: int = 0) -> Circuit:
    """Depth-1 QAOA for MAX-CUT on an Erdos-Renyi graph G(n, density)."""
    if n < 2:
        raise InvalidSizeError(f"QAOA needs at least 2 qubits, got {n}")
    if not 0 < density <= 1:
        raise ValueError(f"edge density must lie in (0, 1], got {density}")
    gates = [_g("H", q) for q in range(n)]
    for u, v in qaoa_edges(n, density, seed):
        gates += [_g("CX", u, v), _g("RZ", v), _g("CX", u, v)]
    gates += [_g("RX", q) for q in range(n)]
    return Circuit(n, gates, frozenset(range(n)))


def _toffoli_6cx(a: int, b: int, t: int) -> list[Gate]:
    return [
        _g("H", t),
        _g("CX", b, t), _g("TDG", t),
        _g("CX", a, t), _g("T", t),
        _g("CX", b, t), _g("TDG", t),
        _g("CX", a, t), _g("T", b), _g("T", t), _g("H", t),
        _g("CX", a, b), _g("T", a), _g("TDG", b),
        _g("CX", a, b),
    ]


def decompose_toffolis(c: Circuit) -> Circuit:
    """Replace every 3-operand gate by the 6-CNOT Toffoli network."""
    if not any(g.arity == 3 for g in c.gates):
        return c
    out: list[Gate] = []
    for g in c.gates:
        if g.arity == 3:
            out += _toffoli_6cx(*g.operands)
        else:
            out.append(g)
    return Circuit(c.n_qubits, out, c.measured)


BENCHMARKS = {
    "bv": build_bv,
    "cuccaro": build_cuccaro,
    "cnu": build_cnu,
    "qft_adder": build_qft_adder,
    "qaoa": build_qaoa_maxcut,
}

_ALIASES = {"qft-adder": "qft_adder", "qftadder": "qft_adder", "qaoa_maxcut": "qaoa"}


def canonical_benchmark(name: str) -> str:
    key = name.lower()
    key = _ALIASES.get(key, key)
    if key not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    return key


def build_benchmark(name: str, size: int, *, density: float = 0.1, seed: int = 0) -> Circuit:
    key = canonical_benchmark(name)
    if key == "qaoa":
        return build_qaoa_maxcut(size, density, seed)
    return BENCHMARKS[key](size)


def valid_sizes(name: str, lo: int, hi: int) -> list[int]:
    """Sizes in ``[lo, hi]`` the named generator accepts."""
    key = canonical_benchmark(name)
    out = []
    for n in range(max(lo, 2), hi + 1):
        if key in ("cuccaro",) and (n < 4 or n % 2):
            continue
        if key == "cnu" and (n < 3 or n % 2 == 0):
            continue
        if key == "qft_adder" and n % 2:
            continue
        out.append(n)
    return out


# ---------------------------------------------------------------- text format


def dumps_circuit(c: Circuit) -> str:
    lines = [CIRCUIT_HEADER, f"qubits {c.n_qubits}"]
    lines += [str(g) for g in c.gates]
    lines.append("measure " + ",".join(str(q) for q in sorted(c.measured)))
    return "\n".join(lines) + "\n"


def _parse_ids(text: str, lineno: int) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise CircuitFormatError(lineno, f"bad qubit list {text!r}") from None


def _content_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def loads_circuit(text: str) -> Circuit:
    """Parse the ``naqc-circuit v1`` format.

    Grammar (blank lines and ``#`` comments ignored)::

        naqc-circuit v1
        qubits <N>
        <LABEL> <q0>[,<q1>[,<q2>]]      (zero or more)
        measure [<q>,...]               (exactly once, last)
    """
    lines = list(_content_lines(text))
    if not lines or lines[0][1] != CIRCUIT_HEADER:
        raise CircuitFormatError(lines[0][0] if lines else 1, f"expected header {CIRCUIT_HEADER!r}")
    if len(lines) < 2:
        raise CircuitFormatError(lines[0][0], "missing 'qubits' line")
    lineno, line = lines[1]
    parts = line.split()
    if len(parts) != 2 or parts[0] != "qubits" or not parts[1].isdigit():
        raise CircuitFormatError(lineno, "expected 'qubits <N>'")
    n = int(parts[1])
    gates: list[Gate] = []
    measured: frozenset[int] | None = None
    for lineno, line in lines[2:]:
        if measured is not None:
            raise CircuitFormatError(lineno, "content after 'measure' line")
        head, _, rest = line.partition(" ")
        if head == "measure":
            ids = _parse_ids(rest, lineno)
            if any(q < 0 or q >= n for q in ids):
                raise CircuitFormatError(lineno, "measured qubit out of range")
            measured = frozenset(ids)
            continue
        if not rest.strip():
            raise CircuitFormatError(lineno, f"gate {head!r} has no operands")
        ids = _parse_ids(rest.replace(" ", ""), lineno)
        if any(q < 0 or q >= n for q in ids):
            raise CircuitFormatError(lineno, f"operand out of range 0..{n - 1}")
        try:
            gates.append(Gate(head, tuple(ids)))
        except ValueError as exc:
            raise CircuitFormatError(lineno, str(exc)) from None
    if measured is None:
        raise CircuitFormatError(lines[-1][0], "missing 'measure' line")
    return Circuit(n, gates, measured)


def write_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps_circuit(c))


def read_circuit(path: str | Path) -> Circuit:
    return loads_circuit(Path(path).read_text())
