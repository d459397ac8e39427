"""Regenerate the MID=1 gate-count baseline frozen in tests/test_compiler.py.

Needs qiskit (not a package dependency). Routes each circuit with SABRE
layout and routing on a 10x10 nearest-neighbour grid, counts every gate with
a SWAP as three, and prints the mean over five transpiler seeds.

    python3 benchmarks/sabre_baseline.py
"""

from statistics import mean

from qiskit import QuantumCircuit, transpile
from qiskit.transpiler import CouplingMap

from naqc import build_benchmark
from naqc.circuit import decompose_toffolis

CASES = {"bv": (10, 20, 30, 40), "cuccaro": (6, 10, 14, 20, 30, 40)}


def to_qiskit(c):
    qc = QuantumCircuit(c.n_qubits)
    for g in c.gates:
        # only the interaction pattern matters for routing cost
        (qc.h, qc.cx, qc.ccx)[g.arity - 1](*g.operands)
    return qc


def gate_count(c, seed):
    out = transpile(
        to_qiskit(c), coupling_map=CouplingMap.from_grid(10, 10), optimization_level=0,
        layout_method="sabre", routing_method="sabre", seed_transpiler=seed,
    )
    ops = out.count_ops()
    return sum(v for k, v in ops.items() if k != "swap") + 3 * ops.get("swap", 0)


if __name__ == "__main__":
    for name, sizes in CASES.items():
        for n in sizes:
            c = decompose_toffolis(build_benchmark(name, n))
            print(f"{name} {n}: {mean(gate_count(c, s) for s in range(5)):.1f}")
