"""Compiler and atom-loss simulator for neutral-atom arrays with long-range interactions."""

from .circuit import Circuit, Gate, build_benchmark
from .compiler import CompiledProgram, compile_circuit, verify
from .topology import GridSpec, HardwareState

__all__ = [
    "Circuit",
    "Gate",
    "build_benchmark",
    "CompiledProgram",
    "compile_circuit",
    "verify",
    "GridSpec",
    "HardwareState",
]
