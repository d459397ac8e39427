"""``naqc`` command line: compile one program, run the sweeps, emit CSVs.

Exit status is 0 on success, 1 for usage, config or input errors and 2
when a compiled program fails verification or anything unexpected breaks.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .circuit import CircuitFormatError, InvalidSizeError, build_benchmark, canonical_benchmark, read_circuit, valid_sizes
from .compiler import CapacityError, SchedFormatError, compile_circuit, verify_report, write_program
from .config import Config, ConfigError, dumps_config, load_config
from .fidelity import SWEEP_HEADER, ErrorParams, max_runnable_size, sweep_two_qubit_error
from .lossim import Strategy, StrategyKind, max_sustained_holes, simulate_run, swap_budget
from .topology import GridSpec

log = logging.getLogger("naqc")

MID_HEADER = ("benchmark", "size", "mid", "gates", "depth", "swaps", "native3q")
MAXSIZE_HEADER = ("benchmark", "mid", "p2", "max_size")
CROSSCHECK_HEADER = ("p2", "closed_form", "compiled")
HOLES_HEADER = ("strategy", "mid", "trial", "holes_sustained")
TRACE_HEADER = ("strategy", "mid", "shot", "event", "dt_seconds", "category")
OVERHEAD_HEADER = ("strategy", "mid", "total_s", "load_s", "fluoresce_s", "shot_s", "recompile_s", "reloads")

USER_ERRORS = (ConfigError, CircuitFormatError, SchedFormatError, InvalidSizeError, CapacityError, KeyError, OSError)


class InvariantError(RuntimeError):
    """A compiled program failed verification."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            n += 1
    return n


def ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    """``map`` over a bounded process pool; results keep the input order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


def nearest_size(benchmark: str, size: int) -> int:
    """Largest size the generator supports that does not exceed ``size``."""
    sizes = valid_sizes(benchmark, 1, size)
    if not sizes:
        raise InvalidSizeError(f"{benchmark} has no valid size <= {size}")
    return sizes[-1]


def _checked(cp, circuit, grid):
    problems = verify_report(cp, circuit, grid)
    if problems:
        raise InvariantError("compiled program failed verification: " + "; ".join(problems[:3]))
    return cp


def _csv_list(conv):
    def parse(text: str):
        try:
            return tuple(conv(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


# ---------------------------------------------------------------- compile


def cmd_compile(args, cfg: Config) -> int:
    grid = cfg.grid if args.mid is None else cfg.grid.with_mid(args.mid)
    if args.circuit:
        circuit = read_circuit(args.circuit)
        stem = Path(args.circuit).stem
    else:
        if not args.benchmark or args.size is None:
            raise ConfigError("compile needs --circuit or both --benchmark and --size")
        name = canonical_benchmark(args.benchmark)
        circuit = build_benchmark(name, args.size, density=cfg.sweep.qaoa_density, seed=args.seed)
        stem = f"{name}_{args.size}"
    cp = compile_circuit(
        circuit, grid, decompose_toffolis=args.decompose_toffolis, ideal_no_zones=args.ideal_no_zones
    )
    _checked(cp, circuit, grid)
    m = cp.metrics
    out = Path(args.out) / f"{stem}_mid{grid.mid:g}{'_ideal' if args.ideal_no_zones else ''}.sched"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_program(cp, out)
    print(f"gates={m.gate_count} depth={m.depth} swaps={m.swap_count}")
    log.info("wrote %s", out)
    return 0


# ---------------------------------------------------------------- sweep-mid


@dataclass(frozen=True)
class MidCell:
    benchmark: str
    size: int
    mid: float
    decompose: bool
    width: int
    height: int
    zone_divisor: float
    density: float
    seed: int


def run_mid_cell(cell: MidCell) -> tuple:
    grid = GridSpec(cell.width, cell.height, cell.mid, cell.zone_divisor)
    circuit = build_benchmark(cell.benchmark, cell.size, density=cell.density, seed=cell.seed)
    try:
        cp = compile_circuit(circuit, grid, decompose_toffolis=cell.decompose)
    except CapacityError as exc:
        log.warning("%s size %d mid %g: %s", cell.benchmark, cell.size, cell.mid, exc)
        return (cell.benchmark, cell.size, cell.mid, "", "", "", int(not cell.decompose))
    _checked(cp, circuit, grid)
    m = cp.metrics
    return (cell.benchmark, cell.size, cell.mid, m.gate_count, m.depth, m.swap_count, int(m.n3 > 0))


def mid_cells(cfg: Config, seed: int) -> list[MidCell]:
    sw, g = cfg.sweep, cfg.grid
    cells = []
    for bench in sw.benchmarks:
        bench = canonical_benchmark(bench)
        for size in sw.sizes:
            n = nearest_size(bench, size)
            has3 = build_benchmark(bench, n, density=sw.qaoa_density, seed=seed).n_toffolis > 0
            for mid in sw.mids:
                if not has3:
                    modes = (False,)
                elif mid >= math.sqrt(2) - 1e-9:
                    modes = (False, True)
                else:  # no 3-qubit gate fits; the compiler would decompose anyway
                    modes = (True,)
                for decompose in modes:
                    cells.append(MidCell(bench, n, mid, decompose, g.width, g.height, g.zone_divisor, sw.qaoa_density, seed))
    return cells


def cmd_sweep_mid(args, cfg: Config) -> int:
    rows = ordered_map(run_mid_cell, mid_cells(cfg, args.seed), cfg.sweep.workers)
    path = Path(args.out) / "sweep_mid.csv"
    write_csv(path, MID_HEADER, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


# ---------------------------------------------------------------- sweep-error


@dataclass(frozen=True)
class ErrorCell:
    benchmark: str
    size: int
    grid: GridSpec
    ep: ErrorParams
    p2_values: tuple[float, ...]
    threshold: float
    p3_exponent: float | None


def run_error_cell(cell: ErrorCell) -> tuple[list[tuple], list[tuple]]:
    sweep = sweep_two_qubit_error(
        cell.benchmark, cell.size, cell.grid, cell.p2_values, cell.ep, p3_exponent=cell.p3_exponent
    )
    sizes = [
        (cell.benchmark, cell.grid.mid, p2,
         max_runnable_size(cell.benchmark, cell.grid, cell.ep.with_p2(p2, cell.p3_exponent), cell.threshold))
        for p2 in cell.p2_values
    ]
    return [r.as_tuple() for r in sweep], sizes


def bv_closed_form(p2: float, threshold: float, capacity: int) -> int:
    """Largest BV size with ``p2**(n-1) >= threshold`` when nothing else costs."""
    if p2 >= 1.0:
        return capacity
    return min(capacity, math.floor(math.log(threshold) / math.log(p2) + 1e-12) + 1)


def bv_crosscheck(grid: GridSpec, p2_values: Sequence[float], threshold: float) -> list[tuple]:
    full = grid.with_mid(max(grid.mid, grid.diagonal))
    rows = []
    for p2 in p2_values:
        ep = ErrorParams(p_gate_1=1.0, p_gate_2=p2, p_gate_3=1.0, dur_1=0.0, dur_2=0.0, dur_3=0.0)
        rows.append((p2, bv_closed_form(p2, threshold, grid.n_sites), max_runnable_size("bv", full, ep, threshold)))
    return rows


def cmd_sweep_error(args, cfg: Config) -> int:
    sw = cfg.sweep
    grid = cfg.grid.with_mid(sw.error_mid)
    cells = [
        ErrorCell(
            b, nearest_size(b, sw.error_size), grid, cfg.error, sw.p2_values, sw.threshold, sw.p3_exponent
        )
        for b in map(canonical_benchmark, sw.error_benchmarks)
    ]
    results = ordered_map(run_error_cell, cells, sw.workers)
    out = Path(args.out)
    n = write_csv(out / "sweep_error.csv", SWEEP_HEADER, (r for sweep, _ in results for r in sweep))
    write_csv(out / "max_size.csv", MAXSIZE_HEADER, (r for _, sizes in results for r in sizes))
    write_csv(out / "bv_crosscheck.csv", CROSSCHECK_HEADER, bv_crosscheck(grid, sw.p2_values, sw.threshold))
    print(f"wrote {n} sweep rows to {out}")
    return 0


# ---------------------------------------------------------------- loss


@dataclass(frozen=True)
class LossCell:
    strategy: str
    mid: float
    cfg: Config
    seed: int


def run_holes_cell(cell: LossCell) -> list[tuple]:
    sw = cell.cfg.sweep
    grid = cell.cfg.grid.with_mid(cell.mid)
    bench = canonical_benchmark(sw.loss_benchmark)
    size = nearest_size(bench, sw.loss_size)
    rows = []
    for k, seed in enumerate(sw.seeds):
        stats = max_sustained_holes(
            Strategy(StrategyKind(cell.strategy)), bench, grid, sw.trials, seed, size=size, tm=cell.cfg.timing
        )
        rows += [(cell.strategy, cell.mid, k * sw.trials + t, int(c)) for t, c in enumerate(stats.counts)]
    return rows


def run_trace_cell(cell: LossCell):
    sw, cfg = cell.cfg.sweep, cell.cfg
    grid = cfg.grid.with_mid(cell.mid)
    bench = canonical_benchmark(sw.loss_benchmark)
    trace = simulate_run(
        Strategy(StrategyKind(cell.strategy)), bench, grid, cfg.loss, cfg.timing, sw.target_shots, cell.seed,
        size=nearest_size(bench, sw.loss_size), ep=cfg.error,
    )
    events = [(cell.strategy, cell.mid, e.shot, e.event, e.dt_seconds, e.category) for e in trace.events]
    t = trace.times
    summary = (cell.strategy, cell.mid, trace.total, t["load"], t["fluoresce"], t["shot"], t["recompile"], trace.reloads)
    return events, summary


def cmd_loss(args, cfg: Config) -> int:
    sw = cfg.sweep
    log.info("reroute budget at p2=%g: %s SWAPs", cfg.error.p_gate_2, swap_budget(cfg.error.p_gate_2))
    cells = [LossCell(s, mid, cfg, args.seed) for s in sw.strategies for mid in sw.loss_mids]
    holes = ordered_map(run_holes_cell, cells, sw.workers)
    traces = ordered_map(run_trace_cell, cells, sw.workers)
    out = Path(args.out)
    write_csv(out / "holes.csv", HOLES_HEADER, (r for rows in holes for r in rows))
    write_csv(out / "trace.csv", TRACE_HEADER, (r for events, _ in traces for r in events))
    write_csv(out / "overhead.csv", OVERHEAD_HEADER, (s for _, s in traces))
    print(f"wrote holes.csv, trace.csv and overhead.csv to {out}")
    return 0


def cmd_print_config(args, cfg: Config) -> int:
    sys.stdout.write(dumps_config(cfg))
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (defaults are built in)")
    common.add_argument("--seed", type=int, help="seed for generators and loss sampling")
    common.add_argument("--out", default="naqc-out", help="output directory (default: naqc-out)")
    common.add_argument("--workers", type=int, help="worker processes for sweeps (default from config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="naqc", description="Neutral-atom compiler and atom-loss simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", parents=[common], help="compile one circuit and write a schedule")
    c.add_argument("--circuit", help="naqc-circuit v1 file")
    c.add_argument("--benchmark", help="benchmark generator name")
    c.add_argument("--size", type=int)
    c.add_argument("--mid", type=float, help="maximum interaction distance (overrides config)")
    c.add_argument("--ideal-no-zones", action="store_true", help="re-time without restriction zones")
    c.add_argument("--decompose-toffolis", action="store_true")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("sweep-mid", parents=[common], help="gate count and depth over benchmark x size x MID")
    s.add_argument("--benchmark", type=_csv_list(str), help="comma-separated benchmarks")
    s.add_argument("--size", type=_csv_list(int), help="comma-separated sizes")
    s.add_argument("--mid", type=_csv_list(float), help="comma-separated MIDs")
    s.set_defaults(func=cmd_sweep_mid)

    e = sub.add_parser("sweep-error", parents=[common], help="success estimate over two-qubit error rates")
    e.add_argument("--benchmark", type=_csv_list(str))
    e.add_argument("--size", type=int)
    e.add_argument("--mid", type=float)
    e.set_defaults(func=cmd_sweep_error)

    lo = sub.add_parser("loss", parents=[common], help="sustained holes and timed runs per strategy")
    lo.add_argument("--benchmark")
    lo.add_argument("--size", type=int)
    lo.add_argument("--mid", type=_csv_list(float))
    lo.add_argument("--trials", type=int)
    lo.add_argument("--target-shots", type=int)
    lo.set_defaults(func=cmd_loss)

    pc = sub.add_parser("print-config", parents=[common], help="print the effective config")
    pc.set_defaults(func=cmd_print_config)
    return p


def _apply_overrides(args, cfg: Config) -> Config:
    sw = {}
    cmd = args.command
    if args.workers is not None:
        sw["workers"] = args.workers
    if args.seed is not None:
        sw["seeds"] = (args.seed,)
        cfg = replace(cfg, loss=replace(cfg.loss, seed=args.seed))
    if cmd == "sweep-mid":
        for flag, key in (("benchmark", "benchmarks"), ("size", "sizes"), ("mid", "mids")):
            if getattr(args, flag):
                sw[key] = getattr(args, flag)
    elif cmd == "sweep-error":
        for flag, key in (("benchmark", "error_benchmarks"), ("size", "error_size"), ("mid", "error_mid")):
            if getattr(args, flag) is not None:
                sw[key] = getattr(args, flag)
    elif cmd == "loss":
        for flag, key in (("benchmark", "loss_benchmark"), ("size", "loss_size"), ("mid", "loss_mids"),
                          ("trials", "trials"), ("target_shots", "target_shots")):
            if getattr(args, flag) is not None:
                sw[key] = getattr(args, flag)
    if sw:
        try:
            cfg = replace(cfg, sweep=replace(cfg.sweep, **sw))
        except (ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="naqc: %(levelname)s: %(message)s"
    )
    try:
        cfg = _apply_overrides(args, load_config(args.config))
        if args.seed is None:
            args.seed = cfg.sweep.seeds[0]
        return args.func(args, cfg)
    except USER_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"naqc: error: {msg}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"naqc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
