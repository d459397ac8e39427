"""INI-style run configuration: one section per component plus the sweep grid.

Every key has an embedded default, so an empty file is a valid config.
Lists are comma-separated. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .circuit import canonical_benchmark
from .fidelity import ErrorParams
from .lossim import LossModel, MeasurementMode, StrategyKind, TimingModel
from .topology import GridSpec

__all__ = ["Config", "SweepConfig", "ConfigError", "load_config", "parse_config", "dumps_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message if lineno is None else f"line {lineno}: {message}")
        self.lineno = lineno


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


@dataclass(frozen=True)
class SweepConfig:
    # sweep-mid
    benchmarks: tuple[str, ...] = ("bv", "cuccaro", "cnu", "qft_adder", "qaoa")
    sizes: tuple[int, ...] = (10, 30, 50)
    mids: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    qaoa_density: float = 0.1
    # sweep-error
    error_benchmarks: tuple[str, ...] = ("bv", "cuccaro", "cnu", "qft_adder", "qaoa")
    error_size: int = 50
    error_mid: float = 3.0
    p2_values: tuple[float, ...] = (0.9, 0.95, 0.965, 0.98, 0.99, 0.995, 0.999, 1.0)
    threshold: float = 2 / 3
    p3_exponent: float | None = 4.0  # p3 = p2**k while sweeping p2; none holds p3 fixed
    # loss
    loss_benchmark: str = "cuccaro"
    loss_size: int = 30
    loss_mids: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0, 6.0)
    strategies: tuple[str, ...] = tuple(k.value for k in StrategyKind)
    trials: int = 20
    target_shots: int = 200
    seeds: tuple[int, ...] = (0,)
    workers: int = 1

    def __post_init__(self):
        for name in self.benchmarks + self.error_benchmarks + (self.loss_benchmark,):
            canonical_benchmark(name)
        for s in self.strategies:
            StrategyKind(s)
        if not self.sizes or any(n < 1 for n in self.sizes + (self.error_size, self.loss_size)):
            raise ValueError("sizes must be positive")
        if any(m < 1 for m in self.mids + self.loss_mids + (self.error_mid,)):
            raise ValueError("interaction distances must be >= 1")
        if any(not 0 < p <= 1 for p in self.p2_values):
            raise ValueError("p2 values must lie in (0, 1]")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")
        if not 0 < self.qaoa_density <= 1:
            raise ValueError("qaoa_density must lie in (0, 1]")
        if self.trials < 1 or self.target_shots < 1 or self.workers < 1 or not self.seeds:
            raise ValueError("trials, target_shots and workers must be >= 1 and seeds nonempty")


@dataclass(frozen=True)
class Config:
    grid: GridSpec = GridSpec(10, 10, 3.0)
    error: ErrorParams = ErrorParams()
    loss: LossModel = LossModel()
    # a fixed recompile cost keeps traces reproducible; "measured" in the file selects wall time
    timing: TimingModel = TimingModel(t_recompile=1.0)
    sweep: SweepConfig = field(default_factory=SweepConfig)


_SECTIONS = {
    "hardware": ("grid", GridSpec, {"width": int, "height": int, "mid": float, "zone_divisor": float}),
    "error": ("error", ErrorParams, {f.name: float for f in fields(ErrorParams)}),
    "loss": ("loss", LossModel, {
        "p_vacuum": float, "measurement_mode": MeasurementMode,
        "p_measure_override": float, "seed": int,
    }),
    "timing": ("timing", TimingModel, {f.name: float for f in fields(TimingModel)}),
    "sweep": ("sweep", SweepConfig, {}),
}

_SWEEP_TYPES = {tuple[str, ...]: _names, tuple[int, ...]: _ints, tuple[float, ...]: _floats}


def _sweep_parser(name: str):
    hint = {f.name: f.type for f in fields(SweepConfig)}[name]
    if isinstance(hint, str):  # postponed annotations
        hint = {"tuple[str, ...]": tuple[str, ...], "tuple[int, ...]": tuple[int, ...],
                "tuple[float, ...]": tuple[float, ...], "int": int, "float": float, "str": str,
                "float | None": float}[hint]
    return _SWEEP_TYPES.get(hint, hint)


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key = value`` for error messages."""
    out: dict[tuple[str, str], int] = {}
    section = ""
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
        elif line and line[0] not in "#;" and ("=" in line or ":" in line):
            key = line.split("=", 1)[0].split(":", 1)[0].strip()
            out[(section, key)] = i
    return out


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (T1_ground)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " "), getattr(exc, "lineno", None)) from None
    where = _key_lines(text)
    cfg = Config()
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        attr, cls, types = _SECTIONS[section]
        values = {}
        for key, raw in cp.items(section):
            lineno = where.get((section, key))
            if section == "sweep":
                if key not in {f.name for f in fields(SweepConfig)}:
                    raise ConfigError(f"unknown key {key!r} in [sweep]", lineno)
                conv = _sweep_parser(key)
            elif key not in types:
                raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
            else:
                conv = types[key]
            raw = raw.strip()
            try:
                if section == "timing" and key == "t_recompile" and raw.lower() in ("measured", "none", ""):
                    values[key] = None
                elif key in ("p_measure_override", "p3_exponent") and raw.lower() in ("none", ""):
                    values[key] = None
                else:
                    values[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        try:
            block = replace(getattr(cfg, attr), **values)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from None
        cfg = replace(cfg, **{attr: block})
    return cfg


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _fmt(v) -> str:
    if v is None:
        return "measured"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, MeasurementMode):
        return v.value
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def dumps_config(cfg: Config) -> str:
    """The config as a file that :func:`parse_config` reads back unchanged."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, (attr, cls, types) in _SECTIONS.items():
        obj = getattr(cfg, attr)
        names = [f.name for f in fields(cls)] if section == "sweep" else list(types)
        cp[section] = {}
        for name in names:
            v = getattr(obj, name)
            if name in ("p_measure_override", "p3_exponent") and v is None:
                v = "none"
            cp[section][name] = _fmt(v)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
