import csv
import math

import pytest

from naqc import cli
from naqc.circuit import build_bv, dumps_circuit
from naqc.config import Config, ConfigError, dumps_config, parse_config
from naqc.lossim import MeasurementMode


def run(capsys, *argv):
    rc = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SMALL = """
[sweep]
benchmarks = bv, cuccaro
sizes = 6, 10
mids = 1, 2, 3
error_benchmarks = bv, cuccaro
error_size = 10
p2_values = 0.95, 0.99, 1.0
loss_benchmark = cuccaro
loss_size = 10
loss_mids = 3
strategies = AlwaysReload, VirtualRemap, MinorReroute, AlwaysRecompile
trials = 3
target_shots = 20
"""


# ---------------------------------------------------------------- config


def test_empty_config_is_default():
    assert parse_config("") == Config()


def test_round_trip():
    cfg = parse_config(SMALL + "\n[hardware]\nmid = 2.5\n[error]\nT1_ground = 2.0\n[loss]\nmeasurement_mode = ejection\n")
    assert cfg.grid.mid == 2.5 and cfg.error.T1_ground == 2.0
    assert cfg.loss.measurement_mode is MeasurementMode.EJECTION
    assert parse_config(dumps_config(cfg)) == cfg
    assert parse_config(dumps_config(Config())) == Config()


def test_measured_recompile_time():
    assert parse_config("[timing]\nt_recompile = measured\n").timing.t_recompile is None
    assert Config().timing.t_recompile == 1.0


@pytest.mark.parametrize(
    "text,line",
    [
        ("[hardware]\nwidth = 10\nbogus = 1\n", 3),
        ("\n[hardware]\nmid = abc\n", 3),
        ("[sweep]\nsizes = 10, x\n", 2),
        ("[nosuch]\n", None),
        ("[sweep]\nbenchmarks = grover\n", None),
        ("[hardware]\nmid = 0.5\n", None),
    ],
)
def test_config_errors(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.lineno == line
    if line:
        assert str(exc.value).startswith(f"line {line}:")


# ---------------------------------------------------------------- cli


def test_compile_full_mid(tmp_path, capsys):
    rc, out, _ = run(capsys, "compile", "--benchmark", "bv", "--size", 10, "--mid", 13, "--out", tmp_path)
    assert rc == 0
    assert "swaps=0" in out
    assert (tmp_path / "bv_10_mid13.sched").read_text().startswith("naqc-sched v1")


def test_compile_ideal_same_gates(tmp_path, capsys):
    _, real, _ = run(capsys, "compile", "--benchmark", "cuccaro", "--size", 20, "--mid", 2, "--out", tmp_path)
    _, ideal, _ = run(capsys, "compile", "--benchmark", "cuccaro", "--size", 20, "--mid", 2, "--ideal-no-zones",
                      "--out", tmp_path)
    field = lambda s, k: int(s.split(f"{k}=")[1].split()[0])
    assert field(real, "gates") == field(ideal, "gates") and field(real, "swaps") == field(ideal, "swaps")
    assert field(ideal, "depth") <= field(real, "depth")


def test_compile_circuit_file(tmp_path, capsys):
    path = tmp_path / "bv.txt"
    path.write_text(dumps_circuit(build_bv(6)))
    rc, out, _ = run(capsys, "compile", "--circuit", path, "--mid", 1, "--out", tmp_path)
    assert rc == 0 and out.startswith("gates=")


def test_malformed_circuit_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("naqc-circuit v1\nqubits 2\nCX 0,7\nmeasure 0\n")
    rc, _, err = run(capsys, "compile", "--circuit", path, "--out", tmp_path)
    assert rc == 1 and "line 3" in err


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run(capsys, "compile", "--benchmark", "bv", "--size", 500, "--out", tmp_path)[0] == 1
    assert run(capsys, "compile", "--benchmark", "cuccaro", "--size", 5, "--out", tmp_path)[0] == 1
    assert run(capsys, "compile", "--benchmark", "nosuch", "--size", 5, "--out", tmp_path)[0] == 1
    assert run(capsys, "print-config", "--config", tmp_path / "missing.ini")[0] == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 1


def test_bad_config_file_names_line(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[hardware]\nwidth = 10\nheight = ten\n")
    rc, _, err = run(capsys, "print-config", "--config", cfg)
    assert rc == 1 and "line 3" in err


def test_invariant_failure_exit_two(tmp_path, capsys, monkeypatch):
    monkeypatch.setattr(cli, "verify_report", lambda *a: ["zone overlap at timestep 0"])
    rc, _, err = run(capsys, "compile", "--benchmark", "bv", "--size", 6, "--out", tmp_path)
    assert rc == 2 and "verification" in err


def test_print_config_round_trip(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    rc, out, _ = run(capsys, "print-config", "--config", cfg)
    assert rc == 0
    assert parse_config(out) == parse_config(SMALL)


def _all_outputs(tmp_path, capsys, name, workers=1):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL)
    out = tmp_path / name
    for cmd in ("sweep-mid", "sweep-error", "loss"):
        assert run(capsys, cmd, "--config", cfg, "--out", out, "--seed", 3, "--workers", workers)[0] == 0
    return out


def test_csvs_byte_identical(tmp_path, capsys):
    a = _all_outputs(tmp_path, capsys, "a")
    b = _all_outputs(tmp_path, capsys, "b", workers=2)
    names = sorted(p.name for p in a.iterdir())
    assert names == ["bv_crosscheck.csv", "holes.csv", "max_size.csv", "overhead.csv", "sweep_error.csv",
                     "sweep_mid.csv", "trace.csv"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_csv_schemas(tmp_path, capsys):
    out = _all_outputs(tmp_path, capsys, "a")
    mid = read(out / "sweep_mid.csv")
    assert tuple(mid[0]) == cli.MID_HEADER
    assert all(len(r) == len(mid[0]) for r in mid)
    # cuccaro at MID >= sqrt(2) appears native and decomposed, at MID 1 only decomposed
    cu = [r for r in mid[1:] if r[0] == "cuccaro" and r[1] == "10"]
    assert sorted((r[2], r[6]) for r in cu) == [("1.0", "0"), ("2.0", "0"), ("2.0", "1"), ("3.0", "0"), ("3.0", "1")]
    for mid_val in ("2.0", "3.0"):
        nat = next(r for r in cu if r[2] == mid_val and r[6] == "1")
        dec = next(r for r in cu if r[2] == mid_val and r[6] == "0")
        assert int(nat[3]) < int(dec[3]) and int(nat[4]) < int(dec[4])

    err = read(out / "sweep_error.csv")
    for bench in ("bv", "cuccaro"):
        rows = {float(r[3]): float(r[7]) for r in err[1:] if r[0] == bench}
        assert rows[1.0] == max(rows.values()) and 1 - rows[1.0] < 0.05
    sizes = read(out / "max_size.csv")
    for bench in ("bv", "cuccaro"):
        by_error = sorted((1 - float(r[2]), int(r[3])) for r in sizes[1:] if r[0] == bench)
        col = [n for _, n in by_error]
        assert col == sorted(col, reverse=True)
    for p2, closed, compiled in read(out / "bv_crosscheck.csv")[1:]:
        assert closed == compiled

    holes = read(out / "holes.csv")
    assert tuple(holes[0]) == cli.HOLES_HEADER and len(holes) == 1 + 4 * 3
    over = read(out / "overhead.csv")
    assert tuple(over[0]) == cli.OVERHEAD_HEADER
    for r in over[1:]:
        parts = sum(float(x) for x in r[3:7])
        assert parts <= float(r[2]) + 1e-9
    trace = read(out / "trace.csv")
    assert tuple(trace[0]) == cli.TRACE_HEADER
    for row in over[1:]:
        events = [t for t in trace[1:] if t[0] == row[0] and t[1] == row[1]]
        assert math.fsum(float(t[4]) for t in events) == pytest.approx(float(row[2]), abs=1e-9)


def test_zero_loss_means_no_reloads(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SMALL + "\n[loss]\np_vacuum = 0.0\np_measure_override = 0.0\n")
    assert run(capsys, "loss", "--config", cfg, "--out", tmp_path)[0] == 0
    over = read(tmp_path / "overhead.csv")
    assert over[1:] and all(r[7] == "0" for r in over[1:])


def test_single_cell_sweep_matches_compile(tmp_path, capsys):
    _, out, _ = run(capsys, "compile", "--benchmark", "qft_adder", "--size", 10, "--mid", 2, "--out", tmp_path)
    run(capsys, "sweep-mid", "--benchmark", "qft_adder", "--size", 10, "--mid", 2, "--out", tmp_path)
    row = read(tmp_path / "sweep_mid.csv")[1]
    assert out.strip() == f"gates={row[3]} depth={row[4]} swaps={row[5]}"
