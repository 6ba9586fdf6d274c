import json
import math
import pathlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weylherm.cli import build_parser, main
from weylherm.config import ConfigError, parse_config, parse_text

SMALL = """\
# tiny desk run
potential.kind = quartic
potential.chi = 0.5
grid.x_min = -4
grid.x_max = 4
grid.nx = 64
grid.scheme = central4
basis.n_modes = 6
evolution.dt = 1e-3
evolution.t_final = 0.02
evolution.snapshot_every = 5
"""


def test_defaults_and_overrides():
    cfg = parse_text("potential.kind = harmonic\n")
    assert cfg["evolution.scheme"] == "rk4"
    assert cfg["evolution.t_final"] == pytest.approx(2 * math.pi)
    assert cfg["grid.nx"] == 512
    cfg = parse_text(SMALL)
    assert cfg["grid.nx"] == 64 and cfg["basis.n_modes"] == 6
    assert cfg.grid().dx == 0.125
    assert cfg.potential().chi == 0.5
    assert cfg.evolution().dt == 1e-3


@pytest.mark.parametrize(
    "text,value", [("2pi", 2 * math.pi), ("2*pi", 2 * math.pi), ("pi/2", math.pi / 2), ("pi", math.pi), ("1.5", 1.5)]
)
def test_pi_expressions(text, value):
    assert parse_text(f"potential.kind = harmonic\nevolution.t_final = {text}\n")["evolution.t_final"] == pytest.approx(value)


@given(st.floats(0.001, 1e3))
def test_float_round_trip(v):
    assert parse_text(f"potential.kind = harmonic\nevolution.t_final = {v!r}\n")["evolution.t_final"] == v


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("potential.kind = harmonic\ngrid.nx = many\n", "grid.nx", 2),
        ("potential.kind = harmonic\ngrid.nx = 4\n", "grid.nx", 2),
        ("potential.kind = harmonic\ngrid.size = 4\n", "grid.size", 2),
        ("potential.kind = harmonic\npotential.kind = quartic\n", "potential.kind", 2),
        ("potential.kind = cubic\n", "potential.kind", 1),
        ("potential.kind = harmonic\nevolution.scheme = euler\n", "evolution.scheme", 2),
    ],
)
def test_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.key == key and info.value.line == line
    assert key in str(info.value) and f"line {line}" in str(info.value)


def test_structural_errors():
    with pytest.raises(ConfigError, match="missing required key potential.kind"):
        parse_text("grid.nx = 64\n")
    with pytest.raises(ConfigError, match="section.key"):
        parse_text("potential.kind harmonic\n")
    with pytest.raises(ConfigError, match="strictly increasing"):
        parse_text("potential.kind = quartic\nconverge.mode_list = 8, 8, 16\n", "converge")
    with pytest.raises(ConfigError, match="reference_modes"):
        parse_text("potential.kind = quartic\nconverge.reference_modes = 30\n", "converge")
    with pytest.raises(ConfigError, match="hbar_list"):
        parse_text("potential.kind = quartic\nsweep.hbar_list = 0.1, 0.2\n", "hbar_sweep")
    with pytest.raises(ConfigError, match="harmonic"):
        parse_text("potential.kind = quartic\n", "periodicity")
    with pytest.raises(ConfigError, match="even"):
        parse_text("potential.kind = quartic\ngrid.scheme = spectral_fourier\ngrid.nx = 63\n")
    assert parse_text("", "periodicity")["potential.kind"] == "harmonic"


def test_full_scale_overrides():
    cfg = parse_text("potential.kind = quartic\n", "converge", full_scale=True)
    assert cfg["evolution.dt"] == 1e-4
    assert cfg["converge.reference_modes"] == 500
    assert cfg["grid.nx"] == 8000


def test_checksum_tracks_values():
    a = parse_text(SMALL)
    b = parse_text(SMALL + "evolution.hbar = 0.2\n")
    assert a.checksum() == parse_text(SMALL).checksum()
    assert a.checksum() != b.checksum()
    assert a.checksum(["grid.nx"]) == b.checksum(["grid.nx"])


def test_help_lists_keys(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "--help"])
    out = capsys.readouterr().out
    assert "grid.nx" in out and "potential.kind" in out


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_cli_bad_config_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "potential.kind = harmonic\ngrid.nx = x\n")
    assert main(["simulate", "--config", cfg]) == 2
    assert "grid.nx" in capsys.readouterr().err


def test_cli_simulate(tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", _write(tmp_path, SMALL + "diagnostics.nm_max = 1\n"), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["results"]["steps"] == 20
    assert summary["results"]["l2_relative_drift"] < 1e-6
    assert set(summary["files"]) == {"diagnostics", "final_snapshot", "plot"}
    header = (out / "diagnostics.csv").read_text().splitlines()[0]
    assert header.endswith(",n1")
    assert "summary:" in capsys.readouterr().out


CONVERGE = SMALL + "converge.mode_list = 2, 4, 6\nconverge.reference_modes = 10\n"


def test_cli_converge_deterministic_and_cached(tmp_path):
    cfg = _write(tmp_path, CONVERGE)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["converge", "--config", cfg, "--out", str(a)]) == 0
    assert main(["converge", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "converge.csv").read_bytes() == (b / "converge.csv").read_bytes()
    first = json.loads((a / "summary.json").read_text())["results"]
    assert not first["reference_from_cache"]
    rows = (a / "converge.csv").read_text().splitlines()
    assert rows[0] == "N,error,order" and rows[1].endswith(",")
    # second run in the same directory reuses the cached reference and reproduces the table
    assert main(["converge", "--config", cfg, "--out", str(a)]) == 0
    again = json.loads((a / "summary.json").read_text())["results"]
    assert again["reference_from_cache"]
    assert again["rows"] == first["rows"]


def test_cli_hbar_sweep_and_periodicity(tmp_path):
    sweep = _write(tmp_path, SMALL + "sweep.t_final = 0.01\n", "sweep.cfg")
    assert main(["hbar-sweep", "--config", sweep, "--out", str(tmp_path / "s")]) == 0
    res = json.loads((tmp_path / "s" / "summary.json").read_text())["results"]
    assert len(res["rows"]) == 3
    period = _write(
        tmp_path,
        "grid.nx = 64\nbasis.n_modes = 4\nevolution.scheme = implicit_midpoint\nevolution.dt = 0.05\n",
        "period.cfg",
    )
    assert main(["periodicity", "--config", period, "--out", str(tmp_path / "p")]) == 0
    res = json.loads((tmp_path / "p" / "summary.json").read_text())["results"]
    assert res["relative_return_error"] < 1e-1
    quartic = _write(tmp_path, "potential.kind = quartic\n", "bad.cfg")
    assert main(["periodicity", "--config", quartic]) == 2


@pytest.mark.parametrize(
    "name,experiment",
    [
        ("simulate_quartic", "simulate"),
        ("converge_quartic", "converge"),
        ("hbar_sweep", "hbar_sweep"),
        ("periodicity", "periodicity"),
    ],
)
def test_shipped_configs_parse(name, experiment):
    root = pathlib.Path(__file__).resolve().parent.parent / "configs"
    cfg = parse_config(root / f"{name}.cfg", experiment)
    assert cfg.experiment == experiment
