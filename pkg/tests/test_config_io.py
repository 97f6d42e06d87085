import json

import numpy as np
import pytest

from pilot_dirac.config import load_config, parse_config
from pilot_dirac.errors import ConfigError
from pilot_dirac.io import OutputTree, fmt, read_csv, read_manifest, sha256


def test_defaults_and_values():
    cfg = parse_config("solver.dt = 0.002\nsolver.mode = coupled  # trailing\n\nemit.plots = yes\n")
    assert cfg["solver.dt"] == 0.002
    assert cfg.mode.value == "coupled"
    assert cfg["emit.plots"] is True
    assert cfg["grid.nx"] == 1024
    assert cfg.lines["solver.mode"] == 2


@pytest.mark.parametrize("text,key,line", [
    ("solver.dt = 0", "solver.dt", 1),
    ("\nsolver.dt = -1", "solver.dt", 2),
    ("solver.steps = 2.5", "solver.steps", 1),
    ("bogus.key = 1", "bogus.key", 1),
    ("grid.nx = 1000", "grid.nx", 1),
    ("solver.mode = warp", "solver.mode", 1),
    ("scenario.width = 50", "scenario.width", 1),
    ("solver.mode = coupled\nsolver.k = 0", "solver.k", 2),
    ("solver.dt = 0.1\nsolver.dt = 0.2", "solver.dt", 2),
    ("emit.plots = maybe", "emit.plots", 1),
])
def test_errors_name_line_and_key(text, key, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "x.cfg")
    assert exc.value.key == key
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value) and key in str(exc.value)


def test_missing_equals():
    with pytest.raises(ConfigError) as exc:
        parse_config("solver.dt 0.1")
    assert exc.value.line == 1


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.cfg")


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17, np.float64(np.pi)):
        assert float(fmt(v)) == float(v)
    assert fmt(3) == "3" and fmt(True) == "1"


def test_output_tree_manifest(tmp_path):
    tree = OutputTree(tmp_path / "out")
    tree.write_csv("a.csv", ("t", "x"), [(0.1, 1 / 3), (0.2, np.float64(2.0))])
    tree.write_json("b.json", {"v": np.float64(0.5), "arr": np.arange(3), "bad": float("inf")})
    tree.write_manifest()
    files = read_manifest(tmp_path / "out")
    assert sorted(files) == ["a.csv", "b.json"]
    assert files["a.csv"] == sha256(tmp_path / "out" / "a.csv")
    header, data = read_csv(tmp_path / "out" / "a.csv")
    assert header == ["t", "x"] and data[0, 1] == 1 / 3
    body = json.loads((tmp_path / "out" / "b.json").read_text())
    assert body == {"arr": [0, 1, 2], "bad": "inf", "v": 0.5}
    # reopening keeps earlier entries
    again = OutputTree(tmp_path / "out")
    again.write_csv("c.csv", ("t",), [])
    again.write_manifest()
    assert sorted(read_manifest(tmp_path / "out")) == ["a.csv", "b.json", "c.csv"]
    _, empty = read_csv(tmp_path / "out" / "c.csv")
    assert empty.shape == (0, 1)
