import json
import math
import os

import pytest

from linlab.cli import (ConfigError, RunConfig, dispatch, emit_csv, main, parse_config,
                        serialize)
from linlab.extrange import TowerMagnitude
from linlab.growth import GrowthRecord, growth_series

WEB = [[-0.8, 0.157], [0, 0], [1, 0]]
SQUARE = [[0, 0], [0, 0], [1, 0]]


def run(tmp_path, doc, command=None):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    code = main([command or doc["command"], "--config", str(cfg), "--out", str(out)])
    return code, out


def test_parse_selects_web_point():
    cfg = parse_config(json.dumps({"command": "order", "map": WEB, "fixed_point": "auto-repelling"}))
    assert cfg.command == "order" and cfg.fixed_point_selector == "auto-repelling"
    assert cfg.params["samples"] == 64
    from linlab.linearizer import select_fixed_point
    fp = select_fixed_point(cfg.map_spec, cfg.fixed_point_selector)
    assert fp.point == pytest.approx(1.528 - 0.076j, abs=1e-3)


def test_parse_square():
    cfg = parse_config('{"command":"fixpoints","map":[[0,0],[0,0],[1,0]]}')
    assert cfg.map_spec.coefficients == (0j, 0j, 1 + 0j)


@pytest.mark.parametrize("doc,key,fragment", [
    ({"command": "fixpoints", "map": SQUARE, "fixed_point": 0}, "fixed_point",
     "selected fixed point is not repelling"),
    ({"command": "fixpoints"}, "map", "missing required key"),
    ({"map": SQUARE}, "command", "missing required key"),
    ({"command": "fixpoints", "map": SQUARE, "extra": 1}, "extra", "unknown key"),
    ({"command": "fixpoints", "map": [[0, 0], [0], [1, 0]]}, "map", "malformed complex pair"),
    ({"command": "radii", "map": WEB}, "R", "missing required key"),
    ({"command": "radii", "map": WEB, "R": -1}, "R", "positive number"),
    ({"command": "render", "map": WEB, "R": 20, "viewport": [1, 0, 0, 1]}, "viewport", "extent"),
    ({"command": "linearize", "map": WEB, "points": [[1, "x"]]}, "points", "malformed complex pair"),
    ({"command": "oracle-check", "map": WEB}, "map", "unknown key"),
    ({"command": "radii", "map": {"qr": {"stretch": 2, "power": 2}}, "R": 1}, "map", "holder"),
    ({"command": "fixpoints", "map": SQUARE, "scale": [0.5, 0]}, "scale", "modulus > 1"),
    ({"command": "nope"}, "command", "unknown command"),
])
def test_config_errors_name_the_key(doc, key, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(doc))
    assert exc.value.key == key
    assert fragment in str(exc.value)


def test_config_error_messages_are_distinct():
    msgs = set()
    for doc in ({"command": "fixpoints", "map": SQUARE, "fixed_point": 0},
                {"command": "fixpoints", "map": SQUARE, "extra": 1},
                {"command": "fixpoints"},
                {"command": "fixpoints", "map": [[0, 0], [0], [1, 0]]}):
        with pytest.raises(ConfigError) as exc:
            parse_config(doc)
        msgs.add(str(exc.value))
    assert len(msgs) == 4


def test_not_json():
    with pytest.raises(ConfigError):
        parse_config("{nope")


def test_roundtrip_examples():
    for doc in ({"command": "web", "map": WEB, "R": 20, "scale": [1.0, 2.0], "fixed_point": [1.528, -0.076]},
                {"command": "holder", "map": {"qr": {"stretch": 2, "power": 2}}},
                {"command": "oracle-check", "seed": 3},
                {"command": "render", "map": SQUARE, "fixed_point": 1, "R": 5,
                 "viewport": [-2, 2, -2, 2], "scale": "two"}):
        cfg = parse_config(json.dumps(doc))
        assert parse_config(serialize(cfg)) == cfg


def test_emit_csv_single(tmp_path):
    path = tmp_path / "s.csv"
    emit_csv([GrowthRecord(0.0, TowerMagnitude(0, 1.0), 256, False)], str(path))
    lines = path.read_text().splitlines()
    assert lines == ["log_r,tower_height,log_M_residual,samples", "0,0,1,256"]


def test_emit_csv_exp_series(tmp_path, exp_handle):
    path = tmp_path / "g.csv"
    emit_csv(growth_series(exp_handle, [math.log(10), math.log(20), math.log(40)]), str(path))
    rows = path.read_text().splitlines()[1:]
    assert [float(r.split(",")[2]) for r in rows] == pytest.approx([10, 20, 40], rel=1e-9)
    assert all(len(r.split(",")[0].replace(".", "").lstrip("0")) <= 12 for r in rows)


def test_emit_csv_empty(tmp_path):
    path = tmp_path / "e.csv"
    with pytest.raises(ValueError):
        emit_csv([], str(path))
    assert not path.exists()
    assert os.listdir(tmp_path) == []


def test_oracle_check_command(tmp_path):
    code, out = run(tmp_path, {"command": "oracle-check"})
    assert code == 0
    rep = json.loads((out / "oracle-check.json").read_text())
    assert max(rep["result"]["max_relative_error"].values()) <= 1e-9
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_code"] == 0 and "timings" in man and "versions" in man
    assert man["config"]["tolerance"] == 1e-9


def test_render_command_ppm_size(tmp_path):
    code, out = run(tmp_path, {"command": "render", "map": SQUARE, "fixed_point": 1, "R": 5,
                               "viewport": [-2, 2, -2, 2], "resolution": [16, 16], "depth": 3})
    assert code == 0
    data = (out / "render.ppm").read_bytes()
    header = b"P6\n16 16\n255\n"
    assert data.startswith(header) and len(data) == 3 * 256 + len(header)
    assert (out / "render.palette.json").exists()


def test_artifacts_byte_identical(tmp_path, monkeypatch):
    doc = {"command": "render", "map": WEB, "R": 20, "viewport": [-40, 40, -40, 40],
           "resolution": [24, 20], "depth": 4}
    for sub in "abcd":
        (tmp_path / sub).mkdir()
    code1, out1 = run(tmp_path / "a", doc)
    monkeypatch.setenv("LINLAB_THREADS", "3")
    code2, out2 = run(tmp_path / "b", doc)
    assert code1 == code2 == 0
    assert (out1 / "render.ppm").read_bytes() == (out2 / "render.ppm").read_bytes()
    growth = {"command": "growth", "map": WEB, "samples": 4}
    _, o3 = run(tmp_path / "c", growth)
    _, o4 = run(tmp_path / "d", growth)
    assert (o3 / "growth.csv").read_bytes() == (o4 / "growth.csv").read_bytes()


def test_exit_codes(tmp_path):
    # failing check: mu = 2 radii for exp from n = 0
    (tmp_path / "f").mkdir()
    code, out = run(tmp_path / "f", {"command": "radii", "map": SQUARE, "fixed_point": 1,
                                     "R": 10, "N": 2})
    assert code == 1
    assert json.loads((out / "radii.json").read_text())["verdict"] == "fail"
    # inconclusive: no continuum exists for exp
    (tmp_path / "i").mkdir()
    code, out = run(tmp_path / "i", {"command": "continuum", "map": SQUARE, "fixed_point": 1,
                                     "log_r": 3.0, "grid": [32, 64]})
    assert code == 2
    # config error: nothing but a message, exit 1
    (tmp_path / "e").mkdir()
    code, out = run(tmp_path / "e", {"command": "radii", "map": SQUARE, "fixed_point": 0, "R": 1})
    assert code == 1 and not out.exists()


def test_runtime_error_still_writes_manifest(tmp_path):
    cfg = parse_config({"command": "residuals", "map": WEB})
    cfg.params["n_points"] = -5          # bypasses validation to force a runtime failure
    code = dispatch(cfg, str(tmp_path))
    assert code == 1
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["verdict"] == "error" and man["exit_code"] == 1
    assert not (tmp_path / "residuals.json").exists()


def test_subcommand_mismatch(tmp_path):
    code, out = run(tmp_path, {"command": "fixpoints", "map": SQUARE}, command="periodic")
    assert code == 1


def test_command_defaults_from_subcommand(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"map": SQUARE}))
    assert main(["fixpoints", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0


def test_pits_command_writes_points(tmp_path):
    code, out = run(tmp_path, {"command": "pits", "map": WEB, "count": 3})
    assert code == 0
    lines = (out / "pits_points.csv").read_text().splitlines()
    assert lines[0] == "k,re,im,log_modulus,log_L_modulus" and len(lines) == 4


@pytest.mark.parametrize("doc", [
    {"command": "fixpoints", "map": WEB},
    {"command": "periodic", "map": WEB},
    {"command": "linearize", "map": WEB, "points": [[0.1, 0.2], [500, 0]]},
    {"command": "residuals", "map": WEB, "n_points": 100},
    {"command": "holder", "map": {"qr": {"stretch": 2, "power": 2}}, "j": 2},
    {"command": "web", "map": WEB, "R": 6.235149080811617e27, "N": 0, "grid": [256, 512]},
])
def test_commands_succeed(tmp_path, doc):
    code, out = run(tmp_path, doc)
    assert code == 0
    rep = json.loads((out / f"{doc['command']}.json").read_text())
    assert rep["verdict"] in ("pass", "success")


def test_runconfig_defaults():
    cfg = RunConfig("fixpoints")
    assert cfg.seed == 0 and cfg.scale == "multiplier"
