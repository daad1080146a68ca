import dataclasses
import json
import math

import numpy as np
import pytest

from confham import jsonio, svg
from confham.cli import main
from confham.verify import run_verification, summary
from confham.catalog import instantiate_reduction
from confham.core import ModelParams


def _run(tmp_path, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    return main(["run", str(path), "--output", str(out), *extra]), out


def test_kepler_closure(tmp_path, capsys):
    code, out = _run(tmp_path, {"model": {"name": "kepler", "n": 2}, "task": "closure", "seed": 7})
    assert code == 0
    report = json.loads((out / "closure.json").read_text())
    assert report["verdict"] == "closed"
    assert report["rational"] == "1/1"


def test_invalid_k_exits_2(tmp_path, capsys):
    code, _ = _run(tmp_path, {"model": {"n": 2, "k": 0, "s": 1}, "task": "eval"})
    assert code == 2
    assert "k" in capsys.readouterr().err.split(":")[1]


@pytest.mark.parametrize(
    "config, field",
    [
        ({"model": {"n": 2, "k": 1, "s": 1}, "task": "dance"}, "task"),
        ({"task": "eval"}, "model"),
        ({"model": {"n": 2, "k": 1, "s": 1}, "task": "eval", "colour": 1}, "colour"),
        ({"model": {"name": "nope"}, "task": "eval"}, "name"),
        ({"model": {"n": 2, "k": 1, "s": 1}, "task": "integrate", "options": {"h": -1}}, "h"),
    ],
)
def test_config_errors_name_the_field(tmp_path, capsys, config, field):
    code, _ = _run(tmp_path, config)
    assert code == 2
    assert field in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_domain_error_exits_1(tmp_path, capsys):
    config = {"model": {"n": 2, "k": 2, "s": 1}, "task": "eval", "options": {"state": {"x": [0, 0], "p": [1, 0]}}}
    code, _ = _run(tmp_path, config)
    assert code == 1


def test_ttw_verify_passes(tmp_path, capsys):
    code, out = _run(tmp_path, {"model": {"name": "ttw", "k": 2}, "task": "verify"})
    assert code == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "PASS"
    records = [json.loads(line) for line in (out / "verify.jsonl").read_text().splitlines()]
    checks = {r["check"] for r in records}
    assert {"reduction_identity", "bracket", "conservation", "symplectic_defect"} <= checks
    assert all(r["pass"] for r in records)


def test_verify_catalog_entries_pass():
    for name in ("sw2", "kepler", "rosochatius"):
        entry = instantiate_reduction(name, {"n": 3} if name != "sw2" else {})
        records = run_verification(entry.params, entry)
        assert summary(records) == "PASS", [r for r in records if not r["pass"]]


def test_verify_flags_a_wrong_reduction():
    entry = instantiate_reduction("sw2", {"omega": 1.0})
    wrong = dataclasses.replace(entry, params=entry.params.replace(omegas=[1.5, 1.0]))
    records = run_verification(wrong.params, wrong)
    assert summary(records) == "FAIL"
    assert not next(r for r in records if r["check"] == "reduction_identity")["pass"]


def test_eval_prints_breakdown(tmp_path, capsys):
    config = {"model": {"n": 2, "k": 2, "s": 1, "alphas": [1, 1]}, "task": "eval",
              "options": {"state": {"x": [1, 1], "p": [1, 0]}}}
    code, _ = _run(tmp_path, config)
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["total"] == pytest.approx(math.sqrt(2) * 2.625, rel=1e-14)


def test_integrate_outputs(tmp_path):
    config = {"model": {"name": "harmonic", "n": 2}, "task": "integrate",
              "options": {"t_max": 2.0, "h": 1e-2, "stride": 5}}
    code, out = _run(tmp_path, config)
    assert code == 0
    lines = (out / "trajectory.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["method"] == "midpoint4"
    assert set(json.loads(lines[1])) == {"t", "x", "p", "H"}
    assert json.loads(lines[-1])["t"] == pytest.approx(2.0)
    assert (out / "orbit.svg").read_text().startswith("<svg")


def test_spectrum_outputs(tmp_path):
    config = {"model": {"n": 1, "k": 1, "s": 1}, "task": "spectrum",
              "options": {"box": [[-8, 8]], "points": [201], "count": 3}}
    code, out = _run(tmp_path, config)
    assert code == 0
    assert (out / "spectrum.csv").read_text().splitlines()[0] == "index,eigenvalue,cluster_id"
    assert json.loads((out / "spectrum.json").read_text())["grid"]["points"] == [201]
    assert "<svg" in (out / "levels.svg").read_text()


def test_scan_is_byte_identical(tmp_path):
    config = {"model": {"n": 2, "k": 1, "s": 1, "alphas": [0.05, 0.05]}, "task": "scan", "seed": 3,
              "options": {"k_grid": [1, 2], "s_grid": [1], "n_ic": 2, "n_periods": 20}}
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    code_a, out_a = _run(tmp_path / "a", config)
    code_b, out_b = _run(tmp_path / "b", config)
    assert code_a == code_b == 0
    for name in ("scan.csv", "scan.svg"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_override_changes_draw(tmp_path):
    config = {"model": {"name": "kepler", "n": 2}, "task": "eval", "seed": 1}
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    _, out_a = _run(tmp_path / "a", config)
    _, out_b = _run(tmp_path / "b", config, "--seed", "2")
    assert (out_a / "eval.json").read_text() != (out_b / "eval.json").read_text()


def test_jsonio_round_trip():
    values = [0.1, 1 / 3, 1e-300, 2.0**60, -0.0]
    text = jsonio.dumps({"v": values, "n": 3, "ok": True, "s": "a\"b"})
    back = json.loads(text)
    assert back["v"] == values
    assert back["ok"] is True and back["s"] == 'a"b'
    assert jsonio.dumps([math.nan, math.inf]) == "[null,null]"
    assert jsonio.dumps(np.array([1.5, 2.5])) == "[1.5,2.5]"


def test_svg_is_deterministic():
    t = np.linspace(0, 2 * np.pi, 50)
    a = svg.polyline(np.cos(t), np.sin(t), title="circle")
    assert a == svg.polyline(np.cos(t), np.sin(t), title="circle")
    assert a.count("<polyline") == 1
    heat = svg.heatmap([1.0, 2.0], [0.5], np.array([[0.5], [np.nan]]))
    assert "nan" in heat and heat.count("<rect") == 3
    lv = svg.level_diagram([1, 2, 2], [(1.0, 1), (2.0, 2)])
    assert lv.count("<line") == 2
