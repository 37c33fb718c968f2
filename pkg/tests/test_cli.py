import hashlib
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from parabolic_scales import __version__
from parabolic_scales.cli import run
from parabolic_scales.cr import CRSample
from parabolic_scales.legendrean import LegendreanSample


def _config(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _fixture(tmp_path, name, samples, geometry="legendrean"):
    doc = {"geometry": geometry, "n": samples[0].n, "samples": [s.to_json() for s in samples]}
    return _config(tmp_path, name, doc)


SYMALG = [
    {"geometry": "conformal", "model": "line", "n": 3},
    {"geometry": "conformal", "model": "circle", "n": 5, "U": [0, 1, 0, 0, 0], "C": [1, 0, 0, 0, 0]},
    {"geometry": "legendrean", "n": 4},
    {"geometry": "cr", "n": 2, "U": [1, 0.5]},
]


@pytest.mark.parametrize("body", SYMALG, ids=lambda b: f"{b['geometry']}-{b['n']}")
def test_symalg_reports(tmp_path, body):
    doc = {"command": "symalg", "id": "s", **body}
    code, out, _ = _run("symalg", "--config", _config(tmp_path, "s.json", doc))
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"id", "command", "passed", "payload", "seed", "tolerances",
                           "tool_version", "config_hash"}
    assert report["tool_version"] == __version__
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    assert report["config_hash"] == hashlib.sha256(canon.encode()).hexdigest()
    assert report["payload"]["constraints_hold"]


def test_reports_are_deterministic(tmp_path):
    doc = {"command": "check", "kind": "closure", "metric": {"name": "round_sphere"},
           "curves": 2, "length": 0.3, "step": 0.005, "seed": 4}
    path = _config(tmp_path, "c.json", doc)
    first, second = _run("check", "--config", path), _run("check", "--config", path)
    assert first[0] == 0 and first[1] == second[1]
    other = _run("check", "--config", path, "--seed", "5")
    assert json.loads(other[1])["seed"] == 5 and other[1] != first[1]


def test_integrate_writes_report_and_trajectory(tmp_path):
    doc = {"command": "integrate", "id": "circle", "metric": {"name": "flat", "params": {"n": 3}},
           "mode": "conformal_circle", "initial": {"x": [0, 0, 0], "U": [1, 0, 0], "C": [0, 1, 0]},
           "closed_form": "flat_circle", "length": 6.283185307179586, "step": 1e-3}
    out = tmp_path / "results"
    code, stdout, _ = _run("integrate", "--config", _config(tmp_path, "i.json", doc), "--out", out)
    assert code == 0 and stdout == ""
    report = json.loads((out / "circle.report.json").read_text())
    assert report["payload"]["closed_form_deviation"] < 1e-6
    lines = (out / "circle.trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,U1,U2,U3,C1,C2,C3,normE"
    assert len(lines) == report["payload"]["samples"] + 1


def test_surface_circles_are_rejected(tmp_path):
    # the circle equation needs a Schouten tensor, which surfaces do not have
    doc = {"command": "integrate", "metric": {"name": "flat", "params": {"n": 2}},
           "mode": "conformal_circle", "initial": {"x": [0, 0], "U": [1, 0], "C": [0, 1]}}
    code, _, err = _run("integrate", "--config", _config(tmp_path, "i2.json", doc))
    assert code == 2 and "n >= 3" in err


def test_tolerance_override_can_fail_a_run(tmp_path):
    doc = {"command": "integrate", "metric": {"name": "round_sphere"}, "mode": "geodesic",
           "initial": {"x": [0.1, 0, 0], "U": [0, 1, 0]}, "closed_form": "great_circle",
           "length": 1.0, "step": 0.01}
    path = _config(tmp_path, "g.json", doc)
    assert _run("integrate", "--config", path)[0] == 0
    code, out, _ = _run("integrate", "--config", path, "--tol", "1e-16")
    assert code == 1
    assert json.loads(out)["tolerances"] == {"closed_form": 1e-16, "residual": 1e-16}


def test_failed_check_exits_one(tmp_path):
    doc = {"command": "check", "kind": "einstein",
           "metric": {"name": "perturbed_diagonal", "params": {"n": 4}}, "points": 4}
    code, out, _ = _run("check", "--config", _config(tmp_path, "p.json", doc))
    assert code == 1
    assert json.loads(out)["payload"]["is_einstein"] is False


def test_fixture_checks(tmp_path):
    _fixture(tmp_path, "one.json", [LegendreanSample.einstein(3, 1.0)] * 2)
    h = np.diag([1.0, 1.0, -1.0])
    _fixture(tmp_path, "cr.json", [CRSample.einstein(3, -2.0, h)], geometry="cr")
    ok = {"command": "check", "kind": "legendrean", "fixture": "one.json", "expect_lambda": 1.0,
          "directions": 3}
    code, out, _ = _run("check", "--config", _config(tmp_path, "ok.json", ok))
    assert code == 0
    payload = json.loads(out)["payload"]
    assert payload["directions_distinguished"] == payload["directions_tested"] == 6
    wrong = {**ok, "expect_lambda": 0.0}
    assert _run("check", "--config", _config(tmp_path, "wrong.json", wrong))[0] == 1
    cr = {"command": "check", "kind": "cr", "fixture": "cr.json", "expect_lambda": -2.0}
    assert _run("check", "--config", _config(tmp_path, "crc.json", cr))[0] == 0


def test_configuration_errors_exit_two(tmp_path):
    bad = _config(tmp_path, "bad.json", {"command": "integrate", "metric": {"name": "flat"},
                                         "mode": "geodesic", "initial": {"x": [0, 0, 0], "U": "up"}})
    code, out, err = _run("integrate", "--config", bad)
    assert code == 2 and out == ""
    assert "bad.json:" in err and "(at initial.U)" in err
    other = _config(tmp_path, "sym.json", {"command": "symalg", "geometry": "cr", "n": 2})
    code, _, err = _run("integrate", "--config", other)
    assert code == 2 and "not 'integrate'" in err
    short = _config(tmp_path, "short.json", {"command": "integrate", "metric": {"name": "flat"},
                                             "mode": "geodesic", "initial": {"x": [0, 0], "U": [1, 0]}})
    assert _run("integrate", "--config", short)[0] == 2
    null = _config(tmp_path, "null.json", {"command": "symalg", "geometry": "legendrean", "n": 2,
                                           "U": [1, 0], "V": [0, 1]})
    assert _run("symalg", "--config", null)[0] == 2


def test_numerical_breakdown_exits_three(tmp_path):
    zero = [[0, 0], [0, 0]]
    doc = {"geometry": "cr", "n": 2, "h": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
           "samples": [{"P": [zero, zero], "A": [zero, zero], "T": [[0, 0], [0, 0]]}]}
    _config(tmp_path, "degenerate.json", doc)
    cfg = _config(tmp_path, "d.json", {"command": "check", "kind": "cr", "fixture": "degenerate.json"})
    code, _, err = _run("check", "--config", cfg)
    assert code == 3 and "Levi form" in err


def test_suite_with_fixtures(tmp_path):
    _fixture(tmp_path, "one.json", [LegendreanSample.einstein(2, 1.0)])
    _fixture(tmp_path, "zero.json", [LegendreanSample.zero(2)])
    doc = {"command": "suite", "criteria": [9, 10],
           "fixtures": {"lambda_one": ["one.json"], "lambda_zero": ["zero.json"]}}
    code, out, err = _run("suite", "--config", _config(tmp_path, "suite.json", doc), "--tol", "0.5")
    assert code == 0
    report = json.loads(out)
    assert report["payload"]["skipped"] == []
    assert report["payload"]["tolerance_override_ignored"] is True
    assert "[PASS] criterion 10" in err
    swapped = {**doc, "fixtures": {"lambda_one": ["zero.json"]}}
    assert _run("suite", "--config", _config(tmp_path, "swap.json", swapped))[0] == 1


def test_suite_records_skip_without_fixtures(tmp_path):
    doc = {"command": "suite", "criteria": [10]}
    code, out, err = _run("suite", "--config", _config(tmp_path, "s.json", doc))
    assert code == 0
    report = json.loads(out)
    assert report["payload"]["skipped"] == [10]
    assert report["payload"]["criteria"][0]["details"]["skip_reason"]
    assert "[SKIP] criterion 10" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "parabolic_scales", "--version"],
                         capture_output=True, text=True, check=True)
    assert __version__ in res.stdout
