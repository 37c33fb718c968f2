import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_scales.cr import CRSample
from parabolic_scales.errors import ConfigError, SingularMetric, SpecMismatch
from parabolic_scales.legendrean import LegendreanSample
from parabolic_scales.schemas import load_config, load_fixture, value_lines

json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-100, 100) | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=5),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=4), inner, max_size=4),
    max_leaves=20,
)


def _paths(doc, prefix=()):
    yield prefix
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield from _paths(v, prefix + (k,))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            yield from _paths(v, prefix + (i,))


@settings(max_examples=60, deadline=None)
@given(json_values, st.integers(0, 4))
def test_value_lines_covers_every_path(doc, indent):
    text = json.dumps(doc, indent=indent or None)
    lines = value_lines(text)
    assert set(_paths(doc)) <= set(lines)
    n_lines = text.count("\n") + 1
    assert all(1 <= v <= n_lines for v in lines.values())


def test_value_lines_points_at_the_value():
    text = '{\n  "a": 1,\n  "b": [\n    2,\n    {"c": 3}\n  ]\n}'
    lines = value_lines(text)
    assert lines[("a",)] == 2
    assert lines[("b", 0)] == 4
    assert lines[("b", 1, "c")] == 5


def _write(path, text):
    path.write_text(text)
    return path


def test_config_errors_carry_file_and_line(tmp_path):
    text = ('{\n  "command": "integrate",\n  "metric": {"name": "flat"},\n  "mode": "geodesic",\n'
            '  "initial": {\n    "x": [0, 0, 0],\n    "U": [1, "a", 0]\n  },\n  "step": -1\n}\n')
    with pytest.raises(ConfigError) as err:
        load_config(_write(tmp_path / "bad.json", text))
    msg = str(err.value)
    assert "bad.json:7: 'a' is not of type 'number' (at initial.U.1)" in msg
    assert "bad.json:9:" in msg and "(at step)" in msg
    assert msg.index("bad.json:7") < msg.index("bad.json:9")


def test_config_rejects_unknown_keys_and_commands(tmp_path):
    with pytest.raises(ConfigError, match="unexpected"):
        load_config(_write(tmp_path / "a.json", '{"command": "symalg", "geometry": "cr", "n": 2, "x": 1}'))
    with pytest.raises(ConfigError, match="command"):
        load_config(_write(tmp_path / "b.json", '{"command": "explode"}'))
    with pytest.raises(ConfigError, match="c.json:2: invalid JSON"):
        load_config(_write(tmp_path / "c.json", '{\n  "command": }'))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_legendrean_fixture_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    samples = [LegendreanSample.random(2, rng) for _ in range(2)]
    doc = {"geometry": "legendrean", "n": 2, "samples": [s.to_json() for s in samples],
           "curve_meta": {"source": "test"}}
    geometry, loaded, meta = load_fixture(_write(tmp_path / "f.json", json.dumps(doc)))
    assert geometry == "legendrean" and meta == {"source": "test"}
    assert np.array_equal(loaded[1].P, samples[1].P)


def test_cr_fixture_inherits_top_level_form(tmp_path):
    rng = np.random.default_rng(1)
    h = np.diag([1.0, -1.0])
    s = CRSample.random(2, rng, h=h)
    rec = s.to_json()
    rec.pop("h", None)
    doc = {"geometry": "cr", "n": 2, "h": [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]], "samples": [rec]}
    _, loaded, _ = load_fixture(_write(tmp_path / "cr.json", json.dumps(doc)))
    assert np.array_equal(loaded[0].h, h)
    assert np.array_equal(loaded[0].A, s.A)


def test_fixture_shape_errors_have_lines(tmp_path):
    doc = {"geometry": "legendrean", "n": 2,
           "samples": [{"P": [[1, 0], [0, 1]], "A_lo": [[0, 0], [0, 0]], "A_hi": [[0, 0], [0, 0]],
                        "T_lo": [0, 0, 0], "T_hi": [0, 0]}]}
    text = json.dumps(doc, indent=2)
    with pytest.raises(ConfigError) as err:
        load_fixture(_write(tmp_path / "s.json", text))
    line = value_lines(text)[("samples", 0, "T_lo")]
    assert f"s.json:{line}: T_lo must have length 2" in str(err.value)


def test_fixture_asymmetric_a_is_rejected(tmp_path):
    doc = {"n": 2, "samples": [{"P": [[1, 0], [0, 1]], "A_lo": [[0, 1], [0, 0]],
                                "A_hi": [[0, 0], [0, 0]], "T_lo": [0, 0], "T_hi": [0, 0]}]}
    with pytest.raises(SpecMismatch, match="x.json: A_lo is not symmetric"):
        load_fixture(_write(tmp_path / "x.json", json.dumps(doc)))


def test_fixture_degenerate_levi_form_is_not_a_config_error(tmp_path):
    zero = [[0, 0], [0, 0]]
    doc = {"geometry": "cr", "n": 2, "h": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
           "samples": [{"P": [zero, zero], "A": [zero, zero], "T": [[0, 0], [0, 0]]}]}
    with pytest.raises(SingularMetric, match="h.json"):
        load_fixture(_write(tmp_path / "h.json", json.dumps(doc)))
