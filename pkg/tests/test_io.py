import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smclab import fixtures, io
from smclab.errors import ConfigError, ModelError

MODEL = """{
 "schema_version": 1,
 "levels": 3,
 "spaces": [2, {"size": 3, "labels": ["a", "b", "c"]}, 2],
 "mu0": [0.5, 0.5],
 "g": [[1.0, 2.0], [1.0, 1.0, 0.5]],
 "kernels": [
  [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]],
  [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]
 ]
}
"""


def test_parse_model():
    fk = io.parse_model(MODEL)
    assert fk.sizes == (2, 3, 2) and fk.labels[1] == ("a", "b", "c")
    again = io.parse_model(io.model_to_json(fk))
    for a, b in zip(again.kernels + again.g, fk.kernels + fk.g):
        assert np.array_equal(a, b)


def test_model_round_trip_fixture():
    fk = fixtures.chain_2block().base
    back = io.parse_model(io.model_to_json(fk))
    assert all(np.array_equal(a, b) for a, b in zip(back.measures, fk.measures))


@pytest.mark.parametrize("old,new,line,where", [
    ("[0.0, 0.5, 0.5]]", "[0.0, 0.6, 0.5]]", 8, "kernels[0][1]"),
    ('"mu0": [0.5, 0.5]', '"mu0": [0.5, 0.7]', 5, "mu0"),
    ("[1.0, 1.0, 0.5]", "[1.0, -1.0, 0.5]", 6, "g[1][1]"),
    ("[1.0, 2.0]", '[1.0, "x"]', 6, "g[0][1]"),
    ('"levels": 3', '"levels": 4', 4, "spaces"),
    ('"schema_version": 1', '"schema_version": 9', 2, "schema_version"),
])
def test_errors_name_line_and_field(old, new, line, where):
    with pytest.raises(ModelError) as exc:
        io.parse_model(MODEL.replace(old, new), "m.json")
    assert str(exc.value).startswith(f"m.json:{line}: {where}:")


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match=r"m.json:2:"):
        io.parse_model('{\n "levels": 3,,\n}', "m.json")
    with pytest.raises(ConfigError, match="cannot read"):
        io.load_model(tmp_path / "absent.json")
    with pytest.raises(ModelError, match="missing field 'kernels'"):
        io.parse_model(json.dumps({"levels": 1, "spaces": [1], "mu0": [1.0], "g": []}))


def test_tree_and_hierarchy(tmp_path):
    t = io.parse_tree('{"parents": [[0, 0]], "masses": [[1.0], [0.25, 0.75]]}')
    assert t.sizes == (1, 2)
    with pytest.raises(ModelError, match="parents"):
        io.parse_tree('{"parents": [[0, 0]], "masses": [[1.0], [0.25, 0.25]]}')
    h = fixtures.splitting().hierarchy
    (tmp_path / "h.json").write_text(io.hierarchy_to_json(h))
    (tmp_path / "m.json").write_text(io.model_to_json(fixtures.splitting().base))
    lm = io.load_local_model(tmp_path / "m.json", tmp_path / "h.json")
    assert all(np.array_equal(a, b) for a, b in zip(lm.hierarchy.blocks, h.blocks))
    with pytest.raises(ModelError, match="straddles"):
        io.parse_hierarchy('{"blocks": [[0, 0, 1], [0, 1, 1]]}')


cells = st.one_of(st.none(), st.booleans(), st.integers(-10 ** 12, 10 ** 12),
                  st.floats(allow_nan=False, allow_infinity=False), st.text("abc xyz_", min_size=1))


@given(rows=st.lists(st.fixed_dictionaries({"a": cells, "b": cells, "c": st.floats(allow_nan=False)}),
                     min_size=1, max_size=5))
def test_rows_round_trip(rows):
    for fmt in ("csv", "json"):
        back = io.parse_rows(io.format_rows(rows, fmt), fmt)
        for r, s in zip(rows, back):
            for k, v in r.items():
                w = s[k]
                if isinstance(v, str) and fmt == "csv":
                    # strings that look like numbers or flags are not distinguished in CSV
                    continue
                assert w == v and type(w) is type(v) or (isinstance(v, float) and w == v)


def test_rows_schema_checks(tmp_path):
    text = io.format_rows([{"x": 1.5}])
    assert text.splitlines()[0] == "schema_version,x"
    with pytest.raises(ConfigError):
        io.parse_rows(text.replace("\n1,", "\n2,"))
    with pytest.raises(ConfigError):
        io.parse_rows(json.dumps({"schema_version": 2, "rows": []}), "json")
    with pytest.raises(ConfigError):
        io.format_rows([{"x": 1}], "xml")
    out = tmp_path / "r.csv"
    io.write_rows([{"x": np.float64(0.1)}], out, "csv", sidecar={"seed": 3})
    assert io.parse_rows(out.read_text()) == [{"x": 0.1}]
    assert json.loads((tmp_path / "r.csv.meta.json").read_text())["seed"] == 3
