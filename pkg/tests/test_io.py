import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from qcurv.io import config_hash, dumps, to_plain, write_csv, write_json


def test_to_plain_converts_numpy():
    obj = {"a": np.arange(3), "b": np.float64(1.5), "c": np.bool_(True), 4: (np.int32(2),)}
    assert to_plain(obj) == {"a": [0, 1, 2], "b": 1.5, "c": True, "4": [2]}


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_floats_round_trip_exactly(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_non_finite_become_strings():
    out = json.loads(dumps([math.nan, math.inf, -math.inf]))
    assert out == ["nan", "inf", "-inf"]


def test_key_order_is_kept():
    text = dumps({"z": 1, "a": {"y": [1.0, 2.0], "b": []}})
    assert text.index('"z"') < text.index('"a"') < text.index('"y"')
    assert "[1.0, 2.0]" in text


def test_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_writers_leave_no_temporaries(tmp_path):
    write_json(tmp_path / "sub" / "r.json", {"v": np.array([0.1])})
    write_csv(tmp_path / "t.csv", ["i", "x"], [[0, 0.1], [1, np.float64(1 / 3)]])
    assert sorted(p.name for p in tmp_path.rglob("*") if p.is_file()) == ["r.json", "t.csv"]
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "i,x" and float(rows[2].split(",")[1]) == 1 / 3
