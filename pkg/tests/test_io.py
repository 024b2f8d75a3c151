import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twopatch.io import config_hash, dumps, fmt, write_csv, write_manifest


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(v):
    assert float(fmt(v)) == v


def test_fmt_special_values():
    assert fmt(True) == "true" and fmt(np.int64(3)) == "3"
    assert fmt(float("nan")) == "nan" and fmt(-math.inf) == "-inf"
    assert fmt("abc") == "abc"
    assert fmt(0.1) == "1.0000000000000001e-01"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_roundtrips_floats(v):
    assert json.loads(dumps({"v": v}))["v"] == v


def test_dumps_sorted_and_nan_to_null():
    text = dumps({"b": 1, "a": [np.float64(0.5), float("nan")], "c": np.arange(2)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0.5, None], "b": 1, "c": [0, 1]}


def test_config_hash_stable():
    assert config_hash({"a": 1.0, "b": 2}) == config_hash({"b": 2, "a": 1.0})
    assert config_hash({"a": 1.0}) != config_hash({"a": 1.5})


def test_csv_and_manifest(tmp_path):
    f = write_csv(tmp_path / "x.csv", ["a", "b"], [(1.0, 2), (0.5, True)])
    assert f.read_text().splitlines() == ["a,b", "1.0000000000000000e+00,2",
                                          "5.0000000000000000e-01,true"]
    m = json.loads(write_manifest(tmp_path, "demo", {"k": 1}, [f]).read_text())
    assert m["files"] == ["x.csv"] and m["command"] == "demo"
    assert m["config_sha256"] == config_hash({"k": 1})
    assert m["version"]
