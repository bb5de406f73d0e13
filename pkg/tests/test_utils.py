import json
import logging
import math

import numpy as np
import pytest

from arlib.utils.io import atomic_write, dumps_json, format_csv, resolve_structure_path, to_jsonable, write_json
from arlib.utils.log import TRACE, log, set_verbosity
from arlib.utils.parallel import THREADS_ENV, num_threads, parallel_map


def test_to_jsonable():
    data = to_jsonable({"a": np.arange(3), "b": np.float64(0.5), "c": (math.inf, math.nan), "d": np.bool_(True)})
    assert data == {"a": [0, 1, 2], "b": 0.5, "c": [None, None], "d": True}


def test_json_is_sorted_and_exact(tmp_path):
    text = dumps_json({"b": 0.1, "a": 1 / 3})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["a"] == 1 / 3
    path = write_json(tmp_path / "nested" / "out.json", {"x": 1})
    assert json.loads(path.read_text()) == {"x": 1}
    assert not (tmp_path / "nested" / "out.json.tmp").exists()


def test_csv_floats_are_full_precision():
    text = format_csv(["name", "x"], [["a", 1 / 3], ["b", 2]])
    header, first, second = text.splitlines()
    assert header == "name,x"
    assert float(first.split(",")[1]) == 1 / 3
    assert second == "b,2"


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "file.txt"
    atomic_write(path, "one")
    atomic_write(path, "two")
    assert path.read_text() == "two"


def test_resolve_bundled():
    assert resolve_structure_path("grushin").name == "grushin.ar"
    assert resolve_structure_path("grushin.ar").name == "grushin.ar"


def test_set_verbosity():
    try:
        assert set_verbosity(0) == logging.WARNING
        assert set_verbosity(2) == logging.DEBUG
        assert set_verbosity(5) == TRACE
        handlers = [h for h in log.handlers if getattr(h, "_arlib", False)]
        assert len(handlers) == 1
        with pytest.raises(ValueError):
            set_verbosity(-1)
    finally:
        set_verbosity(0)


def test_parallel_map_keeps_order(monkeypatch):
    assert parallel_map(lambda v: v * v, range(10), threads=4) == [v * v for v in range(10)]
    monkeypatch.setenv(THREADS_ENV, "3")
    assert num_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    assert num_threads() == 1


def test_json_floats_have_seventeen_digits():
    text = dumps_json({"a": 0.5, "b": [1 / 3, 2], "c": math.nan, "d": "plain"})
    assert '"a": 5.0000000000000000e-01' in text
    assert "3.3333333333333331e-01" in text
    assert json.loads(text) == {"a": 0.5, "b": [1 / 3, 2], "c": None, "d": "plain"}
