import json
import os

import numpy as np
import pytest
from threadpoolctl import threadpool_info

from mixfem.utils import limited_threads, save_json
from mixfem.utils.tools import THREADS_ENV, thread_cap


def test_thread_cap_from_environment(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert thread_cap() is None
    monkeypatch.setenv(THREADS_ENV, "")
    assert thread_cap() is None
    monkeypatch.setenv(THREADS_ENV, "2")
    assert thread_cap() == 2


@pytest.mark.parametrize("value", ["0", "-3", "two", "1.5"])
def test_thread_cap_rejects_bad_values(monkeypatch, value):
    monkeypatch.setenv(THREADS_ENV, value)
    with pytest.raises(ValueError):
        thread_cap()


def test_limited_threads_caps_pools(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")
    with limited_threads():
        assert all(pool["num_threads"] == 1 for pool in threadpool_info())

    monkeypatch.delenv(THREADS_ENV)
    with limited_threads():
        pass


def test_save_json_handles_numpy(tmp_path):
    filename = str(tmp_path / "nested" / "report.json")
    save_json({"n": np.int64(3), "x": np.float32(0.5), "ok": np.bool_(True), "v": np.arange(3)}, filename)
    assert os.path.isfile(filename)
    with open(filename) as f:
        assert json.load(f) == {"n": 3, "x": 0.5, "ok": True, "v": [0, 1, 2]}
