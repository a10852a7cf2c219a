import json

import numpy as np
import pytest

from passive_isp import io as pio
from passive_isp.continuation import StripSampling
from passive_isp.exceptions import ValidationError
from passive_isp.model import PassiveRecord
from passive_isp.spectral import neumann_eigensystem


def test_passive_roundtrip_is_exact(tmp_path):
    recs = [PassiveRecord(0.1, -1 / 3, 2 / 7), PassiveRecord(np.pi, 1e-300, -5e15 / 3)]
    path = pio.write_passive_csv(tmp_path / "p.csv", recs)
    assert path.read_text().splitlines()[0] == "k,im_phi_0,im_phi_1"
    assert pio.read_passive_csv(path) == recs


def test_read_rejects_wrong_header(tmp_path):
    (tmp_path / "bad.csv").write_text("k,a,b\n1,2,3\n")
    with pytest.raises(ValidationError):
        pio.read_passive_csv(tmp_path / "bad.csv")


def test_eigensystem_and_strip_layouts(tmp_path, free_1024):
    es = neumann_eigensystem(free_1024, 7.0)
    lines = pio.write_eigensystem_csv(tmp_path / "e.csv", es).read_text().splitlines()
    assert lines[0] == "j,mu,phi0,phi1" and lines[1] == "1,0,1,1" and len(lines) == 4
    vec = pio.read_csv(pio.write_eigenvectors(tmp_path / "v.csv", es), ["x", "phi_1", "phi_2", "phi_3"])
    assert vec.shape == (1025, 4)
    strip = StripSampling(np.array([1 + 0.5j, 2.0]), np.array([0.25 - 1j, 3j]), 1.0)
    body = pio.write_strip_csv(tmp_path / "s.csv", strip).read_text().splitlines()
    assert body == ["re_k,im_k,re_F,im_F", "1,0.5,0.25,-1", "2,0,0,3"]


def test_json_meta_and_special_values(tmp_path, free_1024):
    path = pio.write_json(tmp_path / "r.json", {"z": 1 - 2j, "v": np.float64(np.inf), "a": np.arange(2)},
                          version="9.9", cfg_hash="abc", grid=free_1024.grid)
    doc = json.loads(path.read_text())
    assert doc["z"] == [1.0, -2.0] and doc["v"] == "inf" and doc["a"] == [0, 1]
    assert doc["meta"] == {"tool_version": "9.9", "config_hash": "abc",
                           "grid": {"n_cells": 1024, "n_nodes": 1025, "spacing": 1 / 1024}}


def test_fmt_uses_17_digits():
    assert pio.fmt(0.1) == "0.10000000000000001"
    assert pio.fmt(3) == "3" and pio.fmt(True) == "true"
