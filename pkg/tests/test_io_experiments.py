import json

import numpy as np
import pytest

from waveturb.experiments import Table, Verdict, gaussian_spectrum, onemode_pdf
from waveturb.io import environment, file_digest, format_number, read_table, write_json, write_table
from waveturb.lattice import build_lattice


def test_number_format_round_trips():
    x = np.random.default_rng(0).normal(size=50) * 10.0 ** np.arange(-25, 25)
    assert np.array_equal(np.array([float(format_number(v)) for v in x]), x)


def test_table_round_trip(tmp_path):
    t = Table(["a", "b"], np.array([[1.0, 2.5], [np.pi, -1e-300]]), {"a": "first"})
    path = write_table(tmp_path, "t", t)
    cols, rows = read_table(path)
    assert cols == ["a", "b"] and np.array_equal(rows, t.rows)
    schema = json.loads((tmp_path / "t.schema.json").read_text())
    assert schema["columns"][0]["description"] == "first"


def test_table_shape_checked(tmp_path):
    with pytest.raises(ValueError):
        write_table(tmp_path, "bad", Table(["a"], np.zeros((2, 2)), {}))


def test_json_handles_numpy(tmp_path):
    p = write_json(tmp_path / "x.json", {"a": np.float64(1.5), "b": np.arange(3), "c": 1 + 2j})
    assert json.loads(p.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": [1.0, 2.0]}
    assert len(file_digest(p)) == 64


def test_environment_versions():
    env = environment()
    assert env["numpy"] == np.__version__


def test_verdict_line_format():
    v = Verdict("x", True, 1.0, 2.0, "detail")
    assert v.line() == "PASS  x: detail"
    assert v.to_dict()["passed"] is True


def test_gaussian_spectrum_zero_mode():
    lat = build_lattice(2, 6, 2 * np.pi)
    n = gaussian_spectrum(lat, 2.0, 1.0)
    assert n[lat.zero_mode] == 0 and n.max() <= 2.0


def test_onemode_experiment_tables():
    res = onemode_pdf()
    assert res.passed
    assert set(res.tables) and all(t.rows.shape[1] == len(t.columns) for t in res.tables.values())
