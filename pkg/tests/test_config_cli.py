import json

import numpy as np
import pytest

from waveturb.cli import main
from waveturb.config import ConfigError, defaults_table, load_config, validate_config
from waveturb.io import read_table

SCAN = """
[experiment]
kind = "kz-flux-scan"
seed = 4

[scan]
cells = 48
strengths = [0.0, 0.3, 0.6]
"""


def test_defaults_filled_per_kind():
    cfg = validate_config('[experiment]\nkind = "mc-kinetic-4w"\n')
    assert cfg.get("system", "kind") == "nls"
    assert cfg.get("lattice", "n_side") == 6 and cfg.get("ensemble", "R") == 200
    assert "pbp" not in cfg.sections


def test_zero_realizations_rejected():
    with pytest.raises(ConfigError, match="ensemble.R") as exc:
        validate_config('[experiment]\nkind = "mc-kinetic-3w"\n[ensemble]\nR = 0\n')
    assert exc.value.key == "ensemble.R"


def test_negative_epsilon_states_range():
    with pytest.raises(ConfigError, match=r"system.epsilon=-1.0 is out of range \(0"):
        validate_config('[experiment]\nkind = "mc-kinetic-3w"\n[system]\nepsilon = -1\n')


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="'foo'") as exc:
        validate_config('[experiment]\nkind = "onemode-pdf"\n[onemode]\nfoo = 1\n')
    assert exc.value.key == "onemode.foo"


def test_unused_section_rejected():
    with pytest.raises(ConfigError, match="not used"):
        validate_config('[experiment]\nkind = "onemode-pdf"\n[pbp]\ncells = [8, 16]\n')


def test_parse_error_reports_position():
    with pytest.raises(ConfigError) as exc:
        validate_config('[experiment]\nkind = "onemode-pdf"\nseed = = 3\n')
    assert exc.value.line == 3 and exc.value.column is not None


def test_missing_kind():
    with pytest.raises(ConfigError, match="experiment.kind"):
        validate_config("[experiment]\nseed = 1\n")


def test_wrong_system_for_kind():
    with pytest.raises(ConfigError):
        validate_config('[experiment]\nkind = "mc-kinetic-3w"\n[system]\nkind = "nls"\n')


def test_digest_tracks_content():
    a = validate_config(SCAN)
    assert a.digest == validate_config(SCAN).digest
    assert a.digest != a.with_overrides(seed=5).digest


def test_defaults_table_lists_every_key():
    table = defaults_table()
    assert "| ensemble.R | 1000 |" in table
    assert "pbp.memory_mb" in table


def _run(tmp_path, name, *extra):
    cfg = tmp_path / "scan.toml"
    cfg.write_text(SCAN)
    out = tmp_path / name
    code = main(["run", str(cfg), "--out", str(out), *extra])
    return code, out


def test_cli_run_is_deterministic(tmp_path):
    c1, o1 = _run(tmp_path, "a")
    c2, o2 = _run(tmp_path, "b")
    assert c1 == c2 == 0
    s1 = json.loads((o1 / "summary.json").read_text())
    s2 = json.loads((o2 / "summary.json").read_text())
    assert s1["files"] == s2["files"]
    assert s1["config_sha256"] == s2["config_sha256"]
    assert s1["seed"] == 4


def test_cli_tables_have_schemas(tmp_path):
    _, out = _run(tmp_path, "c")
    summary = json.loads((out / "summary.json").read_text())
    for name in summary["files"]:
        schema = json.loads((out / name.replace(".csv", ".schema.json")).read_text())
        cols, rows = read_table(out / name)
        assert [c["name"] for c in schema["columns"]] == cols
        assert schema["rows"] == rows.shape[0]
    assert {"numpy", "scipy", "waveturb", "python"} <= set(summary["versions"])
    assert summary["wall_time_s"] >= 0


def test_cli_records_fresh_seed(tmp_path):
    out = tmp_path / "fresh"
    assert main(["onemode-pdf", "--no-reproducible", "--out", str(out)]) == 0
    seed = json.loads((out / "summary.json").read_text())["seed"]
    assert isinstance(seed, int)


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[experiment]\nkind = "onemode-pdf"\n[onemode]\nfoo = 1\n')
    assert main(["run", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "foo" in capsys.readouterr().err


def test_cli_budget_abort(tmp_path, capsys):
    cfg = tmp_path / "big.toml"
    cfg.write_text('[experiment]\nkind = "pbp-triad"\n[pbp]\nmemory_mb = 1\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "y")]) == 3
    assert "memory_mb" in capsys.readouterr().err
    assert not (tmp_path / "y").exists()


def test_cli_ensemble_budget_abort(tmp_path, capsys):
    cfg = tmp_path / "mc.toml"
    cfg.write_text('[experiment]\nkind = "mc-kinetic-4w"\n[lattice]\nn_side = 12\n[ensemble]\nR = 1000\n')
    assert main(["run", str(cfg), "--out", str(tmp_path / "z")]) == 3
    assert "ensemble.R" in capsys.readouterr().err
    assert not (tmp_path / "z").exists()


def test_cli_verify_subset(tmp_path, capsys):
    assert main(["verify", "--only", "4", "11", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "PASS  4" in text and "PASS  11" in text
    verdicts = json.loads((tmp_path / "verdicts.json").read_text())["verdicts"]
    assert len(verdicts) == 2


def test_load_config_from_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(SCAN)
    cfg = load_config(p)
    assert cfg.get("scan", "strengths") == [0.0, 0.3, 0.6]
    assert np.isclose(cfg.get("pbp", "omega_r"), 1.5)
