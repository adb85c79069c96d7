import json
from pathlib import Path

import numpy as np
import pytest

from tracerbec.cli import main, read_snapshot, write_snapshot
from tracerbec.config import ConfigError, build, default_config, load_config

SMALL = """
[grid]
n = 32
box_length = 16.0
"""


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL))
    p = cfg.params
    assert (p.M, p.m, p.nu, p.kappa, p.model_tag) == (1.0, 1.0, 1.0, 0.0, "B")
    assert cfg.W.family == "gaussian" and cfg.W.sigma == 1.0
    assert cfg.grid.n == 32
    assert cfg.data["model"]["tag"] == "B"


def test_b_model_invariant_rejected(tmp_path):
    path = _write(tmp_path, SMALL + '[model]\nkappa = 0.5\ntag = "B"\n')
    with pytest.raises(ConfigError, match="B-model invariant"):
        load_config(path)


def test_parse_error_has_line(tmp_path):
    path = _write(tmp_path, "[grid]\nn = 32\nbox_length = = 3\n")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="model.mass"):
        build({"model": {"mass": 2.0}})
    with pytest.raises(ConfigError, match="unknown key"):
        build({"plot": {}})


@pytest.mark.parametrize("raw", [
    {"potential": {"W": {"family": "delta"}}},
    {"evolve": {"beta0": "random"}},
    {"evolve": {"dt": -1}},
    {"model": {"force": [1, 2]}},
    {"friction": {"method": "closed"}, "model": {"kappa": 2.0}},
    {"grid": {"n": 30}},
])
def test_semantic_errors(raw):
    with pytest.raises(ConfigError):
        build(raw)


def test_digest_stable():
    assert default_config().digest == default_config().digest
    assert build({"model": {"nu": 2.0}}).digest != default_config().digest


def test_malformed_file_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "[grid\n")
    assert main(["static", "--config", str(path), "--out", str(tmp_path / "o")]) != 0
    assert "parse error" in capsys.readouterr().err


def test_snapshot_roundtrip(tmp_path):
    v = np.arange(8**3, dtype=float).reshape(8, 8, 8) * (1 - 0.5j)
    write_snapshot(tmp_path / "s.bin", v, 4.0, 1.5)
    back, L, t = read_snapshot(tmp_path / "s.bin")
    assert np.array_equal(back, v) and L == 4.0 and t == 1.5
    assert (tmp_path / "s.bin").stat().st_size == 24 + 16 * 8**3


def test_friction_curve_slopes(tmp_path):
    out = tmp_path / "o"
    assert main(["friction-curve", "--config", str(_write(tmp_path, SMALL)), "--out", str(out)]) == 0
    res = json.loads((out / "friction-curve.json").read_text())["results"]
    assert res["slope_low"] == pytest.approx(2.0, abs=0.05)
    assert res["slope_high"] == pytest.approx(-2.0, abs=0.05)
    header = (out / "friction_curve.csv").read_text().splitlines()[0]
    assert header == "speed,friction,error"


def _run_twice(tmp_path, argv):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(argv + ["--out", str(out)]) == 0
        outs.append(out)
    return outs


@pytest.mark.parametrize("cmd", ["dispersion", "static", "reduced"])
def test_deterministic_outputs(tmp_path, cmd):
    cfg = _write(tmp_path, SMALL + "[reduced]\nt_max = 100.0\nfit_window = [10.0, 100.0]\n")
    a, b = _run_twice(tmp_path, [cmd, "--config", str(cfg)])
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name
    man = json.loads((a / f"{cmd}.json").read_text())
    assert len(man["config_sha256"]) == 64
    assert man["config"]["grid"]["n"] == 32


def test_evolve_outputs(tmp_path):
    cfg = _write(tmp_path, SMALL + "[evolve]\ndt = 0.05\nsnapshot_every = 10\nlog_times = false\n"
                                   "[evolve.sponge]\nwidth_fraction = 0.0\n")
    a, b = _run_twice(tmp_path, ["evolve", "--config", str(cfg), "--tmax", "1.0"])
    lines = (a / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,X1,X2,X3,P1,P2,P3,abs_P,E,ball_sup_dev"
    assert len(lines) == 1 + 1 + 2  # t=0 plus every 10 steps of 20
    assert "NA" not in lines[1]
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    man_a = json.loads((a / "evolve.json").read_text())
    man_b = json.loads((b / "evolve.json").read_text())
    man_a.pop("wall_time"), man_b.pop("wall_time")
    assert man_a == man_b
    assert len(list(a.glob("snapshot_*.bin"))) == 2


def test_evolve_sponge_marks_energy_na(tmp_path):
    cfg = _write(tmp_path, SMALL + "[evolve]\ndt = 0.05\nlog_times = false\nsample_every = 5\n"
                                   "[evolve.sponge]\nwidth_fraction = 0.15\n")
    out = tmp_path / "o"
    assert main(["evolve", "--config", str(cfg), "--tmax", "0.5", "--out", str(out)]) == 0
    rows = (out / "trajectory.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[8] == "NA" for r in rows)


def test_forced_over_max_has_no_branch(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, "[grid]\nn = 128\nbox_length = 64.0\n")
    assert main(["forced", "--config", str(cfg), "--force", "2xFmax", "--out", str(out)]) == 0
    res = json.loads((out / "forced.json").read_text())["results"]
    assert res["branch_count"] == 0
    assert res["force"] == pytest.approx(2 * res["F_max"])


def test_unresolved_forced_curve_fails(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL + "[forced]\nspeed_min = 0.01\n")
    assert main(["forced", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "resonance sphere" in capsys.readouterr().err
