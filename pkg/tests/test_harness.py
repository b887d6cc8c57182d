import csv
import json
import os

import numpy as np
import pytest

from chlimit.errors import InvalidInput, SeparationViolated
from chlimit.harness.cli import main
from chlimit.harness.config import ExperimentConfig, load_config, parse_config
from chlimit.harness.manifest import RunManifest
from chlimit.harness.pipeline import order_rows


def _read(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_config_defaults_and_digest():
    a = ExperimentConfig()
    b = parse_config("")
    assert a == b
    assert a.digest() == b.digest()
    assert a.digest() != a.replace(T=0.04).digest()
    # the output directory does not change the digest
    assert a.digest() == a.replace(out="elsewhere").digest()


def test_config_parsing(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("# sweep\neps_list = 0.1, 0.05, 0.025\nT = 0.02  # short\ndelta = auto\nseed = 4\n")
    cfg = load_config(p)
    assert cfg.eps_list == (0.1, 0.05, 0.025)
    assert cfg.T == 0.02 and cfg.seed == 4 and cfg.delta is None
    assert parse_config(cfg.dumps()) == cfg


@pytest.mark.parametrize("text", [
    "eps_list = 0.08, 0.04",
    "eps_list = 0.02, 0.04, 0.08",
    "eps_list = 0.08, 0.08, 0.02",
    "unknown_key = 1",
    "T = abc",
    "R0 = 3.0",
    "scenario = square",
    "profile_nodes = 4000",
])
def test_config_rejections(text):
    with pytest.raises(InvalidInput):
        parse_config(text)


def test_config_separation_named():
    with pytest.raises(SeparationViolated, match="5\\*delta"):
        parse_config("delta = 0.25")


def test_manifest_roundtrip(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x\n1\n")
    m = RunManifest(str(tmp_path))
    m.record("stage", "abc", "ok", [str(f)])
    m.save("0.1")
    m2 = RunManifest.load(str(tmp_path))
    assert m2.is_current("stage", "abc")
    assert not m2.is_current("stage", "other")
    assert not m2.is_current("missing", "abc")
    f.write_text("x\n2\n")
    assert not m2.is_current("stage", "abc")


def test_order_rows_degenerate():
    rows = [(e, "z", "all", 0.0) for e in (0.1, 0.05, 0.02)] + [(e, "q", "all", e) for e in (0.1, 0.05, 0.02)]
    out = dict((k, s) for k, s, _ in order_rows(rows))
    assert np.isnan(out["z@all"])
    assert out["q@all"] == pytest.approx(1.0)


def test_cli_profile(tmp_path):
    out = tmp_path / "p" / "theta0.csv"
    assert main(["profile", "--nodes", "801", "--out", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == ["rho", "value", "derivative"]
    assert len(rows) == 802
    assert os.path.exists(tmp_path / "p" / "theta0_moments.csv")
    manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
    assert set(manifest["stages"]["profile"]["files"]) == {
        "theta0.csv", "theta0_eta.csv", "theta0_theta1.csv", "theta0_moments.csv"}


def test_cli_geometry_check(tmp_path, capsys):
    assert main(["geometry-check", "--samples", "200"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "check,value,tolerance,passed"
    assert all(line.endswith("True") for line in out[1:])
    # the separation rule is enforced with exit code 2
    assert main(["geometry-check", "--delta", "0.25"]) == 2


def test_cli_sharp_and_idempotence(tmp_path, capsys):
    out = tmp_path / "sharp.csv"
    assert main(["sharp", "--T", "0.1", "--out", str(out)]) == 0
    first = out.read_bytes()
    rows = _read(out)
    assert rows[0] == ["t", "R", "dRdt", "mu_interface"]
    assert main(["sharp", "--T", "0.1", "--out", str(out)]) == 0
    assert "current" in capsys.readouterr().out
    assert main(["sharp", "--T", "0.1", "--out", str(out), "--force"]) == 0
    assert out.read_bytes() == first


def test_cli_approx(tmp_path):
    out = tmp_path / "approx.csv"
    assert main(["approx", "--eps", "0.05", "--grid", "32", "--out", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == ["x1", "x2", "d_gamma", "rho", "cA", "muA", "vA1", "vA2", "pA"]
    data = np.array(rows[1:], dtype=float)
    assert np.all(np.hypot(data[:, 0], data[:, 1]) <= 2.0)


def test_cli_diffuse(tmp_path):
    out = tmp_path / "run"
    assert main(["diffuse", "--eps", "0.08", "--T", "0.01", "--snapshots", "3", "--out", str(out)]) == 0
    assert _read(out / "history.csv")[0] == ["t", "R_eps", "energy", "mass"]
    assert _read(out / "snapshot_002.csv")[0] == ["r", "c", "mu"]
    assert main(["diffuse", "--eps", "0.08", "--nr", "20", "--out", str(out)]) == 2


def test_cli_residuals(tmp_path):
    out = tmp_path / "report"
    code = main(["residuals", "--eps-list", "0.1,0.08,0.06", "--T", "0.02", "--out", str(out)])
    assert code == 0
    norms = _read(out / "norms.csv")
    assert norms[0] == ["eps", "norm_name", "stratum", "value"]
    orders = _read(out / "orders.csv")
    assert orders[0] == ["norm_name", "slope", "fit_residual"]
    assert main(["residuals", "--eps-list", "0.1,0.05", "--out", str(out)]) == 2


def test_cli_invariants_filter(tmp_path, capsys):
    code = main(["--out", str(tmp_path), "invariants", "--filter", "profiles,sharp_limit"])
    lines = capsys.readouterr().out.splitlines()
    suites = {line.split(",")[0] for line in lines[1:]}
    assert suites == {"profiles", "sharp_limit"}
    assert code == 0
    assert main(["invariants", "--filter", "bogus", "--out", str(tmp_path)]) == 2


def test_cli_invariants_bad_delta(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("delta = 0.3\n")
    assert main(["--config", str(cfg), "invariants", "--out", str(tmp_path)]) == 2


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main([])


@pytest.mark.slow
def test_cli_converge_deterministic(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("eps_list = 0.1, 0.08, 0.06\nT = 0.02\nn_t = 4\nsnapshots = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    code_a = main(["--config", str(cfg), "--out", str(a), "converge"])
    code_b = main(["--config", str(cfg), "--out", str(b), "--threads", "2", "converge"])
    assert code_a == code_b and code_a in (0, 1)
    for name in ("norms.csv", "orders.csv", "acceptance.csv", "eps_0.08/history.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert (a / "plots" / "convergence.gp").exists()
    manifest = json.loads((a / "manifest.json").read_text())
    files = manifest["stages"]["converge"]["files"]
    on_disk = {os.path.relpath(os.path.join(d, f), a) for d, _, fs in os.walk(a) for f in fs}
    assert on_disk - {"manifest.json"} == set(files)
    # identical rerun is a no-op
    capsys.readouterr()
    assert main(["--config", str(cfg), "--out", str(a), "converge"]) == 0
    assert "current" in capsys.readouterr().out
