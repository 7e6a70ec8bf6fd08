import copy
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from finslercap import cli
from finslercap.jet import DomainError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
CAP = 4 * math.pi**2


def load(name):
    return json.loads((CONFIGS / name).read_text())


def run(capsys, cfg, command, *extra, tmp_path=None):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = cli.main([command, "--config", str(path), *extra])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out else None), out, err


EUCLID = {"family": "riemannian", "dimension": 2, "a": [["1", "0"], ["0", "1"]], "domain": {"lo": [-4, -4], "hi": [4, 4]}}


def test_tensors_euclidean(capsys, tmp_path):
    code, rec, _, _ = run(capsys, {"model": EUCLID}, "tensors", "--x", "0.3", "0.1", "--y", "2", "1", tmp_path=tmp_path)
    assert code == 0 and rec["schema_version"] == 1
    assert rec["g"] == [[1, 0], [0, 1]]
    assert not np.any(rec["N"]) and not np.any(rec["cartan"])
    assert rec["volume_density"] == pytest.approx(1.0, abs=1e-12)
    assert rec["F"] == pytest.approx(math.sqrt(5), rel=1e-15)


def test_tensors_byte_identical(capsys, tmp_path):
    cfg = load("tensors_randers.json")
    a = run(capsys, cfg, "tensors", "--x", "0.3", "-0.2", "--y", "1", "0.5", tmp_path=tmp_path)[2]
    b = run(capsys, cfg, "tensors", "--x", "0.3", "-0.2", "--y", "1", "0.5", tmp_path=tmp_path)[2]
    assert a == b


def test_floats_use_seventeen_digits():
    assert cli.dumps(0.1) == "0.10000000000000001"
    assert float(cli.dumps(1 / 3)) == 1 / 3
    assert cli.dumps(float("nan")) == "null"
    assert json.loads(cli.dumps({"a": [1.5, 2], "b": {"c": True}})) == {"a": [1.5, 2], "b": {"c": True}}


def test_randers_invalid_exit_2(capsys, tmp_path):
    model = dict(EUCLID, family="randers", b=["1.2", "0"])
    code, _, _, err = run(capsys, {"model": model}, "tensors", "--x", "0", "0", "--y", "1", "0", tmp_path=tmp_path)
    assert code == 2 and "Randers" in err


def test_missing_condenser_exit_2(capsys, tmp_path):
    code, _, _, err = run(capsys, {"model": EUCLID}, "capacity", tmp_path=tmp_path)
    assert code == 2 and "condenser" in err


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"model": {"dimension": 4}}, "model.dimension"),
        ({"model": {"family": "berwald"}}, "model.family"),
        ({"model": {"a": [["1", "x1"], ["0", "1"]]}}, "model.a[1][0]"),
        ({"model": {"a": [["1", "0"], ["0", "sin("]]}}, "model.a[1][1]"),
        ({"numerics": {"resolution": 4}}, "numerics.resolution"),
        ({"numerics": {"quad_order": 2}}, "numerics.quad_order"),
        ({"numerics": {"tol": -1}}, "numerics.tol"),
        ({"numerics": {"stencil": "upwind"}}, "numerics.stencil"),
        ({"numerics": {"speed": 3}}, "numerics.speed"),
        ({"condenser": {"inner": {"shape": "star"}}}, "condenser.inner.shape"),
        ({"condenser": {"inner": {"radius": -1}}}, "condenser.inner.radius"),
    ],
)
def test_config_errors_name_the_field(capsys, tmp_path, patch, path):
    cfg = load("annulus.json")
    for block, fields in patch.items():
        cfg.setdefault(block, {})
        for k, v in fields.items():
            if isinstance(v, dict) and isinstance(cfg[block].get(k), dict):
                cfg[block][k].update(v)
            else:
                cfg[block][k] = v
    code, _, _, err = run(capsys, cfg, "capacity", tmp_path=tmp_path)
    assert code == 2
    assert path in err


def test_grid_errors_exit_2(capsys, tmp_path):
    cfg = load("annulus.json")
    cfg["condenser"]["inner"]["radius"] = 3.0
    code, _, _, err = run(capsys, cfg, "capacity", tmp_path=tmp_path)
    assert code == 2 and "strictly inside" in err


def test_invalid_json_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{model: }")
    assert cli.main(["capacity", "--config", str(p)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_numerical_failure_exit_3(capsys, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise DomainError("log of non-positive argument")

    monkeypatch.setattr(cli, "cmd_tensors", boom)
    code, _, _, err = run(capsys, {"model": EUCLID}, "tensors", "--x", "0", "0", "--y", "1", "0", tmp_path=tmp_path)
    assert code == 3 and "numerical failure" in err


def test_shipped_annulus_config(capsys, tmp_path):
    code, rec, _, _ = run(capsys, load("annulus.json"), "capacity", tmp_path=tmp_path)
    assert code == 0 and rec["converged"]
    assert abs(rec["value"] / CAP - 1) <= 0.03
    assert all(b <= a for a, b in zip(rec["history"], rec["history"][1:]))


def _small(cfg, res=40):
    cfg = copy.deepcopy(cfg)
    cfg["numerics"]["resolution"] = res
    return cfg


def test_constant_sigma_config_pair(capsys, tmp_path):
    a = run(capsys, _small(load("annulus.json")), "capacity", tmp_path=tmp_path)[1]
    b = run(capsys, _small(load("annulus_scaled.json")), "capacity", tmp_path=tmp_path)[1]
    assert abs(a["value"] - b["value"]) / a["value"] <= 1e-10


def test_capacity_csv_outputs_and_determinism(capsys, tmp_path):
    cfg = _small(load("annulus.json"), 24)
    cfg["output"] = {"grid_csv": str(tmp_path / "u.csv"), "history_csv": str(tmp_path / "h.csv")}
    code, rec, out1, _ = run(capsys, cfg, "capacity", "--threads", "2", tmp_path=tmp_path)
    assert code == 0
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0] == "x1,x2,u" and len(rows) == 1 + 24 * 24
    hist = (tmp_path / "h.csv").read_text().splitlines()
    assert hist[0] == "iteration,energy" and len(hist) == 1 + len(rec["history"])
    out2 = run(capsys, cfg, "capacity", "--threads", "2", tmp_path=tmp_path)[2]
    assert out1 == out2
    out3 = run(capsys, cfg, "capacity", "--threads", "1", tmp_path=tmp_path)[2]
    assert out1 == out3


def test_out_file(capsys, tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"model": EUCLID}))
    target = tmp_path / "t.json"
    assert cli.main(["tensors", "--config", str(cfg_path), "--x", "0", "0", "--y", "1", "0", "--out", str(target)]) == 0
    assert json.loads(target.read_text())["command"] == "tensors"


def test_non_convergence_exits_zero_with_warning(capsys, tmp_path, caplog):
    cfg = _small(load("annulus.json"), 24)
    cfg["numerics"]["max_iter"] = 2
    code, rec, _, _ = run(capsys, cfg, "capacity", tmp_path=tmp_path)
    assert code == 0 and rec["converged"] is False and "warning" in rec
    assert any("not converge" in r.getMessage() for r in caplog.records)


def test_conformal_check_zero_sigma(capsys, tmp_path):
    cfg = _small(load("conformal_check.json"), 24)
    cfg["conformal"]["sigma"] = "0"
    code, rec, _, _ = run(capsys, cfg, "conformal-check", tmp_path=tmp_path)
    assert code == 0 and rec["rel_diff"] == 0 and rec["status"] == "PASS"


def test_conformal_check_shipped(capsys, tmp_path):
    code, rec, _, _ = run(capsys, load("conformal_check.json"), "conformal-check", tmp_path=tmp_path)
    assert code == 0 and rec["passed"] and rec["rel_diff"] <= 1e-8


def test_conformal_check_unknown_variable(capsys, tmp_path):
    cfg = load("conformal_check.json")
    cfg["conformal"]["sigma"] = "x9"
    code, _, _, err = run(capsys, cfg, "conformal-check", tmp_path=tmp_path)
    assert code == 2 and "conformal.sigma" in err and "x9" in err


def test_mu_command(capsys, tmp_path):
    cfg = load("mu.json")
    cfg["numerics"]["resolution"] = 37
    code, rec, _, _ = run(capsys, cfg, "mu", tmp_path=tmp_path)
    assert code == 0 and rec["upper_bound"] is True
    assert len(rec["table"]) == len(cfg["mu"]["radii"])
    assert rec["value"] == min(r["value"] for r in rec["table"])
    cfg["mu"]["x1"], cfg["mu"]["x2"] = cfg["mu"]["x2"], cfg["mu"]["x1"]
    swapped = run(capsys, cfg, "mu", tmp_path=tmp_path)[1]
    assert swapped["value"] == rec["value"]


def test_mu_capsule_escape_exit_2(capsys, tmp_path):
    cfg = load("mu.json")
    cfg["mu"]["radii"] = [5.0]
    code, _, _, err = run(capsys, cfg, "mu", tmp_path=tmp_path)
    assert code == 2 and "escapes" in err


def test_stdin_and_module_entry_point():
    cfg = json.dumps({"model": EUCLID})
    proc = subprocess.run(
        [sys.executable, "-m", "finslercap", "tensors", "--config", "-", "--x", "0", "0", "--y", "0", "1"],
        input=cfg,
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["hilbert_form"] == [0, 1]
