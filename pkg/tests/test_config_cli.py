import csv
import hashlib
import json
import math

import pytest

from lawson_ac.cli import main, predicted_c0
from lawson_ac.cone import make_cone
from lawson_ac.config import DEFAULTS, parse_config
from lawson_ac.errors import ConfigError

C_STAR = (math.pi**2 - 6) / 6


def test_valid_config():
    cfg = parse_config("i=4\nj=4\nd=20\ndelta=0.1\ncommand=solve")
    assert cfg.command == "solve" and cfg.d == (20.0,) and cfg.delta == 0.1
    assert cfg.max_iter == DEFAULTS["max_iter"]


def test_comments_and_blank_lines():
    cfg = parse_config("# run\n\ncommand = leaf  # trailing\n a = 2 \n")
    assert cfg.command == "leaf" and cfg.a == (2.0,)


@pytest.mark.parametrize("text, needle", [
    ("command=solve\ni=1", "i >= 2"),
    ("command=solve\nd=20\ndelta=0.5", "delta <= 0.2"),
    ("command=solve\nfoo=1", "unknown key 'foo'"),
    ("command=solve\nd=x", "cannot parse"),
    ("command=solve\nd=5", "d >= 10"),
    ("command=solve\nd=20,30", "only allowed for the sweep"),
    ("command=sweep\nd=30,20", "strictly increasing"),
    ("command=solve\ni=3\nj=4", "unstable"),
    ("command=teleport", "unknown command"),
    ("i=4", "missing"),
    ("command=solve\nmax_iter=1.5", "integer"),
    ("command=analyze\nd=12\nfit_window_hi=15", "end below d"),
    ("command=solve\nfit_window_lo=5\nfit_window_hi=8", ">= 2 * fit_window_lo"),
    ("command=solve\ni=4\ni=5", "repeated"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert any(needle in e for e in info.value.errors)


def test_all_errors_reported_with_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("command=solve\ni=1\ndelta=0.5\nbogus=2")
    errs = info.value.errors
    assert len(errs) == 3
    assert any(e.startswith("line 2:") and "'i'" in e for e in errs)
    assert any(e.startswith("line 3:") and "'delta'" in e for e in errs)


def test_command_argument_conflict():
    with pytest.raises(ConfigError):
        parse_config("command=solve", command="leaf")


def test_predicted_c0():
    assert predicted_c0(make_cone(3, 5), C_STAR) == pytest.approx(-C_STAR * 3 * math.sqrt(2) / 2)
    assert predicted_c0(make_cone(4, 4), C_STAR) == 0.0


def _run(tmp_path, command, text, out="out"):
    cfg = tmp_path / f"{command}.cfg"
    cfg.write_text(text)
    code = main([command, "--config", str(cfg), "--out", str(tmp_path / out)])
    manifest = json.loads((tmp_path / out / "manifest.json").read_text())
    return code, manifest


def _check_manifest(root, manifest):
    listed = {f["path"] for f in manifest["files"]}
    on_disk = {str(p.relative_to(root)) for p in root.rglob("*")
               if p.is_file() and p.name != "manifest.json"}
    assert listed == on_disk
    for f in manifest["files"]:
        assert hashlib.sha256((root / f["path"]).read_bytes()).hexdigest() == f["sha256"]


def test_cli_cone_info(tmp_path):
    code, manifest = _run(tmp_path, "cone-info", "i=3\nj=5\n")
    assert code == 0 and manifest["exit_code"] == 0
    info = json.loads((tmp_path / "out" / "cone_info.json").read_text())
    assert info["slope"] == pytest.approx(math.sqrt(2))
    assert (info["alpha_plus"], info["alpha_minus"]) == (-2.0, -3.0)
    assert info["A2_note"] == "A2 = 6/l^2"
    rows = list(csv.reader(open(tmp_path / "out" / "cone_table.csv")))
    assert rows[1][:3] == ["3", "5", "8"]
    _check_manifest(tmp_path / "out", manifest)


def test_cli_profile(tmp_path):
    code, manifest = _run(tmp_path, "profile", "")
    assert code == 0
    names = {f["path"] for f in manifest["files"]}
    assert names == {"profile_H.csv", "profile_eta.csv", "profile_eta2.csv", "moments.json"}
    moments = json.loads((tmp_path / "out" / "moments.json").read_text())
    assert moments["c_star"] > 0


def test_cli_leaf(tmp_path):
    code, manifest = _run(tmp_path, "leaf", "a=1\nd=20\n")
    assert code == 0
    fit = json.loads((tmp_path / "out" / "leaf_fit.json").read_text())
    assert fit["fit"]["exponents"][0] == -2.0
    _check_manifest(tmp_path / "out", manifest)


def test_cli_solve_is_deterministic(tmp_path):
    text = "a=1\nd=12\ndelta=0.2\n"
    c1, m1 = _run(tmp_path, "solve", text, "a")
    c2, m2 = _run(tmp_path, "solve", text, "b")
    assert c1 == c2 == 0
    assert m1 == m2
    _check_manifest(tmp_path / "a", m1)
    report = json.loads((tmp_path / "a" / "solve_report.json").read_text())
    assert report["converged"]


def test_cli_config_error_exit(tmp_path):
    code, manifest = _run(tmp_path, "solve", "i=1\ndelta=0.5\n")
    assert code == 2 and manifest["exit_code"] == 2
    assert len(manifest["error"]["errors"]) == 2


def test_cli_nonconvergence_exit(tmp_path):
    code, manifest = _run(tmp_path, "solve", "d=12\ndelta=0.2\ntol=1e-14\nmax_iter=1\n")
    assert code == 3
    assert manifest["error"]["type"] == "NonconvergenceError"


def test_cli_geometry_exit(tmp_path):
    code, manifest = _run(tmp_path, "solve", "a=100\nd=12\ndelta=0.2\n")
    assert code == 4
    assert manifest["exit_code"] == 4


def test_cli_missing_config(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.cfg"),
                 "--out", str(tmp_path / "o")]) == 2
