import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from subdiffusion import __version__
from subdiffusion.cli import main
from subdiffusion.ml_special import ml_eval
from subdiffusion.serialization import read_snapshots

CONFIG = {
    "problem": {
        "dim": 2,
        "rho": 0.5,
        "horizon": 1.0,
        "band_K": 10,
        "phi": {"modes": [{"n": [1, 2], "value": [1.0, 0.5]}, {"n": [0, 1], "value": [-0.25, 0.0]}]},
        "forcing": {"kind": "constant", "modes": [{"n": [1, 0], "value": [0.5, 0.0]}]},
    },
    "eval_times": [0.05, 0.5, 1.0],
    "grid_points": 9,
    "verify": {"residual": {"steps": 1024, "tolerance": 0.05}},
}


def _write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1))
    return path


def _files(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir()) if p.name != "manifest.json"}


def test_solve_writes_snapshots_and_manifest(tmp_path):
    cfg = _write(tmp_path, CONFIG)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["manifest"]["version"] == __version__
    assert manifest["problem"] == CONFIG["problem"]
    names = set(manifest["manifest"]["files"])
    assert {"snapshot_0000.json", "snapshot_0002.csv", "grid_0001.csv"} <= names
    snaps = read_snapshots(tmp_path / "a")
    assert [s.t for s in snaps] == CONFIG["eval_times"]
    header = (tmp_path / "a" / "snapshot_0000.csv").read_text().splitlines()[0]
    assert header == "n1,n2,re,im"


def test_solve_is_deterministic_and_manifest_round_trips(tmp_path):
    cfg = _write(tmp_path, CONFIG)
    for d in ("a", "b"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / d), "--quiet"]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")
    # the manifest is itself a valid config reproducing the run
    manifest = tmp_path / "a" / "manifest.json"
    assert main(["solve", "--config", str(manifest), "--out", str(tmp_path / "c"), "--quiet"]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "c")


def test_verify_passes_then_detects_corruption(tmp_path, capsys):
    cfg = _write(tmp_path, CONFIG)
    out = tmp_path / "run"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] is True
    assert set(report["checks"]) == {"residual", "initial_limit", "snapshots"}
    assert "PASS" in capsys.readouterr().out

    snap = out / "snapshot_0001.json"
    doc = json.loads(snap.read_text())
    key = next(iter(doc["coefficients"]))
    doc["coefficients"][key][0] *= 1.001
    snap.write_text(json.dumps(doc))
    assert main(["verify", "--config", str(cfg), "--out", str(out), "--quiet"]) == 4


def test_config_errors_report_line(tmp_path, capsys):
    bad = dict(CONFIG, problem=dict(CONFIG["problem"], bogus=1))
    cfg = _write(tmp_path, bad, "bad.json")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    err = capsys.readouterr().err
    assert "bad.json:" in err and "bogus" in err
    assert main(["solve", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    out_of_range = dict(CONFIG, problem=dict(CONFIG["problem"], rho=1.5))
    assert main(["solve", "--config", str(_write(tmp_path, out_of_range)), "--out", str(tmp_path)]) == 2


def test_ml_table(capsys):
    assert main(["ml-table", "--rho", "0.5", "--mu", "1", "--z-min", "-4", "--z-max", "1", "--count", "6"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "z,E" and len(lines) == 7
    for line in lines[1:]:
        z, e = map(float, line.split(","))
        assert e == ml_eval((0.5, 1.0), z)


def test_ml_table_errors(capsys):
    assert main(["ml-table", "--rho", "0.5", "--mu", "1", "--z-min", "0", "--z-max", "1", "--count", "1"]) == 2
    assert main(["ml-table", "--rho", "1.5", "--mu", "1", "--z-min", "0", "--z-max", "1", "--count", "3"]) == 2
    assert main(["ml-table", "--rho", "0.1", "--mu", "1", "--z-min", "0", "--z-max", "50", "--count", "3"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["ml-table", "--rho", "0.5"])
    assert exc.value.code == 2


def test_fracop(tmp_path):
    t = np.linspace(0.0, 1.0, 257)
    src = tmp_path / "sig.csv"
    src.write_text("t,value\n" + "".join(f"{a!r},{a!r}\n" for a in t.tolist()))
    dst = tmp_path / "out.csv"
    assert main(["fracop", "--input", str(src), "--op", "caputo", "--order", "0.5", "--out", str(dst)]) == 0
    rows = [list(map(float, r.split(","))) for r in dst.read_text().splitlines()[1:]]
    assert len(rows) == 257
    assert rows[-1][1] == pytest.approx(1.0 / math.gamma(1.5), rel=1e-12)
    assert main(["fracop", "--input", str(src), "--op", "integral", "--order", "1", "--out", str(dst)]) == 0
    last = float(dst.read_text().splitlines()[-1].split(",")[1])
    assert last == pytest.approx(0.5, rel=1e-12)


def test_fracop_rejects_bad_input(tmp_path):
    src = tmp_path / "sig.csv"
    src.write_text("time,value\n0,1\n")
    assert main(["fracop", "--input", str(src), "--op", "rl", "--order", "0.5"]) == 2
    src.write_text("t,value\n0,1\n0.1,1\n0.3,1\n")
    assert main(["fracop", "--input", str(src), "--op", "rl", "--order", "0.5"]) == 2
    src.write_text("t,value\n0,1\n0.1,1\n0.2,1\n")
    assert main(["fracop", "--input", str(src), "--op", "rl", "--order", "1.5"]) == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "subdiffusion.cli", "--version"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and proc.stdout.strip() == __version__
