import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from zonodpp.cli import main

ROOT = Path(__file__).resolve().parent.parent


def write_cfg(tmp_path, text):
    (tmp_path / "m.txt").write_text("2 4\n1 2 0 -1\n0 1 2 1\n")
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


SMALL_CFG = """
model = matrix
matrix_path = m.txt
sampler = vol-zonotope
chains = 2
steps = 3000
seed = 1
subset = 1
"""


def test_validate_k10(capsys):
    assert main(["validate", "--config", str(ROOT / "configs" / "k10_weighted_compare.cfg")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok")
    assert "r = 9" in out and "n = 45" in out
    assert "oracle metrics are disabled" in out


@pytest.mark.parametrize("text, field", [
    ("sampler = vol-zonotope\nsteps = 10\n", "model"),
    ("model = complete\nvertices = 5\nsteps = -5\n", "steps"),
    ("model = complete\nvertices = 5\n", "steps"),
    ("model = complete\nvertices = 5\nsteps = 10\nsampler = gibbs\n", "sampler"),
    ("model = complete\nvertices = 5\nsteps = ten\n", "steps"),
    ("model = complete\nvertices = 5\nsteps = 10\nbogus = 1\n", "bogus"),
    ("model = matrix\nmatrix_path = nope.txt\nsteps = 10\n", "matrix_path"),
])
def test_config_errors_exit_1(tmp_path, capsys, text, field):
    cfg = write_cfg(tmp_path, text)
    assert main(["validate", "--config", cfg]) == 1
    assert field in capsys.readouterr().err


def test_flag_overrides_file(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL_CFG)
    assert main(["run", "--config", cfg, "--steps", "-1", "--out", str(tmp_path / "o")]) == 1


def test_run_writes_artifacts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL_CFG)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "tv=" in text and "psrf=" in text
    man = json.loads((out / "manifest.json").read_text())
    assert man["complete"] is True
    assert man["seeds"]["chain"] == 1 and "tiling_objective" in man["seeds"]
    assert man["model"]["r"] == 2 and man["subset"] == [1]
    listed = set(man["files"]["traces"]["vol-zonotope"]) | {man["files"]["metrics"]}
    listed |= set(man["files"]["psrf"]) | {man["files"]["manifest"]}
    on_disk = {str(p) for p in out.rglob("*") if p.is_file()}
    assert on_disk == listed
    assert man["summary"]["vol-zonotope"]["tv_pooled"] < 0.1


def test_run_is_reproducible_and_parallel_safe(tmp_path):
    cfg = write_cfg(tmp_path, SMALL_CFG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b), "--parallelism", "2"]) == 0
    for p in sorted((a / "traces").iterdir()):
        assert p.read_bytes() == (b / "traces" / p.name).read_bytes()
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()


def test_compare_mode_and_psrf_verb(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL_CFG.replace("vol-zonotope", "compare"))
    out = tmp_path / "cmp"
    assert main(["run", "--config", cfg, "--out", str(out), "--steps", "500"]) == 0
    names = sorted(p.name for p in (out / "traces").iterdir())
    assert names == ["basis-exchange-000.csv", "basis-exchange-001.csv",
                     "vol-zonotope-000.csv", "vol-zonotope-001.csv"]
    capsys.readouterr()
    assert main(["psrf", str(out)]) == 0
    report = capsys.readouterr().out
    assert report.count("[psrf]") == 2
    psrf_file = (out / "psrf-vol-zonotope.txt").read_text()
    assert psrf_file in report


def test_wall_clock_compare(tmp_path):
    cfg = write_cfg(tmp_path, SMALL_CFG.replace("vol-zonotope", "compare")
                    .replace("steps = 3000", "seconds = 0.3"))
    out = tmp_path / "wc"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["seconds"] == 0.3
    assert man["summary"]["basis-exchange"]["steps"][0] > man["summary"]["vol-zonotope"]["steps"][0]


def test_enumerate_verb(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "model = matrix\nmatrix_path = m.txt\n")
    assert main(["enumerate", "--config", cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "basis,probability" and len(lines) == 7
    assert lines[4].startswith("1 2,") and float(lines[4].split(",")[1]) == pytest.approx(16 / 35)


def test_enumerate_guard_exit(capsys):
    cfg = str(ROOT / "configs" / "k10_weighted_compare.cfg")
    assert main(["enumerate", "--config", cfg]) == 1


def test_jsonl_and_graph_models(tmp_path):
    cfg = write_cfg(tmp_path, "model = barabasi-albert\nvertices = 8\nba_k = 2\n"
                              "sampler = aldous-broder\nsteps = 50\ntrace_format = both\n")
    out = tmp_path / "ab"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "traces" / "aldous-broder-000.jsonl").exists()
    assert (out / "traces" / "aldous-broder-000.csv").exists()


def test_runtime_error_exit_2(tmp_path, capsys):
    (tmp_path / "m.txt").write_text("2 3\n1 2 3\n2 4 6\n")
    p = tmp_path / "run.cfg"
    p.write_text("model = matrix\nmatrix_path = m.txt\nsteps = 10\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
    assert "rank" in capsys.readouterr().err


def _py(code, **env):
    full = {**os.environ, **env}
    return subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                          env=full, check=True).stdout.strip()


def test_pure_python_backend_selected_by_env():
    assert _py("import zonodpp; print(zonodpp.backend)", ZONODPP_PURE_PYTHON="1") == "python"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "zonodpp", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "validate" in out.stdout
