import os
import runpy
import subprocess
import sys
from pathlib import Path

from popaware import kernels

ROOT = Path(__file__).resolve().parents[1]


def test_pure_python_fallback_is_selected_by_env():
    code = "from popaware import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, POPAWARE_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"


def test_backend_reported():
    assert kernels.BACKEND in ("python", "cython")


def test_benchmark_runs(capsys):
    mod = runpy.run_path(str(ROOT / "benchmarks" / "bench_kernels.py"))
    rows = mod["run"](1)
    cases = {r["case"] for r in rows}
    assert {"objective", "objective_along", "auc_5000", "fit_hierarchy"} <= cases
    assert all(r["seconds"] > 0 for r in rows)
