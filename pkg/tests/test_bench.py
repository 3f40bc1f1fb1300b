"""Kernel benchmark and backend-selection smoke tests."""

import os
import subprocess
import sys

from hnimsim.bench import format_report, run_benchmark
from hnimsim.kernels import available_backends, backend_name


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, HNIMSIM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from hnimsim.kernels import backend_name; print(backend_name())"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "fallback"


def test_benchmark_covers_all_backends():
    rows = run_benchmark(n_subblocks=2000, repeats=1)
    backends = available_backends()
    assert {r.backend for r in rows} == set(backends)
    assert {r.kernel for r in rows} == {"decoupled_ml", "llr", "psape"}
    assert all(r.seconds > 0 for r in rows)
    report = format_report(rows)
    assert "us/subblock" in report and "fallback" in report


def test_active_backend_is_known():
    assert backend_name() in available_backends()
