import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from anelastic import kernels

ROOT = Path(__file__).resolve().parents[1]


def test_backends_agree(rng):
    backends = kernels.available_backends()
    a = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    b = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    ref = np.zeros((7, 10), complex)
    for i in range(5):
        for j in range(7):
            ref[i:i + 3, j:j + 4] += a[i, j] * b
    for fn in backends.values():
        np.testing.assert_allclose(fn(a, b), ref, atol=1e-13)


def test_selected_backend():
    assert kernels.BACKEND in kernels.available_backends()


def test_env_forces_python():
    env = dict(os.environ, ANELASTIC_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", "from anelastic import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
def test_benchmark_script():
    out = subprocess.run([sys.executable, str(ROOT / "benchmarks" / "bench_kernels.py"), "--orders", "2",
                          "--repeat", "1"], capture_output=True, text=True, check=True)
    assert "speedup" in out.stdout
