import importlib.util
import os
import subprocess
import sys

import numpy as np

from pevolab import kernels


def _backend_in_subprocess(env_value):
    env = dict(os.environ, PEVOLAB_PURE_PYTHON=env_value)
    out = subprocess.run([sys.executable, "-c", "from pevolab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_fallback_forced_by_environment():
    assert _backend_in_subprocess("1") == "python"


def test_default_backend_matches_availability():
    built = importlib.util.find_spec("pevolab._kernels") is not None
    assert _backend_in_subprocess("") == ("cython" if built else "python")
    assert kernels.BACKEND == ("cython" if kernels.compiled_backend is not None else "python")


def test_python_ramp_is_smooth_step():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(kernels.python_backend.ramp(t), [0, 0, 0.5, 1, 1], atol=1e-15)


def test_cumulative_table_matches_partial_sums():
    py = kernels.python_backend
    R = np.array([5.0])
    table = py.cumulative_weighted_integral(R, 1.0, 0.1, 50)
    piece = py.partial_weighted_integral(R, 1.0, np.array([1.0]), np.array([1.1]))
    assert abs(table[0, 11] - table[0, 10] - piece[0]) <= 1e-15
