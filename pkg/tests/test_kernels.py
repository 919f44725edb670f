import os
import subprocess
import sys

import numpy as np

from edgeburst import kernels


def _random_system(rng, dim=12):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return (-1j * m).astype(complex), psi.astype(complex)


def test_numba_and_numpy_paths_agree_bitwise():
    if kernels.rk4_chunk_numba is None:
        import pytest
        pytest.skip("numba unavailable")
    a, psi = _random_system(np.random.default_rng(7))
    s1 = np.empty((64, len(psi)), complex)
    s2 = np.empty((64, len(psi)), complex)
    out1 = kernels.rk4_chunk_numba(a, psi.copy(), 0.01, s1)
    out2 = kernels.rk4_chunk_numpy(a, psi.copy(), 0.01, s2)
    assert np.array_equal(out1, out2)
    assert np.array_equal(s1, s2)


def test_env_flag_selects_numpy_path():
    code = (
        "import os; os.environ['EDGEBURST_DISABLE_NUMBA'] = '1';"
        "from edgeburst import kernels;"
        "assert not kernels.NUMBA_ENABLED;"
        "assert kernels.rk4_chunk is kernels.rk4_chunk_numpy;"
        "print('ok')"
    )
    env = dict(os.environ, EDGEBURST_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "ok"


def test_single_step_matches_chunk():
    a, psi = _random_system(np.random.default_rng(3))
    states = np.empty((1, len(psi)), complex)
    final = kernels.rk4_chunk_numpy(a, psi.copy(), 0.02, states)
    assert np.array_equal(kernels.rk4_step(a, psi, 0.02), final)
