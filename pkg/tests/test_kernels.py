import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from fundsol import _kernels_py, kernels


def _random_series(seed, J=12, L=9):
    rng = np.random.default_rng(seed)
    B = 2 * L + 1
    P, Q = rng.normal(size=(J + 1, B)), rng.normal(size=(J + 1, B))
    r = rng.uniform(0.05, 1.5, 500)
    phi = rng.uniform(-np.pi, np.pi, 500)
    return P, Q, r, phi


def _direct(P, Q, m0, r, phi):
    L = (P.shape[1] - 1) // 2
    Y = np.empty((r.size, P.shape[1]))
    Y[:, 0] = 1 / np.sqrt(2 * np.pi)
    for l in range(1, L + 1):
        Y[:, 2 * l - 1] = np.cos(l * phi) / np.sqrt(np.pi)
        Y[:, 2 * l] = np.sin(l * phi) / np.sqrt(np.pi)
    pw = r[:, None] ** (m0 + np.arange(P.shape[0]))[None, :]
    return np.sum(pw * (Y @ P.T + np.log(r)[:, None] * (Y @ Q.T)), axis=1)


@pytest.mark.parametrize("m0", [-3.0, 0.0, 2.0])
def test_python_kernel_matches_direct(m0):
    P, Q, r, phi = _random_series(1)
    assert np.allclose(_kernels_py.eval_series_2d(P, Q, m0, r, phi), _direct(P, Q, m0, r, phi), rtol=1e-11)


def test_backends_agree():
    if kernels.BACKEND != "cython":
        pytest.skip("compiled extension not built")
    from fundsol import _kernels

    P, Q, r, phi = _random_series(2)
    a = _kernels.eval_series_2d(P, Q, -1.0, r, phi)
    b = _kernels_py.eval_series_2d(P, Q, -1.0, r, phi)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())


def test_pure_python_switch():
    code = "import fundsol.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, FUNDSOL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
