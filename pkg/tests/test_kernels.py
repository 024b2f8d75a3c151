import os
import subprocess
import sys

import numpy as np
import pytest

from twopatch import kernels
from twopatch.grid import build_grid, closure_value

compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


def _setup(seed=0):
    rng = np.random.default_rng(seed)
    g = build_grid(-5, 5, 0.05)
    u = 0.5 + 0.1 * np.sin(g.x) + 0.01 * rng.random(g.size)
    return g, u


@compiled
@pytest.mark.parametrize("kinds", [(0, 0), (1, 1), (0, 1)])
@pytest.mark.parametrize("coef_right", [(0.0, 1.2, -0.6), (0.0, 1.0, 0.5, -1.5)])
def test_advance_backends_agree(kinds, coef_right):
    g, u = _setup()
    cl, cr = np.array([0.0, 1.0, -1.0]), np.array(coef_right)
    args = (200, 5e-4, g.h, 1.0, 0.5, 1.7, g.index_zero, cl, cr, kinds[0], 0.9, kinds[1], 0.1)
    a, b = u.copy(), u.copy()
    kernels.advance(a, *args, backend="compiled")
    kernels.advance(b, *args, backend="python")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


def test_advance_sets_closure_and_boundaries():
    g, u = _setup()
    cl = np.array([0.0, 1.0, -1.0])
    kernels.advance(u, 3, 5e-4, g.h, 1.0, 0.5, 1.7, g.index_zero, cl, cl,
                    kernels.DIRICHLET, 0.9, kernels.NEUMANN, 0.0)
    assert u[0] == 0.9
    assert u[-1] == pytest.approx((4 * u[-2] - u[-3]) / 3, abs=1e-15)
    assert u[g.index_zero] == pytest.approx(closure_value(u, g.index_zero, 1.7), abs=1e-15)


@compiled
def test_rk4_backends_agree():
    coef = np.array([0.0, 1.0, -1.0])
    a = kernels.rk4_wave(1 - 1e-8, -1e-8, 0.00125, 8000, 4, 2.5, 1.0, coef, backend="compiled")
    b = kernels.rk4_wave(1 - 1e-8, -1e-8, 0.00125, 8000, 4, 2.5, 1.0, coef, backend="python")
    np.testing.assert_allclose(a[0], b[0], rtol=1e-14, atol=0)
    assert a[1] == pytest.approx(b[1], rel=1e-12)
    assert a[0].shape == (2001,)


def test_env_forces_python_backend():
    env = dict(os.environ, TWOPATCH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from twopatch import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
