import math
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from rfm_lab import kernels

finite = st.floats(-8, 8, allow_nan=False)
arrays = hnp.arrays(np.float64, hnp.array_shapes(min_dims=1, max_dims=2, max_side=12), elements=finite)


@given(arrays)
def test_pointwise_kernels_agree(x):
    for name in ("relu", "softplus", "tanh"):
        a = getattr(kernels, f"{name}_numpy")(x)
        b = getattr(kernels, f"{name}_numba")(x)
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)
        assert a.shape == x.shape


@given(arrays, st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(0, 2))
def test_hermite_series_agrees(x, coeffs, noise):
    c = np.array(coeffs)
    z = np.random.default_rng(0).standard_normal(x.shape)
    a = kernels.hermite_series_numpy(x, c, noise, z)
    b = kernels.hermite_series_numba(x, c, noise, z)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(kernels.hermite_series_numpy(x, c), kernels.hermite_series_numba(x, c),
                               rtol=1e-12, atol=1e-9)


def test_softplus_known_values():
    assert kernels.softplus(np.array([0.0]))[0] == math.log(2.0)
    np.testing.assert_allclose(kernels.softplus(np.array([-800.0, 800.0])), [0.0, 800.0])


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=10),
                  elements=st.floats(-5, 5)))
def test_max_abs_offdiag_agrees(G):
    G = G[:, : G.shape[0]] if G.shape[1] >= G.shape[0] else G[: G.shape[1], :]
    a = kernels.max_abs_offdiag_numpy(G)
    assert a == kernels.max_abs_offdiag_numba(np.ascontiguousarray(G))
    if G.shape[0] < 2:
        assert a == 0.0


def _backend(value):
    env = dict(os.environ, RFM_LAB_BACKEND=value)
    out = subprocess.run([sys.executable, "-c", "import rfm_lab; print(rfm_lab.BACKEND)"],
                         capture_output=True, text=True, env=env)
    return out


def test_backend_flag_selects_implementation():
    assert _backend("numpy").stdout.strip() == "numpy"
    assert _backend("numba").stdout.strip() == "numba"
    assert _backend("fortran").returncode != 0
