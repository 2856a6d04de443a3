"""Elementwise hot loops with numba and pure-numpy implementations.

Both implementations are always importable (``*_numpy`` / ``*_numba``) so the
benchmark and the tests can compare them; the unsuffixed names dispatch on
``rfm_lab._jit.BACKEND``.
"""
import math

import numpy as np

from ._jit import BACKEND, njit


def hermite_series_numpy(x, coeffs, noise_level=0.0, z=None):
    # sum_j coeffs[j] * He_j(x) (+ noise_level * z); coeffs already carry 1/j!
    x = np.asarray(x, dtype=np.float64)
    out = np.full_like(x, coeffs[0])
    if len(coeffs) > 1:
        h_prev = np.ones_like(x)
        h = x.copy()
        out += coeffs[1] * h
        for j in range(1, len(coeffs) - 1):
            h_prev, h = h, x * h - j * h_prev
            out += coeffs[j + 1] * h
    if z is not None and noise_level != 0.0:
        out += noise_level * z
    return out


@njit(cache=True)
def _hermite_series_numba(x, coeffs, noise_level, z, use_noise):
    flat = x.ravel()
    zf = z.ravel()
    out = np.empty_like(flat)
    L = coeffs.shape[0]
    for idx in range(flat.shape[0]):
        xv = flat[idx]
        acc = coeffs[0]
        if L > 1:
            h_prev = 1.0
            h = xv
            acc += coeffs[1] * h
            for j in range(1, L - 1):
                h_next = xv * h - j * h_prev
                h_prev = h
                h = h_next
                acc += coeffs[j + 1] * h
        if use_noise:
            acc += noise_level * zf[idx]
        out[idx] = acc
    return out.reshape(x.shape)


def hermite_series_numba(x, coeffs, noise_level=0.0, z=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    use_noise = z is not None and noise_level != 0.0
    zz = np.ascontiguousarray(z, dtype=np.float64) if use_noise else np.zeros(1)
    if use_noise and zz.shape != x.shape:
        raise ValueError("noise array must match the pre-activation shape")
    return _hermite_series_numba(x, coeffs, float(noise_level), zz, use_noise)


def relu_numpy(x):
    return np.maximum(x, 0.0)


def softplus_numpy(x):
    return np.logaddexp(0.0, x)


def tanh_numpy(x):
    return np.tanh(x)


@njit(cache=True)
def _pointwise_numba(x, which):
    flat = x.ravel()
    out = np.empty_like(flat)
    for idx in range(flat.shape[0]):
        v = flat[idx]
        if which == 0:
            out[idx] = v if v > 0.0 else 0.0
        elif which == 1:
            # stable log(1 + e^v)
            out[idx] = max(v, 0.0) + math.log1p(math.exp(-abs(v)))
        else:
            out[idx] = math.tanh(v)
    return out.reshape(x.shape)


def relu_numba(x):
    return _pointwise_numba(np.ascontiguousarray(x, dtype=np.float64), 0)


def softplus_numba(x):
    return _pointwise_numba(np.ascontiguousarray(x, dtype=np.float64), 1)


def tanh_numba(x):
    return _pointwise_numba(np.ascontiguousarray(x, dtype=np.float64), 2)


def max_abs_offdiag_numpy(G):
    k = G.shape[0]
    if k < 2:
        return 0.0
    iu = np.triu_indices(k, 1)
    return float(np.abs(G[iu]).max())


@njit(cache=True)
def _max_abs_offdiag_numba(G):
    k = G.shape[0]
    best = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            v = abs(G[i, j])
            if v > best:
                best = v
    return best


def max_abs_offdiag_numba(G):
    return float(_max_abs_offdiag_numba(np.ascontiguousarray(G, dtype=np.float64)))


_IMPLS = {
    "numpy": (hermite_series_numpy, relu_numpy, softplus_numpy, tanh_numpy, max_abs_offdiag_numpy),
    # numpy's vectorised tanh beats a scalar libm loop, so both backends use it
    "numba": (hermite_series_numba, relu_numba, softplus_numba, tanh_numpy, max_abs_offdiag_numba),
}

hermite_series, relu, softplus, tanh, max_abs_offdiag = _IMPLS[BACKEND]
