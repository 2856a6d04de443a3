"""Diagnostics comparing an RFM with its Hermite surrogates.

Covers the alignment statistic ``eta``, the degree rule built on it, the
linear covariance surrogate and its spectral gap, the Hermite closed form of
the feature-label cross-covariance and the input-label correlation.
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np

from . import activations, datagen, hermite


@dataclass(frozen=True)
class EtaReport:
    eta_i: np.ndarray
    eta: float
    n: int


@dataclass(frozen=True)
class EquivalenceGap:
    g_rfm: float
    g_surrogate: float
    abs_gap: float
    pct_gap: float

    @classmethod
    def from_errors(cls, g_rfm, g_surrogate):
        return cls(g_rfm, g_surrogate, abs(g_rfm - g_surrogate), percentage_gap(g_rfm, g_surrogate))


def _matrix(F):
    return F.F if isinstance(F, datagen.FeatureMatrix) else np.asarray(F, dtype=np.float64)


def compute_eta(F, gamma, xi, theta):
    """``eta_i = (xi + theta alpha gamma)^T f_i / sqrt(1 + theta alpha^2)`` and their max modulus."""
    F = _matrix(F)
    alpha = float(gamma @ xi)
    direction = (xi + theta * alpha * gamma) / math.sqrt(1.0 + theta * alpha * alpha)
    eta_i = F @ direction
    return EtaReport(eta_i=eta_i, eta=float(np.abs(eta_i).max()), n=F.shape[1])


def recommend_degree(eta, n, c_threshold=1.0, l_max=4):
    """Smallest ``l`` in ``2..l_max`` with ``eta <= c n^(-1/l)``; ``l_max`` if none qualifies."""
    if eta < 0 or n < 2 or l_max < 2:
        raise ValueError("need eta >= 0, n >= 2 and l_max >= 2")
    for l in range(2, l_max + 1):
        # boundary inclusive, with a hair of slack for the exact-equality case
        if eta <= c_threshold * n ** (-1.0 / l) * (1.0 + 1e-12):
            return l
    return l_max


def linear_surrogate_covariance(F, theta, gamma, mu1, mu_star, mu0=0.0):
    """``mu0^2 11^T + mu1^2 F (I + theta gamma gamma^T) F^T + mu*^2 I``.

    The default ``mu0 = 0`` gives the odd-activation form; pass ``mu0`` to get
    the second moment of the full noisy linear model ``mu0 + mu1 x + mu* z``.
    """
    F = _matrix(F)
    Fg = F @ gamma
    C = mu1 * mu1 * (F @ F.T + theta * np.outer(Fg, Fg))
    C[np.diag_indices_from(C)] += mu_star * mu_star
    if mu0:
        C += mu0 * mu0
    return C


def empirical_feature_covariance(model, act, F, m_mc, seed=None, block=4096):
    """``(1/m_mc) sum_j s_j s_j^T`` with ``s_j = act(F x_j)`` over fresh draws.

    Inputs are produced in fixed-size blocks from one generator, and the blocks
    are reduced in order, so the result does not depend on how it is scheduled.
    """
    F = _matrix(F)
    k = F.shape[0]
    if m_mc < k:
        warnings.warn(f"m_mc={m_mc} < k={k}: the empirical covariance is rank deficient", stacklevel=2)
    rng = np.random.default_rng(seed)
    acc = np.zeros((k, k))
    done = 0
    while done < m_mc:
        b = min(block, m_mc - done)
        X = datagen.sample_inputs(model, b, rng)
        S = activations.apply(act, X @ F.T, rng)
        acc += S.T @ S
        done += b
    return acc / m_mc


def spectral_norm_symmetric(A, rtol=1e-6, max_iter=10_000, seed=0):
    """Largest ``|eigenvalue|`` of a symmetric matrix by power iteration.

    Iterates on ``A`` and stops once the Rayleigh-quotient magnitude changes by
    less than ``rtol`` relative. Power iteration on ``A`` alone can stall when
    ``lambda_max`` and ``-lambda_max`` are (near) tied, so the estimate is
    taken as ``sqrt`` of the dominant eigenvalue of ``A^2``, which is
    unaffected by the sign split.
    """
    A = np.asarray(A, dtype=np.float64)
    if np.linalg.norm(A - A.T, np.inf) > 1e-8 * max(1.0, np.linalg.norm(A, np.inf)):
        raise ValueError("matrix must be symmetric")
    n = A.shape[0]
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = math.sqrt(float(v @ w))
        v = w / nw
        if abs(new - est) <= rtol * new:
            return new
        est = new
    return est


def covariance_gap(sigma_x_hat, surrogate):
    """Spectral norm of the difference between two feature covariances."""
    D = np.asarray(sigma_x_hat) - np.asarray(surrogate)
    return spectral_norm_symmetric(0.5 * (D + D.T))


def cross_covariance_closed_form(mu, mu_tilde, eta_i, terms):
    """Entries ``sum_{j < terms} mu_j mu~_j eta_i^j / j!``.

    Exact when every spiked feature row has unit norm; see
    :func:`cross_covariance_row_corrected` for the general case.
    """
    mu = np.asarray(getattr(mu, "mu", mu), dtype=np.float64)
    mu_tilde = np.asarray(getattr(mu_tilde, "mu", mu_tilde), dtype=np.float64)
    if terms > min(mu.size, mu_tilde.size):
        raise ValueError("terms exceeds the available coefficient range")
    eta_i = np.asarray(eta_i, dtype=np.float64)
    out = np.zeros_like(eta_i)
    power = np.ones_like(eta_i)
    for j in range(terms):
        out += mu[j] * mu_tilde[j] / math.factorial(j) * power
        power = power * eta_i
    return out


def cross_covariance_terms(mu, mu_tilde, eta_i, terms):
    """Individual degree contributions, shape ``(terms, k)``."""
    mu = np.asarray(getattr(mu, "mu", mu), dtype=np.float64)
    mu_tilde = np.asarray(getattr(mu_tilde, "mu", mu_tilde), dtype=np.float64)
    eta_i = np.asarray(eta_i, dtype=np.float64)
    return np.array([mu[j] * mu_tilde[j] / math.factorial(j) * eta_i**j for j in range(terms)])


def cross_covariance_row_corrected(sigma, mu_tilde, eta_i, row_norms, terms=30, order=hermite.DEFAULT_ORDER):
    """``E[sigma(f_i^T x) y]`` for rows of arbitrary spiked norm ``c_i = ||F_hat_i||``.

    By Gaussian integration by parts,
    ``E[sigma(u) He_j(v)] = eta^j c^-j E[sigma(c z) He_j(z)]`` for
    ``Var u = c^2``, ``Var v = 1`` and ``Cov(u, v) = eta``, hence entries
    ``sum_j mu~_j eta_i^j c_i^-j E[sigma(c_i z) He_j(z)] / j!``. Reduces to
    :func:`cross_covariance_closed_form` when all ``c_i = 1``.
    """
    sigma = activations.resolve(sigma)
    mu_tilde = np.asarray(getattr(mu_tilde, "mu", mu_tilde), dtype=np.float64)
    if terms > mu_tilde.size:
        raise ValueError("terms exceeds the available target coefficient range")
    nodes, weights = hermite.quadrature_rule(order, sigma.breakpoints)
    eta_i = np.asarray(eta_i, dtype=np.float64)
    row_norms = np.asarray(row_norms, dtype=np.float64)
    out = np.empty_like(eta_i)
    if sigma.breakpoints:
        # integrate in w = c z so the kinks stay on sub-interval edges:
        # E[sigma(c z) He_j(z)] = E_{w ~ N(0, c^2)}[sigma(w) He_j(w / c)]
        vals = sigma.evaluate(nodes)
        for i, (e, c) in enumerate(zip(eta_i, row_norms)):
            dens = np.exp(-0.5 * nodes**2 * (1.0 / (c * c) - 1.0)) / c
            scaled = hermite.hermite_table(nodes / c, terms - 1) @ (weights * dens * vals)
            out[i] = _series(scaled, mu_tilde, e, c, terms)
        return out
    table = hermite.hermite_table(nodes, terms - 1)
    for i, (e, c) in enumerate(zip(eta_i, row_norms)):
        scaled = table @ (weights * sigma.evaluate(c * nodes))
        out[i] = _series(scaled, mu_tilde, e, c, terms)
    return out


def _series(scaled, mu_tilde, e, c, terms):
    total = 0.0
    ratio = 1.0
    for j in range(terms):
        total += mu_tilde[j] * scaled[j] * ratio / math.factorial(j)
        ratio *= e / c
    return total


def cross_covariance_mc(model, act, F, samples, seed=None, block=20_000):
    """Monte Carlo ``E[sigma(F x) y]`` with per-coordinate standard errors.

    Returns ``(mean, se)``; blocks are drawn sequentially from one generator.
    """
    F = _matrix(F)
    act = activations.resolve(act)
    rng = np.random.default_rng(seed)
    k = F.shape[0]
    s1 = np.zeros(k)
    s2 = np.zeros(k)
    done = 0
    while done < samples:
        b = min(block, samples - done)
        X = datagen.sample_inputs(model, b, rng)
        prod = activations.apply(act, X @ F.T, rng) * datagen.labels(model, X)[:, None]
        s1 += prod.sum(axis=0)
        s2 += (prod * prod).sum(axis=0)
        done += b
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return mean, np.sqrt(var / samples)


def spiked_row_norms(F, gamma, theta):
    """``||F_hat_i||`` for the reparameterised feature rows."""
    return np.linalg.norm(datagen.spiked_features(_matrix(F), gamma, theta), axis=1)


def input_label_correlation_first_term(model, target_coeffs):
    """Leading term ``mu~_1 (xi + theta alpha gamma) / sqrt(1 + theta alpha^2)``."""
    mu = np.asarray(getattr(target_coeffs, "mu", target_coeffs), dtype=np.float64)
    if mu.size < 2:
        raise ValueError("need the target's degree-1 coefficient")
    return mu[1] * (model.xi + model.theta * model.alpha * model.gamma) / model.label_scale


def percentage_gap(g_a, g_b):
    """``100 |g_a - g_b| / g_b``."""
    if g_b <= 0:
        raise ValueError("reference error must be positive")
    return 100.0 * abs(g_a - g_b) / g_b
