"""Spiked-covariance data, single-index labels and random feature matrices.

Inputs follow ``x ~ N(0, I + theta gamma gamma^T)`` and labels are
``y = sigma_*(xi^T x / sqrt(1 + theta alpha^2))`` with ``alpha = gamma^T xi``.
Feature rows are ``f_i ~ N(0, I / (n + theta))``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .activations import Activation, resolve

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SpikedModel:
    """Data-generating process.

    ``theta`` is materialised from ``theta_scale * n ** theta_exponent``
    unless given explicitly via :meth:`with_theta`.
    """

    gamma: np.ndarray
    xi: np.ndarray
    theta: float
    target: Activation
    theta_scale: float = 1.0
    theta_exponent: float = float("nan")
    alpha: float = field(init=False)

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=np.float64)
        xi = np.asarray(self.xi, dtype=np.float64)
        if gamma.ndim != 1 or gamma.shape != xi.shape:
            raise ValueError("gamma and xi must be vectors of equal length")
        if abs(np.linalg.norm(gamma) - 1.0) > UNIT_TOL or abs(np.linalg.norm(xi) - 1.0) > UNIT_TOL:
            raise ValueError("gamma and xi must have unit Euclidean norm")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "target", resolve(self.target))
        object.__setattr__(self, "alpha", float(gamma @ xi))

    @property
    def n(self):
        return self.gamma.size

    @classmethod
    def build(cls, gamma, xi, target, theta_scale=1.0, theta_exponent=0.0):
        """Build with ``theta = theta_scale * n ** theta_exponent``."""
        if theta_scale <= 0:
            raise ValueError("theta_scale must be positive")
        if not 0.0 <= theta_exponent <= 0.5:
            raise ValueError("theta_exponent must lie in [0, 1/2]")
        n = np.asarray(gamma).size
        theta = theta_scale * n**theta_exponent
        return cls(gamma=gamma, xi=xi, theta=theta, target=target,
                   theta_scale=theta_scale, theta_exponent=theta_exponent)

    @property
    def label_scale(self):
        return math.sqrt(1.0 + self.theta * self.alpha**2)

    @property
    def spike_shift(self):
        """``sqrt(1 + theta) - 1``: the rank-one factor mapping N(0, I) to the spiked law."""
        return math.sqrt(1.0 + self.theta) - 1.0


def _unit(v):
    return v / np.linalg.norm(v)


def make_signal_pair(n, mode="random", alpha=None, rng=None):
    """Return unit vectors ``(gamma, xi)``.

    ``mode="aligned"`` gives ``xi = alpha gamma + sqrt(1 - alpha^2) u`` with ``u``
    a Gram-Schmidt unit vector orthogonal to ``gamma``; ``mode="random"`` draws
    two independent normalised Gaussian vectors.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(rng)
    gamma = _unit(rng.standard_normal(n))
    if mode == "random":
        return gamma, _unit(rng.standard_normal(n))
    if mode != "aligned":
        raise ValueError(f"mode must be 'aligned' or 'random', got {mode!r}")
    if alpha is None or abs(alpha) > 1.0:
        raise ValueError("aligned mode requires |alpha| <= 1")
    alpha = float(alpha)
    if abs(alpha) == 1.0:
        return gamma, alpha * gamma
    g = rng.standard_normal(n)
    u = _unit(g - (gamma @ g) * gamma)
    u = _unit(u - (gamma @ u) * gamma)
    xi = alpha * gamma + math.sqrt(1.0 - alpha * alpha) * u
    # renormalise against rounding, then pin the inner product
    xi = _unit(xi)
    return gamma, xi


def spike_transform(G, gamma, theta):
    """Map rows ``g ~ N(0, I)`` to ``g + (sqrt(1+theta) - 1)(gamma^T g) gamma``."""
    a = math.sqrt(1.0 + theta) - 1.0
    return G + a * np.outer(G @ gamma, gamma)


def sample_inputs(model, m, rng=None):
    """``m`` rows from ``N(0, I + theta gamma gamma^T)`` via the exact rank-one shift."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(rng)
    G = rng.standard_normal((m, model.n))
    return spike_transform(G, model.gamma, model.theta)


def labels(model, X):
    """``y_i = sigma_*(xi^T x_i / sqrt(1 + theta alpha^2))``."""
    return model.target.evaluate((np.asarray(X) @ model.xi) / model.label_scale)


@dataclass(frozen=True)
class FeatureMatrix:
    F: np.ndarray
    theta: float
    seed: object = None

    @property
    def k(self):
        return self.F.shape[0]

    @property
    def n(self):
        return self.F.shape[1]

    def preactivations(self, X):
        return np.asarray(X) @ self.F.T


def sample_feature_matrix(n, k, theta, rng=None):
    """``k x n`` matrix with i.i.d. ``N(0, 1/(n + theta))`` entries."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be >= 1")
    if theta < 0:
        raise ValueError("theta must be non-negative")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    F = rng.standard_normal((k, n)) / math.sqrt(n + theta)
    return FeatureMatrix(F=F, theta=float(theta), seed=seed)


def spiked_features(F, gamma, theta):
    """``F_hat = F (I + (sqrt(1+theta) - 1) gamma gamma^T)``; ``F x`` equals ``F_hat g`` in law."""
    F = F.F if isinstance(F, FeatureMatrix) else np.asarray(F)
    a = math.sqrt(1.0 + theta) - 1.0
    return F + a * np.outer(F @ gamma, gamma)


@dataclass(frozen=True)
class AdmissibilityStats:
    max_offdiag: float
    max_diag_dev: float
    fhat_spectral_norm: float


def admissibility_stats(F, gamma, theta):
    """Report the feature-matrix regularity statistics (never enforced)."""
    F = F.F if isinstance(F, FeatureMatrix) else np.asarray(F, dtype=np.float64)
    Fg = F @ gamma
    G = F @ F.T + theta * np.outer(Fg, Fg)
    diag_dev = float(np.abs(np.diag(G) - 1.0).max())
    offdiag = kernels.max_abs_offdiag(G)
    fhat_norm = float(np.linalg.norm(spiked_features(F, gamma, theta), 2))
    return AdmissibilityStats(max_offdiag=offdiag, max_diag_dev=diag_dev, fhat_spectral_norm=fhat_norm)
