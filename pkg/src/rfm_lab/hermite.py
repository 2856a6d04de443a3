"""Probabilist's Hermite polynomials and Gaussian quadrature.

Conventions: ``He_0 = 1``, ``He_1 = x``, ``He_{i+1} = x He_i - i He_{i-1}``,
orthogonal under the standard normal density with ``E[He_i He_j] = i! delta_ij``.
A function is expanded as ``sigma(x) = sum_j mu_j He_j(x) / j!`` with
``mu_j = E[He_j(z) sigma(z)]``.
"""
from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

DEFAULT_ORDER = 64
DEFAULT_MAX_DEGREE = 8
NEGATIVE_RESIDUAL_TOL = 1e-9
# half-width of the truncated real line used by the split rule; the normal
# tail beyond 14 carries < 1e-44 of mass
SPLIT_HALF_WIDTH = 14.0


def hermite_eval(i, x):
    """Evaluate ``He_i`` at ``x`` (scalar or array) by the three-term recurrence."""
    if i < 0:
        raise ValueError("Hermite degree must be non-negative")
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.ones_like(x)
    if i == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, i):
        h_prev, h = h, x * h - j * h_prev
    return h if h.ndim else float(h)


def hermite_table(x, max_degree):
    """Rows ``He_0(x) .. He_L(x)``; shape ``(L + 1,) + x.shape``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for j in range(1, max_degree):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


@lru_cache(maxsize=32)
def _gauss_hermite(order):
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    weights = weights / math.sqrt(2.0 * math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite_rule(order=DEFAULT_ORDER):
    """Nodes and weights integrating against N(0, 1); exact to degree ``2*order - 1``."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    return _gauss_hermite(int(order))


@lru_cache(maxsize=32)
def _split_legendre(order, breakpoints, half_width):
    edges = np.unique(np.concatenate([[-half_width], np.asarray(breakpoints, float), [half_width]]))
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * t + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights) * np.exp(-0.5 * nodes**2) / math.sqrt(2.0 * math.pi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def split_legendre_rule(order=DEFAULT_ORDER, breakpoints=(0.0,), half_width=SPLIT_HALF_WIDTH):
    """Composite Gauss-Legendre rule for N(0, 1) split at the given breakpoints.

    Used for piecewise-smooth integrands (ReLU), where Gauss-Hermite converges
    only algebraically. ``order`` nodes are placed on every sub-interval.
    """
    bps = tuple(sorted(float(b) for b in breakpoints if -half_width < b < half_width))
    return _split_legendre(int(order), bps, float(half_width))


def quadrature_rule(order=DEFAULT_ORDER, breakpoints=()):
    if breakpoints:
        return split_legendre_rule(order, breakpoints)
    return gauss_hermite_rule(order)


def gaussian_expectation(f, order=DEFAULT_ORDER, breakpoints=()):
    """``E[f(z)]`` for ``z ~ N(0, 1)``."""
    nodes, weights = quadrature_rule(order, breakpoints)
    return float(np.dot(weights, f(nodes)))


@dataclass(frozen=True)
class HermiteBasis:
    max_degree: int = DEFAULT_MAX_DEGREE
    quadrature_order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        if self.quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")

    def rule(self, breakpoints=()):
        return quadrature_rule(self.quadrature_order, breakpoints)

    def gram(self):
        """Quadrature Gram matrix ``E[He_i He_j]`` for ``i, j <= max_degree``."""
        nodes, weights = self.rule()
        table = hermite_table(nodes, self.max_degree)
        return (table * weights) @ table.T


@dataclass(frozen=True)
class HermiteCoefficients:
    """Hermite coefficients ``mu_0 .. mu_L`` of one function.

    ``residual_noise[l - 1]`` holds ``mu*_l`` for ``l = 1 .. L + 1``, the standard
    deviation left over after keeping degrees ``0 .. l - 1``.
    """

    mu: np.ndarray
    second_moment: float
    residual_noise: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "mu", mu)
        if self.residual_noise is None:
            noise = np.array(
                [residual_noise_level(mu, l, self.second_moment) for l in range(1, mu.size + 1)]
            )
            object.__setattr__(self, "residual_noise", noise)

    @property
    def max_degree(self):
        return self.mu.size - 1

    def noise_level(self, l):
        """``mu*_l``."""
        if not 1 <= l <= self.mu.size:
            raise ValueError(f"l must be in [1, {self.mu.size}], got {l}")
        return float(self.residual_noise[l - 1])


def _check_degree_guard(j, order, guard):
    if guard and j > 2 * order - 1:
        raise ValueError(
            f"degree {j} exceeds the reliable range 2*order-1 = {2 * order - 1} of the quadrature"
        )


def hermite_coefficient(sigma, j, order=DEFAULT_ORDER, breakpoints=(), guard=True):
    """``mu_j = E[He_j(z) sigma(z)]`` by deterministic quadrature."""
    if j < 0:
        raise ValueError("degree must be non-negative")
    _check_degree_guard(j, order, guard)
    nodes, weights = quadrature_rule(order, breakpoints)
    return float(np.dot(weights, hermite_eval(j, nodes) * sigma(nodes)))


def hermite_coefficients(sigma, max_degree=DEFAULT_MAX_DEGREE, order=DEFAULT_ORDER, breakpoints=(), guard=True):
    """All coefficients up to ``max_degree`` plus ``E[sigma(z)^2]`` from one rule."""
    _check_degree_guard(max_degree, order, guard)
    nodes, weights = quadrature_rule(order, breakpoints)
    values = sigma(nodes)
    table = hermite_table(nodes, max_degree)
    mu = table @ (weights * values)
    second = float(np.dot(weights, values**2))
    return HermiteCoefficients(mu=mu, second_moment=second)


def residual_noise_level(mu, l, second_moment, tol=NEGATIVE_RESIDUAL_TOL):
    """``mu*_l = sqrt(E[sigma^2] - sum_{j<l} mu_j^2 / j!)``, clamped at zero.

    ``mu`` may be an array of coefficients or a :class:`HermiteCoefficients`.
    Raises ``ValueError`` when the residual is below ``-tol``, which means the
    coefficients are inconsistent with the second moment.
    """
    if isinstance(mu, HermiteCoefficients):
        mu = mu.mu
    mu = np.asarray(mu, dtype=np.float64)
    if l < 0 or l > mu.size:
        raise ValueError(f"l must be in [0, {mu.size}], got {l}")
    explained = sum(mu[j] ** 2 / math.factorial(j) for j in range(l))
    resid = second_moment - explained
    if resid < -tol:
        raise ValueError(
            f"negative residual variance {resid:.3e}: coefficients exceed E[sigma^2] "
            "(insufficient quadrature order?)"
        )
    return math.sqrt(max(resid, 0.0))


def mehler_inner_product(i, j, rho, c=1.0, order=DEFAULT_ORDER):
    """Tensor Gauss-Hermite value of ``E[He_i(rho z1 + sqrt(c^2 - rho^2) z2) He_j(z1)]``.

    For ``c = 1`` this equals ``i! rho^i delta_ij``. For ``c != 1`` the identity
    still holds when ``j >= i``, but pairs with ``j < i`` of equal parity pick
    up lower-order terms of ``He_i`` (e.g. ``E[He_2(c z)] = c^2 - 1``).
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if abs(rho) > c:
        raise ValueError(f"|rho| = {abs(rho)} exceeds c = {c}")
    nodes, weights = gauss_hermite_rule(order)
    z1 = nodes[:, None]
    z2 = nodes[None, :]
    arg = rho * z1 + math.sqrt(c * c - rho * rho) * z2
    vals = hermite_eval(i, arg) * hermite_eval(j, z1)
    return float(weights @ vals @ weights)


def scaled_orthogonality(i, j, c, order=DEFAULT_ORDER):
    """Gauss-Hermite value of ``E[He_i(c z) He_j(z)]``; see :func:`mehler_inner_product`."""
    nodes, weights = gauss_hermite_rule(order)
    return float(np.dot(weights, hermite_eval(i, c * nodes) * hermite_eval(j, nodes)))


def scaled_orthogonality_exact(i, j, c):
    """Closed form of ``E[He_i(c z) He_j(z)]`` valid for every ``c``.

    Uses ``He_i(c z) = sum_r c^(i-2r) (c^2-1)^r i! / (r! 2^r (i-2r)!) He_(i-2r)(z)``.
    """
    if j > i or (i - j) % 2:
        return 0.0
    r = (i - j) // 2
    coef = math.factorial(i) / (math.factorial(r) * 2**r * math.factorial(j))
    return coef * c**j * (c * c - 1.0) ** r * math.factorial(j)
