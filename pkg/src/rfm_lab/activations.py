"""Pointwise activations, including the noisy Hermite-polynomial surrogates.

Noisy kinds (``hermite_poly`` and ``cubic_noisy``) evaluate
``sum_j c_j He_j(x) / j! + s z`` with one fresh ``z ~ N(0, 1)`` per entry.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import hermite, kernels

DETERMINISTIC_KINDS = ("relu", "tanh", "softplus", "identity", "affine")
NOISY_KINDS = ("hermite_poly", "cubic_noisy")
KINDS = DETERMINISTIC_KINDS + NOISY_KINDS


@dataclass(frozen=True)
class Activation:
    """Immutable activation descriptor.

    ``params`` holds ``(a0, a1)`` for ``affine``, the Hermite coefficients
    ``mu_0 .. mu_{l-1}`` for ``hermite_poly`` and ``(b0, b1, b2, b3)`` for
    ``cubic_noisy``; ``noise`` is the noise standard deviation of noisy kinds.
    """

    kind: str
    params: tuple = ()
    noise: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "affine" and len(self.params) != 2:
            raise ValueError("affine activation needs (a0, a1)")
        if self.kind == "cubic_noisy" and len(self.params) != 4:
            raise ValueError("cubic activation needs (b0, b1, b2, b3) plus noise b4")
        if self.kind == "hermite_poly" and not self.params:
            raise ValueError("hermite_poly needs at least one coefficient")
        if self.kind in DETERMINISTIC_KINDS and self.noise != 0.0:
            raise ValueError(f"{self.kind} has no noise channel")

    @property
    def has_noise_channel(self):
        return self.kind in NOISY_KINDS

    @property
    def name(self):
        if self.label:
            return self.label
        if self.kind == "affine":
            return "linear:{:g},{:g}".format(*self.params)
        if self.kind == "cubic_noisy":
            return "cubic:" + ",".join(f"{p:g}" for p in self.params + (self.noise,))
        if self.kind == "hermite_poly":
            return f"poly:l={len(self.params)}"
        return self.kind

    @property
    def breakpoints(self):
        """Points where the activation is not smooth (drives the quadrature rule)."""
        return (0.0,) if self.kind == "relu" else ()

    def series_coefficients(self):
        """Hermite coefficients ``mu_j`` of the polynomial part, or ``None``."""
        if self.kind == "identity":
            return (0.0, 1.0)
        if self.kind == "affine":
            return self.params
        if self.kind in NOISY_KINDS:
            return self.params
        return None

    def evaluate(self, x):
        """Deterministic part of the activation applied elementwise."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "relu":
            return kernels.relu(x)
        if self.kind == "tanh":
            return kernels.tanh(x)
        if self.kind == "softplus":
            return kernels.softplus(x)
        return kernels.hermite_series(x, _scaled(self.series_coefficients()))

    def __call__(self, x):
        return self.evaluate(x)


def _scaled(mu):
    return np.array([c / math.factorial(j) for j, c in enumerate(mu)])


def apply(act, preacts, noise_seed=None, z=None):
    """Apply ``act`` to a matrix of pre-activations.

    Noisy kinds draw an independent standard normal per entry from
    ``noise_seed`` (an int seed or a ``numpy.random.Generator``). A pre-drawn
    array ``z`` of the same shape may be passed instead, which lets callers
    reuse one noise realisation across many candidate activations.
    """
    act = resolve(act)
    preacts = np.asarray(preacts, dtype=np.float64)
    if not np.all(np.isfinite(preacts)):
        raise ValueError("pre-activations must be finite")
    if not act.has_noise_channel:
        return act.evaluate(preacts)
    if z is None:
        z = np.random.default_rng(noise_seed).standard_normal(preacts.shape)
    elif np.shape(z) != preacts.shape:
        raise ValueError("z must match the shape of the pre-activations")
    return kernels.hermite_series(preacts, _scaled(act.params), act.noise, z)


def coefficients(act, max_degree=hermite.DEFAULT_MAX_DEGREE, order=hermite.DEFAULT_ORDER):
    """Hermite coefficients of ``act``; noise variance is added to the second moment."""
    act = resolve(act)
    mu_poly = act.series_coefficients()
    if mu_poly is not None:
        mu = np.zeros(max_degree + 1)
        take = min(len(mu_poly), max_degree + 1)
        mu[:take] = mu_poly[:take]
        second = sum(c * c / math.factorial(j) for j, c in enumerate(mu_poly)) + act.noise**2
        return hermite.HermiteCoefficients(mu=mu, second_moment=second)
    return hermite.hermite_coefficients(act.evaluate, max_degree, order, breakpoints=act.breakpoints)


def gaussian_second_moment(act, order=hermite.DEFAULT_ORDER):
    """``E[act(z)^2]`` including the noise variance of noisy kinds."""
    return coefficients(act, 1, order).second_moment


def noisy_linear_surrogate(sigma, coeffs=None):
    """``mu_0 + mu_1 x + mu* z`` with ``mu* = sqrt(E[sigma^2] - mu_0^2 - mu_1^2)``."""
    sigma = resolve(sigma)
    coeffs = coeffs if coeffs is not None else coefficients(sigma, max(1, hermite.DEFAULT_MAX_DEGREE))
    mu = coeffs.mu
    if mu.size < 2:
        raise ValueError("need coefficients up to degree 1")
    noise = hermite.residual_noise_level(mu, 2, coeffs.second_moment)
    return Activation("hermite_poly", (mu[0], mu[1]), noise, label="linear")


def equivalent_polynomial(sigma, l, coeffs=None):
    """Truncated expansion ``sum_{j<l} mu_j He_j / j! + mu*_l z``."""
    sigma = resolve(sigma)
    if l < 1:
        raise ValueError("l must be >= 1")
    coeffs = coeffs if coeffs is not None else coefficients(sigma, max(l - 1, hermite.DEFAULT_MAX_DEGREE))
    if l > coeffs.mu.size:
        raise ValueError(f"l={l} needs coefficients up to degree {l - 1}, have {coeffs.max_degree}")
    noise = hermite.residual_noise_level(coeffs.mu, l, coeffs.second_moment)
    return Activation("hermite_poly", tuple(coeffs.mu[:l]), noise, label=f"poly:l={l}")


def affine(a0, a1):
    return Activation("affine", (a0, a1))


def cubic(b0, b1, b2, b3, b4):
    return Activation("cubic_noisy", (b0, b1, b2, b3), abs(float(b4)))


def _floats(text, count):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != count:
        raise ValueError(f"expected {count} comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def parse(name, base=None):
    """Parse an activation name.

    Accepts ``relu``, ``tanh``, ``softplus``, ``identity``, ``linear:a0,a1``,
    ``cubic:b0,b1,b2,b3,b4`` and ``poly:l=<int>`` (the latter needs ``base``,
    the activation being expanded).
    """
    text = name.strip().lower()
    if text in ("relu", "tanh", "softplus", "identity"):
        return Activation(text)
    head, _, rest = text.partition(":")
    if head == "linear":
        return affine(*_floats(rest, 2))
    if head == "cubic":
        return cubic(*_floats(rest, 5))
    if head == "poly":
        key, _, value = rest.partition("=")
        if key.strip() != "l":
            raise ValueError(f"poly activation must look like 'poly:l=<int>', got {name!r}")
        if base is None:
            raise ValueError("poly:l=<int> needs a base activation to expand")
        return equivalent_polynomial(resolve(base), int(value))
    raise ValueError(f"unknown activation {name!r}")


def resolve(act):
    if isinstance(act, Activation):
        return act
    if isinstance(act, str):
        return parse(act)
    raise TypeError(f"cannot interpret {act!r} as an activation")
