"""One Monte Carlo replicate of the RFM regression problem.

A replicate fixes the signals, the feature matrix and the train/test data;
every model family fitted on it sees exactly these draws and differs only in
its own activation-noise stream.
"""
from dataclasses import dataclass
import math
import zlib

import numpy as np

from . import activations, datagen, ridge
from .seeding import derive_seed


@dataclass(frozen=True)
class Scenario:
    """Problem sizes and the data model.

    ``alpha=None`` draws two independent random signals (misaligned regime);
    otherwise the signals are built with ``gamma^T xi = alpha``.
    """

    n: int
    m: int
    k: int
    lam: float
    theta: float
    target: activations.Activation
    alpha: float | None = None
    m_test: int = 2500

    def __post_init__(self):
        if min(self.n, self.m, self.k, self.m_test) < 1:
            raise ValueError("n, m, k and m_test must be positive")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if self.alpha is not None and not -1.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [-1, 1]")
        object.__setattr__(self, "target", activations.resolve(self.target))


@dataclass(frozen=True)
class Replicate:
    scenario: Scenario
    master_seed: int
    index: int
    model: datagen.SpikedModel
    F: np.ndarray
    P: np.ndarray
    y: np.ndarray
    P_test: np.ndarray
    y_test: np.ndarray

    def noise_seed(self, family, split):
        """Seed of a family's activation noise; ``split`` is ``"train"`` or ``"test"``."""
        return derive_seed(self.master_seed, "poly-noise", self.index, family_key(family), _SPLITS[split])

    def noise(self, family, split):
        shape = self.P.shape if split == "train" else self.P_test.shape
        return np.random.default_rng(self.noise_seed(family, split)).standard_normal(shape)


_SPLITS = {"train": 0, "test": 1}


def family_key(family):
    """Stable integer for a family name, independent of list position."""
    return zlib.crc32(family.encode("utf-8"))


def theta_from(n, scale, exponent):
    return scale * n**exponent


def draw_model_and_features(scenario, master_seed, index):
    """The data model and feature matrix of replicate ``index`` (no samples)."""
    s = scenario
    sig_rng = np.random.default_rng(derive_seed(master_seed, "signals", index))
    mode = "random" if s.alpha is None else "aligned"
    gamma, xi = datagen.make_signal_pair(s.n, mode, s.alpha, sig_rng)
    model = datagen.SpikedModel(gamma, xi, s.theta, s.target)
    F = datagen.sample_feature_matrix(s.n, s.k, s.theta, derive_seed(master_seed, "features", index)).F
    return model, F


def draw_replicate(scenario, master_seed, index):
    """Draw replicate ``index``.

    Only ``index`` enters the seeds, so the same replicate index gives nested,
    shared draws across grid points (the first ``k`` feature rows and the first
    ``m`` samples coincide), pairing every grid point with its neighbours.
    """
    s = scenario
    model, F = draw_model_and_features(s, master_seed, index)
    X = datagen.sample_inputs(model, s.m, derive_seed(master_seed, "inputs", index))
    X_test = datagen.sample_inputs(model, s.m_test, derive_seed(master_seed, "test-inputs", index))
    return Replicate(
        scenario=s, master_seed=master_seed, index=index, model=model, F=F,
        P=X @ F.T, y=datagen.labels(model, X),
        P_test=X_test @ F.T, y_test=datagen.labels(model, X_test),
    )


def fit_and_score(rep, act, family=None, z_train=None, z_test=None):
    """Fit the ridge readout on ``act`` features; return ``(train_error, gen_error)``.

    The training error includes the ridge penalty. Noise for noisy kinds comes
    from ``rep``'s stream for ``family`` unless pre-drawn arrays are given.
    """
    act = activations.resolve(act)
    family = family or act.name
    if act.has_noise_channel and z_train is None:
        z_train = rep.noise(family, "train")
    if act.has_noise_channel and z_test is None:
        z_test = rep.noise(family, "test")
    R = activations.apply(act, rep.P, z=z_train)
    result = ridge.fit(R, rep.y, rep.scenario.lam)
    R_test = activations.apply(act, rep.P_test, z=z_test)
    resid = rep.y_test - R_test @ result.w_hat
    gen = float(resid @ resid / resid.size)
    if not (math.isfinite(gen) and math.isfinite(result.training_error)):
        raise ridge.NumericalError("non-finite error estimate")
    return result.training_error, gen
