"""Second-layer ridge regression and error functionals.

The objective is ``(1/m) ||y - R w||^2 + lam ||w||^2`` (loss averaged, ridge
term not), so the normal equations read ``(R^T R + m lam I) w = R^T y``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import activations, datagen


class NumericalError(RuntimeError):
    """A factorisation that should be positive definite was not."""


@dataclass(frozen=True)
class RidgeFit:
    w_hat: np.ndarray
    lam: float
    m: int
    k: int
    training_error: float
    solver: str

    def predict(self, R):
        return np.asarray(R) @ self.w_hat


def _cholesky_solve(A, b):
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorisation failed: {exc}") from exc
    return linalg.cho_solve(factor, b, check_finite=False)


def objective(R, y, w, lam):
    """``(1/m) sum (y_i - w^T r_i)^2 + lam ||w||^2``."""
    resid = np.asarray(y) - np.asarray(R) @ w
    return float(resid @ resid / resid.size + lam * (w @ w))


def fit(R, y, lam, solver="auto"):
    """Minimise the ridge objective.

    ``solver="auto"`` uses the primal ``k x k`` system when ``k <= m`` and the
    dual ``m x m`` identity ``w = R^T (R R^T + m lam I)^{-1} y`` otherwise.
    """
    R = np.asarray(R, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if R.ndim != 2 or y.shape != (R.shape[0],):
        raise ValueError("R must be m x k and y an m-vector")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(y))):
        raise ValueError("R and y must be finite")
    m, k = R.shape
    if solver == "auto":
        solver = "primal" if k <= m else "dual"
    if solver == "primal":
        A = R.T @ R
        A[np.diag_indices_from(A)] += m * lam
        w = _cholesky_solve(A, R.T @ y)
    elif solver == "dual":
        K = R @ R.T
        K[np.diag_indices_from(K)] += m * lam
        w = R.T @ _cholesky_solve(K, y)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return RidgeFit(w_hat=w, lam=float(lam), m=m, k=k, training_error=objective(R, y, w, lam), solver=solver)


def training_error(R, y, fit_result):
    """Training error including the ridge penalty (equal to the objective at ``w_hat``)."""
    return objective(R, y, fit_result.w_hat, fit_result.lam)


def normal_equation_residual(R, y, fit_result, eps=1e-300):
    R = np.asarray(R)
    w = fit_result.w_hat
    rhs = R.T @ y
    lhs = R.T @ (R @ w) + fit_result.m * fit_result.lam * w
    return float(np.linalg.norm(lhs - rhs) / (np.linalg.norm(rhs) + eps))


def holdout_squared_errors(model, act, F, fit_result, m_test, rng_inputs=None, rng_noise=None):
    """Per-sample squared errors on fresh data and fresh activation noise."""
    F = F.F if isinstance(F, datagen.FeatureMatrix) else np.asarray(F)
    X = datagen.sample_inputs(model, m_test, rng_inputs)
    y = datagen.labels(model, X)
    R = activations.apply(act, X @ F.T, rng_noise)
    resid = y - R @ fit_result.w_hat
    return resid * resid


def generalization_error_mc(model, act, F, fit_result, m_test, seed=None, noise_seed=None):
    """Monte Carlo generalization error on ``m_test`` fresh samples."""
    if m_test < 1:
        raise ValueError("m_test must be >= 1")
    if noise_seed is None:
        rng = np.random.default_rng(seed)
        seed, noise_seed = rng, rng
    return float(np.mean(holdout_squared_errors(model, act, F, fit_result, m_test, seed, noise_seed)))


def generalization_error_mc_se(model, act, F, fit_result, m_test, seed=None, noise_seed=None):
    """``(mean, standard error)`` of the Monte Carlo generalization error."""
    if noise_seed is None:
        rng = np.random.default_rng(seed)
        seed, noise_seed = rng, rng
    sq = holdout_squared_errors(model, act, F, fit_result, m_test, seed, noise_seed)
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(sq.size)) if sq.size > 1 else 0.0


def generalization_error_semianalytic(fit_result, sigma_x, sigma_xy, y_second_moment, sym_tol=1e-8):
    """``E[y^2] - 2 w^T Sigma_xy + w^T Sigma_x w``."""
    sigma_x = np.asarray(sigma_x, dtype=np.float64)
    if np.linalg.norm(sigma_x - sigma_x.T) > sym_tol:
        raise ValueError("Sigma_x must be symmetric")
    w = fit_result.w_hat if isinstance(fit_result, RidgeFit) else np.asarray(fit_result)
    return float(y_second_moment - 2.0 * w @ np.asarray(sigma_xy) + w @ sigma_x @ w)


def default_m_test(m):
    return max(10 * m, 10_000)
