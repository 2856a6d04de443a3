"""Search for generalization-optimal linear and noisy-cubic activations.

Families:

* ``linear``: ``a0 + a1 x``
* ``cubic``:  ``b0 + b1 x + b2 (x^2 - 1) / 2 + b3 (x^3 - 3x) / 6 + b4 z`` with ``b4 >= 0``

The objective is the Monte Carlo generalization error averaged over a fixed
set of replicates. Every candidate sees the same data and, for the cubic
family, the same noise draws (common random numbers), so the objective is a
deterministic, smooth function of the coefficients.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import optimize

from . import activations
from .scenario import draw_replicate, fit_and_score

FAMILIES = {"linear": 2, "cubic": 5}
DEFAULT_SEED_COUNT = 8
DEFAULT_RESTARTS = 3


def build_activation(coeffs, family):
    coeffs = [float(c) for c in coeffs]
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {sorted(FAMILIES)}, got {family!r}")
    if len(coeffs) != FAMILIES[family]:
        raise ValueError(f"{family} family takes {FAMILIES[family]} coefficients")
    if family == "linear":
        return activations.affine(*coeffs)
    return activations.cubic(*coeffs)


def initial_guess(target, family, order=None):
    """Warm start from the Hermite coefficients of the target."""
    kw = {} if order is None else {"order": order}
    mu = activations.coefficients(target, 3, **kw).mu
    if family == "linear":
        return np.array([mu[0], mu[1]])
    return np.array([mu[0], mu[1], mu[2], mu[3], 0.0])


def objective_seeds(seed, count=DEFAULT_SEED_COUNT):
    """``count`` master seeds for the objective, derived from one search seed."""
    if count < 1:
        raise ValueError("need at least one objective seed")
    return [int(s) for s in np.random.SeedSequence([int(seed), 0x5EED]).generate_state(count, np.uint64)]


class Objective:
    """Seeded objective with the replicates and noise draws cached.

    Calling it with coefficients returns the mean generalization error over
    the seed set; ``last_se`` holds the standard error across seeds.
    """

    def __init__(self, scenario, seeds, family):
        if not seeds:
            raise ValueError("objective needs a nonempty seed list")
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        self.scenario = scenario
        self.seeds = list(seeds)
        self.family = family
        self._reps = [draw_replicate(scenario, s, 0) for s in self.seeds]
        self._noise = None
        if family == "cubic":
            self._noise = [(r.noise("cubic", "train"), r.noise("cubic", "test")) for r in self._reps]
        self.last_se = math.nan

    def per_seed(self, coeffs):
        act = build_activation(coeffs, self.family)
        out = np.empty(len(self._reps))
        for i, rep in enumerate(self._reps):
            zt, zs = self._noise[i] if self._noise else (None, None)
            out[i] = fit_and_score(rep, act, self.family, zt, zs)[1]
        return out

    def __call__(self, coeffs):
        vals = self.per_seed(coeffs)
        self.last_se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        return float(vals.mean())


def objective(coeffs, family, scenario, seeds):
    """Mean Monte Carlo generalization error of the family member ``coeffs``."""
    return Objective(scenario, seeds, family)(coeffs)


@dataclass
class CoefficientSearch:
    family: str
    objective_seeds: list
    budget: int = 300
    restarts: int = DEFAULT_RESTARTS
    search_seed: int = 0
    x0: np.ndarray | None = None
    best_coeffs: np.ndarray | None = None
    best_objective: float = math.inf
    budget_exhausted: bool = False
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {sorted(FAMILIES)}")
        if self.budget < FAMILIES[self.family] + 1:
            raise ValueError(f"budget must be at least dim + 1 = {FAMILIES[self.family] + 1}")
        if not self.objective_seeds:
            raise ValueError("objective_seeds must be nonempty")

    @property
    def dim(self):
        return FAMILIES[self.family]

    def bounds(self):
        if self.family == "cubic":
            lb = np.full(5, -np.inf)
            lb[4] = 0.0
            return optimize.Bounds(lb, np.full(5, np.inf))
        return None


class _BudgetExhausted(Exception):
    pass


def _simplex(x, step):
    """Axis-aligned simplex around ``x``; steps scale with the coordinate size."""
    pts = [x.copy()]
    for i in range(x.size):
        p = x.copy()
        p[i] += step * max(abs(x[i]), 0.5)
        pts.append(p)
    return np.array(pts)


def nelder_mead(search, func, x0=None, step=0.5, xatol=1e-4, fatol=1e-6):
    """Nelder-Mead with restarts under a hard evaluation budget.

    ``func`` maps a coefficient vector to a scalar (normally an
    :class:`Objective`). The first run starts from ``x0``; each restart starts
    from the incumbent perturbed by Gaussian noise from ``search.search_seed``
    with a halved simplex step. The remaining budget is split evenly over the
    runs still to go. ``search`` is updated in place and also returned as
    ``(best_coeffs, best_objective, trace)``; the trace rows are
    ``(evaluation, run, objective, best_so_far, *coeffs)``.
    """
    x0 = np.asarray(search.x0 if x0 is None else x0, dtype=np.float64)
    if x0.shape != (search.dim,):
        raise ValueError(f"x0 must have {search.dim} entries")
    bounds = search.bounds()
    if bounds is not None:
        x0 = np.clip(x0, bounds.lb, bounds.ub)
    rng = np.random.default_rng(search.search_seed)
    evals = 0

    def wrapped(x, run):
        nonlocal evals
        if evals >= search.budget:
            raise _BudgetExhausted
        if bounds is not None:
            x = np.clip(x, bounds.lb, bounds.ub)
        val = float(func(x))
        evals += 1
        if not math.isfinite(val):
            val = math.inf
        if val < search.best_objective:
            search.best_objective = val
            search.best_coeffs = x.copy()
        search.trace.append((evals, run, val, search.best_objective, *x.tolist()))
        return val

    total_runs = 1 + search.restarts
    start, run_step = x0, step
    for run in range(total_runs):
        remaining = search.budget - evals
        if remaining < search.dim + 1:
            break
        allowance = math.ceil(remaining / (total_runs - run))
        try:
            optimize.minimize(
                wrapped, start, args=(run,), method="Nelder-Mead", bounds=bounds,
                options={"initial_simplex": _simplex(start, run_step), "maxfev": allowance,
                         "xatol": xatol, "fatol": fatol, "adaptive": False},
            )
        except _BudgetExhausted:
            break
        best = search.best_coeffs
        start = best + run_step * 0.5 * np.maximum(np.abs(best), 0.1) * rng.standard_normal(best.size)
        if bounds is not None:
            start = np.clip(start, bounds.lb, bounds.ub)
        run_step *= 0.5
    search.budget_exhausted = evals >= search.budget
    return search.best_coeffs, search.best_objective, search.trace


def optimize_family(scenario, family, seed=0, budget=300, seed_count=DEFAULT_SEED_COUNT, restarts=DEFAULT_RESTARTS):
    """Run a full search for ``family`` on ``scenario``; returns the :class:`CoefficientSearch`."""
    seeds = objective_seeds(seed, seed_count)
    search = CoefficientSearch(family=family, objective_seeds=seeds, budget=budget,
                               restarts=restarts, search_seed=seed,
                               x0=initial_guess(scenario.target, family))
    nelder_mead(search, Objective(scenario, seeds, family))
    return search


TRACE_HEADER = {
    "linear": ["evaluation", "run", "objective", "best_objective", "a0", "a1"],
    "cubic": ["evaluation", "run", "objective", "best_objective", "b0", "b1", "b2", "b3", "b4"],
}
