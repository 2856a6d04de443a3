"""Config-driven Monte Carlo experiments and their CSV output.

Each experiment is a grid of scenarios times a set of model families ("arms").
Work is split into (grid point, target, replicate) tasks that may run on a
thread pool; results are keyed by task and aggregated in index order, so the
output never depends on scheduling.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
import csv
import io
import json
import math
import os
import time

import numpy as np

from . import activations, equivalence, optimizer
from .scenario import Scenario, draw_model_and_features, draw_replicate, fit_and_score, theta_from
from .seeding import derive_seed

KINDS = (
    "linear_equivalence_curve",
    "alignment_theta_heatmap",
    "polynomial_equivalence_curve",
    "activation_comparison",
    "training_error_curve",
)

CSV_COLUMNS = [
    "experiment", "grid_param", "grid_value", "family", "activation", "target", "n", "m", "k",
    "lambda", "theta", "alpha", "replicates", "train_mean", "train_se", "gen_mean", "gen_se", "seed",
]
GAP_COLUMNS = [
    "experiment", "grid_param", "grid_value", "activation", "target", "alpha", "family", "reference",
    "gen_family", "gen_reference", "abs_gap", "pct_gap", "gap_mean", "gap_se", "eta_sqrt_n", "degree",
]
BOUNDARY_COLUMNS = ["beta", "theta", "alpha_boundary", "c_threshold"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _arange(lo, hi, step):
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + i * step, 10) for i in range(count)]


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 200
    m: int = 250
    k: int | None = None
    k_over_m: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    m_grid: list | None = None
    lam: float = 1e-2
    theta: float | None = None
    theta_scale: float = 1.0
    theta_exponent: float = 0.5
    signals: str = "random"
    alpha: float = 1.0
    alpha_grid: list = field(default_factory=lambda: _arange(0.0, 1.0, 0.1))
    beta_grid: list = field(default_factory=lambda: _arange(0.0, 0.5, 0.05))
    sweep: str = "k_over_m"
    activations: list = field(default_factory=lambda: ["relu", "tanh"])
    targets: list = field(default_factory=lambda: ["relu"])
    families: list = field(default_factory=lambda: ["optimal-linear", "optimal-cubic", "relu", "softplus"])
    replicates: int = 25
    master_seed: int = 0
    l_max: int = 4
    poly_degree: object = "auto"
    m_test: int = 2500
    c_threshold: float = 1.0
    optimizer_budget: int = 300
    optimizer_seeds: int = optimizer.DEFAULT_SEED_COUNT
    coefficient_mode: str = "per-point"
    training_base: str = "polynomial_equivalence_curve"
    m_mc: int = 20_000
    cross_samples: int = 100_000
    output: str | None = None
    threads: int = 1

    # config-file spelling of attribute names that clash with Python keywords
    ALIASES = {"lambda": "lam"}

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a table/object at the top level")
        known = {f.name for f in fields(cls)}
        data = {}
        for key, value in raw.items():
            name = cls.ALIASES.get(key, key)
            if name not in known or key == "lam":
                raise ConfigError(f"unknown config key {key!r}")
            data[name] = value
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        data = {**_kind_defaults(data["experiment"]), **data}
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.experiment in KINDS, f"experiment must be one of {KINDS}")
        for name in ("n", "m", "replicates", "m_test", "l_max", "optimizer_budget", "optimizer_seeds",
                     "m_mc", "cross_samples", "threads"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool) and v >= 1, f"{name} must be a positive integer")
        need(self.n >= 2, "n must be >= 2")
        need(self.l_max >= 2, "l_max must be >= 2")
        need(self.k is None or (isinstance(self.k, int) and self.k >= 1), "k must be a positive integer")
        need(_positive(self.lam), "lambda must be positive")
        need(self.theta is None or _number(self.theta) and self.theta >= 0, "theta must be >= 0")
        need(_positive(self.theta_scale), "theta_scale must be positive")
        need(_number(self.theta_exponent) and 0 <= self.theta_exponent <= 0.5, "theta_exponent must be in [0, 0.5]")
        need(self.signals in ("random", "aligned"), "signals must be 'random' or 'aligned'")
        need(_number(self.alpha) and -1 <= self.alpha <= 1, "alpha must be in [-1, 1]")
        need(_positive(self.c_threshold), "c_threshold must be positive")
        for name in ("k_over_m", "alpha_grid", "beta_grid", "activations", "targets", "families"):
            need(isinstance(getattr(self, name), list) and getattr(self, name), f"{name} must be a nonempty list")
        need(all(_positive(r) for r in self.k_over_m), "k_over_m values must be positive")
        need(all(_number(a) and 0 <= a <= 1 for a in self.alpha_grid), "alpha_grid must lie in [0, 1]")
        need(all(_number(b) and 0 <= b <= 0.5 for b in self.beta_grid), "beta_grid must lie in [0, 0.5]")
        need(self.m_grid is None or (isinstance(self.m_grid, list) and self.m_grid
                                     and all(isinstance(v, int) and v >= 1 for v in self.m_grid)),
             "m_grid must be a list of positive integers")
        need(self.sweep in ("k_over_m", "m", "alpha", "beta"), "sweep must be k_over_m, m, alpha or beta")
        need(self.poly_degree == "auto" or (isinstance(self.poly_degree, int) and self.poly_degree >= 1),
             "poly_degree must be 'auto' or a positive integer")
        need(self.coefficient_mode in ("per-point", "shared"), "coefficient_mode must be 'per-point' or 'shared'")
        need(self.training_base in ("linear_equivalence_curve", "polynomial_equivalence_curve"),
             "training_base must be linear_equivalence_curve or polynomial_equivalence_curve")
        need(isinstance(self.master_seed, int) and self.master_seed >= 0, "master_seed must be a non-negative integer")
        try:
            for name in self.activations + self.targets:
                activations.parse(name)
            for fam in self.families:
                if fam not in ("optimal-linear", "optimal-cubic"):
                    activations.parse(fam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        cfg = type(self)(**data)
        cfg.validate()
        return cfg


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _positive(v):
    return _number(v) and v > 0


def _kind_defaults(kind):
    if kind == "polynomial_equivalence_curve":
        return {"signals": "aligned", "alpha": 1.0, "lam": 1e-3}
    if kind == "training_error_curve":
        return {"signals": "aligned", "alpha": 1.0, "lam": 1e-3}
    if kind == "activation_comparison":
        return {"signals": "aligned", "alpha": 1.0, "sweep": "alpha"}
    if kind == "alignment_theta_heatmap":
        return {"activations": ["relu"]}
    return {}


def parse_config_text(text, fmt):
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc


def load_config(path, **overrides):
    """Read a ``.toml`` or ``.json`` config; ``overrides`` with value ``None`` are ignored."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in (".toml", ".json"):
        raise ConfigError("config file must end in .toml or .json")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    raw = parse_config_text(text, ext[1:])
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class GridPoint:
    index: int
    param: str
    value: float
    n: int
    m: int
    k: int
    theta: float
    alpha: float | None

    def scenario(self, cfg, target):
        return Scenario(n=self.n, m=self.m, k=self.k, lam=cfg.lam, theta=self.theta,
                        target=activations.parse(target), alpha=self.alpha, m_test=cfg.m_test)


def _theta(cfg, beta=None):
    if beta is not None:
        return theta_from(cfg.n, cfg.theta_scale, beta)
    if cfg.theta is not None:
        return float(cfg.theta)
    return theta_from(cfg.n, cfg.theta_scale, cfg.theta_exponent)


def grid_points(cfg):
    """Scenario grid of ``cfg`` in output order."""
    n, m = cfg.n, cfg.m
    alpha = None if cfg.signals == "random" else float(cfg.alpha)
    pts = []
    kind = cfg.training_base if cfg.experiment == "training_error_curve" else cfg.experiment
    if kind in ("linear_equivalence_curve", "polynomial_equivalence_curve"):
        for r in cfg.k_over_m:
            pts.append(("k_over_m", float(r), m, max(1, int(round(r * m))), _theta(cfg), alpha))
    elif kind == "alignment_theta_heatmap":
        k = cfg.k or 2 * m
        for b in cfg.beta_grid:
            for a in cfg.alpha_grid:
                pts.append(("beta", float(b), m, k, _theta(cfg, b), float(a)))
    elif kind == "activation_comparison":
        if cfg.sweep == "m":
            k = cfg.k or m
            m_vals = cfg.m_grid or [max(1, int(round(k / r))) for r in cfg.k_over_m]
            for mv in m_vals:
                pts.append(("m", float(mv), int(mv), k, _theta(cfg), alpha))
        elif cfg.sweep == "alpha":
            for a in cfg.alpha_grid:
                pts.append(("alpha", float(a), m, cfg.k or 2 * m, _theta(cfg), float(a)))
        elif cfg.sweep == "beta":
            for b in cfg.beta_grid:
                pts.append(("beta", float(b), m, cfg.k or 2 * m, _theta(cfg, b), alpha))
        else:
            for r in cfg.k_over_m:
                pts.append(("k_over_m", float(r), m, max(1, int(round(r * m))), _theta(cfg), alpha))
    return [GridPoint(i, p, v, n, mm, kk, th, al) for i, (p, v, mm, kk, th, al) in enumerate(pts)]


# ---------------------------------------------------------------- arms


@dataclass(frozen=True)
class Arm:
    family: str
    activation: str
    act: activations.Activation

    @property
    def key(self):
        return f"{self.family}/{self.activation}"


def _median_eta(cfg, point, target):
    """Median ``eta`` over the replicates' feature draws at ``point``."""
    sc = point.scenario(cfg, target)
    etas = []
    for r in range(cfg.replicates):
        model, F = draw_model_and_features(sc, cfg.master_seed, r)
        etas.append(equivalence.compute_eta(F, model.gamma, model.xi, model.theta).eta)
    return float(np.median(etas))


def _equivalence_arms(cfg, with_poly, degree):
    arms = []
    for name in cfg.activations:
        sigma = activations.parse(name)
        coeffs = activations.coefficients(sigma, max(hermite_degree(cfg), 8))
        arms.append(Arm("rfm", sigma.name, sigma))
        arms.append(Arm("noisy-linear", sigma.name, activations.noisy_linear_surrogate(sigma, coeffs)))
        if with_poly:
            poly = activations.equivalent_polynomial(sigma, degree, coeffs)
            arms.append(Arm(f"noisy-poly:l={degree}", sigma.name, poly))
    return arms


def hermite_degree(cfg):
    return cfg.l_max if cfg.poly_degree == "auto" else int(cfg.poly_degree)


# ---------------------------------------------------------------- results


@dataclass
class RunResult:
    config: ExperimentConfig
    rows: list
    gaps: list
    boundary: list
    samples: dict
    wall_clock: float
    eta_sqrt_n: dict = field(default_factory=dict)
    searches: dict = field(default_factory=dict)

    def csv_text(self):
        return _csv(CSV_COLUMNS, self.rows)

    def gaps_text(self):
        return _csv(GAP_COLUMNS, self.gaps)

    def boundary_text(self):
        return _csv(BOUNDARY_COLUMNS, self.boundary)

    def write(self, out_dir):
        """Write ``<experiment>.csv`` (plus gap/boundary files) into ``out_dir``."""
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, self.config.experiment)
        paths = [base + ".csv", base + "_gaps.csv"]
        _write(paths[0], self.csv_text())
        _write(paths[1], self.gaps_text())
        if self.boundary:
            paths.append(base + "_boundary.csv")
            _write(paths[2], self.boundary_text())
        return paths

    def sample(self, grid_index, target, arm_key):
        """Per-replicate ``(train, gen)`` arrays for one arm at one grid point."""
        return self.samples[(grid_index, target, arm_key)]


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def _csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _mean_se(x):
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


# ---------------------------------------------------------------- engine


def _run_tasks(cfg, points, arms_for, threads):
    """Evaluate every (point, target, replicate) and return ordered sample arrays."""
    tasks = [(p, t, r) for p in points for t in cfg.targets for r in range(cfg.replicates)]

    def work(task):
        point, target, r = task
        rep = draw_replicate(point.scenario(cfg, target), cfg.master_seed, r)
        return task, [fit_and_score(rep, arm.act, arm.key) for arm in arms_for(point, target)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = dict((_task_key(t), v) for t, v in pool.map(work, tasks))
    else:
        done = dict((_task_key(t), v) for t, v in map(work, tasks))
    samples = {}
    for p in points:
        for t in cfg.targets:
            arms = arms_for(p, t)
            stacked = np.array([done[(p.index, t, r)] for r in range(cfg.replicates)])
            for a_i, arm in enumerate(arms):
                samples[(p.index, t, arm.key)] = (stacked[:, a_i, 0], stacked[:, a_i, 1])
    return samples


def _task_key(task):
    p, t, r = task
    return (p.index, t, r)


def _rows(cfg, points, arms_for, samples, label):
    rows = []
    for p in points:
        for t in cfg.targets:
            for arm in arms_for(p, t):
                train, gen = samples[(p.index, t, arm.key)]
                tm, ts = _mean_se(train)
                gm, gs = _mean_se(gen)
                rows.append({
                    "experiment": label, "grid_param": p.param, "grid_value": p.value,
                    "family": arm.family, "activation": arm.activation, "target": activations.parse(t).name,
                    "n": p.n, "m": p.m, "k": p.k, "lambda": float(cfg.lam), "theta": float(p.theta),
                    "alpha": "random" if p.alpha is None else float(p.alpha),
                    "replicates": cfg.replicates, "train_mean": tm, "train_se": ts,
                    "gen_mean": gm, "gen_se": gs, "seed": cfg.master_seed,
                })
    return rows


def _gap_row(cfg, label, p, target, arm, ref, samples, eta_sqrt_n=math.nan, degree=""):
    g_arm = samples[(p.index, target, arm.key)][1]
    g_ref = samples[(p.index, target, ref.key)][1]
    d = g_arm - g_ref
    dm, dse = _mean_se(d)
    ga, gr = float(g_arm.mean()), float(g_ref.mean())
    return {
        "experiment": label, "grid_param": p.param, "grid_value": p.value,
        "activation": arm.activation, "target": activations.parse(target).name,
        "alpha": "random" if p.alpha is None else float(p.alpha),
        "family": arm.family, "reference": ref.family, "gen_family": ga, "gen_reference": gr,
        "abs_gap": abs(ga - gr), "pct_gap": equivalence.percentage_gap(ga, gr) if gr > 0 else math.nan,
        "gap_mean": dm, "gap_se": dse, "eta_sqrt_n": eta_sqrt_n, "degree": degree,
    }


def _equivalence_gaps(cfg, points, arms_for, samples, label, etas=None, degrees=None):
    """Gaps of the RFM against each surrogate; percentages are relative to the surrogate."""
    gaps = []
    for p in points:
        for t in cfg.targets:
            arms = arms_for(p, t)
            by_act = {}
            for arm in arms:
                by_act.setdefault(arm.activation, []).append(arm)
            for group in by_act.values():
                rfm = group[0]
                for sur in group[1:]:
                    row = _gap_row(cfg, label, p, t, rfm, sur, samples,
                                   etas.get((p.index, t), math.nan) if etas else math.nan,
                                   degrees.get((p.index, t), "") if degrees else "")
                    row["family"], row["reference"] = rfm.family, sur.family
                    gaps.append(row)
    return gaps


def _run_equivalence(cfg, label, with_poly, threads):
    t0 = time.perf_counter()
    points = grid_points(cfg)
    etas, degrees, arm_cache = {}, {}, {}
    for p in points:
        for t in cfg.targets:
            if with_poly or cfg.experiment == "alignment_theta_heatmap":
                eta = _median_eta(cfg, p, t)
                etas[(p.index, t)] = eta * math.sqrt(p.n)
                degrees[(p.index, t)] = equivalence.recommend_degree(eta, p.n, cfg.c_threshold, cfg.l_max)
            if with_poly:
                l = degrees[(p.index, t)] if cfg.poly_degree == "auto" else int(cfg.poly_degree)
                arm_cache[(p.index, t)] = _equivalence_arms(cfg, True, l)
            else:
                arm_cache[(p.index, t)] = _equivalence_arms(cfg, False, None)

    def arms_for(p, t):
        return arm_cache[(p.index, t)]

    samples = _run_tasks(cfg, points, arms_for, threads)
    rows = _rows(cfg, points, arms_for, samples, label)
    gaps = _equivalence_gaps(cfg, points, arms_for, samples, label, etas, degrees)
    return RunResult(cfg, rows, gaps, [], samples, time.perf_counter() - t0, eta_sqrt_n=etas)


def run_linear_equivalence(cfg, threads=None):
    """RFM versus its noisy linear surrogate along the ``k/m`` grid."""
    return _run_equivalence(cfg, cfg.experiment, False, threads or cfg.threads)


def run_polynomial_equivalence(cfg, threads=None):
    """RFM versus the noisy linear and noisy polynomial surrogates.

    The polynomial degree comes from :func:`equivalence.recommend_degree` on the
    median ``eta`` of the replicates at each grid point unless ``poly_degree``
    fixes it.
    """
    return _run_equivalence(cfg, cfg.experiment, True, threads or cfg.threads)


def run_training_error_plots(cfg, threads=None):
    """Training-error curves for the scenarios of ``training_base``."""
    return _run_equivalence(cfg, cfg.experiment, cfg.training_base == "polynomial_equivalence_curve",
                            threads or cfg.threads)


def eta_boundary(cfg, points, etas, target):
    """Per ``beta``, the ``alpha`` where the median ``eta sqrt(n)`` crosses ``c_threshold``.

    Linear interpolation along the alpha grid; ``nan`` when the grid never
    crosses the threshold.
    """
    rows = []
    for b in cfg.beta_grid:
        cells = [p for p in points if p.value == float(b)]
        cells.sort(key=lambda p: p.alpha)
        a = np.array([p.alpha for p in cells])
        e = np.array([etas[(p.index, target)] for p in cells])
        where = math.nan
        above = np.flatnonzero(e > cfg.c_threshold)
        if above.size and above[0] > 0:
            i = above[0]
            frac = (cfg.c_threshold - e[i - 1]) / (e[i] - e[i - 1])
            where = float(a[i - 1] + frac * (a[i] - a[i - 1]))
        rows.append({"beta": float(b), "theta": float(theta_from(cfg.n, cfg.theta_scale, b)),
                     "alpha_boundary": where, "c_threshold": float(cfg.c_threshold)})
    return rows


def run_alignment_theta_heatmap(cfg, threads=None):
    """Percentage gap between RFM and noisy linear surrogate over (alpha, beta)."""
    result = _run_equivalence(cfg, cfg.experiment, False, threads or cfg.threads)
    result.boundary = eta_boundary(cfg, grid_points(cfg), result.eta_sqrt_n, cfg.targets[0])
    return result


def _optimal_arms(cfg, points, threads):
    """Optimised linear/cubic activations per grid point (or shared)."""
    wanted = [f for f in cfg.families if f.startswith("optimal-")]
    if not wanted:
        return {}
    if cfg.coefficient_mode == "shared":
        targets_pts = [points[len(points) // 2]]
    else:
        targets_pts = points
    jobs = [(p, t, fam) for p in targets_pts for t in cfg.targets for fam in wanted]

    def work(job):
        p, t, fam = job
        fam_name = fam.split("-", 1)[1]
        seed = derive_seed(cfg.master_seed, "optimizer", p.index, optimizer.FAMILIES[fam_name], cfg.targets.index(t))
        search = optimizer.optimize_family(p.scenario(cfg, t), fam_name, seed=seed,
                                           budget=cfg.optimizer_budget, seed_count=cfg.optimizer_seeds)
        return (p.index, t, fam), search

    threads = threads or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = dict(pool.map(work, jobs))
    else:
        found = dict(map(work, jobs))
    out = {}
    for p in points:
        src = targets_pts[0] if cfg.coefficient_mode == "shared" else p
        for t in cfg.targets:
            for fam in wanted:
                out[(p.index, t, fam)] = found[(src.index, t, fam)]
    return out


def run_activation_comparison(cfg, threads=None):
    """Optimal linear, optimal cubic and fixed nonlinearities along one sweep."""
    t0 = time.perf_counter()
    threads = threads or cfg.threads
    points = grid_points(cfg)
    searches = _optimal_arms(cfg, points, threads)
    arm_cache = {}
    for p in points:
        for t in cfg.targets:
            arms = []
            for fam in cfg.families:
                if fam.startswith("optimal-"):
                    s = searches[(p.index, t, fam)]
                    act = optimizer.build_activation(s.best_coeffs, fam.split("-", 1)[1])
                    arms.append(Arm(fam, act.name, act))
                else:
                    act = activations.parse(fam)
                    arms.append(Arm("rfm", act.name, act))
            arm_cache[(p.index, t)] = arms

    def arms_for(p, t):
        return arm_cache[(p.index, t)]

    samples = _run_tasks(cfg, points, arms_for, threads)
    rows = _rows(cfg, points, arms_for, samples, cfg.experiment)
    gaps = []
    for p in points:
        for t in cfg.targets:
            arms = {a.family: a for a in arms_for(p, t)}
            if "optimal-cubic" in arms and "optimal-linear" in arms:
                gaps.append(_gap_row(cfg, cfg.experiment, p, t, arms["optimal-cubic"], arms["optimal-linear"], samples))
    return RunResult(cfg, rows, gaps, [], samples, time.perf_counter() - t0, searches=searches)


RUNNERS = {
    "linear_equivalence_curve": run_linear_equivalence,
    "alignment_theta_heatmap": run_alignment_theta_heatmap,
    "polynomial_equivalence_curve": run_polynomial_equivalence,
    "activation_comparison": run_activation_comparison,
    "training_error_curve": run_training_error_plots,
}


def run(cfg, threads=None):
    return RUNNERS[cfg.experiment](cfg, threads)


DIAGNOSE_COLUMNS = [
    "grid_param", "grid_value", "activation", "target", "n", "m", "k", "theta", "alpha",
    "eta", "eta_sqrt_n", "recommended_degree", "max_offdiag", "max_diag_dev", "fhat_norm",
    "cov_gap", "cross_terms", "cross_max_abs_resid", "cross_frac_within_3se",
    "cross_corrected_max_abs_resid", "cross_corrected_frac_within_3se",
]


def diagnose(cfg):
    """Equivalence diagnostics on replicate 0 of every grid point.

    For each (point, activation, target): the ``eta`` statistic and the degree
    it recommends, the feature-matrix regularity statistics, the spectral gap
    between the Monte Carlo feature covariance (``m_mc`` draws) and the linear
    surrogate, and the residuals of both cross-covariance forms against a
    Monte Carlo estimate with ``cross_samples`` draws.
    """
    from . import datagen

    rows = []
    for p in grid_points(cfg):
        for t in cfg.targets:
            sc = p.scenario(cfg, t)
            model, F = draw_model_and_features(sc, cfg.master_seed, 0)
            rep = equivalence.compute_eta(F, model.gamma, model.xi, model.theta)
            degree = equivalence.recommend_degree(rep.eta, p.n, cfg.c_threshold, cfg.l_max)
            stats = datagen.admissibility_stats(F, model.gamma, model.theta)
            mu_t = activations.coefficients(model.target, 8)
            norms = equivalence.spiked_row_norms(F, model.gamma, model.theta)
            for a_i, name in enumerate(cfg.activations):
                sigma = activations.parse(name)
                mu = activations.coefficients(sigma, 8)
                lin = activations.noisy_linear_surrogate(sigma, mu)
                cov_seed = derive_seed(cfg.master_seed, "test-inputs", p.index, a_i, 1)
                emp = equivalence.empirical_feature_covariance(model, sigma, F, cfg.m_mc, cov_seed)
                sur = equivalence.linear_surrogate_covariance(F, model.theta, model.gamma, mu.mu[1], lin.noise)
                gap = equivalence.covariance_gap(emp, sur)
                mc_seed = derive_seed(cfg.master_seed, "test-inputs", p.index, a_i, 2)
                mean, se = equivalence.cross_covariance_mc(model, sigma, F, cfg.cross_samples, mc_seed)
                terms = mu.mu.size
                closed = equivalence.cross_covariance_closed_form(mu, mu_t, rep.eta_i, terms)
                corrected = equivalence.cross_covariance_row_corrected(sigma, mu_t, rep.eta_i, norms, terms)
                se_safe = np.maximum(se, 1e-300)
                rows.append({
                    "grid_param": p.param, "grid_value": p.value, "activation": sigma.name,
                    "target": model.target.name, "n": p.n, "m": p.m, "k": p.k, "theta": float(p.theta),
                    "alpha": float(model.alpha), "eta": rep.eta, "eta_sqrt_n": rep.eta * math.sqrt(p.n),
                    "recommended_degree": degree, "max_offdiag": stats.max_offdiag,
                    "max_diag_dev": stats.max_diag_dev, "fhat_norm": stats.fhat_spectral_norm,
                    "cov_gap": gap, "cross_terms": terms,
                    "cross_max_abs_resid": float(np.abs(mean - closed).max()),
                    "cross_frac_within_3se": float(np.mean(np.abs(mean - closed) < 3 * se_safe)),
                    "cross_corrected_max_abs_resid": float(np.abs(mean - corrected).max()),
                    "cross_corrected_frac_within_3se": float(np.mean(np.abs(mean - corrected) < 3 * se_safe)),
                })
    return _csv(DIAGNOSE_COLUMNS, rows)
