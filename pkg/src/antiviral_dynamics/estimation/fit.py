"""Fitting patient parameters to viral-load series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.stats import chi2

from ..dynamics.model import PatientParameters
from ..dynamics.solver import IntegrationError, SolverOptions, integrate
from .cost import ViralObservation, rmsle
from .de import DEConfig, differential_evolution

FREE_NAMES = ("beta", "delta", "p")
LOG_SCALED = {"beta", "p"}
DEFAULT_BOUNDS = {"beta": (1e-10, 1e-6), "delta": (0.1, 3.0), "p": (0.05, 1000.0)}
FIT_SOLVER = SolverOptions(rel_tol=1e-7)


@dataclass(frozen=True)
class FitConfig:
    """What to fit and how.

    Attributes
    ----------
    free_params : tuple of str
        Subset of ``("beta", "delta", "p")``.
    base : PatientParameters
        Supplies ``c``, the initial condition and the values of parameters
        that are not free.
    bounds : dict
        ``name -> (lower, upper)`` in natural units; ``beta`` and ``p`` are
        searched in log10.
    """

    free_params: tuple = FREE_NAMES
    base: PatientParameters = PatientParameters(beta=1e-7, delta=1.0, p=1.0, c=2.4)
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    de: DEConfig = DEConfig()
    solver: SolverOptions = FIT_SOLVER

    def __post_init__(self):
        if not self.free_params or len(set(self.free_params)) != len(self.free_params):
            raise ValueError("free_params must be a non-empty set of names")
        for name in self.free_params:
            if name not in FREE_NAMES:
                raise ValueError(f"unknown free parameter {name!r}")
            lo, hi = self.bounds[name]
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
                raise ValueError(f"bounds for {name} must be finite with 0 < lower < upper")

    def to_unit(self, name, value):
        return math.log10(value) if name in LOG_SCALED else value

    def from_unit(self, name, u):
        return 10.0 ** u if name in LOG_SCALED else u

    def box(self):
        lo = [self.to_unit(n, self.bounds[n][0]) for n in self.free_params]
        hi = [self.to_unit(n, self.bounds[n][1]) for n in self.free_params]
        return np.array(lo), np.array(hi)

    def params_from(self, x) -> PatientParameters:
        values = {n: float(self.from_unit(n, u)) for n, u in zip(self.free_params, x)}
        return replace(self.base, **values)


@dataclass
class FitResult:
    params: PatientParameters
    rmsle: float
    generations_used: int
    converged: bool
    history: list
    nfev: int = 0
    free_params: tuple = ()
    intervals: dict = field(default_factory=dict)


def predict(params: PatientParameters, times, solver: SolverOptions = FIT_SOLVER) -> np.ndarray:
    """Model viral load at ``times`` (days post infection)."""
    times = np.asarray(times, dtype=float)
    traj = integrate(params, horizon=max(float(times.max()), 1e-3), options=solver)
    return traj.V_at(times)


def _objective(data, config: FitConfig):
    times = np.array([o.t for o in data])

    def cost(x):
        try:
            return rmsle(predict(config.params_from(x), times, config.solver), data)
        except (IntegrationError, ValueError):
            return math.inf

    return cost


def _check_data(data):
    if sum(not o.censored for o in data) < 3:
        raise ValueError("at least three uncensored observations are required")


def fit_patient(data, config: FitConfig = FitConfig(), map_fn=map) -> FitResult:
    """Global DE fit of the free parameters, scored by RMSLE.

    Deterministic for a given ``config.de.seed``.
    """
    data = list(data)
    _check_data(data)
    lo, hi = config.box()
    res = differential_evolution(_objective(data, config), lo, hi, config.de, map_fn=map_fn)
    return FitResult(
        params=config.params_from(res.x),
        rmsle=res.cost,
        generations_used=res.generations,
        converged=res.converged,
        history=res.history,
        nfev=res.nfev,
        free_params=tuple(config.free_params),
    )


# -- profile likelihood -----------------------------------------------------

@dataclass(frozen=True)
class ProfileInterval:
    """Profile-likelihood interval for one parameter (natural units)."""

    param: str
    estimate: float
    lower: float
    upper: float
    lower_open: bool
    upper_open: bool
    threshold: float
    grid: tuple = ()
    costs: tuple = ()
    nuisance: tuple = ()


def profile_threshold(best: float, n: int, level: float) -> float:
    """Largest RMSLE inside the interval.

    With Gaussian log-residuals the profile deviance is ``n ln(RSS/RSS_opt)``
    and ``RSS = n rmsle^2``, so the chi-square cut becomes a multiplicative
    inflation of the optimal RMSLE.
    """
    q = chi2.ppf(level, 1) if level > 0 else 0.0
    return best * math.exp(q / (2.0 * n))


def profile_ci(
    data,
    fit: FitResult,
    param: str,
    level: float = 0.95,
    config: FitConfig = FitConfig(),
    span: float | None = None,
    steps: int = 20,
    refine: int = 12,
) -> ProfileInterval:
    """Profile-likelihood confidence interval for ``param``.

    The parameter is stepped away from its estimate on each side
    (``span`` decades for log-scaled parameters, a relative fraction for
    ``delta``) while the other free parameters are re-optimised locally.  A
    side whose cost never crosses the threshold is reported open.
    """
    data = list(data)
    if param not in config.free_params:
        raise ValueError(f"{param!r} is not a free parameter of this fit")
    if not 0 <= level < 1:
        raise ValueError("level must lie in [0, 1)")
    cost = _objective(data, config)
    names = list(config.free_params)
    k = names.index(param)
    x_opt = np.array([config.to_unit(n, getattr(fit.params, n)) for n in names])
    lo_box, hi_box = config.box()
    best = cost(x_opt)
    thr = profile_threshold(best, len(data), level)
    if span is None:
        span = 1.0 if param in LOG_SCALED else 0.5 * x_opt[k]

    others = [i for i in range(len(names)) if i != k]
    bounds = [(lo_box[i], hi_box[i]) for i in others]

    def profiled(u, start):
        if not others:
            x = x_opt.copy()
            x[k] = u
            return cost(x), x
        def sub(y):
            x = x_opt.copy()
            x[k] = u
            x[others] = y
            return cost(x)
        res = minimize(sub, start, method="Nelder-Mead", bounds=bounds,
                       options={"xatol": 1e-6, "fatol": 1e-10, "maxfev": 400})
        x = x_opt.copy()
        x[k] = u
        x[others] = res.x
        return float(res.fun), x

    grid, costs, nuis = [x_opt[k]], [best], [tuple(x_opt)]
    ends = {}
    for sign in (-1, 1):
        limit = lo_box[k] if sign < 0 else hi_box[k]
        start = x_opt[others]
        inside_u = x_opt[k]
        edge, is_open = None, True
        for j in range(1, steps + 1):
            u = x_opt[k] + sign * span * j / steps
            if (u - limit) * sign > 0:
                u = limit
            c, x = profiled(u, start)
            grid.append(u)
            costs.append(c)
            nuis.append(tuple(x))
            if c > thr:
                a, b = inside_u, u
                for _ in range(refine):
                    m = 0.5 * (a + b)
                    cm, xm = profiled(m, start)
                    if cm > thr:
                        b = m
                    else:
                        a, start = m, xm[others]
                edge, is_open = a, False
                break
            inside_u, start = u, x[others]
            if u == limit:
                break
        ends[sign] = (edge if edge is not None else inside_u, is_open)

    order = np.argsort(grid)
    return ProfileInterval(
        param=param,
        estimate=config.from_unit(param, x_opt[k]),
        lower=config.from_unit(param, ends[-1][0]),
        upper=config.from_unit(param, ends[1][0]),
        lower_open=ends[-1][1],
        upper_open=ends[1][1],
        threshold=thr,
        grid=tuple(config.from_unit(param, grid[i]) for i in order),
        costs=tuple(costs[i] for i in order),
        nuisance=tuple(nuis[i] for i in order),
    )


def synthetic_observations(params: PatientParameters, times, noise_sd: float = 0.0, seed: int = 0,
                           solver: SolverOptions = FIT_SOLVER):
    """Simulated observations with optional log10-normal noise."""
    v = predict(params, times, solver)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        v = v * 10.0 ** rng.normal(0.0, noise_sd, size=len(v))
    return [ViralObservation(float(t), float(x)) for t, x in zip(times, v)]
