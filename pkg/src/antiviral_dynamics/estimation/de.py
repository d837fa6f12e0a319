"""Differential evolution (rand/1/bin) over a box.

Kept in-house rather than using :func:`scipy.optimize.differential_evolution`
so that every evaluated point, the per-generation best cost and the random
draw order are under our control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DEConfig:
    """Hyperparameters; ``population_size=None`` means ten per dimension."""

    population_size: int | None = None
    weight: float = 0.8
    crossover: float = 0.9
    max_generations: int = 200
    seed: int = 0
    stop_tol: float = 1e-8

    def __post_init__(self):
        if self.population_size is not None and self.population_size < 4:
            raise ValueError("population_size must be at least 4")
        if not (0 < self.weight <= 2 and 0 <= self.crossover <= 1):
            raise ValueError("weight must be in (0, 2] and crossover in [0, 1]")


@dataclass
class DEResult:
    x: np.ndarray
    cost: float
    generations: int
    converged: bool
    history: list = field(default_factory=list)
    nfev: int = 0


def _evaluate(func, pop, map_fn):
    costs = np.array(list(map_fn(func, list(pop))), dtype=float)
    costs[~np.isfinite(costs)] = np.inf
    return costs


def differential_evolution(func, lower, upper, config: DEConfig = DEConfig(), map_fn=map) -> DEResult:
    """Minimise ``func`` over the box ``[lower, upper]``.

    ``map_fn`` may be a parallel map; all random draws happen serially so the
    result does not depend on it.  Non-finite costs count as failures; if the
    whole initial population fails a ``RuntimeError`` is raised.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or not np.all(upper > lower):
        raise ValueError("bounds must satisfy lower < upper")
    dim = lower.size
    n = config.population_size or 10 * dim
    n = max(n, 4)
    rng = np.random.default_rng(config.seed)
    span = upper - lower

    pop = lower + rng.random((n, dim)) * span
    costs = _evaluate(func, pop, map_fn)
    nfev = n
    if not np.any(np.isfinite(costs)):
        raise RuntimeError("every initial candidate failed to evaluate")
    history = [float(costs.min())]
    converged = False
    gen = 0
    for gen in range(1, config.max_generations + 1):
        trials = np.empty_like(pop)
        for i in range(n):
            others = [j for j in range(n) if j != i]
            a, b, c = pop[rng.choice(others, 3, replace=False)]
            mutant = a + config.weight * (b - c)
            # bounce back towards the parent when a coordinate leaves the box
            low, high = mutant < lower, mutant > upper
            mutant[low] = lower[low] + rng.random(low.sum()) * (pop[i][low] - lower[low])
            mutant[high] = upper[high] - rng.random(high.sum()) * (upper[high] - pop[i][high])
            cross = rng.random(dim) < config.crossover
            cross[rng.integers(dim)] = True
            trials[i] = np.where(cross, mutant, pop[i])
        trial_costs = _evaluate(func, trials, map_fn)
        nfev += n
        better = trial_costs <= costs
        pop[better] = trials[better]
        costs[better] = trial_costs[better]
        history.append(float(costs.min()))
        finite = costs[np.isfinite(costs)]
        if len(finite) == n and np.std(finite) <= config.stop_tol * (1.0 + abs(np.mean(finite))):
            converged = True
            break
    best = int(np.argmin(costs))
    return DEResult(pop[best].copy(), float(costs[best]), gen, converged, history, nfev)
