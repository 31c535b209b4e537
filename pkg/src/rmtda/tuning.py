"""Selection of the ridge parameter ``gamma``."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .baselines import BaselineConfig, cv_error
from .classifiers import empirical_error
from .errors import DomainError, EstimatorBreakdownError, SolverError, TuningError
from .estimators import g_estimate
from .model import Classifier, TrainingSet, fit_statistics

__all__ = [
    "Stage",
    "TuningResult",
    "g_objective",
    "minimize_gamma",
    "stage_two_interval",
    "two_stage_optimize",
]

GOLDEN_ITERATIONS = 20
STAGE_TWO_POINTS = 50
GAMMA_FLOOR = 1e-6
_SKIPPABLE = (EstimatorBreakdownError, SolverError)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Stage(str, enum.Enum):
    G_ONLY = "g_only"
    TWO_STAGE = "two_stage"


@dataclass(frozen=True)
class TuningResult:
    gamma_star: float
    objective_at_star: float
    search_interval: tuple[float, float]
    grid_values: list[tuple[float, float]] = field(default_factory=list)
    stage: Stage = Stage.G_ONLY
    skipped: int = 0


def _safe(objective: Callable[[float], float], gamma: float) -> float | None:
    try:
        value = float(objective(gamma))
    except _SKIPPABLE:
        return None
    return value if math.isfinite(value) else None


def _argmin_first(values: list[tuple[float, float]]) -> int:
    # strict "<" keeps the smallest gamma on ties
    best = 0
    for k, (_, v) in enumerate(values):
        if v < values[best][1]:
            best = k
    return best


def minimize_gamma(objective: Callable[[float], float], lo: float, hi: float, grid_size: int = 50) -> TuningResult:
    """Log-uniform grid search followed by golden-section refinement in ``log(gamma)``.

    Grid points where ``objective`` raises an estimator or solver breakdown are
    skipped. Refinement runs between the argmin's grid neighbours and is kept
    only if it strictly improves on the grid minimum. The refined point is
    appended to ``grid_values`` so the reported optimum is always one of them.
    """
    if not 0 < lo < hi:
        raise DomainError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), grid_size))
    grid[0], grid[-1] = lo, hi
    evaluated: list[tuple[float, float]] = []
    for g in grid:
        v = _safe(objective, float(g))
        if v is not None:
            evaluated.append((float(g), v))
    skipped = grid_size - len(evaluated)
    if not evaluated:
        raise TuningError("objective failed at every grid point")

    k = _argmin_first(evaluated)
    best_gamma, best_value = evaluated[k]
    pos = int(np.searchsorted(grid, best_gamma))
    a = math.log(grid[max(pos - 1, 0)])
    b = math.log(grid[min(pos + 1, grid_size - 1)])
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = _safe(objective, math.exp(x1))
    f2 = _safe(objective, math.exp(x2))
    for _ in range(GOLDEN_ITERATIONS):
        if f1 is None or f2 is None:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = _safe(objective, math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = _safe(objective, math.exp(x2))
    candidates = [(math.exp(x), f) for x, f in ((x1, f1), (x2, f2)) if f is not None]
    if candidates:
        g_ref, v_ref = min(candidates, key=lambda c: (c[1], c[0]))
        if v_ref < best_value:
            best_gamma, best_value = g_ref, v_ref
            evaluated.append((g_ref, v_ref))
    return TuningResult(best_gamma, best_value, (float(lo), float(hi)), evaluated, Stage.G_ONLY, skipped)


def stage_two_interval(gamma_g: float, p: int) -> tuple[float, float]:
    """``((gamma_g - 2/sqrt(p))^+, gamma_g + 2/sqrt(p))`` with the lower end floored at 1e-6."""
    half = 2.0 / math.sqrt(p)
    return max(gamma_g - half, 0.0, GAMMA_FLOOR), gamma_g + half


def g_objective(train: TrainingSet, kind) -> Callable[[float], float]:
    """``gamma -> G-estimate of the total error``, reusing the sample statistics."""
    base = fit_statistics(train, 1.0)
    return lambda gamma: g_estimate(base.with_gamma(gamma), kind).total


def two_stage_optimize(
    train: TrainingSet,
    kind,
    validation: TrainingSet | BaselineConfig,
    lo: float = 1e-2,
    hi: float = 1e2,
    grid_size: int = 50,
) -> TuningResult:
    """Minimize the G-estimate, then grid-search the validation error near its minimizer.

    ``validation`` is either a held-out :class:`TrainingSet` or a
    :class:`BaselineConfig` describing the cross-validation to run on ``train``.
    """
    kind = Classifier(kind)
    stage_one = minimize_gamma(g_objective(train, kind), lo, hi, grid_size)
    lo2, hi2 = stage_two_interval(stage_one.gamma_star, train.p)
    base = fit_statistics(train, 1.0)

    if isinstance(validation, TrainingSet):
        if validation.n0 == 0 or validation.n1 == 0:
            raise DomainError("validation set must contain both classes")

        def score(gamma: float) -> float:
            return empirical_error(base.with_gamma(gamma), kind, validation).total
    elif isinstance(validation, BaselineConfig):
        def score(gamma: float) -> float:
            return cv_error(train, gamma, kind, validation).total
    else:
        raise TypeError("validation must be a TrainingSet or a BaselineConfig")

    grid = np.linspace(lo2, hi2, STAGE_TWO_POINTS)
    values = [(float(g), float(score(float(g)))) for g in grid]
    k = _argmin_first(values)
    return TuningResult(values[k][0], values[k][1], (lo2, hi2), values, Stage.TWO_STAGE, 0)
