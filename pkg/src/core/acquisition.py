"""Constrained expected-improvement infill criterion.

Everything is posed as minimization: a maximized objective is negated by the
caller before the objective model is fitted.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm

from core.kriging import KrigingModel, predict
from core.sampling import DesignSpace, maximin_point
from utils.constants import INFILL_MIN_STEP, INFILL_STARTS

logger = logging.getLogger(__name__)

Bound = Tuple[Optional[float], Optional[float]]

INITIAL_STEP = 0.25  # fraction of range
MAX_PASSES = 500
MIN_SEPARATION = 1e-6  # unit cube


def expected_improvement_from_moments(mean, sd, best: float) -> np.ndarray:
    """EI = (f* - mu) Phi(z) + sigma phi(z), z = (f* - mu) / sigma; max(f* - mu, 0) where sigma = 0."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    improvement = best - mean
    z = improvement / np.where(sd > 0, sd, 1.0)
    ei = np.where(sd > 0, improvement * norm.cdf(z) + sd * norm.pdf(z), np.maximum(improvement, 0.0))
    return np.maximum(ei, 0.0)


def expected_improvement(model: KrigingModel, x: np.ndarray, best: float) -> np.ndarray:
    mean, sd = predict(model, x)
    return expected_improvement_from_moments(mean, sd, best)


def probability_within(mean, sd, lower: Optional[float], upper: Optional[float]) -> np.ndarray:
    """P(lower <= Y <= upper) for Y ~ N(mean, sd^2); a missing bound is open."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sd = np.atleast_1d(np.asarray(sd, dtype=float))
    upper_p = np.ones_like(mean)
    lower_p = np.zeros_like(mean)
    positive = sd > 0
    if upper is not None:
        upper_p = np.where(positive, norm.cdf((upper - mean) / np.where(positive, sd, 1.0)),
                           (mean <= upper).astype(float))
    if lower is not None:
        lower_p = np.where(positive, norm.cdf((lower - mean) / np.where(positive, sd, 1.0)),
                           (mean < lower).astype(float))
    return np.clip(upper_p - lower_p, 0.0, 1.0)


def probability_feasible(models: Sequence[KrigingModel], x: np.ndarray,
                         bounds: Sequence[Bound]) -> np.ndarray:
    """Product over constraints of the probability that each prediction lies within its bounds."""
    x = np.atleast_2d(x)
    probability = np.ones(len(x))
    for model, (lower, upper) in zip(models, bounds):
        mean, sd = predict(model, x)
        probability *= probability_within(mean, sd, lower, upper)
    return probability


def make_acquisition(objective: KrigingModel, constraint_models: Sequence[KrigingModel],
                     constraint_bounds: Sequence[Bound], space: DesignSpace, best: Optional[float],
                     analytic_feasible: Optional[Callable[[np.ndarray], np.ndarray]] = None
                     ) -> Callable[[np.ndarray], np.ndarray]:
    """Unit-cube acquisition EI x PF, or PF alone while no feasible point is known."""
    def acquisition(u: np.ndarray) -> np.ndarray:
        x = space.from_unit(u)
        value = probability_feasible(constraint_models, x, constraint_bounds)
        if analytic_feasible is not None:
            value = value * analytic_feasible(x)
        if best is not None:
            value = value * expected_improvement(objective, x, best)
        return value
    return acquisition


def pattern_search(acquisition: Callable[[np.ndarray], np.ndarray], starts: np.ndarray,
                   min_step: float = INFILL_MIN_STEP) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinate pattern search maximizing ``acquisition`` from every start at once.

    Each pass tries +/- step along every coordinate; a start whose pass
    brings no improvement halves its step until it falls below ``min_step``.
    """
    points = np.array(starts, dtype=float)
    values = acquisition(points)
    steps = np.full(len(points), INITIAL_STEP)
    for _ in range(MAX_PASSES):
        active = steps >= min_step
        if not np.any(active):
            break
        improved = np.zeros(len(points), dtype=bool)
        for k in range(points.shape[1]):
            for sign in (1.0, -1.0):
                candidates = points.copy()
                candidates[:, k] = np.clip(points[:, k] + sign * steps, 0.0, 1.0)
                candidate_values = acquisition(candidates)
                better = active & (candidate_values > values)
                points[better] = candidates[better]
                values[better] = candidate_values[better]
                improved |= better
        steps[active & ~improved] /= 2.0
    return points, values


def propose_infill(objective: KrigingModel, constraint_models: Sequence[KrigingModel],
                   constraint_bounds: Sequence[Bound], space: DesignSpace, best: Optional[float],
                   seed: int, existing: Optional[np.ndarray] = None,
                   analytic_feasible: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                   n_starts: int = INFILL_STARTS) -> np.ndarray:
    """Next point to evaluate, in physical units.

    Args:
        objective: Model of the minimized objective.
        constraint_models: One model per surrogate constraint.
        constraint_bounds: (lower, upper) per constraint model; None is open.
        space: Design space.
        best: Best feasible minimized objective so far, or None if no
            feasible point exists yet.
        seed: Seed of the start points and of the fallback.
        existing: Already evaluated points (physical units).
        analytic_feasible: Optional 0/1 indicator of closed-form constraints.

    Returns:
        The best pattern-search result; ties go to the lowest start index.
        A zero acquisition everywhere, or a proposal on top of an existing
        sample, falls back to the maximin exploration point.
    """
    rng = np.random.default_rng(seed)
    starts = rng.random((n_starts, space.dimension))
    acquisition = make_acquisition(objective, constraint_models, constraint_bounds, space, best,
                                   analytic_feasible)
    points, values = pattern_search(acquisition, starts)
    index = int(np.argmax(values))
    chosen = points[index]
    existing_unit = space.to_unit(existing) if existing is not None and len(existing) else np.empty((0, space.dimension))

    too_close = len(existing_unit) and cdist(chosen[None, :], existing_unit).min() < MIN_SEPARATION
    if values[index] <= 0.0 or too_close:
        logger.info("acquisition exhausted (max %.3g); exploring the maximin point", values[index])
        chosen = maximin_point(existing_unit, rng) if len(existing_unit) else rng.random(space.dimension)
    return space.from_unit(chosen)
