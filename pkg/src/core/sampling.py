"""Design space and space-filling sampling."""

import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import qmc

from core.errors import DomainError
from utils.constants import DESIGN_VARIABLES, LHS_RESTARTS

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator, None]

MAXIMIN_CANDIDATES = 2048


@dataclass(frozen=True)
class DesignSpace:
    """Ordered box-bounded variables: (name, lower, upper, unit) rows."""
    variables: Tuple[Tuple[str, float, float, str], ...]

    def __post_init__(self):
        rows = tuple((str(n), float(lo), float(hi), str(u)) for n, lo, hi, u in self.variables)
        object.__setattr__(self, "variables", rows)
        if not rows:
            raise DomainError("design space needs at least one variable")
        names = [r[0] for r in rows]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate design variable names: {names}")
        for name, lower, upper, _ in rows:
            if not lower < upper:
                raise DomainError(f"{name}: lower bound {lower} must be below upper bound {upper}")

    @classmethod
    def case_study(cls) -> "DesignSpace":
        return cls(tuple(DESIGN_VARIABLES))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(r[0] for r in self.variables)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def lower(self) -> np.ndarray:
        return np.array([r[1] for r in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([r[2] for r in self.variables])

    def to_unit(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.lower) / (self.upper - self.lower)

    def from_unit(self, points: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(points, dtype=float) * (self.upper - self.lower)

    def contains(self, points: np.ndarray) -> bool:
        points = np.atleast_2d(points)
        return bool(np.all(points >= self.lower) and np.all(points <= self.upper))

    def as_dict(self, point: Sequence[float]) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.names, point)}

    def from_dict(self, values: Dict[str, float]) -> np.ndarray:
        missing = [n for n in self.names if n not in values]
        if missing:
            raise DomainError(f"point lacks design variable(s): {', '.join(missing)}")
        return np.array([float(values[n]) for n in self.names])


def min_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return float("inf")
    return float(pdist(points).min())


def lhs_unit(n: int, dimension: int, seed: Seed = None, restarts: int = LHS_RESTARTS) -> np.ndarray:
    """Latin hypercube in [0, 1)^d, best maximin design out of ``restarts`` draws.

    Each draw puts exactly one point in every stratum [i/n, (i+1)/n) of every
    dimension, jittered uniformly within the stratum.
    """
    if n < 2:
        raise DomainError(f"a Latin hypercube needs at least 2 points, got {n}")
    rng = np.random.default_rng(seed)
    best, best_distance = None, -1.0
    for _ in range(max(restarts, 1)):
        candidate = qmc.LatinHypercube(d=dimension, seed=rng).random(n)
        distance = min_distance(candidate)
        if distance > best_distance:
            best, best_distance = candidate, distance
    logger.debug("LHS n=%d d=%d maximin distance %.4f", n, dimension, best_distance)
    return best


def lhs_sample(space: DesignSpace, n: int, seed: Seed = None) -> np.ndarray:
    """Seeded maximin Latin hypercube over ``space``, in physical units."""
    return qmc.scale(lhs_unit(n, space.dimension, seed), space.lower, space.upper)


def maximin_point(existing_unit: np.ndarray, seed: Seed = None,
                  candidates: int = MAXIMIN_CANDIDATES) -> np.ndarray:
    """Unit-cube point farthest from every existing sample (exploration fallback)."""
    existing_unit = np.atleast_2d(existing_unit)
    rng = np.random.default_rng(seed)
    pool = rng.random((candidates, existing_unit.shape[1]))
    if existing_unit.size == 0:
        return pool[0]
    distances = cdist(pool, existing_unit).min(axis=1)
    return pool[int(np.argmax(distances))]


def stratum_indices(points_unit: np.ndarray) -> np.ndarray:
    """Stratum index of every coordinate: floor(n * u)."""
    points_unit = np.asarray(points_unit)
    n = len(points_unit)
    return np.minimum(np.floor(points_unit * n).astype(int), n - 1)


def is_latin(points_unit: np.ndarray) -> bool:
    n = len(points_unit)
    expected = np.arange(n)
    return all(np.array_equal(np.sort(column), expected) for column in stratum_indices(points_unit).T)
