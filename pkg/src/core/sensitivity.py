"""Variance-based global sensitivity analysis on a surrogate."""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
from scipy.stats import qmc

from core.errors import DomainError, ReportError
from core.kriging import KrigingModel, predict
from core.sampling import DesignSpace
from utils.constants import DEFAULT_SOBOL_N, SOBOL_MIN_N

logger = logging.getLogger(__name__)

INDEX_CLAMP = (-0.05, 1.0)
DEGENERATE_VARIANCE = 1e-12  # relative to output scale squared

Model = Union[KrigingModel, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class SobolResult:
    names: Tuple[str, ...]
    first_order: np.ndarray
    variance: float
    evaluations: int
    degenerate: bool = False

    def as_dict(self) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.names, self.first_order)}

    def ranking(self) -> List[Tuple[str, float]]:
        return sorted(self.as_dict().items(), key=lambda item: (-item[1], item[0]))


def _evaluator(model: Model) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(model, KrigingModel):
        return lambda x: predict(model, x)[0]
    return lambda x: np.asarray(model(x), dtype=float).ravel()


def sobol_indices(model: Model, space: DesignSpace, n: int = DEFAULT_SOBOL_N, seed: int = 0) -> SobolResult:
    """First-order Sobol indices by the Saltelli pick-freeze scheme.

    Two independent base matrices A and B come from one scrambled Sobol
    sequence of dimension 2d. For every variable i the mixed matrices AB_i
    (A with column i from B) and BA_i are evaluated too, 2 n (d + 1)
    evaluations in all; both pick-freeze estimates of V_i are averaged.

    Args:
        model: Kriging model (its mean is analysed) or a vectorized function
            of physical points.
        space: Input ranges; inputs are uniform over them.
        n: Base sample size, at least 1024.
        seed: Scrambling seed.
    """
    if n < SOBOL_MIN_N:
        raise DomainError(f"Sobol base sample size must be at least {SOBOL_MIN_N}, got {n}")
    d = space.dimension
    sampler = qmc.Sobol(d=2 * d, scramble=True, seed=seed)
    m = int(math.log2(n))
    base = sampler.random_base2(m) if 2 ** m == n else sampler.random(n)
    a = space.from_unit(base[:, :d])
    b = space.from_unit(base[:, d:])

    f = _evaluator(model)
    f_a, f_b = f(a), f(b)
    total = np.concatenate([f_a, f_b])
    variance = float(np.var(total))
    scale = max(float(np.max(np.abs(total))), 1.0)
    if variance < DEGENERATE_VARIANCE * scale ** 2:
        logger.warning("output variance %.3g is degenerate; all indices reported as 0", variance)
        return SobolResult(space.names, np.zeros(d), variance, 2 * n * (d + 1), degenerate=True)

    first = np.empty(d)
    for i in range(d):
        ab = a.copy()
        ab[:, i] = b[:, i]
        ba = b.copy()
        ba[:, i] = a[:, i]
        v_ab = np.mean(f_b * (f(ab) - f_a))
        v_ba = np.mean(f_a * (f(ba) - f_b))
        first[i] = 0.5 * (v_ab + v_ba) / variance
    first = np.clip(first, *INDEX_CLAMP)
    return SobolResult(space.names, first, variance, 2 * n * (d + 1))


def write_sobol_csv(result: SobolResult, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["variable", "S1"])
        for name, value in zip(result.names, result.first_order):
            writer.writerow([name, repr(float(value))])
    return path


def read_sobol_csv(path: Union[str, Path]) -> Dict[str, float]:
    """``variable,S1`` rows; an empty or malformed file raises ReportError."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    if not rows or [c.strip() for c in rows[0]] != ["variable", "S1"]:
        raise ReportError(f"{path}: expected header 'variable,S1'")
    indices = {}
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ReportError(f"{path}:{number}: expected 2 columns, got {len(row)}")
        try:
            indices[row[0].strip()] = float(row[1])
        except ValueError:
            raise ReportError(f"{path}:{number}: S1 is not a number: {row[1]!r}") from None
    if not indices:
        raise ReportError(f"{path}: no sensitivity rows")
    return indices
