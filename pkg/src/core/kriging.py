"""Ordinary kriging surrogate with a Gaussian correlation.

Inputs are mapped to the unit hypercube and outputs standardized before
fitting. The correlation lengths are found by maximizing the concentrated
log-likelihood with a bounded multistart L-BFGS-B search in log10 space.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import pdist, squareform
from scipy.stats import qmc

from core.errors import SurrogateError
from utils.constants import KRIGING_STARTS, NUGGET_CAP, NUGGET_START, THETA_BOUNDS

logger = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class KrigingModel:
    """Fitted ordinary kriging model.

    Attributes:
        x_unit: Training inputs in the unit hypercube, shape (n, d).
        y: Standardized training outputs, shape (n,).
        lower, upper: Physical bounds used for the unit mapping.
        y_mean, y_scale: Output standardization.
        theta: Correlation parameters, shape (d,).
        mu: Trend constant (standardized units).
        sigma2: Process variance (standardized units).
        nugget: Diagonal regularization that made the factorization succeed.
        chol: Lower Cholesky factor of the correlation matrix.
        alpha: R^-1 (y - mu).
    """
    x_unit: np.ndarray
    y: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    y_mean: float
    y_scale: float
    theta: np.ndarray
    mu: float
    sigma2: float
    nugget: float
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n_samples(self) -> int:
        return len(self.y)

    @property
    def trend(self) -> float:
        """Trend constant in output units."""
        return self.y_mean + self.y_scale * self.mu

    @property
    def process_sd(self) -> float:
        return float(np.sqrt(self.sigma2) * self.y_scale)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(x, dtype=float)) - self.lower) / (self.upper - self.lower)

    def predict(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return predict(self, x)


def correlation(a: np.ndarray, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Gaussian correlation exp(-sum_k theta_k (a_k - b_k)^2) between two point sets."""
    diff = a[:, None, :] - b[None, :, :]
    return np.exp(-np.einsum("ijk,k->ij", diff ** 2, theta))


def _factor(r: np.ndarray, nugget: float = NUGGET_START) -> Tuple[np.ndarray, float]:
    """Cholesky factor of R + nugget*I, escalating the nugget x10 up to the cap."""
    n = len(r)
    while nugget <= NUGGET_CAP * (1 + 1e-9):
        try:
            return cholesky(r + nugget * np.eye(n), lower=True), nugget
        except LinAlgError:
            nugget *= 10.0
    raise SurrogateError(f"correlation matrix not positive definite with nugget up to {NUGGET_CAP}")


def _concentrated(chol: np.ndarray, y: np.ndarray) -> Tuple[float, float, np.ndarray, float]:
    """Trend, process variance, R^-1 (y - mu) and the negative concentrated log-likelihood."""
    n = len(y)
    ones = np.ones(n)
    r_inv_ones = cho_solve((chol, True), ones)
    r_inv_y = cho_solve((chol, True), y)
    mu = float(ones @ r_inv_y / (ones @ r_inv_ones))
    residual = y - mu
    alpha = cho_solve((chol, True), residual)
    sigma2 = max(float(residual @ alpha) / n, 0.0)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    if sigma2 <= 0.0:
        return mu, 0.0, alpha, -np.inf
    return mu, sigma2, alpha, 0.5 * (n * np.log(sigma2) + log_det)


def _neg_log_likelihood(log_theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    r = correlation(x, x, 10.0 ** log_theta)
    try:
        chol, _ = _factor(r)
    except SurrogateError:
        return 1e10
    value = _concentrated(chol, y)[3]
    return float(value) if np.isfinite(value) else -1e10


def _duplicates(x_unit: np.ndarray) -> Sequence[Tuple[int, int]]:
    distances = squareform(pdist(x_unit))
    i, j = np.nonzero(np.triu(distances <= DUPLICATE_TOL, k=1))
    return list(zip(i.tolist(), j.tolist()))


def _assemble(x_unit, y_std, lower, upper, y_mean, y_scale, theta) -> KrigingModel:
    chol, nugget = _factor(correlation(x_unit, x_unit, theta))
    mu, sigma2, alpha, _ = _concentrated(chol, y_std)
    return KrigingModel(x_unit, y_std, lower, upper, y_mean, y_scale, theta, mu, sigma2, nugget, chol, alpha)


def fit_kriging(inputs: np.ndarray, outputs: np.ndarray, lower: Optional[np.ndarray] = None,
                upper: Optional[np.ndarray] = None, seed: int = 0,
                starts: int = KRIGING_STARTS) -> KrigingModel:
    """Fit an ordinary kriging model.

    Args:
        inputs: Training points in physical units, shape (n, d).
        outputs: Training values, shape (n,).
        lower, upper: Bounds of the unit mapping; default to the data range.
        seed: Seed of the multistart points.
        starts: Number of likelihood starts.

    Raises:
        SurrogateError: Too few points, non-finite outputs or duplicate inputs.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    n, d = x.shape
    if len(y) != n:
        raise SurrogateError(f"{n} inputs but {len(y)} outputs")
    if n < d + 2:
        raise SurrogateError(f"kriging needs at least d+2 = {d + 2} points, got {n}")
    if not np.all(np.isfinite(y)):
        raise SurrogateError("training outputs must be finite")

    lower = x.min(axis=0) if lower is None else np.asarray(lower, dtype=float)
    upper = x.max(axis=0) if upper is None else np.asarray(upper, dtype=float)
    span = np.where(upper > lower, upper - lower, 1.0)
    upper = lower + span
    x_unit = (x - lower) / span

    duplicates = _duplicates(x_unit)
    if duplicates:
        raise SurrogateError(f"duplicate training points (index pairs): {duplicates}")

    y_mean = float(np.mean(y))
    y_scale = float(np.std(y))
    if y_scale == 0.0:
        # constant response: no likelihood to maximize
        return _assemble(x_unit, np.zeros(n), lower, upper, y_mean, 1.0, np.ones(d))
    y_std = (y - y_mean) / y_scale

    log_lo, log_hi = np.log10(THETA_BOUNDS[0]), np.log10(THETA_BOUNDS[1])
    start_points = qmc.scale(qmc.LatinHypercube(d=d, seed=seed).random(starts), [log_lo] * d, [log_hi] * d)
    best_value, best_log_theta = np.inf, None
    for start in start_points:
        result = minimize(_neg_log_likelihood, start, args=(x_unit, y_std), method="L-BFGS-B",
                          bounds=[(log_lo, log_hi)] * d)
        value = float(result.fun)
        if value < best_value:
            best_value, best_log_theta = value, np.clip(result.x, log_lo, log_hi)
    theta = 10.0 ** best_log_theta
    model = _assemble(x_unit, y_std, lower, upper, y_mean, y_scale, theta)
    logger.debug("kriging fit n=%d theta=%s nugget=%.0e", n, np.array2string(theta, precision=3), model.nugget)
    return model


def predict(model: KrigingModel, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Kriging mean and standard deviation at physical points ``x``.

    A point coinciding with a training input gets the nugget added to its
    self-correlation, so training values are reproduced exactly.
    """
    u = model.to_unit(x)
    r = correlation(u, model.x_unit, model.theta)
    coincident = np.all(np.abs(u[:, None, :] - model.x_unit[None, :, :]) <= DUPLICATE_TOL, axis=2)
    r = r + model.nugget * coincident
    mean = model.mu + r @ model.alpha
    v = solve_triangular(model.chol, r.T, lower=True)
    variance = np.maximum(model.sigma2 * (1.0 - np.sum(v ** 2, axis=0)), 0.0)
    return model.y_mean + model.y_scale * mean, model.y_scale * np.sqrt(variance)


def leave_one_out_rmse(model: KrigingModel) -> float:
    """Root mean square leave-one-out error at the fitted correlation parameters, in output units."""
    errors = []
    x_phys = model.lower + model.x_unit * (model.upper - model.lower)
    y_phys = model.y_mean + model.y_scale * model.y
    for i in range(model.n_samples):
        keep = np.arange(model.n_samples) != i
        reduced = _assemble(model.x_unit[keep], model.y[keep], model.lower, model.upper,
                            model.y_mean, model.y_scale, model.theta)
        mean, _ = predict(reduced, x_phys[i])
        errors.append(float(mean[0]) - y_phys[i])
    return float(np.sqrt(np.mean(np.square(errors))))
