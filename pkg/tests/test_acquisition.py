import numpy as np
import pytest

from core.acquisition import (
    expected_improvement_from_moments,
    make_acquisition,
    probability_feasible,
    probability_within,
    propose_infill,
)
from core.kriging import fit_kriging
from core.sampling import DesignSpace

UNIT = DesignSpace((("x", 0.0, 1.0, "-"),))


def test_no_uncertainty_no_improvement():
    assert expected_improvement_from_moments(1.0, 0.0, 1.0) == 0.0
    assert expected_improvement_from_moments(0.5, 0.0, 1.0) == pytest.approx(0.5)


def test_improvement_at_the_incumbent():
    assert expected_improvement_from_moments(0.0, 1.0, 0.0) == pytest.approx(0.39894, abs=1e-5)


def test_improvement_is_never_negative():
    rng = np.random.default_rng(0)
    mean = rng.normal(size=10_000)
    sd = rng.exponential(size=10_000)
    assert np.all(expected_improvement_from_moments(mean, sd, 0.0) >= 0.0)


def test_probability_at_the_bound():
    assert probability_within(0.0, 1.0, None, 0.0)[0] == pytest.approx(0.5)
    assert probability_within(0.5, 1e-9, 0.0, 1.0)[0] == pytest.approx(1.0)
    assert probability_within(2.0, 0.0, 0.0, 1.0)[0] == 0.0


def test_independent_constraints_multiply():
    model = fit_kriging(np.array([[0.0], [0.4], [1.0]]), np.array([1.0, 3.0, 2.0]))
    far = np.array([[1e4]])
    bound = (None, model.trend)
    assert probability_feasible([model, model], far, [bound, bound])[0] == pytest.approx(0.25, abs=1e-6)


def quadratic_model():
    x = np.array([[0.0], [0.15], [0.45], [0.6], [0.8], [1.0]])
    return x, fit_kriging(x, (x[:, 0] - 0.3) ** 2, UNIT.lower, UNIT.upper)


def test_infill_is_deterministic():
    x, model = quadratic_model()
    best = float(np.min((x[:, 0] - 0.3) ** 2))
    first = propose_infill(model, [], [], UNIT, best, seed=4, existing=x)
    second = propose_infill(model, [], [], UNIT, best, seed=4, existing=x)
    assert np.array_equal(first, second)
    assert UNIT.contains(first)


def test_infill_beats_every_start():
    x, model = quadratic_model()
    best = float(np.min((x[:, 0] - 0.3) ** 2))
    acquisition = make_acquisition(model, [], [], UNIT, best)
    point = propose_infill(model, [], [], UNIT, best, seed=11, existing=x)
    starts = np.random.default_rng(11).random((64, 1))
    assert acquisition(UNIT.to_unit(point[None, :]))[0] >= acquisition(starts).max() - 1e-12


def test_constrained_quadratic_converges():
    # minimize (x - 0.8)^2 subject to x <= 0.5
    x = np.array([[0.0], [0.2], [0.4], [0.7], [0.95]])
    for cycle in range(10):
        f = (x[:, 0] - 0.8) ** 2
        feasible = x[:, 0] <= 0.5
        objective = fit_kriging(x, f, UNIT.lower, UNIT.upper)
        constraint = fit_kriging(x, x[:, 0], UNIT.lower, UNIT.upper)
        best = float(f[feasible].min())
        point = propose_infill(objective, [constraint], [(None, 0.5)], UNIT, best, seed=cycle, existing=x)
        x = np.vstack([x, point])
    feasible = x[x[:, 0] <= 0.5, 0]
    assert feasible.max() == pytest.approx(0.5, abs=1e-2)


def test_certain_prediction_at_or_above_incumbent_has_no_improvement():
    rng = np.random.default_rng(7)
    best = rng.normal(size=1_000)
    mean = best + rng.exponential(size=1_000)
    mean[:10] = best[:10]
    for b, m in zip(best, mean):
        assert expected_improvement_from_moments(m, 0.0, b) == 0.0
