import numpy as np
import pytest

from core.errors import SurrogateError
from core.kriging import fit_kriging, leave_one_out_rmse, predict
from core.sampling import DesignSpace, lhs_sample


def branin(x):
    x1, x2 = x[:, 0], x[:, 1]
    a, b, c, r, s, t = 1.0, 5.1 / (4 * np.pi ** 2), 5 / np.pi, 6.0, 10.0, 1 / (8 * np.pi)
    return a * (x2 - b * x1 ** 2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


def test_linear_function_is_interpolated():
    model = fit_kriging(np.array([[0.0], [0.5], [1.0]]), np.array([0.0, 0.5, 1.0]))
    mean, sd = predict(model, np.array([[0.5]]))
    assert mean[0] == pytest.approx(0.5, abs=1e-8)
    assert sd[0] == pytest.approx(0.0, abs=1e-6)


def test_training_points_are_reproduced():
    x = lhs_sample(DesignSpace((("a", 0.0, 1.0, "-"), ("b", 0.0, 1.0, "-"))), 12, seed=5)
    y = np.sin(3 * x[:, 0]) + x[:, 1] ** 2
    mean, sd = predict(fit_kriging(x, y), x)
    assert np.allclose(mean, y, rtol=1e-8, atol=1e-8)
    assert np.all(sd < 1e-4)


def test_constant_outputs():
    x = np.array([[0.0], [0.3], [0.6], [1.0]])
    mean, sd = predict(fit_kriging(x, np.full(4, 2.5)), np.array([[0.45], [0.9]]))
    assert np.allclose(mean, 2.5)
    assert np.allclose(sd, 0.0)


def test_branin_leave_one_out_error():
    space = DesignSpace((("x1", -5.0, 10.0, "-"), ("x2", 0.0, 15.0, "-")))
    x = lhs_sample(space, 20, seed=0)
    model = fit_kriging(x, branin(x), space.lower, space.upper)
    grid = np.stack(np.meshgrid(np.linspace(-5, 10, 301), np.linspace(0, 15, 301)), axis=-1).reshape(-1, 2)
    values = branin(grid)
    assert leave_one_out_rmse(model) < 0.05 * (values.max() - values.min())


def test_far_field_returns_to_the_trend():
    x = np.array([[0.0], [0.2], [0.5], [0.8], [1.0]])
    model = fit_kriging(x, np.array([1.0, 0.36, 0.0, 0.36, 1.0]))
    mean, sd = predict(model, np.array([[1e4]]))
    assert mean[0] == pytest.approx(model.trend, abs=1e-9)
    assert sd[0] == pytest.approx(model.process_sd, rel=1e-9)


def test_symmetric_data_gives_symmetric_predictions():
    x = np.array([[0.0], [0.2], [0.5], [0.8], [1.0]])
    model = fit_kriging(x, 4 * (x[:, 0] - 0.5) ** 2, np.array([0.0]), np.array([1.0]))
    mean, sd = predict(model, np.array([[0.3], [0.7]]))
    assert mean[0] == pytest.approx(mean[1], abs=1e-9)
    assert sd[0] == pytest.approx(sd[1], abs=1e-9)


def test_too_few_points():
    with pytest.raises(SurrogateError):
        fit_kriging(np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]]), np.array([0.0, 1.0, 2.0]))


def test_duplicate_points_rejected():
    with pytest.raises(SurrogateError) as info:
        fit_kriging(np.array([[0.0], [0.5], [0.5], [1.0]]), np.array([0.0, 1.0, 1.0, 2.0]))
    assert "duplicate" in str(info.value)


def test_non_finite_outputs_rejected():
    with pytest.raises(SurrogateError):
        fit_kriging(np.array([[0.0], [0.5], [1.0]]), np.array([0.0, np.nan, 1.0]))


def test_variance_is_never_negative():
    space = DesignSpace((("x1", -5.0, 10.0, "-"), ("x2", 0.0, 15.0, "-")))
    x = lhs_sample(space, 15, seed=3)
    model = fit_kriging(x, branin(x), space.lower, space.upper)
    rng = np.random.default_rng(11)
    points = np.vstack([rng.uniform([-6.0, -1.0], [11.0, 16.0], size=(10_000, 2)), x])
    mean, sd = predict(model, points)
    assert np.all(np.isfinite(mean))
    assert np.all(sd >= 0.0)
