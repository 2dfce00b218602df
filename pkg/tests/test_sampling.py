import numpy as np
import pytest

from core.errors import DomainError
from core.sampling import DesignSpace, is_latin, lhs_sample, lhs_unit, maximin_point, min_distance


def test_small_design_is_latin():
    points = lhs_unit(4, 2, seed=1)
    assert points.shape == (4, 2)
    assert is_latin(points)


def test_same_seed_same_design():
    space = DesignSpace.case_study()
    assert np.array_equal(lhs_sample(space, 20, seed=7), lhs_sample(space, 20, seed=7))
    assert not np.array_equal(lhs_sample(space, 20, seed=7), lhs_sample(space, 20, seed=8))


def test_case_study_design_stays_in_bounds():
    space = DesignSpace.case_study()
    points = lhs_sample(space, 60, seed=3)
    assert points.shape == (60, 6)
    assert space.contains(points)
    assert is_latin(space.to_unit(points))


def test_too_few_points():
    with pytest.raises(DomainError):
        lhs_unit(1, 3)


def test_design_space_rows():
    space = DesignSpace.case_study()
    assert space.names[0] == "panelEfficiency"
    assert space.dimension == 6
    with pytest.raises(DomainError):
        DesignSpace((("x", 0.0, 1.0, "-"), ("x", 0.0, 2.0, "-")))
    with pytest.raises(DomainError):
        DesignSpace((("x", 1.0, 1.0, "-"),))


def test_dict_round_trip():
    space = DesignSpace((("a", 0.0, 1.0, "-"), ("b", 2.0, 3.0, "m")))
    assert np.array_equal(space.from_dict(space.as_dict([0.5, 2.5])), [0.5, 2.5])
    with pytest.raises(DomainError):
        space.from_dict({"a": 0.1})


def test_maximin_point_keeps_away_from_samples():
    existing = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    point = maximin_point(existing, seed=0)
    assert min_distance(np.vstack([existing, point])) > 0.5
