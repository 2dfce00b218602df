import numpy as np
import pytest

from core.errors import DomainError, ReportError
from core.kriging import fit_kriging
from core.sampling import DesignSpace, lhs_sample
from core.sensitivity import read_sobol_csv, sobol_indices, write_sobol_csv

SQUARE = DesignSpace((("x1", 0.0, 1.0, "-"), ("x2", 0.0, 1.0, "-")))


def test_weighted_sum():
    result = sobol_indices(lambda x: 3 * x[:, 0] + x[:, 1], SQUARE, n=4096, seed=1)
    assert result.first_order[0] == pytest.approx(0.9, abs=0.05)
    assert result.first_order[1] == pytest.approx(0.1, abs=0.05)
    assert result.evaluations == 2 * 4096 * 3


def test_single_active_variable():
    result = sobol_indices(lambda x: x[:, 0], SQUARE, n=2048)
    assert result.first_order[0] == pytest.approx(1.0, abs=0.05)
    assert result.first_order[1] == pytest.approx(0.0, abs=0.05)
    assert result.ranking()[0][0] == "x1"


def test_kriging_mean_is_analysed():
    x = lhs_sample(SQUARE, 12, seed=2)
    model = fit_kriging(x, 3 * x[:, 0] + x[:, 1], SQUARE.lower, SQUARE.upper)
    result = sobol_indices(model, SQUARE, n=1024)
    assert result.first_order[0] > result.first_order[1]


def test_base_sample_too_small():
    with pytest.raises(DomainError):
        sobol_indices(lambda x: x[:, 0], SQUARE, n=512)


def test_constant_output_is_degenerate():
    result = sobol_indices(lambda x: np.full(len(x), 4.0), SQUARE, n=1024)
    assert result.degenerate
    assert np.all(result.first_order == 0.0)


def test_csv_round_trip(tmp_path):
    result = sobol_indices(lambda x: 3 * x[:, 0] + x[:, 1], SQUARE, n=1024)
    path = write_sobol_csv(result, tmp_path / "sobol.csv")
    assert read_sobol_csv(path) == result.as_dict()


def test_empty_csv_rejected(tmp_path):
    path = tmp_path / "sobol.csv"
    path.write_text("")
    with pytest.raises(ReportError):
        read_sobol_csv(path)
    path.write_text("variable,S1\n")
    with pytest.raises(ReportError):
        read_sobol_csv(path)
