"""Surrogate-based constrained optimization of the solar-power-system aircraft.

The driver runs in two steps: a Latin-hypercube DoE evaluated through the
converged MDA, then adaptive infill cycles (fit, propose, evaluate,
augment). The objective, fuel saved, is maximized; internally the kriging
model is fitted on its negation. Only MTOW gets a constraint surrogate, the
two geometric ratio constraints are closed-form in the design variables.
"""

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.acquisition import Bound, propose_infill
from core.case_study import case_study_plan
from core.competences import baseline_geometry, build_registry, mission_from_tree
from core.datamodel import ParameterTree, ParameterValue
from core.disciplines import DisciplineConstants, calibrate_baseline
from core.errors import DomainError, MdaoError, ReportError, SurrogateError
from core.executor import plan_execution, run_mda
from core.formalize import ProblemGraph, WorkflowPlan
from core.kriging import KrigingModel, fit_kriging
from core.sampling import DesignSpace, lhs_sample, maximin_point
from core.sensitivity import sobol_indices
from mdao_types import ConstraintValues, EvaluationResult, HistoryEntry, ReportDict
from utils.constants import (
    ASPECT_RATIO_BOUNDS,
    BASELINE_MTOW,
    DEFAULT_RELAXATION,
    DEFAULT_SOBOL_N,
    DOE_COLUMNS_TAIL,
    FEASIBILITY_SLACK,
    FUSELAGE_RATIO_BOUNDS,
    OPTIMIZER_BRANCH,
    P_FUEL_SAVED,
    P_MTOW,
    P_SPS_INSTALLED,
    P_TARGET_MTOW,
)

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], EvaluationResult]

STATUSES = ("ok", "infeasible", "unconverged")
MTOW_PENALTY = 1.05


@dataclass(frozen=True)
class ConstraintSpec:
    """Fuselage slenderness and wing aspect-ratio ranges plus the MTOW ceiling."""
    fuselage_ratio: Tuple[float, float] = FUSELAGE_RATIO_BOUNDS
    aspect_ratio: Tuple[float, float] = ASPECT_RATIO_BOUNDS
    max_mtow: float = BASELINE_MTOW
    slack: float = FEASIBILITY_SLACK  # relative

    def geometric(self, points: np.ndarray, space: DesignSpace) -> Tuple[np.ndarray, np.ndarray]:
        """g1 = fuselageLength / fuselageDiameter and g2 = (2 semiWingSpan)^2 / wingArea."""
        points = np.atleast_2d(points)
        column = {name: points[:, i] for i, name in enumerate(space.names)}
        g1 = column["fuselageLength"] / column["fuselageDiameter"]
        g2 = (2.0 * column["semiWingSpan"]) ** 2 / column["wingArea"]
        return g1, g2

    def _within(self, value, bounds: Tuple[float, float]):
        lower, upper = bounds
        return (value >= lower * (1.0 - self.slack)) & (value <= upper * (1.0 + self.slack))

    def analytic_feasible(self, points: np.ndarray, space: DesignSpace) -> np.ndarray:
        g1, g2 = self.geometric(points, space)
        return (self._within(g1, self.fuselage_ratio) & self._within(g2, self.aspect_ratio)).astype(float)

    def feasible(self, g1: float, g2: float, mtow: Optional[float]) -> bool:
        if mtow is None or not math.isfinite(mtow):
            return False
        return bool(self._within(g1, self.fuselage_ratio) and self._within(g2, self.aspect_ratio)
                    and mtow <= self.max_mtow * (1.0 + self.slack))

    def violation(self, g1: float, g2: float, mtow: Optional[float]) -> float:
        """Sum of relative bound violations; an unavailable MTOW counts as infinite."""
        if mtow is None or not math.isfinite(mtow):
            return math.inf
        total = 0.0
        for value, (lower, upper) in ((g1, self.fuselage_ratio), (g2, self.aspect_ratio)):
            total += max(lower - value, 0.0) / lower + max(value - upper, 0.0) / upper
        return total + max(mtow - self.max_mtow, 0.0) / self.max_mtow

    @property
    def mtow_bound(self) -> Bound:
        return (None, self.max_mtow)


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class CaseStudyEvaluator:
    """Pushes a design point through the converged MDA with the SPS installed."""

    def __init__(self, baseline: ParameterTree, constants: DisciplineConstants,
                 plan: Optional[WorkflowPlan] = None, graph: Optional[ProblemGraph] = None,
                 space: Optional[DesignSpace] = None, constraints: Optional[ConstraintSpec] = None,
                 relaxation: float = DEFAULT_RELAXATION):
        if plan is None:
            plan, graph = case_study_plan()
        target = baseline.real(P_TARGET_MTOW)
        if not constants.calibrated or constants.target_mtow != target:
            constants = calibrate_baseline(mission_from_tree(baseline, constants), baseline_geometry(baseline),
                                           target, constants)
        self.baseline = baseline.with_value(P_SPS_INSTALLED, ParameterValue.boolean(True))
        self.constants = constants
        self.space = space or DesignSpace.case_study()
        self.constraints = constraints or ConstraintSpec()
        self.run = plan_execution(plan, build_registry(constants), graph, relaxation)

    def design_tree(self, point: np.ndarray) -> ParameterTree:
        tree = self.baseline
        for (name, _, _, unit), value in zip(self.space.variables, point):
            tree = tree.with_value(f"{OPTIMIZER_BRANCH}/{name}", ParameterValue.real(float(value), unit))
        return tree

    def __call__(self, point: np.ndarray) -> EvaluationResult:
        point = np.asarray(point, dtype=float)
        g1, g2 = (float(v[0]) for v in self.constraints.geometric(point, self.space))
        fuel_saved = mtow = None
        error = None
        try:
            record = run_mda(self.run, self.design_tree(point))
        except MdaoError as exc:
            status, error = "infeasible", str(exc)
        else:
            if record.infeasible:
                status, error = "infeasible", record.error
            else:
                status = "ok" if record.converged else "unconverged"
                fuel_saved = record.final_tree.real(P_FUEL_SAVED)
                mtow = record.final_tree.real(P_MTOW)
        return EvaluationResult(
            point=self.space.as_dict(point),
            fuelSaved=fuel_saved,
            g1=g1,
            g2=g2,
            mtow=mtow,
            status=status,
            feasible=status == "ok" and self.constraints.feasible(g1, g2, mtow),
            error=error,
        )


def evaluate_points(evaluator: Evaluator, points: np.ndarray, jobs: int = 1) -> List[EvaluationResult]:
    """Evaluate points, concurrently when ``jobs`` > 1; results keep the order of ``points``."""
    points = np.atleast_2d(points)
    if jobs <= 1:
        return [evaluator(p) for p in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(evaluator, points))


@dataclass
class SampleSet:
    """Evaluated design points in physical units with their outcomes."""
    space: DesignSpace
    points: np.ndarray
    results: List[EvaluationResult]

    @property
    def objectives(self) -> np.ndarray:
        return np.array([np.nan if r["fuelSaved"] is None else r["fuelSaved"] for r in self.results])

    @property
    def constraint_values(self) -> np.ndarray:
        return np.array([[r["g1"], r["g2"], np.nan if r["mtow"] is None else r["mtow"]] for r in self.results])

    @property
    def feasible(self) -> np.ndarray:
        return np.array([r["feasible"] for r in self.results], dtype=bool)

    @property
    def statuses(self) -> List[str]:
        return [r["status"] for r in self.results]

    def __len__(self) -> int:
        return len(self.results)


def run_doe(space: DesignSpace, evaluator: Evaluator, n: int, seed: int, jobs: int = 1) -> SampleSet:
    points = lhs_sample(space, n, seed)
    results = evaluate_points(evaluator, points, jobs)
    failed = sum(r["status"] != "ok" for r in results)
    logger.info("DoE of %d point(s): %d feasible, %d not evaluated cleanly",
                n, sum(r["feasible"] for r in results), failed)
    return SampleSet(space, points, results)


def _csv_number(value: Optional[float]) -> str:
    return "nan" if value is None else repr(float(value))


def write_doe_csv(samples: SampleSet, path: Union[str, Path]) -> Path:
    """One row per evaluation: variable values, then fuelSaved,g1,g2,mtow,status."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(samples.space.names) + DOE_COLUMNS_TAIL)
        for point, result in zip(samples.points, samples.results):
            writer.writerow([repr(float(v)) for v in point] + [
                _csv_number(result["fuelSaved"]), _csv_number(result["g1"]), _csv_number(result["g2"]),
                _csv_number(result["mtow"]), result["status"],
            ])
    return path


def read_doe_csv(path: Union[str, Path], space: DesignSpace,
                 constraints: Optional[ConstraintSpec] = None) -> SampleSet:
    constraints = constraints or ConstraintSpec()
    try:
        with Path(path).open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    expected = list(space.names) + DOE_COLUMNS_TAIL
    if not rows or rows[0] != expected:
        raise ReportError(f"{path}: expected header {','.join(expected)}")
    points, results = [], []
    for number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise ReportError(f"{path}:{number}: expected {len(expected)} columns, got {len(row)}")
        try:
            values = [float(v) for v in row[:-1]]
        except ValueError as exc:
            raise ReportError(f"{path}:{number}: {exc}") from None
        status = row[-1]
        if status not in STATUSES:
            raise ReportError(f"{path}:{number}: unknown status {status!r}")
        point = np.array(values[:space.dimension])
        fuel_saved, g1, g2, mtow = (_finite_or_none(v) for v in values[space.dimension:])
        points.append(point)
        results.append(EvaluationResult(
            point=space.as_dict(point), fuelSaved=fuel_saved, g1=g1, g2=g2, mtow=mtow, status=status,
            feasible=status == "ok" and constraints.feasible(g1, g2, mtow), error=None,
        ))
    if not results:
        raise ReportError(f"{path}: no DoE rows")
    return SampleSet(space, np.array(points), results)


def fit_objective_model(samples: SampleSet, seed: int = 0) -> KrigingModel:
    """Kriging model of fuel saved over the cleanly evaluated points, in physical sign."""
    usable = np.isfinite(samples.objectives)
    if not np.any(usable):
        raise SurrogateError("no evaluated objective values to fit")
    return fit_kriging(samples.points[usable], samples.objectives[usable],
                       samples.space.lower, samples.space.upper, seed=seed)


@dataclass
class OptimizationReport:
    best_point: Dict[str, float]
    best_objective: Optional[float]
    constraints: ConstraintValues
    feasible_found: bool
    history: List[HistoryEntry]
    seed: int
    n_init: int
    budget: int
    sobol_indices: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> ReportDict:
        return ReportDict(
            bestPoint=self.best_point,
            bestObjective=self.best_objective,
            constraints=self.constraints,
            feasibleFound=self.feasible_found,
            history=self.history,
            sobolIndices=self.sobol_indices,
            seed=self.seed,
            nInit=self.n_init,
            budget=self.budget,
        )


def write_report_json(report: OptimizationReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


REPORT_FIELDS = ("bestPoint", "bestObjective", "constraints", "history", "seed", "budget")


def read_report_json(path: Union[str, Path]) -> ReportDict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ReportError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: malformed JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ReportError(f"{path}: report must be a JSON object")
    missing = [name for name in REPORT_FIELDS if name not in data]
    if missing:
        raise ReportError(f"{path}: report lacks field(s): {', '.join(missing)}")
    if not isinstance(data["bestPoint"], dict) or not isinstance(data["history"], list):
        raise ReportError(f"{path}: bestPoint must be an object and history a list")
    return data


def _training_data(points: np.ndarray, results: Sequence[EvaluationResult],
                   constraints: ConstraintSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Minimized objective and MTOW per point; unavailable values get penalties."""
    objective = np.array([np.nan if r["fuelSaved"] is None else -r["fuelSaved"] for r in results])
    mtow = np.array([np.nan if r["mtow"] is None else r["mtow"] for r in results])
    if not np.any(np.isfinite(objective)) or not np.any(np.isfinite(mtow)):
        raise SurrogateError("no cleanly evaluated point to train on")
    objective = np.where(np.isfinite(objective), objective, np.nanmax(objective))
    penalty = MTOW_PENALTY * max(float(np.nanmax(mtow)), constraints.max_mtow)
    mtow = np.where(np.isfinite(mtow), mtow, penalty)
    return objective, mtow


def next_point(space: DesignSpace, constraints: ConstraintSpec, points: np.ndarray,
               results: Sequence[EvaluationResult], best: Optional[float], seed: int) -> np.ndarray:
    """Fit the surrogates on every evaluation so far and propose the next point."""
    try:
        objective, mtow = _training_data(points, results, constraints)
        objective_model = fit_kriging(points, objective, space.lower, space.upper, seed=seed)
        mtow_model = fit_kriging(points, mtow, space.lower, space.upper, seed=seed)
    except SurrogateError as exc:
        logger.warning("surrogate fit failed (%s); exploring the maximin point", exc)
        return space.from_unit(maximin_point(space.to_unit(points), seed))
    return propose_infill(
        objective_model, [mtow_model], [constraints.mtow_bound], space,
        best=None if best is None else -best,
        seed=seed,
        existing=points,
        analytic_feasible=lambda x: constraints.analytic_feasible(x, space),
    )


def _best_index(results: Sequence[EvaluationResult], constraints: ConstraintSpec) -> Tuple[int, bool]:
    feasible = [i for i, r in enumerate(results) if r["feasible"]]
    if feasible:
        return max(feasible, key=lambda i: (results[i]["fuelSaved"], -i)), True
    violations = [constraints.violation(r["g1"], r["g2"], r["mtow"]) for r in results]
    return int(np.argmin(violations)), False


def run_optimization(space: DesignSpace, constraints: ConstraintSpec, evaluator: Evaluator,
                     n_init: int, budget: int, seed: int, jobs: int = 1,
                     sobol_n: Optional[int] = DEFAULT_SOBOL_N) -> OptimizationReport:
    """DoE followed by ``budget - n_init`` constrained-EI infill cycles.

    Args:
        space: Design space.
        constraints: Constraint ranges.
        evaluator: Maps a physical point to an EvaluationResult.
        n_init: Size of the initial Latin hypercube, at least d + 2.
        budget: Total number of evaluations, at least ``n_init``.
        seed: Seed of the DoE, the surrogate fits and the infill search.
        jobs: Concurrent evaluations during the DoE.
        sobol_n: Base sample size of the sensitivity analysis on the
            initial-DoE surrogate; None skips it.

    Returns:
        The report. When nothing feasible was found it carries the point of
        least constraint violation and ``feasible_found`` is False.
    """
    if n_init < space.dimension + 2:
        raise DomainError(f"nInit must be at least d+2 = {space.dimension + 2}, got {n_init}")
    if budget < n_init:
        raise DomainError(f"budget {budget} is smaller than nInit {n_init}")

    points = lhs_sample(space, n_init, seed)
    results = evaluate_points(evaluator, points, jobs)
    history: List[HistoryEntry] = []
    best: Optional[float] = None

    def record(point: np.ndarray, result: EvaluationResult, phase: str) -> None:
        nonlocal best
        if result["feasible"] and (best is None or result["fuelSaved"] > best):
            best = result["fuelSaved"]
        history.append(HistoryEntry(
            index=len(history), phase=phase, point=space.as_dict(point),
            fuelSaved=result["fuelSaved"], g1=result["g1"], g2=result["g2"], mtow=result["mtow"],
            status=result["status"], feasible=result["feasible"], bestFeasible=best,
        ))

    for point, result in zip(points, results):
        record(point, result, "doe")

    sobol: Dict[str, float] = {}
    if sobol_n:
        try:
            model = fit_objective_model(SampleSet(space, points, results), seed)
            sobol = sobol_indices(model, space, sobol_n, seed).as_dict()
        except SurrogateError as exc:
            logger.warning("initial-DoE sensitivity skipped: %s", exc)

    all_points = np.array(points)
    all_results = list(results)
    for cycle in range(budget - n_init):
        point = next_point(space, constraints, all_points, all_results, best, seed + 1 + cycle)
        result = evaluator(point)
        all_points = np.vstack([all_points, point])
        all_results.append(result)
        record(point, result, "infill")
        logger.info("infill %d/%d: fuelSaved=%s status=%s best=%s", cycle + 1, budget - n_init,
                    result["fuelSaved"], result["status"], best)

    index, found = _best_index(all_results, constraints)
    chosen = all_results[index]
    if not found:
        logger.warning("no feasible point after %d evaluations", budget)
    return OptimizationReport(
        best_point=space.as_dict(all_points[index]),
        best_objective=chosen["fuelSaved"],
        constraints=ConstraintValues(fuselageRatio=chosen["g1"], aspectRatio=chosen["g2"], mtow=chosen["mtow"]),
        feasible_found=found,
        history=history,
        seed=seed,
        n_init=n_init,
        budget=budget,
        sobol_indices=sobol,
    )
