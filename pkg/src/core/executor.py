"""Execution of architected workflow plans over a ParameterTree.

Steps ahead of the MDA loop run once, the loop is iterated Gauss-Seidel
style (each step sees the freshest tree) until the relative change of the
convergence variables drops below the plan tolerance, and steps after the
loop run once on the converged tree. Every loop iteration bumps the tree
version and may be written to ``snapshots/iter_<k>.xml``.
"""

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Union

from core.datamodel import (
    ParameterTree,
    ParameterValue,
    merge_trees,
    real_entries,
    save_tree,
    serialize_tree,
    subset,
)
from core.errors import (
    BindingError,
    DomainError,
    GraphError,
    InfeasibleEvaluation,
    MissingInputError,
    PathNotFoundError,
)
from core.formalize import ProblemGraph, WorkflowPlan
from mdao_types import RunLog
from utils.constants import DEFAULT_RELAXATION, RUN_LOG_FILE, SNAPSHOT_DIR

logger = logging.getLogger(__name__)

Competence = Callable[[ParameterTree], ParameterTree]


@dataclass(frozen=True)
class BoundRun:
    """A plan whose every step is bound to a competence function."""
    plan: WorkflowPlan
    steps: Mapping[str, Competence]
    graph: Optional[ProblemGraph] = None
    relaxation: float = DEFAULT_RELAXATION


@dataclass
class RunRecord:
    run_id: str
    iterations: int
    converged: bool
    residual_history: List[float]
    wall_time: float
    final_tree: ParameterTree
    infeasible: bool = False
    error: Optional[str] = None
    snapshots: List[Path] = field(default_factory=list)

    def to_log(self) -> RunLog:
        return RunLog(
            runId=self.run_id,
            iterations=self.iterations,
            converged=self.converged,
            infeasible=self.infeasible,
            residualHistory=list(self.residual_history),
            wallTime=self.wall_time,
            error=self.error,
            finalValues=real_entries(self.final_tree),
        )


def plan_execution(plan: WorkflowPlan, registry: Mapping[str, Competence],
                   graph: Optional[ProblemGraph] = None,
                   relaxation: float = DEFAULT_RELAXATION) -> BoundRun:
    """Bind plan steps to registered competences.

    Args:
        plan: Architected workflow plan.
        registry: Competence name -> function.
        graph: When given, each step sees only its declared inputs and may
            write only its declared outputs.
        relaxation: Under-relaxation factor applied to the convergence
            variables after each sweep, in (0, 1].

    Raises:
        BindingError: Listing every step without a registered competence.
    """
    missing = [name for name in plan.ordered_steps if name not in registry]
    if missing:
        raise BindingError(missing)
    if not 0.0 < relaxation <= 1.0:
        raise DomainError(f"relaxation must lie in (0, 1], got {relaxation}")
    if graph is not None:
        for name in plan.ordered_steps:
            graph.competence(name)
    return BoundRun(plan, {name: registry[name] for name in plan.ordered_steps}, graph, relaxation)


def compute_run_id(plan: WorkflowPlan, tree: ParameterTree) -> str:
    """Content hash of plan and input tree."""
    digest = hashlib.sha1()
    digest.update(repr(plan).encode("utf-8"))
    digest.update(serialize_tree(tree).encode("utf-8"))
    return digest.hexdigest()[:12]


def external_inputs(run: BoundRun) -> List[str]:
    """Paths the plan reads but no plan step produces, plus the convergence variables."""
    if run.graph is None:
        return sorted(run.plan.convergence_vars)
    steps = [run.graph.competence(name) for name in run.plan.ordered_steps]
    produced = set().union(*(spec.outputs for spec in steps)) if steps else set()
    consumed = set().union(*(spec.inputs for spec in steps)) if steps else set()
    return sorted((consumed - produced) | set(run.plan.convergence_vars))


def _check_inputs(run: BoundRun, tree: ParameterTree) -> None:
    missing = [path for path in external_inputs(run) if path not in tree]
    if missing:
        raise MissingInputError(missing)


def execute_step(run: BoundRun, name: str, tree: ParameterTree) -> ParameterTree:
    """Run one competence and merge its outputs into ``tree``."""
    view = tree
    spec = run.graph.competence(name) if run.graph is not None else None
    if spec is not None:
        view = subset(tree, spec.inputs)
    try:
        outputs = run.steps[name](view)
    except PathNotFoundError as exc:
        raise MissingInputError([exc.path]) from None
    if spec is not None:
        undeclared = sorted(str(p) for p in outputs if str(p) not in spec.outputs)
        if undeclared:
            raise GraphError(f"{name} wrote undeclared output(s): {', '.join(undeclared)}")
    logger.debug("%s wrote %d value(s)", name, len(outputs))
    return merge_trees(tree, outputs, policy="overwrite", tool=name)


def snapshot_state(run_dir: Union[str, Path], iteration: int, tree: ParameterTree) -> Optional[Path]:
    """Write ``snapshots/iter_<k>.xml``; a write failure is logged and the run goes on."""
    target = Path(run_dir) / SNAPSHOT_DIR / f"iter_{iteration}.xml"
    try:
        return save_tree(tree, target)
    except OSError as exc:
        logger.warning("snapshot %s not written: %s", target, exc)
        return None


def _residual(old: Dict[str, float], new: Dict[str, float]) -> float:
    if not old:
        return 0.0
    return max(abs(new[p] - old[p]) / max(abs(old[p]), 1.0) for p in old)


def _relax(tree: ParameterTree, old: Dict[str, float], omega: float) -> ParameterTree:
    for path, previous in old.items():
        value = tree.get(path)
        blended = previous + omega * (value.as_float() - previous)
        tree = tree.with_value(path, ParameterValue.real(blended, value.unit))
    return tree


def run_mda(run: BoundRun, tree: ParameterTree, run_dir: Optional[Union[str, Path]] = None,
            run_id: Optional[str] = None) -> RunRecord:
    """Execute a bound plan to convergence.

    Args:
        run: Bound plan from ``plan_execution``.
        tree: Input tree holding every plan-external input and an initial
            guess for each convergence variable.
        run_dir: Directory receiving ``snapshots/`` and ``log.json``;
            nothing is written when omitted.
        run_id: Run identifier, by default a content hash of plan and tree.

    Returns:
        The run record. A discipline infeasibility halts the run and flags
        the record; without convergence the tree with the smallest residual
        is returned.
    """
    plan = run.plan
    run_id = run_id or compute_run_id(plan, tree)
    start = time.perf_counter()
    record = RunRecord(run_id, 0, False, [], 0.0, tree)
    _check_inputs(run, tree)
    base_version = tree.version
    current = tree

    def finish(final: ParameterTree) -> RunRecord:
        record.final_tree = final
        record.wall_time = time.perf_counter() - start
        if run_dir is not None:
            write_run_log(record, run_dir)
        return record

    def stamp(k: int, state: ParameterTree) -> ParameterTree:
        state = state.with_version(base_version + k)
        if run_dir is not None:
            path = snapshot_state(run_dir, k, state)
            if path is not None:
                record.snapshots.append(path)
        return state

    if not plan.ordered_steps:
        record.converged = True
        return finish(current)

    try:
        for name in plan.pre_loop:
            current = execute_step(run, name, current)
        if not plan.mda_loop:
            record.iterations = 1
            record.residual_history.append(0.0)
            record.converged = True
            return finish(stamp(1, current))

        best, best_residual = current, float("inf")
        for k in range(1, plan.max_iterations + 1):
            old = {p: current.real(p) for p in plan.convergence_vars}
            for name in plan.mda_loop:
                current = execute_step(run, name, current)
            if run.relaxation != 1.0:
                current = _relax(current, old, run.relaxation)
            residual = _residual(old, {p: current.real(p) for p in old})
            current = stamp(k, current)
            record.iterations = k
            record.residual_history.append(residual)
            logger.debug("iteration %d residual %.3e", k, residual)
            if residual < best_residual:
                best, best_residual = current, residual
            if residual <= plan.tolerance:
                record.converged = True
                break
        if not record.converged:
            logger.warning("MDA not converged after %d iterations (best residual %.3e)",
                           record.iterations, best_residual)
            current = best

        for name in plan.post_loop:
            current = execute_step(run, name, current)
    except InfeasibleEvaluation as exc:
        logger.info("run %s infeasible: %s", run_id, exc)
        record.infeasible = True
        record.converged = False
        record.error = str(exc)
        return finish(current)

    logger.info("run %s: %d iteration(s), converged=%s", run_id, record.iterations, record.converged)
    return finish(current)


def write_run_log(record: RunRecord, run_dir: Union[str, Path]) -> Optional[Path]:
    target = Path(run_dir) / RUN_LOG_FILE
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(record.to_log(), indent=2, sort_keys=True), encoding="utf-8")
    except OSError as exc:
        logger.warning("run log %s not written: %s", target, exc)
        return None
    return target
