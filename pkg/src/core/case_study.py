"""The solar-power-system design problem assembled from the shipped data."""

import logging
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

from core.formalize import (
    ProblemGraph,
    WorkflowPlan,
    apply_architecture,
    architected_graph,
    build_fpg,
    build_rcg,
    competence_files,
    load_competences,
    parse_choices,
)
from utils.constants import (
    DEFAULT_CHOICES_FILE,
    DEFAULT_COMPETENCE_DIR,
    DEFAULT_LOOP_HEAD,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    DESIGN_VARIABLES,
    OPTIMIZER_BRANCH,
    P_FUEL_SAVED,
    P_MTOW,
)

logger = logging.getLogger(__name__)

OBJECTIVE = P_FUEL_SAVED
CONSTRAINT_OUTPUTS = (P_MTOW,)
DESIGN_PATHS = tuple(f"{OPTIMIZER_BRANCH}/{name}" for name, *_ in DESIGN_VARIABLES)

PathArg = Union[str, Path]


def load_choices(choices: Optional[PathArg]) -> dict:
    if choices is None:
        return {}
    return parse_choices(Path(choices).read_bytes())


def case_study_rcg(tools_dir: PathArg = DEFAULT_COMPETENCE_DIR) -> ProblemGraph:
    files = competence_files(tools_dir)
    logger.debug("loading %d competence file(s) from %s", len(files), tools_dir)
    return build_rcg(load_competences(files))


def case_study_fpg(tools_dir: PathArg = DEFAULT_COMPETENCE_DIR,
                   choices: Optional[PathArg] = DEFAULT_CHOICES_FILE,
                   objective: str = OBJECTIVE,
                   design_variables: Iterable[str] = DESIGN_PATHS,
                   constraint_outputs: Iterable[str] = CONSTRAINT_OUTPUTS) -> ProblemGraph:
    return build_fpg(case_study_rcg(tools_dir), objective, design_variables, constraint_outputs,
                     load_choices(choices))


def case_study_plan(tools_dir: PathArg = DEFAULT_COMPETENCE_DIR,
                    choices: Optional[PathArg] = DEFAULT_CHOICES_FILE,
                    tolerance: float = DEFAULT_TOLERANCE,
                    max_iterations: int = DEFAULT_MAX_ITERATIONS,
                    wrapper: str = "none",
                    loop_head: str = DEFAULT_LOOP_HEAD) -> Tuple[WorkflowPlan, ProblemGraph]:
    """Converged-MDA plan and its architected graph for the shipped competences."""
    fpg = case_study_fpg(tools_dir, choices)
    plan = apply_architecture(fpg, "converged-mda-gs", tolerance, max_iterations, wrapper, loop_head)
    return plan, architected_graph(fpg, plan)
