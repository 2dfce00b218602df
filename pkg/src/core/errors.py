"""Exception hierarchy for mdao-forge."""

from typing import Dict, Iterable, List, Optional, Tuple


class MdaoError(Exception):
    """Base class for every domain error raised by the toolchain."""


class DomainError(MdaoError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class TreeParseError(MdaoError):
    """Malformed exchange XML."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")


class StructuralError(MdaoError):
    """A path would be both a leaf and a branch, or an element mixes text and children."""

    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{message}: {path}")


class PathNotFoundError(MdaoError, KeyError):
    def __init__(self, path: str, ancestor: Optional[str]):
        self.path = path
        self.ancestor = ancestor
        super().__init__(f"path '{path}' not found; nearest existing ancestor: '{ancestor or ''}'")

    def __str__(self) -> str:
        return self.args[0]


class MergeConflictError(MdaoError):
    """Strict merge found shared paths with different values."""

    def __init__(self, conflicts: List[Tuple[str, object, object]]):
        self.conflicts = conflicts
        details = "; ".join(f"{path}: {old!r} vs {new!r}" for path, old, new in conflicts)
        super().__init__(f"{len(conflicts)} conflicting path(s): {details}")


class CompetenceError(MdaoError):
    """Invalid competence declaration."""


class GraphError(MdaoError):
    """Problem graph cannot be refined or architected as requested."""


class CollisionError(GraphError):
    def __init__(self, unresolved: Dict[str, Tuple[str, ...]]):
        self.unresolved = unresolved
        details = "; ".join(f"{path} <- {', '.join(producers)}" for path, producers in unresolved.items())
        super().__init__(f"unresolved competence collision(s): {details}")


class WorkflowSchemaError(MdaoError):
    def __init__(self, message: str, element_path: str):
        self.element_path = element_path
        super().__init__(f"{element_path}: {message}")


class BindingError(MdaoError):
    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(f"no registered competence for step(s): {', '.join(self.missing)}")


class MissingInputError(MdaoError):
    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        super().__init__(f"input tree lacks: {', '.join(self.missing)}")


class InfeasibleEvaluation(MdaoError):
    """Tagged infeasible signal raised by a discipline; drivers record it, never abort on it."""

    def __init__(self, competence: str, reason: str):
        self.competence = competence
        self.reason = reason
        super().__init__(f"{competence}: {reason}")


class CalibrationError(MdaoError):
    def __init__(self, bracket: Tuple[float, float], residuals: Tuple[float, float]):
        self.bracket = bracket
        self.residuals = residuals
        super().__init__(
            f"no root in bracket [{bracket[0]}, {bracket[1]}]: "
            f"residuals {residuals[0]:.6g} and {residuals[1]:.6g}"
        )


class SurrogateError(MdaoError):
    """Kriging fit impossible (too few or duplicate samples)."""


class ReportError(MdaoError):
    """Malformed report or sensitivity file."""
