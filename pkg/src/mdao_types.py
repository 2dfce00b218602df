"""Type definitions for mdao-forge records exchanged as JSON/CSV."""

from typing import Dict, List, Optional, TypedDict


class ValidationResult(TypedDict):
    """Result of validating an exchange file against the parameter dictionary."""
    file: str
    entries: int
    version: int
    unknown_paths: List[str]
    error: Optional[str]


class RunLog(TypedDict):
    """Contents of run/<runId>/log.json."""
    runId: str
    iterations: int
    converged: bool
    infeasible: bool
    residualHistory: List[float]
    wallTime: float
    error: Optional[str]
    finalValues: Dict[str, float]


class EvaluationResult(TypedDict):
    """One design point pushed through the converged MDA."""
    point: Dict[str, float]
    fuelSaved: Optional[float]
    g1: float  # fuselage length / diameter
    g2: float  # wing aspect ratio
    mtow: Optional[float]
    status: str  # 'ok', 'infeasible' or 'unconverged'
    feasible: bool
    error: Optional[str]


class HistoryEntry(TypedDict):
    """One evaluation in the optimizer trace."""
    index: int
    phase: str  # 'doe' or 'infill'
    point: Dict[str, float]
    fuelSaved: Optional[float]
    g1: float
    g2: float
    mtow: Optional[float]
    status: str
    feasible: bool
    bestFeasible: Optional[float]


class ConstraintValues(TypedDict):
    fuselageRatio: float
    aspectRatio: float
    mtow: Optional[float]


class ReportDict(TypedDict):
    """Contents of report.json."""
    bestPoint: Dict[str, float]
    bestObjective: Optional[float]
    constraints: ConstraintValues
    feasibleFound: bool
    history: List[HistoryEntry]
    sobolIndices: Dict[str, float]
    seed: int
    nInit: int
    budget: int
