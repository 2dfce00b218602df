"""Human-readable optimization summary and the Sobol bar chart."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import matplotlib as mpl

mpl.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from core.errors import ReportError  # noqa: E402
from mdao_types import ReportDict  # noqa: E402
from utils.constants import DESIGN_UNITS  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "mdao-forge"
FIGURE_SIZE = (6.0, 3.5)


def _number(value: Optional[float], digits: int = 4) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{digits}g}"


def _unit(name: str) -> str:
    return DESIGN_UNITS.get(name, "-")


def emit_report(report: ReportDict, sobol: Optional[Dict[str, float]] = None) -> str:
    """Deterministic text summary of a report and, optionally, Sobol indices."""
    try:
        best_point = report["bestPoint"]
        constraints = report["constraints"]
        history = report["history"]
    except (KeyError, TypeError) as exc:
        raise ReportError(f"report lacks field {exc}") from None

    lines: List[str] = []
    feasible = report.get("feasibleFound", report.get("bestObjective") is not None)
    lines.append("Optimization summary")
    lines.append("=" * 40)
    lines.append(f"Seed: {report.get('seed')}   Initial DoE: {report.get('nInit', 'n/a')}   "
                 f"Budget: {report.get('budget')}")
    lines.append(f"Feasible point found: {'yes' if feasible else 'no (least-violation point shown)'}")
    lines.append(f"Best fuel saved: {_number(report.get('bestObjective'))} kg")
    lines.append("")
    lines.append(f"{'Variable':<20} {'Value':>12}  Unit")
    lines.append("-" * 40)
    for name in sorted(best_point):
        lines.append(f"{name:<20} {_number(best_point[name], 6):>12}  {_unit(name)}")
    lines.append("")
    lines.append("Constraints at best point")
    lines.append("-" * 40)
    for name in sorted(constraints):
        lines.append(f"{name:<20} {_number(constraints[name], 6):>12}")
    lines.append("")
    statuses: Dict[str, int] = {}
    for entry in history:
        statuses[entry.get("status", "?")] = statuses.get(entry.get("status", "?"), 0) + 1
    summary = ", ".join(f"{status} {count}" for status, count in sorted(statuses.items()))
    lines.append(f"Evaluations: {len(history)} ({summary})")

    indices = sobol if sobol is not None else report.get("sobolIndices") or {}
    if indices:
        lines.append("")
        lines.append("First-order Sobol indices (descending)")
        lines.append("-" * 40)
        for name, value in sorted(indices.items(), key=lambda item: (-item[1], item[0])):
            lines.append(f"{name:<20} {value:>8.3f}")
    return "\n".join(lines) + "\n"


def render_sobol_svg(indices: Dict[str, float], path: Union[str, Path]) -> Path:
    """Static bar chart, one bar per variable in the given order.

    The SVG hash salt is fixed and the date metadata dropped so repeated
    renders of the same indices are byte-identical.
    """
    if not indices:
        raise ReportError("no Sobol indices to plot")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(indices)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=FIGURE_SIZE)
        bars = ax.bar(names, [indices[name] for name in names], color="tab:blue")
        for name, bar in zip(names, bars):
            bar.set_gid(f"bar-{name}")
        ax.set_ylabel("First-order index $S_1$")
        ax.set_ylim(min(0.0, min(indices.values())), max(1.0, max(indices.values())))
        ax.tick_params(axis="x", labelrotation=30)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.debug("wrote Sobol chart with %d bar(s) to %s", len(names), path)
    return path
