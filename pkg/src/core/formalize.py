"""Graph formalization of the design problem.

Competence declarations are assembled into a Repository Competence Graph
(RCG), refined into a Fundamental Problem Graph (FPG) by resolving
collisions and pruning competences that do not feed the objective or a
constraint, and finally architected into an executable converged-MDA plan.
Plans round-trip through a portable workflow XML file; graphs can also be
written as Graphviz DOT text or as a design-structure-matrix text grid.
"""

import logging
from dataclasses import dataclass, field, replace
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
from lxml import etree
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from core.datamodel import TOKEN_RE, ParameterPath
from core.errors import (
    CollisionError,
    CompetenceError,
    DomainError,
    GraphError,
    WorkflowSchemaError,
)
from utils.constants import (
    DEFAULT_LOOP_HEAD,
    PARAMETER_DICTIONARY,
    SUPPORTED_PATTERNS,
    WORKFLOW_SCHEMA_FILE,
    WRAPPER_KINDS,
)

logger = logging.getLogger(__name__)

STAGES = ("RCG", "FPG", "ARCHITECTED")
Edge = Tuple[str, str]


def _canonical(path: str) -> str:
    return str(ParameterPath.parse(path))


@dataclass(frozen=True)
class CompetenceSpec:
    """A tool's identity plus the parameter paths it reads and writes."""
    name: str
    owner: str
    inputs: FrozenSet[str]
    outputs: FrozenSet[str]
    description: str = ""

    def __post_init__(self):
        if not TOKEN_RE.match(self.name):
            raise CompetenceError(f"invalid competence name {self.name!r}")
        try:
            object.__setattr__(self, "inputs", frozenset(_canonical(p) for p in self.inputs))
            object.__setattr__(self, "outputs", frozenset(_canonical(p) for p in self.outputs))
        except DomainError as exc:
            raise CompetenceError(f"{self.name}: {exc}") from None
        if not self.outputs:
            raise CompetenceError(f"{self.name}: competence declares no outputs")
        overlap = self.inputs & self.outputs
        if overlap:
            raise CompetenceError(f"{self.name}: paths both input and output: {', '.join(sorted(overlap))}")


@dataclass(frozen=True)
class ProblemGraph:
    """Directed bipartite graph of competences and parameters."""
    stage: str = "RCG"
    competences: Tuple[CompetenceSpec, ...] = ()
    parameters: FrozenSet[str] = frozenset()
    edges: FrozenSet[Edge] = frozenset()
    collisions: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    objective: Optional[str] = None
    design_variables: FrozenSet[str] = frozenset()
    constraint_outputs: FrozenSet[str] = frozenset()
    feedback_edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        if self.stage not in STAGES:
            raise GraphError(f"unknown graph stage {self.stage!r}")
        object.__setattr__(self, "competences", tuple(sorted(self.competences, key=lambda c: c.name)))
        names = self.names
        for source, target in self.edges:
            forward = source in names and target in self.parameters
            backward = source in self.parameters and target in names
            if not (forward or backward):
                raise GraphError(f"edge {source} -> {target} does not join a competence and a parameter")
        if not self.feedback_edges <= self.edges:
            raise GraphError("feedback edges must be graph edges")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.competences)

    def competence(self, name: str) -> CompetenceSpec:
        for spec in self.competences:
            if spec.name == name:
                return spec
        raise GraphError(f"unknown competence {name!r}")

    def producers(self, path: str) -> Tuple[str, ...]:
        return tuple(sorted(s for s, t in self.edges if t == path and s in self.names))

    def consumers(self, path: str) -> Tuple[str, ...]:
        return tuple(sorted(t for s, t in self.edges if s == path and t in self.names))

    def couplings(self) -> Dict[Edge, Tuple[str, ...]]:
        """Competence-to-competence projection: (producer, consumer) -> parameters carried."""
        carried: Dict[Edge, List[str]] = {}
        for path in sorted(self.parameters):
            for producer in self.producers(path):
                for consumer in self.consumers(path):
                    carried.setdefault((producer, consumer), []).append(path)
        return {edge: tuple(paths) for edge, paths in sorted(carried.items())}


@dataclass(frozen=True)
class WorkflowPlan:
    """Ordered, loop-annotated process with its convergence settings."""
    ordered_steps: Tuple[str, ...]
    mda_loop: Tuple[str, ...] = ()
    convergence_vars: Tuple[str, ...] = ()
    tolerance: float = 1e-6
    max_iterations: int = 50
    wrapper: str = "none"
    feedback_edges: Tuple[Edge, ...] = ()
    pattern: str = "converged-mda-gs"

    def __post_init__(self):
        object.__setattr__(self, "ordered_steps", tuple(self.ordered_steps))
        object.__setattr__(self, "mda_loop", tuple(self.mda_loop))
        object.__setattr__(self, "convergence_vars", tuple(sorted(self.convergence_vars)))
        object.__setattr__(self, "feedback_edges", tuple(sorted(self.feedback_edges)))
        if len(set(self.ordered_steps)) != len(self.ordered_steps):
            raise GraphError("plan lists a step twice")
        positions = [self.ordered_steps.index(s) for s in self.mda_loop if s in self.ordered_steps]
        if len(positions) != len(self.mda_loop) or positions != sorted(positions):
            raise GraphError("mdaLoop must be a subsequence of orderedSteps")
        if positions and positions[-1] - positions[0] + 1 != len(positions):
            raise GraphError("mdaLoop steps must be contiguous in orderedSteps")
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise DomainError(f"maxIterations must be positive, got {self.max_iterations}")
        if self.wrapper not in WRAPPER_KINDS:
            raise DomainError(f"unknown wrapper {self.wrapper!r}; expected one of {sorted(WRAPPER_KINDS)}")

    @property
    def pre_loop(self) -> Tuple[str, ...]:
        if not self.mda_loop:
            return self.ordered_steps
        return self.ordered_steps[:self.ordered_steps.index(self.mda_loop[0])]

    @property
    def post_loop(self) -> Tuple[str, ...]:
        if not self.mda_loop:
            return ()
        return self.ordered_steps[self.ordered_steps.index(self.mda_loop[-1]) + 1:]


# ---------------------------------------------------------------------------
# Competence declarations
# ---------------------------------------------------------------------------

def parse_competence(xml_text: Union[str, bytes], source: str = "<string>") -> CompetenceSpec:
    """Read ``<competence name owner><in>path</in>...<out>path</out>...</competence>``."""
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    try:
        root = etree.fromstring(xml_text, etree.XMLParser(remove_comments=True))
    except etree.XMLSyntaxError as exc:
        raise CompetenceError(f"{source}: malformed XML: {exc.msg}") from None
    if root.tag != "competence":
        raise CompetenceError(f"{source}: root element must be 'competence', got {root.tag!r}")
    name = root.get("name")
    if not name:
        raise CompetenceError(f"{source}: competence has no name")
    return CompetenceSpec(
        name=name,
        owner=root.get("owner", ""),
        inputs=frozenset((el.text or "").strip() for el in root.iterfind("in")),
        outputs=frozenset((el.text or "").strip() for el in root.iterfind("out")),
        description=(root.findtext("description") or "").strip(),
    )


def unknown_paths(spec: CompetenceSpec, dictionary: Mapping[str, str] = PARAMETER_DICTIONARY) -> List[str]:
    return sorted(p for p in spec.inputs | spec.outputs if p not in dictionary)


def load_competences(files: Iterable[Union[str, Path]],
                     dictionary: Mapping[str, str] = PARAMETER_DICTIONARY) -> List[CompetenceSpec]:
    """Load competence XML files; paths outside the dictionary are warned about, not rejected."""
    specs: List[CompetenceSpec] = []
    seen: Dict[str, str] = {}
    for file in files:
        file = Path(file)
        spec = parse_competence(file.read_bytes(), str(file))
        if spec.name in seen:
            raise CompetenceError(f"duplicate competence name {spec.name!r} in {seen[spec.name]} and {file}")
        seen[spec.name] = str(file)
        unknown = unknown_paths(spec, dictionary)
        if unknown:
            logger.warning("%s: paths not in the parameter dictionary: %s", spec.name, ", ".join(unknown))
        specs.append(spec)
    return specs


def competence_files(directory: Union[str, Path]) -> List[Path]:
    return sorted(Path(directory).glob("*.xml"))


def parse_choices(xml_text: Union[str, bytes]) -> Dict[str, str]:
    """Collision choice map: ``<choices><choice path=".." competence=".."/></choices>``."""
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    try:
        root = etree.fromstring(xml_text)
    except etree.XMLSyntaxError as exc:
        raise GraphError(f"malformed choices file: {exc.msg}") from None
    return {_canonical(el.get("path", "")): el.get("competence", "") for el in root.iterfind("choice")}


# ---------------------------------------------------------------------------
# RCG -> FPG -> architecture
# ---------------------------------------------------------------------------

def build_rcg(specs: Sequence[CompetenceSpec]) -> ProblemGraph:
    """Bipartite graph of every competence; collisions are recorded, not resolved."""
    if not specs:
        raise GraphError("at least one competence is required")
    names = [s.name for s in specs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise CompetenceError(f"duplicate competence name(s): {', '.join(duplicates)}")

    edges: Set[Edge] = set()
    parameters: Set[str] = set()
    producers: Dict[str, List[str]] = {}
    for spec in specs:
        for path in spec.inputs:
            edges.add((path, spec.name))
            parameters.add(path)
        for path in spec.outputs:
            edges.add((spec.name, path))
            parameters.add(path)
            producers.setdefault(path, []).append(spec.name)
    collisions = {p: tuple(sorted(names)) for p, names in sorted(producers.items()) if len(names) > 1}
    return ProblemGraph("RCG", tuple(specs), frozenset(parameters), frozenset(edges), collisions)


def build_fpg(rcg: ProblemGraph, objective: str, design_variables: Iterable[str] = (),
              constraint_outputs: Iterable[str] = (),
              collision_choices: Optional[Mapping[str, str]] = None) -> ProblemGraph:
    """Resolve collisions, then keep only competences that feed the objective or a constraint."""
    objective = _canonical(objective)
    design = frozenset(_canonical(p) for p in design_variables)
    constraints = frozenset(_canonical(p) for p in constraint_outputs)
    choices = {_canonical(p): c for p, c in (collision_choices or {}).items()}

    unresolved = {p: c for p, c in rcg.collisions.items() if p not in choices}
    if unresolved:
        raise CollisionError(unresolved)
    dropped: Set[Edge] = set()
    for path, producers in rcg.collisions.items():
        if choices[path] not in producers:
            raise GraphError(f"choice {choices[path]!r} for {path} is not one of {', '.join(producers)}")
        dropped.update((p, path) for p in producers if p != choices[path])
    edges = set(rcg.edges) - dropped

    names = set(rcg.names)
    targets = {objective} | constraints
    for target in sorted(targets):
        if not any(s in names and t == target for s, t in edges):
            what = "objective" if target == objective else "constraint output"
            raise GraphError(f"{what} {target} is not produced by any competence")

    predecessors: Dict[str, Set[str]] = {}
    for source, target in edges:
        predecessors.setdefault(target, set()).add(source)
    reached: Set[str] = set()
    frontier = list(targets)
    while frontier:
        node = frontier.pop()
        for previous in predecessors.get(node, ()):
            if previous not in reached:
                reached.add(previous)
                frontier.append(previous)
    retained_names = names & reached
    pruned = sorted(names - retained_names)
    if pruned:
        logger.info("FPG prunes competences not feeding objective or constraints: %s", ", ".join(pruned))

    retained: List[CompetenceSpec] = []
    for spec in rcg.competences:
        if spec.name in retained_names:
            outputs = frozenset(p for p in spec.outputs if (spec.name, p) not in dropped)
            retained.append(replace(spec, outputs=outputs))
    kept_edges = {(s, t) for s, t in edges if s in retained_names or t in retained_names}
    parameters = {n for edge in kept_edges for n in edge} - retained_names

    produced_design = sorted(p for p in design if any(s in retained_names and t == p for s, t in kept_edges))
    if produced_design:
        raise GraphError(f"design variables produced by a retained competence: {', '.join(produced_design)}")
    unused = sorted(design - parameters)
    if unused:
        logger.warning("design variables not consumed by any retained competence: %s", ", ".join(unused))

    return ProblemGraph(
        stage="FPG",
        competences=tuple(retained),
        parameters=frozenset(parameters | design),
        edges=frozenset(kept_edges),
        objective=objective,
        design_variables=design,
        constraint_outputs=constraints,
    )


def _ordered(dependencies: Mapping[str, Set[str]], key) -> List[str]:
    sorter = TopologicalSorter(dependencies)
    try:
        sorter.prepare()
    except CycleError as exc:
        raise GraphError(f"dependency cycle remains: {' -> '.join(exc.args[1])}") from None
    order: List[str] = []
    while sorter.is_active():
        for node in sorted(sorter.get_ready(), key=key):
            order.append(node)
            sorter.done(node)
    return order


def _back_edges(head: str, loop: Set[str], couplings: Mapping[Edge, Tuple[str, ...]]) -> Set[Edge]:
    """(parameter, consumer) edges closing a cycle once couplings into ``head`` are cut."""
    successors = {n: sorted(b for a, b in couplings if a == n and b in loop and b != head) for n in loop}
    state: Dict[str, str] = {}
    found: Set[Edge] = set()

    def visit(node: str) -> None:
        state[node] = "open"
        for target in successors[node]:
            if state.get(target) == "open":
                found.update((p, target) for p in couplings[(node, target)])
            elif target not in state:
                visit(target)
        state[node] = "done"

    for start in [head] + sorted(loop - {head}):
        if start not in state:
            visit(start)
    return found


def apply_architecture(fpg: ProblemGraph, pattern: str = "converged-mda-gs", tolerance: float = 1e-6,
                       max_iterations: int = 50, wrapper: str = "none",
                       loop_head: str = DEFAULT_LOOP_HEAD) -> WorkflowPlan:
    """Turn an FPG into a converged-MDA plan with Gauss-Seidel ordering.

    The strongly connected part of the competence coupling becomes the MDA
    loop. Cycles are broken by cutting every coupling into ``loop_head``,
    which therefore opens each iteration, and then every back edge of a
    depth-first walk of the loop body (head first, then by name). The
    parameters carried by the cut edges are the convergence variables.
    """
    if pattern not in SUPPORTED_PATTERNS:
        raise DomainError(f"unsupported architecture pattern {pattern!r}; expected one of {sorted(SUPPORTED_PATTERNS)}")
    if fpg.stage != "FPG":
        raise GraphError(f"architecture applies to an FPG, got stage {fpg.stage}")

    names = list(fpg.names)
    index = {n: i for i, n in enumerate(names)}
    couplings = fpg.couplings()
    rows = [index[a] for a, _ in couplings]
    cols = [index[b] for _, b in couplings]
    adjacency = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(names), len(names)))
    _, labels = connected_components(adjacency, directed=True, connection="strong")
    groups: Dict[int, List[str]] = {}
    for name, label in zip(names, labels):
        groups.setdefault(int(label), []).append(name)
    coupled = [sorted(g) for g in groups.values() if len(g) > 1]
    if len(coupled) > 1:
        raise GraphError("more than one coupled group: " + "; ".join(", ".join(g) for g in sorted(coupled)))
    loop = set(coupled[0]) if coupled else set()

    feedback: Set[Edge] = set()
    if loop:
        head = loop_head if loop_head in loop else min(loop)
        for (producer, consumer), paths in couplings.items():
            if consumer == head and producer in loop:
                feedback.update((p, head) for p in paths)
        feedback.update(_back_edges(head, loop, couplings))
    else:
        head = ""
    cut = {(producer, consumer) for (producer, consumer), paths in couplings.items()
           if all((p, consumer) in feedback for p in paths)}

    inner = {n: {a for a, b in couplings if b == n and a in loop and (a, n) not in cut} for n in loop}
    loop_order = _ordered(inner, key=lambda n: (n != head, n))

    supernode = "\0loop"
    def outer_node(n: str) -> str:
        return supernode if n in loop else n
    outer: Dict[str, Set[str]] = {outer_node(n): set() for n in names}
    for (a, b) in couplings:
        if outer_node(a) != outer_node(b):
            outer[outer_node(b)].add(outer_node(a))
    outer_order = _ordered(outer, key=lambda n: head if n == supernode else n)

    ordered: List[str] = []
    for node in outer_order:
        ordered.extend(loop_order if node == supernode else [node])

    plan = WorkflowPlan(
        ordered_steps=tuple(ordered),
        mda_loop=tuple(loop_order),
        convergence_vars=tuple(sorted({p for p, _ in feedback})),
        tolerance=float(tolerance),
        max_iterations=int(max_iterations),
        wrapper=wrapper,
        feedback_edges=tuple(sorted(feedback)),
        pattern=pattern,
    )
    logger.info("architected plan: %s (loop: %s)", " -> ".join(plan.ordered_steps),
                ", ".join(plan.mda_loop) or "none")
    return plan


def architected_graph(fpg: ProblemGraph, plan: WorkflowPlan) -> ProblemGraph:
    if fpg.stage == "ARCHITECTED":
        return fpg
    return replace(fpg, stage="ARCHITECTED", feedback_edges=frozenset(plan.feedback_edges))


# ---------------------------------------------------------------------------
# Workflow file
# ---------------------------------------------------------------------------

def export_workflow(plan: WorkflowPlan, graph: ProblemGraph) -> str:
    """Serialize plan plus problem formulation to workflow XML."""
    graph = architected_graph(graph, plan)
    root = etree.Element("workflow", pattern=plan.pattern)

    catalogue = etree.SubElement(root, "competences")
    for spec in graph.competences:
        element = etree.SubElement(catalogue, "competence", name=spec.name, owner=spec.owner)
        if spec.description:
            etree.SubElement(element, "description").text = spec.description
        for path in sorted(spec.inputs):
            etree.SubElement(element, "in").text = path
        for path in sorted(spec.outputs):
            etree.SubElement(element, "out").text = path

    problem = etree.SubElement(root, "problem")
    if graph.objective:
        etree.SubElement(problem, "objective").text = graph.objective
    for path in sorted(graph.design_variables):
        etree.SubElement(problem, "designVariable").text = path
    for path in sorted(graph.constraint_outputs):
        etree.SubElement(problem, "constraint").text = path

    steps = etree.SubElement(root, "steps")
    for name in plan.ordered_steps:
        etree.SubElement(steps, "step", name=name)
    loop = etree.SubElement(root, "mdaLoop")
    for name in plan.mda_loop:
        etree.SubElement(loop, "step", name=name)
    convergence = etree.SubElement(root, "convergence", tolerance=repr(plan.tolerance),
                                   maxIterations=str(plan.max_iterations))
    for path in plan.convergence_vars:
        etree.SubElement(convergence, "variable").text = path
    feedback = etree.SubElement(root, "feedback")
    for source, target in plan.feedback_edges:
        etree.SubElement(feedback, "edge", to=target, **{"from": source})
    etree.SubElement(root, "wrapper", kind=plan.wrapper)
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8").decode("utf-8")


def _schema() -> etree.XMLSchema:
    return etree.XMLSchema(etree.parse(str(WORKFLOW_SCHEMA_FILE)))


def validate_workflow(xml_text: Union[str, bytes]) -> etree._Element:
    """Schema-check workflow XML and return its root element."""
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    try:
        document = etree.fromstring(xml_text, etree.XMLParser(remove_comments=True))
    except etree.XMLSyntaxError as exc:
        raise WorkflowSchemaError(f"malformed XML: {exc.msg}", "/") from None
    schema = _schema()
    if not schema.validate(document):
        error = schema.error_log.last_error
        raise WorkflowSchemaError(error.message, error.path or "/")
    return document


def import_workflow(xml_text: Union[str, bytes]) -> Tuple[WorkflowPlan, ProblemGraph]:
    root = validate_workflow(xml_text)
    tree = root.getroottree()

    specs = []
    for element in root.iterfind("competences/competence"):
        try:
            specs.append(parse_competence(etree.tostring(element), tree.getpath(element)))
        except CompetenceError as exc:
            raise WorkflowSchemaError(str(exc), tree.getpath(element)) from None
    names = {s.name for s in specs}

    def checked_steps(xpath: str, allowed: Set[str]) -> List[str]:
        result = []
        for element in root.iterfind(xpath):
            if element.get("name") not in allowed:
                raise WorkflowSchemaError(f"step references unknown competence {element.get('name')!r}",
                                          tree.getpath(element))
            result.append(element.get("name"))
        return result

    ordered = checked_steps("steps/step", names)
    loop = checked_steps("mdaLoop/step", set(ordered))
    feedback = []
    for element in root.iterfind("feedback/edge"):
        if element.get("to") not in names:
            raise WorkflowSchemaError(f"feedback edge targets unknown competence {element.get('to')!r}",
                                      tree.getpath(element))
        feedback.append((_canonical(element.get("from")), element.get("to")))

    convergence = root.find("convergence")
    problem = root.find("problem")
    try:
        plan = WorkflowPlan(
            ordered_steps=tuple(ordered),
            mda_loop=tuple(loop),
            convergence_vars=tuple(_canonical(v.text or "") for v in convergence.iterfind("variable")),
            tolerance=float(convergence.get("tolerance")),
            max_iterations=int(convergence.get("maxIterations")),
            wrapper=root.find("wrapper").get("kind"),
            feedback_edges=tuple(feedback),
            pattern=root.get("pattern"),
        )
        rcg = build_rcg(specs)
    except (DomainError, GraphError, CompetenceError) as exc:
        raise WorkflowSchemaError(str(exc), tree.getpath(root)) from None

    graph = ProblemGraph(
        stage="ARCHITECTED",
        competences=rcg.competences,
        parameters=rcg.parameters | {_canonical(p.text or "") for p in problem},
        edges=rcg.edges,
        objective=_canonical(problem.findtext("objective")) if problem.find("objective") is not None else None,
        design_variables=frozenset(_canonical(p.text or "") for p in problem.iterfind("designVariable")),
        constraint_outputs=frozenset(_canonical(p.text or "") for p in problem.iterfind("constraint")),
        feedback_edges=frozenset(plan.feedback_edges),
    )
    return plan, graph


# ---------------------------------------------------------------------------
# Static visual exports
# ---------------------------------------------------------------------------

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: ProblemGraph) -> str:
    """Graphviz digraph: competences boxed, parameters elliptical, feedback dashed."""
    lines = [f"digraph {graph.stage} {{", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for spec in graph.competences:
        lines.append(f"  {_quote(spec.name)} [shape=box, style=filled, fillcolor=lightgrey];")
    for path in sorted(graph.parameters):
        label = path.rsplit("/", 1)[-1]
        lines.append(f"  {_quote(path)} [shape=ellipse, label={_quote(label)}, tooltip={_quote(path)}];")
    for source, target in sorted(graph.edges):
        style = " [style=dashed, color=red]" if (source, target) in graph.feedback_edges else ""
        lines.append(f"  {_quote(source)} -> {_quote(target)}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_matrix(graph: ProblemGraph, order: Optional[Sequence[str]] = None) -> str:
    """Design structure matrix: competences on the diagonal, couplings off it.

    Cell (i, j) counts the parameters produced by competence j and consumed
    by competence i, so a feed-forward chain fills the lower triangle.
    """
    names = list(order) if order else list(graph.names)
    couplings = graph.couplings()
    width = max([len(n) for n in names] + [3]) + 2
    lines = []
    legend = []
    for i, consumer in enumerate(names):
        cells = []
        for j, producer in enumerate(names):
            if i == j:
                cells.append(f"[{consumer}]".center(width))
                continue
            carried = couplings.get((producer, consumer), ())
            cells.append((str(len(carried)) if carried else ".").center(width))
            if carried:
                legend.append(f"({i},{j}) {consumer} <- {producer}: {', '.join(carried)}")
        lines.append("".join(cells).rstrip())
    if legend:
        lines.append("")
        lines.extend(legend)
    return "\n".join(lines) + "\n"
