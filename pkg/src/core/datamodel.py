"""Hierarchical parameter tree exchanged between competences.

The tree is the single exchange currency of the toolchain: every competence
reads one and writes one. On disk it is an XML file whose element nesting
gives the parameter path, whose leaves carry the values and whose optional
``unit`` attribute carries an opaque unit tag.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

from lxml import etree

from core.errors import (
    DomainError,
    MdaoError,
    MergeConflictError,
    PathNotFoundError,
    StructuralError,
    TreeParseError,
)
from mdao_types import ValidationResult
from utils.constants import PARAMETER_DICTIONARY, TREE_ROOT

TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
INTEGER_RE = re.compile(r"[+-]?\d+\Z")
REAL_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?\Z")

KINDS = ("real", "integer", "text", "boolean")
MERGE_POLICIES = ("strict", "overwrite")


@dataclass(frozen=True, order=True)
class ParameterPath:
    """Ordered name tokens, canonically written with '/' separators."""
    segments: Tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise DomainError("parameter path must not be empty")
        for token in self.segments:
            if not TOKEN_RE.match(token):
                raise DomainError(f"invalid path token {token!r} in {'/'.join(self.segments)!r}")

    @classmethod
    def parse(cls, text: Union[str, "ParameterPath"]) -> "ParameterPath":
        if isinstance(text, ParameterPath):
            return text
        return cls(tuple(text.strip().strip("/").split("/")))

    def __str__(self) -> str:
        return "/".join(self.segments)

    def is_prefix_of(self, other: "ParameterPath") -> bool:
        """True when ``other`` lies strictly below this path."""
        n = len(self.segments)
        return len(other.segments) > n and other.segments[:n] == self.segments

    def covers(self, other: "ParameterPath") -> bool:
        return self == other or self.is_prefix_of(other)


PathLike = Union[str, ParameterPath]


@dataclass(frozen=True)
class ParameterValue:
    kind: str
    payload: object
    unit: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown value kind {self.kind!r}")
        if self.kind == "real":
            if isinstance(self.payload, bool) or not isinstance(self.payload, (int, float)):
                raise DomainError(f"real payload must be numeric, got {self.payload!r}")
            if not math.isfinite(self.payload):
                raise DomainError(f"real payload must be finite, got {self.payload!r}")
            object.__setattr__(self, "payload", float(self.payload))
        elif self.kind == "integer":
            if isinstance(self.payload, bool) or not isinstance(self.payload, int):
                raise DomainError(f"integer payload must be int, got {self.payload!r}")
        elif self.kind == "boolean":
            if not isinstance(self.payload, bool):
                raise DomainError(f"boolean payload must be bool, got {self.payload!r}")
        elif not isinstance(self.payload, str):
            raise DomainError(f"text payload must be str, got {self.payload!r}")

    @classmethod
    def real(cls, value: float, unit: Optional[str] = None) -> "ParameterValue":
        return cls("real", float(value), unit)

    @classmethod
    def boolean(cls, value: bool) -> "ParameterValue":
        return cls("boolean", bool(value))

    def as_float(self) -> float:
        if self.kind not in ("real", "integer"):
            raise DomainError(f"{self.kind} value {self.payload!r} is not numeric")
        return float(self.payload)


@dataclass(frozen=True)
class ParameterTree:
    """Immutable parameter store; every mutating operation returns a new tree."""
    root: str = TREE_ROOT
    entries: Dict[ParameterPath, ParameterValue] = field(default_factory=dict)
    version: int = 0
    provenance: Dict[ParameterPath, str] = field(default_factory=dict)

    def __post_init__(self):
        if not TOKEN_RE.match(self.root):
            raise DomainError(f"invalid root name {self.root!r}")
        if isinstance(self.version, bool) or not isinstance(self.version, int) or self.version < 0:
            raise DomainError(f"version must be a non-negative integer, got {self.version!r}")
        entries = dict(self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "provenance", {p: t for p, t in self.provenance.items() if p in entries})
        # A prefix sorts directly before its extensions, so adjacent pairs suffice.
        ordered = sorted(entries)
        for previous, current in zip(ordered, ordered[1:]):
            if previous.is_prefix_of(current):
                raise StructuralError("path is both a leaf and a branch", str(previous))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, path: PathLike) -> bool:
        return self.resolve(path) in self.entries

    def __iter__(self) -> Iterator[ParameterPath]:
        return iter(sorted(self.entries))

    def resolve(self, path: PathLike) -> ParameterPath:
        """Canonical path: relative paths get the root token prepended."""
        path = ParameterPath.parse(path)
        if path.segments[0] != self.root:
            path = ParameterPath((self.root,) + path.segments)
        return path

    def get(self, path: PathLike) -> ParameterValue:
        return get_value(self, path)

    def real(self, path: PathLike) -> float:
        return get_value(self, path).as_float()

    def with_value(self, path: PathLike, value: ParameterValue, source: Optional[str] = None) -> "ParameterTree":
        return set_value(self, path, value, source)

    def with_version(self, version: int) -> "ParameterTree":
        return ParameterTree(self.root, self.entries, version, self.provenance)

    def nearest_ancestor(self, path: PathLike) -> Optional[str]:
        path = self.resolve(path)
        for depth in range(len(path.segments) - 1, 0, -1):
            prefix = ParameterPath(path.segments[:depth])
            if any(prefix.covers(stored) for stored in self.entries):
                return str(prefix)
        return None


def _infer_kind(text: str) -> str:
    if text in ("true", "false"):
        return "boolean"
    if INTEGER_RE.match(text):
        return "integer"
    if REAL_RE.match(text):
        return "real"
    return "text"


def _decode(raw: str, kind: str, where: str) -> object:
    stripped = raw.strip()
    try:
        if kind == "boolean":
            if stripped not in ("true", "false"):
                raise ValueError(stripped)
            return stripped == "true"
        if kind == "integer":
            return int(stripped)
        if kind == "real":
            return float(stripped)
    except ValueError:
        raise StructuralError(f"cannot read {raw!r} as {kind}", where) from None
    return raw


def _encode(value: ParameterValue) -> str:
    if value.kind == "real":
        return repr(value.payload)
    if value.kind == "boolean":
        return "true" if value.payload else "false"
    return str(value.payload)


def parse_tree(xml_text: Union[str, bytes]) -> ParameterTree:
    """Parse exchange XML into a tree.

    Every leaf element becomes one entry; nesting becomes the path and the
    root attribute ``version`` (default 0) becomes the tree version.
    """
    if isinstance(xml_text, str):
        xml_text = xml_text.encode("utf-8")
    parser = etree.XMLParser(remove_comments=True, remove_pis=True, resolve_entities=False)
    try:
        root = etree.fromstring(xml_text, parser)
    except etree.XMLSyntaxError as exc:
        line, column = getattr(exc, "position", (exc.lineno, exc.offset))
        raise TreeParseError(f"malformed XML: {exc.msg}", line, column) from None

    if not isinstance(root.tag, str) or not TOKEN_RE.match(root.tag):
        raise StructuralError("invalid root element name", str(root.tag))
    if (root.text or "").strip():
        raise StructuralError("root element carries text", root.tag)
    version_text = root.get("version", "0")
    if not INTEGER_RE.match(version_text) or int(version_text) < 0:
        raise StructuralError(f"version must be a non-negative integer, got {version_text!r}", root.tag)

    entries: Dict[ParameterPath, ParameterValue] = {}
    provenance: Dict[ParameterPath, str] = {}
    stack = [(root, (root.tag,))]
    while stack:
        element, segments = stack.pop()
        where = "/".join(segments)
        children = list(element)
        for child in children:
            if not isinstance(child.tag, str) or not TOKEN_RE.match(child.tag):
                raise StructuralError(f"invalid element name {child.tag!r}", where)
            if (child.tail or "").strip():
                raise StructuralError("mixed content (text between child elements)", where)
        if element is root:
            stack.extend((child, segments + (child.tag,)) for child in reversed(children))
            continue
        if children:
            if (element.text or "").strip():
                raise StructuralError("mixed content (text plus child elements)", where)
            stack.extend((child, segments + (child.tag,)) for child in reversed(children))
            continue
        raw = element.text or ""
        kind = element.get("kind") or _infer_kind(raw.strip())
        if kind not in KINDS:
            raise StructuralError(f"unknown kind attribute {kind!r}", where)
        path = ParameterPath(segments)
        if path in entries:
            raise StructuralError("duplicate leaf", where)
        try:
            entries[path] = ParameterValue(kind, _decode(raw, kind, where), element.get("unit"))
        except DomainError as exc:
            raise StructuralError(str(exc), where) from None
        if element.get("source"):
            provenance[path] = element.get("source")

    try:
        return ParameterTree(root.tag, entries, int(version_text), provenance)
    except StructuralError:
        raise
    except DomainError as exc:
        raise StructuralError(str(exc), root.tag) from None


def serialize_tree(tree: ParameterTree) -> str:
    """Deterministic XML text; siblings appear in lexicographic order."""
    root = etree.Element(tree.root, version=str(tree.version))
    branches: Dict[Tuple[str, ...], etree._Element] = {(tree.root,): root}
    for path in sorted(tree.entries):
        value = tree.entries[path]
        segments = path.segments
        parent = root
        for depth in range(2, len(segments)):
            key = segments[:depth]
            if key not in branches:
                branches[key] = etree.SubElement(parent, segments[depth - 1])
            parent = branches[key]
        leaf = etree.SubElement(parent, segments[-1])
        text = _encode(value)
        if value.unit is not None:
            leaf.set("unit", value.unit)
        if _infer_kind(text.strip()) != value.kind or (value.kind == "text" and text != text.strip()):
            leaf.set("kind", value.kind)
        if path in tree.provenance:
            leaf.set("source", tree.provenance[path])
        if text:
            leaf.text = text
    return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8").decode("utf-8")


def get_value(tree: ParameterTree, path: PathLike) -> ParameterValue:
    resolved = tree.resolve(path)
    try:
        return tree.entries[resolved]
    except KeyError:
        raise PathNotFoundError(str(resolved), tree.nearest_ancestor(resolved)) from None


def set_value(tree: ParameterTree, path: PathLike, value: ParameterValue,
              source: Optional[str] = None) -> ParameterTree:
    """Return a new tree with ``path`` set; the version is left untouched."""
    resolved = tree.resolve(path)
    for stored in tree.entries:
        if stored.is_prefix_of(resolved):
            raise StructuralError("cannot store below an existing leaf", str(stored))
        if resolved.is_prefix_of(stored):
            raise StructuralError("cannot replace a subtree with a leaf", str(resolved))
    entries = dict(tree.entries)
    entries[resolved] = value
    provenance = dict(tree.provenance)
    if source is not None:
        provenance[resolved] = source
    return ParameterTree(tree.root, entries, tree.version, provenance)


def merge_trees(base: ParameterTree, update: ParameterTree, policy: str = "overwrite",
                tool: Optional[str] = None) -> ParameterTree:
    """Union of two trees.

    Args:
        base: Tree being extended.
        update: Tree whose entries are merged in.
        policy: ``overwrite`` lets ``update`` win on shared paths; ``strict``
            rejects shared paths holding different values.
        tool: Name recorded as provenance of entries taken from ``update``.

    Returns:
        The merged tree, versioned with the larger of the two versions.
    """
    if policy not in MERGE_POLICIES:
        raise DomainError(f"unknown merge policy {policy!r}; expected one of {MERGE_POLICIES}")
    if base.root != update.root:
        raise DomainError(f"root names differ: {base.root!r} vs {update.root!r}")

    conflicts = [
        (str(path), base.entries[path], value)
        for path, value in sorted(update.entries.items())
        if path in base.entries and base.entries[path] != value
    ]
    if conflicts and policy == "strict":
        raise MergeConflictError(conflicts)

    entries = dict(base.entries)
    provenance = dict(base.provenance)
    for path, value in update.entries.items():
        entries[path] = value
        source = tool or update.provenance.get(path)
        if source is not None:
            provenance[path] = source
    return ParameterTree(base.root, entries, max(base.version, update.version), provenance)


class TreeDiff(NamedTuple):
    added: List[str]
    removed: List[str]
    changed: List[str]

    @property
    def touched(self) -> List[str]:
        return sorted(self.added + self.removed + self.changed)


def diff_trees(old: ParameterTree, new: ParameterTree) -> TreeDiff:
    """Paths added, removed or holding a different value between two trees."""
    added = sorted(str(p) for p in new.entries.keys() - old.entries.keys())
    removed = sorted(str(p) for p in old.entries.keys() - new.entries.keys())
    changed = sorted(
        str(p) for p in old.entries.keys() & new.entries.keys() if old.entries[p] != new.entries[p]
    )
    return TreeDiff(added, removed, changed)


def subset(tree: ParameterTree, paths: Iterable[PathLike]) -> ParameterTree:
    """Entries of ``tree`` lying at or below any of ``paths``."""
    wanted = [tree.resolve(p) for p in paths]
    entries = {p: v for p, v in tree.entries.items() if any(w.covers(p) for w in wanted)}
    return ParameterTree(tree.root, entries, tree.version, tree.provenance)


def real_entries(tree: ParameterTree) -> Dict[str, float]:
    return {str(p): v.payload for p, v in sorted(tree.entries.items()) if v.kind == "real"}


def load_tree(path: Union[str, Path]) -> ParameterTree:
    return parse_tree(Path(path).read_bytes())


def save_tree(tree: ParameterTree, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_tree(tree), encoding="utf-8")
    return path


def validate_file(path: Union[str, Path], dictionary: Optional[Dict[str, str]] = None) -> ValidationResult:
    """Parse an exchange file and list leaves outside the parameter dictionary."""
    dictionary = PARAMETER_DICTIONARY if dictionary is None else dictionary
    result = ValidationResult(file=str(path), entries=0, version=0, unknown_paths=[], error=None)
    try:
        tree = load_tree(path)
    except (MdaoError, OSError) as exc:
        result["error"] = str(exc)
        return result
    result["entries"] = len(tree)
    result["version"] = tree.version
    result["unknown_paths"] = [str(p) for p in tree if str(p) not in dictionary]
    return result


def merge_files(paths: Iterable[Union[str, Path]]) -> ParameterTree:
    """Overwrite-merge exchange files in order; leaves without a source are credited to their file stem."""
    merged = ParameterTree()
    for path in paths:
        tree = load_tree(path)
        provenance = {p: tree.provenance.get(p, Path(path).stem) for p in tree.entries}
        merged = merge_trees(merged, ParameterTree(tree.root, tree.entries, tree.version, provenance))
    return merged


def render_hierarchy(tree: ParameterTree) -> str:
    """Indented listing: branches end in '/', leaves show value, unit and source tool."""
    lines = [f"{tree.root} (version {tree.version})"]
    opened = set()
    for path in tree:
        segments = path.segments
        for depth in range(2, len(segments)):
            if segments[:depth] not in opened:
                opened.add(segments[:depth])
                lines.append(f"{'  ' * (depth - 1)}{segments[depth - 1]}/")
        value = tree.entries[path]
        unit = f" [{value.unit}]" if value.unit else ""
        source = f"  <- {tree.provenance[path]}" if path in tree.provenance else ""
        lines.append(f"{'  ' * (len(segments) - 1)}{segments[-1]} = {_encode(value)}{unit}{source}")
    return "\n".join(lines) + "\n"
