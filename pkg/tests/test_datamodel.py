from functools import reduce

import numpy as np
import pytest

from core.datamodel import (
    ParameterPath,
    ParameterTree,
    ParameterValue,
    diff_trees,
    get_value,
    load_tree,
    merge_files,
    merge_trees,
    parse_tree,
    render_hierarchy,
    serialize_tree,
    set_value,
    subset,
    validate_file,
)
from core.errors import (
    DomainError,
    MergeConflictError,
    PathNotFoundError,
    StructuralError,
    TreeParseError,
)
from utils.constants import DEFAULT_BASELINE_FILE, DATA_DIR, P_FUSELAGE_LENGTH


def test_parse_simple_tree():
    tree = parse_tree('<cpacs version="3"><a><b unit="m">2.5</b></a></cpacs>')
    assert tree.version == 3
    assert tree.get("a/b") == ParameterValue("real", 2.5, "m")
    assert len(tree) == 1


def test_parse_empty_root():
    tree = parse_tree("<cpacs/>")
    assert len(tree) == 0
    assert tree.version == 0


def test_baseline_wing_area(baseline):
    value = baseline.get("cpacs/toolspecific/optimizer/wingArea")
    assert value.payload == 113.0
    assert value.unit == "m2"


def test_inferred_kinds():
    tree = parse_tree("<cpacs><flag>true</flag><count>3</count><name>jet</name><x>1e3</x></cpacs>")
    assert tree.get("flag").kind == "boolean"
    assert tree.get("count").kind == "integer"
    assert tree.get("name").kind == "text"
    assert tree.get("x") == ParameterValue.real(1000.0)


def test_explicit_kind_overrides_inference():
    tree = parse_tree('<cpacs><code kind="text">42</code></cpacs>')
    assert tree.get("code") == ParameterValue("text", "42")
    assert 'kind="text"' in serialize_tree(tree)


def test_malformed_xml_reports_position():
    with pytest.raises(TreeParseError) as info:
        parse_tree("<cpacs><a>1</cpacs>")
    assert info.value.line >= 1


def test_mixed_content_rejected():
    with pytest.raises(StructuralError):
        parse_tree("<cpacs><a>text<b>1</b></a></cpacs>")


def test_duplicate_leaf_rejected():
    with pytest.raises(StructuralError):
        parse_tree("<cpacs><a>1</a><a>2</a></cpacs>")


def test_non_finite_real_rejected():
    with pytest.raises(DomainError):
        ParameterValue.real(float("nan"))


def test_invalid_path_token():
    with pytest.raises(DomainError):
        ParameterPath.parse("cpacs/1wing")


def test_serialize_sorts_siblings():
    tree = parse_tree("<cpacs><a><c>2</c><b>1</b></a></cpacs>")
    text = serialize_tree(tree)
    assert text.index("<b>") < text.index("<c>")
    assert serialize_tree(parse_tree(text)) == text


def test_serialize_empty_tree():
    assert '<cpacs version="0"/>' in serialize_tree(ParameterTree())


def test_round_trip_keeps_units_version_and_provenance():
    tree = parse_tree('<cpacs version="7"><a unit="kg" source="sizing">1.5</a><b>false</b></cpacs>')
    again = parse_tree(serialize_tree(tree))
    assert again == tree
    assert again.provenance[again.resolve("a")] == "sizing"


def test_baseline_serialization_is_byte_stable():
    once = serialize_tree(load_tree(DEFAULT_BASELINE_FILE))
    twice = serialize_tree(parse_tree(once))
    assert once == twice


def test_get_fuselage_length(baseline):
    assert baseline.real("cpacs/toolspecific/calibration/baseline/fuselageLength") == 38.0


def test_set_then_get():
    tree = set_value(ParameterTree(), P_FUSELAGE_LENGTH, ParameterValue.real(36.0, "m"))
    assert get_value(tree, P_FUSELAGE_LENGTH) == ParameterValue.real(36.0, "m")
    assert tree.version == 0


def test_missing_path_reports_nearest_ancestor():
    tree = parse_tree("<cpacs><a><b>1</b></a></cpacs>")
    with pytest.raises(PathNotFoundError) as info:
        tree.get("a/b/zzz")
    assert info.value.ancestor == "cpacs/a/b"


def test_set_below_leaf_is_structural_error():
    tree = parse_tree("<cpacs><a>1</a></cpacs>")
    with pytest.raises(StructuralError):
        tree.with_value("a/b", ParameterValue.real(1.0))
    with pytest.raises(StructuralError):
        parse_tree("<cpacs><a><b>1</b></a></cpacs>").with_value("a", ParameterValue.real(1.0))


def test_disjoint_merge_sizes_add_up():
    a = parse_tree("<cpacs><a>1</a><b>2</b></cpacs>")
    b = parse_tree('<cpacs version="4"><c>3</c></cpacs>')
    merged = merge_trees(a, b, "strict")
    assert len(merged) == len(a) + len(b)
    assert merged.version == 4


def test_strict_merge_conflict():
    a = parse_tree("<cpacs><a><b>1</b></a></cpacs>")
    b = parse_tree("<cpacs><a><b>2</b></a></cpacs>")
    with pytest.raises(MergeConflictError) as info:
        merge_trees(a, b, "strict")
    assert "cpacs/a/b" in str(info.value)


def test_overwrite_merge_records_tool():
    a = parse_tree("<cpacs><a>1</a></cpacs>")
    b = parse_tree("<cpacs><a>2</a></cpacs>")
    merged = merge_trees(a, b, "overwrite", tool="sizing")
    assert merged.get("a").payload == 2
    assert merged.provenance[merged.resolve("a")] == "sizing"


def test_merging_the_five_stubs_covers_every_competence_output(case_plan):
    stubs = [load_tree(path) for path in sorted((DATA_DIR / "stubs").glob("*.xml"))]
    assert len(stubs) == 5
    merged = reduce(lambda acc, tree: merge_trees(acc, tree, "strict"), stubs)
    _, graph = case_plan
    produced = set().union(*(spec.outputs for spec in graph.competences))
    assert {str(p) for p in merged} == produced


def test_diff_and_subset():
    old = parse_tree("<cpacs><a>1</a><b>2</b><c><d>3</d></c></cpacs>")
    new = parse_tree("<cpacs><a>1</a><b>5</b><e>4</e></cpacs>")
    diff = diff_trees(old, new)
    assert diff.added == ["cpacs/e"]
    assert diff.removed == ["cpacs/c/d"]
    assert diff.changed == ["cpacs/b"]
    assert [str(p) for p in subset(old, ["c"])] == ["cpacs/c/d"]


def test_validate_shipped_baseline():
    result = validate_file(DEFAULT_BASELINE_FILE)
    assert result["error"] is None
    assert result["unknown_paths"] == []
    assert result["entries"] > 0


def test_validate_reports_unknown_paths_and_errors(tmp_path):
    odd = tmp_path / "odd.xml"
    odd.write_text("<cpacs><vehicle><paint>red</paint></vehicle></cpacs>")
    assert validate_file(odd)["unknown_paths"] == ["cpacs/vehicle/paint"]
    broken = tmp_path / "broken.xml"
    broken.write_text("<cpacs>")
    assert validate_file(broken)["error"]


WORDS = ("wing", "tail", "A320", "42", "true", " padded ")


def random_leaves(rng, count, prefix="l"):
    """Random leaves below two levels of branches; leaf names never repeat."""
    entries, provenance = {}, {}
    for i in range(count):
        branch = ("cpacs", f"b{rng.integers(3)}") + (("sub",) if rng.random() < 0.5 else ())
        path = ParameterPath(branch + (f"{prefix}{i}",))
        kind = ("real", "integer", "boolean", "text")[rng.integers(4)]
        if kind == "real":
            value = ParameterValue.real(float(rng.normal() * 10.0 ** rng.integers(-4, 7)),
                                        ("m", "kg", None)[rng.integers(3)])
        elif kind == "integer":
            value = ParameterValue("integer", int(rng.integers(-1000, 1000)))
        elif kind == "boolean":
            value = ParameterValue.boolean(bool(rng.random() < 0.5))
        else:
            value = ParameterValue("text", WORDS[rng.integers(len(WORDS))])
        entries[path] = value
        if rng.random() < 0.5:
            provenance[path] = ("sizing", "sps", "propulsion")[rng.integers(3)]
    return entries, provenance


def random_tree(rng, count=20, prefix="l"):
    entries, provenance = random_leaves(rng, count, prefix)
    return ParameterTree("cpacs", entries, int(rng.integers(0, 100)), provenance)


@pytest.mark.parametrize("seed", range(10))
def test_generated_trees_survive_serialization(seed):
    tree = random_tree(np.random.default_rng(seed))
    text = serialize_tree(tree)
    assert parse_tree(text) == tree
    assert serialize_tree(parse_tree(text)) == text


@pytest.mark.parametrize("seed", range(5))
def test_disjoint_merge_is_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_tree(rng, 8, prefix) for prefix in ("la", "lb", "lc"))
    for policy in ("strict", "overwrite"):
        left = merge_trees(merge_trees(a, b, policy), c, policy)
        right = merge_trees(a, merge_trees(b, c, policy), policy)
        assert left == right
        assert len(left) == len(a) + len(b) + len(c)


@pytest.mark.parametrize("seed", range(5))
def test_overwrite_merge_with_itself_is_identity(seed):
    tree = random_tree(np.random.default_rng(seed))
    assert merge_trees(tree, tree, "overwrite") == tree
    assert merge_trees(tree, tree, "strict") == tree


def test_render_hierarchy():
    tree = parse_tree('<cpacs version="2"><a><b unit="m" source="sizing">1.5</b><c>true</c></a><d>x</d></cpacs>')
    assert render_hierarchy(tree) == (
        "cpacs (version 2)\n"
        "  a/\n"
        "    b = 1.5 [m]  <- sizing\n"
        "    c = true\n"
        "  d = x\n"
    )


def test_merge_files_credits_unattributed_leaves_to_their_file():
    merged = merge_files([DEFAULT_BASELINE_FILE, DATA_DIR / "stubs" / "sizing.xml"])
    assert merged.provenance[merged.resolve("toolspecific/optimizer/wingArea")] == "baseline"
    assert merged.provenance[merged.resolve("vehicle/geometry/wing/area")] == "sizing"
    assert merged.version == 1
    listing = render_hierarchy(merged)
    assert "    optimizer/\n" in listing
    assert "      wingArea = 113.0 [m2]  <- baseline\n" in listing
