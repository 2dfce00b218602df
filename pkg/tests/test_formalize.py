import itertools
import logging

import pytest

from core.case_study import case_study_fpg, case_study_rcg
from core.errors import CollisionError, CompetenceError, GraphError, WorkflowSchemaError
from core.formalize import (
    CompetenceSpec,
    apply_architecture,
    build_fpg,
    build_rcg,
    competence_files,
    export_dot,
    export_matrix,
    export_workflow,
    import_workflow,
    load_competences,
    parse_choices,
    parse_competence,
    validate_workflow,
)
from utils.constants import DEFAULT_COMPETENCE_DIR, P_EMPTY_MASS, P_FUEL_SAVED, P_MTOW

LOOP = ("sizing", "sps", "aerostructure", "propulsion")


def spec(name, inputs=(), outputs=()):
    return CompetenceSpec(name, "test", frozenset(inputs), frozenset(outputs))


def test_shipped_competences_load_with_distinct_names():
    specs = load_competences(competence_files(DEFAULT_COMPETENCE_DIR))
    assert sorted(s.name for s in specs) == ["aerostructure", "calibration", "propulsion", "sizing", "sps"]


def test_input_equal_to_output_rejected():
    with pytest.raises(CompetenceError):
        spec("loop", ["cpacs/x"], ["cpacs/x"])


def test_competence_without_outputs_rejected():
    with pytest.raises(CompetenceError):
        parse_competence('<competence name="idle"><in>cpacs/a</in></competence>')


def test_unknown_path_is_a_warning(tmp_path, caplog):
    file = tmp_path / "paint.xml"
    file.write_text('<competence name="paint" owner="x"><out>cpacs/vehicle/paint</out></competence>')
    with caplog.at_level(logging.WARNING):
        specs = load_competences([file])
    assert specs[0].name == "paint"
    assert "cpacs/vehicle/paint" in caplog.text


def test_sizing_feeds_sps_in_rcg():
    rcg = case_study_rcg()
    assert rcg.stage == "RCG"
    carried = rcg.couplings()[("sizing", "sps")]
    assert "cpacs/vehicle/geometry/wing/area" in carried
    assert rcg.collisions == {}


def test_single_competence_has_no_couplings():
    rcg = build_rcg([spec("solo", ["cpacs/a"], ["cpacs/b"])])
    assert rcg.names == ("solo",)
    assert rcg.couplings() == {}


def test_two_producers_collide():
    rcg = build_rcg([spec("a", outputs=["cpacs/vehicle/weights/mtow"]),
                     spec("b", outputs=["cpacs/vehicle/weights/mtow"])])
    assert rcg.collisions == {"cpacs/vehicle/weights/mtow": ("a", "b")}
    with pytest.raises(CollisionError) as info:
        build_fpg(rcg, "cpacs/vehicle/weights/mtow")
    assert "a, b" in str(info.value)
    fpg = build_fpg(rcg, "cpacs/vehicle/weights/mtow", collision_choices={"cpacs/vehicle/weights/mtow": "b"})
    assert fpg.producers("cpacs/vehicle/weights/mtow") == ("b",)


def test_parse_choices():
    choices = parse_choices('<choices><choice path="cpacs/a" competence="x"/></choices>')
    assert choices == {"cpacs/a": "x"}


def test_case_study_fpg_keeps_all_five():
    fpg = case_study_fpg()
    assert fpg.stage == "FPG"
    assert len(fpg.names) == 5
    assert fpg.objective == P_FUEL_SAVED


def test_dangling_competence_is_pruned():
    rcg = build_rcg([spec("a", ["cpacs/x"], ["cpacs/y"]), spec("dangling", ["cpacs/x"], ["cpacs/unused"])])
    fpg = build_fpg(rcg, "cpacs/y", ["cpacs/x"])
    assert fpg.names == ("a",)


def test_unproduced_objective_is_an_error():
    rcg = build_rcg([spec("a", ["cpacs/x"], ["cpacs/y"])])
    with pytest.raises(GraphError):
        build_fpg(rcg, "cpacs/z")


def test_case_study_architecture(case_plan):
    plan, graph = case_plan
    assert plan.mda_loop == LOOP
    assert plan.ordered_steps == ("calibration",) + LOOP
    assert {P_FUEL_SAVED, P_EMPTY_MASS} <= set(plan.convergence_vars)
    assert plan.tolerance == 1e-6
    assert plan.max_iterations == 50
    assert graph.stage == "ARCHITECTED"
    assert set(graph.feedback_edges) <= set(graph.edges)


def test_feed_forward_chain_has_no_loop():
    rcg = build_rcg([spec("a", ["cpacs/x"], ["cpacs/y"]), spec("b", ["cpacs/y"], ["cpacs/z"])])
    plan = apply_architecture(build_fpg(rcg, "cpacs/z", ["cpacs/x"]), tolerance=1e-4, max_iterations=7)
    assert plan.mda_loop == ()
    assert plan.ordered_steps == ("a", "b")
    assert (plan.tolerance, plan.max_iterations) == (1e-4, 7)


def test_architecture_needs_an_fpg():
    with pytest.raises(GraphError):
        apply_architecture(case_study_rcg())


def test_workflow_round_trip(case_plan):
    plan, graph = case_plan
    text = export_workflow(plan, graph)
    validate_workflow(text)
    imported_plan, imported_graph = import_workflow(text)
    assert imported_plan == plan
    assert imported_graph.names == graph.names
    assert imported_graph.edges == graph.edges
    assert imported_graph.feedback_edges == graph.feedback_edges
    assert imported_graph.objective == graph.objective


def test_unknown_step_rejected_on_import(case_plan):
    plan, graph = case_plan
    text = export_workflow(plan, graph).replace('<step name="propulsion"/>', '<step name="ghost"/>', 1)
    with pytest.raises(WorkflowSchemaError) as info:
        import_workflow(text)
    assert "ghost" in str(info.value)


def test_schema_violation_rejected():
    with pytest.raises(WorkflowSchemaError):
        import_workflow('<workflow pattern="converged-mda-gs"/>')


def test_dot_export_has_five_boxes():
    dot = export_dot(case_study_rcg())
    assert dot.count("shape=box") == 5
    assert dot.startswith("digraph RCG {")


def test_dot_of_architected_graph_marks_feedback(case_plan):
    _, graph = case_plan
    assert "style=dashed" in export_dot(graph)


def test_matrix_of_feed_forward_chain():
    rcg = build_rcg([spec("a", ["cpacs/x"], ["cpacs/y"]), spec("b", ["cpacs/y"], ["cpacs/z"])])
    lines = export_matrix(rcg).splitlines()
    assert lines[0].split() == ["[a]", "."]
    assert lines[1].split() == ["1", "[b]"]
    assert "(1,0) b <- a: cpacs/y" in lines


def test_constraint_output_kept(case_plan):
    _, graph = case_plan
    assert graph.constraint_outputs == frozenset({P_MTOW})


def two_cycle_specs():
    """sizing <-> loads <-> structure: a second cycle that avoids the loop head."""
    return [
        spec("sizing", ["cpacs/c"], ["cpacs/a"]),
        spec("loads", ["cpacs/a", "cpacs/d"], ["cpacs/c", "cpacs/e"]),
        spec("structure", ["cpacs/e"], ["cpacs/d", "cpacs/x/obj"]),
    ]


def test_cycle_avoiding_loop_head_is_cut():
    fpg = build_fpg(build_rcg(two_cycle_specs()), "cpacs/x/obj")
    plan = apply_architecture(fpg)
    assert plan.mda_loop == ("sizing", "loads", "structure")
    assert plan.ordered_steps == plan.mda_loop
    assert plan.feedback_edges == (("cpacs/c", "sizing"), ("cpacs/d", "loads"))
    assert plan.convergence_vars == ("cpacs/c", "cpacs/d")


def test_cycle_avoiding_loop_head_survives_workflow_round_trip():
    fpg = build_fpg(build_rcg(two_cycle_specs()), "cpacs/x/obj")
    plan = apply_architecture(fpg)
    imported_plan, imported_graph = import_workflow(export_workflow(plan, fpg))
    assert imported_plan == plan
    assert imported_graph.feedback_edges == frozenset(plan.feedback_edges)


def test_rcg_ignores_competence_order():
    specs = load_competences(competence_files(DEFAULT_COMPETENCE_DIR))
    reference = build_rcg(specs)
    for permutation in itertools.permutations(specs):
        rcg = build_rcg(list(permutation))
        assert rcg.edges == reference.edges
        assert rcg.collisions == reference.collisions
        assert rcg.names == reference.names


def test_matrix_follows_plan_order(case_plan):
    plan, graph = case_plan
    lines = export_matrix(graph, plan.ordered_steps).splitlines()
    assert lines[0].split()[0] == "[calibration]"
    assert [line.split()[i] for i, line in enumerate(lines[:5])] == [f"[{n}]" for n in plan.ordered_steps]
