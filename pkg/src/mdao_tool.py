#!/usr/bin/env python3
"""mdao-forge CLI Tool - Main entry point."""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from core.case_study import CONSTRAINT_OUTPUTS, DESIGN_PATHS, OBJECTIVE, case_study_fpg, case_study_rcg
from core.competences import baseline_geometry, build_registry, mission_from_tree
from core.datamodel import load_tree, merge_files, render_hierarchy, validate_file
from core.disciplines import calibrate_baseline, load_constants, save_constants
from core.errors import MdaoError
from core.executor import compute_run_id, plan_execution, run_mda
from core.formalize import apply_architecture, export_dot, export_matrix, export_workflow, import_workflow
from core.optimizer import (
    CaseStudyEvaluator,
    ConstraintSpec,
    fit_objective_model,
    read_doe_csv,
    read_report_json,
    run_doe,
    run_optimization,
    write_doe_csv,
    write_report_json,
)
from core.report import emit_report, render_sobol_svg
from core.sampling import DesignSpace
from core.sensitivity import read_sobol_csv, sobol_indices, write_sobol_csv
from utils.config import configure_logging, resolve_constants_path
from utils.constants import (
    BASELINE_MTOW,
    DEFAULT_BASELINE_FILE,
    DEFAULT_BUDGET,
    DEFAULT_CHOICES_FILE,
    DEFAULT_COMPETENCE_DIR,
    DEFAULT_LOOP_HEAD,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_N_INIT,
    DEFAULT_RELAXATION,
    DEFAULT_SEED,
    DEFAULT_SOBOL_N,
    DEFAULT_TOLERANCE,
    EXIT_DOMAIN,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_USAGE,
    P_EMPTY_MASS,
    P_FUEL_SAVED,
    P_MTOW,
    P_TARGET_MTOW,
    SUPPORTED_PATTERNS,
    WRAPPER_KINDS,
)


class ToolArgumentParser(argparse.ArgumentParser):
    """Usage errors print the usage line to stderr and exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _print_json(data) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _evaluator(args) -> CaseStudyEvaluator:
    constants = load_constants(resolve_constants_path(args.constants))
    return CaseStudyEvaluator(load_tree(args.data), constants)


def handle_validate(args):
    """Handle validate command."""
    results = [validate_file(path) for path in args.files]
    valid = [path for path, result in zip(args.files, results) if not result['error']]
    hierarchy = render_hierarchy(merge_files(valid)) if args.tree and valid else None

    if args.json:
        if args.tree:
            _print_json({"files": results, "hierarchy": hierarchy or ""})
        else:
            _print_json(results if len(results) > 1 else results[0])
    else:
        for result in results:
            if result['error']:
                print(f"{result['file']}: INVALID - {result['error']}")
                continue
            print(f"{result['file']}: OK ({result['entries']} entries, version {result['version']})")
            for path in result['unknown_paths']:
                print(f"   Warning: not in parameter dictionary: {path}")
        if hierarchy:
            print(f"\nCombined hierarchy of {len(valid)} file(s)")
            print("-" * 40)
            print(hierarchy, end="")

    return EXIT_DOMAIN if any(r['error'] for r in results) else EXIT_OK


def handle_graph(args):
    """Handle graph rcg|fpg commands."""
    if args.stage == 'rcg':
        graph = case_study_rcg(args.tools)
    else:
        graph = case_study_fpg(args.tools, args.choices, args.objective,
                               args.design_var or DESIGN_PATHS, args.constraint or CONSTRAINT_OUTPUTS)

    if args.dot:
        Path(args.dot).write_text(export_dot(graph), encoding="utf-8")

    if args.json:
        _print_json({
            "stage": graph.stage,
            "competences": list(graph.names),
            "parameters": sorted(graph.parameters),
            "edges": [list(edge) for edge in sorted(graph.edges)],
            "collisions": {path: list(names) for path, names in sorted(graph.collisions.items())},
        })
    else:
        print(f"\n{graph.stage}: {len(graph.names)} competences, {len(graph.parameters)} parameters, "
              f"{len(graph.edges)} edges")
        print("-" * 40)
        print(export_matrix(graph))
        for path, names in sorted(graph.collisions.items()):
            print(f"Collision: {path} produced by {', '.join(names)}")
        if args.dot:
            print(f"DOT written to {args.dot}")

    return EXIT_OK


def handle_arch_apply(args):
    """Handle arch apply command."""
    fpg = case_study_fpg(args.tools, args.choices)
    plan = apply_architecture(fpg, args.pattern, args.tolerance, args.max_iter, args.wrapper, args.loop_head)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(export_workflow(plan, fpg), encoding="utf-8")

    if args.json:
        _print_json({
            "orderedSteps": list(plan.ordered_steps),
            "mdaLoop": list(plan.mda_loop),
            "convergenceVars": list(plan.convergence_vars),
            "out": str(args.out),
        })
    else:
        print(f"Ordered steps: {' -> '.join(plan.ordered_steps)}")
        print(f"MDA loop: {', '.join(plan.mda_loop) or '(none)'}")
        print(f"Convergence variables: {', '.join(plan.convergence_vars) or '(none)'}")
        print("-" * 40)
        print(export_matrix(fpg, plan.ordered_steps), end="")
        print("-" * 40)
        print(f"Workflow written to {args.out}")

    return EXIT_OK


def handle_run_mda(args):
    """Handle run mda command."""
    plan, graph = import_workflow(Path(args.workflow).read_bytes())
    constants = load_constants(resolve_constants_path(args.constants))
    tree = load_tree(args.data)
    run = plan_execution(plan, build_registry(constants), graph, args.relaxation)
    run_id = compute_run_id(plan, tree)
    record = run_mda(run, tree, Path(args.outdir) / run_id, run_id)

    if args.json:
        _print_json(record.to_log())
    else:
        print(f"\nRun {record.run_id}: {record.iterations} iteration(s), converged: {record.converged}")
        print("-" * 40)
        if record.residual_history:
            print(f"Final residual: {record.residual_history[-1]:.3e}")
        for path in (P_MTOW, P_EMPTY_MASS, P_FUEL_SAVED):
            if path in record.final_tree:
                print(f"{path}: {record.final_tree.real(path):.6g}")
        if record.error:
            print(f"Error: {record.error}")
        print(f"Log: {Path(args.outdir) / run_id}")

    if record.infeasible:
        return EXIT_DOMAIN
    return EXIT_OK if record.converged else EXIT_NOT_CONVERGED


def handle_doe_run(args):
    """Handle doe run command."""
    space = DesignSpace.case_study()
    samples = run_doe(space, _evaluator(args), args.n, args.seed, args.jobs)
    write_doe_csv(samples, args.out)

    if args.json:
        _print_json(samples.results)
    else:
        print(f"\nDoE of {len(samples)} points written to {args.out}")
        print(f"Feasible: {int(samples.feasible.sum())}, "
              f"not evaluated cleanly: {sum(s != 'ok' for s in samples.statuses)}")

    return EXIT_OK


def handle_opt_run(args):
    """Handle opt run command."""
    space = DesignSpace.case_study()
    report = run_optimization(space, ConstraintSpec(), _evaluator(args), args.init, args.budget, args.seed,
                              args.jobs, None if args.no_sensitivity else args.sobol_n)
    write_report_json(report, args.out)

    if args.json:
        _print_json(report.to_dict())
    else:
        print(emit_report(report.to_dict()))
        print(f"Report written to {args.out}")

    return EXIT_OK if report.feasible_found else EXIT_NOT_CONVERGED


def handle_sens_run(args):
    """Handle sens run command."""
    space = DesignSpace.case_study()
    samples = read_doe_csv(args.doe, space)
    model = fit_objective_model(samples, args.seed)
    result = sobol_indices(model, space, args.n, args.seed)
    write_sobol_csv(result, args.out)

    if args.json:
        _print_json({"indices": result.as_dict(), "degenerate": result.degenerate})
    else:
        print(f"\nFirst-order Sobol indices ({result.evaluations} surrogate evaluations)")
        print("-" * 40)
        for name, value in result.ranking():
            print(f"{name:<20} {value:>8.3f}")
        if result.degenerate:
            print("Warning: output variance is degenerate; indices reported as 0")
        print(f"Indices written to {args.out}")

    return EXIT_OK


def handle_calibrate(args):
    """Handle calibrate command."""
    source = resolve_constants_path(args.constants)
    constants = load_constants(source)
    tree = load_tree(args.data)
    calibrated = calibrate_baseline(mission_from_tree(tree, constants), baseline_geometry(tree),
                                    args.target, constants)
    out = Path(args.out) if args.out else source
    save_constants(calibrated, out)

    if args.json:
        _print_json({"fixedEmptyFraction": calibrated.fixed_empty_fraction,
                     "targetMtow": calibrated.target_mtow, "out": str(out)})
    else:
        print(f"fixedEmptyFraction = {calibrated.fixed_empty_fraction:.8f} (target MTOW {args.target:g} kg)")
        print(f"Calibrated constants written to {out}")
        if tree.real(P_TARGET_MTOW) != args.target:
            print(f"Note: {args.data} declares targetMtow {tree.real(P_TARGET_MTOW):g}; "
                  f"runs on it recalibrate against that value")

    return EXIT_OK


def handle_report(args):
    """Handle report command."""
    report = read_report_json(args.report)
    sobol = read_sobol_csv(args.sobol) if args.sobol else None
    indices = sobol if sobol is not None else report.get("sobolIndices") or {}
    if args.svg:
        render_sobol_svg(indices, args.svg)

    if args.json:
        _print_json({"report": report, "sobolIndices": indices})
    else:
        print(emit_report(report, sobol), end="")
        if args.svg:
            print(f"\nChart written to {args.svg}")

    return EXIT_OK


def build_parser() -> ToolArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', action='store_true', default=argparse.SUPPRESS,
                        help='Output results as JSON')
    common.add_argument('--debug', action='store_true', default=argparse.SUPPRESS,
                        help='Show detailed debug information')
    common.add_argument('--constants', metavar='FILE', default=argparse.SUPPRESS,
                        help='Discipline constants file (default: $MDAO_FORGE_CONSTANTS or data/constants.xml)')

    parser = ToolArgumentParser(
        description="mdao-forge - collaborative MDAO toolchain for a solar-power-system aircraft",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[common],
        epilog="""
Examples:
  %(prog)s validate data/baseline.xml
  %(prog)s validate --tree data/baseline.xml data/stubs/sizing.xml
  %(prog)s graph rcg --dot rcg.dot
  %(prog)s arch apply --pattern converged-mda-gs --out workflow.xml
  %(prog)s run mda --workflow workflow.xml --data data/baseline.xml --outdir run/
  %(prog)s calibrate --target 67585
  %(prog)s doe run --n 20 --seed 42 --out doe.csv
  %(prog)s opt run --init 20 --budget 40 --seed 42 --out report.json
  %(prog)s sens run --doe doe.csv --out sobol.csv
  %(prog)s report --report report.json --svg sobol.svg
        """
    )
    parser.set_defaults(json=False, debug=False, constants=None)
    commands = parser.add_subparsers(dest='command', metavar='COMMAND', required=True)

    validate = commands.add_parser('validate', parents=[common], help='Validate exchange files')
    validate.add_argument('files', nargs='+', metavar='TREE_XML')
    validate.add_argument('--tree', action='store_true',
                          help='Print the combined hierarchy of the valid files with value, unit and source tool')
    validate.set_defaults(handler=handle_validate)

    graph = commands.add_parser('graph', parents=[common], help='Build and export problem graphs')
    graph.add_argument('stage', choices=['rcg', 'fpg'])
    graph.add_argument('--tools', default=DEFAULT_COMPETENCE_DIR, metavar='DIR',
                       help='Directory of competence files')
    graph.add_argument('--dot', metavar='FILE', help='Write Graphviz DOT')
    graph.add_argument('--objective', default=OBJECTIVE, metavar='PATH')
    graph.add_argument('--choices', default=DEFAULT_CHOICES_FILE, metavar='FILE',
                       help='Collision choice map')
    graph.add_argument('--design-var', action='append', metavar='PATH')
    graph.add_argument('--constraint', action='append', metavar='PATH')
    graph.set_defaults(handler=handle_graph)

    arch = commands.add_parser('arch', parents=[common], help='Architect the FPG into a workflow')
    arch_commands = arch.add_subparsers(dest='action', metavar='ACTION', required=True)
    apply = arch_commands.add_parser('apply', parents=[common], help='Apply an architecture pattern')
    apply.add_argument('--pattern', default='converged-mda-gs', choices=sorted(SUPPORTED_PATTERNS))
    apply.add_argument('--out', required=True, metavar='FILE')
    apply.add_argument('--tools', default=DEFAULT_COMPETENCE_DIR, metavar='DIR')
    apply.add_argument('--choices', default=DEFAULT_CHOICES_FILE, metavar='FILE')
    apply.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE)
    apply.add_argument('--max-iter', type=int, default=DEFAULT_MAX_ITERATIONS)
    apply.add_argument('--wrapper', default='none', choices=sorted(WRAPPER_KINDS))
    apply.add_argument('--loop-head', default=DEFAULT_LOOP_HEAD, metavar='COMPETENCE')
    apply.set_defaults(handler=handle_arch_apply)

    run = commands.add_parser('run', parents=[common], help='Execute a workflow')
    run_commands = run.add_subparsers(dest='action', metavar='ACTION', required=True)
    mda = run_commands.add_parser('mda', parents=[common], help='Run the converged MDA')
    mda.add_argument('--workflow', required=True, metavar='FILE')
    mda.add_argument('--data', default=DEFAULT_BASELINE_FILE, metavar='FILE')
    mda.add_argument('--outdir', required=True, metavar='DIR')
    mda.add_argument('--relaxation', type=float, default=DEFAULT_RELAXATION)
    mda.set_defaults(handler=handle_run_mda)

    doe = commands.add_parser('doe', parents=[common], help='Design of experiments')
    doe_commands = doe.add_subparsers(dest='action', metavar='ACTION', required=True)
    doe_run = doe_commands.add_parser('run', parents=[common], help='Evaluate a Latin hypercube')
    doe_run.add_argument('--n', type=int, default=DEFAULT_N_INIT)
    doe_run.add_argument('--seed', type=int, default=DEFAULT_SEED)
    doe_run.add_argument('--out', required=True, metavar='CSV')
    doe_run.add_argument('--data', default=DEFAULT_BASELINE_FILE, metavar='FILE')
    doe_run.add_argument('--jobs', type=int, default=1)
    doe_run.set_defaults(handler=handle_doe_run)

    opt = commands.add_parser('opt', parents=[common], help='Surrogate-based optimization')
    opt_commands = opt.add_subparsers(dest='action', metavar='ACTION', required=True)
    opt_run = opt_commands.add_parser('run', parents=[common], help='DoE plus constrained-EI infill')
    opt_run.add_argument('--init', type=int, default=DEFAULT_N_INIT)
    opt_run.add_argument('--budget', type=int, required=True,
                         help=f'Total number of evaluations (typical: {DEFAULT_BUDGET})')
    opt_run.add_argument('--seed', type=int, default=DEFAULT_SEED)
    opt_run.add_argument('--out', required=True, metavar='JSON')
    opt_run.add_argument('--data', default=DEFAULT_BASELINE_FILE, metavar='FILE')
    opt_run.add_argument('--jobs', type=int, default=1)
    opt_run.add_argument('--sobol-n', type=int, default=DEFAULT_SOBOL_N)
    opt_run.add_argument('--no-sensitivity', action='store_true',
                         help='Skip the initial-DoE Sobol analysis')
    opt_run.set_defaults(handler=handle_opt_run)

    sens = commands.add_parser('sens', parents=[common], help='Sensitivity analysis')
    sens_commands = sens.add_subparsers(dest='action', metavar='ACTION', required=True)
    sens_run = sens_commands.add_parser('run', parents=[common], help='Sobol indices on a DoE surrogate')
    sens_run.add_argument('--doe', required=True, metavar='CSV')
    sens_run.add_argument('--out', required=True, metavar='CSV')
    sens_run.add_argument('--n', type=int, default=DEFAULT_SOBOL_N)
    sens_run.add_argument('--seed', type=int, default=DEFAULT_SEED)
    sens_run.set_defaults(handler=handle_sens_run)

    calibrate = commands.add_parser('calibrate', parents=[common], help='Calibrate the baseline empty mass')
    calibrate.add_argument('--target', type=float, default=BASELINE_MTOW, metavar='MTOW')
    calibrate.add_argument('--data', default=DEFAULT_BASELINE_FILE, metavar='FILE')
    calibrate.add_argument('--out', metavar='FILE', help='Output constants file (default: the input one)')
    calibrate.set_defaults(handler=handle_calibrate)

    report = commands.add_parser('report', parents=[common], help='Summarize an optimization report')
    report.add_argument('--report', required=True, metavar='JSON')
    report.add_argument('--sobol', metavar='CSV')
    report.add_argument('--svg', metavar='FILE')
    report.set_defaults(handler=handle_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    configure_logging(args.debug)

    try:
        return args.handler(args)
    except KeyboardInterrupt:
        print("\nOperation cancelled by user")
        return EXIT_USAGE
    except (MdaoError, OSError) as e:
        print(f"Error: {e}")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
