"""Command-line front end: validate, graph, constraints, info.

Exit codes: 0 success, 1 validation or constraint failure, 2 parse error,
3 usage error.  Results go to standard output, diagnostics to standard
error, so the tool composes in pipelines.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import FORMAT_VERSION, __version__
from .constraints import (
    RANK_TOL,
    explicit_jacobian_for_model,
    independent_coordinate_check,
    parse_configuration,
    zero_configuration,
)
from .errors import ConfigurationError, UrdfPlusError, UrdfXmlError
from .graphs import build_pipeline, export_dot
from .model import Coupling, count_degrees_of_freedom, regular_numbering, validate_model
from .xmlio import parse_urdf_plus

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_USAGE = 3

RESIDUAL_LIMIT = 1e-6


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="urdfplus",
        description="Validate and inspect URDF+ robot descriptions with "
        "kinematic loops.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"urdfplus {__version__} (format URDF+ {FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        p.add_argument("file", help="URDF+ file to read")
        if config:
            p.add_argument(
                "--config",
                help="joint configuration file (one 'name: v1 v2 ...' per line); "
                "default is the zero configuration",
            )
            p.add_argument(
                "--strict",
                action="store_true",
                help=f"fail when a closure residual exceeds {RESIDUAL_LIMIT:g}",
            )
            p.add_argument(
                "--tolerance",
                type=float,
                default=RANK_TOL,
                help="relative pivot tolerance for numerical rank "
                f"(default {RANK_TOL:g})",
            )

    p_validate = sub.add_parser(
        "validate", help="run the full parse/validate/aggregate pipeline"
    )
    add_common(p_validate)

    p_graph = sub.add_parser("graph", help="export a pipeline stage as DOT")
    p_graph.add_argument("file", help="URDF+ file to read")
    p_graph.add_argument(
        "--kind",
        choices=("cg", "cdd", "lacg"),
        default="cg",
        help="connectivity graph, constraint dependency digraph, or "
        "loop-aggregated graph",
    )
    p_graph.add_argument("--out", help="write DOT here instead of standard output")

    p_constraints = sub.add_parser(
        "constraints", help="report constraint Jacobian ranks and coordinates"
    )
    add_common(p_constraints)
    p_constraints.add_argument(
        "--json", action="store_true", help="emit the machine-readable report"
    )

    p_info = sub.add_parser("info", help="summarize a model")
    p_info.add_argument("file", help="URDF+ file to read")
    return parser


def _read_file(path: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        raise _UsageError(str(exc)) from exc


def _parse(path: str):
    data = _read_file(path)
    result = parse_urdf_plus(data)
    for diagnostic in result.warnings:
        print(str(diagnostic), file=sys.stderr)
    return result.model


def _configuration(args, numbered):
    if getattr(args, "config", None):
        text = _read_file(args.config).decode("utf-8")
        return parse_configuration(text, numbered)
    return zero_configuration(numbered)


def _counts_line(model) -> str:
    return (
        f"{len(model.links)} links, {len(model.tree_joints)} tree joints, "
        f"{len(model.loop_joints)} loops, {len(model.couplings)} couplings"
    )


def cmd_validate(args) -> int:
    model = _parse(args.file)
    report = validate_model(model)
    if not report.ok:
        for violation in report.violations:
            print(f"error: {violation}", file=sys.stderr)
        return EXIT_FAILURE
    numbered = regular_numbering(model)
    graph, _, _, lacg = build_pipeline(numbered)
    q = _configuration(args, numbered)
    constraint_report = independent_coordinate_check(
        numbered, graph, lacg, q, tol=args.tolerance
    )
    status = EXIT_OK
    if constraint_report.passed is False:
        print(
            "error: independent coordinate count mismatch: expected "
            f"{constraint_report.n_i}, declared {constraint_report.declared_dof} "
            f"(joints: {', '.join(constraint_report.declared_joints) or 'none'})",
            file=sys.stderr,
        )
        status = EXIT_FAILURE
    if constraint_report.max_residual > RESIDUAL_LIMIT:
        message = (
            f"closure residual {constraint_report.max_residual:.3e} exceeds "
            f"{RESIDUAL_LIMIT:g} at the evaluation configuration"
        )
        if args.strict:
            print(f"error: {message}", file=sys.stderr)
            status = EXIT_FAILURE
        else:
            print(f"warning: {message}", file=sys.stderr)
    if status == EXIT_OK:
        print(f"OK: {model.name} ({_counts_line(model)})")
    return status


def cmd_graph(args) -> int:
    model = _parse(args.file)
    report = validate_model(model)
    if not report.ok:
        for violation in report.violations:
            print(f"error: {violation}", file=sys.stderr)
        return EXIT_FAILURE
    numbered = regular_numbering(model)
    graph, digraph, _, lacg = build_pipeline(numbered)
    dot = export_dot({"cg": graph, "cdd": digraph, "lacg": lacg}[args.kind])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(dot)
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def _coordinate_labels(numbered) -> list[str]:
    labels = []
    for body in range(1, numbered.n_bodies + 1):
        joint = numbered.tree_joint_of[body]
        for k in range(joint.joint_type.dof):
            labels.append(f"{joint.name}[{k}]")
    return labels


def _report_payload(numbered, lacg, report, explicit):
    labels = _coordinate_labels(numbered)
    payload = {
        "n": report.n,
        "n_c": report.n_c,
        "n_i": report.n_i,
        "sum_rank": report.sum_ranks,
        "mode": report.mode,
        "max_residual": report.max_residual,
        "loops": [
            {
                "number": info.number,
                "name": info.name,
                "kind": info.kind,
                "rows": info.rows,
                "cols": info.columns,
                "rank": info.rank,
                "aggregate": info.aggregate,
                "joints": list(info.joint_numbers),
                "residual": info.residual_norm,
            }
            for info in report.loops
        ],
        "aggregates": [
            {
                "index": aggregate.index,
                "bodies": [lacg.graph.body_names[b] for b in aggregate.bodies],
                "parent": aggregate.parent,
                "loops": list(aggregate.loop_numbers),
            }
            for aggregate in lacg.aggregates
        ],
    }
    if report.mode == "independent":
        payload["independent"] = {
            "declared": list(report.declared_joints),
            "declared_dof": report.declared_dof,
            "expected_dof": report.n_i,
            "pass": report.passed,
        }
    if explicit is not None:
        payload["G"] = {
            "columns": [labels[c] for c in explicit.independent],
            "rows": [
                {"coordinate": labels[coord], "values": row.tolist()}
                for coord, row in zip(explicit.row_coordinates, explicit.matrix)
            ],
        }
    return payload


def _print_text_report(payload) -> None:
    for key in ("n", "n_c", "n_i", "sum_rank", "mode", "max_residual"):
        print(f"{key}: {payload[key]}")
    for info in payload["loops"]:
        print(
            f"loop {info['number']} ({info['name']}, {info['kind']}): "
            f"rows={info['rows']} cols={info['cols']} rank={info['rank']} "
            f"aggregate={info['aggregate']} joints={info['joints']} "
            f"residual={info['residual']:.3e}"
        )
    if not payload["loops"]:
        print("no loop constraints: model is a kinematic tree")
    for aggregate in payload["aggregates"]:
        tag = " (root)" if aggregate["parent"] is None else ""
        print(
            f"aggregate {aggregate['index']}{tag}: "
            + ", ".join(aggregate["bodies"])
        )
    if "independent" in payload:
        block = payload["independent"]
        print(
            "independent: declared=["
            + ", ".join(block["declared"])
            + f"] dof={block['declared_dof']} expected={block['expected_dof']} "
            + f"pass={'yes' if block['pass'] else 'no'}"
        )
    if "G" in payload:
        print("G columns: " + ", ".join(payload["G"]["columns"]))
        for row in payload["G"]["rows"]:
            values = " ".join(repr(v) for v in row["values"])
            print(f"  {row['coordinate']}: {values}")


def cmd_constraints(args) -> int:
    model = _parse(args.file)
    report = validate_model(model)
    if not report.ok:
        for violation in report.violations:
            print(f"error: {violation}", file=sys.stderr)
        return EXIT_FAILURE
    numbered = regular_numbering(model)
    graph, _, _, lacg = build_pipeline(numbered)
    q = _configuration(args, numbered)
    constraint_report = independent_coordinate_check(
        numbered, graph, lacg, q, tol=args.tolerance
    )
    explicit = None
    if constraint_report.passed:
        explicit = explicit_jacobian_for_model(numbered, graph, q, tol=args.tolerance)
    payload = _report_payload(numbered, lacg, constraint_report, explicit)
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        _print_text_report(payload)
    status = EXIT_OK
    if constraint_report.passed is False:
        print(
            "error: independent coordinate count mismatch: expected "
            f"{constraint_report.n_i}, declared {constraint_report.declared_dof}",
            file=sys.stderr,
        )
        status = EXIT_FAILURE
    if args.strict and constraint_report.max_residual > RESIDUAL_LIMIT:
        print(
            f"error: closure residual {constraint_report.max_residual:.3e} "
            f"exceeds {RESIDUAL_LIMIT:g}",
            file=sys.stderr,
        )
        status = EXIT_FAILURE
    return status


def cmd_info(args) -> int:
    model = _parse(args.file)
    print(f"robot: {model.name}")
    print(f"links: {len(model.links)}")
    print(f"tree joints: {len(model.tree_joints)}")
    print(f"loops: {len(model.loop_joints)}")
    print(f"couplings: {len(model.couplings)}")
    report = validate_model(model)
    if not report.ok:
        for violation in report.violations:
            print(f"warning: {violation}", file=sys.stderr)
        return EXIT_OK
    if not model.links:
        return EXIT_OK
    numbered = regular_numbering(model)
    n, n_c = count_degrees_of_freedom(numbered)
    print(f"root: {numbered.body_names[0]}")
    print(f"n: {n}")
    print(f"n_c: {n_c}")
    print("numbering:")
    for body in range(len(numbered.body_names)):
        if body == 0:
            print(f"  0: {numbered.body_names[0]} (root)")
        else:
            joint = numbered.tree_joint_of[body]
            print(
                f"  {body}: {numbered.body_names[body]} "
                f"(joint {joint.name}, {joint.joint_type.value}, "
                f"parent {numbered.body_names[numbered.parent[body]]})"
            )
    for number, entry in numbered.loop_entries:
        kind = "coupling" if isinstance(entry, Coupling) else "loop"
        print(f"  {number}: {entry.name} ({kind}: "
              f"{entry.predecessor} -> {entry.successor})")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "graph": cmd_graph,
    "constraints": cmd_constraints,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError:
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UrdfXmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UrdfPlusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
