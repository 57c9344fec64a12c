"""Command-line front end.

Subcommands: solve, certify, twoport, sweep, reduce.  Machine-readable
JSON goes to standard output (or delimited CSV with ``--format csv``);
a human-readable summary goes to standard error when that is a terminal.
With ``--out-dir`` the report files are also written to disk, including
rendered figures next to the delimited output.

Exit codes (stable contract):

    0  success (for solve: at least one operating point found)
    1  input, parse, validation, or configuration error
    2  solve: no start converged / twoport: existence condition violated
    3  solve: infeasible (negative total injected power)
    4  sweep: at least one certificate soundness violation recorded
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
import numpy as np

from . import __version__
from .certificates import (
    certificate_infnorm,
    certificate_spectral,
    check_membership,
    region_rings,
)
from .decomposition import decompose_power
from .errors import CircuitError
from .network import (
    Network,
    build_conductance_matrix,
    dumps_network,
    load_network,
    network_to_obj,
    reduce_network,
)
from .solver import (
    Feasibility,
    NoHighVoltageSolution,
    SolverOptions,
    feasibility_precheck,
    solve_operating_point,
    two_port_solve,
)
from .spectral import laplacian_spectrum
from .sweep import SweepConfig, run_sweep, write_rows_csv, write_summary_json

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_SOLUTION = 2
EXIT_INFEASIBLE = 3
EXIT_VIOLATIONS = 4


def _jsonify(value):
    """Make a report JSON-serializable; non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else str(f)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _print_json(payload: dict) -> None:
    print(json.dumps(_jsonify(payload), indent=2))


def _stderr_table(lines: list[str]) -> None:
    if sys.stderr.isatty():
        for line in lines:
            print(line, file=sys.stderr)


def _certificate_obj(cert) -> dict:
    return {
        "kind": cert.kind,
        "delta": cert.delta,
        "v_min": cert.v_min,
        "x_max": cert.x_max,
        "applicable": cert.applicable,
        "reason": cert.reason,
        "inputs": dict(cert.inputs),
    }


def _membership_obj(member) -> dict:
    return {"status": member.status, "violations": list(member.violations)}


def _point_obj(op, memberships: dict) -> dict:
    return {
        "v": op.v,
        "v0": op.v0,
        "deviation": op.deviation,
        "residual_norm": op.residual_norm,
        "iterations": op.iterations,
        "start_index": op.start_index,
        "degenerate_family": op.degenerate_family,
        "membership": {kind: _membership_obj(m) for kind, m in memberships.items()},
    }


def _analysis(network: Network):
    """Shared pipeline: reduce interior nodes, then spectrum/decomposition/certs."""
    working = reduce_network(network)
    matrix = build_conductance_matrix(working)
    summary = laplacian_spectrum(matrix, working)
    injections = working.injection_vector(working.node_ids)
    pd = decompose_power(injections)
    certs = {
        "spectral": certificate_spectral(summary, pd),
        "infnorm": certificate_infnorm(summary, pd),
    }
    return working, matrix, summary, injections, pd, certs


def _summary_obj(summary) -> dict:
    return {
        "eigenvalues": summary.eigenvalues,
        "lambda2": summary.lambda2,
        "lambda_max": summary.lambda_max,
        "eigenratio": summary.eigenratio,
        "inf_norm": summary.inf_norm,
        "g_min": summary.g_min,
    }


def _power_obj(injections, pd) -> dict:
    return {
        "injections": injections,
        "loss": pd.loss,
        "transfer": pd.transfer,
        "transfer_norm2": pd.transfer_norm2,
        "transfer_norm_inf": pd.transfer_norm_inf,
    }


def _points_csv(node_labels, points, memberships) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["rank", "v0", "deviation_inf", "residual_norm", "iterations", "start_index",
         "membership_spectral", "membership_infnorm"]
        + [f"v_{label}" for label in node_labels]
    )
    for rank, op in enumerate(points):
        member = memberships[rank]
        writer.writerow(
            [rank + 1, repr(op.v0), repr(op.deviation_inf), repr(op.residual_norm),
             op.iterations, op.start_index,
             member["spectral"].status, member["infnorm"].status]
            + [repr(float(v)) for v in op.v]
        )
    return buf.getvalue()


def _region_csv(rings) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["v0_level", "vertex", "v1", "v2", "v3"])
    for level, ring in rings:
        for k, vertex in enumerate(ring):
            writer.writerow([repr(float(level)), k] + [repr(float(c)) for c in vertex])
    return buf.getvalue()


def _ensure_out_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write_probe")
        with open(probe, "w", encoding="utf-8"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise CircuitError(f"output directory not writable: {exc}") from exc


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    started = time.perf_counter()
    network = load_network(args.network)
    working, matrix, summary, injections, pd, certs = _analysis(network)

    feasibility = feasibility_precheck(injections)
    options = SolverOptions(
        tol_watts=args.tol, max_iter=args.max_iter, n_starts=args.starts, seed=args.seed
    )
    points = []
    if feasibility is Feasibility.FEASIBLE:
        points = solve_operating_point(matrix, injections, options)

    memberships = [
        {kind: check_membership(cert, op) for kind, cert in certs.items()} for op in points
    ]
    report = {
        "tool": {"name": "cpdnet", "version": __version__},
        "network": network_to_obj(network),
        "reduced_network": network_to_obj(working) if network.interior else None,
        "feasibility": feasibility.value,
        "spectral": _summary_obj(summary),
        "power": _power_obj(injections, pd),
        "certificates": {kind: _certificate_obj(cert) for kind, cert in certs.items()},
        "operating_points": [
            _point_obj(op, member) for op, member in zip(points, memberships)
        ],
        "options": {
            "tol_watts": options.resolve_tol(injections),
            "max_iter": options.max_iter,
            "n_starts": options.n_starts,
            "seed": options.seed,
        },
        "timing_s": time.perf_counter() - started,
    }

    points_csv = _points_csv(working.node_ids, points, memberships)
    if args.format == "csv":
        print(points_csv, end="")
    else:
        _print_json(report)

    if args.out_dir:
        _ensure_out_dir(args.out_dir)
        _write(os.path.join(args.out_dir, "report.json"),
               json.dumps(_jsonify(report), indent=2) + "\n")
        _write(os.path.join(args.out_dir, "operating_points.csv"), points_csv)
        from . import plots

        if points:
            plots.save_voltage_profile(
                os.path.join(args.out_dir, "voltage_profile.png"),
                working.node_ids, points, certs["spectral"],
            )
        if len(working.node_ids) == 3 and certs["spectral"].applicable:
            plots.save_region_figure(
                os.path.join(args.out_dir, "region.png"),
                region_rings(certs["spectral"]), points,
            )

    _stderr_table(
        [f"{len(points)} operating point(s); feasibility: {feasibility.value}"]
        + [f"  #{k + 1}: V0={op.v0:.4f} V, max|x|={op.deviation_inf:.4f}, "
           f"residual={op.residual_norm:.3e} W" for k, op in enumerate(points)]
    )

    if feasibility is not Feasibility.FEASIBLE:
        return EXIT_INFEASIBLE
    if not points:
        return EXIT_NO_SOLUTION
    return EXIT_OK


def cmd_certify(args) -> int:
    network = load_network(args.network)
    working, matrix, summary, injections, pd, certs = _analysis(network)

    report = {
        "tool": {"name": "cpdnet", "version": __version__},
        "network": network_to_obj(network),
        "spectral": _summary_obj(summary),
        "power": _power_obj(injections, pd),
        "certificates": {kind: _certificate_obj(cert) for kind, cert in certs.items()},
    }

    rings = None
    if len(working.node_ids) == 3 and certs["spectral"].applicable:
        rings = region_rings(certs["spectral"])
        report["region"] = {
            "v0_levels": [level for level, _ in rings],
            "vertices": [ring for _, ring in rings],
            "columns": ["v0_level", "vertex", "v1", "v2", "v3"],
        }
    if len(working.node_ids) == 2:
        # The exact two-port existence condition complements the bounds.
        g = working.branches[0].conductance
        p1, p2 = injections
        try:
            outcome = two_port_solve(g, float(p1), float(p2))
        except CircuitError as exc:
            report["two_port_exact"] = {"error": str(exc)}
        else:
            if isinstance(outcome, NoHighVoltageSolution):
                report["two_port_exact"] = {
                    "exists": False, "ratio": outcome.ratio, "reason": outcome.reason
                }
            else:
                report["two_port_exact"] = {
                    "exists": True, "v": outcome.v, "v0": outcome.v0,
                    "deviation": outcome.deviation,
                }

    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["kind", "delta", "v_min", "x_max", "applicable", "reason"])
        for kind, cert in certs.items():
            writer.writerow([kind, repr(cert.delta), repr(cert.v_min), repr(cert.x_max),
                             str(cert.applicable).lower(), cert.reason or ""])
        print(buf.getvalue(), end="")
    else:
        _print_json(report)

    if args.out_dir:
        _ensure_out_dir(args.out_dir)
        _write(os.path.join(args.out_dir, "certificates.json"),
               json.dumps(_jsonify(report), indent=2) + "\n")
        if rings is not None:
            _write(os.path.join(args.out_dir, "region_polyline.csv"), _region_csv(rings))
            from . import plots

            plots.save_region_figure(os.path.join(args.out_dir, "region.png"), rings, [])

    lines = []
    for kind, cert in certs.items():
        state = "applicable" if cert.applicable else f"not applicable ({cert.reason})"
        lines.append(f"{kind}: delta={cert.delta:.4g}, v_min={cert.v_min:.4g} V, "
                     f"x_max={cert.x_max:.4g} [{state}]")
    _stderr_table(lines)
    return EXIT_OK


def cmd_twoport(args) -> int:
    outcome = two_port_solve(args.g, args.p1, args.p2)
    if isinstance(outcome, NoHighVoltageSolution):
        payload = {
            "exists": False,
            "ratio": outcome.ratio,
            "reason": outcome.reason,
            "condition": "loss over transfer must lie strictly between 0 and 1",
        }
        _print_json(payload)
        _stderr_table([f"no high-voltage solution: {outcome.reason} (ratio={outcome.ratio:.4g})"])
        return EXIT_NO_SOLUTION
    payload = {
        "exists": True,
        "v": outcome.v,
        "v0": outcome.v0,
        "deviation": outcome.deviation,
        "x_max": outcome.deviation_inf,
        "residual_norm": outcome.residual_norm,
    }
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["key", "value"])
        writer.writerow(["v1", repr(float(outcome.v[0]))])
        writer.writerow(["v2", repr(float(outcome.v[1]))])
        writer.writerow(["v0", repr(outcome.v0)])
        writer.writerow(["x_max", repr(outcome.deviation_inf)])
        print(buf.getvalue(), end="")
    else:
        _print_json(payload)
    _stderr_table([f"V=({outcome.v[0]:.5f}, {outcome.v[1]:.5f}) V, V0={outcome.v0:.5f} V"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = SweepConfig.from_json(fh.read())
    if args.seed is not None:
        config.seed = args.seed
    _ensure_out_dir(args.out_dir)

    report = run_sweep(config)
    write_rows_csv(report, os.path.join(args.out_dir, "instances.csv"))
    write_summary_json(report, os.path.join(args.out_dir, "summary.json"))
    from . import plots

    plots.save_sweep_figures(args.out_dir, report)

    _print_json({"aggregates": report.aggregates, "out_dir": args.out_dir})
    _stderr_table([
        f"{report.aggregates['rows']} instances, "
        f"{report.aggregates['soundness_violations']} soundness violation(s)"
    ])
    if report.aggregates["soundness_violations"] > 0:
        return EXIT_VIOLATIONS
    return EXIT_OK


def cmd_reduce(args) -> int:
    network = load_network(args.network)
    reduced = reduce_network(network)
    text = dumps_network(reduced)
    if args.out_dir:
        _ensure_out_dir(args.out_dir)
        _write(os.path.join(args.out_dir, "reduced_network.json"), text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpdnet",
        description="Operating points and operating-region certificates for "
                    "DC resistive networks of constant-power devices.",
    )
    parser.add_argument("--version", action="version", version=f"cpdnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve for operating points and report")
    solve.add_argument("network", help="network JSON file")
    solve.add_argument("--tol", type=float, default=None,
                       help="residual tolerance in watts (default: scale-aware)")
    solve.add_argument("--starts", type=int, default=8, help="number of Newton starts")
    solve.add_argument("--seed", type=int, default=0, help="seed for start perturbations")
    solve.add_argument("--max-iter", type=int, default=50, help="Newton iteration cap")
    solve.add_argument("--out-dir", default=None, help="write report files and figures here")
    solve.add_argument("--format", choices=("json", "csv"), default="json")
    solve.set_defaults(func=cmd_solve)

    certify = sub.add_parser("certify", help="evaluate operating-region certificates")
    certify.add_argument("network", help="network JSON file")
    certify.add_argument("--out-dir", default=None)
    certify.add_argument("--format", choices=("json", "csv"), default="json")
    certify.set_defaults(func=cmd_certify)

    twoport = sub.add_parser("twoport", help="exact two-port closed form")
    twoport.add_argument("g", type=float, help="branch conductance in siemens")
    twoport.add_argument("p1", type=float, help="injection at port 1 in watts")
    twoport.add_argument("p2", type=float, help="injection at port 2 in watts")
    twoport.add_argument("--format", choices=("json", "csv"), default="json")
    twoport.set_defaults(func=cmd_twoport)

    sweep = sub.add_parser("sweep", help="Monte Carlo certificate study")
    sweep.add_argument("config", help="sweep config JSON file")
    sweep.add_argument("--out-dir", required=True, help="directory for CSV/JSON/figures")
    sweep.add_argument("--seed", type=int, default=None, help="override config seed")
    sweep.set_defaults(func=cmd_sweep)

    reduce_cmd = sub.add_parser("reduce", help="eliminate interior nodes")
    reduce_cmd.add_argument("network", help="network JSON file")
    reduce_cmd.add_argument("--out-dir", default=None)
    reduce_cmd.set_defaults(func=cmd_reduce)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, ValueError, CircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
