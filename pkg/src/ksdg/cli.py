"""Command-line entry point.

Subcommands:

* ``run <config>``: execute the run described by a configuration file,
  writing CSV diagnostics and VTK snapshots as configured.
* ``verify-mesh <pattern> <n>``: build a structured mesh and print the
  structural checks (barycenter-segment orthogonality, acuteness) plus
  the closed-form check of the barycenter distances.
* ``presets``: list the built-in experiment presets.

Exit codes: 0 on success, 1 on any run or verification failure, 2 on
usage errors.
"""

import argparse
import sys

import numpy as np

from .config import (ConfigError, PRESET_NAMES, load_config,
                     preset_description)
from .mesh import (MeshError, build_structured_mesh, pattern_edge_distance,
                   verify_hypotheses)
from .simulation import StepFailureError, run
from .ustep import UStepError
from .vstep import LinearSolveError

_FAILURES = (ConfigError, MeshError, StepFailureError, UStepError,
             LinearSolveError, OSError, ValueError)


def _cmd_run(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = load_config(fh.read())
    result = run(cfg)
    last = result.rows[-1]
    print("completed %d steps to t=%.9g" % (last.step, last.time))
    print("mass %.12g, u in [%.6g, %.6g], v in [%.6g, %.6g]"
          % (last.mass, last.min_u, last.max_u, last.min_v, last.max_v))
    if cfg.csv_path:
        print("diagnostics written to %s" % cfg.csv_path)
    if cfg.vtk_dir:
        print("snapshots written to %s" % cfg.vtk_dir)
    return 0


def _cmd_verify_mesh(args):
    mesh = build_structured_mesh(args.pattern, args.n)
    report = verify_hypotheses(mesh)
    closed = pattern_edge_distance(mesh.pattern, mesh.square_side,
                                   mesh.edge_lengths)
    dist_err = float(np.max(np.abs(mesh.edge_dists - closed) / closed))
    print("%s n=%d: %d triangles, %d vertices, %d interior edges, h=%.6g"
          % (mesh.pattern, args.n, mesh.n_cells, mesh.n_vertices,
             mesh.n_interior_edges, mesh.h))
    print("barycenter segments orthogonal to edges: %s (max violation %.3e)"
          % ("OK" if report.orthogonality_ok else "FAILED",
             report.orthogonality_violation))
    print("all angles at most pi/2:                 %s (max excess %.3e)"
          % ("OK" if report.acute_ok else "FAILED", report.angle_violation))
    print("barycenter distances vs closed form:     max relative error %.3e"
          % dist_err)
    ok = report.orthogonality_ok and report.acute_ok and dist_err <= 1e-12
    return 0 if ok else 1


def _cmd_presets(_args):
    for name in PRESET_NAMES:
        print("%-13s %s" % (name, preset_description(name)))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ksdg",
        description="Upwind DG solver for the Keller-Segel chemotaxis system")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured run")
    p_run.add_argument("config", help="path to a run configuration file")
    p_run.set_defaults(func=_cmd_run)

    p_vm = sub.add_parser("verify-mesh",
                          help="build a structured mesh and check it")
    p_vm.add_argument("pattern", help="mesh1 or mesh2")
    p_vm.add_argument("n", type=int, help="squares per side")
    p_vm.set_defaults(func=_cmd_verify_mesh)

    p_ls = sub.add_parser("presets", help="list experiment presets")
    p_ls.set_defaults(func=_cmd_presets)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0

    try:
        return args.func(args)
    except _FAILURES as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
