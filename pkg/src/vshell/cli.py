"""Command-line entry points.

Subcommands: geometry-check, solve2d, solve3d, converge, properties.
Configs are TOML (see configs/ for commented examples).  Exit codes:
0 success, 1 assertion/convergence failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # python < 3.11
    import tomli as tomllib

from . import fem, harness, solver2d, solver3d
from .harness import (ClassificationMismatch, ScenarioError, builtin_scenarios,
                      scenario_from_config)

USAGE_ERROR = 2
FAILURE = 1


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ScenarioError(f"config file not found: {p}")
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _scenario_from_args(args) -> harness.Scenario:
    cfg = _load_config(args.config)
    if "scenario" in cfg:
        return scenario_from_config(cfg["scenario"])
    if getattr(args, "scenario", None):
        lib = builtin_scenarios()
        if args.scenario not in lib:
            raise ScenarioError(
                f"unknown scenario '{args.scenario}'; available: {sorted(lib)}")
        return lib[args.scenario]
    return builtin_scenarios()["cylinder_panel"]


def _cmd_geometry_check(args) -> int:
    cfg = _load_config(args.config).get("geometry", {})
    chart_name = cfg.get("chart", "cylinder")
    chart_params = cfg.get("chart_params", {})
    eps_list = cfg.get("eps_list", [0.1, 0.05, 0.025])
    out = Path(args.out) / "geometry_report.csv"
    path = harness.geometry_report(chart_name, chart_params, eps_list, out)
    print(f"wrote {path}")
    return 0


def _cmd_solve2d(args) -> int:
    scen = _scenario_from_args(args)
    chart = scen.chart()
    grid = scen.grid()
    mesh = scen.mesh2d()
    system = solver2d.assemble_membrane(mesh, chart, scen.material)
    diag = solver2d.kernel_diagnostic(system)
    print(f"discrete kind: {diag.kind} (sigma_min={diag.sigma_min:.3e})")
    phi = harness.compute_phi(scen, system)
    hist = solver2d.solve_membrane(system, phi, grid, delta=scen.delta_override)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    seminorms = hist.seminorms()
    energies = hist.energies()
    fem.write_csv(outdir / "summary.csv", ["t", "seminorm", "energy"],
                  [[f"{t:g}", s, e] for t, s, e in zip(grid.times, seminorms, energies)])
    node_ids = np.arange(mesh.n_nodes)
    for n in range(grid.N + 1):
        fem.write_field_csv(outdir / f"displacement_{n:04d}.csv",
                            node_ids, mesh.nodes, hist.full(n))
    print(f"wrote summary and {grid.N + 1} field snapshots to {outdir}")
    return 0


def _cmd_solve3d(args) -> int:
    scen = _scenario_from_args(args)
    eps = args.eps if args.eps is not None else scen.eps_list[0]
    chart = scen.chart()
    grid = scen.grid()
    mesh2 = scen.mesh2d()
    mesh3 = fem.extrude_mesh(mesh2, scen.layers, degree=scen.thickness_degree)
    system = solver3d.assemble_3d(mesh3, chart, eps, scen.material)
    hist = solver3d.solve_3d(system, scen.forces(chart), grid)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    energies = hist.energies()
    d3 = [np.sqrt(system.d3_sq_norm(u)) for u in hist.states]
    fem.write_csv(outdir / "summary.csv", ["t", "energy", "d3_norm"],
                  [[f"{t:g}", e, d] for t, e, d in zip(grid.times, energies, d3)])
    coords = mesh3.node_coords()
    node_ids = np.arange(mesh3.n_nodes)
    for n in range(grid.N + 1):
        fem.write_field_csv(outdir / f"displacement_{n:04d}.csv",
                            node_ids, coords, hist.full(n))
    print(f"eps={eps}: wrote summary and {grid.N + 1} snapshots to {outdir}")
    return 0


def _cmd_converge(args) -> int:
    scen = _scenario_from_args(args)
    report = harness.run_convergence(scen, progress=lambda s: print(f"  {s}"))
    files = harness.emit_report(report, args.out)
    for f in files:
        print(f"wrote {f}")
    if not report.decreasing():
        print("FAIL: seminorm distances are not strictly decreasing", file=sys.stderr)
        return FAILURE
    print("distances strictly decreasing; ratios:",
          ", ".join(f"{r:.3f}" for r in report.ratios))
    return 0


def _cmd_properties(args) -> int:
    try:
        results = harness.run_properties(args.suite, seed=args.seed)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return USAGE_ERROR
    failed = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name}: {r.detail}")
        failed += 0 if r.passed else 1
    if failed:
        print(f"{failed}/{len(results)} checks failed", file=sys.stderr)
        return FAILURE
    print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vshell",
        description="Viscoelastic shell laboratory: thin-limit membrane "
                    "experiments with long-term memory")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=0,
                       help="random seed (only property checks draw randomness; "
                            "solver commands are deterministic)")

    pg = sub.add_parser("geometry-check", help="expansion-residual report for a chart")
    common(pg)
    pg.set_defaults(func=_cmd_geometry_check)

    p2 = sub.add_parser("solve2d", help="solve the 2D membrane evolution")
    common(p2)
    p2.add_argument("--scenario", default=None, help="builtin scenario name")
    p2.set_defaults(func=_cmd_solve2d)

    p3 = sub.add_parser("solve3d", help="solve the scaled 3D shell problem")
    common(p3)
    p3.add_argument("--scenario", default=None)
    p3.add_argument("--eps", type=float, default=None)
    p3.set_defaults(func=_cmd_solve3d)

    pc = sub.add_parser("converge", help="thin-limit convergence experiment")
    common(pc)
    pc.add_argument("--scenario", default=None)
    pc.set_defaults(func=_cmd_converge)

    pp = sub.add_parser("properties", help="run a module's invariant checks")
    pp.add_argument("suite", help="geometry|material|kinematics|memory|solver2d|solver3d")
    pp.add_argument("--seed", type=int, default=0)
    pp.set_defaults(func=_cmd_properties)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ClassificationMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR if isinstance(exc, ScenarioError) else FAILURE
    except (solver2d.SingularSystemError, solver3d.NonSPDError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
