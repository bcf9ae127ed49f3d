#!/usr/bin/env python3
"""Thin-limit convergence experiment on the first-kind cylinder panel.

Equivalent to `vshell converge --scenario cylinder_panel --out out/converge`
but handy to edit for parameter studies.
"""

import argparse
import sys

from vshell import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="cylinder_panel")
    ap.add_argument("--out", default="out/converge")
    ap.add_argument("--nx", type=int, default=None)
    ap.add_argument("--layers", type=int, default=None)
    args = ap.parse_args()

    scen = harness.builtin_scenarios()[args.scenario]
    overrides = {}
    if args.nx is not None:
        overrides.update(nx=args.nx, ny=args.nx)
    if args.layers is not None:
        overrides["layers"] = args.layers
    if overrides:
        from dataclasses import replace
        scen = replace(scen, **overrides)

    report = harness.run_convergence(scen, progress=print)
    harness.emit_report(report, args.out)

    print()
    print(f"reference |xi|_MT = {report.ref_seminorm:.6f}")
    for (eps, dist, d3) in report.rows:
        print(f"eps={eps:<6g} |u_bar - xi|_MT = {dist:.6f}   |d3 u|_T = {d3:.6f}")
    if report.ratios:
        print("decay ratios:", ", ".join(f"{r:.3f}" for r in report.ratios))
    return 0 if report.decreasing() else 1


if __name__ == "__main__":
    sys.exit(main())
