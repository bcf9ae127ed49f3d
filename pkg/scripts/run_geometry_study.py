#!/usr/bin/env python3
"""Expansion-residual study: sup-norm residuals and fitted orders of the
geometric expansions for the library charts."""

import sys

import numpy as np

from vshell import geometry


def main():
    eps_list = [0.1, 0.05, 0.025, 0.0125]
    for chart in (geometry.plane_chart(),
                  geometry.cylinder_chart(0.6, 2 * np.pi / 3, 1.0),
                  geometry.hypar_chart(0.6),
                  geometry.cap_chart(0.8)):
        rep = geometry.expansion_residuals(chart, eps_list)
        print(f"== {chart.name}")
        for name, rows in rep["residuals"].items():
            slope = rep["slopes"][name]
            vals = "  ".join(f"{r:.3e}" for _, r in rows)
            tag = f"slope {slope:5.2f}" if np.isfinite(slope) else "exact/zero"
            print(f"  {name:18s} {vals}   [{tag}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
