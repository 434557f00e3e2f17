#!/usr/bin/env python3
"""Refinement study of the surface-phase quadrature on the bundled presets.

Prints the phase, the change under 2x refinement, and the reported error
estimate per level.  Estimates at the 1e-12 floor mean the grid-aligned
quadrature is already exact to roundoff.
"""

import abphase as ab


def main():
    for name in ab.preset_names():
        scn = ab.scenario_from_tree(ab.preset_tree(name))
        for label, strategy in scn.strategies.items():
            mesh = ab.build_surface(scn.interferometer, strategy,
                                    scn.grid_n, scn.grid_m, scn.config.knot_times())
            print(f"{name} / {label}")
            previous = None
            for level in range(3):
                report = ab.phase_surface(mesh, scn.config)
                change = "" if previous is None else f"  change={abs(report.total - previous):.2e}"
                print(f"  level {level}: n={report.grid['n_time']:5d} m={report.grid['m_nodes']:5d}"
                      f"  total={report.total: .12f}  est={report.error_estimate:.2e}{change}")
                previous = report.total
                if level < 2:
                    mesh = ab.refine(mesh, 2)
            print()


if __name__ == "__main__":
    main()
