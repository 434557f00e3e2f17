#!/usr/bin/env python3
"""Run the three bundled presets and print a compact summary table."""

import abphase as ab


def main():
    for name in ab.preset_names():
        report = ab.run(ab.scenario_from_tree(ab.preset_tree(name)))
        print(f"{name}  (passed={report.passed})")
        for key, entry in report.formulas.items():
            if "total" in entry:
                print(f"  {key:18s} total={entry['total']: .12f}  "
                      f"est={entry['error_estimate']:.1e}")
            else:
                print(f"  {key:18s} {entry}")
        for key, audit in report.audits.items():
            print(f"  audit {key}: passed={audit.get('passed')}")
        print()


if __name__ == "__main__":
    main()
