"""Declarative scenario runner: load a config, run all formulas and audits.

The config format is a flat TOML tree with sections [run], [solenoid.*],
[cage.*], [arm.a]/[arm.b], [strategy.*], [audit], optional [gauge.*] and
optional [[expect]] tables; see README for the full schema.  Reports are
plain JSON and deterministic for fixed inputs.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import ScenarioValidationError, StructureViolationError
from .gauges import GaugeFunction, gaussian_gauge, linear_time_gauge, monomial_gauge, random_gauge_functions
from .phases import (
    gauge_invariance_audit,
    phase_decomposition,
    phase_diff_potentials,
    phase_field_line,
    phase_surface,
    surface_difference_audit,
)
from .sources import (
    FieldConfig,
    PiecewiseProfile,
    PotentialCage,
    ShieldedCage,
    SolenoidSource,
    eval_A_batch,
    eval_B_batch,
    eval_E_batch,
    eval_V_batch,
)
from .surfaces import Direct, ViaWaypoints, build_surface
from .worldlines import Interferometer, Worldline

BASE_FORMULAS = ("potentials", "surface", "decomposition", "field_line")


@dataclass(frozen=True)
class Expectation:
    formula: str
    total: float
    tolerance: float


@dataclass
class Scenario:
    """Validated, runnable description of one interferometer experiment."""

    name: str
    config: FieldConfig
    interferometer: Interferometer
    strategies: dict
    q_over_hbar: float = 1.0
    grid_n: int = 64
    grid_m: int = 257
    order: int = 5
    panels_per_unit: float = 8.0
    formulas: Optional[tuple] = None
    gauge_functions: tuple = ()
    audit_samples: int = 20
    audit_seed: int = 20406
    expectations: tuple = ()


# ---------------------------------------------------------------------------
# parsing and validation


def _parse_gauge(name: str, entry: dict) -> GaugeFunction:
    kind = entry.get("kind")
    if kind == "monomial":
        terms = {}
        for row in entry["terms"]:
            i, j, k, l, c = row
            terms[(int(i), int(j), int(k), int(l))] = float(c)
        return monomial_gauge(terms, label=name)
    if kind == "gaussian":
        return gaussian_gauge(
            amplitude=float(entry["amplitude"]),
            center=[float(v) for v in entry["center"]],
            width=float(entry["width"]),
            t_center=float(entry["t_center"]),
            t_width=float(entry["t_width"]),
            label=name,
        )
    if kind == "linear_time":
        return linear_time_gauge(float(entry["rate"]), label=name)
    raise ValueError(f"gauge.{name}: unknown kind {kind!r}")


def scenario_from_tree(tree: dict) -> Scenario:
    """Build and validate a Scenario; collects every violation it can find."""
    violations: list[str] = []

    def attempt(label, fn):
        try:
            return fn()
        except (ValueError, KeyError, TypeError) as exc:
            violations.append(f"{label}: {exc}")
            return None

    run = tree.get("run", {})
    name = str(run.get("name", ""))
    if not name:
        violations.append("run.name: must be a nonempty string")

    solenoids = []
    for label, entry in tree.get("solenoid", {}).items():
        sol = attempt(f"solenoid.{label}", lambda entry=entry, label=label: SolenoidSource(
            axis_point=(float(entry["center"][0]), float(entry["center"][1])),
            radius=float(entry["radius"]),
            flux=PiecewiseProfile(entry["flux"]),
            label=f"solenoid.{label}",
        ))
        if sol is not None:
            solenoids.append(sol)

    shielded = []
    potential = []
    for label, entry in tree.get("cage", {}).items():
        kind = entry.get("kind")
        if kind == "shielded":
            cage = attempt(f"cage.{label}", lambda entry=entry, label=label: ShieldedCage(
                center=tuple(float(v) for v in entry["center"]),
                radius=float(entry["radius"]),
                label=f"cage.{label}",
            ))
            if cage is not None:
                shielded.append(cage)
        elif kind == "potential":
            cage = attempt(f"cage.{label}", lambda entry=entry, label=label: PotentialCage(
                center=tuple(float(v) for v in entry["center"]),
                inner_radius=float(entry["inner_radius"]),
                outer_radius=float(entry["outer_radius"]),
                potential=PiecewiseProfile(entry["potential"]),
                label=f"cage.{label}",
            ))
            if cage is not None:
                potential.append(cage)
        else:
            violations.append(f"cage.{label}: kind must be 'shielded' or 'potential', got {kind!r}")

    config = FieldConfig(
        solenoids=tuple(solenoids),
        shielded_cages=tuple(shielded),
        potential_cages=tuple(potential),
    )
    violations.extend(config.validate())

    arms = {}
    for arm_name in ("a", "b"):
        entry = tree.get("arm", {}).get(arm_name)
        if entry is None:
            violations.append(f"arm.{arm_name}: section is required")
            continue
        wl = attempt(f"arm.{arm_name}", lambda entry=entry: Worldline(entry["knots"]))
        if wl is not None:
            arms[arm_name] = wl

    interferometer = None
    if "a" in arms and "b" in arms:
        interferometer = attempt("arm", lambda: Interferometer(arms["a"], arms["b"]))

    strategies = {}
    strategy_specs = tree.get("strategy", {"direct": {"kind": "direct"}})
    for label, entry in strategy_specs.items():
        kind = entry.get("kind")
        if kind == "direct":
            strategies[label] = Direct()
        elif kind == "via_waypoints":
            strat = attempt(f"strategy.{label}", lambda entry=entry: ViaWaypoints(
                waypoints=tuple((float(x), float(y)) for x, y in entry["waypoints"]),
                hold=tuple(float(v) for v in entry["hold"]) if "hold" in entry else None,
            ))
            if strat is not None:
                strategies[label] = strat
                violations.extend(_validate_waypoints(label, strat, config, interferometer))
        else:
            violations.append(f"strategy.{label}: kind must be 'direct' or 'via_waypoints', got {kind!r}")

    gauge_functions = []
    for label, entry in tree.get("gauge", {}).items():
        g = attempt(f"gauge.{label}", lambda label=label, entry=entry: _parse_gauge(label, entry))
        if g is not None:
            gauge_functions.append(g)

    expectations = []
    for i, entry in enumerate(tree.get("expect", [])):
        exp = attempt(f"expect[{i}]", lambda entry=entry: Expectation(
            formula=str(entry["formula"]),
            total=float(entry["total"]),
            tolerance=float(entry["tolerance"]),
        ))
        if exp is not None:
            expectations.append(exp)

    formulas = run.get("formulas")
    if formulas is not None:
        formulas = tuple(str(f) for f in formulas)
        for f in formulas:
            if f not in BASE_FORMULAS:
                violations.append(f"run.formulas: unknown formula {f!r}")

    audit = tree.get("audit", {})
    if violations:
        raise ScenarioValidationError(violations)

    return Scenario(
        name=name,
        config=config,
        interferometer=interferometer,
        strategies=strategies,
        q_over_hbar=float(run.get("q_over_hbar", 1.0)),
        grid_n=int(run.get("grid_n", 64)),
        grid_m=int(run.get("grid_m", 257)),
        order=int(run.get("quadrature_order", 5)),
        panels_per_unit=float(run.get("panels_per_unit_time", 8.0)),
        formulas=formulas,
        gauge_functions=tuple(gauge_functions),
        audit_samples=int(audit.get("gauge_samples", 20)),
        audit_seed=int(audit.get("seed", 20406)),
        expectations=tuple(expectations),
    )


def _validate_waypoints(label, strat: ViaWaypoints, config: FieldConfig,
                        interferometer) -> list[str]:
    problems = []
    pts = np.array(strat.waypoints, dtype=float)
    for sol in config.solenoids:
        axis = np.asarray(sol.axis_point)
        rel = pts - axis
        dist = np.hypot(rel[:, 0], rel[:, 1])
        if np.any(dist < 1e-6):
            problems.append(f"strategy.{label}: waypoint within 1e-6 of {sol.label} axis")
        for p, q in zip(pts[:-1], pts[1:]):
            d = q - p
            dd = float(d @ d)
            if dd == 0.0:
                continue
            tau = float(np.clip(-((p - axis) @ d) / dd, 0.0, 1.0))
            closest = p + tau * d
            if float(np.hypot(*(closest - axis))) <= sol.radius:
                problems.append(
                    f"strategy.{label}: waypoint segment crosses {sol.label} interior"
                )
    if strat.hold is not None and interferometer is not None:
        h1, h2 = strat.hold
        if not (interferometer.t_start < h1 <= h2 < interferometer.t_end):
            problems.append(
                f"strategy.{label}: hold window must sit strictly inside the run interval"
            )
    return problems


def load_scenario(source) -> Scenario:
    """Load a scenario from a TOML file path or from TOML text."""
    text = None
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str):
        if "\n" not in source and Path(source).exists():
            text = Path(source).read_text()
        else:
            text = source
    else:
        raise TypeError("source must be a path or TOML text")
    try:
        tree = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ScenarioValidationError([f"parse error: {exc}"]) from None
    return scenario_from_tree(tree)


# ---------------------------------------------------------------------------
# TOML rendering (used by the bundled presets)


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__} as TOML")


def render_toml(tree: dict) -> str:
    """Render a config tree in the scenario TOML schema."""
    lines: list[str] = []

    def emit_table(path: str, table: dict):
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if scalars or not subtables:
            lines.append(f"[{path}]")
            for k, v in scalars.items():
                lines.append(f"{k} = {_toml_scalar(v)}")
            lines.append("")
        for k, v in subtables.items():
            emit_table(f"{path}.{k}", v)

    for key, value in tree.items():
        if key == "expect":
            continue
        if isinstance(value, dict):
            emit_table(key, value)
        else:
            raise TypeError(f"top-level key {key!r} must be a table")
    for row in tree.get("expect", []):
        lines.append("[[expect]]")
        for k, v in row.items():
            lines.append(f"{k} = {_toml_scalar(v)}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# running


@dataclass
class RunReport:
    """Per-formula phase reports plus audit and expectation results."""

    scenario: str
    grid: dict
    q_over_hbar: float
    formulas: dict
    audits: dict
    expectations: list
    passed: bool

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "grid": dict(self.grid),
            "q_over_hbar": self.q_over_hbar,
            "formulas": self.formulas,
            "audits": self.audits,
            "expectations": self.expectations,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _wanted(scn: Scenario, base: str) -> bool:
    return scn.formulas is None or base in scn.formulas


def run(scn: Scenario) -> RunReport:
    """Execute every applicable formula and audit; never aborts on one failure."""
    config = scn.config
    interf = scn.interferometer
    knot_times = config.knot_times()
    formulas: dict = {}
    audits: dict = {}
    meshes: dict = {}

    pot_report = None
    if _wanted(scn, "potentials"):
        try:
            pot_report = phase_diff_potentials(interf, config, None, scn.q_over_hbar,
                                               scn.panels_per_unit, scn.order)
            formulas["potentials"] = pot_report.to_dict()
        except Exception as exc:  # noqa: BLE001 - collected per formula
            formulas["potentials"] = {"error": f"{type(exc).__name__}: {exc}"}

    surface_reports: dict = {}
    if _wanted(scn, "surface"):
        for label, strategy in scn.strategies.items():
            key = f"surface:{label}"
            try:
                mesh = build_surface(interf, strategy, scn.grid_n, scn.grid_m, knot_times)
                meshes[label] = mesh
                report = phase_surface(mesh, config, scn.q_over_hbar, scn.order)
                surface_reports[label] = report
                formulas[key] = report.to_dict()
            except Exception as exc:  # noqa: BLE001
                formulas[key] = {"error": f"{type(exc).__name__}: {exc}"}

    for base in ("decomposition", "field_line"):
        if not _wanted(scn, base):
            continue
        try:
            if base == "decomposition":
                report = phase_decomposition(interf, config, None, scn.q_over_hbar,
                                             scn.panels_per_unit, scn.order)
            else:
                report = phase_field_line(interf, config, scn.q_over_hbar, order=scn.order)
            formulas[base] = report.to_dict()
        except StructureViolationError as exc:
            formulas[base] = {"skipped": str(exc)}
        except Exception as exc:  # noqa: BLE001
            formulas[base] = {"error": f"{type(exc).__name__}: {exc}"}

    # audits -----------------------------------------------------------------
    knots = interf.path_a.spatial_knots()
    box_lo = knots.min(axis=0) - 1.0
    box_hi = knots.max(axis=0) + 1.0
    rng = np.random.default_rng(scn.audit_seed)
    chis = list(scn.gauge_functions) + random_gauge_functions(
        scn.audit_samples, rng, box_lo, box_hi, interf.t_start, interf.t_end
    )
    try:
        audit = gauge_invariance_audit(interf, config, chis, scn.q_over_hbar,
                                       panels_per_unit=scn.panels_per_unit, order=scn.order)
        audits["gauge_invariance"] = audit.to_dict()
    except Exception as exc:  # noqa: BLE001
        audits["gauge_invariance"] = {"error": f"{type(exc).__name__}: {exc}"}

    direct_labels = [l for l, s in scn.strategies.items() if isinstance(s, Direct)]
    if direct_labels and direct_labels[0] in meshes:
        direct_label = direct_labels[0]
        for label, strategy in scn.strategies.items():
            if isinstance(strategy, ViaWaypoints) and label in meshes:
                key = f"surface_difference:{direct_label}_vs_{label}"
                try:
                    audit = surface_difference_audit(meshes[direct_label], meshes[label],
                                                     config, scn.q_over_hbar, scn.order)
                    audits[key] = audit.to_dict()
                except Exception as exc:  # noqa: BLE001
                    audits[key] = {"error": f"{type(exc).__name__}: {exc}"}
        if pot_report is not None and direct_label in surface_reports:
            surf = surface_reports[direct_label]
            tol = max(1e-6, pot_report.error_estimate + surf.error_estimate)
            spread = abs(pot_report.total - surf.total)
            audits["formula_equivalence"] = {
                "potential_total": pot_report.total,
                "surface_total": surf.total,
                "spread": spread,
                "tolerance": tol,
                "passed": spread <= tol,
            }

    # expectations -----------------------------------------------------------
    expectation_rows = []
    all_ok = True
    for exp in scn.expectations:
        entry = formulas.get(exp.formula)
        if entry is None or "total" not in entry:
            reason = None if entry is None else entry.get("skipped") or entry.get("error")
            expectation_rows.append({
                "formula": exp.formula,
                "expected": exp.total,
                "actual": None,
                "tolerance": exp.tolerance,
                "passed": False,
                "reason": reason or "formula not computed",
            })
            all_ok = False
            continue
        actual = entry["total"]
        ok = abs(actual - exp.total) <= exp.tolerance
        all_ok &= ok
        expectation_rows.append({
            "formula": exp.formula,
            "expected": exp.total,
            "actual": actual,
            "tolerance": exp.tolerance,
            "passed": ok,
        })

    return RunReport(
        scenario=scn.name,
        grid={"n_time": scn.grid_n, "m_nodes": scn.grid_m},
        q_over_hbar=scn.q_over_hbar,
        formulas=formulas,
        audits=audits,
        expectations=expectation_rows,
        passed=all_ok,
    )


# ---------------------------------------------------------------------------
# CSV dumps


def _format_row(values) -> str:
    out = []
    for v in values:
        if isinstance(v, str):
            out.append(v)
        elif isinstance(v, (int, np.integer)):
            out.append(str(int(v)))
        else:
            out.append(repr(float(v)))
    return ",".join(out)


def _parse_sampling(entry: str) -> dict:
    """Parse 'x=-2:2:10;y=0;z=0;t=1.5' into per-axis sample arrays."""
    out = {}
    for chunk in entry.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, _, rhs = chunk.partition("=")
        key = key.strip()
        if key not in ("x", "y", "z", "t"):
            raise ValueError(f"sampling axis must be x, y, z or t, got {key!r}")
        parts = rhs.split(":")
        if len(parts) == 1:
            out[key] = np.array([float(parts[0])])
        elif len(parts) == 3:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError(f"sampling count for {key} must be >= 1")
            out[key] = np.linspace(lo, hi, n)
        else:
            raise ValueError(f"sampling for {key} must be 'value' or 'lo:hi:count'")
    missing = {"x", "y", "z", "t"} - set(out)
    if missing:
        raise ValueError(f"sampling entry is missing axes: {', '.join(sorted(missing))}")
    return out


def dump(scn: Scenario, what: str, sampling: Optional[str] = None,
         strategy: Optional[str] = None) -> str:
    """CSV dump of fields, a surface mesh, or the arm knot lists."""
    if what == "worldlines":
        lines = ["arm,x,y,z,t"]
        for arm_name, wl in (("a", scn.interferometer.path_a), ("b", scn.interferometer.path_b)):
            for row in wl.knots:
                lines.append(_format_row([arm_name, *row]))
        return "\n".join(lines) + "\n"

    if what == "mesh":
        label = strategy or next(iter(scn.strategies))
        if label not in scn.strategies:
            raise ValueError(f"unknown strategy {label!r}")
        mesh = build_surface(scn.interferometer, scn.strategies[label],
                             scn.grid_n, scn.grid_m, scn.config.knot_times())
        lines = ["t,s,x,y,z"]
        for row in mesh.to_rows():
            lines.append(_format_row(row))
        return "\n".join(lines) + "\n"

    if what == "fields":
        if sampling is None:
            knots = scn.interferometer.path_a.spatial_knots()
            lo = knots.min(axis=0) - 1.0
            hi = knots.max(axis=0) + 1.0
            t_mid = 0.5 * (scn.interferometer.t_start + scn.interferometer.t_end)
            sampling = (f"x={lo[0]}:{hi[0]}:20;y={lo[1]}:{hi[1]}:20;"
                        f"z=0;t={t_mid}")
        axes = _parse_sampling(sampling)
        grids = np.meshgrid(axes["x"], axes["y"], axes["z"], axes["t"], indexing="ij")
        xyz = np.column_stack([g.ravel() for g in grids[:3]])
        t = grids[3].ravel()
        safe = np.ones(len(t), dtype=bool)
        for sol in scn.config.solenoids:
            rho = np.hypot(xyz[:, 0] - sol.axis_point[0], xyz[:, 1] - sol.axis_point[1])
            safe &= rho >= 1e-9
        E = np.full((len(t), 3), np.nan)
        B = np.full((len(t), 3), np.nan)
        A_mag = np.full(len(t), np.nan)
        V = np.full(len(t), np.nan)
        if np.any(safe):
            A = eval_A_batch(scn.config, None, xyz[safe], t[safe])
            A_mag[safe] = np.sqrt(np.sum(A * A, axis=1))
            V[safe] = eval_V_batch(scn.config, None, xyz[safe], t[safe])
            E[safe] = eval_E_batch(scn.config, xyz[safe], t[safe])
            B[safe] = eval_B_batch(scn.config, xyz[safe], t[safe])
        lines = ["x,y,z,t,Ex,Ey,Ez,Bx,By,Bz,A_mag,V"]
        for i in range(len(t)):
            lines.append(_format_row([
                xyz[i, 0], xyz[i, 1], xyz[i, 2], t[i],
                E[i, 0], E[i, 1], E[i, 2], B[i, 0], B[i, 1], B[i, 2],
                A_mag[i], V[i],
            ]))
        return "\n".join(lines) + "\n"

    raise ValueError(f"unknown dump target {what!r}; use fields, mesh or worldlines")
