import math

import numpy as np
import pytest

import abphase as ab
from abphase.presets import ramp_tree

TWO_PI = 2.0 * math.pi


def scenario(tree) -> ab.Scenario:
    return ab.scenario_from_tree(tree)


def build(scn, label):
    return ab.build_surface(scn.interferometer, scn.strategies[label],
                            scn.grid_n, scn.grid_m, scn.config.knot_times())


class TestPotentialPath:
    def test_static_worldline_zero_potential(self):
        config = ab.FieldConfig(solenoids=(
            ab.SolenoidSource((0.0, 0.0), 0.5, ab.PiecewiseProfile.constant(TWO_PI)),
        ))
        wl = ab.Worldline([[2, 0, 0, 0], [2, 0, 0, 3]])
        report = ab.phase_potential_path(wl, config, None)
        assert report.total == 0.0

    def test_unit_dwell_in_unit_potential(self):
        cage = ab.PotentialCage((0.0, 0.0, 0.0), 0.3, 0.7,
                                ab.PiecewiseProfile([[0.5, 0.0], [0.7, 1.0], [1.5, 1.0], [1.7, 0.0]]))
        config = ab.FieldConfig(potential_cages=(cage,))
        wl = ab.Worldline([[0, 0, 0, 0], [0, 0, 0, 3]])
        report = ab.phase_potential_path(wl, config, None)
        assert math.isclose(report.total, -1.0, rel_tol=0, abs_tol=1e-12)
        assert report.terms["vector_potential"] == 0.0

    def test_uniform_vector_potential_segment(self):
        # chi = a*x makes A uniform; a straight parallel segment picks up a*L
        a, length = 0.37, 2.5
        gauge = ab.GaugeState(chi=ab.monomial_gauge({(1, 0, 0, 0): a}, label="a*x"))
        wl = ab.Worldline([[0, 0, 0, 0], [length, 0, 0, 1]])
        report = ab.phase_potential_path(wl, ab.FieldConfig(), gauge)
        assert math.isclose(report.total, a * length, rel_tol=1e-12)

    def test_terms_sum_to_total(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        report = ab.phase_potential_path(scn.interferometer.path_a, scn.config, None)
        assert report.total == pytest.approx(math.fsum(report.terms.values()), abs=1e-12)


class TestPotentialDifference:
    def test_enclosing_static_loop(self):
        scn = scenario(ab.preset_tree("magnetic_static"))
        report = ab.phase_diff_potentials(scn.interferometer, scn.config)
        assert math.isclose(report.total, TWO_PI, rel_tol=1e-9)

    def test_non_enclosing_loop_is_flat(self):
        scn = scenario(ab.magnetic_tree(enclosing=False))
        report = ab.phase_diff_potentials(scn.interferometer, scn.config)
        assert abs(report.total) <= 1e-8

    def test_pulsed_cages(self):
        scn = scenario(ab.preset_tree("electric_pulsed"))
        report = ab.phase_diff_potentials(scn.interferometer, scn.config)
        assert math.isclose(report.total, -1.0, rel_tol=0, abs_tol=1e-9)


class TestSurfacePhase:
    def test_static_magnetic_mesh(self):
        scn = scenario(ab.preset_tree("magnetic_static"))
        report = ab.phase_surface(build(scn, "direct"), scn.config)
        assert math.isclose(report.terms["magnetic"], TWO_PI, rel_tol=0, abs_tol=1e-9)
        assert report.terms["electric"] == 0.0
        assert math.isclose(report.total, TWO_PI, rel_tol=0, abs_tol=1e-9)

    def test_pulsed_cage_mesh(self):
        scn = scenario(ab.preset_tree("electric_pulsed"))
        report = ab.phase_surface(build(scn, "direct"), scn.config)
        assert report.terms["magnetic"] == 0.0
        assert math.isclose(report.extras["electric_spacetime_integral"], 1.0,
                            rel_tol=0, abs_tol=1e-6)
        assert math.isclose(report.total, -1.0, rel_tol=0, abs_tol=1e-6)

    def test_degenerate_mesh_zero(self):
        knots = [[5, 5, 0, 0], [6, 5, 0, 1], [7, 5, 0, 2]]
        interf = ab.Interferometer(ab.Worldline(knots), ab.Worldline(knots))
        config = ab.FieldConfig(solenoids=(
            ab.SolenoidSource((0.0, 0.0), 0.5,
                              ab.PiecewiseProfile([[0.0, 0.0], [2.0, 3.0]])),
        ))
        report = ab.phase_surface(ab.build_surface(interf, ab.Direct(), 8, 9), config)
        assert report.total == 0.0


class TestDecomposition:
    def test_canonical_ramp(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        report = ab.phase_decomposition(scn.interferometer, scn.config)
        assert report.terms["cage_potentials"] == 0.0
        assert abs(report.terms["initial_circulation"]) <= 1e-10
        assert math.isclose(report.terms["ramp_delta_segment"], math.pi / 2.0,
                            rel_tol=0, abs_tol=1e-9)

    def test_zero_ramp_all_terms_vanish(self):
        scn = scenario(ramp_tree(d_flux=0.0))
        report = ab.phase_decomposition(scn.interferometer, scn.config)
        for value in report.terms.values():
            assert abs(value) <= 1e-12

    def test_static_enclosing_variant_moves_to_circulation_term(self):
        # arms enclose the solenoid, flux static: only the frozen circulation
        # term contributes, and it equals the flux
        flux = TWO_PI
        tree = {
            "run": {"name": "static_enclosing", "grid_n": 32, "grid_m": 65},
            "solenoid": {"main": {"center": [0.0, 0.0], "radius": 0.5,
                                  "flux": [[0.0, flux]]}},
            "cage": {
                "a": {"kind": "shielded", "center": [0.0, -1.5, 0.0], "radius": 0.05},
                "b": {"kind": "shielded", "center": [0.0, 1.5, 0.0], "radius": 0.05},
            },
            "arm": {
                "a": {"knots": [[-2.5, 0, 0, 0], [0, -1.5, 0, 1.2], [0, -1.5, 0, 2.8], [2.5, 0, 0, 4]]},
                "b": {"knots": [[-2.5, 0, 0, 0], [0, 1.5, 0, 1.2], [0, 1.5, 0, 2.8], [2.5, 0, 0, 4]]},
            },
        }
        scn = scenario(tree)
        report = ab.phase_decomposition(scn.interferometer, scn.config)
        assert math.isclose(report.terms["initial_circulation"], flux, rel_tol=0, abs_tol=1e-8)
        assert report.terms["cage_potentials"] == 0.0
        assert abs(report.terms["ramp_delta_segment"]) <= 1e-10

    def test_structure_violation_when_ramp_outside_dwell(self):
        tree = ramp_tree()
        tree["solenoid"]["main"]["flux"] = [[0.0, 0.0], [0.5, 0.0], [1.0, TWO_PI], [4.0, TWO_PI]]
        scn = scenario(tree)
        with pytest.raises(ab.StructureViolationError):
            ab.phase_decomposition(scn.interferometer, scn.config)

    def test_structure_violation_without_cages(self):
        scn = scenario(ab.preset_tree("magnetic_static"))
        with pytest.raises(ab.StructureViolationError):
            ab.ramp_structure(scn.interferometer, scn.config)


class TestFieldLine:
    def test_canonical_ramp(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        report = ab.phase_field_line(scn.interferometer, scn.config)
        assert math.isclose(report.total, math.pi / 2.0, rel_tol=0, abs_tol=1e-6)

    def test_static_flux_gives_zero(self):
        scn = scenario(ramp_tree(d_flux=0.0))
        report = ab.phase_field_line(scn.interferometer, scn.config)
        assert report.total == 0.0

    def test_path_deformation_within_class(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        base = ab.phase_field_line(scn.interferometer, scn.config)
        structure = ab.ramp_structure(scn.interferometer, scn.config)
        r_a, r_b = structure.r_a, structure.r_b
        end = scn.interferometer.end
        # bulge the middle of the path; keep the legs leaving the cages so the
        # crossings through the shield walls stay identical
        u_a = (end - r_a) / np.linalg.norm(end - r_a)
        u_b = (end - r_b) / np.linalg.norm(end - r_b)
        deformed = np.vstack([
            r_a, r_a + 0.4 * u_a, [7.2, -0.8, 0.0], [7.8, 0.9, 0.0], r_b + 0.4 * u_b, r_b,
        ])
        other = ab.phase_field_line(scn.interferometer, scn.config, path=deformed)
        assert math.isclose(other.total, base.total, rel_tol=0, abs_tol=1e-8)


class TestDecompositionAgainstFieldLine:
    def test_random_family_agreement(self):
        rng = np.random.default_rng(99)
        for _ in range(5):
            az_a = rng.uniform(-0.5 * math.pi, 0.0)
            az_b = az_a + rng.uniform(0.3 * math.pi, 0.7 * math.pi)
            tree = ramp_tree(
                d_flux=rng.uniform(-2 * TWO_PI, 2 * TWO_PI),
                azimuth_a=az_a,
                azimuth_b=az_b,
                distance=rng.uniform(3.5, 4.5),
                cage_radius=0.001,
            )
            scn = scenario(tree)
            dec = ab.phase_decomposition(scn.interferometer, scn.config)
            line = ab.phase_field_line(scn.interferometer, scn.config)
            assert abs(dec.total - line.total) <= 1e-6


class TestSurfaceIndependence:
    def test_all_strategies_agree(self):
        tree = ab.preset_tree("electrodynamic_ramp")
        scn = scenario(tree)
        totals = {}
        direct_mesh = build(scn, "direct")
        totals["direct"] = ab.phase_surface(direct_mesh, scn.config, with_estimate=False).total
        totals["direct_refined"] = ab.phase_surface(
            ab.refine(direct_mesh, 2), scn.config, with_estimate=False).total
        totals["around"] = ab.phase_surface(build(scn, "around"), scn.config,
                                            with_estimate=False).total
        # randomized non-enclosing bulges, leaving the cages along the chord
        rng = np.random.default_rng(3)
        ca = np.asarray(scn.config.shielded_cages[0].center)[:2]
        cb = np.asarray(scn.config.shielded_cages[1].center)[:2]
        u = (cb - ca) / np.linalg.norm(cb - ca)
        for k in range(2):
            angles = np.sort(rng.uniform(-0.2 * math.pi, 0.2 * math.pi, 2))
            radii = rng.uniform(3.0, 4.6, 2)
            mids = [[r * math.cos(a), r * math.sin(a)] for a, r in zip(angles, radii)]
            strategy = ab.ViaWaypoints(
                waypoints=tuple([tuple(ca + 0.5 * u)] + [tuple(m) for m in mids] + [tuple(cb - 0.5 * u)]),
                hold=(1.5, 2.5),
            )
            mesh = ab.build_surface(scn.interferometer, strategy, scn.grid_n, scn.grid_m,
                                    scn.config.knot_times())
            totals[f"bulge{k}"] = ab.phase_surface(mesh, scn.config, with_estimate=False).total
        values = list(totals.values())
        assert max(values) - min(values) <= 1e-6, totals


class TestSurfaceDifferenceAudit:
    def test_canonical_cancellation(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        audit = ab.surface_difference_audit(build(scn, "direct"), build(scn, "around"), scn.config)
        assert math.isclose(audit.d_electric, -TWO_PI, rel_tol=0, abs_tol=1e-6)
        assert math.isclose(audit.d_magnetic, TWO_PI, rel_tol=0, abs_tol=1e-6)
        assert abs(audit.d_total) <= 1e-6
        assert audit.windings == (-1,)
        assert audit.passed

    def test_zero_ramp_trivial(self):
        scn = scenario(ramp_tree(d_flux=0.0))
        audit = ab.surface_difference_audit(build(scn, "direct"), build(scn, "around"), scn.config)
        assert abs(audit.d_electric) <= 1e-8
        assert abs(audit.d_magnetic) <= 1e-8
        assert abs(audit.d_total) <= 1e-8

    def test_direct_vs_direct_trivial(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        audit = ab.surface_difference_audit(build(scn, "direct"), build(scn, "direct"), scn.config)
        assert audit.windings == (0,)
        assert abs(audit.d_total) <= 1e-8 and abs(audit.d_electric) <= 1e-8

    def test_mismatched_interferometers_rejected(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        other = scenario(ramp_tree(azimuth_a=-0.2 * math.pi, azimuth_b=0.3 * math.pi))
        with pytest.raises(ab.MeshBoundaryMismatchError):
            ab.surface_difference_audit(build(scn, "direct"), build(other, "around"), scn.config)


class TestGaugeInvariance:
    def test_constant_rate_shift_cancels_exactly(self):
        scn = scenario(ab.preset_tree("electric_pulsed"))
        audit = ab.gauge_invariance_audit(
            scn.interferometer, scn.config, [ab.linear_time_gauge(0.8)])
        assert audit.max_deviation <= 1e-13

    def test_polynomial_and_gaussian_shifts(self):
        scn = scenario(ab.preset_tree("electric_pulsed"))
        chis = [
            ab.monomial_gauge({(1, 1, 0, 1): 0.2}, label="xyt"),
            ab.gaussian_gauge(0.3, (0.0, 0.5, 0.0), 0.9, 2.0, 1.1),
        ]
        audit = ab.gauge_invariance_audit(scn.interferometer, scn.config, chis)
        assert audit.max_deviation <= 1e-8

    def test_single_arm_phase_is_gauge_dependent(self):
        # only the two-arm difference is invariant
        scn = scenario(ab.preset_tree("electric_pulsed"))
        chi = ab.monomial_gauge({(1, 0, 0, 1): 0.5}, label="x*t")
        plain = ab.phase_potential_path(scn.interferometer.path_a, scn.config, None)
        shifted = ab.phase_potential_path(scn.interferometer.path_a, scn.config,
                                          ab.GaugeState(chi=chi))
        assert abs(plain.total - shifted.total) > 1e-3


class TestScalingLaws:
    def test_charge_ratio_linearity(self):
        scn = scenario(ab.preset_tree("electrodynamic_ramp"))
        one = ab.phase_decomposition(scn.interferometer, scn.config, q_over_hbar=1.0)
        three = ab.phase_decomposition(scn.interferometer, scn.config, q_over_hbar=3.0)
        assert math.isclose(three.total, 3.0 * one.total, rel_tol=1e-12)

    def test_flux_step_linearity(self):
        base = scenario(ramp_tree(d_flux=TWO_PI))
        twice = scenario(ramp_tree(d_flux=2 * TWO_PI))
        a = ab.phase_decomposition(base.interferometer, base.config).total
        b = ab.phase_decomposition(twice.interferometer, twice.config).total
        assert math.isclose(b, 2.0 * a, rel_tol=0, abs_tol=1e-8)


class TestTopologicalQuantization:
    @pytest.mark.parametrize("n", [-2, -1, 0, 1, 2])
    def test_winding_sets_the_phase(self, n):
        scn = scenario(ab.winding_tree(n))
        loop = scn.interferometer.closed_spatial_loop()
        axis = scn.config.solenoids[0].axis_point
        assert ab.winding_number(loop, axis) == n
        report = ab.phase_diff_potentials(scn.interferometer, scn.config)
        assert math.isclose(report.total, n * TWO_PI, rel_tol=0, abs_tol=1e-6)


class TestCombinedSources:
    def test_enclosed_flux_plus_cage_pulses(self):
        # static solenoid inside the loop and pulsed cages on the arms: the
        # phase is the enclosed flux minus the potential-difference integral
        flux = TWO_PI
        pulse_a, pulse_b = 0.8, -0.4
        tree = {
            "run": {"name": "combined", "grid_n": 64, "grid_m": 513},
            "solenoid": {"main": {"center": [0.0, 0.0], "radius": 0.5,
                                  "flux": [[0.0, flux]]}},
            "cage": {
                "a": {"kind": "potential", "center": [0.0, -1.5, 0.0],
                      "inner_radius": 0.25, "outer_radius": 0.6,
                      "potential": [[1.4, 0.0], [1.6, pulse_a], [2.4, pulse_a], [2.6, 0.0]]},
                "b": {"kind": "potential", "center": [0.0, 1.5, 0.0],
                      "inner_radius": 0.25, "outer_radius": 0.6,
                      "potential": [[1.4, 0.0], [1.6, pulse_b], [2.4, pulse_b], [2.6, 0.0]]},
            },
            "arm": {
                "a": {"knots": [[-2.5, 0, 0, 0], [0, -1.5, 0, 1.2], [0, -1.5, 0, 2.8], [2.5, 0, 0, 4]]},
                "b": {"knots": [[-2.5, 0, 0, 0], [0, 1.5, 0, 1.2], [0, 1.5, 0, 2.8], [2.5, 0, 0, 4]]},
            },
        }
        scn = scenario(tree)
        expected = flux - (pulse_a - pulse_b)  # unit-time pulse integrals
        pot = ab.phase_diff_potentials(scn.interferometer, scn.config)
        surf = ab.phase_surface(build(scn, "direct"), scn.config)
        dec = ab.phase_decomposition(scn.interferometer, scn.config)
        assert math.isclose(pot.total, expected, rel_tol=0, abs_tol=1e-8)
        assert math.isclose(surf.total, expected, rel_tol=0, abs_tol=1e-6)
        assert math.isclose(dec.total, expected, rel_tol=0, abs_tol=1e-8)
        assert math.isclose(dec.terms["initial_circulation"], flux, rel_tol=0, abs_tol=1e-8)
        assert math.isclose(dec.terms["cage_potentials"], -(pulse_a - pulse_b),
                            rel_tol=0, abs_tol=1e-10)
        assert abs(dec.terms["ramp_delta_segment"]) <= 1e-10


class TestFormulaEquivalence:
    @pytest.mark.parametrize("preset", ["magnetic_static", "electric_pulsed", "electrodynamic_ramp"])
    def test_potential_vs_surface(self, preset):
        scn = scenario(ab.preset_tree(preset))
        pot = ab.phase_diff_potentials(scn.interferometer, scn.config)
        surf = ab.phase_surface(build(scn, "direct"), scn.config)
        tol = max(1e-6, pot.error_estimate + surf.error_estimate)
        assert abs(pot.total - surf.total) <= tol
