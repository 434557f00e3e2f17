"""Numerical laboratory for interferometric phases of charged particles.

Computes the phase difference between the two arms of an interferometer in
configurable electromagnetic setups (static solenoids, pulsed cages,
time-varying solenoid currents) by independent routes, and audits their
mutual consistency, gauge invariance and independence from the choice of
spacetime deformation surface.
"""

from .errors import (
    AxisProximityError,
    BoundaryProximityError,
    GaugeConsistencyError,
    MeshBoundaryMismatchError,
    OutOfRangeTimeError,
    ScenarioValidationError,
    StructureViolationError,
)
from .gauges import (
    BaseGauge,
    GaugeFunction,
    GaugeState,
    gaussian_gauge,
    linear_time_gauge,
    monomial_gauge,
    random_gauge_functions,
)
from .phases import (
    GaugeInvarianceAudit,
    PhaseReport,
    RampStructure,
    SurfaceDifferenceAudit,
    gauge_invariance_audit,
    phase_decomposition,
    phase_diff_potentials,
    phase_field_line,
    phase_potential_path,
    phase_surface,
    ramp_structure,
    surface_difference_audit,
)
from .presets import (
    electric_tree,
    magnetic_tree,
    preset_names,
    preset_tree,
    ramp_tree,
    winding_tree,
)
from .scenario import (
    Expectation,
    RunReport,
    Scenario,
    dump,
    load_scenario,
    render_toml,
    run,
    scenario_from_tree,
)
from .sources import (
    Event,
    FdConsistencyReport,
    FieldConfig,
    FieldSample,
    PiecewiseProfile,
    PotentialCage,
    ShieldedCage,
    SolenoidSource,
    eval_A,
    eval_A_batch,
    eval_B,
    eval_B_batch,
    eval_E,
    eval_E_batch,
    eval_V,
    eval_V_batch,
    fd_consistency,
    field_sample,
    line_integral_A,
)
from .surfaces import (
    Direct,
    SurfaceMesh,
    ViaWaypoints,
    build_surface,
    refine,
    unwrapped_azimuth_delta,
    winding_number,
)
from .worldlines import Interferometer, Worldline

__version__ = "0.1.0"
