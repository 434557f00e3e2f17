"""Exception types shared across the package."""


class AxisProximityError(ValueError):
    """Field evaluation requested within the singular core of a solenoid axis."""


class BoundaryProximityError(ValueError):
    """Finite-difference stencil would straddle a material or temporal boundary."""


class OutOfRangeTimeError(ValueError):
    """Worldline queried outside its parameterized time interval."""


class GaugeConsistencyError(ValueError):
    """Supplied gauge-function derivatives disagree with finite differences."""


class StructureViolationError(ValueError):
    """Scenario lacks the dwell/ramp structure a decomposition formula requires."""


class MeshBoundaryMismatchError(ValueError):
    """Two surface meshes do not bound the same interferometer."""


class ScenarioValidationError(ValueError):
    """A scenario config failed schema or geometric validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
