"""Exception types shared across the simulator."""


class GiantAtomError(Exception):
    """Base class for all simulator errors."""


class InvalidConfigurationError(GiantAtomError, ValueError):
    """Physical or numerical configuration violates a precondition."""


class SingularPhaseError(InvalidConfigurationError):
    """A closed-form reduction is evaluated at a phase where it diverges."""


class InvalidModeError(InvalidConfigurationError):
    """Dark-mode index hits a trigonometric singularity."""


class InfeasiblePairError(InvalidConfigurationError):
    """Two dark modes cannot coexist with positive frequency and decay."""


class NumericalFailure(GiantAtomError, RuntimeError):
    """A numerical procedure failed (non-convergence, degenerate pole)."""


class DegeneratePoleError(NumericalFailure):
    """A root of the pole equation is not simple; residues are undefined."""


class StepSizeError(InvalidConfigurationError):
    """Requested time step is too coarse for the configured dynamics."""


class HistoryRangeError(GiantAtomError, ValueError):
    """A retarded time falls outside the integrated trajectory."""
