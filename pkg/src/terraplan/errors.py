"""Exception types shared across the package."""


class TerraplanError(Exception):
    """Base class for all terraplan errors."""


class OutOfBoundsError(TerraplanError):
    """A world-coordinate query fell outside the raster extent."""


class SoilLookupError(TerraplanError, KeyError):
    """A soil label has no entry in the lookup table."""


class EdgeEvaluationError(TerraplanError):
    """An edge could not be evaluated against the terrain stack.

    Callers treat this as "inadmissible", never as a crash.
    """


class GenerationError(TerraplanError):
    """Procedural world generation exhausted its attempt budget."""


class ConfigError(TerraplanError):
    """Invalid configuration, manifest, or CLI arguments."""


class UnreachableGoalError(TerraplanError):
    """The goal is provably unreachable on the current lattice."""


class SearchError(TerraplanError):
    """Internal inconsistency detected in a search structure."""
