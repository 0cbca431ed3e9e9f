"""Exception hierarchy shared across the package."""


class GlidsError(Exception):
    """Base class for all package errors."""


class ConfigError(GlidsError):
    """Bad user input: malformed files, infeasible parameters, unknown names."""


class TopologyParseError(ConfigError):
    """A topology or data file record could not be parsed."""


class TopologyValidationError(GlidsError):
    """A structurally parsed topology violates an invariant."""

    def __init__(self, message, component=None):
        super().__init__(message)
        # Offending AS group, when the failure is a connectivity split.
        self.component = component


class BeaconingError(GlidsError):
    """Illegal beaconing operation (non-core origination, missing link...)."""


class CombineError(GlidsError):
    """Segments cannot be combined into an end-to-end path."""


class JunctionResolutionError(GlidsError):
    """A junction latency is carried by no segment (dissemination rule broken)."""


class EstimateRejected(GlidsError):
    """Discard-mode estimation hit undisclosed latency contributions."""

    def __init__(self, message, missing_hops):
        super().__init__(message)
        self.missing_hops = list(missing_hops)


class MeasurementError(GlidsError):
    """A simulated measurement could not produce a value (all probes lost...)."""


class ProbeLost(GlidsError):
    """A single probe packet was dropped by a full queue."""
