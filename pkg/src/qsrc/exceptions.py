"""Exception hierarchy shared by all modules."""


class ValidationError(ValueError):
    """Input violates a structural or physical invariant."""


class DimensionError(ValidationError):
    """Shapes or subsystem dimensions are incompatible."""


class NegativityError(ValidationError):
    """A matrix expected to be PSD has an eigenvalue below the clip threshold."""


class ProvenanceError(ValueError):
    """A protocol record is checked against an ensemble it was not produced from."""


class ResourceCapError(RuntimeError):
    """A dense representation would exceed the configured size cap."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class PropertyViolation(AssertionError):
    """A checked inequality failed on some sample."""
