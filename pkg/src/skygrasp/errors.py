"""Exception types shared across the package."""


class SkygraspError(Exception):
    """Base class for all package errors."""


class DegenerateGeometryError(SkygraspError, ValueError):
    """Geometric input too degenerate to operate on (coplanar hull input, zero radial direction, ...)."""


class InstructionParseError(SkygraspError, ValueError):
    """Instruction does not match the supported command grammar."""


class SceneError(SkygraspError, ValueError):
    """Scene description is invalid or violates the scene schema."""


class ConfigError(SkygraspError, ValueError):
    """Configuration file is invalid or violates the config schema."""


class GenerationError(SkygraspError, RuntimeError):
    """Scenario generation could not satisfy placement constraints within the retry budget."""
