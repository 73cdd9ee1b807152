"""Exception types shared across the package."""


class IsorayError(Exception):
    """Base class for all package-specific errors."""


class FormatError(IsorayError):
    """Raw file contents do not match the declared metadata."""


class ConfigError(IsorayError):
    """Invalid parameter or configuration value."""


class SeedError(ConfigError):
    """A seed cell is unusable for segmentation (names the offending cell id)."""
