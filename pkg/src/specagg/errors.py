"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter or run configuration is outside its allowed range."""


class DataError(ValueError):
    """An input file is missing, malformed, or inconsistent."""
