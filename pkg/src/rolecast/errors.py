"""Exception hierarchy shared across the package."""


class RolecastError(Exception):
    """Base class for all rolecast errors."""


class DataFormatError(RolecastError):
    """Malformed or invalid input data (datasets, dictionaries, word lists, images)."""


class ResourceError(RolecastError):
    """Missing or inconsistent resources, including model/resource fingerprint mismatches."""


class ConfigError(RolecastError):
    """Invalid configuration or flag combination."""
