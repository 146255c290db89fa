"""Exception hierarchy shared by every rangelab module."""


class RangelabError(Exception):
    """Base class; ``category`` is the machine-readable tag used by the CLI."""

    category = "error"
    exit_code = 1


class ConfigError(RangelabError):
    category = "parse-error"
    exit_code = 2


class ResourceLimitError(RangelabError):
    category = "resource-limit"
    exit_code = 3


class InvalidVertexError(RangelabError):
    category = "invalid-vertex"
    exit_code = 4


class InvalidGraphError(RangelabError):
    category = "invalid-graph"
    exit_code = 4


class DomainError(RangelabError):
    category = "domain-error"
    exit_code = 4


class MalformedInputError(RangelabError):
    category = "malformed-input"
    exit_code = 2
