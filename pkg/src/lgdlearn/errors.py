"""Exception types shared across the package."""


class LGDError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(LGDError, ValueError):
    """A run configuration is structurally invalid (bad beta, bad counts, ...)."""


class InfeasibleConfigError(ConfigurationError):
    """A configuration violates the feasibility bounds for its noise source.

    Carries the names of the violated inequalities so callers can report
    exactly why the run was refused.
    """

    def __init__(self, violated):
        self.violated = tuple(violated)
        super().__init__("infeasible configuration; violated: " + "; ".join(self.violated))


class CensusInvalidError(ConfigurationError):
    """The asymmetric flip map interacts with the shift map, so the pattern
    census cells are no longer exact."""


class IdxFormatError(LGDError):
    """An IDX file does not conform to the format. ``offset`` is the byte
    position at which parsing failed."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class DegenerateRunError(LGDError):
    """Training finished without a single epoch of nonzero leftover accuracy,
    so no checkpoint could be selected."""


class OracleUnavailableError(LGDError):
    """Ground-truth labels were requested from a dataset that does not carry
    them (e.g. after ``without_oracle``)."""
