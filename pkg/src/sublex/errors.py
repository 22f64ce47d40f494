"""Exception taxonomy shared by all sublex modules.

The split matters for the command line front end: configuration-shaped
problems (bad inputs, unmet preconditions, oversized instances) map to
exit code 2, while a failed mathematical guarantee maps to exit code 1.
"""


class Error(Exception):
    """Base class for all sublex errors."""


class DimensionError(Error):
    """Payoff and grid (or two payoffs) are not aligned."""


class DomainError(Error):
    """A state, atom or policy node is outside the domain it must cover."""


class ParameterError(Error, ValueError):
    """A numeric parameter is outside its admissible range."""


class PreconditionError(Error):
    """An operation precondition (e.g. mean certainty) does not hold."""


class CapacityError(Error):
    """The instance exceeds the operation's size budget."""


class ConfigurationError(Error):
    """Solver grid settings are inconsistent (e.g. unstable time step)."""


class ValidationError(Error):
    """A type invariant was violated at construction or load time."""


class ConfigError(Error):
    """The configuration document could not be parsed."""


class CheckError(Error):
    """A computed mathematical guarantee failed to hold."""
