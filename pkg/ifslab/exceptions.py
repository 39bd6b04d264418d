class DomainError(ValueError):
    """Occurs when an argument lies outside the domain of an operation."""


class InvalidIFSSpec(ValueError):
    """Occurs when a map or an iterated function system is malformed."""


class HypothesisError(Exception):
    """Occurs when a precondition of a theorem or lemma is not satisfied."""


class RangeEscapeError(Exception):
    """Occurs when an orbit leaves the interval [-1, 1)."""


class InvalidConfig(Exception):
    """Occurs when a required config value is missing or has an incorrect value."""


class AcceptanceError(Exception):
    """Occurs when an enabled acceptance assertion fails."""
