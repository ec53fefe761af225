"""Exception types shared across the package."""


class QsdError(Exception):
    """Base class for all package errors."""


class InvalidParams(QsdError):
    """A market-parameter constraint is violated; the message names it."""


class DomainError(QsdError):
    """An operation was called outside its mathematical domain."""


class ConfigError(QsdError):
    """A sweep configuration file is malformed; the message names the key/line."""


class ClassificationAmbiguous(QsdError):
    """A converged trajectory matches no known stable-outcome tuple.

    This should be impossible for parameters the model admits; raising it
    signals a model violation rather than a user error.
    """
