"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class MixedCascadeOrderError(DomainError):
    """A closed form that needs one common cascade order got mixed orders."""


class NonConvergenceError(ArithmeticError):
    """An iterative numerical routine failed to meet its tolerance."""


class ConfigError(ValueError):
    """Experiment configuration could not be parsed or validated.

    ``kind`` is ``"PARSE_ERROR"`` or ``"VALIDATION_ERROR"``; ``issues`` holds one
    human-readable message per offending field.
    """

    def __init__(self, kind, issues):
        self.kind = kind
        self.issues = list(issues)
        super().__init__(f"{kind}: " + "; ".join(self.issues))
