"""Exception hierarchy shared by all modules."""


class EmergentError(Exception):
    """Base class for every error raised by this package."""


# detector core
class LevelViolation(EmergentError):
    pass


class UnknownInput(EmergentError):
    pass


class DuplicateId(EmergentError):
    pass


class DegenerateRule(EmergentError):
    pass


class MissingReading(EmergentError):
    pass


class AlphabetViolation(EmergentError):
    pass


# codec / complexity
class NonPositive(EmergentError):
    pass


class UnknownId(EmergentError):
    pass


class LossySelection(EmergentError):
    pass


class EmptyLattice(EmergentError):
    pass


class TooLarge(EmergentError):
    pass


class DiameterTooLarge(EmergentError):
    pass


class TooShort(EmergentError):
    pass


# emergence monitor
class BaselineViolation(EmergentError):
    pass


class WindowTooLong(EmergentError):
    pass


# recognizers
class Degenerate(EmergentError):
    pass


class TooFew(EmergentError):
    pass


class NoSpan(EmergentError):
    pass


# scenarios
class BadAlphabet(EmergentError):
    pass


class BadConic(EmergentError):
    pass


class ConfigError(EmergentError):
    """Scenario configuration failed validation."""


class ScenarioFailed(EmergentError):
    """A module error raised while running a scenario, tagged with its name."""
