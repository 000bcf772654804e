"""Exception hierarchy.

Every error raised by the engine derives from :class:`SimError`. Estimation
failures inside a Monte Carlo iteration derive from :class:`EstimationError`
so the harness can count them instead of aborting the run.
"""

from __future__ import annotations


class SimError(Exception):
    pass


# -- panel / data -----------------------------------------------------------

class PanelError(SimError, ValueError):
    def __init__(self, message: str, unit=None, year=None):
        if unit is not None or year is not None:
            message = f"{message} (unit={unit!r}, year={year!r})"
        super().__init__(message)
        self.unit = unit
        self.year = year


class MissingCell(PanelError):
    pass


class NonContiguousYears(PanelError):
    pass


class NegativeRate(PanelError):
    pass


class DuplicateCell(PanelError):
    pass


class EnactmentOutOfRange(PanelError):
    pass


class FileUnreadable(SimError, OSError):
    pass


class InvalidParams(SimError, ValueError):
    pass


class InsufficientLags(SimError, ValueError):
    pass


class DegenerateGroups(SimError, ValueError):
    pass


# -- estimation ---------------------------------------------------------------

class EstimationError(SimError):
    pass


class RankDeficient(EstimationError):
    pass


class DimensionMismatch(EstimationError, ValueError):
    pass


class SingleCluster(EstimationError):
    pass


class Separation(EstimationError):
    pass


class NonConvergence(EstimationError):
    pass


class EmptyDonorPool(EstimationError):
    pass


class InsufficientPrePeriods(EstimationError):
    pass


class NoDonors(EstimationError):
    pass


class EmptyCohort(EstimationError):
    pass


class NoNeverTreated(EstimationError):
    pass


class NoTreatedUnits(EstimationError):
    pass


# -- aggregation / orchestration ----------------------------------------------

class TooFewIterations(SimError, ValueError):
    pass


class EmptyResults(SimError, ValueError):
    pass


class ConfigError(SimError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.key = key


class UnknownKey(ParseError):
    pass


class InconsistentScenario(ConfigError):
    pass


class ResumeMismatch(ConfigError):
    pass
