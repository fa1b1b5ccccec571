"""
Exception hierarchy shared by every module.

Each class carries the exit status the command-line runner reports for it:
2 for bad input, 3 for an infeasible configuration, 4 for an exceeded budget.
"""

import os

DEFAULT_BUDGET = 2 ** 24
BUDGET_ENV_VAR = "MACWT_BUDGET"


def default_budget() -> int:
    """
    Enumeration budget in joint states, overridable through MACWT_BUDGET.
    """
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise InvalidConfig(f"{BUDGET_ENV_VAR} must be an integer, got {raw!r}")
    if value < 1:
        raise InvalidConfig(f"{BUDGET_ENV_VAR} must be positive, got {value}")
    return value


class MacWtError(Exception):
    exit_status = 1


class InputError(MacWtError, ValueError):
    exit_status = 2


class InfeasibleConfiguration(MacWtError):
    exit_status = 3


class BudgetError(MacWtError):
    exit_status = 4


# channel_model
class ChannelError(InputError):
    pass


class NonStochastic(ChannelError):
    pass


class NegativeProbability(ChannelError):
    pass


class EmptyAlphabet(ChannelError):
    pass


class DimensionMismatch(ChannelError):
    pass


class IndexOutOfRange(ChannelError):
    pass


# info_measures
class UnknownAxis(InputError):
    pass


class OverlappingAxes(InputError):
    pass


# rate_regions
class InvalidSlot(InputError):
    pass


class WeightMismatch(InputError):
    pass


class NoPositiveSecrecyRate(InfeasibleConfiguration):
    pass


# coding
class WidthMismatch(InputError):
    pass


class KeyTooShort(InputError):
    pass


class SizeOverflow(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass


# key_protocol / harness
class InvalidConfig(InputError):
    pass


class KeyDeficit(InfeasibleConfiguration):
    pass


class EmptyInput(InputError):
    pass


class OutputExists(InputError):
    pass
