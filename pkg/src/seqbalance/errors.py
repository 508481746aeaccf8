"""Exception hierarchy.

Every error raised by the package derives from :class:`SeqBalanceError`,
which is itself a ``ValueError`` so callers that only care about bad input
can catch that.
"""

from __future__ import annotations


class SeqBalanceError(ValueError):
    """Base class. ``index`` names the offending position when there is one."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


# core
class OddHorizon(SeqBalanceError):
    pass


class OutOfRange(SeqBalanceError):
    pass


class UnknownSupport(SeqBalanceError):
    pass


class SpaceMismatch(SeqBalanceError):
    pass


# matching
class SizeMismatch(SeqBalanceError):
    pass


class EmptyGroup(SeqBalanceError):
    pass


class TooLarge(SeqBalanceError):
    pass


class OddCount(SeqBalanceError):
    pass


# partitions / designs
class BadEta(SeqBalanceError):
    pass


class BadPhi(SeqBalanceError):
    pass


class BadC(SeqBalanceError):
    pass


class BadGamma(SeqBalanceError):
    pass


class HasContinuous(SeqBalanceError):
    pass


# instances
class NotAPower(SeqBalanceError):
    pass


class Indivisible(SeqBalanceError):
    pass


# harness / atesim
class DegenerateInput(SeqBalanceError):
    pass


class BadConfig(SeqBalanceError):
    pass


class LengthMismatch(SeqBalanceError):
    pass
