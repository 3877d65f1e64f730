"""Exact stand-in for logarithms of positive rationals.

Several steps of the algorithm compare sums of ``log q'`` values. A
``LogWeight`` stores the positive rational ``r`` and behaves like ``log r``:
addition multiplies, negation inverts, and the ordering is the ordering of
``r``. Because ``log`` is strictly increasing every comparison is exact and no
logarithm is ever evaluated.
"""
from __future__ import annotations

from fractions import Fraction


class LogWeight:
    __slots__ = ("r",)

    def __init__(self, r=1):
        r = Fraction(r)
        if r <= 0:
            raise ValueError(f"LogWeight needs a positive rational, got {r}")
        self.r = r

    @classmethod
    def zero(cls) -> "LogWeight":
        return cls(1)

    def __add__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(self.r * other.r)

    def __sub__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(self.r / other.r)

    def __neg__(self) -> "LogWeight":
        return LogWeight(1 / self.r)

    def __mul__(self, k: int) -> "LogWeight":
        # k * log r == log r**k
        return LogWeight(self.r ** int(k))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, LogWeight) and self.r == other.r

    def __hash__(self) -> int:
        return hash(("LogWeight", self.r))

    def __lt__(self, other: "LogWeight") -> bool:
        return self.r < other.r

    def __le__(self, other: "LogWeight") -> bool:
        return self.r <= other.r

    def __gt__(self, other: "LogWeight") -> bool:
        return self.r > other.r

    def __ge__(self, other: "LogWeight") -> bool:
        return self.r >= other.r

    def __repr__(self) -> str:
        return f"log({self.r})"
